"""Spatially coupled SPARCs: (omega, Lambda) base matrices, the block-scaled
design, SC-AMP, SC state evolution and the large-system decoding-progression
predictor.

Conventions: the non-zero entries of the message vector are all 1 and the
power lives in the design, whose block ``(r, c)`` has i.i.d. entries of
variance ``W_rc / L``.  Rates are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import DecodeMetrics, MessageVector, SparcParams, compute_metrics
from .design import DenseDesign, DesignOperator, HadamardDesign, hadamard_rows
from .errors import ConfigError, DivergenceError, InputSizeError
from .rng import stream
from .se import SuccessCurve


@dataclass(frozen=True)
class BaseMatrix:
    """Non-negative ``L_R x L_C`` block powers averaging to ``P``."""

    W: np.ndarray
    omega: int | None = None
    Lambda: int | None = None

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        if W.ndim != 2 or W.size == 0:
            raise ConfigError("base matrix must be a non-empty 2-D array", "W")
        if W.min() < 0:
            raise ConfigError("base matrix entries must be non-negative", "W")
        if np.any(W.sum(axis=0) <= 0):
            raise ConfigError("every column of the base matrix needs a non-zero entry", "W")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def L_R(self) -> int:
        return self.W.shape[0]

    @property
    def L_C(self) -> int:
        return self.W.shape[1]

    @property
    def power(self) -> float:
        return float(self.W.mean())

    @property
    def rate_loss(self) -> float:
        """Factor ``L_C / L_R`` between the overall rate and the rate of the
        equivalent uncoupled code with ``L_C`` row blocks."""
        return self.L_C / self.L_R

    def column_range(self, r: int) -> tuple[int, int]:
        """Zero-based ``(first, last)`` non-zero columns of row ``r``."""
        idx = np.flatnonzero(self.W[r] > 0)
        return (int(idx[0]), int(idx[-1])) if idx.size else (0, -1)


def build_base(omega: int, Lambda: int, P: float) -> BaseMatrix:
    """Band matrix with ``W_rc = P (Lambda + omega - 1) / omega`` for ``c <= r <= c + omega - 1``."""
    if omega < 1:
        raise ConfigError("omega must be >= 1", "omega")
    if Lambda < 2 * omega - 1:
        raise ConfigError(f"Lambda={Lambda} must be >= 2*omega-1={2 * omega - 1}", "Lambda")
    if not P > 0:
        raise ConfigError("P must be > 0", "P")
    L_R = Lambda + omega - 1
    W = np.zeros((L_R, Lambda))
    val = P * L_R / omega
    for c in range(Lambda):
        W[c:c + omega, c] = val
    return BaseMatrix(W, omega, Lambda)


def uncoupled_base(P: float) -> BaseMatrix:
    """The trivial ``1 x 1`` base matrix (a standard SPARC with flat allocation)."""
    return BaseMatrix(np.array([[float(P)]]), 1, 1)


@dataclass
class ScDesign:
    """Block-partitioned design: ``L_R`` row blocks of ``M_R`` rows and ``L_C``
    column blocks of ``L / L_C`` sections each."""

    base: BaseMatrix
    op: DesignOperator
    M_R: int
    L: int
    M: int
    seed: int

    @property
    def n(self) -> int:
        return self.base.L_R * self.M_R

    @property
    def M_C(self) -> int:
        return self.L * self.M // self.base.L_C

    @property
    def sections_per_block(self) -> int:
        return self.L // self.base.L_C

    @property
    def sec_block(self) -> np.ndarray:
        return np.arange(self.L) // self.sections_per_block

    def params(self, noise_var: float) -> SparcParams:
        return SparcParams.from_length(self.n, self.L, self.M, self.base.power, noise_var)

    def apply(self, beta): return self.op.apply(beta)

    def adjoint(self, z): return self.op.adjoint(z)

    def encode(self, msg: MessageVector) -> np.ndarray:
        return self.op.apply(msg.to_beta(np.ones(self.L)))


def sc_rows_per_block(base: BaseMatrix, L: int, M: int, rate_nats: float) -> int:
    """``M_R = floor(L ln M / (R L_R))`` so that ``n = L_R M_R`` does not exceed ``L ln M / R``."""
    M_R = math.floor(L * math.log(M) / (rate_nats * base.L_R) + 1e-9)
    if M_R < 1:
        raise ConfigError("rate too high for this base matrix: fewer than one row per block", "rate")
    return M_R


def build_sc_design(base: BaseMatrix, L: int, M: int, seed: int, *, rate_nats: float | None = None,
                    M_R: int | None = None, kind: str = "hadamard") -> ScDesign:
    """Build the SC design from either ``rate_nats`` or an explicit ``M_R``.

    ``kind="hadamard"``: each section draws its own ``n`` distinct Hadamard
    rows, which are dealt out to the row blocks, and block ``(r, c)`` is scaled
    by ``sqrt(W_rc / L)``.  ``kind="gaussian"``: dense ``N(0, W_rc / L)`` blocks.
    """
    if L % base.L_C:
        raise ConfigError(f"L_C={base.L_C} must divide L={L}", "L")
    if M_R is None:
        if rate_nats is None:
            raise ConfigError("give rate_nats or M_R", "rate")
        M_R = sc_rows_per_block(base, L, M, rate_nats)
    n = base.L_R * M_R
    rng = stream(seed)
    gains = np.sqrt(base.W / L)
    sec_block = np.arange(L) // (L // base.L_C)
    if kind == "hadamard":
        if M & (M - 1) or M < 2:
            raise ConfigError("hadamard design needs M to be a power of two", "M")
        rows, k = hadamard_rows(n, L, M, rng)
        op = HadamardDesign(rows, M, k, seed, gains=gains, rb_size=M_R, sec_block=sec_block)
    elif kind == "gaussian":
        A = rng.standard_normal((n, L * M))
        scale = gains[np.arange(n) // M_R][:, np.repeat(sec_block, M)]
        op = DenseDesign(A * scale, L, M, kind, seed)
    else:
        raise ConfigError(f"unknown SC design kind {kind!r}", "design")
    return ScDesign(base, op, M_R, L, M, seed)


@dataclass(frozen=True)
class ScSeState:
    """SC-SE quantities at one iteration: ``phi`` (per row block), ``psi`` and
    ``tau_c`` (per column block)."""

    phi: np.ndarray
    psi: np.ndarray
    tau_c: np.ndarray


def _phi(W: np.ndarray, psi: np.ndarray, sigma_sq: float) -> np.ndarray:
    return sigma_sq + W @ psi / W.shape[1]


def _tau_c(W: np.ndarray, phi: np.ndarray, R: float, M: int) -> np.ndarray:
    return (R / math.log(M)) * W.shape[0] / (W.T @ (1.0 / phi))


def sc_se_trajectory(base: BaseMatrix, R: float, M: int, sigma_sq: float, mc_samples: int = 1000,
                     max_iters: int = 100, seed: int = 0, tol: float = 1e-7,
                     curve: SuccessCurve | None = None) -> list[ScSeState]:
    """SC state evolution from ``psi^0 = 1``; ``psi^{t+1} = 1 - E(tau_c^t)``.

    Returns the states ``t = 0..T``; stops after ``max_iters`` updates or once
    no ``psi_c`` moves by more than ``tol`` (``tol=0`` always runs
    ``max_iters``).
    """
    if not sigma_sq > 0:
        raise ConfigError("sigma_sq must be > 0", "sigma_sq")
    if not R > 0:
        raise ConfigError("R must be > 0", "R")
    W = base.W
    curve = curve or SuccessCurve(M, mc_samples, seed)
    psi = np.ones(base.L_C)
    states = []
    for t in range(max_iters + 1):
        phi = _phi(W, psi, sigma_sq)
        tau = _tau_c(W, phi, R, M)
        states.append(ScSeState(phi, psi, tau))
        if t == max_iters:
            break
        psi_new = np.clip(1.0 - curve(1.0 / np.sqrt(tau)), 0.0, 1.0)
        done = tol > 0 and np.max(np.abs(psi_new - psi)) < tol
        psi = psi_new
        if done:
            phi = _phi(W, psi, sigma_sq)
            states.append(ScSeState(phi, psi, _tau_c(W, phi, R, M)))
            break
    return states


@dataclass
class ScAmpResult:
    message: MessageVector
    metrics: DecodeMetrics | None
    beta: np.ndarray
    block_nmse: list = field(default_factory=list)   # per iteration t = 0.. : length-L_C arrays
    se_states: list = field(default_factory=list)
    iterations: int = 0

    def __iter__(self):
        return iter((self.message, self.metrics, self.block_nmse))


def _block_means(v: np.ndarray, sec_block: np.ndarray, L_C: int) -> np.ndarray:
    return np.bincount(sec_block, weights=v, minlength=L_C) / np.bincount(sec_block, minlength=L_C)


def sc_amp_decode(scd: ScDesign, y: np.ndarray, params: SparcParams, max_iters: int = 100,
                  truth: MessageVector | None = None, tau_mode: str = "se", mc_samples: int = 1000,
                  se_seed: int = 0, tol: float = 1e-7, se_states: list | None = None) -> ScAmpResult:
    """SC-AMP decoder.

    ``tau_mode="se"``: ``phi``, ``psi`` and ``tau_c`` follow SC-SE (computed once
    per call, or passed as ``se_states`` to share across trials) and the
    decoder stops when SE has converged.  ``tau_mode="online"``: ``phi_r`` is
    the empirical residual variance of row block ``r`` and ``psi_c`` is
    estimated from ``beta``; iterations run to ``max_iters``.
    """
    if tau_mode not in ("se", "online"):
        raise ConfigError("tau_mode must be 'se' or 'online'", "tau_mode")
    base, W = scd.base, scd.base.W
    n, L, M, M_R = scd.n, scd.L, scd.M, scd.M_R
    L_R, L_C = base.L_R, base.L_C
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != n:
        raise InputSizeError(f"y must have length {n}")
    if params.n != n or params.L != L or params.M != M:
        raise InputSizeError("params do not match the SC design")
    sigma_sq = params.noise_var
    R = params.realized_rate
    sec_block = scd.sec_block
    spb = scd.sections_per_block
    if tau_mode == "se" and se_states is None:
        se_states = sc_se_trajectory(base, R, M, sigma_sq, mc_samples, max_iters, se_seed, tol)
    beta_true = truth.to_beta(np.ones(L)) if truth is not None else None
    row_block = np.arange(n) // M_R

    beta = np.zeros((L, M))
    z_prev = np.zeros(n)
    phi_prev = np.ones(L_R)
    nmse = []
    if beta_true is not None:
        nmse.append(np.ones(L_C))
    T = max_iters if tau_mode == "online" else min(max_iters, len(se_states) - 1)
    it = 0
    for t in range(T):
        it = t + 1
        if tau_mode == "se":
            st = se_states[t]
            phi_now, tau = st.phi, st.tau_c
            if t == 0:
                z = y.copy()
            else:
                b = (phi_now - sigma_sq) / phi_prev
                z = y - scd.apply(beta) + b[row_block] * z_prev
        else:
            if t == 0:
                z = y.copy()
            else:
                psi_hat = 1.0 - _block_means(np.sum(beta * beta, axis=1), sec_block, L_C)
                b = (W @ psi_hat / L_C) / phi_prev
                z = y - scd.apply(beta) + b[row_block] * z_prev
            phi_now = np.bincount(row_block, weights=z * z, minlength=L_R) / M_R
            tau = _tau_c(W, phi_now, R, M)
        if not (np.all(np.isfinite(z)) and np.all(phi_now > 0) and np.all(np.isfinite(tau))):
            raise DivergenceError("non-finite SC-AMP state", t)
        stat = scd.adjoint(z / phi_now[row_block])
        stat *= tau[sec_block][:, None]
        stat += beta
        out = np.empty_like(stat)
        _kernels.section_softmax(stat, 1.0 / tau[sec_block], out)
        beta = out
        if not np.all(np.isfinite(beta)):
            raise DivergenceError("non-finite estimate", t)
        if beta_true is not None:
            err = np.sum((beta - beta_true) ** 2, axis=1)
            nmse.append(_block_means(err, sec_block, L_C))
        z_prev, phi_prev = z, phi_now
    msg = MessageVector(np.argmax(beta, axis=1), M)
    metrics = compute_metrics(truth, msg, iterations_used=it) if truth is not None else None
    return ScAmpResult(msg, metrics, beta, nmse, list(se_states or []), it)


# ----------------------------------------------------------------------------
# Large-system analysis


def asymptotic_recursion(base: BaseMatrix, R: float, sigma_sq: float, max_iters: int = 1000) -> list[np.ndarray]:
    """Indicator recursion ``psi_c^{t+1} = 1 - 1{(1/L_R) sum_r W_rc / phi_r^t > 2R}``.

    Returns ``psi^0, psi^1, ...`` up to the all-zero vector or a fixed point.
    """
    W = base.W
    psi = np.ones(base.L_C)
    out = [psi]
    for _ in range(max_iters):
        phi = _phi(W, psi, sigma_sq)
        snr_eff = (W.T @ (1.0 / phi)) / base.L_R
        new = np.where(snr_eff > 2 * R, 0.0, 1.0)
        if np.array_equal(new, psi):
            break
        psi = new
        out.append(psi)
        if not psi.any():
            break
    return out


@dataclass(frozen=True)
class ScProgression:
    """Closed-form predictions for an ``(omega, Lambda)`` SC-SPARC.

    ``hypothesis_ok`` is False when ``R >= ln(1 + kappa snr) / (2 kappa)``; the
    remaining fields are then ``None``.  ``c_star_lower_bound`` and
    ``max_iterations`` are ``None`` when decoding cannot start, and
    ``max_iterations`` is also ``None`` if the bound on ``c*`` is 0.
    """

    hypothesis_ok: bool
    can_start: bool | None
    omega_min: float | None
    c_star_lower_bound: int | None
    max_iterations: int | None
    kappa: float


def sc_progression(omega: int, Lambda: int, R: float, snr: float) -> ScProgression:
    if omega < 1 or Lambda < 1:
        raise ConfigError("omega and Lambda must be >= 1", "omega")
    if not (R > 0 and snr > 0):
        raise ConfigError("R and snr must be > 0", "R")
    kappa = (Lambda + omega - 1) / Lambda
    ks = kappa * snr
    if not R < math.log1p(ks) / (2 * kappa):
        return ScProgression(False, None, None, None, None, kappa)
    denom = 1.0 / math.expm1(2 * R * kappa) - 1.0 / ks
    omega_min = 1.0 / denom if denom > 0 else math.inf
    can_start = omega > omega_min
    if not can_start:
        return ScProgression(True, False, omega_min, None, None, kappa)
    c_star = min(omega - 1, math.floor(omega * (1 + ks) / ks ** 2 * (math.log1p(ks) - 2 * R * kappa)))
    max_iter = math.ceil(Lambda / (2 * c_star)) if c_star >= 1 else None
    return ScProgression(True, True, omega_min, c_star, max_iter, kappa)
