"""The two pre-AMP iterative decoders: adaptive successive hard-threshold
decoding and adaptive successive soft decoding with deterministic
combination coefficients."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amp import eta_denoise, harden
from .core import MessageVector, SparcParams
from .design import DesignOperator
from .errors import ConfigError


@dataclass
class FitBasis:
    """Orthonormal vectors ``G_0/|G_0|, ..., G_t/|G_t|`` (``G_0 = y``)."""

    ortho: list = field(default_factory=list)

    def add(self, v: np.ndarray, tol: float = 1e-12) -> np.ndarray | None:
        """Gram-Schmidt ``v`` against the basis (with one re-orthogonalisation
        pass); append and return the unit vector, or ``None`` if degenerate."""
        g = np.array(v, dtype=np.float64)
        scale = np.linalg.norm(g)
        for _ in range(2):
            for q in self.ortho:
                g -= (q @ g) * q
        norm = np.linalg.norm(g)
        if norm < tol or (scale > 0 and norm < tol * scale):
            return None
        q = g / norm
        self.ortho.append(q)
        return q

    def gram(self) -> np.ndarray:
        Q = np.array(self.ortho)
        return Q @ Q.T


@dataclass
class HardDecodeResult:
    message: MessageVector
    undecided: np.ndarray          # sections filled by the final-argmax fallback
    decoded_power: list            # fraction of power in decided sections after each step
    steps: int


def adaptive_hard_decode(op: DesignOperator, y: np.ndarray, alloc, params: SparcParams, a: float = 0.5,
                         max_steps: int | None = None) -> HardDecodeResult:
    """Adaptive successive decoding with threshold ``sqrt(2 ln M) + a``.

    Step 1 thresholds ``<sqrt(n) A_j, y/|y|>``; later steps threshold
    ``<A_j, Res>`` with ``Res = sqrt(n) (y - Fit) / |y - Fit|`` over the still
    undecided sections (one column per section: the largest crossing).
    Decisions are frozen.  Sections never crossing the threshold are filled
    by the per-section argmax of the last statistic and flagged.
    """
    if a < 0:
        raise ConfigError("threshold offset a must be >= 0", "a")
    p = np.asarray(getattr(alloc, "values", alloc), dtype=np.float64)
    n, L, M = op.n, op.L, op.M
    thr = math.sqrt(2 * math.log(M)) + a
    if max_steps is None:
        max_steps = max(1, math.ceil(params.snr * math.log(M)))
    c = np.sqrt(n * p)
    chosen = np.full(L, -1, dtype=np.int64)
    decided = np.zeros(L, dtype=bool)
    y = np.asarray(y, dtype=np.float64)
    resid = y.copy()
    history = []
    steps = 0
    stat = None
    for step in range(max_steps):
        steps = step + 1
        nrm = np.linalg.norm(resid)
        if nrm == 0:
            break
        stat = op.adjoint(math.sqrt(n) * resid / nrm)
        masked = np.where(decided[:, None], -np.inf, stat)
        best = np.argmax(masked, axis=1)
        hit = (~decided) & (masked[np.arange(L), best] > thr)
        if not hit.any():
            history.append(float(p[decided].sum() / p.sum()))
            break
        chosen[hit] = best[hit]
        decided |= hit
        history.append(float(p[decided].sum() / p.sum()))
        beta = np.zeros((L, M))
        beta[decided, chosen[decided]] = c[decided]
        resid = y - op.apply(beta)
        if decided.all():
            break
    undecided = ~decided
    if undecided.any():
        fallback = harden(stat) if stat is not None else np.zeros(L, dtype=np.int64)
        chosen[undecided] = fallback[undecided]
    return HardDecodeResult(MessageVector(chosen, M), undecided, history, steps)


def soft_lambdas(tau_sq: np.ndarray, t: int) -> np.ndarray:
    """Deterministic combination weights ``(tau_t sqrt(w_0), -tau_t sqrt(w_1), ...)``."""
    tau_sq = np.asarray(tau_sq, dtype=np.float64)
    omega = np.empty(t + 1)
    omega[0] = 1.0 / tau_sq[0]
    omega[1:] = 1.0 / tau_sq[1:t + 1] - 1.0 / tau_sq[:t]
    lam = math.sqrt(tau_sq[t]) * np.sqrt(np.maximum(omega, 0.0))
    lam[1:] *= -1
    return lam


@dataclass
class SoftDecodeResult:
    message: MessageVector
    beta: np.ndarray
    basis: FitBasis
    steps: int


def adaptive_soft_decode(op: DesignOperator, y: np.ndarray, alloc, params: SparcParams, T: int,
                         tau_sq: np.ndarray) -> SoftDecodeResult:
    """Adaptive successive soft-decision decoding for ``T`` steps.

    ``tau_sq`` is the SE sequence ``tau_0^2, tau_1^2, ...`` (last value reused
    if shorter than ``T``).
    """
    if T < 1:
        raise ConfigError("T must be >= 1", "T")
    p = np.asarray(getattr(alloc, "values", alloc), dtype=np.float64)
    n, L, M = op.n, op.L, op.M
    ts = np.asarray(tau_sq, dtype=np.float64)
    if ts.size < T:
        ts = np.concatenate([ts, np.full(T - ts.size, ts[-1])])
    basis = FitBasis()
    q0 = basis.add(np.asarray(y, dtype=np.float64))
    Z = [math.sqrt(n) * op.adjoint(q0)]
    beta = np.zeros((L, M))
    steps = 0
    for t in range(T):
        if t >= 1:
            q = basis.add(op.apply(beta))
            if q is None:
                break
            Z.append(math.sqrt(n) * op.adjoint(q))
        steps = t + 1
        lam = soft_lambdas(ts, t)
        zcomb = sum(l * z for l, z in zip(lam, Z))
        stat = math.sqrt(ts[t]) * zcomb + beta
        beta = eta_denoise(stat, ts[t], p, n=n)
    return SoftDecodeResult(MessageVector(harden(beta), M), beta, basis, steps)
