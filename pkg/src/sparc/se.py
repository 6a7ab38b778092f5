"""State evolution: Monte-Carlo soft SE, the hard-threshold recursion, the
asymptotic exponential-allocation recursion, and SE-based error predictions.

The soft update only needs the scalar function

    f_M(nu) = E[ e^{nu (U_1 + nu)} / (e^{nu (U_1 + nu)} + sum_{j>=2} e^{nu U_j}) ]

with ``U_1..U_M`` i.i.d. standard normal: a section with power ``P_l`` at
effective noise ``tau`` contributes ``f_M(sqrt(n P_l) / tau)``.  The same
function gives the spatially coupled ``E(tau) = f_M(1/sqrt(tau))``.
:class:`SuccessCurve` estimates it once per (M, sample set) with common
random numbers and reuses it across sections and iterations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from . import _kernels
from .core import SparcParams
from .errors import ConfigError, NotDecodableError
from .rng import STREAM_SE, SHARED, stream

_DIRECT_LIMIT = 32
_GRID_POINTS = 256


class SuccessCurve:
    """Monte-Carlo estimator of ``f_M(nu)`` with a fixed set of ``mc_samples`` draws."""

    def __init__(self, M: int, mc_samples: int = 1000, seed: int = 0):
        if mc_samples < 1:
            raise ConfigError("mc_samples must be >= 1", "mc_samples")
        self.M = int(M)
        self.mc_samples = int(mc_samples)
        self.U = stream(seed, SHARED, STREAM_SE, self.M).standard_normal((self.mc_samples, self.M))
        self._grid = None
        self._grid_vals = None
        self._grid_se = None

    def direct(self, nus) -> tuple[np.ndarray, np.ndarray]:
        """Estimate (mean, standard error) at each requested ``nu``."""
        nus = np.ascontiguousarray(np.asarray(nus, dtype=np.float64).reshape(-1))
        return _kernels.soft_success_mc(nus, self.U)

    @property
    def nu_cut(self) -> float:
        """Beyond this ``nu`` the curve equals 1 to double precision."""
        return 2.0 * math.sqrt(2.0 * math.log(self.M)) + 6.0

    def _ensure_grid(self):
        if self._grid is None:
            self._grid = np.linspace(0.0, self.nu_cut, _GRID_POINTS)
            self._grid_vals, self._grid_se = self.direct(self._grid)

    def __call__(self, nus) -> np.ndarray:
        nus = np.asarray(nus, dtype=np.float64)
        flat = nus.reshape(-1)
        uniq, inv = np.unique(flat, return_inverse=True)
        if uniq.size <= _DIRECT_LIMIT:
            vals = self.direct(uniq)[0][inv]
        else:
            self._ensure_grid()
            # np.interp clamps to the last grid value above nu_cut
            vals = np.interp(flat, self._grid, self._grid_vals)
        return vals.reshape(nus.shape)


@dataclass(frozen=True)
class SeTrajectory:
    """``x_t`` and ``tau_t^2 = sigma^2 + P (1 - x_t)`` for ``t = 0..T``."""

    x: np.ndarray
    tau_sq: np.ndarray
    terminal_iteration: int

    @property
    def nmse(self) -> np.ndarray:
        """Predicted ``||beta - beta^t||^2 / (nP)`` for ``t = 0..T``."""
        return 1.0 - self.x


def _alloc_values(alloc) -> np.ndarray:
    return np.asarray(getattr(alloc, "values", alloc), dtype=np.float64)


def se_trajectory(alloc, params: SparcParams, mode="soft", mc_samples: int = 1000, max_iters: int = 100,
                  seed: int = 0, tol: float = 1e-6, curve: SuccessCurve | None = None) -> SeTrajectory:
    """Iterate ``x_{t+1} = x(tau_t)`` from ``x_0 = 0``.

    mode: ``"soft"`` (Monte-Carlo posterior-mean update) or ``("hard", a)``
    (threshold ``sqrt(2 ln M) + a``).  Stops once ``x_{t+1} - x_t < tol``.
    """
    p = _alloc_values(alloc)
    P, s2, n, M = p.sum(), params.noise_var, params.n, params.M
    w = p / P
    if mode == "soft":
        curve = curve or SuccessCurve(M, mc_samples, seed)

        def update(x):
            tau = math.sqrt(s2 + P * (1 - x))
            return float(w @ curve(np.sqrt(n * p) / tau))
    else:
        kind, a = mode
        if kind != "hard":
            raise ConfigError(f"unknown SE mode {mode!r}", "mode")
        thr = math.sqrt(2 * math.log(M)) + a

        def update(x):
            return float(w @ ndtr(np.sqrt(n * p / (s2 + P * (1 - x))) - thr))

    xs = [0.0]
    for _ in range(max_iters):
        x_new = update(xs[-1])
        done = x_new - xs[-1] < tol
        xs.append(x_new)
        if done:
            break
    x = np.array(xs)
    return SeTrajectory(x, s2 + P * (1 - x), len(xs) - 1)


def se_asymptotic_exponential(R: float, snr: float) -> tuple[np.ndarray, int]:
    """Large-system recursion for the exponential allocation.

    ``xi_t = min(xi_{t-1} + ln(C/R) / (2C), 1)`` from ``xi_{-1} = 0``; returns the
    sequence ``(xi_{-1}, xi_0, ...)`` up to the first 1, and
    ``T* = ceil(2C / ln(C/R))``.
    """
    C = 0.5 * math.log1p(snr)
    if not 0 < R < C:
        raise NotDecodableError(f"need 0 < R < C = {C:.6g}, got R = {R:.6g}")
    step = math.log(C / R) / (2 * C)
    xi = [0.0]
    while xi[-1] < 1.0:
        xi.append(min(xi[-1] + step, 1.0))
    return np.array(xi), math.ceil(2 * C / math.log(C / R))


def se_decodable_fraction(alloc, R: float, tau_sq: float) -> float:
    """Power fraction of sections with ``L P_l > 2 R tau^2``."""
    p = _alloc_values(alloc)
    L = p.size
    return float(p[L * p > 2 * R * tau_sq].sum() / p.sum())


def se_predicted_ser(alloc, params: SparcParams, mc_samples: int = 10000, seed: int = 0,
                     tau: float | None = None) -> tuple[float, float]:
    """SE-based section error rate ``1 - mean_l E_U[Phi(sqrt(nP_l)/tau + U)^(M-1)]``.

    ``tau`` defaults to ``sigma``.  Returns (estimate, standard error); the
    Monte-Carlo draws of ``U`` are shared across sections.
    """
    p = _alloc_values(alloc)
    tau = math.sqrt(params.noise_var) if tau is None else tau
    U = stream(seed, SHARED, STREAM_SE, 1).standard_normal(mc_samples)
    nu = np.sqrt(params.n * p) / tau
    # per-sample correct-section probability averaged over sections
    buf = np.zeros(mc_samples)
    for chunk in np.array_split(np.arange(p.size), max(1, p.size // 64)):
        buf += np.exp((params.M - 1) * log_ndtr(nu[chunk, None] + U[None, :])).sum(axis=0)
    correct = buf / p.size
    est = 1.0 - correct.mean()
    return float(est), float(correct.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else 0.0
