"""Lossy compression with SPARCs: the successive-cancellation encoder and
distortion evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MessageVector, SparcParams
from .design import DesignOperator, build, build_full_hadamard
from .errors import ConfigError, InputSizeError

SELECTION_RULES = ("min_distance", "correlation")


def _nearest_power_of_two(x: float) -> int:
    lo = 1 << max(1, math.floor(math.log2(x)))
    hi = lo << 1
    return lo if x - lo <= hi - x else hi


@dataclass(frozen=True)
class CompressParams:
    """Code geometry for compression.

    ``params.power`` holds the source variance ``sigma^2`` (the codebook is
    scaled to the source); ``params.noise_var`` is unused.  ``b`` is the
    section-size exponent used to pick ``M = L^b`` (``None`` if ``M`` was given
    directly).
    """

    params: SparcParams
    b: float | None = None
    selection_rule: str = "min_distance"

    def __post_init__(self):
        if self.selection_rule not in SELECTION_RULES:
            raise ConfigError(f"selection_rule must be one of {SELECTION_RULES}", "selection_rule")
        if self.b is not None and not self.b > 0:
            raise ConfigError("b must be > 0", "b")
        if not 2 * self.params.rate_nats / self.params.L < 1:
            raise ConfigError("need 2R/L < 1", "rate")

    @property
    def sigma_sq(self) -> float:
        return self.params.power

    @classmethod
    def from_b(cls, L: int, b: float, rate_nats: float, sigma_sq: float = 1.0, pow2: bool = False,
               selection_rule: str = "min_distance") -> "CompressParams":
        """``M = L^b`` (rounded to the nearest power of two if ``pow2``) and
        ``n = ceil(L ln M / R)``."""
        if not b > 0:
            raise ConfigError("b must be > 0", "b")
        raw = float(L) ** b
        M = _nearest_power_of_two(raw) if pow2 else max(2, round(raw))
        return cls(SparcParams.from_rate(L, M, rate_nats, sigma_sq, 1.0), b, selection_rule)

    @classmethod
    def from_M(cls, L: int, M: int, rate_nats: float, sigma_sq: float = 1.0,
               selection_rule: str = "min_distance") -> "CompressParams":
        return cls(SparcParams.from_rate(L, M, rate_nats, sigma_sq, 1.0), None, selection_rule)


def coefficients(cp: CompressParams) -> np.ndarray:
    """``c_l = sqrt(2 ln M sigma^2 (1 - 2R/L)^(l-1))`` for ``l = 1..L``."""
    p = cp.params
    ell = np.arange(p.L)
    return np.sqrt(2 * math.log(p.M) * cp.sigma_sq * (1 - 2 * p.rate_nats / p.L) ** ell)


def build_design(cp: CompressParams, seed: int, kind: str = "hadamard") -> DesignOperator:
    """Hadamard design for any ``M`` (fast Kronecker path when ``M`` is a power
    of two), or a dense kind."""
    p = cp.params
    if kind == "hadamard" and p.M & (p.M - 1):
        return build_full_hadamard(p.n, p.L, p.M, seed)
    return build(kind, p, seed)


@dataclass
class EncodeResult:
    message: MessageVector
    residual: np.ndarray

    @property
    def distortion(self) -> float:
        return float(self.residual @ self.residual) / self.residual.size


def sc_encode(op: DesignOperator, s: np.ndarray, cp: CompressParams, return_residual: bool = False):
    """Greedy section-by-section encoder.

    Section ``l`` picks the column maximising ``<A_j, r_{l-1}>`` (correlation;
    the positive factor ``sqrt(n)/|r|`` does not change the argmax) or
    minimising ``|r_{l-1} - c_l A_j|^2`` (min_distance), then
    ``r_l = r_{l-1} - c_l A_{m_l}``.  Ties go to the lowest index.
    """
    p = cp.params
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    if s.size != op.n:
        raise InputSizeError(f"source must have length {op.n}")
    if (op.L, op.M) != (p.L, p.M):
        raise InputSizeError("operator does not match the compression parameters")
    c = coefficients(cp)
    r = s.copy()
    chosen = np.empty(p.L, dtype=np.int64)
    norms_sq = None
    e = np.zeros((1, p.M))
    for l in range(p.L):
        sec = op.restrict(l, l + 1)
        corr = sec.adjoint(r)[0]
        if cp.selection_rule == "correlation":
            m = int(np.argmax(corr))
        else:
            if norms_sq is None or op.kind != "hadamard":
                norms_sq = _column_norms_sq(op, l)
            m = int(np.argmin(c[l] * c[l] * norms_sq - 2 * c[l] * corr))
        chosen[l] = m
        e[0, m] = c[l]
        r -= sec.apply(e)
        e[0, m] = 0.0
    msg = MessageVector(chosen, p.M)
    return EncodeResult(msg, r) if return_residual else msg


def _column_norms_sq(op: DesignOperator, section: int) -> np.ndarray:
    entries = getattr(op, "entries", None)
    if entries is not None:
        block = entries[:, section * op.M:(section + 1) * op.M]
        return np.einsum("ij,ij->j", block, block)
    # Hadamard-kind columns are +-1/sqrt(n): unit norm
    return np.ones(op.M)


def reconstruct(op: DesignOperator, msg: MessageVector, cp: CompressParams) -> np.ndarray:
    """``A beta_hat`` with section ``l`` carrying ``c_l``."""
    return op.apply(msg.to_beta(coefficients(cp)))


def distortion(s: np.ndarray, reconstruction: np.ndarray) -> float:
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    x = np.asarray(reconstruction, dtype=np.float64).reshape(-1)
    if s.size != x.size:
        raise InputSizeError("source and reconstruction lengths differ")
    d = s - x
    return float(d @ d) / s.size


def optimal_distortion(rate_nats: float, sigma_sq: float = 1.0) -> float:
    """Gaussian distortion-rate function ``sigma^2 e^{-2R}``."""
    return sigma_sq * math.exp(-2 * rate_nats)
