"""Per-section power allocations and the MAC bracket partition."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SparcParams
from .errors import ConfigError, InfeasibleError


@dataclass(frozen=True)
class PowerAllocation:
    """Non-negative per-section powers ``P_1..P_L`` (read-only array)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size and v.min() < 0:
            raise ConfigError("powers must be non-negative", "alloc")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def L(self) -> int:
        return int(self.values.size)

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def __len__(self):
        return self.L

    def __getitem__(self, item):
        return self.values[item]


def alloc_flat(params: SparcParams) -> PowerAllocation:
    return PowerAllocation(np.full(params.L, params.power / params.L))


def alloc_exponential(params: SparcParams) -> PowerAllocation:
    """``P_l`` proportional to ``exp(-2 C l / L)``, normalised in closed form."""
    P, L, C = params.power, params.L, params.capacity
    ell = np.arange(1, L + 1)
    coef = P * math.expm1(2 * C / L) / -math.expm1(-2 * C)
    return PowerAllocation(coef * np.exp(-2 * C * ell / L))


def alloc_modified(params: SparcParams, a: float, f: float) -> PowerAllocation:
    """Exponential decay with exponent ``a`` up to section ``f L``, flat afterwards.

    The geometric part is ``exp(-2 a C l / L)`` with ``C`` in nats, which is the
    same sequence as the base-2 form with ``C`` in bits.  The flat tail takes
    the value at the breakpoint ``l = f L`` so the profile is continuous.
    """
    if a < 0:
        raise ConfigError("a must be >= 0", "a")
    if not 0.0 <= f <= 1.0:
        raise ConfigError("f must lie in [0, 1]", "f")
    L, C = params.L, params.capacity
    ell = np.arange(1, L + 1, dtype=np.float64)
    shape = np.exp(-2 * a * C * np.minimum(ell, f * L) / L)
    return PowerAllocation(params.power * shape / shape.sum())


def alloc_iterative(params: SparcParams, B: int | None = None, R_PA: float | None = None) -> PowerAllocation:
    """Block-wise iterative allocation (defaults: ``B = L``, ``R_PA = R``).

    Each block of ``k = L/B`` sections receives ``2 R_PA tau^2 / L`` per section
    with ``tau^2 = sigma^2 + P_remain``, unless spreading the remaining power
    evenly already gives more, in which case the rest is flattened and the loop
    stops.
    """
    L, P, sigma2 = params.L, params.power, params.noise_var
    B = L if B is None else int(B)
    R_PA = params.rate_nats if R_PA is None else float(R_PA)
    if B < 1 or L % B:
        raise ConfigError(f"B={B} must divide L={L}", "B")
    if R_PA < 0:
        raise ConfigError("R_PA must be >= 0", "R_PA")
    k = L // B
    out = np.zeros(L)
    for b in range(B):
        p_remain = P - out.sum()
        tau2 = sigma2 + p_remain
        p_block = 2 * R_PA * tau2 / L
        if p_remain / (L - b * k) > p_block:
            out[b * k:] = p_remain / (L - b * k)
            break
        out[b * k:(b + 1) * k] = p_block
    # With a large R_PA the blocks can run past the budget before the flattening
    # test fires; scale back so the allocation still sums to P.
    total = out.sum()
    if total > P:
        out *= P / total
    return PowerAllocation(out)


def _flat_mask(values: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Sections equal to the smallest (flat-tail) value."""
    last = values[-1]
    return np.abs(values - last) <= rtol * max(abs(last), 1e-300)


@dataclass(frozen=True)
class MacPartition:
    """Per-section user labels (1 or 2) and the resulting per-user allocations."""

    labels: np.ndarray
    bracket_user: int
    bracket_start: int
    alloc1: PowerAllocation
    alloc2: PowerAllocation

    def order(self) -> np.ndarray:
        """Section indices of user 1 followed by those of user 2."""
        return np.concatenate([np.flatnonzero(self.labels == 1), np.flatnonzero(self.labels == 2)])


def _bracket(values: np.ndarray, size: int, budget: float) -> int | None:
    """Leftmost window of ``size`` sections with maximal sum not exceeding ``budget``."""
    csum = np.concatenate([[0.0], np.cumsum(values)])
    sums = csum[size:] - csum[:-size]
    ok = np.flatnonzero(sums <= budget * (1 + 1e-12))
    if ok.size == 0:
        return None
    best = sums[ok].max()
    return int(ok[np.flatnonzero(sums[ok] >= best * (1 - 1e-12))[0]])


def partition_mac(alloc: PowerAllocation, L1: int, L2: int, P1: float, P2: float,
                  renormalize: bool = True) -> MacPartition:
    """Split an overall non-increasing allocation between two transmitters.

    Try a bracket of ``L1`` sections for user 1 and one of ``L2`` sections for
    user 2.  Keep whichever puts a fraction of flat-tail sections inside the
    bracket closest to the overall flat fraction (user 1 on ties).  The rest
    goes to the other user.  With ``renormalize`` each user's powers are then
    scaled to exactly ``P1`` / ``P2``.
    """
    v = np.asarray(alloc.values)
    L = v.size
    if L1 + L2 != L:
        raise ConfigError("L1 + L2 must equal the allocation length", "L1")
    if not math.isclose(P1 + P2, v.sum(), rel_tol=1e-9):
        raise ConfigError("P1 + P2 must equal the allocation total", "P1")
    flat = _flat_mask(v)
    f_all = flat.mean()
    candidates = []
    for user, size, budget in ((1, L1, P1), (2, L2, P2)):
        if size == 0:
            continue
        start = _bracket(v, size, budget)
        if start is None:
            continue
        f_b = flat[start:start + size].mean()
        candidates.append((abs(f_b - f_all), user, start, size))
    if not candidates:
        raise InfeasibleError(f"no bracket of size {L1} fits P1={P1} and none of size {L2} fits P2={P2}")
    _, user, start, size = min(candidates, key=lambda c: (c[0], c[1]))
    labels = np.full(L, 3 - user, dtype=np.int64)
    labels[start:start + size] = user
    p1 = v[labels == 1].copy()
    p2 = v[labels == 2].copy()
    if renormalize:
        if p1.sum() > 0:
            p1 *= P1 / p1.sum()
        if p2.sum() > 0:
            p2 *= P2 / p2.sum()
    return MacPartition(labels, user, start, PowerAllocation(p1), PowerAllocation(p2))


def r_pa_guideline(rate_nats: float) -> float:
    """Rule-of-thumb ``R_PA / R`` for :func:`alloc_iterative` at communication rate ``R``.

    Finite-length experiments favour a flat allocation (``R_PA = 0``) up to
    1 bit, ``R_PA ~ R`` around 1.5 bits and ``R_PA / R`` between 1.05 and 1.1
    at 2 bits.  Between 1.5 and 2 bits the ratio is interpolated linearly up
    to the upper end, 1.1, and held there above.
    """
    bits = rate_nats / math.log(2)
    if bits <= 1.0:
        return 0.0
    if bits <= 1.5:
        return 1.0
    return float(min(1.1, 1.0 + 0.2 * (bits - 1.5)))


def alloc_iterative_guided(params: SparcParams, B: int | None = None) -> PowerAllocation:
    """:func:`alloc_iterative` with ``R_PA`` from :func:`r_pa_guideline`."""
    return alloc_iterative(params, B, r_pa_guideline(params.rate_nats) * params.rate_nats)
