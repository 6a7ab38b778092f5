"""Two-user broadcast and multiple-access code assembly, the binning
construction, and toy Wyner-Ziv / Gelfand-Pinsker pipelines.

Decoding in both multi-user channels reuses :func:`sparc.amp.amp_decode`
unchanged; only the operator and allocation assembly lives here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amp import AmpConfig, AmpResult, amp_decode
from .core import MessageVector, SparcParams
from .design import ColumnSubsetOperator, DesignOperator, build
from .errors import ConfigError, InputSizeError
from .oracle import SearchBudget, exhaustive_search
from .power import (MacPartition, PowerAllocation, alloc_exponential, alloc_iterative, alloc_iterative_guided,
                    partition_mac)

ALLOC_KINDS = ("guided", "iterative", "exponential")


# Joint multiuser decodes run through two power profiles back to back and need
# more iterations than a single-user code; matches the CLI scenarios' default.
MULTIUSER_AMP = AmpConfig(max_iters=100)


def _alloc(kind: str, params: SparcParams) -> PowerAllocation:
    if kind == "guided":
        return alloc_iterative_guided(params)
    if kind == "iterative":
        return alloc_iterative(params)
    if kind == "exponential":
        return alloc_exponential(params)
    raise ConfigError(f"alloc must be one of {ALLOC_KINDS}", "alloc")


def _check_shared(params1: SparcParams, params2: SparcParams) -> None:
    if params1.n != params2.n:
        raise ConfigError(f"users must share n (got {params1.n} and {params2.n})", "n")
    if params1.M != params2.M:
        raise ConfigError(f"users must share M (got {params1.M} and {params2.M})", "M")


def sections_for_rate(n: int, rate_nats: float, M: int) -> int:
    """``L = n R / ln M`` rounded to the nearest integer."""
    return int(round(n * rate_nats / math.log(M)))


# ---------------------------------------------------------------- broadcast


@dataclass
class BcCode:
    """Superposition code ``x = A_2 beta_2 + A_1 beta_1`` with ``A = [A_2 A_1]``.

    Sections ``0..L2-1`` of :attr:`op` belong to user 2 (the weak receiver),
    the remaining ``L1`` to user 1.  ``params1`` carries receiver 1's noise
    ``sigma_1^2``; ``params2`` carries the effective noise ``sigma_2^2 + P_1``
    receiver 2 sees when it treats user 1's signal as noise.
    """

    params1: SparcParams
    params2: SparcParams
    alloc1: PowerAllocation
    alloc2: PowerAllocation
    op: DesignOperator
    degenerate: tuple = ()          # users whose allocation is all-zero

    @property
    def n(self) -> int:
        return self.op.n

    @property
    def L1(self) -> int:
        return self.alloc1.L

    @property
    def L2(self) -> int:
        return self.alloc2.L

    @property
    def alloc(self) -> PowerAllocation:
        """Merged allocation in operator section order ``[user 2, user 1]``."""
        return PowerAllocation(np.concatenate([self.alloc2.values, self.alloc1.values]))

    @property
    def params(self) -> SparcParams:
        """Combined geometry at receiver 1."""
        return SparcParams.from_length(self.n, self.L1 + self.L2, self.op.M, self.alloc.total,
                                       self.params1.noise_var)

    def encode(self, msg1: MessageVector, msg2: MessageVector) -> np.ndarray:
        if msg1.L != self.L1 or msg2.L != self.L2:
            raise InputSizeError("message lengths do not match L1 / L2")
        v = np.sqrt(self.n * self.alloc.values)
        both = MessageVector(np.concatenate([msg2.sections, msg1.sections]), self.op.M)
        return self.op.apply(both.to_beta(v))

    def decode_user1(self, y1: np.ndarray, config: AmpConfig = MULTIUSER_AMP,
                     truth: tuple[MessageVector, MessageVector] | None = None) -> AmpResult:
        """Joint AMP over the full operator; user 1 owns the last ``L1`` sections."""
        t = None
        if truth is not None:
            t = MessageVector(np.concatenate([truth[1].sections, truth[0].sections]), self.op.M)
        return amp_decode(self.op, y1, self.alloc, self.params, config, t)

    def user1_message(self, result: AmpResult) -> MessageVector:
        return MessageVector(result.message.sections[self.L2:], self.op.M)

    def decode_user2(self, y2: np.ndarray, config: AmpConfig = MULTIUSER_AMP,
                     truth: MessageVector | None = None) -> AmpResult | None:
        """AMP on the ``A_2`` prefix only; ``None`` when user 2 is degenerate."""
        if 2 in self.degenerate:
            return None
        return amp_decode(self.op.restrict(0, self.L2), y2, self.alloc2, self.params2, config, truth)


def bc_build(params1: SparcParams, params2: SparcParams, seed: int = 0, kind: str = "hadamard",
             alloc: str = "guided", alloc1: PowerAllocation | None = None,
             alloc2: PowerAllocation | None = None) -> BcCode:
    """Assemble the broadcast code from two per-user geometries sharing ``n``, ``M``.

    Allocations default to ``alloc`` evaluated on each user's own geometry
    (the exponential choice decays as ``(1 + snr_i)^{-l/L_i}``).
    """
    _check_shared(params1, params2)
    a1 = alloc1 if alloc1 is not None else _alloc(alloc, params1)
    a2 = alloc2 if alloc2 is not None else _alloc(alloc, params2)
    if a1.L != params1.L or a2.L != params2.L:
        raise ConfigError("allocation lengths must equal L1 / L2", "alloc")
    degenerate = tuple(u for u, a in ((1, a1), (2, a2)) if a.total == 0)
    combined = SparcParams.from_length(params1.n, params1.L + params2.L, params1.M,
                                       params1.power + params2.power, params1.noise_var)
    op = build(kind, combined, seed)
    return BcCode(params1, params2, a1, a2, op, degenerate)


@dataclass(frozen=True)
class BcRates:
    R1: float
    R2: float
    P1: float
    P2: float


def bc_rates(P: float, sigma1_sq: float, sigma2_sq: float, alpha: float, gamma: float) -> BcRates:
    """Superposition rates ``gamma`` below the capacity-region boundary point.

    User 1 (noise ``sigma_1^2 <= sigma_2^2``) gets power ``alpha P`` and rate
    ``gamma/2 ln(1 + alpha P / sigma_1^2)``; user 2 gets ``(1 - alpha) P`` and
    ``gamma/2 ln(1 + (1 - alpha) P / (alpha P + sigma_2^2))``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError("alpha must lie in [0, 1]", "alpha")
    if not 0.0 < gamma <= 1.0:
        raise ConfigError("gamma must lie in (0, 1]", "gamma")
    if not sigma1_sq <= sigma2_sq:
        raise ConfigError("user 1 must be the stronger receiver (sigma1_sq <= sigma2_sq)", "sigma1_sq")
    P1, P2 = alpha * P, (1 - alpha) * P
    return BcRates(gamma * 0.5 * math.log1p(P1 / sigma1_sq), gamma * 0.5 * math.log1p(P2 / (P1 + sigma2_sq)),
                   P1, P2)


def bc_setup(P: float, sigma1_sq: float, sigma2_sq: float, alpha: float, gamma: float, M: int, n: int,
             seed: int = 0, kind: str = "hadamard", alloc: str = "guided",
             L1: int | None = None, L2: int | None = None) -> BcCode:
    """Broadcast code for the given operating point with ``L_i = round(n R_i / ln M)``.

    A user with zero power gets an all-zero allocation and is flagged in
    :attr:`BcCode.degenerate` (its section count then defaults to 1).
    """
    r = bc_rates(P, sigma1_sq, sigma2_sq, alpha, gamma)
    L1 = sections_for_rate(n, r.R1, M) if L1 is None else int(L1)
    L2 = sections_for_rate(n, r.R2, M) if L2 is None else int(L2)
    L1, L2 = max(L1, 1), max(L2, 1)
    # a zero-power user keeps a placeholder power so its geometry validates
    p1 = SparcParams.from_length(n, L1, M, r.P1 or P, sigma1_sq)
    p2 = SparcParams.from_length(n, L2, M, r.P2 or P, sigma2_sq + r.P1)
    a1 = PowerAllocation(np.zeros(L1)) if r.P1 == 0 else _alloc(alloc, p1)
    a2 = PowerAllocation(np.zeros(L2)) if r.P2 == 0 else _alloc(alloc, p2)
    code = bc_build(p1, p2, seed, kind, alloc, a1, a2)
    return code


# ---------------------------------------------------------- multiple access


@dataclass
class MacCode:
    """Two transmitters sharing one SPARC of ``L1 + L2`` sections.

    Sections keep the overall allocation's order; ``partition.labels[l]``
    names the user owning section ``l`` (a column permutation of
    ``A = [A_1 A_2]``, which leaves an i.i.d. design's statistics unchanged).
    """

    params: SparcParams
    params1: SparcParams
    params2: SparcParams
    partition: MacPartition
    op: DesignOperator

    @property
    def alloc(self) -> PowerAllocation:
        v = np.empty(self.params.L)
        v[self.partition.labels == 1] = self.partition.alloc1.values
        v[self.partition.labels == 2] = self.partition.alloc2.values
        return PowerAllocation(v)

    def combine(self, msg1: MessageVector, msg2: MessageVector) -> MessageVector:
        labels = self.partition.labels
        if msg1.L != int((labels == 1).sum()) or msg2.L != int((labels == 2).sum()):
            raise InputSizeError("message lengths do not match the partition")
        s = np.empty(labels.size, dtype=np.int64)
        s[labels == 1] = msg1.sections
        s[labels == 2] = msg2.sections
        return MessageVector(s, self.op.M)

    def split(self, msg: MessageVector) -> tuple[MessageVector, MessageVector]:
        labels = self.partition.labels
        return (MessageVector(msg.sections[labels == 1], msg.M), MessageVector(msg.sections[labels == 2], msg.M))

    def encode(self, msg1: MessageVector, msg2: MessageVector) -> tuple[np.ndarray, np.ndarray]:
        """Per-transmitter codewords ``(x_1, x_2)``; the channel adds them."""
        v = np.sqrt(self.op.n * self.alloc.values)
        labels = self.partition.labels
        beta = self.combine(msg1, msg2).to_beta(v)
        b1, b2 = beta.copy(), beta.copy()
        b1[labels != 1] = 0.0
        b2[labels != 2] = 0.0
        return self.op.apply(b1), self.op.apply(b2)

    def decode(self, y: np.ndarray, config: AmpConfig = MULTIUSER_AMP,
               truth: tuple[MessageVector, MessageVector] | None = None) -> AmpResult:
        t = self.combine(*truth) if truth is not None else None
        return amp_decode(self.op, y, self.alloc, self.params, config, t)


def mac_build(params1: SparcParams, params2: SparcParams, partition: MacPartition, seed: int = 0,
              kind: str = "hadamard") -> MacCode:
    """Assemble the joint MAC code; ``params_i.power`` is transmitter ``i``'s budget."""
    _check_shared(params1, params2)
    if partition.alloc1.L != params1.L or partition.alloc2.L != params2.L:
        raise ConfigError("partition sizes must equal L1 / L2", "partition")
    if partition.labels.size != params1.L + params2.L:
        raise ConfigError("partition labels must cover L1 + L2 sections", "partition")
    combined = SparcParams.from_length(params1.n, params1.L + params2.L, params1.M,
                                       params1.power + params2.power, params1.noise_var)
    return MacCode(combined, params1, params2, partition, build(kind, combined, seed))


def mac_setup(P1: float, P2: float, sigma_sq: float, alpha: float, gamma: float, M: int, n: int,
              seed: int = 0, kind: str = "hadamard", renormalize: bool = True, alloc: str = "guided") -> MacCode:
    """Sum rate ``R = gamma/2 ln(1 + (P1 + P2)/sigma^2)`` split as ``R_1 = alpha R``.

    The overall allocation (``alloc`` kind) for ``(P1 + P2, L1 + L2)`` at the
    realised sum rate is partitioned between the users with :func:`partition_mac`.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)", "alpha")
    if not 0.0 < gamma <= 1.0:
        raise ConfigError("gamma must lie in (0, 1]", "gamma")
    R = gamma * 0.5 * math.log1p((P1 + P2) / sigma_sq)
    L1 = max(1, sections_for_rate(n, alpha * R, M))
    L2 = max(1, sections_for_rate(n, (1 - alpha) * R, M))
    overall = SparcParams.from_length(n, L1 + L2, M, P1 + P2, sigma_sq)
    part = partition_mac(_alloc(alloc, overall), L1, L2, P1, P2, renormalize=renormalize)
    p1 = SparcParams.from_length(n, L1, M, P1, sigma_sq)
    p2 = SparcParams.from_length(n, L2, M, P2, sigma_sq)
    return mac_build(p1, p2, part, seed, kind)


# ------------------------------------------------------------------ binning


@dataclass(frozen=True)
class BinSpec:
    """Bin of a SPARC: in section ``l`` only sub-section ``bin_index[l]``
    (columns ``bin_index[l] M' .. bin_index[l] M' + M' - 1``) is allowed."""

    M: int
    M_prime: int
    L: int
    bin_index: tuple = field(default=())

    def __post_init__(self):
        if self.M_prime < 1 or self.M % self.M_prime:
            raise ConfigError(f"M' = {self.M_prime} must divide M = {self.M}", "M_prime")
        idx = tuple(int(b) for b in self.bin_index) if len(self.bin_index) else (0,) * self.L
        if len(idx) != self.L:
            raise ConfigError("bin_index needs one entry per section", "bin_index")
        if any(b < 0 or b >= self.subsections for b in idx):
            raise ConfigError(f"bin indices must lie in [0, {self.subsections})", "bin_index")
        object.__setattr__(self, "bin_index", idx)

    @property
    def subsections(self) -> int:
        return self.M // self.M_prime

    @property
    def num_bins(self) -> int:
        return self.subsections ** self.L

    def bin_rate(self, n: int) -> float:
        """``R`` with ``e^{nR} = (M/M')^L``."""
        return self.L * math.log(self.subsections) / n

    @property
    def offsets(self) -> np.ndarray:
        return np.asarray(self.bin_index, dtype=np.int64) * self.M_prime

    def bin_of(self, msg: MessageVector) -> tuple:
        """Sub-section index of each chosen column."""
        return tuple(int(m) // self.M_prime for m in msg.sections)

    def with_bin(self, bin_index) -> "BinSpec":
        return BinSpec(self.M, self.M_prime, self.L, tuple(bin_index))

    def lift(self, local: MessageVector) -> MessageVector:
        """Map a message of the bin's sub-code back to full-code column indices."""
        return MessageVector(np.asarray(local.sections) + self.offsets, self.M)


def bin_submatrix(op: DesignOperator, spec: BinSpec) -> DesignOperator:
    """Operator on the bin's ``L M'`` columns; the operator itself when ``M' = M``."""
    if (op.L, op.M) != (spec.L, spec.M):
        raise ConfigError("bin spec does not match the operator", "spec")
    if spec.M_prime == spec.M:
        return op
    return ColumnSubsetOperator(op, spec.offsets, spec.M_prime)


# --------------------------------------------------------------- toy demos


def _flat(n: int, L: int, value: float) -> np.ndarray:
    """Per-section power giving non-zero value ``value``: ``P_l = value^2 / n``."""
    return np.full(L, value * value / n)


@dataclass(frozen=True)
class WzParams:
    """Tiny Wyner-Ziv setup: ``Y = X + Z`` with ``X ~ N(0, sigma^2)``, ``Z ~ N(0, N)``."""

    n: int
    L: int
    M: int
    M_prime: int
    sigma_sq: float
    N: float
    D: float

    def __post_init__(self):
        if min(self.n, self.L) < 1 or self.M < 2:
            raise ConfigError("n, L must be >= 1 and M >= 2", "n")
        if not (self.sigma_sq > 0 and self.N > 0 and self.D > 0):
            raise ConfigError("sigma_sq, N and D must be positive", "D")
        if not self.D < self.var_x_given_y:
            raise ConfigError(f"need D < Var(X|Y) = {self.var_x_given_y:.6g}", "D")
        BinSpec(self.M, self.M_prime, self.L)

    @property
    def var_x_given_y(self) -> float:
        return self.sigma_sq * self.N / (self.sigma_sq + self.N)

    @property
    def Q(self) -> float:
        """Test-channel variance ``(1/D - 1/Var(X|Y))^{-1}``."""
        return 1.0 / (1.0 / self.D - 1.0 / self.var_x_given_y)

    @property
    def codeword_value(self) -> float:
        """Non-zero value ``sqrt((n/L) sigma^4 / (sigma^2 + Q))``: codewords at ``U`` scale."""
        return math.sqrt(self.n / self.L * self.sigma_sq ** 2 / (self.sigma_sq + self.Q))


@dataclass(frozen=True)
class WzResult:
    x_hat: np.ndarray
    distortion: float
    bin_index: tuple
    u_message: MessageVector
    u_decoded: MessageVector


def wz_toy(wp: WzParams, x: np.ndarray, y: np.ndarray, op: DesignOperator,
           budget: SearchBudget = SearchBudget()) -> WzResult:
    """Quantise ``x`` to the nearest codeword ``u``, send its bin, recover ``u``
    inside the bin from ``y``, then MMSE-combine
    ``x_hat = (1/Q + 1/sigma^2 + 1/N)^{-1} (u/Q + y/N)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if (op.n, op.L, op.M) != (wp.n, wp.L, wp.M):
        raise ConfigError("operator does not match the WZ parameters", "op")
    alloc = _flat(wp.n, wp.L, wp.codeword_value)
    u_msg = exhaustive_search(op, x, alloc, budget).message
    spec = BinSpec(wp.M, wp.M_prime, wp.L).with_bin(BinSpec(wp.M, wp.M_prime, wp.L).bin_of(u_msg))
    local = exhaustive_search(bin_submatrix(op, spec), y, alloc, budget).message
    u_hat_msg = spec.lift(local)
    u_hat = op.apply(u_hat_msg.to_beta(np.full(wp.L, wp.codeword_value)))
    w = 1.0 / (1.0 / wp.Q + 1.0 / wp.sigma_sq + 1.0 / wp.N)
    x_hat = w * (u_hat / wp.Q + y / wp.N)
    d = x - x_hat
    return WzResult(x_hat, float(d @ d) / x.size, spec.bin_index, u_msg, u_hat_msg)


@dataclass(frozen=True)
class GpParams:
    """Tiny Gelfand-Pinsker setup: ``Y = X + S + Z`` with state ``S ~ N(0, sigma_s^2)``
    known at the encoder, power ``P`` and noise ``Z ~ N(0, N)``."""

    n: int
    L: int
    M: int
    M_prime: int
    P: float
    N: float
    sigma_s_sq: float

    def __post_init__(self):
        if min(self.n, self.L) < 1 or self.M < 2:
            raise ConfigError("n, L must be >= 1 and M >= 2", "n")
        if not (self.P > 0 and self.N > 0):
            raise ConfigError("P and N must be positive", "P")
        if self.sigma_s_sq < 0:
            raise ConfigError("sigma_s_sq must be >= 0", "sigma_s_sq")
        BinSpec(self.M, self.M_prime, self.L)

    @property
    def alpha(self) -> float:
        """``P / (P + N)``."""
        return self.P / (self.P + self.N)

    @property
    def codeword_value(self) -> float:
        """``sqrt((n/L) alpha^2 sigma_s^4 / (P + alpha^2 sigma_s^2))``."""
        a, s2 = self.alpha, self.sigma_s_sq
        return math.sqrt(self.n / self.L * a * a * s2 * s2 / (self.P + a * a * s2))

    @property
    def transmit_value(self) -> float:
        """Non-zero value of ``((P + alpha^2 sigma_s^2)/(alpha sigma_s^2)) u'``.

        Equals ``sqrt(n (P + alpha^2 sigma_s^2) / L)``; written this way it stays
        finite as ``sigma_s^2 -> 0``, where the scheme becomes plain AWGN coding.
        """
        a, s2 = self.alpha, self.sigma_s_sq
        return math.sqrt(self.n * (self.P + a * a * s2) / self.L)

    @property
    def receive_value(self) -> float:
        """Non-zero value of the codeword seen at the receiver, ``y = g u' + (noise)``."""
        return self.transmit_value + (1.0 - self.alpha) * self.codeword_value


@dataclass(frozen=True)
class GpResult:
    W_hat: tuple
    correct: bool
    x: np.ndarray
    y: np.ndarray
    u_message: MessageVector


def gp_toy(gp: GpParams, W, s: np.ndarray, z: np.ndarray, op: DesignOperator,
           budget: SearchBudget = SearchBudget()) -> GpResult:
    """Encode bin ``W`` against state ``s``, send ``x``, decode over the full code.

    The encoder picks ``u'`` in bin ``W`` closest to ``s`` and sends
    ``x = ((P + alpha^2 sigma_s^2)/(alpha sigma_s^2)) u' - alpha s``.  The
    receiver sees ``y = x + s + z``, finds the nearest full-code codeword at the
    received scale, and outputs its bin.
    """
    s = np.asarray(s, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if (op.n, op.L, op.M) != (gp.n, gp.L, gp.M):
        raise ConfigError("operator does not match the GP parameters", "op")
    spec = BinSpec(gp.M, gp.M_prime, gp.L, tuple(W))
    local = exhaustive_search(bin_submatrix(op, spec), s, _flat(gp.n, gp.L, gp.codeword_value), budget).message
    u_msg = spec.lift(local)
    x = op.apply(u_msg.to_beta(np.full(gp.L, gp.transmit_value))) - gp.alpha * s
    y = x + s + z
    found = exhaustive_search(op, y, _flat(gp.n, gp.L, gp.receive_value), budget).message
    W_hat = spec.bin_of(found)
    return GpResult(W_hat, W_hat == spec.bin_index, x, y, u_msg)
