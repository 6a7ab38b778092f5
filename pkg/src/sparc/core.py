"""Shared parameter records, the bits <-> section-index codec, and metrics.

Rates are carried in nats everywhere inside the package; the helpers
:func:`bits_to_nats` / :func:`nats_to_bits` exist for the CLI boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, InputSizeError

LN2 = math.log(2.0)


def bits_to_nats(r: float) -> float:
    return r * LN2


def nats_to_bits(r: float) -> float:
    return r / LN2


def is_power_of_two(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


def log2_int(x: int) -> int:
    if not is_power_of_two(x):
        raise ConfigError(f"{x} is not a power of two", "M")
    return x.bit_length() - 1


@dataclass(frozen=True)
class SparcParams:
    """Code geometry and channel: ``L`` sections of ``M`` columns, length ``n``.

    Build with :meth:`from_rate` (derives ``n = ceil(L ln M / R)``) or
    :meth:`from_length` when the block length is fixed externally.
    ``rate_nats`` is the requested design rate; :attr:`realized_rate` is
    ``L ln M / n`` and never exceeds it when ``n`` was derived.
    """

    n: int
    L: int
    M: int
    rate_nats: float
    power: float
    noise_var: float

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError("L must be >= 1", "L")
        if self.M < 2:
            raise ConfigError("M must be >= 2", "M")
        if self.n < 1:
            raise ConfigError("n must be >= 1", "n")
        if not self.power > 0:
            raise ConfigError("power must be > 0", "power")
        if not self.noise_var > 0:
            raise ConfigError("noise_var must be > 0", "noise_var")
        if not self.rate_nats > 0:
            raise ConfigError("rate must be > 0", "rate")
        if abs(self.L * math.log(self.M) - self.n * self.rate_nats) > max(self.rate_nats, 1e-9 * self.n):
            raise ConfigError(
                f"inconsistent geometry: L ln M = {self.L * math.log(self.M):.6g} but n R = "
                f"{self.n * self.rate_nats:.6g}",
                "n",
            )

    @classmethod
    def from_rate(cls, L: int, M: int, rate_nats: float, power: float, noise_var: float) -> "SparcParams":
        if not rate_nats > 0:
            raise ConfigError("rate must be > 0", "rate")
        n = math.ceil(L * math.log(M) / rate_nats - 1e-9)
        return cls(n=n, L=L, M=M, rate_nats=rate_nats, power=power, noise_var=noise_var)

    @classmethod
    def from_length(cls, n: int, L: int, M: int, power: float, noise_var: float) -> "SparcParams":
        return cls(n=n, L=L, M=M, rate_nats=L * math.log(M) / n, power=power, noise_var=noise_var)

    @property
    def snr(self) -> float:
        return self.power / self.noise_var

    @property
    def capacity(self) -> float:
        """AWGN capacity in nats per channel use."""
        return 0.5 * math.log1p(self.snr)

    @property
    def realized_rate(self) -> float:
        return self.L * math.log(self.M) / self.n

    @property
    def bits_per_section(self) -> int:
        return log2_int(self.M)

    @property
    def num_bits(self) -> int:
        return self.L * self.bits_per_section

    def replace(self, **changes) -> "SparcParams":
        vals = dict(n=self.n, L=self.L, M=self.M, rate_nats=self.rate_nats,
                    power=self.power, noise_var=self.noise_var)
        vals.update(changes)
        return SparcParams(**vals)


class MessageVector:
    """The L chosen column indices, one per section (read-only)."""

    __slots__ = ("sections", "M")

    def __init__(self, sections: Sequence[int] | np.ndarray, M: int):
        arr = np.array(sections, dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= M):
            raise ConfigError(f"section index outside [0, {M})", "sections")
        arr.setflags(write=False)
        self.sections = arr
        self.M = int(M)

    @property
    def L(self) -> int:
        return int(self.sections.size)

    def __len__(self) -> int:
        return self.L

    def __eq__(self, other) -> bool:
        return (isinstance(other, MessageVector) and self.M == other.M
                and np.array_equal(self.sections, other.sections))

    def __hash__(self):
        return hash((self.M, self.sections.tobytes()))

    def __repr__(self) -> str:
        return f"MessageVector({self.sections.tolist()}, M={self.M})"

    def to_beta(self, values: np.ndarray) -> np.ndarray:
        """Dense ``(L, M)`` array with ``values[l]`` at the chosen column."""
        beta = np.zeros((self.L, self.M))
        beta[np.arange(self.L), self.sections] = values
        return beta

    @classmethod
    def random(cls, L: int, M: int, rng: np.random.Generator) -> "MessageVector":
        return cls(rng.integers(0, M, size=L), M)


def _bit_weights(width: int) -> np.ndarray:
    return (1 << np.arange(width - 1, -1, -1)).astype(np.int64)


def encode_message(bits: Sequence[int] | np.ndarray, params: SparcParams) -> MessageVector:
    """Split the bit string into ``L`` big-endian segments of ``log2 M`` bits."""
    width = params.bits_per_section
    b = np.asarray(bits, dtype=np.int64).reshape(-1)
    if b.size != params.L * width:
        raise InputSizeError(f"expected {params.L * width} bits, got {b.size}")
    if b.size and (b.min() < 0 or b.max() > 1):
        raise InputSizeError("bits must be 0 or 1")
    return MessageVector(b.reshape(params.L, width) @ _bit_weights(width), params.M)


def _bit_image(sections: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1)
    return ((sections[:, None] >> shifts) & 1).astype(np.uint8)


def decode_message(msg: MessageVector, params: SparcParams) -> np.ndarray:
    """Inverse of :func:`encode_message`: concatenated big-endian bit segments."""
    return _bit_image(msg.sections, params.bits_per_section).reshape(-1)


@dataclass(frozen=True)
class DecodeMetrics:
    section_error_rate: float
    bit_error_rate: float
    codeword_error: bool
    iterations_used: int = 0
    tau_hat_trajectory: tuple = field(default=())


def compute_metrics(truth: MessageVector, decoded: MessageVector, params: SparcParams | None = None,
                    iterations_used: int = 0, tau_hat_trajectory: Sequence[float] = ()) -> DecodeMetrics:
    """Section error rate, bit error rate from the actual bit images, and codeword error."""
    if truth.L != decoded.L or truth.M != decoded.M:
        raise ConfigError("truth and decoded messages have different shapes", "decoded")
    if params is not None and (params.L != truth.L or params.M != truth.M):
        raise ConfigError("message shape does not match params", "params")
    wrong = int(np.count_nonzero(truth.sections != decoded.sections))
    width = max(1, (truth.M - 1).bit_length())
    flips = int(np.count_nonzero(_bit_image(truth.sections, width) != _bit_image(decoded.sections, width)))
    return DecodeMetrics(
        section_error_rate=wrong / truth.L,
        bit_error_rate=flips / (truth.L * width),
        codeword_error=wrong > 0,
        iterations_used=iterations_used,
        tau_hat_trajectory=tuple(float(t) for t in tau_hat_trajectory),
    )
