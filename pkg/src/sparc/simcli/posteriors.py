"""Bit posteriors from AMP's section-wise weights, and the outer-code hook.

The outer code itself is not implemented here: a caller supplies a callback
that maps bit posteriors of the protected sections to corrected bits (or
``None`` on decoding failure).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import _kernels
from ..amp import AmpConfig, AmpResult, harden, rerun_unprotected
from ..core import MessageVector, SparcParams, is_power_of_two
from ..design import DesignOperator
from ..errors import ConfigError, InterfaceError, UndefinedPosteriorError

OuterDecoder = Callable[[np.ndarray], "np.ndarray | None"]


def _posteriors(beta: np.ndarray) -> np.ndarray:
    M = beta.shape[1]
    if not is_power_of_two(M):
        raise ConfigError(f"section size must be a power of two, got {M}", "M")
    if beta.size and beta.min() < 0:
        raise ConfigError("section weights must be non-negative", "beta")
    if np.any(beta.sum(axis=1) <= 0):
        raise UndefinedPosteriorError("bit posteriors are undefined for an all-zero section")
    out = np.empty((beta.shape[0], M.bit_length() - 1))
    _kernels.bit_posteriors_rows(np.ascontiguousarray(beta, dtype=np.float64), out)
    return out


def bit_posteriors(beta_section) -> np.ndarray:
    """``P(bit b = 1)`` for ``b = 0..log2 M - 1`` (bit 0 most significant).

    The weights need not be normalised; they are divided by their sum.
    """
    b = np.asarray(beta_section, dtype=np.float64).reshape(1, -1)
    return _posteriors(b)[0]


def bit_posteriors_all(beta: np.ndarray) -> np.ndarray:
    """Row-wise :func:`bit_posteriors` for an ``(L, M)`` array."""
    return _posteriors(np.asarray(beta, dtype=np.float64))


@dataclass(frozen=True)
class OuterCodeResult:
    message: MessageVector
    outer_success: bool
    fixed: MessageVector | None       # protected-section indices taken from the outer decoder


def outer_code_hook(op: DesignOperator, y: np.ndarray, first_pass: AmpResult, alloc, params: SparcParams,
                    protected: int, decoder: OuterDecoder, config: AmpConfig = AmpConfig()) -> OuterCodeResult:
    """Feed the last ``protected`` sections' bit posteriors to ``decoder``.

    On success the returned bits (``protected * log2 M`` of them, big-endian
    per section) fix those sections and the rest is re-decoded with
    :func:`rerun_unprotected`; on failure (``None``) the first pass is
    hardened as usual.
    """
    L, M = op.L, op.M
    if not 0 < protected <= L:
        raise ConfigError(f"protected must lie in 1..{L}", "protected")
    width = M.bit_length() - 1
    post = bit_posteriors_all(first_pass.beta[L - protected:]).reshape(-1)
    bits = decoder(post)
    if bits is None:
        return OuterCodeResult(MessageVector(harden(first_pass.beta), M), False, None)
    bits = np.asarray(bits).reshape(-1)
    if bits.size != protected * width:
        raise InterfaceError(f"outer decoder returned {bits.size} bits, expected {protected * width}")
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise InterfaceError("outer decoder must return 0/1 bits")
    weights = 1 << np.arange(width - 1, -1, -1)
    fixed = MessageVector(bits.astype(np.int64).reshape(protected, width) @ weights, M)
    msg = rerun_unprotected(op, y, fixed, alloc, params, config)
    return OuterCodeResult(msg, True, fixed)
