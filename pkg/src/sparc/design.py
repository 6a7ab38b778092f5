"""Design operators: dense Gaussian / Bernoulli matrices and the sub-sampled
Walsh-Hadamard construction, plus the fast Walsh-Hadamard transform.

Every operator shares one contract: entries have variance ``1/n`` (the
Hadamard kind scales its ``+-1`` entries by ``1/sqrt(n)`` at application
time), message vectors are handled as ``(L, M)`` arrays, and ``apply`` /
``adjoint`` are exact transposes of each other.
"""
from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .core import MessageVector, SparcParams, is_power_of_two
from .errors import ConfigError, InputSizeError
from .rng import stream

KINDS = ("gaussian", "bernoulli", "hadamard")


def fwht(x) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform ``H_k x`` (Sylvester ordering)."""
    a = np.array(x, dtype=np.float64).reshape(-1)
    if not is_power_of_two(a.size):
        raise InputSizeError(f"fwht length must be a power of two, got {a.size}")
    _kernels.fwht_inplace(a)
    return a


def hadamard_order(n: int, M: int) -> int:
    """Smallest ``k`` with ``2^k >= max(n+1, M+1)``."""
    return math.ceil(math.log2(max(n + 1, M + 1)))


class DesignOperator:
    """Abstract ``n x (L M)`` linear map acting on ``(L, M)`` message arrays."""

    kind: str
    n: int
    L: int
    M: int
    seed: int

    def apply(self, beta: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def adjoint(self, z: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def restrict(self, start: int, stop: int) -> "DesignOperator":  # pragma: no cover
        """Operator made of sections ``start..stop-1`` only (shares storage)."""
        raise NotImplementedError

    def column(self, section: int, index: int) -> np.ndarray:
        e = np.zeros((self.L, self.M))
        e[section, index] = 1.0
        return self.apply(e)

    def section_adjoint(self, z: np.ndarray, section: int) -> np.ndarray:
        """``A_l^T z`` for the columns of a single section, length ``M``."""
        return self.restrict(section, section + 1).adjoint(z)[0]

    def dense(self) -> np.ndarray:
        """Materialise the full matrix (tests / tiny sizes only)."""
        out = np.empty((self.n, self.L * self.M))
        e = np.zeros((self.L, self.M))
        for l in range(self.L):
            for j in range(self.M):
                e[l, j] = 1.0
                out[:, l * self.M + j] = self.apply(e)
                e[l, j] = 0.0
        return out

    def _check_beta(self, beta) -> np.ndarray:
        b = np.asarray(beta, dtype=np.float64)
        if b.size != self.L * self.M:
            raise InputSizeError(f"beta must have {self.L * self.M} entries, got {b.size}")
        return b.reshape(self.L, self.M)

    def _check_z(self, z) -> np.ndarray:
        v = np.asarray(z, dtype=np.float64).reshape(-1)
        if v.size != self.n:
            raise InputSizeError(f"vector must have length {self.n}, got {v.size}")
        return v


class DenseDesign(DesignOperator):
    """Explicit matrix with i.i.d. ``N(0, 1/n)`` or ``+-1/sqrt(n)`` entries."""

    def __init__(self, entries: np.ndarray, L: int, M: int, kind: str, seed: int):
        self.entries = entries
        self.n = entries.shape[0]
        self.L, self.M = L, M
        self.kind = kind
        self.seed = seed

    def apply(self, beta):
        return self.entries @ self._check_beta(beta).reshape(-1)

    def adjoint(self, z):
        return (self.entries.T @ self._check_z(z)).reshape(self.L, self.M)

    def restrict(self, start, stop):
        return DenseDesign(self.entries[:, start * self.M: stop * self.M], stop - start, self.M, self.kind,
                           self.seed)

    def column(self, section, index):
        return self.entries[:, section * self.M + index].copy()

    def dense(self):
        return self.entries.copy()


class HadamardDesign(DesignOperator):
    """Sub-sampled Hadamard design, optionally with block-wise gains.

    ``rows[l]`` holds ``n`` distinct non-zero row indices of ``H_k`` for
    section ``l``; the section occupies the last ``M`` columns of ``H_k``
    (zero-prepending).  Output row ``i`` belongs to row block ``i // rb_size``
    and is scaled by ``gains[row_block, sec_block[l]]``.  Only the ``O(nL)``
    row indices are stored.
    """

    kind = "hadamard"

    def __init__(self, rows: np.ndarray, M: int, k: int, seed: int, gains: np.ndarray | None = None,
                 rb_size: int | None = None, sec_block: np.ndarray | None = None):
        self.rows = rows
        self.L, self.n = rows.shape
        self.M = M
        self.k = k
        self.m = M.bit_length() - 1
        self.seed = seed
        self.signs = _kernels.parity_table(1 << (k - self.m))
        self.gains = np.array([[1.0 / math.sqrt(self.n)]]) if gains is None else np.asarray(gains, dtype=np.float64)
        self.rb_size = self.n if rb_size is None else int(rb_size)
        self.sec_block = (np.zeros(self.L, dtype=np.int64) if sec_block is None
                          else np.asarray(sec_block, dtype=np.int64))
        if self.rb_size * self.gains.shape[0] != self.n:
            raise ConfigError("row blocks do not tile n", "rb_size")
        nz = self.gains != 0.0
        self.nnz = nz.sum(axis=0).astype(np.int64)
        self.nzr = np.zeros((self.gains.shape[1], max(1, int(self.nnz.max()))), dtype=np.int64)
        for c in range(self.gains.shape[1]):
            idx = np.flatnonzero(nz[:, c])
            self.nzr[c, :idx.size] = idx

    def _args(self):
        return (self.rows, self.m, self.signs, self.gains, self.sec_block, self.nzr, self.nnz, self.rb_size)

    def apply(self, beta):
        b = np.ascontiguousarray(self._check_beta(beta))
        out = np.empty(self.n)
        _kernels.hadamard_forward(b, *self._args(), out)
        return out

    def adjoint(self, z):
        out = np.empty((self.L, self.M))
        _kernels.hadamard_adjoint(np.ascontiguousarray(self._check_z(z)), *self._args(), out)
        return out

    def restrict(self, start, stop):
        return HadamardDesign(self.rows[start:stop], self.M, self.k, self.seed, self.gains, self.rb_size,
                              self.sec_block[start:stop])

    def column(self, section, index):
        rows = self.rows[section].astype(np.int64)
        d = rows & (self.M - 1)
        h = 1.0 - 2.0 * (np.bitwise_count(d & index) & 1)
        g = self.gains[np.arange(self.n) // self.rb_size, self.sec_block[section]]
        return g * self.signs[rows >> self.m] * h

    def dense(self):
        return np.concatenate(
            [np.stack([self.column(l, j) for j in range(self.M)], axis=1) for l in range(self.L)], axis=1)


class FullHadamardDesign(DesignOperator):
    """Sub-sampled Hadamard design for any section size ``M``.

    Same row sampling as :class:`HadamardDesign`, with each section occupying
    the last ``M`` columns of ``H_k``, but applied through a full size-``2^k``
    transform per section, so ``M`` need not be a power of two.  Used where
    the section size is fixed by other constraints (the compression
    experiments' ``M = L^b``).
    """

    kind = "hadamard"

    def __init__(self, rows: np.ndarray, M: int, k: int, seed: int):
        self.rows = rows
        self.L, self.n = rows.shape
        self.M = M
        self.k = k
        self.N = 1 << k
        if M > self.N - 1:
            raise ConfigError("H_k has too few non-zero columns for M", "M")
        self.col0 = self.N - M
        self.seed = seed
        self.scale = 1.0 / math.sqrt(self.n)

    def apply(self, beta):
        b = np.ascontiguousarray(self._check_beta(beta))
        out = np.empty(self.n)
        _kernels.full_hadamard_forward(b, self.rows, self.col0, self.N, out)
        out *= self.scale
        return out

    def adjoint(self, z):
        out = np.empty((self.L, self.M))
        _kernels.full_hadamard_adjoint(np.ascontiguousarray(self._check_z(z)), self.rows, self.col0, self.N, out)
        out *= self.scale
        return out

    def restrict(self, start, stop):
        return FullHadamardDesign(self.rows[start:stop], self.M, self.k, self.seed)

    def column(self, section, index):
        rows = self.rows[section].astype(np.int64)
        h = 1.0 - 2.0 * (np.bitwise_count(rows & (self.col0 + index)) & 1)
        return self.scale * h


def build_full_hadamard(n: int, L: int, M: int, seed: int) -> FullHadamardDesign:
    """Deterministic in ``(n, L, M, seed)``; same row draws as :func:`build`."""
    rows, k = hadamard_rows(n, L, M, stream(seed))
    return FullHadamardDesign(rows, M, k, seed)


def hadamard_rows(n: int, L: int, M: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Per-section seeded Fisher-Yates choice of ``n`` distinct rows from ``1..2^k-1``."""
    k = hadamard_order(n, M)
    N = 1 << k
    dtype = np.uint16 if N <= (1 << 16) else np.int32
    rows = np.empty((L, n), dtype=dtype)
    for l in range(L):
        rows[l] = rng.permutation(N - 1)[:n] + 1
    return rows, k


def build(kind: str, params: SparcParams, seed: int) -> DesignOperator:
    """Construct a design operator; deterministic in ``(kind, params, seed)``."""
    n, L, M = params.n, params.L, params.M
    rng = stream(seed)
    if kind == "gaussian":
        return DenseDesign(rng.standard_normal((n, L * M)) / math.sqrt(n), L, M, kind, seed)
    if kind == "bernoulli":
        signs = rng.integers(0, 2, size=(n, L * M), dtype=np.int8).astype(np.float64) * 2.0 - 1.0
        return DenseDesign(signs / math.sqrt(n), L, M, kind, seed)
    if kind == "hadamard":
        if not is_power_of_two(M):
            raise ConfigError("hadamard design needs M to be a power of two", "M")
        rows, k = hadamard_rows(n, L, M, rng)
        return HadamardDesign(rows, M, k, seed)
    raise ConfigError(f"unknown design kind {kind!r}; expected one of {KINDS}", "design")


def _values(alloc, n: int) -> np.ndarray:
    p = np.asarray(getattr(alloc, "values", alloc), dtype=np.float64)
    return np.sqrt(n * p)


def forward(op: DesignOperator, msg: MessageVector, alloc) -> np.ndarray:
    """Codeword ``sum_l sqrt(n P_l) A_{column(l)}``."""
    v = _values(alloc, op.n)
    if v.size != op.L or msg.L != op.L:
        raise InputSizeError("allocation / message length must equal L")
    return op.apply(msg.to_beta(v))


def adjoint(op: DesignOperator, v) -> np.ndarray:
    """``A^T v`` flattened to length ``L M``."""
    return op.adjoint(v).reshape(-1)


class ColumnSubsetOperator(DesignOperator):
    """View of a parent operator keeping ``width`` consecutive columns per section,
    starting at ``offsets[l]`` in section ``l``."""

    def __init__(self, parent: DesignOperator, offsets: np.ndarray, width: int):
        self.parent = parent
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.n, self.L, self.M = parent.n, parent.L, width
        self.kind = parent.kind
        self.seed = parent.seed
        self._cols = self.offsets[:, None] + np.arange(width)[None, :]
        self._ridx = np.arange(self.L)[:, None]

    def _embed(self, beta):
        full = np.zeros((self.parent.L, self.parent.M))
        full[self._ridx, self._cols] = beta
        return full

    def apply(self, beta):
        return self.parent.apply(self._embed(self._check_beta(beta)))

    def adjoint(self, z):
        return self.parent.adjoint(z)[self._ridx, self._cols]

    def restrict(self, start, stop):
        return ColumnSubsetOperator(self.parent.restrict(start, stop), self.offsets[start:stop], self.M)

    def column(self, section, index):
        return self.parent.column(section, int(self.offsets[section]) + index)
