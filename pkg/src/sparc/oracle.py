"""Exhaustive least-squares search over the SPARC codebook for tiny instances.

Ground truth for decoder tests and the search engine behind the Wyner-Ziv and
Gelfand-Pinsker toys.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import MessageVector
from .design import DesignOperator
from .errors import ConfigError, InputSizeError, ScaleError


@dataclass(frozen=True)
class SearchBudget:
    """Upper bound on the number of enumerated codewords ``M^L``."""

    max_codewords: int = 1 << 20

    def __post_init__(self):
        if self.max_codewords < 1:
            raise ConfigError("max_codewords must be >= 1", "max_codewords")

    def check(self, L: int, M: int) -> None:
        # exact integer comparison, no overflow
        if M ** L > self.max_codewords:
            raise ScaleError(f"M^L = {M}^{L} exceeds the search budget of {self.max_codewords} codewords")


@dataclass(frozen=True)
class SearchResult:
    message: MessageVector
    distance: float          # ||target - A beta||^2 of the returned codeword


def _scaled_columns(op: DesignOperator, alloc) -> np.ndarray:
    p = np.asarray(getattr(alloc, "values", alloc), dtype=np.float64).reshape(-1)
    if p.size != op.L:
        raise InputSizeError("allocation length must equal L")
    c = np.sqrt(op.n * p)
    cols = np.empty((op.L, op.M, op.n))
    for l in range(op.L):
        for j in range(op.M):
            cols[l, j] = c[l] * op.column(l, j)
    return cols


def exhaustive_search(op: DesignOperator, target, alloc, budget: SearchBudget = SearchBudget(),
                      first_sections: range | None = None) -> SearchResult:
    """``argmin_beta ||target - A beta||^2`` over every section-index tuple.

    Tuples are enumerated in lexicographic order and the first global minimiser
    wins.  ``first_sections`` restricts the first section's index (for
    splitting the enumeration across workers; merge with :func:`merge_results`).
    """
    budget.check(op.L, op.M)
    t = np.ascontiguousarray(np.asarray(target, dtype=np.float64).reshape(-1))
    if t.size != op.n:
        raise InputSizeError(f"target must have length {op.n}")
    rng_ = range(op.M) if first_sections is None else first_sections
    if rng_.step != 1 or rng_.start < 0 or rng_.stop > op.M:
        raise ConfigError("first_sections must be a contiguous sub-range of 0..M-1", "first_sections")
    best, d = _kernels.exhaustive_search(_scaled_columns(op, alloc), t, rng_.start, rng_.stop)
    return SearchResult(MessageVector(best, op.M), float(max(d, 0.0)))


def merge_results(parts: list[SearchResult]) -> SearchResult:
    """Combine partial searches: smallest distance, lexicographically first on ties."""
    finite = [r for r in parts if np.isfinite(r.distance)]
    if not finite:
        raise ConfigError("no partial result to merge", "parts")
    return min(finite, key=lambda r: (r.distance, tuple(r.message.sections)))


def exhaustive_nearest(op: DesignOperator, target, alloc, budget: SearchBudget = SearchBudget()) -> MessageVector:
    """Maximum-likelihood (minimum-distance) codeword for ``target``."""
    return exhaustive_search(op, target, alloc, budget).message
