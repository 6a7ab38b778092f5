import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import hadamard

from sparc.core import MessageVector, SparcParams
from sparc.design import (ColumnSubsetOperator, adjoint, build, build_full_hadamard, forward, fwht,
                          hadamard_order)
from sparc.errors import ConfigError, InputSizeError
from sparc.power import PowerAllocation, alloc_flat


def geom(n, L, M, P=1.0):
    return SparcParams.from_length(n, L, M, P, 1.0)


def explicit_hadamard_matrix(op):
    """Independent oracle: rows of scipy's Sylvester matrix, last M columns, scaled 1/sqrt(n)."""
    N = 1 << op.k
    H = hadamard(N).astype(np.float64)
    cols = N - op.M + np.arange(op.M)
    blocks = [H[np.ix_(op.rows[l].astype(np.int64), cols)] for l in range(op.L)]
    return np.concatenate(blocks, axis=1) / math.sqrt(op.n)


def test_fwht_examples():
    assert fwht([1, 0]).tolist() == [1, 1]
    assert fwht([1, 1]).tolist() == [2, 0]
    x = np.random.default_rng(0).standard_normal(64)
    assert np.allclose(fwht(fwht(x)), 64 * x, atol=1e-10)
    assert np.allclose(fwht(x), hadamard(64) @ x, atol=1e-10)
    with pytest.raises(InputSizeError):
        fwht([1, 2, 3])


def test_hadamard_order():
    assert hadamard_order(100, 16) == 7
    assert hadamard_order(127, 4) == 7
    assert hadamard_order(128, 4) == 8
    assert hadamard_order(8, 64) == 7


def test_gaussian_column_variance():
    # per-column sample second moment of n=100 N(0, 1/n) entries has relative
    # standard error sqrt(2/n); allow 3 of them for 99% of the 200 columns and a
    # Bonferroni-sized 4.5 for every column
    n = 100
    op = build("gaussian", geom(n, 2, 100), seed=3)
    rel = np.abs((op.entries ** 2).mean(axis=0) * n - 1.0)
    se = math.sqrt(2 / n)
    assert np.mean(rel < 3 * se) >= 0.99
    assert rel.max() < 4.5 * se


def test_bernoulli_entries():
    op = build("bernoulli", geom(32, 3, 8), seed=1)
    assert set(np.unique(op.entries * math.sqrt(32)).tolist()) == {-1.0, 1.0}


@pytest.mark.parametrize("kind", ["gaussian", "bernoulli", "hadamard"])
def test_same_seed_same_operator(kind):
    p = geom(40, 3, 8)
    probe = np.random.default_rng(5).standard_normal((3, 8))
    a, b = build(kind, p, 11), build(kind, p, 11)
    assert np.array_equal(a.apply(probe), b.apply(probe))
    assert not np.array_equal(a.apply(probe), build(kind, p, 12).apply(probe))


def test_hadamard_requires_power_of_two():
    with pytest.raises(ConfigError):
        build("hadamard", geom(20, 2, 6), 0)
    with pytest.raises(ConfigError):
        build("fourier", geom(20, 2, 4), 0)


def test_hadamard_rows_distinct_and_nonzero():
    op = build("hadamard", geom(100, 5, 16), 2)
    assert op.rows.shape == (5, 100)            # O(nL) storage only
    assert not hasattr(op, "entries")
    for r in op.rows:
        assert len(set(r.tolist())) == 100
        assert r.min() >= 1 and r.max() < (1 << op.k)


@pytest.mark.parametrize("n", [1, 7, 16, 33, 64])
@pytest.mark.parametrize("L", [1, 2, 4])
@pytest.mark.parametrize("M", [2, 4, 16])
def test_hadamard_matches_explicit_matrix(n, L, M):
    op = build("hadamard", geom(n, L, M), seed=n * 100 + L * 10 + M)
    A = explicit_hadamard_matrix(op)
    rng = np.random.default_rng(n + L + M)
    beta = rng.standard_normal((L, M))
    z = rng.standard_normal(n)
    assert np.allclose(op.apply(beta), A @ beta.reshape(-1), atol=1e-10)
    assert np.allclose(op.adjoint(z).reshape(-1), A.T @ z, atol=1e-10)
    assert np.allclose(op.dense(), A, atol=1e-12)


def test_full_hadamard_matches_explicit_matrix():
    for n, L, M in [(20, 3, 5), (30, 2, 12), (64, 2, 9)]:
        op = build_full_hadamard(n, L, M, seed=4)
        A = explicit_hadamard_matrix(op)
        beta = np.random.default_rng(1).standard_normal((L, M))
        z = np.random.default_rng(2).standard_normal(n)
        assert np.allclose(op.apply(beta), A @ beta.reshape(-1), atol=1e-10)
        assert np.allclose(op.adjoint(z).reshape(-1), A.T @ z, atol=1e-10)


def test_full_hadamard_agrees_with_fast_path_for_pow2():
    p = geom(50, 3, 16)
    fast = build("hadamard", p, 9)
    full = build_full_hadamard(50, 3, 16, 9)
    beta = np.random.default_rng(0).standard_normal((3, 16))
    assert np.allclose(fast.apply(beta), full.apply(beta), atol=1e-10)


@pytest.mark.parametrize("kind", ["gaussian", "bernoulli", "hadamard"])
def test_adjointness_random_probes(kind):
    op = build(kind, geom(48, 4, 16), 7)
    rng = np.random.default_rng(8)
    for _ in range(100):
        beta = rng.standard_normal((4, 16))
        v = rng.standard_normal(48)
        assert abs(op.apply(beta) @ v - np.sum(beta * op.adjoint(v))) < 1e-9


def test_gaussian_forward_matches_dense_multiply():
    p = geom(16, 2, 4)
    op = build("gaussian", p, 0)
    msg = MessageVector([1, 3], 4)
    alloc = alloc_flat(p)
    beta = msg.to_beta(np.sqrt(16 * alloc.values))
    assert np.array_equal(forward(op, msg, alloc), op.entries @ beta.reshape(-1))


def test_adjoint_of_forward_tiny():
    for kind in ("gaussian", "hadamard"):
        p = geom(16, 2, 4)
        op = build(kind, p, 3)
        A = op.dense()
        e = np.zeros(8)
        e[5] = 1.0
        assert np.allclose(adjoint(op, op.apply(e)), A.T @ (A @ e), atol=1e-10)


def test_adjoint_zero_and_linearity():
    op = build("hadamard", geom(30, 3, 8), 1)
    assert np.all(adjoint(op, np.zeros(30)) == 0)
    rng = np.random.default_rng(0)
    v, w = rng.standard_normal(30), rng.standard_normal(30)
    assert np.allclose(adjoint(op, 2.5 * v - 1.5 * w), 2.5 * adjoint(op, v) - 1.5 * adjoint(op, w), atol=1e-12)


def test_zero_allocation_zero_codeword():
    op = build("hadamard", geom(30, 3, 8), 1)
    x = forward(op, MessageVector([1, 2, 3], 8), PowerAllocation(np.zeros(3)))
    assert np.all(x == 0)


def test_codeword_power_concentrates():
    p = SparcParams.from_length(4096, 256, 64, 2.0, 1.0)
    alloc = alloc_flat(p)
    ok = 0
    for seed in range(100):
        op = build("hadamard", p, seed)
        msg = MessageVector.random(p.L, p.M, np.random.default_rng(seed))
        x = forward(op, msg, alloc)
        ok += abs(x @ x / p.n - p.power) < 0.1 * p.power
    assert ok >= 99


def test_restrict_shares_sections():
    op = build("hadamard", geom(20, 4, 8), 0)
    sub = op.restrict(1, 3)
    beta = np.zeros((4, 8))
    beta[1:3] = np.random.default_rng(0).standard_normal((2, 8))
    assert np.allclose(sub.apply(beta[1:3]), op.apply(beta))
    assert np.allclose(op.section_adjoint(np.ones(20), 2), op.adjoint(np.ones(20))[2])


def test_column_subset_operator():
    op = build("gaussian", geom(12, 2, 8), 0)
    view = ColumnSubsetOperator(op, np.array([2, 4]), 2)
    beta = np.random.default_rng(0).standard_normal((2, 2))
    full = np.zeros((2, 8))
    full[0, 2:4] = beta[0]
    full[1, 4:6] = beta[1]
    assert np.allclose(view.apply(beta), op.apply(full))
    z = np.random.default_rng(1).standard_normal(12)
    assert np.allclose(view.adjoint(z), op.adjoint(z)[[[0], [1]], [[2, 3], [4, 5]]])


def test_shape_checks():
    op = build("hadamard", geom(20, 2, 4), 0)
    with pytest.raises(InputSizeError):
        op.apply(np.zeros(7))
    with pytest.raises(InputSizeError):
        op.adjoint(np.zeros(19))


@given(st.integers(1, 64), st.integers(1, 4), st.sampled_from([2, 4, 8, 16]), st.integers(0, 2 ** 32))
def test_hadamard_property(n, L, M, seed):
    op = build("hadamard", geom(n, L, M), seed)
    A = explicit_hadamard_matrix(op)
    beta = np.random.default_rng(seed).standard_normal((L, M))
    assert np.allclose(op.apply(beta), A @ beta.reshape(-1), atol=1e-10)
