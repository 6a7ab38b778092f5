import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparc.core import SparcParams
from sparc.errors import ConfigError, InfeasibleError
from sparc.power import (PowerAllocation, alloc_exponential, alloc_flat, alloc_iterative, alloc_iterative_guided,
                         alloc_modified, partition_mac, r_pa_guideline)


def P(L, power=1.0, noise=1.0, rate=0.5, M=4):
    return SparcParams.from_rate(L, M, rate, power, noise)


def test_flat_examples():
    assert alloc_flat(P(4)).values.tolist() == [0.25] * 4
    assert alloc_flat(P(1, power=3.0)).values.tolist() == [3.0]
    assert alloc_flat(P(7, power=2.0)).total == pytest.approx(2.0, rel=1e-15)


def test_exponential_closed_form():
    v = alloc_exponential(P(2, power=3.0, noise=1.0)).values
    assert np.allclose(v, [2.0, 1.0], rtol=0, atol=1e-12)


def test_exponential_geometric_and_sum():
    p = P(50, power=15.0)
    v = alloc_exponential(p).values
    assert np.allclose(v[1:] / v[:-1], math.exp(-2 * p.capacity / p.L), rtol=1e-12)
    assert abs(v.sum() - 15.0) < 1e-12 * 15


def test_modified_examples():
    p = P(20, power=15.0)
    assert np.allclose(alloc_modified(p, 0.0, 0.3).values, alloc_flat(p).values, rtol=1e-12)
    assert np.allclose(alloc_modified(p, 1.0, 1.0).values, alloc_exponential(p).values, rtol=1e-12)
    v = alloc_modified(p, 1.2, 0.5).values
    assert np.all(v[9:] == v[9])          # sections l >= fL = 10 share the breakpoint value
    assert np.all(np.diff(v[:10]) < 0)
    with pytest.raises(ConfigError):
        alloc_modified(p, -1, 0.5)
    with pytest.raises(ConfigError):
        alloc_modified(p, 1, 1.5)


def test_modified_base_two_equivalence():
    # base-2 form with C in bits equals the base-e form with C in nats
    p = P(16, power=7.0)
    a, f = 0.8, 0.6
    C_bits = p.capacity / math.log(2)
    ell = np.arange(1, 17)
    ref = 2.0 ** (-2 * a * C_bits * np.minimum(ell, f * 16) / 16)
    ref = 7.0 * ref / ref.sum()
    assert np.allclose(alloc_modified(p, a, f).values, ref, rtol=1e-12)


def test_iterative_hand_trace():
    p = SparcParams.from_rate(2, 4, 0.5, 3.0, 1.0)
    assert np.allclose(alloc_iterative(p, B=2, R_PA=0.45).values, [1.8, 1.2], rtol=0, atol=1e-15)


def test_iterative_large_flat_suffix():
    p = SparcParams.from_rate(1024, 512, 0.75 * 0.5 * math.log(16), 15.0, 1.0)
    v = alloc_iterative(p).values
    assert np.all(np.diff(v) <= 1e-15)
    assert v[-1] == v[-2] and v[0] > v[-1]
    assert abs(v.sum() - 15.0) < 1e-9 * 15


def test_iterative_block_divisibility():
    with pytest.raises(ConfigError):
        alloc_iterative(P(10), B=3)


def test_iterative_zero_rpa_is_flat():
    p = P(32, power=5.0)
    assert np.allclose(alloc_iterative(p, R_PA=0.0).values, alloc_flat(p).values, rtol=1e-12)


def test_power_allocation_validation():
    with pytest.raises(ConfigError):
        PowerAllocation([1.0, -0.1])
    a = PowerAllocation([2.0, 1.0])
    assert a.L == 2 and a.total == 3.0 and a[0] == 2.0
    with pytest.raises(ValueError):
        a.values[0] = 5.0


def test_guideline_values():
    ln2 = math.log(2)
    assert r_pa_guideline(0.5 * ln2) == 0.0
    assert r_pa_guideline(1.0 * ln2) == 0.0
    assert r_pa_guideline(1.2 * ln2) == 1.0
    assert r_pa_guideline(1.5 * ln2) == 1.0
    assert r_pa_guideline(2.0 * ln2) == pytest.approx(1.1)
    assert 1.05 <= r_pa_guideline(1.8 * ln2) <= 1.1
    assert r_pa_guideline(3.0 * ln2) == 1.1
    p = SparcParams.from_rate(64, 16, 2.0 * ln2, 63.0, 1.0)
    assert np.allclose(alloc_iterative_guided(p).values, alloc_iterative(p, R_PA=1.1 * p.rate_nats).values)


def test_partition_symmetric_flat():
    part = partition_mac(PowerAllocation(np.full(8, 1.0)), 4, 4, 4.0, 4.0)
    assert part.bracket_user == 1 and part.bracket_start == 0
    assert part.labels.tolist() == [1, 1, 1, 1, 2, 2, 2, 2]


def test_partition_window_scan():
    part = partition_mac(PowerAllocation([4, 3, 2, 1, 1, 1]), 3, 3, 6.0, 6.0, renormalize=False)
    assert part.bracket_user == 1
    assert np.flatnonzero(part.labels == 1).tolist() == [1, 2, 3]
    assert part.alloc1.total == 6.0


def test_partition_infeasible_and_checks():
    # with both users present the two end windows always fit one budget, so the
    # only infeasible case is an empty user whose partner's window overflows
    with pytest.raises(InfeasibleError):
        partition_mac(PowerAllocation([1.0, 1.0]), 0, 2, 1.0, 1.0)
    with pytest.raises(ConfigError):
        partition_mac(PowerAllocation([1.0, 1.0]), 1, 2, 1.0, 1.0)
    with pytest.raises(ConfigError):
        partition_mac(PowerAllocation([1.0, 1.0]), 1, 1, 1.0, 2.0)


def test_partition_order():
    part = partition_mac(PowerAllocation([4, 3, 2, 1, 1, 1]), 3, 3, 6.0, 6.0)
    assert part.order().tolist() == [1, 2, 3, 0, 4, 5]


schemes = st.sampled_from(["flat", "exponential", "modified", "iterative"])


def make(scheme, p, data):
    if scheme == "flat":
        return alloc_flat(p)
    if scheme == "exponential":
        return alloc_exponential(p)
    if scheme == "modified":
        return alloc_modified(p, data.draw(st.floats(0, 3)), data.draw(st.floats(0, 1)))
    return alloc_iterative(p, None, data.draw(st.floats(0, 2)) * p.rate_nats)


@given(schemes, st.integers(1, 300), st.floats(0.1, 100), st.floats(0.05, 1.0), st.data())
def test_allocations_sum_and_monotone(scheme, L, snr, frac, data):
    rate = frac * 0.5 * math.log1p(snr)
    p = SparcParams.from_rate(L, 64, rate, snr, 1.0)
    v = make(scheme, p, data).values
    assert abs(v.sum() - snr) <= 1e-9 * snr
    assert np.all(v >= 0)
    assert np.all(np.diff(v) <= 1e-12 * snr)


@given(st.integers(2, 200), st.floats(0.5, 50), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_first_block_monotone_in_rpa(L, snr, r_a, r_b):
    p = SparcParams.from_rate(L, 16, 0.3, snr, 1.0)
    lo, hi = sorted([r_a, r_b])
    assert alloc_iterative(p, R_PA=hi).values[0] >= alloc_iterative(p, R_PA=lo).values[0] * (1 - 1e-12)


@given(st.integers(2, 120), st.floats(0.5, 30), st.floats(0.2, 0.8), st.floats(0.2, 0.9))
def test_partition_budgets(L, snr, share, frac):
    p = SparcParams.from_rate(L, 16, frac * 0.5 * math.log1p(snr), snr, 1.0)
    alloc = alloc_iterative(p)
    L1 = max(1, min(L - 1, round(share * L)))
    P1 = share * snr
    P2 = snr - P1
    try:
        raw = partition_mac(alloc, L1, L - L1, P1, P2, renormalize=False)
    except InfeasibleError:
        return
    v = alloc.values
    bracket = raw.labels == raw.bracket_user
    budget = P1 if raw.bracket_user == 1 else P2
    assert v[bracket].sum() <= budget * (1 + 1e-9)
    assert int((raw.labels == 1).sum()) == L1
    norm = partition_mac(alloc, L1, L - L1, P1, P2)
    assert norm.alloc1.total == pytest.approx(P1, rel=1e-12)
    assert norm.alloc2.total == pytest.approx(P2, rel=1e-12)
