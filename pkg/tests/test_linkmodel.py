import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridalloc.channel import MmWaveLink, Sub6Channel, generate_rayleigh
from hybridalloc.linkmodel import (
    Allocation, SystemParams, consumed_power, evaluate, evaluate_gains, rate_mmwave,
    rate_sub6_uniform, rate_total_grid, to_mbps,
)

TABLE2 = SystemParams(2.5, 1e-7, 64, 16, 1e6, 1e9)


def test_rate_sub6_siso():
    ch = Sub6Channel(np.array([[1.0]]))
    assert rate_sub6_uniform(ch, 1.0, 1.0) == pytest.approx(math.log(2))
    assert rate_sub6_uniform(ch, 1.0, 0.0) == 0.0
    assert rate_sub6_uniform(ch, 0.0, 1.0) == 0.0


def test_rate_sub6_eigen_oracle(rng):
    for seed in range(10):
        ch = generate_rayleigh(5, 3, seed)
        w, p = rng.uniform(0.1, 10), rng.uniform(0.1, 10)
        eig = np.linalg.eigvalsh(ch.entries @ ch.entries.conj().T)
        ref = sum(w * math.log(1 + p * e / (w * ch.n_t)) for e in eig)
        assert rate_sub6_uniform(ch, w, p) == pytest.approx(ref, rel=1e-10)
        # and the log-det form with K = p / n_t I
        k = np.eye(ch.n_r) + ch.entries @ ch.entries.conj().T * p / (w * ch.n_t)
        assert rate_sub6_uniform(ch, w, p) == pytest.approx(w * np.linalg.slogdet(k)[1], rel=1e-10)


def test_rate_mmwave_examples():
    assert rate_mmwave(MmWaveLink(1.0), 1.0, 1.0) == pytest.approx(math.log(2))
    assert rate_mmwave(MmWaveLink(0.0), 3.0, 5.0) == 0.0
    assert rate_mmwave(MmWaveLink(3.0), 2.0, 4.0) == pytest.approx(2 * math.log(7))


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        rate_mmwave(MmWaveLink(1.0), -1.0, 1.0)
    with pytest.raises(ValueError):
        Allocation(w_sub6=-1.0)


def test_consumed_power_examples():
    assert consumed_power(Allocation(), TABLE2) == 0.0
    opt = Allocation(1e6, 4.0597e6, 0.394, 0.1)
    assert consumed_power(opt, TABLE2) == pytest.approx(2.49997, abs=1e-9)
    full = Allocation(1e6, 1e9, 0.0, 0.0)
    assert consumed_power(full, TABLE2) == pytest.approx(101.6, rel=1e-12)


def test_inactive_interface_carries_no_power():
    a = Allocation(0.0, 1.0, 5.0, 1.0)
    assert a.p_sub6 == 0.0 and not a.sub6_active and a.mm_active


def test_evaluate_examples():
    ch, link = generate_rayleigh(64, 16, 0, 1e9), MmWaveLink(6.4e9)
    rep = evaluate(Allocation(), ch, link, TABLE2)
    assert (rep.rate_total, rep.consumed_power, rep.ee, rep.feasible) == (0.0, 0.0, 0.0, True)
    assert not evaluate(Allocation(1e6, 1e9, 0.0, 0.0), ch, link, TABLE2).feasible
    alloc = Allocation(1e6, 4e6, 0.3, 0.1)
    rep = evaluate(alloc, ch, link, TABLE2)
    assert rep.feasible
    assert rep.rate_total == pytest.approx(rep.rate_sub6 + rep.rate_m)
    assert rep.ee == pytest.approx(rep.rate_total / rep.consumed_power)


def test_bandwidth_cap_feasibility():
    ch, link = generate_rayleigh(2, 2, 0), MmWaveLink(1.0)
    p = SystemParams(1e3, 1e-12, 2, 2, 1e6, 1e9)
    assert not evaluate(Allocation(2e6, 0, 1, 0), ch, link, p).feasible


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(0.0, 1e-9, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        SystemParams(1.0, 1e-9, 0, 1, 1, 1)
    assert TABLE2.sub6_cost == pytest.approx(1.6e-6)
    assert TABLE2.replace(p_max=1.0).p_max == 1.0


alloc_st = st.tuples(*[st.floats(1e-3, 1e3)] * 4)


@given(alloc_st, st.integers(0, 3), st.floats(1e-3, 10))
def test_rate_monotone_in_each_variable(x, k, bump):
    gains, A = np.array([2.0, 0.5]), 3.0
    y = list(x)
    y[k] += bump
    p = SystemParams(1e9, 1e-9, 2, 2, 1e9, 1e9)
    r0 = evaluate_gains(Allocation(*x), gains, A, p).rate_total
    r1 = evaluate_gains(Allocation(*y), gains, A, p).rate_total
    assert r1 >= r0 - 1e-12 * r0


@given(alloc_st, alloc_st, st.floats(0.01, 0.99))
def test_joint_concavity(x, y, t):
    gains, A = np.array([2.0, 0.5]), 3.0
    p = SystemParams(1e9, 1e-9, 2, 2, 1e9, 1e9)
    z = [t * a + (1 - t) * b for a, b in zip(x, y)]

    def f(v):
        return evaluate_gains(Allocation(*v), gains, A, p).rate_total

    assert f(z) >= t * f(x) + (1 - t) * f(y) - 1e-9 * max(1.0, f(z))


def test_consumed_power_linear():
    p = SystemParams(10.0, 1e-7, 4, 3, 1e6, 1e9)
    a, b = Allocation(1e5, 2e6, 0.1, 0.2), Allocation(3e5, 1e6, 0.4, 0.1)
    mid = Allocation(*[(u + v) / 2 for u, v in zip(a.as_tuple(), b.as_tuple())])
    assert consumed_power(mid, p) == pytest.approx(
        (consumed_power(a, p) + consumed_power(b, p)) / 2, rel=1e-14)


def test_rate_total_grid_matches_scalar(rng):
    gains, A = np.array([3.0, 1.0, 0.2]), 5.0
    w = rng.uniform(0, 4, (7, 3))
    w[0, 0] = 0.0
    p = rng.uniform(0, 4, (7, 3))
    grid = rate_total_grid(w, p, w[::-1], p[::-1], gains, A)
    p0 = SystemParams(1e9, 1e-9, 3, 3, 1e9, 1e9)
    for idx in np.ndindex(w.shape):
        j = (w.shape[0] - 1 - idx[0], idx[1])
        ref = evaluate_gains(Allocation(w[idx], w[j], p[idx], p[j]), gains, A, p0).rate_total
        assert grid[idx] == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_mbps():
    assert to_mbps(math.log(2) * 1e6) == pytest.approx(1.0)
