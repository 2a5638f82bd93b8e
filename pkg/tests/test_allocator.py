import math

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridalloc.allocator import RateProfile, penalized_best, water_level


def _cvx_sumrate(gains_list, costs, caps, p_max):
    """Independent conic solve; bandwidths in MHz so the problem is well scaled."""
    ws = [cp.Variable(nonneg=True) for _ in gains_list]
    ps = [cp.Variable(nonneg=True) for _ in gains_list]
    rate = 0
    for w, p, gains in zip(ws, ps, gains_list):
        for g in gains:
            # W log(1 + g P / W) = -rel_entr(W, W + g P), with W in MHz
            rate += -cp.rel_entr(w, w + g * p / 1e6)
    cons = [sum(p + c * 1e6 * w for w, p, c in zip(ws, ps, costs)) <= p_max]
    cons += [w <= cap / 1e6 for w, cap in zip(ws, caps)]
    prob = cp.Problem(cp.Maximize(rate), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value * 1e6


def _value(profiles, widths, powers):
    return sum(w * pr.rate_per_hz(p / w) for pr, w, p in zip(profiles, widths, powers) if w > 0)


@pytest.mark.parametrize("seed", range(8))
def test_water_level_matches_conic_solver(seed):
    rng = np.random.default_rng(seed)
    gains_s = 10 ** rng.uniform(6, 8, size=rng.integers(1, 4))
    gain_m = 10 ** rng.uniform(6, 8)
    costs = (10 ** rng.uniform(-8, -6), 10 ** rng.uniform(-8, -6))
    caps = (10 ** rng.uniform(5, 7), 10 ** rng.uniform(5, 7))
    p_max = 10 ** rng.uniform(-1, 1)
    profiles = [RateProfile(gains_s, costs[0], caps[0]), RateProfile([gain_m], costs[1], caps[1])]
    sol = water_level(profiles, p_max)
    ours = _value(profiles, sol.widths, sol.powers)
    ref = _cvx_sumrate([gains_s, [gain_m]], costs, caps, p_max)
    assert ours >= ref * (1 - 1e-6)
    assert ours <= ref * (1 + 1e-5)
    assert sol.consumption(profiles) == pytest.approx(p_max, rel=1e-12)


def test_best_ratio_stationary():
    pr = RateProfile([2.0, 0.5], 0.3, 1.0)
    s, e = pr.best_ratio()
    ratio = lambda x: pr.rate_per_hz(x) / (x + pr.cost)
    assert ratio(s) == pytest.approx(e * (s + pr.cost) / (s + pr.cost))
    assert e == pytest.approx(pr.slope(s))
    assert all(ratio(x) <= ratio(s) + 1e-14 for x in np.linspace(1e-4, 20, 2000))


def test_best_ratio_free_adc():
    pr = RateProfile([2.0, 0.5], 0.0, 1.0)
    assert pr.best_ratio() == (0.0, 2.5)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-4, 1e4))
def test_inverse_slope(g1, g2, mu):
    pr = RateProfile([g1, g2], 1.0, 1.0)
    s = pr.inverse_slope(mu)
    if mu >= pr.slope(0.0):
        assert s == 0.0
    else:
        assert pr.slope(s) == pytest.approx(mu, rel=1e-9)


def test_unusable_profile():
    pr = RateProfile([], 1.0, 1.0)
    assert not pr.usable
    assert pr.penalized(1.0) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        RateProfile([-1.0], 1.0, 1.0)


def test_water_level_fixed_over_budget():
    pr = [RateProfile([1.0], 2.0, 1.0), RateProfile([1.0], 1.0, 1.0)]
    assert water_level(pr, 1.5, fixed=(0,)) is None


def test_water_level_nothing_usable():
    sol = water_level([RateProfile([], 1, 1), RateProfile([], 1, 1)], 1.0)
    assert sol.widths == [0.0, 0.0] and sol.powers == [0.0, 0.0]


@given(st.floats(1e-3, 10), st.floats(1e-3, 10), st.floats(1e-2, 10))
def test_penalized_is_optimal_on_grid(g, c, beta):
    pr = RateProfile([g], c, 2.0)
    w, p, v = pr.penalized(beta, p_cap=5.0)
    ww, pp = np.meshgrid(np.linspace(1e-3, 2.0, 60), np.linspace(0, 5.0, 60))
    vals = ww * np.log1p(pp * g / ww) - beta * (pp + c * ww)
    assert v >= vals.max() - 1e-9 * max(1.0, abs(vals.max()))
    assert v >= 0.0 and p <= 5.0 + 1e-12 and w <= 2.0


def test_penalized_best_sums():
    profiles = [RateProfile([3.0], 0.1, 1.0), RateProfile([1.0], 0.2, 2.0)]
    sol, total = penalized_best(profiles, 0.5)
    assert total == pytest.approx(sum(pr.penalized(0.5)[2] for pr in profiles))
    assert sol.mu == 0.5
