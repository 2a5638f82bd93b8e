"""Brute-force grid search over (w_sub6, w_m, p_sub6, p_m), independent of the solvers.

Each activation pattern is searched separately on a regular grid that is
refined around the incumbent.  For the sum rate the powers live on the
budget-equality surface, so a pattern with both interfaces on is searched
over ``(log w_sub6, log w_m, t)`` with ``p_sub6 = theta R``,
``p_m = (1 - theta) R``, ``theta = 1 / (1 + 10^-t)`` and ``R`` the budget left
after the ADC cost.  Log and logistic axes resolve optima that sit
decades below the caps or take a tiny share of the power.

The reported ``resolution_bound`` uses the drop from the incumbent to its
grid neighbours at the final spacing: for a concave function of one
variable the distance from the grid maximum to the true maximum is at most
the drop to the lower neighbour, and the bound sums this over the axes.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .linkmodel import Allocation, ZERO_ALLOCATION, evaluate_gains

DEFAULT_P_CAP = 100.0
WIDTH_DECADES = 9.0
SHARE_DECADES = 8.0
SNR_DECADES_BELOW = 4.0
SNR_DECADES_ABOVE = 6.0


@dataclass(frozen=True)
class GridSpec:
    points_per_axis: int = 32
    refinement_rounds: int = 4
    shrink_factor: float = 0.25

    def __post_init__(self):
        if self.points_per_axis < 8:
            raise ValueError("points_per_axis must be >= 8")
        if not 0 < self.shrink_factor < 1:
            raise ValueError("shrink_factor must be in (0, 1)")
        if self.shrink_factor * self.points_per_axis < 2:
            raise ValueError("shrink_factor * points_per_axis must be >= 2")
        if self.refinement_rounds < 1:
            raise ValueError("refinement_rounds must be >= 1")


@dataclass
class GridResult:
    allocation: Allocation
    objective: float
    resolution_bound: float
    pattern: str = ""
    history: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.allocation, self.objective, self.resolution_bound))


def _refine(fn, domain, spec):
    """Grid maximize ``fn`` over the box ``domain``; returns (point, value, bound, history).

    ``fn`` takes one broadcastable array per axis and returns objective
    values with ``-inf`` marking infeasible points.  Ties go to the first
    index in C order.
    """
    n = spec.points_per_axis
    lo = np.array([d[0] for d in domain], dtype=float)
    hi = np.array([d[1] for d in domain], dtype=float)
    box_lo, box_hi = lo.copy(), hi.copy()
    best_x, best_v = None, -math.inf
    history = []
    step = (hi - lo) / (n - 1)
    for _ in range(spec.refinement_rounds):
        axes = [np.linspace(a, b, n) for a, b in zip(box_lo, box_hi)]
        step = (box_hi - box_lo) / (n - 1)
        vals = fn(*np.ix_(*axes))
        k = int(np.argmax(vals))
        v = float(vals.flat[k])
        if v > best_v:
            idx = np.unravel_index(k, vals.shape)
            best_x = np.array([ax[i] for ax, i in zip(axes, idx)])
            best_v = v
        history.append(best_v)
        if best_x is None:
            break
        half = spec.shrink_factor * (box_hi - box_lo) / 2.0
        box_lo = np.clip(best_x - half, lo, hi)
        box_hi = np.clip(best_x + half, lo, hi)
    if best_x is None:
        return None, -math.inf, 0.0, history
    bound = 0.0
    for i in range(len(domain)):
        drops = []
        for sgn in (-1.0, 1.0):
            x = best_x.copy()
            x[i] = x[i] + sgn * step[i]
            if step[i] <= 0 or x[i] < lo[i] or x[i] > hi[i]:
                continue
            v = float(np.asarray(fn(*x)).ravel()[0])
            if math.isfinite(v):
                drops.append(max(0.0, best_v - v))
        bound += max(drops, default=0.0)
    return best_x, best_v, bound, history


def _combine(results):
    """Best pattern, with a bound covering every pattern's own uncertainty."""
    best = max(results, key=lambda r: r[1])
    ceiling = max(r[1] + r[2] for r in results)
    return best, max(0.0, ceiling - best[1])


def _rate(w, p, gains):
    if gains.size == 0:
        return np.zeros(np.broadcast_shapes(np.shape(w), np.shape(p)))
    return kernels.rate_grid(w, p, gains)


def _share(t):
    """Logistic map of ``t`` (decades) onto the open interval (0, 1)."""
    return 1.0 / (1.0 + 10.0 ** (-np.asarray(t, dtype=float)))


def _positive(gains):
    g = np.asarray(gains, dtype=float).ravel()
    return g[g > 0]


def grid_search_sumrate_gains(sub6_gains, gain_A, params, spec=GridSpec()):
    """Grid oracle for the power-constrained sum rate on a gain-level instance.

    Bandwidths are searched on a log scale over ``WIDTH_DECADES`` decades
    below ``min(cap, p_max / c)``; the power split is on a logistic axis.
    """
    g_s = _positive(sub6_gains)
    g_m = _positive([gain_A])
    c_s, c_m, pm = params.sub6_cost, params.mm_cost, params.p_max
    top_s = math.log10(min(params.w_sub6_max, pm / c_s))
    top_m = math.log10(min(params.w_m_max, pm / c_m))
    dom_s = (top_s - WIDTH_DECADES, top_s)
    dom_m = (top_m - WIDTH_DECADES, top_m)

    def one(cost, gains):
        def fn(u):
            w = 10.0**u
            p = pm - cost * w
            return np.where(p >= 0, _rate(w, np.clip(p, 0.0, None), gains), -math.inf)
        return fn

    def both(us, um, t):
        ws, wm = 10.0**us, 10.0**um
        th = _share(t)
        r = pm - c_s * ws - c_m * wm
        rc = np.clip(r, 0.0, None)
        val = _rate(ws, th * rc, g_s) + _rate(wm, (1.0 - th) * rc, g_m)
        return np.where(r >= 0, val, -math.inf)

    results = [("zero", 0.0, 0.0, (ZERO_ALLOCATION, [0.0]))]
    if g_s.size:
        x, v, b, h = _refine(one(c_s, g_s), [dom_s], spec)
        if x is not None:
            w = 10.0 ** x[0]
            results.append(("sub6", v, b, (Allocation(w, 0.0, max(pm - c_s * w, 0.0), 0.0), h)))
    if g_m.size:
        x, v, b, h = _refine(one(c_m, g_m), [dom_m], spec)
        if x is not None:
            w = 10.0 ** x[0]
            results.append(("mmwave", v, b, (Allocation(0.0, w, 0.0, max(pm - c_m * w, 0.0)), h)))
    if g_s.size and g_m.size:
        x, v, b, h = _refine(both, [dom_s, dom_m, (-SHARE_DECADES, SHARE_DECADES)], spec)
        if x is not None:
            ws, wm = 10.0 ** x[0], 10.0 ** x[1]
            r = max(pm - c_s * ws - c_m * wm, 0.0)
            th = float(_share(x[2]))
            results.append(("both", v, b, (Allocation(ws, wm, th * r, (1.0 - th) * r), h)))
    best, bound = _combine(results)
    alloc, hist = best[3]
    rep = evaluate_gains(alloc, g_s, gain_A, params)
    return GridResult(alloc, rep.rate_total, bound, best[0], hist)


def grid_search_sumrate(ch, link, params, spec=GridSpec()):
    """Grid oracle for the sum rate; returns ``(allocation, objective, resolution_bound)``."""
    return grid_search_sumrate_gains(ch.mode_gains(), link.gain_A, params, spec)


def grid_search_ee_gains(sub6_gains, gain_A, params, spec=GridSpec(), p_cap=DEFAULT_P_CAP):
    """Grid oracle for the EE ratio over the box (bandwidth caps, powers up to ``p_cap``).

    Each active interface is searched over log bandwidth and log SNR per
    hertz ``s = P / W``.  With both on, the 4-D grid is the broadcast
    combination of the two separable 2-D grids.
    """
    g_s = _positive(sub6_gains)
    g_m = _positive([gain_A])
    parts = []
    for gains, cost, cap in ((g_s, params.sub6_cost, params.w_sub6_max),
                             (g_m, params.mm_cost, params.w_m_max)):
        if gains.size == 0:
            parts.append(None)
            continue
        top = math.log10(cap)
        s_mid = -math.log10(gains.max())
        parts.append((gains, cost, [(top - WIDTH_DECADES, top),
                                    (s_mid - SNR_DECADES_BELOW, s_mid + SNR_DECADES_ABOVE)]))

    def part(k, u, v):
        gains, cost, _ = parts[k]
        w, s = 10.0**u, 10.0**v
        p = w * s
        return _rate(w, p, gains), cost * w + p, p <= p_cap

    def ratio(num, den, ok):
        return np.where(ok, num / den, -math.inf)

    def single(k):
        def fn(u, v):
            r, used, ok = part(k, u, v)
            return ratio(r, used, ok)
        return fn

    def both(us, vs, um, vm):
        r_s, u_s, ok_s = part(0, us, vs)
        r_m, u_m, ok_m = part(1, um, vm)
        return ratio(r_s + r_m, u_s + u_m, ok_s & ok_m)

    def to_alloc(k, u, v):
        w = 10.0**u
        return (w, w * 10.0**v) if k is not None else (0.0, 0.0)

    results = [("zero", 0.0, 0.0, (ZERO_ALLOCATION, [0.0]))]
    for k, name in ((0, "sub6"), (1, "mmwave")):
        if parts[k] is None:
            continue
        x, v, b, h = _refine(single(k), parts[k][2], spec)
        if x is not None:
            w, p = to_alloc(k, *x)
            alloc = Allocation(w, 0.0, p, 0.0) if k == 0 else Allocation(0.0, w, 0.0, p)
            results.append((name, v, b, (alloc, h)))
    if parts[0] is not None and parts[1] is not None:
        x, v, b, h = _refine(both, parts[0][2] + parts[1][2], spec)
        if x is not None:
            ws, ps = to_alloc(0, x[0], x[1])
            wm, pm = to_alloc(1, x[2], x[3])
            results.append(("both", v, b, (Allocation(ws, wm, ps, pm), h)))
    best, bound = _combine(results)
    alloc, hist = best[3]
    rep = evaluate_gains(alloc, g_s, gain_A, params, budget=False)
    return GridResult(alloc, rep.ee, bound, best[0], hist)


def grid_search_ee(ch, link, params, spec=GridSpec(), p_cap=DEFAULT_P_CAP):
    """Grid oracle for EE; returns ``(allocation, ee, resolution_bound)``."""
    return grid_search_ee_gains(ch.mode_gains(), link.gain_A, params, spec, p_cap)


def patterns():
    """Activation patterns searched by the sum-rate oracle."""
    return list(itertools.product((False, True), repeat=2))
