"""Exact concave allocation over interfaces with rate ``W * sum_i ln(1 + s g_i)``.

Every interface is described by its per-hertz rate curve ``g(s)`` in the
SNR-per-hertz ``s = P / W``, its ADC cost ``c`` (watts per hertz) and its
bandwidth cap.  The rate ``W g(P/W)`` is the perspective of a concave
function, so for a fixed power price ``mu`` each interface decouples:

* the best ratio is ``s(mu) = g'^{-1}(mu)``;
* the interface runs at full bandwidth when ``mu < e*``, is off when
  ``mu > e*``, and may take any bandwidth when ``mu == e*``, where
  ``e* = max_s g(s) / (s + c)`` is its best rate per watt.

Total consumption is monotone in ``mu``, which gives an exact water-level
search for the budget-constrained problem and a closed per-interface rule
for the linearly penalized one used by Dinkelbach's method.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

_RTOL = 4 * np.finfo(float).eps
_SERIES_CUT = 1e-3


def _phi(x):
    """``log1p(x) - x / (1 + x)`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUT
    xs = x[small]
    # sum_{k>=2} (-1)^k (k-1)/k x^k
    out[small] = xs**2 * (0.5 - xs * (2.0 / 3.0 - xs * (0.75 - xs * 0.8)))
    xl = x[~small]
    out[~small] = np.log1p(xl) - xl / (1.0 + xl)
    return out


def _root(fn, lo, hi):
    return brentq(fn, lo, hi, xtol=1e-300, rtol=_RTOL, maxiter=500)


class RateProfile:
    """Per-hertz rate curve ``g(s) = sum_i ln(1 + s g_i)`` of one interface."""

    def __init__(self, gains, cost, w_max, name=""):
        g = np.asarray(gains, dtype=float).ravel()
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite and nonnegative")
        self.gains = g[g > 0]
        self.cost = float(cost)
        self.w_max = float(w_max)
        self.name = name
        self._best = None

    @property
    def usable(self):
        return self.gains.size > 0 and self.w_max > 0

    @property
    def modes(self):
        return self.gains.size

    def rate_per_hz(self, s):
        return float(np.log1p(s * self.gains).sum())

    def slope(self, s):
        """``g'(s)``: marginal rate per watt at fixed bandwidth."""
        return float((self.gains / (1.0 + s * self.gains)).sum())

    def width_slope(self, s):
        """``g(s) - s g'(s)``: marginal rate per hertz at fixed ratio."""
        return float(_phi(s * self.gains).sum())

    def inverse_slope(self, mu):
        """Smallest ``s >= 0`` with ``g'(s) <= mu``."""
        if not self.usable or mu >= self.slope(0.0):
            return 0.0
        gmax = self.gains.max()
        if self.gains.size == 1:
            return 1.0 / mu - 1.0 / gmax
        lo = max(0.0, 1.0 / mu - 1.0 / gmax)
        hi = self.modes / mu
        while self.slope(hi) > mu:  # rounding can put g'(n / mu) a hair above mu
            hi *= 2.0
        if self.slope(lo) <= mu:
            return lo
        return _root(lambda s: self.slope(s) - mu, lo, hi)

    def best_ratio(self):
        """``(s*, e*)`` maximizing rate per consumed watt ``g(s) / (s + c)``."""
        if self._best is None:
            self._best = self._solve_best()
        return self._best

    def _solve_best(self):
        if not self.usable:
            return 0.0, 0.0
        if self.cost <= 0:
            return 0.0, self.slope(0.0)

        # stationarity of g/(s+c): c g'(s) - (g - s g') = 0, decreasing in s
        def psi(s):
            return self.cost * self.slope(s) - self.width_slope(s)

        hi = 1.0 / self.gains.max()
        while psi(hi) > 0:
            hi *= 4.0
        s = _root(psi, 0.0, hi)
        return s, self.slope(s)

    def penalized(self, beta, p_cap=math.inf):
        """Maximize ``W g(P/W) - beta (P + c W)`` over ``0 <= W <= w_max, 0 <= P <= p_cap``.

        Returns ``(W, P, value)``; an interface that cannot earn a positive
        value is switched off.
        """
        if not self.usable:
            return 0.0, 0.0, 0.0
        _, e_best = self.best_ratio()
        if beta >= e_best:
            return 0.0, 0.0, 0.0
        s = self.inverse_slope(beta)
        w, p = self.w_max, self.w_max * s
        if p > p_cap:
            p = p_cap

            # with P pinned, the value is concave in W with derivative below
            def dval(width):
                return self.width_slope(p / width) - beta * self.cost

            if dval(self.w_max) < 0:
                lo = self.w_max
                while dval(lo) <= 0:
                    lo *= 0.5
                w = _root(dval, lo, self.w_max)
        value = w * self.rate_per_hz(p / w) - beta * (p + self.cost * w)
        if value <= 0:
            return 0.0, 0.0, 0.0
        return w, p, value


@dataclass
class LevelSolution:
    """Widths and powers per profile plus the power price ``mu``."""

    widths: list
    powers: list
    mu: float

    def consumption(self, profiles):
        return sum(w * pr.cost + p for w, p, pr in zip(self.widths, self.powers, profiles))


def _consumption(profiles, mu, full, fixed):
    total = 0.0
    for i, pr in enumerate(profiles):
        if i in full or i in fixed:
            total += pr.w_max * (pr.inverse_slope(mu) + pr.cost)
    return total


def _solve_mu(profiles, p_max, full, fixed, lo, hi):
    """Root of the (decreasing) consumption in ``mu`` on ``(lo, hi)``."""

    def excess(log_mu):
        return _consumption(profiles, math.exp(log_mu), full, fixed) - p_max

    if hi is None or not math.isfinite(hi):
        hi = max(pr.slope(0.0) for i, pr in enumerate(profiles) if i in full or i in fixed)
        hi = max(hi, lo * 2 if lo > 0 else 1.0)
        while excess(math.log(hi)) > 0:
            hi *= 2.0
    if lo <= 0:
        lo = hi
        while excess(math.log(lo)) < 0:
            lo *= 0.5
    f_lo, f_hi = excess(math.log(lo)), excess(math.log(hi))
    if f_lo <= 0:
        return lo
    if f_hi >= 0:
        return hi
    return math.exp(_root(excess, math.log(lo), math.log(hi)))


def water_level(profiles, p_max, fixed=()):
    """Maximize ``sum_i W_i g_i(P_i/W_i)`` s.t. ``sum_i P_i + c_i W_i = p_max``.

    Profiles listed in ``fixed`` keep ``W = w_max``; the others choose
    their bandwidth in ``[0, w_max]``.  Returns ``None`` when the fixed
    ADC cost alone exceeds the budget.
    """
    fixed = {i for i in fixed if profiles[i].usable}
    base = sum(profiles[i].cost * profiles[i].w_max for i in fixed)
    if p_max < base or (p_max == base and fixed):
        return None
    free = [i for i, pr in enumerate(profiles) if pr.usable and i not in fixed]
    free.sort(key=lambda i: -profiles[i].best_ratio()[1])
    n = len(profiles)
    widths, ratios = [0.0] * n, [0.0] * n
    full = set()
    prev = math.inf
    mu = None
    partial = None
    for i in free:
        s_i, e_i = profiles[i].best_ratio()
        if e_i <= 0:
            break
        t_low = _consumption(profiles, e_i, full, fixed)
        if p_max <= t_low:
            mu = _solve_mu(profiles, p_max, full, fixed, e_i, prev)
            break
        t_high = t_low + profiles[i].w_max * (s_i + profiles[i].cost)
        if p_max <= t_high:
            mu = e_i
            partial = (i, (p_max - t_low) / (s_i + profiles[i].cost), s_i)
            break
        full.add(i)
        prev = e_i
    if mu is None:
        if not full and not fixed:
            return LevelSolution(widths, [0.0] * n, 0.0)
        mu = _solve_mu(profiles, p_max, full, fixed, 0.0, prev)
    for i in full | fixed:
        widths[i] = profiles[i].w_max
        ratios[i] = profiles[i].inverse_slope(mu)
    if partial is not None:
        i, w, s = partial
        widths[i] = min(w, profiles[i].w_max)
        ratios[i] = s
    powers = [w * s for w, s in zip(widths, ratios)]
    _absorb_rounding(profiles, widths, powers, p_max)
    return LevelSolution(widths, powers, mu)


def _absorb_rounding(profiles, widths, powers, p_max):
    used = sum(w * pr.cost + p for w, p, pr in zip(widths, powers, profiles))
    gap = p_max - used
    k = int(np.argmax(powers)) if powers else 0
    if powers and powers[k] > 0 and powers[k] + gap >= 0:
        powers[k] += gap


def penalized_best(profiles, beta, p_cap=math.inf):
    """Separable maximizer of ``sum_i [W_i g_i - beta (P_i + c_i W_i)]``."""
    out = [pr.penalized(beta, p_cap) for pr in profiles]
    widths = [w for w, _, _ in out]
    powers = [p for _, p, _ in out]
    return LevelSolution(widths, powers, beta), sum(v for _, _, v in out)
