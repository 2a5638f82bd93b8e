"""Rates, consumed power and energy efficiency of a candidate allocation.

Units: hertz, watts, nats/s.  Noise is normalized to unit density, so a
channel gain ``g`` means a per-hertz SNR of ``P g / W``.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels

LN2 = math.log(2.0)


@dataclass(frozen=True)
class SystemParams:
    """Budget, ADC cost per hertz (``a = c_ox 2^r_ADC``), antennas and caps."""

    p_max: float
    adc_a: float
    n_t: int
    n_r: int
    w_sub6_max: float
    w_m_max: float

    def __post_init__(self):
        for name in ("p_max", "adc_a", "w_sub6_max", "w_m_max"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be finite and > 0, got {val!r}")
        if self.n_t < 1 or self.n_r < 1:
            raise ValueError("antenna counts must be >= 1")

    @property
    def sub6_cost(self):
        """ADC watts per hertz of sub-6 bandwidth (one converter per receive antenna)."""
        return self.n_r * self.adc_a

    @property
    def mm_cost(self):
        return self.adc_a

    def replace(self, **kw):
        vals = dict(self.__dict__)
        vals.update(kw)
        return SystemParams(**vals)


@dataclass(frozen=True)
class Allocation:
    w_sub6: float = 0.0
    w_m: float = 0.0
    p_sub6: float = 0.0
    p_m: float = 0.0

    def __post_init__(self):
        for name in ("w_sub6", "w_m", "p_sub6", "p_m"):
            val = getattr(self, name)
            if val < 0 or not math.isfinite(val):
                raise ValueError(f"{name} must be finite and >= 0, got {val!r}")
        # an inactive interface carries no power
        if self.w_sub6 == 0 and self.p_sub6 != 0:
            object.__setattr__(self, "p_sub6", 0.0)
        if self.w_m == 0 and self.p_m != 0:
            object.__setattr__(self, "p_m", 0.0)

    @property
    def sub6_active(self):
        return self.w_sub6 > 0

    @property
    def mm_active(self):
        return self.w_m > 0

    @property
    def transmit_power(self):
        return self.p_sub6 + self.p_m

    def as_tuple(self):
        return (self.w_sub6, self.w_m, self.p_sub6, self.p_m)


ZERO_ALLOCATION = Allocation()


@dataclass(frozen=True)
class EvalReport:
    rate_sub6: float
    rate_m: float
    rate_total: float
    consumed_power: float
    ee: float
    feasible: bool


def _check_nonneg(w, p):
    if w < 0 or p < 0:
        raise ValueError("bandwidth and power must be nonnegative")


def rate_gains(gains, w, p):
    """``w * sum_i ln(1 + p g_i / w)``; zero at ``w == 0``."""
    _check_nonneg(w, p)
    if w == 0:
        return 0.0
    g = np.asarray(gains, dtype=float)
    return float(w * np.log1p(p * g / w).sum())


def rate_sub6_uniform(ch, w, p):
    """Sub-6 rate under the uniform covariance ``P/n_t I`` (nats/s)."""
    return rate_gains(ch.mode_gains(), w, p)


def rate_mmwave(link, w, p):
    """``w ln(1 + p A / w)`` (nats/s)."""
    return rate_gains([link.gain_A], w, p)


def consumed_power(alloc, params):
    """Transmit power of active interfaces plus ADC consumption."""
    total = params.sub6_cost * alloc.w_sub6 + params.mm_cost * alloc.w_m
    if alloc.w_sub6 > 0:
        total += alloc.p_sub6
    if alloc.w_m > 0:
        total += alloc.p_m
    return total


def bandwidth_ok(alloc, params, rtol=1e-12):
    return (
        alloc.w_sub6 <= params.w_sub6_max * (1 + rtol)
        and alloc.w_m <= params.w_m_max * (1 + rtol)
    )


def evaluate_gains(alloc, sub6_gains, gain_A, params, budget=True, rtol=1e-9):
    """Evaluate an allocation given the sub-6 per-mode gains directly.

    With ``budget=False`` feasibility only checks the bandwidth box (the
    energy-efficiency problem has no total power constraint).
    """
    r_s = rate_gains(sub6_gains, alloc.w_sub6, alloc.p_sub6)
    r_m = rate_gains([gain_A], alloc.w_m, alloc.p_m)
    total = r_s + r_m
    used = consumed_power(alloc, params)
    feasible = bandwidth_ok(alloc, params)
    if budget:
        feasible = feasible and used <= params.p_max * (1 + rtol)
    ee = total / used if used > 0 else 0.0
    return EvalReport(r_s, r_m, total, used, ee, feasible)


def evaluate(alloc, ch, link, params):
    """Full report for Problem 1 feasibility (budget and bandwidth caps)."""
    return evaluate_gains(alloc, ch.mode_gains(), link.gain_A, params)


def rate_total_grid(w_sub6, p_sub6, w_m, p_m, sub6_gains, gain_A):
    """Vectorized sum rate over arrays of allocations (broadcasting)."""
    return kernels.rate_grid(w_sub6, p_sub6, sub6_gains) + kernels.rate_grid(
        w_m, p_m, [gain_A]
    )


def to_mbps(nats_per_s):
    return nats_per_s / LN2 / 1e6


def to_bits(nats):
    return nats / LN2
