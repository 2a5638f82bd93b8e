"""Power-constrained sum-rate maximization across the two interfaces.

The solver enumerates candidate allocations (high-SNR closed forms, the
low-SNR single-interface rule, single-interface optima and the exact
water-level solution), evaluates each with the link model and keeps the
best feasible one.  KKT residuals of the winner certify optimality.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .allocator import RateProfile, water_level
from .linkmodel import Allocation, ZERO_ALLOCATION, consumed_power, evaluate_gains
from .specialfn import omega

HIGH_SNR_THRESHOLD = 10.0
LOW_SNR_THRESHOLD = 0.1
TIE_RTOL = 1e-9
LOW_SNR_ADC_SHARE = 0.01
CAP_RTOL = 1e-12


class RankDeficientChannel(ValueError):
    """A closed form needs every sub-6 eigenmode gain to be positive."""


class SolveMode(enum.Enum):
    AUTO = "auto"
    HIGH_SNR = "high_snr"
    LOW_SNR = "low_snr"
    NUMERIC = "numeric"


class SnrRegime(enum.Enum):
    HIGH = "High"
    LOW = "Low"
    MIXED = "Mixed"


class ActiveCase(enum.Enum):
    FULL_SUB6 = "FullSub6"
    FULL_MMWAVE = "FullMmWave"
    SUB6_ONLY = "Sub6Only"
    MMWAVE_ONLY = "MmWaveOnly"
    NUMERIC_INTERIOR = "NumericInterior"


@dataclass(frozen=True)
class ClosedFormConstants:
    """Wright-omega constants of the high-SNR closed forms.

    ``B`` fixes the mmWave power/bandwidth ratio when the sub-6 band is
    full, ``D`` the sub-6 ratio when the mmWave band is full; ``C`` and
    ``E`` are the watts per hertz charged to the full band in each case.
    """

    B: float
    C: float
    D: float
    E: float


@dataclass(frozen=True)
class KktDiagnostics:
    multipliers: tuple
    stationarity_residuals: tuple
    slackness_residuals: tuple
    active_case: ActiveCase

    @property
    def max_residual(self):
        vals = self.stationarity_residuals + self.slackness_residuals
        return max((abs(v) for v in vals), default=0.0)


@dataclass
class SolveReport:
    allocation: Allocation
    eval: object
    kkt: KktDiagnostics
    snr_regime: SnrRegime
    warnings: list = field(default_factory=list)
    candidate: str = ""
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Problem:
    """A sum-rate instance reduced to per-mode gains.

    ``sub6_gains`` are the per-hertz SNR gains of the sub-6 eigenmodes
    (``lambda_i^2 / n_t`` for the uniform covariance) and ``gain_A`` the
    mmWave beamformed gain.
    """

    sub6_gains: np.ndarray
    gain_A: float
    params: object

    @classmethod
    def from_channels(cls, ch, link, params):
        return cls(np.asarray(ch.mode_gains(), dtype=float), float(link.gain_A), params)

    def profiles(self):
        p = self.params
        return [
            RateProfile(self.sub6_gains, p.sub6_cost, p.w_sub6_max, "sub6"),
            RateProfile([self.gain_A], p.mm_cost, p.w_m_max, "mmwave"),
        ]

    def evaluate(self, alloc, budget=True):
        return evaluate_gains(alloc, self.sub6_gains, self.gain_A, self.params, budget)


def _alloc_from_level(sol):
    return Allocation(sol.widths[0], sol.widths[1], sol.powers[0], sol.powers[1])


def closed_form_constants(ch, link, params):
    return _constants(Problem.from_channels(ch, link, params))


def _constants(prob):
    a, n_r = prob.params.adc_a, prob.params.n_r
    gains = prob.sub6_gains
    n = int(np.count_nonzero(gains > 0))
    B = omega(math.log(a * prob.gain_A) - 1.0) if prob.gain_A > 0 else math.nan
    C = n_r * a + n * a / B if n and B == B else math.nan
    if gains.size and np.all(gains > 0):
        D = omega(float(np.mean(np.log(gains))) + math.log(n_r * a) - 1.0)
        E = a + n_r * a / (n * D)
    else:
        D = E = math.nan
    return ClosedFormConstants(B, C, D, E)


def _face_resolve(prob):
    """Both bandwidths at their caps; powers re-solved exactly."""
    sol = water_level(prob.profiles(), prob.params.p_max, fixed=(0, 1))
    if sol is None:
        return None
    return _alloc_from_level(sol)


def _case1(prob):
    p = prob.params
    a, w_s = p.adc_a, p.w_sub6_max
    gains = prob.sub6_gains
    n = int(np.count_nonzero(gains > 0))
    if prob.gain_A <= 0 or n == 0:
        return None
    k = _constants(prob)
    p_s = max(0.0, n * a * w_s / k.B)
    head = p.p_max - k.C * w_s
    p_m = max(0.0, head / (k.B + 1.0))
    w_m = max(0.0, head / (a + a / k.B))
    if w_m > p.w_m_max:
        return _face_resolve(prob)
    return Allocation(w_s, w_m, p_s, p_m)


def _case2(prob):
    p = prob.params
    a, n_r, w_m = p.adc_a, p.n_r, p.w_m_max
    gains = prob.sub6_gains
    if gains.size == 0 or np.any(gains <= 0):
        raise RankDeficientChannel("a zero sub-6 singular value makes the log-mean diverge")
    if prob.gain_A <= 0:
        return None
    n = gains.size
    k = _constants(prob)
    p_m = max(0.0, n_r * a * w_m / (n * k.D))
    head = p.p_max - k.E * w_m
    p_s = max(0.0, head / (k.D + 1.0))
    w_s = max(0.0, head * k.D / (n_r * a * (1.0 + k.D)))
    if w_s > p.w_sub6_max:
        return _face_resolve(prob)
    return Allocation(w_s, w_m, p_s, p_m)


def solve_case1(ch, link, params):
    """High-SNR closed form with the full sub-6 band (mmWave band interior)."""
    return _case1(Problem.from_channels(ch, link, params))


def solve_case2(ch, link, params):
    """High-SNR closed form with the full mmWave band (sub-6 band interior).

    Raises:
        RankDeficientChannel: if any sub-6 singular value is zero.
    """
    return _case2(Problem.from_channels(ch, link, params))


def _low_snr(prob):
    p = prob.params
    slope_s = float(prob.sub6_gains.sum())
    slope_m = prob.gain_A
    if slope_s <= 0 and slope_m <= 0:
        return ZERO_ALLOCATION
    use_sub6 = slope_s >= slope_m  # ties go to sub-6
    cost = p.sub6_cost if use_sub6 else p.mm_cost
    cap = p.w_sub6_max if use_sub6 else p.w_m_max
    w = min(cap, LOW_SNR_ADC_SHARE * p.p_max / cost) if cost > 0 else cap
    power = p.p_max - cost * w
    if use_sub6:
        return Allocation(w_sub6=w, p_sub6=power)
    return Allocation(w_m=w, p_m=power)


def solve_low_snr(ch, link, params):
    """Send all power over the interface with the larger low-SNR slope.

    Slopes are ``sum_i lambda_i^2 / n_t`` for sub-6 and ``A`` for mmWave.
    The winner gets the bandwidth whose ADC cost is 1% of the budget
    (capped), and the rest of the budget as transmit power.
    """
    return _low_snr(Problem.from_channels(ch, link, params))


def _single(prob, which):
    profiles = prob.profiles()
    if which == 0:
        profiles[1] = RateProfile([], 0.0, 0.0, "mmwave")
    else:
        profiles[0] = RateProfile([], 0.0, 0.0, "sub6")
    sol = water_level(profiles, prob.params.p_max)
    return _alloc_from_level(sol)


def _numeric(prob):
    return _alloc_from_level(water_level(prob.profiles(), prob.params.p_max))


def _rebalance(alloc, params):
    """Put any unused budget into the power of an active interface."""
    spare = params.p_max - consumed_power(alloc, params)
    if spare <= params.p_max * 1e-12 or alloc.transmit_power <= 0:
        return alloc, None
    if alloc.sub6_active:
        new = Allocation(alloc.w_sub6, alloc.w_m, alloc.p_sub6 + spare, alloc.p_m)
        where = "p_sub6"
    else:
        new = Allocation(alloc.w_sub6, alloc.w_m, alloc.p_sub6, alloc.p_m + spare)
        where = "p_m"
    return new, f"rebalanced {spare:.6g} W of unused budget into {where}"


def _candidates(prob, mode):
    names = {
        SolveMode.AUTO: ("case1", "case2", "sub6_only", "mmwave_only", "low_snr", "numeric"),
        SolveMode.HIGH_SNR: ("case1", "case2"),
        SolveMode.LOW_SNR: ("low_snr",),
        SolveMode.NUMERIC: ("numeric",),
    }[mode]
    makers = {
        "case1": _case1,
        "case2": _case2,
        "sub6_only": lambda pr: _single(pr, 0),
        "mmwave_only": lambda pr: _single(pr, 1),
        "low_snr": _low_snr,
        "numeric": _numeric,
    }
    notes = []
    out = []
    for name in names:
        try:
            alloc = makers[name](prob)
        except RankDeficientChannel as exc:
            notes.append(f"{name}: rank-deficient channel, deferred to numeric ({exc})")
            continue
        if alloc is None:
            continue
        alloc, msg = _rebalance(alloc, prob.params)
        out.append((name, alloc, [f"{name}: {msg}"] if msg else []))
    return out, notes


def _pattern_rank(alloc):
    active = int(alloc.sub6_active) + int(alloc.mm_active)
    # fewer active interfaces first, then sub-6 over mmWave
    return (active, 0 if alloc.sub6_active or not alloc.mm_active else 1)


def _pick(scored):
    best = None
    for item in scored:
        name, alloc, rep, _ = item
        if best is None:
            best = item
            continue
        b_rate = best[2].rate_total
        scale = max(abs(b_rate), abs(rep.rate_total), 1e-300)
        if rep.rate_total > b_rate + TIE_RTOL * scale:
            best = item
        elif abs(rep.rate_total - b_rate) <= TIE_RTOL * scale:
            if _pattern_rank(alloc) < _pattern_rank(best[1]):
                best = item
    return best


def snr_regime(alloc, prob):
    snrs = []
    if alloc.sub6_active:
        snrs.append(alloc.p_sub6 * float(prob.sub6_gains.sum()) / alloc.w_sub6)
    if alloc.mm_active:
        snrs.append(alloc.p_m * prob.gain_A / alloc.w_m)
    if snrs and all(x >= HIGH_SNR_THRESHOLD for x in snrs):
        return SnrRegime.HIGH
    if not snrs or all(x <= LOW_SNR_THRESHOLD for x in snrs):
        return SnrRegime.LOW
    return SnrRegime.MIXED


def solve_problem(prob, mode=SolveMode.AUTO):
    """Solve a gain-level instance; see :func:`solve`."""
    mode = SolveMode(mode)
    cands, warnings = _candidates(prob, mode)
    scored = []
    for name, alloc, notes in cands:
        rep = prob.evaluate(alloc)
        if rep.feasible:
            scored.append((name, alloc, rep, notes))
    if not scored:
        alloc = ZERO_ALLOCATION
        warnings.append("no feasible candidate: returning the all-zero allocation")
        rep = prob.evaluate(alloc)
        name = "zero"
    else:
        name, alloc, rep, notes = _pick(scored)
        warnings.extend(notes)
    regime = snr_regime(alloc, prob)
    if name in ("case1", "case2") and regime is not SnrRegime.HIGH:
        warnings.append(f"{name} closed form used outside the high-SNR regime ({regime.value})")
    if name == "low_snr" and regime is not SnrRegime.LOW:
        warnings.append(f"low-SNR rule used outside the low-SNR regime ({regime.value})")
    kkt = kkt_problem(alloc, prob)
    return SolveReport(alloc, rep, kkt, regime, warnings, name)


def solve(ch, link, params, mode=SolveMode.AUTO):
    """Best feasible allocation for the power-constrained sum-rate problem.

    ``mode`` restricts the candidate set: ``HIGH_SNR`` uses the closed
    forms only, ``LOW_SNR`` the single-interface rule, ``NUMERIC`` the
    exact water-level solution, and ``AUTO`` all of them.
    """
    return solve_problem(Problem.from_channels(ch, link, params), mode)


# --- KKT certificate -------------------------------------------------------


def _rel(lhs, rhs):
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0 else (lhs - rhs) / scale


class _Model:
    """Marginals of one interface, exact or under the high-SNR approximation."""

    def __init__(self, profile, high_snr):
        self.pr = profile
        self.high = high_snr

    def d_power(self, s):
        if self.high:
            return self.pr.modes / s if s > 0 else math.inf
        return self.pr.slope(s)

    def d_width(self, s):
        if self.high:
            return float(np.log(s * self.pr.gains).sum()) - self.pr.modes
        return self.pr.width_slope(s)


def kkt_problem(alloc, prob, high_snr=False, mu0=None, budget=True):
    """KKT multipliers and relative residuals of ``alloc`` for ``prob``.

    ``mu0`` overrides the recovered power price (used for the penalized
    problem of Dinkelbach's method, where ``budget`` is False).
    """
    profiles = prob.profiles()
    models = [_Model(pr, high_snr) for pr in profiles]
    widths = (alloc.w_sub6, alloc.w_m)
    powers = (alloc.p_sub6, alloc.p_m)
    ratios = [p / w if w > 0 else 0.0 for w, p in zip(widths, powers)]
    if mu0 is None:
        mu0 = 0.0
        for i in (1, 0):
            if widths[i] > 0 and powers[i] > 0 and profiles[i].usable:
                mu0 = models[i].d_power(ratios[i])
                break
    mu_w = [0.0, 0.0]
    mu_p = [0.0, 0.0]
    stat_w = [0.0, 0.0]
    stat_p = [0.0, 0.0]
    for i, (pr, md) in enumerate(zip(profiles, models)):
        if widths[i] <= 0 or not pr.usable:
            # reduced system: an inactive interface must not pay at price mu0
            e_best = pr.best_ratio()[1]
            stat_w[i] = max(0.0, _rel(e_best, mu0)) if e_best > 0 else 0.0
            continue
        s = ratios[i]
        dp = md.d_power(s)
        if powers[i] > 0:
            stat_p[i] = _rel(dp, mu0)
        else:
            mu_p[i] = mu0 - dp
            stat_p[i] = min(0.0, _rel(mu0, dp))
        dw = md.d_width(s)
        charge = pr.cost * mu0
        if widths[i] >= pr.w_max * (1 - CAP_RTOL):
            mu_w[i] = dw - charge
            stat_w[i] = min(0.0, _rel(dw, charge))
        else:
            stat_w[i] = _rel(dw, charge)
    used = consumed_power(alloc, prob.params)
    slack0 = 0.0
    if budget and mu0 > 0:
        slack0 = (prob.params.p_max - used) / prob.params.p_max
    multipliers = (
        max(mu0, 0.0), max(mu_w[0], 0.0), max(mu_w[1], 0.0), max(mu_p[0], 0.0), max(mu_p[1], 0.0)
    )
    slack = (
        slack0,
        0.0 if mu_w[0] <= 0 else (prob.params.w_sub6_max - widths[0]) / prob.params.w_sub6_max,
        0.0 if mu_w[1] <= 0 else (prob.params.w_m_max - widths[1]) / prob.params.w_m_max,
        0.0 if mu_p[0] <= 0 else powers[0],
        0.0 if mu_p[1] <= 0 else powers[1],
    )
    return KktDiagnostics(
        multipliers,
        (stat_w[0], stat_p[0], stat_w[1], stat_p[1]),
        slack,
        classify(alloc, prob.params),
    )


def kkt_residuals(alloc, ch, link, params, high_snr=False):
    """KKT certificate of ``alloc`` for the sum-rate problem.

    Residuals are relative: each stationarity entry is the mismatch of its
    two sides over the larger of them, the budget slack is over ``p_max``.
    With ``high_snr=True`` the marginals use ``log(1 + x) ~ log(x)``, the
    model under which the closed forms are exact.
    """
    return kkt_problem(alloc, Problem.from_channels(ch, link, params), high_snr)


def classify(alloc, params):
    if alloc.sub6_active and not alloc.mm_active:
        return ActiveCase.SUB6_ONLY
    if alloc.mm_active and not alloc.sub6_active:
        return ActiveCase.MMWAVE_ONLY
    if not alloc.sub6_active and not alloc.mm_active:
        return ActiveCase.NUMERIC_INTERIOR
    if alloc.w_sub6 >= params.w_sub6_max * (1 - CAP_RTOL):
        return ActiveCase.FULL_SUB6
    if alloc.w_m >= params.w_m_max * (1 - CAP_RTOL):
        return ActiveCase.FULL_MMWAVE
    return ActiveCase.NUMERIC_INTERIOR
