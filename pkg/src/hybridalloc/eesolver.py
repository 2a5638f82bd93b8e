"""Energy-efficiency maximization with Dinkelbach's parametric method."""
import math
from dataclasses import dataclass, field

from .allocator import RateProfile, penalized_best
from .linkmodel import Allocation, ZERO_ALLOCATION
from .sumrate import Problem, SolveReport, kkt_problem, snr_regime

BETA_FLOOR = 1e-12
DEFAULT_P_CAP = 100.0
MAX_ITER = 50


@dataclass
class DinkelbachState:
    beta: float = BETA_FLOOR
    f_value: float = 0.0
    g_value: float = 0.0
    big_f: float = math.inf
    iteration: int = 0
    history: list = field(default_factory=list)


def _inner(prob, beta, p_cap):
    if not beta >= BETA_FLOOR:
        raise ValueError(f"beta must be positive (>= {BETA_FLOOR}), got {beta}")
    sol, _ = penalized_best(prob.profiles(), beta, p_cap)
    alloc = Allocation(*(float(x) for x in (*sol.widths, *sol.powers)))
    rep = prob.evaluate(alloc, budget=False)
    return alloc, rep.rate_total, rep.consumed_power


def inner_solve(beta, ch, link, params, p_cap=DEFAULT_P_CAP):
    """Maximize ``rate - beta * consumed_power`` over the bandwidth box.

    Each interface's power is capped at ``p_cap`` so the feasible set is
    compact.  Returns ``(allocation, f, g)``.
    """
    return _inner(Problem.from_channels(ch, link, params), beta, p_cap)


def dinkelbach_problem(prob, delta=None, p_cap=DEFAULT_P_CAP, max_iter=MAX_ITER):
    """Dinkelbach iteration on a gain-level instance; see :func:`dinkelbach`."""
    state = DinkelbachState()
    warnings = []
    beta = BETA_FLOOR
    alloc, f, g = _inner(prob, beta, p_cap)
    if delta is None:
        delta = 1e-9 * f
    prev = None
    while True:
        if g <= 0 and prev is not None:
            # beta reached an interface's best rate per watt: F(beta) = 0 and
            # the previous iterate already attains the ratio beta
            alloc, f, g = prev
        big_f = f - beta * g
        state.history.append((beta, big_f))
        state.beta, state.f_value, state.g_value, state.big_f = beta, f, g, big_f
        if g <= 0:
            warnings.append("degenerate channel: nothing worth transmitting, EE is 0")
            alloc = ZERO_ALLOCATION
            break
        if big_f <= delta:
            break
        if state.iteration >= max_iter:
            warnings.append(f"Dinkelbach stopped after {max_iter} iterations with F={big_f:.3g}")
            break
        beta = f / g
        state.iteration += 1
        prev = (alloc, f, g)
        alloc, f, g = _inner(prob, beta, p_cap)
    rep = prob.evaluate(alloc, budget=False)
    if any(p >= p_cap * (1 - 1e-12) for p in (alloc.p_sub6, alloc.p_m)):
        warnings.append(f"power cap p_cap={p_cap:g} W is active at the solution")
    kkt = kkt_problem(alloc, prob, mu0=state.beta, budget=False)
    return SolveReport(
        alloc, rep, kkt, snr_regime(alloc, prob), warnings, "dinkelbach",
        {"dinkelbach": state, "delta": delta, "p_cap": p_cap},
    )


def dinkelbach(ch, link, params, delta=None, p_cap=DEFAULT_P_CAP, max_iter=MAX_ITER):
    """Maximize sum rate over consumed power (nats per joule).

    Starting from ``beta = 1e-12`` each step solves the penalized problem
    ``max f - beta g`` exactly and sets ``beta = f / g`` until
    ``F(beta) <= delta``.  ``delta`` defaults to ``1e-9`` times the rate
    of the first inner solution.  The reported ``eval.ee`` is the ratio of
    the returned allocation, i.e. the next ``beta``.
    """
    return dinkelbach_problem(Problem.from_channels(ch, link, params), delta, p_cap, max_iter)


def full_allocation(prob, transmit_power):
    """Both usable interfaces at their caps sharing a fixed transmit power equally.

    This is the "use the whole spectrum" baseline: the transmit power does
    not adapt to the bandwidth, so its EE eventually falls as the ADC cost
    grows with the cap.
    """
    on = [pr.usable for pr in prob.profiles()]
    if not any(on):
        return ZERO_ALLOCATION
    share = transmit_power / sum(on)
    p = prob.params
    return Allocation(
        p.w_sub6_max if on[0] else 0.0, p.w_m_max if on[1] else 0.0,
        share if on[0] else 0.0, share if on[1] else 0.0,
    )


def full_allocation_ee(prob, transmit_power):
    return prob.evaluate(full_allocation(prob, transmit_power), budget=False).ee


def fixed_width_ee(gains, cost, width, p_cap=DEFAULT_P_CAP, tol=1e-13):
    """Best EE of one interface forced to use exactly ``width`` hertz.

    Dinkelbach over the transmit power alone: at price ``beta`` the best
    power solves ``g'(P / width) = beta``.  Returns ``(ee, power)``.
    """
    prof = RateProfile(gains, cost, width)
    if not prof.usable or width <= 0:
        return 0.0, 0.0
    beta = BETA_FLOOR
    p = 0.0
    for _ in range(200):
        p = min(p_cap, width * prof.inverse_slope(beta))
        f = width * prof.rate_per_hz(p / width)
        g = p + cost * width
        if f - beta * g <= tol * max(f, 1e-300):
            break
        beta = f / g
    return float(f / g), float(p)
