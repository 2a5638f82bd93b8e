"""Scalar special functions used by the closed-form allocations.

All logarithms are natural; rates are in nats.
"""
import math
from dataclasses import dataclass

_MAX_ITER = 100


@dataclass(frozen=True)
class OmegaResult:
    value: float
    residual: float
    iterations: int


def _bracket(z):
    # w + ln w = z with w > 0; bounds follow from monotonicity of w + ln w
    if z >= 1.0:
        return max(1.0, z - math.log(z)), z
    return math.exp(z - 1.0), math.exp(z)


def _initial_guess(z):
    if z < 0.0:
        return math.exp(z)
    if z >= 1.0:
        return z
    return 0.5


def wright_omega(z):
    """Real Wright omega: the unique ``w > 0`` with ``w + ln(w) = z``.

    Safeguarded Newton iteration inside a monotonicity bracket.  The result
    carries the final residual ``w + ln(w) - z`` and the iteration count.

    Raises:
        ValueError: if ``z`` is not finite.
    """
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"wright_omega needs a finite argument, got {z!r}")
    lo, hi = _bracket(z)
    w = min(max(_initial_guess(z), lo), hi)
    if w == 0.0:
        # exp(z) underflowed; the omega value is below the smallest double
        return OmegaResult(0.0, -math.inf, 0)
    tol = 1e-14 * max(1.0, abs(z))
    it = 0
    for it in range(1, _MAX_ITER + 1):
        f = w + math.log(w) - z
        if f > 0.0:
            hi = min(hi, w)
        else:
            lo = max(lo, w)
        if abs(f) <= tol:
            break
        # Newton in w: f' = 1 + 1/w
        step = f * w / (w + 1.0)
        nxt = w - step
        if not lo < nxt < hi:
            nxt = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        if nxt == w:
            break
        w = nxt
    return OmegaResult(w, w + math.log(w) - z, it)


def omega(z):
    """Shorthand for ``wright_omega(z).value``."""
    return wright_omega(z).value


def rate_kernel(x, c):
    """``x * ln(1 + c / x)`` with the convention ``rate_kernel(0, c) = 0``.

    Increasing and concave in ``x`` for fixed ``c``; this is the per-unit
    shape of ``W log(1 + P g / W)``.
    """
    if x < 0 or c < 0:
        raise ValueError("rate_kernel is defined for x >= 0 and c >= 0")
    if x == 0:
        return 0.0
    return x * math.log1p(c / x)
