"""Closed-form generalization bounds and their sample-size inverses.

Everything is evaluated in log space so large d and n never overflow.
"""

import math

from .errors import NoSolution, PreconditionError

FORMS = ("power", "exponential")
_N_CAP = 2**63


def _check_eps(epsilon, allow_zero=False):
    lo_ok = epsilon >= 0 if allow_zero else epsilon > 0
    if not (lo_ok and epsilon <= 1):
        raise PreconditionError("epsilon must lie in (0, 1]")


def _form(form):
    if form in ("exp", "exponential"):
        return "exponential"
    if form in ("pow", "power"):
        return "power"
    raise PreconditionError(f"unknown bound form {form!r}")


def log_vc_bound(d, n, epsilon) -> float:
    """log of 2 (2 e n / d)^d exp(-epsilon n / 2)."""
    if d < 1:
        raise PreconditionError("VC dimension must be >= 1")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    _check_eps(epsilon, allow_zero=True)
    return math.log(2.0) + d * (math.log(2.0 * n / d) + 1.0) - 0.5 * epsilon * n


def vc_bound(d, n, epsilon) -> float:
    """Uniform VC bound on Pr(some zero-training-error h has E(h) >= epsilon).

    Values above 1 are returned as is (the bound is vacuous there).
    """
    lb = log_vc_bound(d, n, epsilon)
    return math.exp(lb) if lb < 709.0 else math.inf


def vc_min_n(d, epsilon, delta) -> int:
    """Smallest n on the decreasing tail with vc_bound(d, n, epsilon) <= delta.

    The bound rises until n = 2d/epsilon and falls afterwards; the search
    starts at that maximiser, doubles, then bisects.  If the bound never
    exceeds delta the answer is 1.
    """
    _check_eps(epsilon)
    if not 0 < delta <= 1:
        raise PreconditionError("delta must lie in (0, 1]")
    log_delta = math.log(delta)
    start = max(1, math.floor(2.0 * d / epsilon))
    peak = max(log_vc_bound(d, start, epsilon), log_vc_bound(d, start + 1, epsilon))
    if peak <= log_delta:
        return 1
    lo = start  # bound(lo) > delta
    hi = max(2 * lo, 2)
    while log_vc_bound(d, hi, epsilon) > log_delta:
        lo = hi
        hi *= 2
        if hi > _N_CAP:
            raise NoSolution("bound never drops below delta")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if log_vc_bound(d, mid, epsilon) > log_delta:
            lo = mid
        else:
            hi = mid
    return hi


def frac_bound(R, n, epsilon, form="exponential") -> float:
    """Bound on the mean fraction of bad global minima: R (1-eps)^n or R exp(-eps n)."""
    if R < 0:
        raise PreconditionError("R must be >= 0")
    if n < 0:
        raise PreconditionError("n must be >= 0")
    _check_eps(epsilon, allow_zero=True)
    if R == 0:
        return 0.0
    if _form(form) == "exponential":
        return R * math.exp(-epsilon * n)
    if epsilon == 1:
        return R if n == 0 else 0.0
    return R * math.exp(n * math.log1p(-epsilon))


def frac_min_n(R, epsilon, delta, form="exponential") -> int:
    """Smallest n with frac_bound(R, n, epsilon, form) <= delta; 0 when R <= delta."""
    _check_eps(epsilon)
    if not delta > 0:
        raise PreconditionError("delta must be positive")
    if R <= delta:
        return 0
    form = _form(form)
    if form == "exponential":
        n = math.ceil(math.log(R / delta) / epsilon)
    elif epsilon == 1:
        return 1
    else:
        n = math.ceil(math.log(delta / R) / math.log1p(-epsilon))
    # guard against the ceiling landing one off after rounding
    while n > 0 and frac_bound(R, n - 1, epsilon, form) <= delta:
        n -= 1
    while frac_bound(R, n, epsilon, form) > delta:
        n += 1
    return n


def quartile_eps(R, n, q=0.25):
    """Error level exceeded by at most a fraction q of global minima, on average.

    Returns (1 - (q/R)^(1/n), ln(R/q)/n), the second being the looser form;
    both are clamped to [0, 1].
    """
    if not 0 < q < 1:
        raise PreconditionError("q must lie in (0, 1)")
    if not R > 0:
        raise PreconditionError("R must be positive")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    log_ratio = math.log(R / q)
    tight = -math.expm1(-log_ratio / n)
    loose = log_ratio / n
    clamp = lambda v: min(1.0, max(0.0, v))
    return clamp(tight), clamp(loose)


def volume_ratio(total, perfect) -> float:
    """R = (|H| - |H0|) / |H0|."""
    if perfect <= 0 or total < perfect:
        raise PreconditionError("need 0 < |H0| <= |H|")
    return (total - perfect) / perfect
