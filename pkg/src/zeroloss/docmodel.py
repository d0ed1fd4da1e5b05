"""Density-of-classifiers model and the learning curves it implies.

D(E) = (E - e_min)^(alpha-1) (e_max - E)^(beta-1) on [e_min, e_max].  Only its
shape matters: every quantity here is a ratio of integrals of D against a
kernel, either (1-E)^n or the Boltzmann factor exp(-nE).

All integrands are handled in log space and shifted by their maximum before
exponentiation, so n in the 1e5-1e6 range neither underflows nor loses the
narrow peak near e_min.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, optimize, special

from .errors import InvalidSplit, PreconditionError, QuadratureFailure

RTOL = 1e-10
EVAL_BUDGET = 10**6
_SUBDIV = 2000


@dataclass(frozen=True)
class DocParams:
    e_min: float
    e_max: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.e_min < 1.0:
            raise PreconditionError("e_min must lie in [0, 1)")
        if not self.e_min < self.e_max <= 1.0:
            raise PreconditionError("need e_min < e_max <= 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise PreconditionError("alpha and beta must be positive")

    @property
    def width(self) -> float:
        return self.e_max - self.e_min

    @property
    def mode(self) -> float:
        """Maximiser of D when alpha, beta > 1."""
        a, b = self.alpha, self.beta
        return self.e_min + (a - 1.0) * self.width / (a + b - 2.0)


@dataclass(frozen=True)
class PointMassDoc:
    """All classifiers share one true error, e.g. under random labelling."""

    location: float

    def __post_init__(self):
        if not 0.0 <= self.location <= 1.0:
            raise PreconditionError("location must lie in [0, 1]")


Doc = Union[DocParams, PointMassDoc]


def log_density(E, params: DocParams):
    E = np.asarray(E, dtype=float)
    inside = (E >= params.e_min) & (E <= params.e_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = special.xlogy(params.alpha - 1.0, np.where(inside, E - params.e_min, 1.0))
        hi = special.xlogy(params.beta - 1.0, np.where(inside, params.e_max - E, 1.0))
    out = np.where(inside, lo + hi, -np.inf)
    return out if out.ndim else float(out)


def density(E, params: DocParams):
    """Unnormalised D(E); zero outside [e_min, e_max]."""
    return np.exp(log_density(E, params))


# --- integrals in the unit variable u, with E = e_min + width * u ---------------


def _log_kernel(u, n, params, kernel):
    E = params.e_min + params.width * u
    if kernel == "power":
        with np.errstate(divide="ignore"):
            return special.xlog1py(n, -E)
    return -n * E


def _log_g(u, n, params, kernel, drop_left=False, drop_right=False):
    """log of u^(alpha-1) (1-u)^(beta-1) K_n(E(u)), optionally without a power factor."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _log_kernel(u, n, params, kernel)
        if not drop_left:
            out = out + special.xlogy(params.alpha - 1.0, u)
        if not drop_right:
            out = out + special.xlog1py(params.beta - 1.0, -u)
    return out


def _peak(n, params, kernel):
    """Location and rough width of the maximum of log g on [0, 1]."""
    g = np.geomspace(1e-14, 0.5, 400)
    grid = np.unique(np.concatenate(([0.0, 1.0], g, 1.0 - g, np.linspace(0, 1, 401))))
    vals = _log_g(grid, n, params, kernel)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    k = int(np.argmax(vals))
    u_star = grid[k]
    if 0 < k < grid.size - 1:
        res = optimize.minimize_scalar(
            lambda t: -float(_log_g(t, n, params, kernel)),
            bounds=(grid[k - 1], grid[k + 1]),
            method="bounded",
            options={"xatol": 1e-15 + 1e-12 * u_star},
        )
        if res.success and -res.fun >= vals[k]:
            u_star = float(res.x)
    a1, b1 = params.alpha - 1.0, params.beta - 1.0
    w = params.width
    curv = 0.0
    if 0 < u_star < 1:
        curv = a1 / u_star**2 + b1 / (1 - u_star) ** 2
        if kernel == "power":
            curv += n * w**2 / (1.0 - params.e_min - w * u_star) ** 2
    widths = [1.0]
    if curv > 0:
        widths.append(1.0 / math.sqrt(curv))
    slope = n * w / (1.0 - params.e_min) if kernel == "power" else n * w
    widths.append(1.0 / (1.0 + slope))
    return u_star, min(widths)


def _pieces(u_star, s):
    pts = {0.0, 1.0, u_star}
    for k in (1.0, 4.0, 16.0, 64.0, 256.0):
        for p in (u_star - k * s, u_star + k * s, k * s, 1.0 - k * s):
            if 0.0 < p < 1.0:
                pts.add(p)
    pts = sorted(pts)
    return [(a, b) for a, b in zip(pts, pts[1:]) if b > a]


def _integrate_unit(n, params, kernel, moment, shift, u_star, s):
    """sum over pieces of int u^moment exp(log g - shift) du, with an error budget."""
    a1, b1 = params.alpha - 1.0, params.beta - 1.0
    values, errors, nevals, bad = [], [], 0, False
    for lo, hi in _pieces(u_star, s):
        if lo == 0.0 and a1 < 0:
            # u = hi * v^(1/alpha) absorbs the u^(alpha-1) singularity
            alpha = params.alpha

            def f(v, hi=hi, alpha=alpha):
                u = hi * v ** (1.0 / alpha)
                lg = _log_g(u, n, params, kernel, drop_left=True) - shift
                return u**moment * math.exp(lg) * hi**alpha / alpha

            lo_t, hi_t = 0.0, 1.0
        elif hi == 1.0 and b1 < 0:
            beta = params.beta

            def f(v, lo=lo, beta=beta):
                u = 1.0 - (1.0 - lo) * v ** (1.0 / beta)
                lg = _log_g(u, n, params, kernel, drop_right=True) - shift
                return u**moment * math.exp(lg) * (1.0 - lo) ** beta / beta

            lo_t, hi_t = 0.0, 1.0
        else:

            def f(u):
                lg = _log_g(u, n, params, kernel) - shift
                return u**moment * math.exp(lg) if lg > -745.0 else 0.0

            lo_t, hi_t = lo, hi
        val, err, info = integrate.quad(
            f, lo_t, hi_t, epsabs=0.0, epsrel=RTOL, limit=_SUBDIV, full_output=1
        )[:3]
        values.append(val)
        errors.append(err)
        nevals += info["neval"]
        bad = bad or info.get("ier", 0) != 0 and err > 0
    total = math.fsum(values)
    err = math.fsum(errors)
    if nevals > EVAL_BUDGET or not math.isfinite(total) or total <= 0 or (bad and err > RTOL * total):
        raise QuadratureFailure(
            f"quadrature did not reach rtol {RTOL} (n={n}, {params}, estimate {total!r} +- {err!r})"
        )
    return total


def _moments(n, params: DocParams, kernel="power", moments=(0, 1)):
    """(log J_0, J_k/J_0 for k in moments[1:]) with J_k = int u^k g(u) du over [0, 1]."""
    if n < 0:
        raise PreconditionError("n must be >= 0")
    u_star, s = _peak(n, params, kernel)
    # shift by the maximum of the bounded part; endpoint singular factors are left out
    drops = dict(drop_left=params.alpha < 1, drop_right=params.beta < 1)
    probe = np.concatenate(([u_star], np.linspace(0.0, 1.0, 257)))
    smooth = _log_g(probe, n, params, kernel, **drops)
    smooth = smooth[np.isfinite(smooth)]
    shift = float(smooth.max()) if smooth.size else 0.0
    j = [_integrate_unit(n, params, kernel, k, shift, u_star, s) for k in moments]
    return shift + math.log(j[0]), [jk / j[0] for jk in j[1:]]


def log_normalizer(n, params: DocParams, kernel="power") -> float:
    """log of int K_n(E) D(E) dE over [e_min, e_max]."""
    log_j0, _ = _moments(n, params, kernel, moments=(0,))
    return (params.alpha + params.beta - 1.0) * math.log(params.width) + log_j0


def log_q_n(E, n, params: DocParams):
    E = np.asarray(E, dtype=float)
    lz = log_normalizer(n, params)
    with np.errstate(divide="ignore"):
        out = special.xlog1py(n, -E) + log_density(E, params) - lz
    return out if np.ndim(out) else float(out)


def q_n(E, n, params: DocParams):
    """Normalised density of zero-training-error classifiers at true error E."""
    return np.exp(log_q_n(E, n, params))


def expected_error_quadrature(n, params: Doc) -> float:
    """Mean true error over all global minima for sample size n."""
    if isinstance(params, PointMassDoc):
        return params.location
    _, (mean_u,) = _moments(n, params, "power")
    return params.e_min + params.width * mean_u


def expected_error_closed(n, e_min, alpha, beta) -> float:
    """Closed-form learning curve, valid for e_max = 1."""
    if n < 0:
        raise PreconditionError("n must be >= 0")
    return (e_min * (beta + n) + alpha) / (alpha + beta + n)


def learning_curve(n, e_min, eta, e0):
    """e_min + (e0 - e_min) / (1 + n / eta); accepts scalars or arrays."""
    n = np.asarray(n, dtype=float)
    out = e_min + (e0 - e_min) / (1.0 + n / eta)
    return out if out.ndim else float(out)


def curve_parameters(e_min, alpha, beta):
    """(eta, e0) of the learning curve for given model exponents."""
    eta = alpha + beta
    return eta, (alpha + beta * e_min) / eta


def qn_mode(n, params: DocParams) -> float:
    """Maximiser of (1-E)^n D(E) for e_max = 1 and alpha > 1."""
    if params.e_max != 1.0:
        raise PreconditionError("closed-form mode needs e_max = 1")
    a, b = params.alpha, params.beta
    return params.e_min + (a - 1.0) * (1.0 - params.e_min) / (a + b + n - 2.0)


def log_partition(n, params: Doc) -> float:
    """log Z_n with Z_n = int exp(-nE) D(E) dE."""
    if isinstance(params, PointMassDoc):
        return -n * params.location
    return log_normalizer(n, params, kernel="boltzmann")


def dlogZ_dn(n, params: Doc) -> float:
    """d/dn log Z_n, evaluated as minus the Boltzmann-weighted mean error."""
    if isinstance(params, PointMassDoc):
        return -params.location
    _, (mean_u,) = _moments(n, params, "boltzmann")
    return -(params.e_min + params.width * mean_u)


def log_mass_below(a, params: DocParams) -> float:
    """log of int D(E) dE from e_min up to a."""
    u = min(max((a - params.e_min) / params.width, 0.0), 1.0)
    if u <= 0:
        return -math.inf
    log_beta = special.betaln(params.alpha, params.beta) + math.log(special.betainc(params.alpha, params.beta, u))
    return (params.alpha + params.beta - 1.0) * math.log(params.width) + log_beta


def log_decay_bound(E, a, n, params: DocParams) -> float:
    if not params.e_min < a < E < 1.0:
        raise InvalidSplit(f"need e_min < a < E < 1, got a={a}, E={E}")
    log_b = math.log1p(-a) - math.log1p(-E)
    return float(log_density(E, params)) - log_mass_below(a, params) - n * log_b


def decay_bound(E, a, n, params: DocParams) -> float:
    """Upper bound on q_n(E) that decays like B(a)^-n, B(a) = (1-a)/(1-E)."""
    return math.exp(log_decay_bound(E, a, n, params))


def decay_base(E, a) -> float:
    return (1.0 - a) / (1.0 - E)
