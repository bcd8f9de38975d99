"""
Mittag-Leffler function E_beta(-x), one-sided stable densities and the Laplace identities tying them together

All functions are pure. The only cache (contour quadratures of E_beta) is keyed on every input, so results do not
depend on call order.
"""

import functools
import logging
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma, gammaln, rgamma

from fracshe.utils import DomainError, check_beta, check_positive, integrate

logger = logging.getLogger(__name__)

# x**-k terms kept in the large-argument expansion; at x >= 50 the 25th term is below double precision
ASYMPTOTIC_TERMS = 24

# g_beta switches from the Kanter integral to its tail series once u^-beta drops below this
STABLE_SERIES_LEVEL = 1e-3
# the Kanter integral is truncated where its integrand has dropped this many e-folds below the peak
STABLE_CUT_LOG = 50.0


@dataclass(frozen=True)
class FracOrder:
    """
    Fractional order of the Caputo derivative, 0 < beta <= 1 (beta = 1 is the classical heat equation)
    """

    beta: float

    def __post_init__(self):
        object.__setattr__(self, "beta", check_beta(self.beta))

    @property
    def is_classical(self):
        return self.beta == 1.0

    def __float__(self):
        return self.beta


@dataclass(frozen=True)
class EvalPolicy:
    """
    Regime cutoffs and tolerances used to evaluate E_beta(-x) and the spectral kernels

    series_cutoff / asymptotic_cutoff split the argument range into power series, contour quadrature and
    asymptotic expansion. The series is only trusted while sum|terms| <= series_condition_max * |sum|.
    kernel_abs_tol bounds the dropped tail of every truncated eigenfunction expansion.
    """

    series_cutoff: float = 5.0
    asymptotic_cutoff: float = 50.0
    series_terms_max: int = 400
    quadrature_abs_tol: float = 1e-15
    quadrature_rel_tol: float = 1e-12
    series_condition_max: float = 1e3
    kernel_abs_tol: float = 5e-2

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise DomainError("; ".join(problems))

    def violations(self):
        problems = []
        if not 0.0 < self.series_cutoff < self.asymptotic_cutoff:
            problems.append(
                f"eval.series_cutoff must satisfy 0 < series_cutoff < asymptotic_cutoff, "
                f"got {self.series_cutoff!r} and {self.asymptotic_cutoff!r}"
            )
        if int(self.series_terms_max) < 1:
            problems.append(f"eval.series_terms_max must be >= 1, got {self.series_terms_max!r}")
        for name in ("quadrature_abs_tol", "quadrature_rel_tol", "kernel_abs_tol"):
            if not getattr(self, name) > 0.0:
                problems.append(f"eval.{name} must be > 0, got {getattr(self, name)!r}")
        if not self.series_condition_max >= 1.0:
            problems.append(f"eval.series_condition_max must be >= 1, got {self.series_condition_max!r}")
        return problems

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


DEFAULT_POLICY = EvalPolicy()


def _check_argument(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise DomainError(f"E_beta(-x) needs x >= 0, got {x!r}")
    return arr


# {{{ power series


def _series_terms(beta, x, terms_max, derivative=False):
    """
    Terms of sum_k (-x)^k / Gamma(1 + beta k), or of its x-derivative, computed in log space.
    Stops once a term drops below double precision relative to the largest one seen.
    """
    terms = []
    log_x = math.log(x)
    largest = 0.0
    start = 1 if derivative else 0
    for k in range(start, terms_max + start):
        if derivative:
            # d/dx (-x)^k / Gamma(1+beta k) = (-1)^k k x^(k-1) / Gamma(1+beta k)
            log_mag = math.log(k) + (k - 1) * log_x - gammaln(1.0 + beta * k)
        else:
            log_mag = k * log_x - gammaln(1.0 + beta * k)
        mag = math.exp(log_mag)
        terms.append(mag if k % 2 == 0 else -mag)
        largest = max(largest, mag)
        if k > start + 2 and mag < 1e-17 * largest:
            return terms, True
    return terms, False


def ml_neg_series(beta, x, terms_max=DEFAULT_POLICY.series_terms_max):
    """
    Compensated (math.fsum) partial sum of the defining power series of E_beta(-x)

    Exposed as an oracle; accurate only where the series is well conditioned (small x or beta near 1).
    """
    beta = check_beta(beta)
    x = float(_check_argument(x))
    if x == 0.0:
        return 1.0
    terms, _ = _series_terms(beta, x, int(terms_max))
    return math.fsum(terms)


def _series_if_stable(beta, x, policy, derivative=False):
    terms, converged = _series_terms(beta, x, int(policy.series_terms_max), derivative=derivative)
    value = math.fsum(terms)
    condition = math.fsum(abs(term) for term in terms)
    if converged and value != 0.0 and condition <= policy.series_condition_max * abs(value):
        return value
    return None


# }}}

# {{{ asymptotic expansion


def _asymptotic(beta, x, derivative=False):
    """
    E_beta(-x) ~ sum_{k>=1} (-1)^(k+1) x^-k / Gamma(1 - beta k) for large x, or its x-derivative.
    1/Gamma vanishes at the poles, which rgamma handles.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = np.arange(1, ASYMPTOTIC_TERMS + 1, dtype=float)
    coeff = rgamma(1.0 - beta * k)
    if derivative:
        signs = np.where(k % 2 == 0, 1.0, -1.0)
        terms = signs * k * coeff * np.power(x[:, None], -(k + 1.0))
    else:
        signs = np.where(k % 2 == 0, -1.0, 1.0)
        terms = signs * coeff * np.power(x[:, None], -k)
    # smallest terms first
    return np.sum(terms[:, ::-1], axis=1)


# }}}

# {{{ contour quadrature


def _contour_setup(beta, x):
    inv_beta = 1.0 / beta
    cos_b = math.cos(math.pi * beta)
    prefactor = math.sin(math.pi * beta) / (math.pi * beta)
    if x > 1.0:
        points = [1.0 / x]
    elif x < 1.0:
        points = [x]
    else:
        points = None
    return inv_beta, cos_b, prefactor, points


def _stretched(log_arg, inv_beta):
    # (e^log_arg)^(1/beta), saturated so exp(-value) underflows cleanly to zero
    power = inv_beta * log_arg
    if power > 700.0:
        return math.inf
    return math.exp(power)


@functools.lru_cache(maxsize=1 << 16)
def _ml_neg_contour(beta, x, policy):
    """
    Bromwich inversion of s^(beta-1) / (s^beta + 1) with the contour collapsed onto the branch cut:

        E_beta(-x) = sin(pi beta)/(pi beta) * int_0^inf exp(-(x u)^(1/beta)) / (u^2 + 2u cos(pi beta) + 1) du

    The half line is folded onto (0, 1] with u -> 1/u, leaving a bounded integrand.
    """
    inv_beta, cos_b, prefactor, points = _contour_setup(beta, x)
    log_x = math.log(x)

    def integrand(u):
        log_u = math.log(u)
        near = math.exp(-_stretched(log_x + log_u, inv_beta))
        far = math.exp(-_stretched(log_x - log_u, inv_beta))
        return (near + far) / (u * u + 2.0 * u * cos_b + 1.0)

    value, _ = integrate(
        integrand,
        0.0,
        1.0,
        policy.quadrature_abs_tol,
        policy.quadrature_rel_tol,
        limit=400,
        points=points,
        what=f"E_{beta}(-{x})",
    )
    return prefactor * value


@functools.lru_cache(maxsize=1 << 16)
def _ml_neg_deriv_contour(beta, x, policy):
    """
    d/dx E_beta(-x) = -sin(pi beta)/(pi beta) / (beta x) * int_0^1 [h((xu)^(1/beta)) + h((x/u)^(1/beta))] / den du,
    h(z) = z exp(-z)
    """
    inv_beta, cos_b, prefactor, points = _contour_setup(beta, x)
    log_x = math.log(x)

    def weight(z):
        return 0.0 if math.isinf(z) else z * math.exp(-z)

    def integrand(u):
        log_u = math.log(u)
        near = weight(_stretched(log_x + log_u, inv_beta))
        far = weight(_stretched(log_x - log_u, inv_beta))
        return (near + far) / (u * u + 2.0 * u * cos_b + 1.0)

    value, _ = integrate(
        integrand,
        0.0,
        1.0,
        policy.quadrature_abs_tol,
        policy.quadrature_rel_tol,
        limit=400,
        points=points,
        what=f"d/dx E_{beta}(-{x})",
    )
    return -prefactor * value / (beta * x)


# }}}


def _ml_neg_scalar(beta, x, policy):
    if x == 0.0:
        return 1.0
    if beta == 1.0:
        return math.exp(-x)
    if x >= policy.asymptotic_cutoff:
        return float(_asymptotic(beta, x)[0])
    if x <= policy.series_cutoff:
        value = _series_if_stable(beta, x, policy)
        if value is not None:
            return value
    return _ml_neg_contour(beta, x, policy)


def _ml_neg_deriv_scalar(beta, x, policy):
    if beta == 1.0:
        return -math.exp(-x)
    if x >= policy.asymptotic_cutoff:
        return float(_asymptotic(beta, x, derivative=True)[0])
    if 0.0 < x <= policy.series_cutoff:
        value = _series_if_stable(beta, x, policy, derivative=True)
        if value is not None:
            return value
    if x == 0.0:
        return -1.0 / gamma(1.0 + beta)
    return _ml_neg_deriv_contour(beta, x, policy)


def _map(scalar_fn, beta, arr, policy, derivative=False):
    out = np.empty(arr.shape, dtype=float)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    large = flat_in >= policy.asymptotic_cutoff
    if np.any(large):
        flat_out[large] = _asymptotic(beta, flat_in[large], derivative=derivative)
    for index in np.flatnonzero(~large):
        flat_out[index] = scalar_fn(beta, float(flat_in[index]), policy)
    return flat_out.reshape(arr.shape)


def ml_neg(beta, x, policy=None):
    """
    Mittag-Leffler function E_beta(-x) for x >= 0 and 0 < beta <= 1

    :param beta: fractional order in (0, 1]
    :param x: nonnegative scalar or array
    :param policy: EvalPolicy (defaults to DEFAULT_POLICY)
    :return: float for scalar input, ndarray otherwise; values in (0, 1]
    """
    beta = check_beta(beta)
    policy = policy or DEFAULT_POLICY
    arr = _check_argument(x)
    if arr.ndim == 0:
        return _ml_neg_scalar(beta, float(arr), policy)
    if beta == 1.0:
        return np.exp(-arr)
    return _map(_ml_neg_scalar, beta, arr, policy)


def ml_neg_deriv(beta, x, policy=None):
    """d/dx E_beta(-x), x >= 0; always <= 0."""
    beta = check_beta(beta)
    policy = policy or DEFAULT_POLICY
    arr = _check_argument(x)
    if arr.ndim == 0:
        return _ml_neg_deriv_scalar(beta, float(arr), policy)
    if beta == 1.0:
        return -np.exp(-arr)
    return _map(_ml_neg_deriv_scalar, beta, arr, policy, derivative=True)


def ml_dt(beta, lam, t, policy=None):
    """
    Time derivative d/dt E_beta(-lam t^beta) for lam > 0, t > 0

    Uses d/dt E_beta(-lam t^beta) = (beta x / t) * E'(x) with x = lam t^beta, so the result is never positive.
    Accepts arrays for lam or t.
    """
    beta = check_beta(beta)
    lam_arr = np.asarray(lam, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(lam_arr > 0.0)):
        raise DomainError(f"lam must be positive, got {lam!r}")
    if np.any(~(t_arr > 0.0)):
        raise DomainError(f"t must be positive, got {t!r}")
    x = lam_arr * np.power(t_arr, beta)
    result = beta * x / t_arr * ml_neg_deriv(beta, x, policy)
    if np.ndim(result) == 0:
        return float(result)
    return result


def ml_bounds(beta, x):
    """
    Two-sided bound 1/(1 + Gamma(1-beta) x) <= E_beta(-x) <= 1/(1 + x/Gamma(1+beta))

    For beta = 1 the lower bound degenerates to 0 for x > 0.
    :return: (lower, upper), floats or arrays like x
    """
    beta = check_beta(beta)
    arr = _check_argument(x)
    upper = 1.0 / (1.0 + arr / gamma(1.0 + beta))
    if beta == 1.0:
        lower = np.where(arr > 0.0, 0.0, 1.0)
    else:
        lower = 1.0 / (1.0 + gamma(1.0 - beta) * arr)
    if arr.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


# {{{ stable subordinator


def _log_kanter(beta, phi):
    """
    log of Kanter's function A(phi) = [sin(beta phi)/sin(phi)]^(1/(1-beta)) * sin((1-beta) phi)/sin(beta phi)
    A is increasing on (0, pi) from beta^(beta/(1-beta)) (1-beta) to infinity.
    """
    a = 1.0 / (1.0 - beta)
    sin_b = math.sin(beta * phi)
    sin_p = math.sin(phi)
    sin_c = math.sin((1.0 - beta) * phi)
    if sin_p <= 0.0 or sin_b <= 0.0 or sin_c <= 0.0:
        return math.inf
    return a * (math.log(sin_b) - math.log(sin_p)) + math.log(sin_c) - math.log(sin_b)


def _stable_tail_series(beta, u):
    """
    g_beta(u) = 1/pi sum_{k>=1} (-1)^(k+1) Gamma(beta k + 1)/k! sin(pi beta k) u^(-beta k - 1)
    """
    log_u = math.log(u)
    terms = []
    for k in range(1, 200):
        log_mag = gammaln(beta * k + 1.0) - gammaln(k + 1.0) - (beta * k + 1.0) * log_u
        term = math.exp(log_mag) * math.sin(math.pi * beta * k)
        terms.append(term if k % 2 == 1 else -term)
        if k > 2 and math.exp(log_mag) < 1e-17 * abs(terms[0]):
            break
    return math.fsum(terms) / math.pi


def stable_density(beta, u, policy=None):
    """
    Density g_beta(u) of the beta-stable subordinator at time 1 (Laplace transform exp(-s^beta))

    Zolotarev integral in Kanter's form:

        g_beta(u) = beta/((1-beta) pi) u^(-1/(1-beta)) int_0^pi A(phi) exp(-u^(-beta/(1-beta)) A(phi)) dphi

    The factor exp(-c A(0)) is pulled out so small u keeps full relative accuracy. Far in the tail
    (u^-beta <= STABLE_SERIES_LEVEL) the peak of the integrand sits too close to pi to resolve and the convergent
    power series in u^-beta is used instead.
    """
    beta = check_beta(beta, allow_one=False)
    u = check_positive("u", u)
    policy = policy or DEFAULT_POLICY
    if -beta * math.log(u) <= math.log(STABLE_SERIES_LEVEL):
        return _stable_tail_series(beta, u)

    a = 1.0 / (1.0 - beta)
    log_c = -beta * a * math.log(u)
    c = math.exp(log_c)
    a_min = beta ** (beta * a) * (1.0 - beta)
    log_a_min = math.log(a_min)
    log_prefactor = math.log(beta * a / math.pi) - a * math.log(u)

    # for c a_min >= 1 the integral is at most pi a_min
    if c * a_min >= 1.0 and log_prefactor - c * a_min + math.log(math.pi * a_min) < -745.0:
        return 0.0

    def log_integrand(phi):
        log_a = _log_kanter(beta, phi)
        if math.isinf(log_a) or log_a - log_a_min > 700.0:
            return -math.inf
        return log_a - c * a_min * math.expm1(log_a - log_a_min)

    def integrand(phi):
        return math.exp(log_integrand(phi))

    lo, hi = 1e-12, math.pi - 1e-12

    # the integrand peaks where A(phi) = 1/c, or at phi = 0 when 1/c <= A(0)
    def excess_log(phi):
        return _log_kanter(beta, phi) + log_c

    peak, log_peak = 0.0, log_a_min
    if 1.0 / c > a_min * (1.0 + 1e-12) and excess_log(hi) > 0.0:
        peak = brentq(excess_log, lo, hi, xtol=1e-14)
        log_peak = log_integrand(peak)

    # past the peak the integrand decreases monotonically
    def drop(phi):
        log_value = log_integrand(phi)
        if math.isinf(log_value):
            return STABLE_CUT_LOG
        return log_peak - log_value - STABLE_CUT_LOG

    start = max(peak, lo)
    cut = brentq(drop, start, hi, xtol=1e-15) if drop(hi) > 0.0 else math.pi
    points = [peak + (cut - peak) * fraction for fraction in (1.0 / 256.0, 1.0 / 64.0, 1.0 / 16.0, 0.25)]
    if 1e-9 < peak < cut:
        points.append(peak)

    rel_tol = policy.quadrature_rel_tol * 100.0
    value, _ = integrate(
        integrand,
        0.0,
        cut,
        rel_tol * math.exp(log_peak) * cut / STABLE_CUT_LOG,
        rel_tol,
        limit=400,
        points=points,
        what=f"g_{beta}({u})",
    )
    if value <= 0.0:
        return 0.0
    return math.exp(log_prefactor - c * a_min + math.log(value))


def inv_sub_density(beta, t, s, policy=None):
    """
    Density f_t(s) of the inverse stable subordinator E_t:

        f_t(s) = (t / beta) s^(-1 - 1/beta) g_beta(t s^(-1/beta))
    """
    beta = check_beta(beta, allow_one=False)
    t = check_positive("t", t)
    s = check_positive("s", s)
    g = stable_density(beta, t * s ** (-1.0 / beta), policy)
    if g == 0.0:
        return 0.0
    return math.exp(math.log(t / beta) - (1.0 + 1.0 / beta) * math.log(s) + math.log(g))


# }}}


def laplace_ml(beta, lam, theta):
    """
    Laplace transform int_0^inf exp(-theta t) E_beta(-lam t^beta) dt = theta^(beta-1) / (theta^beta + lam)
    """
    beta = check_beta(beta)
    lam = check_positive("lam", lam)
    theta = check_positive("theta", theta)
    return theta ** (beta - 1.0) / (theta**beta + lam)


def talbot_inverse(laplace_fn, t, degree=32):
    """
    Fixed-Talbot inversion of a Laplace transform (Abate & Valko contour, r = 2M/5)

    :param laplace_fn: vectorised callable of a complex ndarray
    :param t: positive time, scalar or array
    :param degree: number of contour nodes M
    :return: f(t), float or ndarray
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times <= 0.0):
        raise DomainError(f"Talbot inversion needs t > 0, got {t!r}")
    m = int(degree)
    r = 2.0 * m / 5.0
    theta = np.arange(m, dtype=float) * np.pi / m
    cot = np.zeros_like(theta)
    cot[1:] = 1.0 / np.tan(theta[1:])

    delta = np.empty(m, dtype=complex)
    delta[0] = r
    delta[1:] = r * theta[1:] * (cot[1:] + 1j)

    weight = np.empty(m, dtype=complex)
    weight[0] = 0.5 * np.exp(delta[0])
    weight[1:] = np.exp(delta[1:]) * (1.0 + 1j * theta[1:] * (1.0 + cot[1:] ** 2) - 1j * cot[1:])

    results = np.empty_like(times)
    for index, time in enumerate(times):
        values = np.asarray(laplace_fn(delta / time), dtype=complex)
        results[index] = r / (m * time) * np.real(np.dot(weight, values))
    if np.ndim(t) == 0:
        return float(results[0])
    return results
