"""
Dirichlet eigenbasis on (0, L) and the spectral kernels built from it

    p_D(t, x, y) = sum_n exp(-lambda_n t) phi_n(x) phi_n(y)
    G_D(t, x, y) = sum_n E_beta(-lambda_n t^beta) phi_n(x) phi_n(y)

with lambda_n = (n pi / L)^2 and phi_n(x) = sqrt(2/L) sin(n pi x / L). Every series is truncated at n_modes and
the dropped tail is bounded before a value is returned.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, gamma

from fracshe.special_fn import DEFAULT_POLICY, ml_dt, ml_neg, stable_density
from fracshe.utils import DomainError, TruncationError, check_beta, check_positive, integrate

logger = logging.getLogger(__name__)

CLASSICAL = "classical"
FRACTIONAL = "fractional"

# Gauss-Legendre nodes per panel for projections onto the basis
GL_POINTS = 8


@dataclass(frozen=True)
class DomainSpec:
    """
    Interval (0, L) and the number of eigenmodes kept in every series
    """

    length_L: float
    n_modes: int

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise DomainError("; ".join(problems))

    def violations(self):
        problems = []
        if not (isinstance(self.length_L, (int, float)) and self.length_L > 0.0 and math.isfinite(self.length_L)):
            problems.append(f"model.length must be > 0, got {self.length_L!r}")
        if not (isinstance(self.n_modes, (int, np.integer)) and self.n_modes >= 1):
            problems.append(f"model.n_modes must be an integer >= 1, got {self.n_modes!r}")
        return problems


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """
    Eigenpairs of the Dirichlet Laplacian on (0, L), n = 1..N. Immutable once built.
    """

    domain: DomainSpec
    eigenvalues: np.ndarray

    @property
    def length(self):
        return self.domain.length_L

    @property
    def n_modes(self):
        return self.domain.n_modes

    @property
    def modes(self):
        return np.arange(1, self.n_modes + 1)

    def eigenfunctions(self, x):
        """
        phi_n(x) for every mode, shape (N,) + shape(x). Exactly zero on the boundary.
        """
        x = np.asarray(x, dtype=float)
        length = self.length
        if np.any(x < 0.0) or np.any(x > length):
            raise DomainError(f"x must lie in [0, {length}], got {x!r}")
        n = self.modes.reshape((-1,) + (1,) * x.ndim)
        values = math.sqrt(2.0 / length) * np.sin(n * math.pi * x / length)
        on_boundary = (x == 0.0) | (x == length)
        return np.where(on_boundary, 0.0, values)

    def phi(self, n, x):
        """phi_n(x) for a single mode n >= 1."""
        x = np.asarray(x, dtype=float)
        values = math.sqrt(2.0 / self.length) * np.sin(n * math.pi * x / self.length)
        values = np.where((x == 0.0) | (x == self.length), 0.0, values)
        return float(values) if values.ndim == 0 else values


def build_basis(spec):
    """
    Build the Dirichlet eigenbasis for a DomainSpec

    :param spec: DomainSpec
    :return: SpectralBasis with lambda_n = (n pi / L)^2, n = 1..N
    """
    if not isinstance(spec, DomainSpec):
        raise DomainError(f"build_basis needs a DomainSpec, got {type(spec).__name__}")
    n = np.arange(1, spec.n_modes + 1, dtype=float)
    eigenvalues = (n * math.pi / spec.length_L) ** 2
    eigenvalues.setflags(write=False)
    return SpectralBasis(domain=spec, eigenvalues=eigenvalues)


# {{{ tails


def _mode_tail(beta, a, n_modes):
    """
    Bound on sum_{n > N} U(a n^2), U the upper Mittag-Leffler bound (exp for beta = 1), by the integral test
    """
    if beta == 1.0:
        root = math.sqrt(a)
        return 0.5 * math.sqrt(math.pi / a) * erfc(n_modes * root)
    c = a / gamma(1.0 + beta)
    root = math.sqrt(c)
    return (0.5 * math.pi - math.atan(n_modes * root)) / root


def tail_bound(basis, beta, t):
    """
    Sup over (x, y) of the dropped tail sum_{n > N} |E_beta(-lambda_n t^beta) phi_n(x) phi_n(y)|
    """
    beta = check_beta(beta)
    t = check_positive("t", t)
    a = basis.eigenvalues[0] * t**beta
    return 2.0 / basis.length * _mode_tail(beta, a, basis.n_modes)


def tail_bound_dt(basis, beta, t):
    """
    Tail bound for the time derivative, from x |E'_beta(-x)| <= (2/e) E_beta(-x/2) (complete monotonicity)
    """
    beta = check_beta(beta)
    t = check_positive("t", t)
    a = 0.5 * basis.eigenvalues[0] * t**beta
    return 2.0 * beta / (math.e * t) * 2.0 / basis.length * _mode_tail(beta, a, basis.n_modes)


def check_truncation(basis, beta, t, tol, bound_fn=tail_bound):
    bound = bound_fn(basis, beta, t)
    logger.debug("tail bound %.3e at t=%g, beta=%g, N=%d", bound, t, beta, basis.n_modes)
    if bound > tol:
        raise TruncationError(bound, tol, basis.n_modes, t)
    return bound


# }}}


def mode_decay(basis, beta, t, policy=None):
    """
    Per-mode factors E_beta(-lambda_n t^beta) (exp(-lambda_n t) for beta = 1), shape (N,)
    """
    beta = check_beta(beta)
    t = check_positive("t", t)
    if beta == 1.0:
        return np.exp(-basis.eigenvalues * t)
    return ml_neg(beta, basis.eigenvalues * t**beta, policy)


def _pair_weights(basis, x, y):
    """phi_n(x) phi_n(y), shape (N,) + broadcast shape of x and y."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return basis.eigenfunctions(x) * basis.eigenfunctions(y)


def _contract(factors, weights):
    values = np.tensordot(factors, weights, axes=(0, 0))
    return float(values) if np.ndim(values) == 0 else values


def p_D(basis, t, x, y, tol=None, check_tail=True):
    """
    Dirichlet heat kernel, N-term expansion

    :raises TruncationError: if the dropped tail can exceed tol (default kernel_abs_tol)
    """
    t = check_positive("t", t)
    if check_tail:
        check_truncation(basis, 1.0, t, DEFAULT_POLICY.kernel_abs_tol if tol is None else tol)
    return _contract(np.exp(-basis.eigenvalues * t), _pair_weights(basis, x, y))


def g_D(basis, beta, t, x, y, policy=None, tol=None, check_tail=True):
    """
    Fractional Dirichlet kernel G_D, N-term expansion; equals p_D when beta = 1

    :raises TruncationError: if the dropped tail can exceed tol (default policy.kernel_abs_tol)
    """
    beta = check_beta(beta)
    t = check_positive("t", t)
    policy = policy or DEFAULT_POLICY
    if check_tail:
        check_truncation(basis, beta, t, policy.kernel_abs_tol if tol is None else tol)
    return _contract(mode_decay(basis, beta, t, policy), _pair_weights(basis, x, y))


def kernel_dt(basis, beta, t, x, y, policy=None, tol=None, check_tail=True):
    """
    Time derivative of G_D, sum_n d/dt E_beta(-lambda_n t^beta) phi_n(x) phi_n(y)
    """
    beta = check_beta(beta)
    t = check_positive("t", t)
    policy = policy or DEFAULT_POLICY
    if check_tail:
        check_truncation(basis, beta, t, policy.kernel_abs_tol if tol is None else tol, bound_fn=tail_bound_dt)
    factors = ml_dt(beta, basis.eigenvalues, t, policy)
    return _contract(np.asarray(factors), _pair_weights(basis, x, y))


def subordinated_kernel(basis, beta, t, x, y, policy=None):
    """
    G_D through subordination, int_0^inf p_D((t/u)^beta, x, y) g_beta(u) du, with the same N modes

    Integrated in log u. Slow; intended as an oracle for g_D.
    """
    beta = check_beta(beta, allow_one=False)
    t = check_positive("t", t)
    policy = policy or DEFAULT_POLICY
    weights = _pair_weights(basis, x, y)
    if np.ndim(weights) != 1:
        raise DomainError("subordinated_kernel evaluates one (x, y) pair at a time")

    a_min = beta ** (beta / (1.0 - beta)) * (1.0 - beta)
    z_lo = (1.0 - beta) / beta * math.log(a_min / 60.0) - 1.0
    # beyond z_hi the subordinator tail P(S > e^z) ~ e^(-beta z) times the kernel sup 2N/L is below 1e-7
    z_hi = (math.log(basis.n_modes * 2.0 / basis.length + 1.0) + 16.0) / beta

    def integrand(z):
        u = math.exp(z)
        density = stable_density(beta, u, policy)
        if density == 0.0:
            return 0.0
        kernel = float(np.dot(np.exp(-basis.eigenvalues * (t / u) ** beta), weights))
        return kernel * density * u

    value, _ = integrate(integrand, z_lo, z_hi, 1e-12, 1e-9, limit=500, points=[0.0], what="subordinated G_D")
    return value


# {{{ initial data


@dataclass(frozen=True)
class InitialCondition:
    """
    Initial profile u_0 on [0, L]

    kind "mode":      amplitude * phi_k (k = mode)
    kind "bump":      height * exp(1 - 1/(1 - r^2)), r = (x - center)/half_width, zero for |r| >= 1
    kind "tabulated": piecewise-linear through values on equally spaced nodes of [0, L]
    """

    kind: str
    mode: int = 1
    amplitude: float = 1.0
    center: float = 0.0
    half_width: float = 0.0
    height: float = 1.0
    values: tuple = ()

    @classmethod
    def mode_k(cls, k, amplitude=1.0):
        return cls(kind="mode", mode=int(k), amplitude=float(amplitude))

    @classmethod
    def bump(cls, center, half_width, height=1.0):
        return cls(kind="bump", center=float(center), half_width=float(half_width), height=float(height))

    @classmethod
    def tabulated(cls, values):
        return cls(kind="tabulated", values=tuple(float(v) for v in values))

    @classmethod
    def zero(cls):
        return cls.mode_k(1, amplitude=0.0)

    def violations(self, length):
        problems = []
        if self.kind == "mode":
            if self.mode < 1:
                problems.append(f"model.u0_mode must be >= 1, got {self.mode!r}")
            if not self.amplitude >= 0.0:
                problems.append(f"model.u0_amplitude must be >= 0, got {self.amplitude!r}")
        elif self.kind == "bump":
            if not self.half_width > 0.0:
                problems.append(f"model.u0_half_width must be > 0, got {self.half_width!r}")
            elif not (0.0 <= self.center - self.half_width and self.center + self.half_width <= length):
                problems.append(
                    f"model.u0 bump support [{self.center - self.half_width}, {self.center + self.half_width}] "
                    f"must lie inside [0, {length}]"
                )
            if not self.height >= 0.0:
                problems.append(f"model.u0_height must be >= 0, got {self.height!r}")
        elif self.kind == "tabulated":
            values = np.asarray(self.values, dtype=float)
            if values.size < 2:
                problems.append("model.u0_values needs at least 2 values")
            elif not np.all(np.isfinite(values)) or np.any(values < 0.0):
                problems.append("model.u0_values must be finite and nonnegative")
            elif values[0] != 0.0 or values[-1] != 0.0:
                problems.append("model.u0_values must vanish at both ends of [0, L]")
        else:
            problems.append(f"model.u0_kind must be one of mode, bump, tabulated, got {self.kind!r}")
        return problems

    def evaluate(self, x, length):
        """u_0 at the points x of [0, L]; exactly zero on the boundary."""
        x = np.asarray(x, dtype=float)
        if self.kind == "mode":
            values = self.amplitude * math.sqrt(2.0 / length) * np.sin(self.mode * math.pi * x / length)
        elif self.kind == "bump":
            r = (x - self.center) / self.half_width
            inside = np.abs(r) < 1.0
            safe = np.where(inside, 1.0 - r * r, 1.0)
            values = np.where(inside, self.height * np.exp(1.0 - 1.0 / safe), 0.0)
        else:
            nodes = np.linspace(0.0, length, len(self.values))
            values = np.interp(x, nodes, np.asarray(self.values, dtype=float))
        return np.where((x == 0.0) | (x == length), 0.0, values)

    def coefficients(self, basis):
        """
        <u_0, phi_n> for n = 1..N. Exact for kind "mode"; composite Gauss-Legendre otherwise, with at least
        8 nodes per wavelength of the highest mode.
        """
        if self.kind == "mode":
            coeffs = np.zeros(basis.n_modes)
            if self.mode <= basis.n_modes:
                coeffs[self.mode - 1] = self.amplitude
            elif self.amplitude != 0.0:
                logger.warning("u0 mode %d is outside the %d-mode basis", self.mode, basis.n_modes)
            return coeffs
        nodes, weights = _composite_gauss_legendre(basis.length, max(8, math.ceil(basis.n_modes / 2)))
        return basis.eigenfunctions(nodes) @ (weights * self.evaluate(nodes, basis.length))

    def l1_norm(self, length):
        if self.kind == "mode":
            return self.amplitude * math.sqrt(2.0 / length) * 2.0 * length / math.pi
        nodes, weights = _composite_gauss_legendre(length, 64)
        return float(np.dot(weights, np.abs(self.evaluate(nodes, length))))


def _composite_gauss_legendre(length, panels):
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(GL_POINTS)
    width = length / panels
    left = np.arange(panels) * width
    nodes = (left[:, None] + 0.5 * width * (ref_nodes[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * ref_weights, panels)
    return nodes, weights


def apply_initial(basis, kernel_kind, u0, t, x, beta=1.0, policy=None, tol=None):
    """
    (P_D u_0)_t(x) or (G_D u_0)_t(x) through the spectral coefficients of u_0

    :param kernel_kind: "classical" or "fractional" (the latter uses beta)
    """
    if kernel_kind not in (CLASSICAL, FRACTIONAL):
        raise DomainError(f"kernel_kind must be {CLASSICAL!r} or {FRACTIONAL!r}, got {kernel_kind!r}")
    beta = 1.0 if kernel_kind == CLASSICAL else check_beta(beta)
    t = check_positive("t", t)
    policy = policy or DEFAULT_POLICY
    if u0.kind != "mode":
        bound = tail_bound(basis, beta, t) * u0.l1_norm(basis.length)
        tolerance = policy.kernel_abs_tol if tol is None else tol
        if bound > tolerance:
            raise TruncationError(bound, tolerance, basis.n_modes, t)
    factors = mode_decay(basis, beta, t, policy) * u0.coefficients(basis)
    return _contract(factors, basis.eigenfunctions(x))


# }}}


class IncrementNorms(NamedTuple):
    space_sq: float
    time_sq: float


def increment_norms(basis, beta, t_horizon, x, k, h, eta, policy=None):
    """
    L^2 increment functionals of G_D over [0, t_horizon] x [0, L]

        space_sq = int_0^t int_0^L [G_D(s, x+k, y) - G_D(s, x, y)]^2 dy ds
                 = sum_n [phi_n(x+k) - phi_n(x)]^2 int_0^t E_beta(-lambda_n s^beta)^2 ds
        time_sq  = int_0^t int_0^L [G_D(s+h, x, y) - G_D(s, x, y)]^2 dy ds
                 = sum_n phi_n(x)^2 int_0^t [E_beta(-lambda_n (s+h)^beta) - E_beta(-lambda_n s^beta)]^2 ds

    :param eta: Hoelder exponent the caller compares against, 0 < eta < 1 (and eta < 1 - beta/2 when h != 0)
    """
    beta = check_beta(beta)
    t_horizon = check_positive("t_horizon", t_horizon)
    policy = policy or DEFAULT_POLICY
    length = basis.length
    if not 0.0 < eta < 1.0:
        raise DomainError(f"eta must lie in (0, 1), got {eta!r}")
    if h != 0.0 and not eta < 1.0 - beta / 2.0:
        raise DomainError(f"time increments need eta < 1 - beta/2 = {1.0 - beta / 2.0}, got {eta!r}")
    if h < 0.0:
        raise DomainError(f"h must be >= 0, got {h!r}")
    if not (0.0 <= x <= length and 0.0 <= x + k <= length):
        raise DomainError(f"x and x + k must lie in [0, {length}], got x={x!r}, k={k!r}")

    def decay(lam, s):
        if beta == 1.0:
            return math.exp(-lam * s)
        return ml_neg(beta, lam * s**beta, policy)

    tol_abs, tol_rel = 1e-13, 1e-9

    space_sq = 0.0
    if k != 0.0:
        diffs = basis.eigenfunctions(x + k) - basis.eigenfunctions(x)
        for lam, diff in zip(basis.eigenvalues, diffs):
            if diff == 0.0:
                continue
            integral, _ = integrate(
                lambda s: decay(lam, s) ** 2, 0.0, t_horizon, tol_abs, tol_rel, what="space increment"
            )
            space_sq += diff * diff * integral

    time_sq = 0.0
    if h != 0.0:
        weights = basis.eigenfunctions(x) ** 2
        for lam, weight in zip(basis.eigenvalues, weights):
            if weight == 0.0:
                continue
            integral, _ = integrate(
                lambda s: (decay(lam, s + h) - decay(lam, s)) ** 2,
                0.0,
                t_horizon,
                tol_abs,
                tol_rel,
                what="time increment",
            )
            time_sq += weight * integral

    return IncrementNorms(space_sq=space_sq, time_sq=time_sq)
