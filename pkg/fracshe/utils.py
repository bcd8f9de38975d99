"""
Utility functions and exceptions for fracshe
"""

import logging
import math

from scipy.integrate import quad

logger = logging.getLogger(__name__)

# quad() reports its own error estimate; anything this far above the request is a failure
QUAD_ACCEPT_FACTOR = 100.0


class FracSheError(Exception):
    """Base class for every error raised by fracshe."""


class DomainError(FracSheError, ValueError):
    """Argument outside the domain of an operation."""


class ShapeError(FracSheError, ValueError):
    """Array shape does not match the grid it should live on."""


class TruncationError(FracSheError):
    """
    Spectral series truncated too early: the tail bound at the smallest time used exceeds the tolerance.
    """

    def __init__(self, tail_bound, tolerance, n_modes, t):
        self.tail_bound = tail_bound
        self.tolerance = tolerance
        self.n_modes = n_modes
        self.t = t
        super().__init__(
            f"truncation insufficient: tail bound {tail_bound:.3e} exceeds tolerance {tolerance:.3e} "
            f"at t={t:.6g} with n_modes={n_modes}"
        )


class QuadratureError(FracSheError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, what, value, abserr):
        self.value = value
        self.abserr = abserr
        super().__init__(f"quadrature failed for {what}: value={value:.6e}, achieved abserr={abserr:.3e}")


class BlowUpError(FracSheError):
    """Non-finite or exploding field value while advancing the mild equation."""

    def __init__(self, step, node, value):
        self.step = step
        self.node = node
        self.value = value
        super().__init__(f"blow-up at step m={step}, node i={node}: value={value!r}")


class AllAbortedError(FracSheError):
    """Every replica of a Monte Carlo run hit the blow-up guard."""

    def __init__(self, replicas):
        self.replicas = replicas
        super().__init__(f"all {replicas} replicas aborted")


class FitError(FracSheError):
    """Regression is not well posed on the data supplied."""


class ConfigError(FracSheError, ValueError):
    """
    Invalid experiment configuration. All violations are collected before raising.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("\n".join(self.violations))


def check_beta(beta, allow_one=True):
    """
    Validate a fractional order. beta = 1 is the classical limit and is admitted unless allow_one is False.
    """
    beta = float(beta)
    upper_ok = beta <= 1.0 if allow_one else beta < 1.0
    if not (beta > 0.0 and upper_ok):
        interval = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"beta must lie in {interval}, got {beta!r}")
    return beta


def check_positive(name, value):
    value = float(value)
    if not value > 0.0:
        raise DomainError(f"{name} must be positive, got {value!r}")
    return value


def integrate(func, a, b, abs_tol, rel_tol, limit=200, points=None, what="integral"):
    """
    Adaptive Gauss-Kronrod quadrature via scipy.integrate.quad

    :param func: scalar integrand
    :param a, b: limits (b may be inf)
    :param abs_tol, rel_tol: requested tolerances
    :param points: breakpoints inside a finite interval
    :param what: label used in the error message
    :return: (value, abserr)
    :raises QuadratureError: when the achieved error is far above the request
    """
    kwargs = dict(epsabs=abs_tol, epsrel=rel_tol, limit=limit, full_output=1)
    if points is not None and len(points) > 0 and math.isfinite(b):
        kwargs["points"] = sorted(points)
    result = quad(func, a, b, **kwargs)
    value, abserr = result[0], result[1]

    accepted = QUAD_ACCEPT_FACTOR * max(abs_tol, rel_tol * abs(value))
    if not math.isfinite(value) or abserr > accepted:
        raise QuadratureError(what, value, abserr)
    return value, abserr
