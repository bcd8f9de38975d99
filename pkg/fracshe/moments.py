"""
Monte Carlo moment estimation and the diagnostics built on it: Lambda(theta), log-linear growth fits, the beta -> 1
convergence sweep, continuity moduli, the noise-level transition scan and time-step self-convergence
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize, stats

from fracshe.noise import sample_noise
from fracshe.sde import KernelTable, project_mode1, simulate, simulate_replicas
from fracshe.special_fn import DEFAULT_POLICY, ml_neg
from fracshe.spectral_kernel import build_basis
from fracshe.utils import (
    AllAbortedError,
    BlowUpError,
    DomainError,
    FitError,
    check_beta,
    check_positive,
    integrate,
)

logger = logging.getLogger(__name__)

# probe times used for sup over (t, x)
PROBE_TIMES = 8
CONFIDENCE = 0.95
MIN_FIT_POINTS = 5

# Lambda(theta) is integrated in log t between these limits (t_hi = LAMBDA_DECAY / theta)
LAMBDA_T_MIN = 1e-12
LAMBDA_DECAY = 40.0
# smallest rate renewal_rate resolves
RENEWAL_THETA_MIN = 1e-6


@dataclass(frozen=True, eq=False)
class MomentSeries:
    """
    Monte Carlo estimates over the grid times of sup_x E|u_t(x)|^p and E<u_t, phi_1>^p with jackknife errors
    """

    times: np.ndarray
    sup_x_second_moment: np.ndarray
    sup_x_se: np.ndarray
    mode1_second_moment: np.ndarray
    mode1_se: np.ndarray
    replicas_used: int
    aborted: int
    order: int = 2

    def column(self, which):
        if which == "sup_x":
            return self.sup_x_second_moment
        if which == "mode1":
            return self.mode1_second_moment
        raise DomainError(f"which must be 'sup_x' or 'mode1', got {which!r}")


class GrowthFit(NamedTuple):
    which: str
    slope: float
    intercept: float
    ci_halfwidth: float
    t_lo: float
    t_hi: float

    @property
    def window(self):
        return self.t_lo, self.t_hi

    @property
    def grows(self):
        """Exponential growth: positive slope with the confidence interval excluding 0."""
        return self.slope - self.ci_halfwidth > 0.0


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    beta_values: np.ndarray
    sup_moment_gap: np.ndarray
    p: int
    common_seed: int
    replicas_used: int
    aborted: int


class ContinuityFit(NamedTuple):
    beta: float
    p: int
    a: float
    b: float
    K: float
    space_shifts: np.ndarray
    space_moments: np.ndarray
    time_shifts: np.ndarray
    time_moments: np.ndarray
    aborted: int = 0

    @property
    def degenerate(self):
        return math.isnan(self.a) or math.isnan(self.b)


@dataclass
class TransitionScan:
    probes: list = field(default_factory=list)
    lambda_lo: float = math.nan
    lambda_hi: float = math.nan
    bracketed: bool = False

    @property
    def aborted(self):
        return sum(probe.aborted for probe in self.probes)


class SelfConvergence(NamedTuple):
    dt_values: np.ndarray
    sup_gap: np.ndarray


# {{{ estimators


def jackknife_se(samples, reduce=None):
    """
    Leave-one-out standard error of reduce(mean over replicas)

    :param samples: array with replicas along axis 0
    :param reduce: function applied to a replica mean (identity when None)
    :return: (estimate, standard error), shapes as reduce's output
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    reduce = reduce or (lambda arr: arr)
    estimate = reduce(samples.mean(axis=0))
    if n < 2:
        return estimate, np.full(np.shape(estimate), np.nan)
    total = samples.sum(axis=0)
    leave_one_out = np.stack([reduce((total - samples[i]) / (n - 1)) for i in range(n)])
    spread = leave_one_out - leave_one_out.mean(axis=0)
    se = np.sqrt((n - 1) / n * np.sum(spread * spread, axis=0))
    # identical replicas (deterministic rows) have no error at all
    se = np.where(np.ptp(leave_one_out, axis=0) == 0.0, 0.0, se)
    return estimate, se


def _check_order(p):
    if int(p) != p or p < 2 or int(p) % 2 != 0:
        raise DomainError(f"p must be an even integer >= 2, got {p!r}")
    return int(p)


def _completed_paths(replica_set, replicas):
    if not replica_set.paths:
        raise AllAbortedError(replicas)
    return np.stack([path.values for path in replica_set.paths])


def mc_moments(model, grid, replicas, seed, policy=None, order=2, table=None):
    """
    Estimate sup_x E|u_t(x)|^p and E<u_t, phi_1>^p at every grid time

    :param replicas: number of replicas R >= 2 (streams 0..R-1 of seed)
    :param order: moment order p (even)
    :return: MomentSeries over the completed replicas, aborts counted
    """
    if int(replicas) < 2:
        raise DomainError(f"mc_moments needs replicas >= 2, got {replicas!r}")
    order = _check_order(order)
    replica_set = simulate_replicas(model, grid, replicas, seed, policy, table)
    values = _completed_paths(replica_set, replicas)
    sup_x, sup_x_se = jackknife_se(np.abs(values) ** order, reduce=lambda mean: mean.max(axis=-1))
    projections = np.stack([project_mode1(path) for path in replica_set.paths])
    mode1, mode1_se = jackknife_se(projections**order)
    return MomentSeries(
        times=grid.times,
        sup_x_second_moment=sup_x,
        sup_x_se=sup_x_se,
        mode1_second_moment=mode1,
        mode1_se=mode1_se,
        replicas_used=len(replica_set.paths),
        aborted=len(replica_set.aborted),
        order=order,
    )


def deterministic_mode1(model, times, policy=None):
    """
    (E_beta(-lambda_1 t^beta) <u_0, phi_1>)^2, the noise-free part of E<u_t, phi_1>^2
    """
    basis = build_basis(model.domain)
    a_1 = model.u0.coefficients(basis)[0]
    times = np.asarray(times, dtype=float)
    decay = ml_neg(model.beta, basis.eigenvalues[0] * times**model.beta, policy)
    return (decay * a_1) ** 2


# }}}


def lambda_profile(beta, lambda_1, theta, policy=None):
    """
    Lambda(theta) = int_0^inf exp(-theta t) E_beta(-lambda_1 t^beta)^2 dt

    Finite for every theta > 0; diverges as theta -> 0 exactly when 2 beta <= 1. Integrated in log t.
    """
    beta = check_beta(beta)
    lambda_1 = check_positive("lambda_1", lambda_1)
    theta = check_positive("theta", theta)
    policy = policy or DEFAULT_POLICY

    def integrand(z):
        t = math.exp(z)
        weight = math.exp(z - theta * t)
        if weight == 0.0:
            return 0.0
        return weight * ml_neg(beta, lambda_1 * t**beta, policy) ** 2

    z_lo = math.log(LAMBDA_T_MIN)
    z_hi = math.log(LAMBDA_DECAY / theta)
    points = [z for z in (-math.log(lambda_1) / beta, -math.log(theta)) if z_lo < z < z_hi]
    value, _ = integrate(integrand, z_lo, z_hi, 1e-14, 1e-10, limit=500, points=points, what=f"Lambda({theta})")
    # the integrand is 1 to double precision below LAMBDA_T_MIN
    return value + LAMBDA_T_MIN


def renewal_rate(model, policy=None):
    """
    Exponential rate theta* of the renewal bound f(t) >= f_0(t) + w int_0^t E_beta(-lambda_1 s^beta)^2 f(t - s) ds,
    w = (lambda l_sigma)^2 / L, i.e. the root of w Lambda(theta*) = 1.

    Returns 0.0 when w Lambda(RENEWAL_THETA_MIN) <= 1, which is the bounded regime for 2 beta > 1 and small noise.
    """
    weight = (model.lambda_level * model.sigma.lipschitz_lower) ** 2 / model.length
    if weight == 0.0:
        return 0.0
    lambda_1 = float(build_basis(model.domain).eigenvalues[0])

    def excess(theta):
        return math.log(weight * lambda_profile(model.beta, lambda_1, theta, policy))

    if excess(RENEWAL_THETA_MIN) <= 0.0:
        logger.info(
            "beta=%g lambda=%g: no renewal growth above theta=%g", model.beta, model.lambda_level, RENEWAL_THETA_MIN
        )
        return 0.0
    # Lambda(theta) <= 1/theta, so w Lambda(2w) <= 1/2
    return float(optimize.brentq(excess, RENEWAL_THETA_MIN, 2.0 * weight, xtol=1e-12, rtol=1e-10))


# {{{ fits


def fit_log_linear(times, values, window, which="series"):
    """
    Ordinary least squares of log(values) against times on window = (t_lo, t_hi)
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise FitError(f"empty fit window ({t_lo}, {t_hi})")
    slack = 1e-9 * max(1.0, abs(t_hi))
    inside = (times >= t_lo - slack) & (times <= t_hi + slack)
    if np.count_nonzero(inside) < MIN_FIT_POINTS:
        raise FitError(f"fit window ({t_lo}, {t_hi}) holds {np.count_nonzero(inside)} points, need {MIN_FIT_POINTS}")
    selected = values[inside]
    if np.any(~(selected > 0.0)):
        raise FitError(f"nonpositive {which} estimates inside the fit window ({t_lo}, {t_hi})")

    result = stats.linregress(times[inside], np.log(selected))
    dof = np.count_nonzero(inside) - 2
    ci_halfwidth = float(stats.t.ppf(0.5 + CONFIDENCE / 2.0, dof) * result.stderr)
    return GrowthFit(
        which=which,
        slope=float(result.slope),
        intercept=float(result.intercept),
        ci_halfwidth=ci_halfwidth,
        t_lo=float(t_lo),
        t_hi=float(t_hi),
    )


def growth_fit(series, which, window=None):
    """
    Log-linear fit of a moment series; the default window is [T/2, T]

    :param which: "sup_x" or "mode1"
    """
    if window is None:
        t_final = float(series.times[-1])
        window = (0.5 * t_final, t_final)
    return fit_log_linear(series.times, series.column(which), window, which=which)


# }}}


def probe_indices(n_steps, count=PROBE_TIMES):
    """count evenly spaced time indices in 1..M"""
    return np.unique(np.round(np.linspace(0, n_steps, count + 1)[1:]).astype(int))


def beta_convergence(model, beta_values, grid, p, replicas, seed, policy=None):
    """
    Common-noise estimate of sup over probe (t, x) of E|u_t(x) - u_t^(beta)(x)|^p, u the beta = 1 solution

    Every replica drives the reference and all beta runs with the same NoiseArray. A replica where any run blows up
    is dropped from every estimate.
    """
    p = _check_order(p)
    beta_values = np.asarray([check_beta(beta) for beta in beta_values])
    if int(replicas) < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas!r}")
    reference_model = model.classical()
    reference_table = KernelTable.build(reference_model, grid, policy)
    tables = [
        reference_table if beta == 1.0 else KernelTable.build(model.with_beta(beta), grid, policy)
        for beta in beta_values
    ]
    probes = probe_indices(grid.n_steps)

    gaps, aborted = [], 0
    for replica in range(int(replicas)):
        noise = sample_noise(grid, seed, replica, model.length)
        try:
            reference = simulate(reference_model, grid, noise, policy, reference_table).values[probes]
            runs = [
                simulate(model.with_beta(beta), grid, noise, policy, table).values[probes]
                for beta, table in zip(beta_values, tables)
            ]
        except BlowUpError as err:
            logger.warning("replica %d dropped from the beta sweep: %s", replica, err)
            aborted += 1
            continue
        gaps.append(np.stack([np.abs(reference - run) ** p for run in runs]))
    if not gaps:
        raise AllAbortedError(replicas)

    mean_gap = np.mean(np.stack(gaps), axis=0)
    sup_gap = mean_gap.reshape(len(beta_values), -1).max(axis=1)
    for beta, gap in zip(beta_values, sup_gap):
        logger.info("beta=%g: sup E|u - u_beta|^%d = %.6e", beta, p, gap)
    return ConvergenceReport(
        beta_values=beta_values,
        sup_moment_gap=sup_gap,
        p=p,
        common_seed=int(seed),
        replicas_used=len(gaps),
        aborted=aborted,
    )


def _dyadic_shifts(limit):
    shifts = []
    step = 1
    while step <= limit:
        shifts.append(step)
        step *= 2
    return shifts


def _power_fit(shifts, moments, p):
    positive = moments > 0.0
    if np.count_nonzero(positive) < 2:
        raise FitError("continuity fit needs at least 2 shifts with a positive moment")
    result = stats.linregress(np.log(shifts[positive]), np.log(moments[positive]))
    return result.slope / p, math.exp(result.intercept)


def continuity_modulus(model, grid, replicas, p, seed, policy=None):
    """
    Fit E|u_t(y) - u_t(x)|^p <= K |y - x|^(a p) and E|u_t(x) - u_s(x)|^p <= K |t - s|^(b p)

    Moments are maximised over base points: all admissible nodes and the probe times for space shifts, all
    admissible times and nodes for time shifts. Shifts are dyadic multiples of dx and dt up to a quarter of the grid.
    An identically zero field gives K = 0 and a = b = nan.
    """
    p = _check_order(p)
    replica_set = simulate_replicas(model, grid, replicas, seed, policy)
    values = _completed_paths(replica_set, replicas)
    length = model.length
    aborted = len(replica_set.aborted)
    n_steps, n_cells = grid.n_steps, grid.n_cells
    probes = probe_indices(n_steps)

    space_steps = _dyadic_shifts(max(1, n_cells // 4))
    space_moments = np.array(
        [
            np.mean(np.abs(values[:, probes, s:] - values[:, probes, :-s]) ** p, axis=0).max()
            for s in space_steps
        ]
    )
    time_steps = _dyadic_shifts(max(1, n_steps // 4))
    time_moments = np.array(
        [np.mean(np.abs(values[:, s:, :] - values[:, :-s, :]) ** p, axis=0).max() for s in time_steps]
    )
    space_shifts = np.asarray(space_steps, dtype=float) * grid.dx(length)
    time_shifts = np.asarray(time_steps, dtype=float) * grid.dt

    if not np.any(space_moments > 0.0) and not np.any(time_moments > 0.0):
        logger.warning("continuity fit is degenerate: every increment moment is zero")
        return ContinuityFit(
            model.beta, p, math.nan, math.nan, 0.0, space_shifts, space_moments, time_shifts, time_moments, aborted
        )

    a, k_space = _power_fit(space_shifts, space_moments, p)
    b, k_time = _power_fit(time_shifts, time_moments, p)
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
        logger.warning("fitted exponents a=%.4f, b=%.4f fall outside (0, 1)", a, b)
    return ContinuityFit(
        model.beta, p, a, b, max(k_space, k_time), space_shifts, space_moments, time_shifts, time_moments, aborted
    )


class TransitionProbe(NamedTuple):
    iteration: int
    lambda_level: float
    slope: float
    ci_halfwidth: float
    grows: bool
    aborted: int = 0


def _probe_growth(model, grid, replicas, seed, policy, iteration, lambda_level):
    probe_model = model.with_lambda(lambda_level)
    try:
        series = mc_moments(probe_model, grid, replicas, seed, policy)
        fit = growth_fit(series, "sup_x")
        probe = TransitionProbe(iteration, lambda_level, fit.slope, fit.ci_halfwidth, fit.grows, series.aborted)
    except AllAbortedError:
        probe = TransitionProbe(iteration, lambda_level, math.inf, 0.0, True, replicas)
    logger.info(
        "lambda scan %d: lambda=%.6g slope=%.4g +- %.3g grows=%s",
        iteration,
        lambda_level,
        probe.slope,
        probe.ci_halfwidth,
        probe.grows,
    )
    return probe


def lambda_transition(model, grid, lambda_lo, lambda_hi, replicas, seed, iterations=6, policy=None):
    """
    Geometric bisection over the noise level for the switch from bounded to exponentially growing
    sup_x E|u_t(x)|^2 on [T/2, T]. The bracket is empirical and tied to the grid and horizon.
    """
    lambda_lo = check_positive("lambda_lo", lambda_lo)
    lambda_hi = check_positive("lambda_hi", lambda_hi)
    if not lambda_lo < lambda_hi:
        raise DomainError(f"need lambda_lo < lambda_hi, got {lambda_lo!r}, {lambda_hi!r}")
    scan = TransitionScan(lambda_lo=lambda_lo, lambda_hi=lambda_hi)
    low = _probe_growth(model, grid, replicas, seed, policy, 0, lambda_lo)
    high = _probe_growth(model, grid, replicas, seed, policy, 0, lambda_hi)
    scan.probes.extend([low, high])
    if low.grows or not high.grows:
        logger.warning(
            "no transition inside [%g, %g]: growth flags %s, %s", lambda_lo, lambda_hi, low.grows, high.grows
        )
        return scan

    scan.bracketed = True
    for iteration in range(1, int(iterations) + 1):
        middle = math.sqrt(scan.lambda_lo * scan.lambda_hi)
        probe = _probe_growth(model, grid, replicas, seed, policy, iteration, middle)
        scan.probes.append(probe)
        if probe.grows:
            scan.lambda_hi = middle
        else:
            scan.lambda_lo = middle
    logger.info("empirical transition bracket: (%.6g, %.6g)", scan.lambda_lo, scan.lambda_hi)
    return scan


def self_convergence(model, grid, replicas, seed, levels=3, policy=None):
    """
    Second moments on grids with dt, dt/2, ..., dt/2^(levels-1) driven by one Brownian sheet

    Noise is drawn on the finest grid and summed down to each coarser one. Returns, for each consecutive pair of
    levels, sup over the coarse grid of |E u_fine^2 - E u_coarse^2|.
    """
    levels = int(levels)
    if levels < 2:
        raise DomainError(f"self_convergence needs levels >= 2, got {levels!r}")
    grids = [grid.refine(2**level) for level in range(levels)]
    tables = [KernelTable.build(model, level_grid, policy) for level_grid in grids]
    finest = grids[-1]

    sums = [np.zeros((grid.n_steps + 1, grid.n_cells + 1)) for _ in range(levels)]
    completed = 0
    for replica in range(int(replicas)):
        fine_noise = sample_noise(finest, seed, replica, model.length)
        try:
            rows = []
            for level, (level_grid, table) in enumerate(zip(grids, tables)):
                noise = fine_noise.coarsen_time(2 ** (levels - 1 - level))
                path = simulate(model, level_grid, noise, policy, table)
                rows.append(path.values[:: 2**level] ** 2)
        except BlowUpError as err:
            logger.warning("replica %d dropped from the self-convergence run: %s", replica, err)
            continue
        for total, row in zip(sums, rows):
            total += row
        completed += 1
    if completed == 0:
        raise AllAbortedError(replicas)

    moments = [total / completed for total in sums]
    gaps = np.array([np.max(np.abs(fine - coarse)) for coarse, fine in zip(moments[:-1], moments[1:])])
    dt_values = np.array([level_grid.dt for level_grid in grids[:-1]])
    return SelfConvergence(dt_values, gaps)
