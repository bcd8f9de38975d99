"""
Mild-solution scheme for the (time-fractional) stochastic heat equation on (0, L) with Dirichlet boundary

    u_t(x) = (G_D u_0)_t(x) + lambda int_0^t int_0^L G_D(t - s, x, y) sigma(u_s(y)) W(ds, dy)

G_D is replaced by p_D when beta = 1. The fractional kernel has no semigroup property, so every step is a full-history
discrete convolution. The convolution is carried out on the N spectral modes:

    A_m = E(t_m) a + lambda sum_{j<m} E(t_m - t_j - dt/2) c_j,    c_j = sum_k phi(y_k) sigma(u_{t_j}(y_k)) xi_{j,k}

which is the same sum as sum_j sum_k K(t_m - t_j - dt/2, x, y_k) sigma(u_{t_j}(y_k)) xi_{j,k} with the N-mode kernel K.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.integrate import trapezoid

from fracshe.noise import sample_noise
from fracshe.special_fn import DEFAULT_POLICY
from fracshe.spectral_kernel import (
    CLASSICAL,
    FRACTIONAL,
    DomainSpec,
    InitialCondition,
    build_basis,
    mode_decay,
    tail_bound,
)
from fracshe.utils import BlowUpError, DomainError, TruncationError, check_beta

logger = logging.getLogger(__name__)

BLOW_UP_LEVEL = 1e12


@dataclass(frozen=True)
class SigmaSpec:
    """
    Noise coefficient sigma with l_sigma |x| <= |sigma(x)| <= L_sigma |x|. Only the linear family sigma(x) = c x is
    provided; new kinds go through __call__ and the two Lipschitz properties.
    """

    kind: str = "linear"
    c: float = 1.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise DomainError("; ".join(problems))

    def violations(self):
        problems = []
        if self.kind != "linear":
            problems.append(f"model.sigma_kind must be 'linear', got {self.kind!r}")
        if not (math.isfinite(self.c) and self.c != 0.0):
            problems.append(f"model.sigma_c must be finite and nonzero, got {self.c!r}")
        return problems

    @property
    def lipschitz_upper(self):
        return abs(self.c)

    @property
    def lipschitz_lower(self):
        return abs(self.c)

    def __call__(self, u):
        return self.c * u


@dataclass(frozen=True)
class ModelSpec:
    beta: float
    lambda_level: float
    domain: DomainSpec
    sigma: SigmaSpec = SigmaSpec()
    u0: InitialCondition = InitialCondition.mode_k(1)

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise DomainError("; ".join(problems))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "lambda_level", float(self.lambda_level))

    def violations(self):
        problems = []
        try:
            check_beta(self.beta)
        except DomainError:
            problems.append(f"model.beta must lie in (0, 1], got {self.beta!r}")
        if not (math.isfinite(self.lambda_level) and self.lambda_level >= 0.0):
            problems.append(f"model.lambda_level must be >= 0, got {self.lambda_level!r}")
        problems.extend(self.u0.violations(self.domain.length_L))
        return problems

    @property
    def length(self):
        return self.domain.length_L

    @property
    def is_classical(self):
        return self.beta == 1.0

    @property
    def kernel_kind(self):
        return CLASSICAL if self.is_classical else FRACTIONAL

    def with_beta(self, beta):
        return replace(self, beta=beta)

    def with_lambda(self, lambda_level):
        return replace(self, lambda_level=lambda_level)

    def with_u0(self, u0):
        return replace(self, u0=u0)

    def classical(self):
        return self.with_beta(1.0)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """
    Read-only tables shared by every replica of one (model, grid) pair

    decay_mid[d - 1, n]  = E_beta(-lambda_n (d dt - dt/2)^beta), d = 1..M
    decay_grid[m, n]     = E_beta(-lambda_n t_m^beta), m = 0..M
    phi_nodes, phi_mid   = phi_n on the grid nodes and on the cell midpoints
    """

    basis: object
    decay_mid: np.ndarray
    decay_grid: np.ndarray
    phi_nodes: np.ndarray
    phi_mid: np.ndarray
    u0_coefficients: np.ndarray
    u0_nodes: np.ndarray
    u0_mid: np.ndarray

    @classmethod
    def build(cls, model, grid, policy=None):
        policy = policy or DEFAULT_POLICY
        basis = build_basis(model.domain)
        length = model.length
        n_steps = grid.n_steps

        # smallest kernel time used by the scheme
        t_min = 0.5 * grid.dt
        bound = tail_bound(basis, model.beta, t_min)
        if bound > policy.kernel_abs_tol:
            raise TruncationError(bound, policy.kernel_abs_tol, basis.n_modes, t_min)
        if model.u0.kind != "mode":
            bound = tail_bound(basis, model.beta, grid.dt) * model.u0.l1_norm(length)
            if bound > policy.kernel_abs_tol:
                raise TruncationError(bound, policy.kernel_abs_tol, basis.n_modes, grid.dt)
        logger.debug("kernel table: beta=%g, N=%d, M=%d, tail bound %.3e", model.beta, basis.n_modes, n_steps, bound)

        lags = (np.arange(1, n_steps + 1) - 0.5) * grid.dt
        decay_mid = np.stack([mode_decay(basis, model.beta, lag, policy) for lag in lags])
        decay_grid = np.vstack(
            [np.ones(basis.n_modes)] + [mode_decay(basis, model.beta, t, policy) for t in grid.times[1:]]
        )
        nodes = grid.nodes(length)
        mid = grid.midpoints(length)
        arrays = dict(
            decay_mid=decay_mid,
            decay_grid=decay_grid,
            phi_nodes=basis.eigenfunctions(nodes),
            phi_mid=basis.eigenfunctions(mid),
            u0_coefficients=model.u0.coefficients(basis),
            u0_nodes=model.u0.evaluate(nodes, length),
            u0_mid=model.u0.evaluate(mid, length),
        )
        for array in arrays.values():
            array.setflags(write=False)
        return cls(basis=basis, **arrays)


@dataclass(frozen=True, eq=False)
class SolutionPath:
    """
    values[m, i] = u_{t_m}(x_i), m = 0..M, i = 0..J
    """

    values: np.ndarray
    model: ModelSpec
    grid: object

    @property
    def times(self):
        return self.grid.times

    @property
    def nodes(self):
        return self.grid.nodes(self.model.length)


def simulate(model, grid, noise, policy=None, table=None):
    """
    Advance the mild equation on the grid with one noise realisation

    :param model: ModelSpec
    :param grid: GridSpec
    :param noise: NoiseArray matching the grid
    :param policy: EvalPolicy for the kernel tables
    :param table: prebuilt KernelTable for (model, grid); built here when omitted
    :return: SolutionPath
    :raises BlowUpError: first (m, i) where u is non-finite or |u| > 1e12
    """
    noise.check_grid(grid, model.length)
    table = table if table is not None else KernelTable.build(model, grid, policy)
    n_steps, n_cells = grid.n_steps, grid.n_cells

    values = np.empty((n_steps + 1, n_cells + 1))
    values[0] = table.u0_nodes
    deterministic = (table.decay_grid * table.u0_coefficients) @ table.phi_nodes

    if model.lambda_level == 0.0:
        values[1:] = deterministic[1:]
        values.setflags(write=False)
        return SolutionPath(values, model, grid)

    amplitudes = np.empty((n_steps + 1, table.basis.n_modes))
    amplitudes[0] = table.u0_coefficients
    forcing = np.empty((n_steps, table.basis.n_modes))
    xi = noise.increments
    lam = model.lambda_level

    for m in range(1, n_steps + 1):
        j = m - 1
        u_mid = table.u0_mid if j == 0 else amplitudes[j] @ table.phi_mid
        forcing[j] = table.phi_mid @ (model.sigma(u_mid) * xi[j])
        history = np.einsum("jn,jn->n", table.decay_mid[:m][::-1], forcing[:m])
        amplitudes[m] = table.decay_grid[m] * table.u0_coefficients + lam * history
        values[m] = amplitudes[m] @ table.phi_nodes
        _guard(values[m], m)

    values[:, 0] = 0.0
    values[:, -1] = 0.0
    values.setflags(write=False)
    return SolutionPath(values, model, grid)


def _guard(row, step):
    bad = ~np.isfinite(row) | (np.abs(row) > BLOW_UP_LEVEL)
    if np.any(bad):
        node = int(np.flatnonzero(bad)[0])
        raise BlowUpError(step, node, float(row[node]))


def project_mode1(path):
    """
    <u_{t_m}, phi_1> for every m by the trapezoidal rule on the grid nodes
    """
    nodes = path.nodes
    length = path.model.length
    phi_1 = math.sqrt(2.0 / length) * np.sin(math.pi * nodes / length)
    return trapezoid(path.values * phi_1, nodes, axis=1)


class ReplicaSet(NamedTuple):
    paths: list
    aborted: list


def simulate_replicas(model, grid, replicas, seed, policy=None, table=None, first_stream=0):
    """
    Run replicas in stream order; replica r uses stream_id first_stream + r. Blown-up replicas are recorded and left
    out of the returned paths.
    """
    if int(replicas) < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas!r}")
    table = table if table is not None else KernelTable.build(model, grid, policy)
    paths, aborted = [], []
    for replica in range(int(replicas)):
        stream_id = first_stream + replica
        noise = sample_noise(grid, seed, stream_id, model.length)
        try:
            paths.append(simulate(model, grid, noise, policy, table))
        except BlowUpError as err:
            logger.warning("replica %d aborted: %s", stream_id, err)
            aborted.append(stream_id)
    logger.info(
        "beta=%g lambda=%g: %d replicas completed, %d aborted", model.beta, model.lambda_level, len(paths), len(aborted)
    )
    return ReplicaSet(paths, aborted)
