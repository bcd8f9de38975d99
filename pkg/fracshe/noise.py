"""
Space-time grid and discretised white noise
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from fracshe.utils import DomainError, ShapeError

logger = logging.getLogger(__name__)

# relative slack allowed when checking that t_final is a multiple of dt
STEP_ROUNDING = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """
    J spatial cells of width L/J and M = t_final/dt time steps
    """

    n_cells: int
    dt: float
    t_final: float

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise DomainError("; ".join(problems))

    def violations(self):
        problems = []
        if not (isinstance(self.n_cells, (int, np.integer)) and self.n_cells >= 2):
            problems.append(f"grid.n_cells must be an integer >= 2, got {self.n_cells!r}")
        if not self.dt > 0.0:
            problems.append(f"grid.dt must be > 0, got {self.dt!r}")
        if not self.t_final > 0.0:
            problems.append(f"grid.t_final must be > 0, got {self.t_final!r}")
        elif self.dt > 0.0:
            ratio = self.t_final / self.dt
            if round(ratio) < 1 or abs(ratio - round(ratio)) > STEP_ROUNDING * max(1.0, ratio):
                problems.append(f"grid.t_final / grid.dt must be an integer, got {ratio!r}")
        return problems

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    def dx(self, length):
        return length / self.n_cells

    def nodes(self, length):
        """x_0 = 0, ..., x_J = L"""
        return np.linspace(0.0, length, self.n_cells + 1)

    def midpoints(self, length):
        return (np.arange(self.n_cells) + 0.5) * self.dx(length)

    def refine(self, factor):
        """Same cells, dt divided by factor."""
        return GridSpec(n_cells=self.n_cells, dt=self.dt / factor, t_final=self.t_final)


@dataclass(frozen=True, eq=False)
class NoiseArray:
    """
    M x J array of white-noise cell increments, each ~ Normal(0, dt * dx), and the (seed, stream_id) that drew it
    """

    increments: np.ndarray
    seed: int
    stream_id: int
    dt: float
    dx: float

    @property
    def shape(self):
        return self.increments.shape

    def check_grid(self, grid, length):
        expected = (grid.n_steps, grid.n_cells)
        if self.increments.shape != expected:
            raise ShapeError(f"noise has shape {self.increments.shape}, grid needs {expected}")
        if not math.isclose(self.dt, grid.dt, rel_tol=1e-12):
            raise ShapeError(f"noise was drawn with dt={self.dt}, grid has dt={grid.dt}")
        if not math.isclose(self.dx, grid.dx(length), rel_tol=1e-12):
            raise ShapeError(f"noise was drawn with dx={self.dx}, grid has dx={grid.dx(length)}")

    def coarsen_time(self, factor):
        """
        Sum each run of `factor` consecutive time increments: the same Brownian sheet seen on a grid with
        dt * factor
        """
        factor = int(factor)
        n_steps, n_cells = self.increments.shape
        if factor < 1 or n_steps % factor != 0:
            raise ShapeError(f"cannot coarsen {n_steps} time steps by a factor {factor}")
        coarse = self.increments.reshape(n_steps // factor, factor, n_cells).sum(axis=1)
        coarse.setflags(write=False)
        return NoiseArray(coarse, self.seed, self.stream_id, self.dt * factor, self.dx)

    def negated(self):
        flipped = -self.increments
        flipped.setflags(write=False)
        return NoiseArray(flipped, self.seed, self.stream_id, self.dt, self.dx)


def noise_generator(seed, stream_id):
    """
    Counter-based stream splitting: stream r of a seed never depends on how many other streams are drawn
    """
    if int(seed) < 0 or int(stream_id) < 0:
        raise DomainError(f"seed and stream_id must be nonnegative, got {seed!r}, {stream_id!r}")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),)))


def sample_noise(grid, seed, stream_id, length):
    """
    Draw the white-noise increments for one replica

    :param grid: GridSpec
    :param seed: 64-bit nonnegative integer
    :param stream_id: replica index
    :param length: interval length L (sets dx = L/J)
    :return: NoiseArray of shape (M, J)
    """
    dx = grid.dx(length)
    rng = noise_generator(seed, stream_id)
    increments = rng.standard_normal((grid.n_steps, grid.n_cells)) * math.sqrt(grid.dt * dx)
    increments.setflags(write=False)
    return NoiseArray(increments, int(seed), int(stream_id), grid.dt, dx)
