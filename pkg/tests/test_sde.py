import math

import numpy as np
import pytest

from fracshe.noise import GridSpec, sample_noise
from fracshe.sde import (
    KernelTable,
    ModelSpec,
    SigmaSpec,
    SolutionPath,
    project_mode1,
    simulate,
    simulate_replicas,
)
from fracshe.special_fn import ml_neg
from fracshe.spectral_kernel import DomainSpec, InitialCondition
from fracshe.utils import BlowUpError, DomainError, ShapeError, TruncationError


SEED = 7
# tail bound at dt/2 = 0.025 stays below kernel_abs_tol for beta >= 0.5 with 96 modes
N_MODES = 96
GRID = GridSpec(n_cells=16, dt=0.05, t_final=1.0)
CONSTANT_MODE1 = 1.5957691216057308  # 2 sqrt(2/pi)
ANTITHETIC_REPLICAS = 40


def make_model(beta=0.5, lambda_level=0.5, n_modes=N_MODES, u0=None):
    return ModelSpec(
        beta=beta,
        lambda_level=lambda_level,
        domain=DomainSpec(math.pi, n_modes),
        u0=u0 if u0 is not None else InitialCondition.mode_k(1),
    )


class TestModelSpec:
    def test_beta_range(self):
        with pytest.raises(DomainError, match=r"model.beta must lie in \(0, 1\]"):
            make_model(beta=1.5)

    def test_negative_level(self):
        with pytest.raises(DomainError, match="model.lambda_level"):
            make_model(lambda_level=-0.1)

    def test_u0_checked(self):
        with pytest.raises(DomainError, match="u0"):
            make_model(u0=InitialCondition.bump(0.1, 1.0))

    def test_sigma(self):
        sigma = SigmaSpec(c=-2.0)
        assert sigma.lipschitz_lower == sigma.lipschitz_upper == 2.0
        assert sigma(0.0) == 0.0
        np.testing.assert_array_equal(sigma(np.array([1.0, -0.5])), [-2.0, 1.0])
        with pytest.raises(DomainError):
            SigmaSpec(c=0.0)
        with pytest.raises(DomainError):
            SigmaSpec(kind="quadratic")

    def test_classical(self):
        model = make_model(beta=0.3)
        assert not model.is_classical
        assert model.classical().is_classical
        assert model.classical().kernel_kind == "classical"
        assert model.with_lambda(2.0).lambda_level == 2.0


class TestKernelTable:
    def test_shapes_and_read_only(self):
        table = KernelTable.build(make_model(), GRID)
        assert table.decay_mid.shape == (20, N_MODES)
        assert table.decay_grid.shape == (21, N_MODES)
        assert table.phi_nodes.shape == (N_MODES, 17)
        assert table.phi_mid.shape == (N_MODES, 16)
        np.testing.assert_array_equal(table.decay_grid[0], 1.0)
        with pytest.raises(ValueError):
            table.decay_mid[0, 0] = 0.0

    def test_midpoint_lags(self):
        table = KernelTable.build(make_model(), GRID)
        assert table.decay_mid[0, 0] == pytest.approx(ml_neg(0.5, 0.025**0.5), rel=1e-14)
        assert table.decay_mid[-1, 1] == pytest.approx(ml_neg(0.5, 4.0 * 0.975**0.5), rel=1e-14)

    def test_truncation(self):
        with pytest.raises(TruncationError):
            KernelTable.build(make_model(n_modes=8), GRID)


class TestSimulate:
    def test_deterministic_action(self):
        model = make_model(lambda_level=0.0)
        path = simulate(model, GRID, sample_noise(GRID, SEED, 0, math.pi))
        phi_1 = math.sqrt(2.0 / math.pi) * np.sin(path.nodes)
        phi_1[[0, -1]] = 0.0
        expected = ml_neg(0.5, GRID.times**0.5)[:, None] * phi_1[None, :]
        np.testing.assert_allclose(path.values, expected, rtol=1e-12, atol=1e-15)

    def test_dirichlet_rows(self):
        model = make_model(lambda_level=1.0)
        path = simulate(model, GRID, sample_noise(GRID, SEED, 0, math.pi))
        assert np.all(path.values[:, 0] == 0.0)
        assert np.all(path.values[:, -1] == 0.0)
        assert path.values.shape == (21, 17)
        assert np.all(np.isfinite(path.values))

    def test_classical_collapse(self):
        noise = sample_noise(GRID, SEED, 2, math.pi)
        model = make_model(beta=1.0, lambda_level=0.8)
        first = simulate(model, GRID, noise)
        second = simulate(make_model(beta=0.6, lambda_level=0.8).classical(), GRID, noise)
        assert np.array_equal(first.values, second.values)
        table = KernelTable.build(model, GRID)
        np.testing.assert_array_equal(table.decay_grid[3], np.exp(-table.basis.eigenvalues * GRID.times[3]))

    def test_reproducible(self):
        model = make_model(lambda_level=1.0)
        first = simulate(model, GRID, sample_noise(GRID, SEED, 4, math.pi))
        second = simulate(model, GRID, sample_noise(GRID, SEED, 4, math.pi))
        assert np.array_equal(first.values, second.values)

    def test_linear_in_initial_data(self):
        noise = sample_noise(GRID, SEED, 1, math.pi)
        single = simulate(make_model(lambda_level=1.5), GRID, noise)
        double = simulate(make_model(lambda_level=1.5, u0=InitialCondition.mode_k(1, 2.0)), GRID, noise)
        assert np.array_equal(double.values, 2.0 * single.values)

    def test_antithetic_average_centered(self):
        model = make_model(lambda_level=0.5)
        table = KernelTable.build(model, GRID)
        deterministic = simulate(model.with_lambda(0.0), GRID, sample_noise(GRID, SEED, 0, math.pi), table=table)
        deviations = []
        for stream in range(ANTITHETIC_REPLICAS):
            noise = sample_noise(GRID, SEED, stream, math.pi)
            plus = simulate(model, GRID, noise, table=table)
            minus = simulate(model, GRID, noise.negated(), table=table)
            deviations.append(0.5 * (plus.values[-1, 8] + minus.values[-1, 8]) - deterministic.values[-1, 8])
        deviations = np.array(deviations)
        se = np.std(deviations, ddof=1) / math.sqrt(ANTITHETIC_REPLICAS)
        assert abs(np.mean(deviations)) <= 4.0 * se

    def test_noise_shape_mismatch(self):
        noise = sample_noise(GridSpec(n_cells=8, dt=0.05, t_final=1.0), SEED, 0, math.pi)
        with pytest.raises(ShapeError):
            simulate(make_model(), GRID, noise)

    def test_blow_up_guard(self):
        model = make_model(lambda_level=0.1, u0=InitialCondition.mode_k(1, 1e13))
        with pytest.raises(BlowUpError) as err:
            simulate(model, GRID, sample_noise(GRID, SEED, 0, math.pi))
        assert err.value.step == 1
        assert 0 < err.value.node < GRID.n_cells


class TestReplicas:
    def test_streams(self):
        model = make_model(lambda_level=1.0)
        replicas = simulate_replicas(model, GRID, 3, SEED)
        assert replicas.aborted == []
        again = simulate(model, GRID, sample_noise(GRID, SEED, 2, math.pi))
        assert np.array_equal(replicas.paths[2].values, again.values)

    def test_first_stream(self):
        model = make_model(lambda_level=1.0)
        shifted = simulate_replicas(model, GRID, 2, SEED, first_stream=3)
        reference = simulate_replicas(model, GRID, 5, SEED)
        assert np.array_equal(shifted.paths[0].values, reference.paths[3].values)

    def test_all_aborted(self):
        model = make_model(lambda_level=0.1, u0=InitialCondition.mode_k(1, 1e13))
        replicas = simulate_replicas(model, GRID, 2, SEED)
        assert replicas.paths == []
        assert replicas.aborted == [0, 1]

    def test_bad_count(self):
        with pytest.raises(DomainError):
            simulate_replicas(make_model(), GRID, 0, SEED)


class TestProjectMode1:
    def make_path(self, profile, n_cells=16):
        grid = GridSpec(n_cells=n_cells, dt=0.5, t_final=1.0)
        nodes = grid.nodes(math.pi)
        values = np.tile(profile(nodes), (grid.n_steps + 1, 1))
        return SolutionPath(values, make_model(beta=1.0, n_modes=8), grid)

    def test_first_mode(self):
        projection = project_mode1(self.make_path(lambda x: math.sqrt(2.0 / math.pi) * np.sin(x)))
        np.testing.assert_allclose(projection, 1.0, atol=1e-6)

    def test_second_mode(self):
        projection = project_mode1(self.make_path(lambda x: math.sqrt(2.0 / math.pi) * np.sin(2.0 * x)))
        np.testing.assert_allclose(projection, 0.0, atol=1e-6)

    def test_constant(self):
        projection = project_mode1(self.make_path(np.ones_like, n_cells=256))
        np.testing.assert_allclose(projection, CONSTANT_MODE1, rtol=1e-4)

    def test_deterministic_decay(self):
        path = simulate(make_model(lambda_level=0.0), GRID, sample_noise(GRID, SEED, 0, math.pi))
        np.testing.assert_allclose(project_mode1(path), ml_neg(0.5, GRID.times**0.5), rtol=1e-12)
