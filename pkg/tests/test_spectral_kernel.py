import math

import numpy as np
import pytest

from fracshe.special_fn import ml_neg
from fracshe.spectral_kernel import (
    CLASSICAL,
    FRACTIONAL,
    DomainSpec,
    InitialCondition,
    _composite_gauss_legendre,
    apply_initial,
    build_basis,
    g_D,
    increment_norms,
    kernel_dt,
    p_D,
    subordinated_kernel,
    tail_bound,
)
from fracshe.utils import DomainError, TruncationError


PI_HALF = 0.5 * math.pi
PHI1_AT_CENTER = 0.7978845608028654  # sqrt(2/pi)
CONVERGENCE_BETAS = [0.7, 0.8, 0.9, 0.95, 0.99]
# sup over t in [1e-2, 1e3] of t^(beta/2) sup_x G_D(t, x, x), calibrated for beta = 0.5, L = pi
SUP_BOUND_CONSTANT = 1.0
# increment constants, calibrated at t = 1, L = pi, x = pi/2 for beta in {0.4, 0.6, 0.8}
SPACE_INCREMENT_CONSTANT = 1.0
TIME_INCREMENT_CONSTANT = 1.0


def heat_partial_sum(t, x, y, terms=30, length=math.pi):
    return math.fsum(
        math.exp(-((n * math.pi / length) ** 2) * t)
        * (2.0 / length)
        * math.sin(n * math.pi * x / length)
        * math.sin(n * math.pi * y / length)
        for n in range(1, terms + 1)
    )


class TestBasis:
    def test_eigenvalues(self):
        assert build_basis(DomainSpec(math.pi, 5)).eigenvalues[0] == pytest.approx(1.0, rel=1e-15)
        assert build_basis(DomainSpec(1.0, 5)).eigenvalues[1] == pytest.approx(39.47841760435743, rel=1e-14)

    def test_eigenfunction_values(self):
        basis = build_basis(DomainSpec(math.pi, 4))
        assert basis.phi(1, PI_HALF) == pytest.approx(PHI1_AT_CENTER, rel=1e-15)
        assert basis.eigenfunctions(PI_HALF).shape == (4,)
        assert basis.eigenfunctions(np.zeros((2, 3))).shape == (4, 2, 3)

    def test_boundary_exact_zero(self):
        basis = build_basis(DomainSpec(math.pi, 50))
        assert np.all(basis.eigenfunctions(0.0) == 0.0)
        assert np.all(basis.eigenfunctions(math.pi) == 0.0)

    def test_orthonormal(self):
        basis = build_basis(DomainSpec(2.0, 12))
        nodes, weights = _composite_gauss_legendre(2.0, 32)
        phi = basis.eigenfunctions(nodes)
        np.testing.assert_allclose((phi * weights) @ phi.T, np.eye(12), atol=1e-12)

    def test_read_only(self):
        basis = build_basis(DomainSpec(1.0, 3))
        with pytest.raises(ValueError):
            basis.eigenvalues[0] = 0.0

    def test_outside_domain(self):
        basis = build_basis(DomainSpec(1.0, 3))
        with pytest.raises(DomainError):
            basis.eigenfunctions(1.5)
        with pytest.raises(DomainError):
            basis.eigenfunctions(-0.1)

    @pytest.mark.parametrize("length, n_modes", [(0.0, 4), (-1.0, 4), (1.0, 0), (1.0, 2.5)])
    def test_bad_domain(self, length, n_modes):
        with pytest.raises(DomainError):
            DomainSpec(length, n_modes)

    def test_bad_spec_type(self):
        with pytest.raises(DomainError):
            build_basis((1.0, 4))


class TestHeatKernel:
    def setup_method(self):
        self.basis = build_basis(DomainSpec(math.pi, 30))

    def test_center_value(self):
        value = p_D(self.basis, 1.0, PI_HALF, PI_HALF)
        assert value == pytest.approx(heat_partial_sum(1.0, PI_HALF, PI_HALF), rel=1e-13)
        assert value == pytest.approx(0.2342, abs=1e-4)

    def test_symmetric(self):
        x = np.linspace(0.1, 3.0, 7)
        values = p_D(self.basis, 0.3, x[:, None], x[None, :])
        assert values.shape == (7, 7)
        assert np.array_equal(values, values.T)

    def test_scalar_against_array(self):
        y = np.linspace(0.0, math.pi, 9)
        row = p_D(self.basis, 1.0, 0.7, y)
        assert row.shape == (9,)
        np.testing.assert_allclose(row, [p_D(self.basis, 1.0, 0.7, float(yi)) for yi in y], rtol=1e-14, atol=1e-300)
        np.testing.assert_allclose(p_D(self.basis, 1.0, y, 0.7), row, rtol=1e-14, atol=1e-300)
        pair = g_D(self.basis, 0.5, 1.0, PI_HALF, [0.5, 1.0])
        assert pair.shape == (2,)
        assert pair[1] == pytest.approx(g_D(self.basis, 0.5, 1.0, PI_HALF, 1.0), rel=1e-14)

    def test_boundary(self):
        y = np.linspace(0.0, math.pi, 9)
        assert np.all(p_D(self.basis, 0.5, 0.0, y) == 0.0)
        assert np.all(p_D(self.basis, 0.5, math.pi, y) == 0.0)

    def test_mass_defect(self):
        nodes, weights = _composite_gauss_legendre(math.pi, 64)
        for x in (0.2, 1.0, PI_HALF):
            mass = float(np.dot(weights, p_D(self.basis, 0.5, x, nodes)))
            assert 0.0 < mass <= 1.0

    def test_chapman_kolmogorov(self):
        basis = build_basis(DomainSpec(math.pi, 20))
        nodes, weights = _composite_gauss_legendre(math.pi, 64)
        x, y, s, t = 0.7, 2.1, 0.1, 0.2
        chained = np.dot(weights * p_D(basis, s, x, nodes), p_D(basis, t, nodes, y))
        assert chained == pytest.approx(p_D(basis, s + t, x, y), rel=1e-10)

    def test_truncation_error(self):
        basis = build_basis(DomainSpec(math.pi, 3))
        with pytest.raises(TruncationError) as err:
            p_D(basis, 1e-4, 1.0, 1.0)
        assert err.value.n_modes == 3
        assert err.value.tail_bound > err.value.tolerance

    def test_time_domain(self):
        with pytest.raises(DomainError):
            p_D(self.basis, 0.0, 1.0, 1.0)


class TestFractionalKernel:
    def setup_method(self):
        self.basis = build_basis(DomainSpec(math.pi, 40))

    def test_classical_collapse(self):
        x = np.linspace(0.0, math.pi, 5)
        assert np.array_equal(
            g_D(self.basis, 1.0, 0.7, x[:, None], x[None, :]), p_D(self.basis, 0.7, x[:, None], x[None, :])
        )

    def test_symmetric(self):
        x = np.linspace(0.2, 2.9, 5)
        values = g_D(self.basis, 0.6, 1.0, x[:, None], x[None, :])
        assert np.array_equal(values, values.T)

    def test_boundary_within_tail(self):
        y = np.linspace(0.0, math.pi, 7)
        bound = tail_bound(self.basis, 0.5, 1.0)
        assert np.all(np.abs(g_D(self.basis, 0.5, 1.0, 0.0, y)) <= bound)
        assert np.all(np.abs(g_D(self.basis, 0.5, 1.0, math.pi, y)) <= bound)

    def test_single_mode_decay(self):
        value = g_D(self.basis, 0.5, 1.0, PI_HALF, PI_HALF)
        modes = np.arange(1, 41)
        expected = np.dot(ml_neg(0.5, modes**2.0), (2.0 / math.pi) * np.sin(modes * PI_HALF) ** 2)
        assert value == pytest.approx(expected, rel=1e-12)

    def test_beta_to_one(self):
        grid = np.linspace(0.3, 2.8, 5)
        x, y = grid[:, None], grid[None, :]
        heat = p_D(self.basis, 1.0, x, y)
        gaps = [np.max(np.abs(g_D(self.basis, beta, 1.0, x, y) - heat)) for beta in CONVERGENCE_BETAS]
        assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
        assert gaps[-1] <= 0.05

    def test_sup_bound(self):
        basis = build_basis(DomainSpec(math.pi, 400))
        x = np.linspace(0.05, math.pi - 0.05, 21)
        scaled = [t**0.25 * np.max(g_D(basis, 0.5, t, x, x)) for t in np.logspace(-2, 3, 11)]
        assert max(scaled) <= SUP_BOUND_CONSTANT

    @pytest.mark.parametrize("beta, t, x, y", [(0.5, 1.0, PI_HALF, PI_HALF), (0.7, 0.5, 1.0, 2.0)])
    def test_subordination(self, beta, t, x, y):
        series = g_D(self.basis, beta, t, x, y)
        assert subordinated_kernel(self.basis, beta, t, x, y) == pytest.approx(series, abs=1e-4)

    def test_truncation_error(self):
        basis = build_basis(DomainSpec(math.pi, 10))
        with pytest.raises(TruncationError):
            g_D(basis, 0.5, 1e-3, 1.0, 1.0)
        # tail check can be waived
        assert math.isfinite(g_D(basis, 0.5, 1e-3, 1.0, 1.0, check_tail=False))


class TestKernelDerivative:
    def setup_method(self):
        self.basis = build_basis(DomainSpec(math.pi, 40))

    def test_single_classical_mode(self):
        basis = build_basis(DomainSpec(math.pi, 1))
        value = kernel_dt(basis, 1.0, 1.0, PI_HALF, PI_HALF, check_tail=False)
        assert value == pytest.approx(-math.exp(-1.0) * 2.0 / math.pi, rel=1e-14)

    def test_boundary(self):
        assert kernel_dt(self.basis, 0.5, 1.0, 0.0, 1.0) == 0.0

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_finite_difference(self, t):
        h = 1e-4 * t
        plus = g_D(self.basis, 0.5, t + h, PI_HALF, PI_HALF, check_tail=False)
        minus = g_D(self.basis, 0.5, t - h, PI_HALF, PI_HALF, check_tail=False)
        value = kernel_dt(self.basis, 0.5, t, PI_HALF, PI_HALF)
        assert value == pytest.approx((plus - minus) / (2.0 * h), rel=1e-5)


class TestApplyInitial:
    def setup_method(self):
        self.basis = build_basis(DomainSpec(math.pi, 20))

    def test_classical_mode_one(self):
        value = apply_initial(self.basis, CLASSICAL, InitialCondition.mode_k(1), 1.0, PI_HALF)
        assert value == pytest.approx(math.exp(-1.0) * PHI1_AT_CENTER, rel=1e-14)
        assert value == pytest.approx(0.2935, abs=1e-4)

    @pytest.mark.parametrize("beta", [0.3, 0.6, 0.9])
    def test_fractional_mode_one(self, beta):
        x = np.linspace(0.0, math.pi, 6)
        values = apply_initial(self.basis, FRACTIONAL, InitialCondition.mode_k(1), 0.8, x, beta=beta)
        np.testing.assert_allclose(values, ml_neg(beta, 0.8**beta) * self.basis.phi(1, x), rtol=1e-13, atol=1e-16)

    def test_higher_mode(self):
        value = apply_initial(self.basis, FRACTIONAL, InitialCondition.mode_k(3, 2.0), 0.5, 0.4, beta=0.5)
        assert value == pytest.approx(2.0 * ml_neg(0.5, 9.0 * 0.5**0.5) * self.basis.phi(3, 0.4), rel=1e-13)

    def test_zero(self):
        values = apply_initial(self.basis, FRACTIONAL, InitialCondition.zero(), 1.0, np.linspace(0, math.pi, 4), 0.5)
        assert np.all(values == 0.0)

    def test_bump_matches_quadrature(self):
        u0 = InitialCondition.bump(PI_HALF, 1.0)
        nodes, weights = _composite_gauss_legendre(math.pi, 64)
        for x in (0.5, PI_HALF, 2.5):
            expected = np.dot(weights * u0.evaluate(nodes, math.pi), p_D(self.basis, 0.5, x, nodes))
            assert apply_initial(self.basis, CLASSICAL, u0, 0.5, x) == pytest.approx(expected, abs=1e-5)

    def test_tabulated_truncation(self):
        u0 = InitialCondition.tabulated([0.0, 1.0, 2.0, 1.0, 0.0])
        with pytest.raises(TruncationError):
            apply_initial(self.basis, FRACTIONAL, u0, 1e-4, 1.0, beta=0.5)

    def test_unknown_kernel(self):
        with pytest.raises(DomainError):
            apply_initial(self.basis, "caputo", InitialCondition.mode_k(1), 1.0, 1.0)


class TestInitialCondition:
    def test_bump_support(self):
        u0 = InitialCondition.bump(1.0, 0.5, height=2.0)
        assert u0.evaluate(1.0, 3.0) == pytest.approx(2.0)
        assert np.all(u0.evaluate(np.array([0.0, 0.5, 1.5, 3.0]), 3.0) == 0.0)

    def test_mode_coefficients(self):
        basis = build_basis(DomainSpec(1.0, 4))
        np.testing.assert_array_equal(InitialCondition.mode_k(2, 3.0).coefficients(basis), [0.0, 3.0, 0.0, 0.0])

    def test_quadrature_coefficients(self):
        basis = build_basis(DomainSpec(math.pi, 6))
        values = np.sin(np.linspace(0.0, math.pi, 2001))
        values[[0, -1]] = 0.0
        u0 = InitialCondition.tabulated(values)
        coeffs = u0.coefficients(basis)
        assert coeffs[0] == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-5)
        np.testing.assert_allclose(coeffs[1:], 0.0, atol=1e-5)

    def test_mode_l1_norm(self):
        assert InitialCondition.mode_k(1).l1_norm(math.pi) == pytest.approx(2.0 * PHI1_AT_CENTER)

    @pytest.mark.parametrize(
        "u0, field",
        [
            (InitialCondition.bump(0.2, 0.5), "support"),
            (InitialCondition.bump(1.0, 0.0), "u0_half_width"),
            (InitialCondition.tabulated([1.0, 0.0]), "vanish"),
            (InitialCondition.tabulated([0.0]), "at least 2"),
            (InitialCondition.mode_k(0), "u0_mode"),
            (InitialCondition(kind="gaussian"), "u0_kind"),
        ],
    )
    def test_violations(self, u0, field):
        problems = u0.violations(2.0)
        assert len(problems) == 1
        assert field in problems[0]


class TestIncrementNorms:
    def setup_method(self):
        self.basis = build_basis(DomainSpec(math.pi, 10))

    def test_zero_shifts(self):
        norms = increment_norms(self.basis, 0.5, 1.0, PI_HALF, 0.0, 0.0, 0.5)
        assert norms.space_sq == 0.0
        assert norms.time_sq == 0.0

    @pytest.mark.parametrize("beta", [0.4, 0.6, 0.8])
    def test_calibrated_bound(self, beta):
        shift, eta = 0.1, 0.5
        norms = increment_norms(self.basis, beta, 1.0, PI_HALF, shift, shift, eta)
        assert 0.0 < norms.space_sq <= SPACE_INCREMENT_CONSTANT * shift**eta
        assert 0.0 < norms.time_sq <= TIME_INCREMENT_CONSTANT * shift**eta

    def test_classical_single_mode(self):
        basis = build_basis(DomainSpec(math.pi, 1))
        norms = increment_norms(basis, 1.0, 1.0, PI_HALF, 0.0, 0.2, 0.4)
        # (2/pi) (1 - e^-0.2)^2 int_0^1 e^(-2s) ds
        expected = 2.0 / math.pi * (1.0 - math.exp(-0.2)) ** 2 * 0.5 * (1.0 - math.exp(-2.0))
        assert norms.time_sq == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize(
        "x, k, h, eta",
        [
            (PI_HALF, 0.1, 0.0, 1.0),
            (PI_HALF, 0.1, 0.0, 0.0),
            (PI_HALF, 0.0, 0.1, 0.8),
            (PI_HALF, 0.0, -0.1, 0.5),
            (3.1, 0.1, 0.0, 0.5),
            (-0.1, 0.0, 0.0, 0.5),
        ],
    )
    def test_preconditions(self, x, k, h, eta):
        with pytest.raises(DomainError):
            increment_norms(self.basis, 0.5, 1.0, x, k, h, eta)
