"""Tests for K, K*, the Gramians and the Γ-observability verdicts."""

import numpy as np
import pytest

from gamma_observer.core.domain import BoundaryRegion, DomainKind, DomainSpec, EdgePiece, full_boundary
from gamma_observer.core.error_handler import BasisMismatchError, DomainError, GridMismatchError
from gamma_observer.core.observability import (
    ObservabilityProblem,
    adjoint_Kstar,
    boundary_gramian,
    domain_gramian,
    forward_K,
    gramian_matrix,
    is_gamma_detectable,
    is_gamma_observable,
    output_inner,
    output_kernel,
    sampled_gramian,
)
from gamma_observer.core.observer import design_gain
from gamma_observer.core.sensing import OutputTrajectory, SensorKind, SensorSpec
from gamma_observer.core.spectral import StateField, build_basis, random_state, uniform_time_grid
from gamma_observer.gains import DesignMethod, ObserverGain


@pytest.fixture
def problem(interval_basis, irrational_sensor, left_end):
    return ObservabilityProblem(interval_basis, (irrational_sensor,), left_end, 0.5, 200)


@pytest.fixture
def midpoint_problem(interval_basis, interval):
    return ObservabilityProblem(
        interval_basis, (SensorSpec.point(0.5),), full_boundary(interval), 0.5, 200
    )


class TestObservationOperator:
    """Test cases for forward_K and adjoint_Kstar."""

    def test_adjoint_identity(self, problem):
        rng = np.random.default_rng(0)
        for _ in range(100):
            z = random_state(problem.basis, rng)
            y = OutputTrajectory(problem.time_grid, rng.standard_normal((problem.time_grid.size, 1)))
            lhs = output_inner(forward_K(problem, z), y)
            rhs = float(z.coefficients @ adjoint_Kstar(problem, y).coefficients)
            assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))

    @pytest.mark.parametrize(
        "sensor",
        [
            SensorSpec.point(0.3, 0.7),
            SensorSpec(SensorKind.INTERIOR_ZONE, support=((0.1, 0.4), (0.5, 0.9))),
            SensorSpec(SensorKind.BOUNDARY_POINTWISE, location=(0.35, 0.0)),
            SensorSpec(SensorKind.BOUNDARY_ZONE, edge_support=EdgePiece("left", 0.2, 0.6)),
        ],
        ids=lambda sensor: sensor.kind.value,
    )
    def test_rectangle_adjoint_identity(self, rectangle_basis, rectangle_nest, sensor):
        problem = ObservabilityProblem(rectangle_basis, (sensor,), rectangle_nest[0], 0.3, 60)
        rng = np.random.default_rng(1)
        for _ in range(100):
            z = random_state(rectangle_basis, rng)
            y = OutputTrajectory(problem.time_grid, rng.standard_normal((61, 1)))
            lhs = output_inner(forward_K(problem, z), y)
            rhs = float(z.coefficients @ adjoint_Kstar(problem, y).coefficients)
            assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))

    def test_sampled_gramian_is_KstarK(self, problem):
        z = random_state(problem.basis, np.random.default_rng(2))
        applied = adjoint_Kstar(problem, forward_K(problem, z)).coefficients
        np.testing.assert_allclose(sampled_gramian(problem) @ z.coefficients, applied, atol=1e-12)

    def test_adjoint_grid_checks(self, problem):
        other_grid = uniform_time_grid(1.0, 10)
        with pytest.raises(GridMismatchError):
            adjoint_Kstar(problem, OutputTrajectory(other_grid, np.zeros(11)))
        with pytest.raises(GridMismatchError):
            adjoint_Kstar(problem, OutputTrajectory(problem.time_grid, np.zeros((201, 2))))

    def test_problem_validation(self, interval_basis, irrational_sensor, rectangle_nest):
        with pytest.raises(BasisMismatchError):
            ObservabilityProblem(interval_basis, (irrational_sensor,), rectangle_nest[0], 0.5, 10)
        with pytest.raises(DomainError):
            ObservabilityProblem(interval_basis, (), full_boundary(interval_basis.domain), 0.5, 10)

    def test_forward_rejects_foreign_state(self, problem, rectangle_basis):
        with pytest.raises(BasisMismatchError):
            forward_K(problem, StateField.zeros(rectangle_basis))


class TestGramians:
    """Test cases for the Gramians and verdicts."""

    def test_gramian_symmetric_psd(self, problem):
        gramian = gramian_matrix(problem)
        np.testing.assert_allclose(gramian, gramian.T, atol=1e-14)
        report = domain_gramian(problem)
        assert report.is_psd

    def test_irrational_sensor_observes_endpoint(self, problem):
        observable, report = is_gamma_observable(problem)
        assert observable
        assert report.sigma_min > 1e-8

    def test_irrational_sensor_observes_boundary(self, problem, interval):
        observable, _ = is_gamma_observable(problem.with_region(full_boundary(interval)))
        assert observable

    def test_midpoint_sensor_misses_boundary(self, midpoint_problem):
        observable, report = is_gamma_observable(midpoint_problem)
        assert not observable
        assert report.kernel_dimension == 4
        assert report.kernel_leak > 0.1

    def test_midpoint_sensor_misses_left_end(self, interval, left_end):
        # z(0) carries the odd modes, which the midpoint sensor never sees
        problem = ObservabilityProblem(build_basis(interval, 4), (SensorSpec.point(0.5),), left_end, 0.5, 200)
        observable, report = is_gamma_observable(problem)
        assert not observable
        assert report.kernel_dimension == 2
        assert report.kernel_leak > 0.1
        assert report.trace_singular_values[-1] > 1e-8

    def test_irrational_sensor_has_no_kernel(self, problem):
        report = boundary_gramian(problem)
        assert report.kernel_dimension == 0
        assert report.kernel_leak == 0.0
        assert report.trace_singular_values.size == report.singular_values.size

    def test_midpoint_kernel_states_are_silent(self, midpoint_problem):
        kernel = output_kernel(midpoint_problem.basis, midpoint_problem.output_matrix)
        assert kernel.shape[1] == 4
        even = [midpoint_problem.basis.index_of((k,)) for k in (0, 2, 4, 6)]
        np.testing.assert_allclose(kernel[even], 0.0, atol=1e-12)
        rng = np.random.default_rng(3)
        for column in np.hstack([kernel, kernel @ rng.standard_normal((4, 20))]).T:
            y = forward_K(midpoint_problem, StateField(midpoint_problem.basis, column))
            assert np.sqrt(output_inner(y, y)) <= 1e-10

    def test_midpoint_kernel_is_odd_modes(self, midpoint_problem):
        gramian = gramian_matrix(midpoint_problem)
        for k in (1, 3, 5, 7):
            index = midpoint_problem.basis.index_of((k,))
            assert np.linalg.norm(gramian[:, index]) <= 1e-12

    def test_domain_verdict_implies_region_verdict(self, interval, irrational_sensor):
        basis = build_basis(interval, 3)
        problem = ObservabilityProblem(
            basis,
            (irrational_sensor,),
            BoundaryRegion.from_pieces(interval, [EdgePiece("left")]),
            1.0,
            100,
        )
        assert domain_gramian(problem).observable
        for region in (problem.region, full_boundary(interval)):
            observable, _ = is_gamma_observable(problem.with_region(region))
            assert observable

    def test_rectangle_regions(self, rectangle_basis, rectangle_nest):
        sensors = (SensorSpec.point(0.3, 0.7), SensorSpec.point(0.8, 0.1))
        problem = ObservabilityProblem(rectangle_basis, sensors, rectangle_nest[0], 0.5, 50)
        for region in rectangle_nest:
            report = boundary_gramian(problem.with_region(region))
            assert report.is_psd
            assert report.singular_values.size >= 1

    def test_adding_sensor_never_lowers_trace_spectrum(self, rectangle_basis, rectangle_nest):
        rng = np.random.default_rng(11)
        for _ in range(10):
            base = [SensorSpec.point(*rng.uniform(0.05, 0.95, size=2))]
            extra = base + [SensorSpec.point(*rng.uniform(0.05, 0.95, size=2))]
            for region in rectangle_nest:
                before = boundary_gramian(ObservabilityProblem(rectangle_basis, base, region, 0.5, 10))
                after = boundary_gramian(ObservabilityProblem(rectangle_basis, extra, region, 0.5, 10))
                tolerance = 1e-12 * before.trace_singular_values[0]
                assert np.all(after.trace_singular_values >= before.trace_singular_values - tolerance)
                assert after.kernel_dimension <= before.kernel_dimension

    def test_threshold_must_be_positive(self, problem):
        with pytest.raises(DomainError):
            is_gamma_observable(problem, threshold=0.0)


class TestDetectability:
    """Test cases for is_gamma_detectable."""

    def test_zero_gain_is_not_detectable(self, interval_basis, irrational_sensor, left_end):
        gain = ObserverGain(np.zeros((interval_basis.size, 1)), DesignMethod.MODAL_SHIFT, 1.0)
        report = is_gamma_detectable(interval_basis, (irrational_sensor,), gain, left_end)
        assert not report.detectable
        assert report.decay_rate == pytest.approx(0.0, abs=1e-12)
        assert report.region == "gamma"

    def test_designed_gain_is_detectable(self, interval_basis, irrational_sensor, left_end):
        gain = design_gain(interval_basis, (irrational_sensor,), DesignMethod.MODAL_SHIFT, 2.0)
        report = is_gamma_detectable(interval_basis, (irrational_sensor,), gain, left_end)
        assert report.detectable
        assert report.decay_rate >= 2.0 - 1e-8

    def test_gain_shape_mismatch(self, interval_basis, irrational_sensor):
        gain = ObserverGain(np.zeros((3, 1)), DesignMethod.MODAL_SHIFT, 1.0)
        with pytest.raises(GridMismatchError):
            is_gamma_detectable(interval_basis, (irrational_sensor,), gain)

    def test_rectangle_domain(self):
        domain = DomainSpec(DomainKind.RECTANGLE, (1.0, 2.0), 1.0, 16)
        basis = build_basis(domain, 3)
        sensors = (SensorSpec.point(0.3, 0.7),)
        gain = design_gain(basis, sensors, DesignMethod.MODAL_SHIFT, 1.0)
        report = is_gamma_detectable(basis, sensors, gain)
        assert report.detectable
