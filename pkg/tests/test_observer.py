"""Tests for the identity observer, decay fitting and observer identities."""

import numpy as np
import pytest

from gamma_observer.core.error_handler import GridMismatchError, NothingToFitError
from gamma_observer.core.observer import (
    assemble_observer,
    certify_decay,
    design_gain,
    error_trajectory,
    fit_exponential_decay,
    generator_flow,
    plant_outputs,
    simulate_observer,
    simulate_plant,
    verify_observer_identities,
)
from gamma_observer.core.sensing import OutputTrajectory
from gamma_observer.core.spectral import ControlSignal, StateField, mild_solution, uniform_time_grid
from gamma_observer.gains import DesignMethod, ObserverGain


@pytest.fixture
def system(interval_basis, irrational_sensor, left_end):
    gain = design_gain(interval_basis, (irrational_sensor,), DesignMethod.MODAL_SHIFT, 1.0)
    return assemble_observer(interval_basis, (irrational_sensor,), gain, left_end)


@pytest.fixture
def z0(interval_basis):
    return StateField(interval_basis, 1.0 / interval_basis.h1_weights)


@pytest.fixture
def time_grid():
    return uniform_time_grid(5.0, 500)


class TestObserverSimulation:
    """Plant plus observer runs."""

    def test_error_decays_at_target_rate(self, system, z0, time_grid):
        z_traj = simulate_plant(system.basis, z0, time_grid)
        y = plant_outputs(system.sensors, z_traj)
        w_traj = simulate_observer(system, y)
        errors = error_trajectory(system, z_traj, w_traj)

        certificate = certify_decay(time_grid, errors, tolerance=0.1)
        assert certificate.certified
        assert certificate.fit.sigma >= 0.9
        assert certificate.final_error <= certificate.bound

    def test_matched_start_stays_exact(self, system, z0, time_grid):
        z_traj = simulate_plant(system.basis, z0, time_grid)
        y = plant_outputs(system.sensors, z_traj)
        w_traj = simulate_observer(system, y, w0=z0)
        assert np.max(error_trajectory(system, z_traj, w_traj)) <= 1e-10

    def test_scaled_adjoint_observer(self, interval_basis, irrational_sensor, left_end, z0, time_grid):
        gain = design_gain(interval_basis, (irrational_sensor,), DesignMethod.SCALED_ADJOINT, 1.0)
        system = assemble_observer(interval_basis, (irrational_sensor,), gain, left_end)
        z_traj = simulate_plant(interval_basis, z0, time_grid)
        errors = error_trajectory(system, z_traj, simulate_observer(system, plant_outputs(system.sensors, z_traj)))
        assert errors[-1] < errors[0]

    def test_plant_with_control_tracks_mild_solution(self, interval_basis, z0):
        grid = uniform_time_grid(0.5, 400)
        control = ControlSignal(grid, np.ones((grid.size, 1)))
        inputs = [StateField.mode(interval_basis, (1,))]
        trajectory = simulate_plant(interval_basis, z0, grid, inputs, control)
        exact = mild_solution(interval_basis, z0, inputs, control, 0.5)
        np.testing.assert_allclose(trajectory.coefficients[-1], exact.coefficients, atol=1e-4)

    def test_control_grid_mismatch(self, interval_basis, z0):
        grid = uniform_time_grid(0.5, 10)
        control = ControlSignal(uniform_time_grid(0.5, 20), np.ones((21, 1)))
        with pytest.raises(GridMismatchError):
            simulate_plant(interval_basis, z0, grid, [StateField.mode(interval_basis, (0,))], control)

    def test_generator_flow_matches_scheme(self, system, z0):
        grid = uniform_time_grid(1.0, 2000)
        exact = generator_flow(system, z0, grid)
        zero_outputs = plant_outputs(system.sensors, simulate_plant(system.basis, StateField.zeros(system.basis), grid))
        stepped = simulate_observer(system, zero_outputs, w0=z0)
        np.testing.assert_allclose(stepped.coefficients[-1], exact.coefficients[-1], atol=1e-5)

    def test_observer_stepping_is_second_order(self, system, z0):
        horizon = 1.0
        errors = []
        for steps in (100, 200, 400):
            grid = uniform_time_grid(horizon, steps)
            zero_plant = simulate_plant(system.basis, StateField.zeros(system.basis), grid)
            stepped = simulate_observer(system, plant_outputs(system.sensors, zero_plant), w0=z0)
            exact = generator_flow(system, z0, grid)
            errors.append(np.linalg.norm(stepped.coefficients[-1] - exact.coefficients[-1]))
        for coarse, fine in zip(errors, errors[1:]):
            assert 3.0 <= coarse / fine <= 5.0

    def test_channel_mismatch(self, system, interval_basis, time_grid):
        two_channels = OutputTrajectory(time_grid, np.zeros((time_grid.size, 2)))
        with pytest.raises(GridMismatchError):
            simulate_observer(system, two_channels)

    def test_gain_shape_checked(self, interval_basis, irrational_sensor):
        gain = ObserverGain(np.zeros((interval_basis.size, 2)), DesignMethod.MODAL_SHIFT, 1.0)
        with pytest.raises(GridMismatchError):
            assemble_observer(interval_basis, (irrational_sensor,), gain)


class TestDecayFit:
    """Test cases for fit_exponential_decay and certify_decay."""

    def test_exact_exponential(self):
        times = np.linspace(0.0, 4.0, 201)
        fit = fit_exponential_decay(times, 3.0 * np.exp(-2.0 * times))
        assert fit.sigma == pytest.approx(2.0, rel=1e-10)
        assert fit.F == pytest.approx(3.0, rel=1e-10)
        assert fit.residual < 1e-10
        assert fit.bound(1.0) == pytest.approx(3.0 * np.exp(-2.0))

    def test_window_stops_at_noise_floor(self):
        times = np.linspace(0.0, 10.0, 101)
        norms = np.exp(-times)
        norms[60:] = 0.0
        fit = fit_exponential_decay(times, norms)
        assert fit.window[1] < times[60]
        assert fit.sigma == pytest.approx(1.0, rel=1e-10)

    def test_constant_norms_do_not_decay(self):
        times = np.linspace(0.0, 1.0, 50)
        fit = fit_exponential_decay(times, np.full(50, 2.5))
        assert fit.sigma == pytest.approx(0.0, abs=1e-10)
        assert fit.F == pytest.approx(2.5, rel=1e-10)

    def test_nothing_to_fit(self):
        times = np.linspace(0.0, 1.0, 11)
        with pytest.raises(NothingToFitError, match="nothing to fit"):
            fit_exponential_decay(times, np.zeros(11))
        with pytest.raises(GridMismatchError):
            fit_exponential_decay(times, np.zeros(5))

    def test_certify_floor_trajectory(self):
        times = np.linspace(0.0, 1.0, 11)
        certificate = certify_decay(times, np.zeros(11))
        assert certificate.certified
        assert certificate.fit is None

    def test_growing_error_not_certified(self):
        times = np.linspace(0.0, 1.0, 50)
        certificate = certify_decay(times, np.exp(times))
        assert not certificate.certified


class TestObserverIdentities:
    """Test cases for verify_observer_identities."""

    def test_identities(self, system):
        report = verify_observer_identities(system)
        scale = max(1.0, float(np.abs(system.generator).max()))
        assert report.holds("output_injection")
        assert report.holds("sylvester_luenberger", 1e-12 * scale)
        assert report.holds("input_map")
        assert report.residuals["sylvester_as_printed"] > 1.0

    def test_input_map_mismatch(self, interval_basis, irrational_sensor, left_end):
        gain = design_gain(interval_basis, (irrational_sensor,), DesignMethod.MODAL_SHIFT, 1.0)
        inputs = [StateField.mode(interval_basis, (0,))]
        system = assemble_observer(interval_basis, (irrational_sensor,), gain, left_end, inputs)
        report = verify_observer_identities(system, [StateField.mode(interval_basis, (1,))])
        assert report.residuals["input_map"] == pytest.approx(np.sqrt(2.0))
        assert verify_observer_identities(system, inputs).holds("input_map")
