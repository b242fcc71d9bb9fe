"""Tests for the gain designers."""

import numpy as np
import pytest

from gamma_observer.core.error_handler import DomainError, GainDesignError, UnobservableModeError
from gamma_observer.core.sensing import SensorSpec, output_matrix
from gamma_observer.gains import (
    DesignMethod,
    ModalShiftDesigner,
    ObserverGain,
    ScaledAdjointDesigner,
    get_designer,
    spectral_abscissa,
)


def closed_loop_abscissa(basis, c_matrix, gain):
    return spectral_abscissa(np.diag(basis.eigenvalues) - gain.columns @ c_matrix)


class TestRegistry:
    """Test cases for the designer registry."""

    def test_get_designer(self):
        assert isinstance(get_designer("modal_shift"), ModalShiftDesigner)
        assert isinstance(get_designer(DesignMethod.SCALED_ADJOINT), ScaledAdjointDesigner)
        assert get_designer("modal_shift", {"tolerance": 1e-6}).config["tolerance"] == 1e-6

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            get_designer("kalman")

    def test_unknown_option(self):
        with pytest.raises(ValueError, match="max_doublings"):
            get_designer("modal_shift", {"max_doublings": 3})


class TestObserverGain:
    """Test cases for ObserverGain."""

    def test_gain_is_read_only(self):
        gain = ObserverGain(np.ones((3, 1)), "modal_shift", 1.0)
        assert gain.design_method == DesignMethod.MODAL_SHIFT
        assert gain.sensor_count == 1
        with pytest.raises(ValueError):
            gain.columns[0, 0] = 2.0

    def test_invalid_gain(self):
        with pytest.raises(DomainError):
            ObserverGain(np.array([1.0, np.nan])[:, None], DesignMethod.MODAL_SHIFT, 1.0)
        with pytest.raises(DomainError):
            ObserverGain(np.ones(3), DesignMethod.MODAL_SHIFT, 1.0)

    def test_scaled(self):
        gain = ObserverGain(np.ones((2, 1)), DesignMethod.SCALED_ADJOINT, 1.0).scaled(3.0)
        np.testing.assert_allclose(gain.columns, 3.0)


class TestModalShiftDesigner:
    """Test cases for ModalShiftDesigner."""

    @pytest.fixture
    def c_matrix(self, interval_basis, irrational_sensor):
        return output_matrix([irrational_sensor], interval_basis)

    def test_shift_constant_mode(self, interval_basis, c_matrix):
        gain = ModalShiftDesigner().design(interval_basis, c_matrix, 1.0)
        assert closed_loop_abscissa(interval_basis, c_matrix, gain) <= -1.0 + 1e-8
        np.testing.assert_allclose(gain.columns[1:], 0.0)

    def test_shift_two_modes_single_sensor(self, interval_basis, c_matrix):
        gain = ModalShiftDesigner().design(interval_basis, c_matrix, 20.0)
        assert closed_loop_abscissa(interval_basis, c_matrix, gain) <= -20.0 + 1e-6
        np.testing.assert_allclose(gain.columns[2:], 0.0)

    def test_two_sensors_exact_shift(self, interval_basis):
        sensors = [SensorSpec.point(1.0 / np.sqrt(2.0)), SensorSpec.point(0.2)]
        c_matrix = output_matrix(sensors, interval_basis)
        gain = ModalShiftDesigner().design(interval_basis, c_matrix, 20.0)
        slow = gain.columns[:2] @ c_matrix[:, :2]
        np.testing.assert_allclose(slow, 20.0 * np.eye(2), atol=1e-10)

    def test_unobservable_mode(self, interval_basis):
        c_matrix = output_matrix([SensorSpec.point(0.5)], interval_basis)
        with pytest.raises(UnobservableModeError) as info:
            ModalShiftDesigner().design(interval_basis, c_matrix, 10.0)
        assert info.value.mode == (1,)

    def test_explicit_shift_modes(self, interval_basis, c_matrix):
        designer = ModalShiftDesigner({"shift_modes": [[0], [1]]})
        gain = designer.design(interval_basis, c_matrix, 1.0)
        eigenvalues = np.sort(np.linalg.eigvals(np.diag(interval_basis.eigenvalues) - gain.columns @ c_matrix).real)
        np.testing.assert_allclose(eigenvalues[-2:], [-np.pi**2 - 1.0, -1.0], atol=1e-8)


class TestScaledAdjointDesigner:
    """Test cases for ScaledAdjointDesigner."""

    def test_reaches_target(self, interval_basis, irrational_sensor):
        c_matrix = output_matrix([irrational_sensor], interval_basis)
        gain = ScaledAdjointDesigner().design(interval_basis, c_matrix, 1.0)
        assert closed_loop_abscissa(interval_basis, c_matrix, gain) <= -1.0 + 1e-9
        np.testing.assert_allclose(gain.columns / gain.columns[0, 0], c_matrix.T / c_matrix[0, 0])

    def test_unreachable_target(self, interval_basis, irrational_sensor):
        c_matrix = output_matrix([irrational_sensor], interval_basis)
        with pytest.raises(GainDesignError):
            ScaledAdjointDesigner({"max_doublings": 30}).design(interval_basis, c_matrix, 20.0)

    def test_failure_reports_last_scale_tried(self, interval_basis, irrational_sensor):
        c_matrix = output_matrix([irrational_sensor], interval_basis)
        designer = ScaledAdjointDesigner({"initial_scale": 1.0, "max_doublings": 3})
        with pytest.raises(GainDesignError, match=r"No κ up to 4 reaches") as info:
            designer.design(interval_basis, c_matrix, 20.0)
        assert info.value.context["kappa"] == 4.0
