"""Modal-shift design: move the slow modes left by the target rate, leave the fast ones."""

import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy.signal import place_poles

from ..core.error_handler import GainDesignError, UnobservableModeError
from ..core.spectral import SpectralBasis
from .base import DesignMethod, GainDesigner, ObserverGain, spectral_abscissa

logger = logging.getLogger(__name__)


class ModalShiftDesigner(GainDesigner):
    """Pole placement restricted to the slow modal subspace.

    Config keys:
        shift_modes: explicit list of mode tuples to shift (default: every
            mode with ``λ_k > -σ``)
        tolerance: slack on the final spectral-abscissa check
    """

    method = DesignMethod.MODAL_SHIFT
    options = frozenset({"shift_modes", "tolerance"})

    def _slow_indices(self, basis: SpectralBasis, target_rate: float) -> List[int]:
        requested: Sequence[Sequence[int]] = self.config.get("shift_modes") or []
        if requested:
            return sorted({basis.index_of(mode) for mode in requested})
        return [k for k, lam in enumerate(basis.eigenvalues) if lam > -target_rate]

    def design(
        self,
        basis: SpectralBasis,
        c_matrix: np.ndarray,
        target_rate: float,
    ) -> ObserverGain:
        slow = self._slow_indices(basis, target_rate)
        gain = np.zeros((basis.size, c_matrix.shape[0]))
        if not slow:
            logger.info(f"No mode slower than rate {target_rate}; zero gain")
            return ObserverGain(gain, self.method, target_rate)

        scale = max(float(np.abs(c_matrix).max()), 1.0)
        for k in slow:
            if np.all(np.abs(c_matrix[:, k]) <= 1e-12 * scale):
                mode: Tuple[int, ...] = basis.mode_indices[k]
                raise UnobservableModeError(
                    f"Mode {mode} must be shifted but every sensor row vanishes on it",
                    mode=mode,
                )

        a_slow = np.diag(basis.eigenvalues[slow])
        c_slow = c_matrix[:, slow]
        poles = basis.eigenvalues[slow] - target_rate

        if np.linalg.matrix_rank(c_slow) == len(slow):
            # Minimal-norm exact shift: H_S C_S = σ I on the slow block.
            gain_slow = target_rate * np.linalg.pinv(c_slow)
        else:
            try:
                placed = place_poles(a_slow.T, c_slow.T, poles)
            except (ValueError, np.linalg.LinAlgError) as e:
                raise GainDesignError(f"Pole placement failed on {len(slow)} slow modes: {e}") from e
            gain_slow = placed.gain_matrix.T

        gain[slow] = gain_slow
        generator = np.diag(basis.eigenvalues) - gain @ c_matrix
        abscissa = spectral_abscissa(generator)
        tolerance = float(self.config.get("tolerance", 1e-8))
        if not self.config.get("shift_modes") and abscissa > -target_rate + tolerance * max(1.0, target_rate):
            raise GainDesignError(
                f"Modal shift reached abscissa {abscissa:.6g}, target {-target_rate:.6g}"
            )

        logger.debug(
            f"Modal shift moved {len(slow)} mode(s); spectral abscissa {abscissa:.6g}"
        )
        return ObserverGain(gain, self.method, target_rate)
