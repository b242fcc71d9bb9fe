"""Scaled-adjoint design: H = κ C*, with κ found by line search."""

import logging

import numpy as np

from ..core.error_handler import GainDesignError
from ..core.spectral import SpectralBasis
from .base import DesignMethod, GainDesigner, ObserverGain, spectral_abscissa

logger = logging.getLogger(__name__)


class ScaledAdjointDesigner(GainDesigner):
    """Smallest κ (to bisection accuracy) with abscissa of ``A - κ C*C`` at most ``-σ``.

    Config keys:
        initial_scale: first κ tried (default 1.0)
        max_doublings: growth steps before giving up (default 60)
        bisection_steps: refinement steps once bracketed (default 40)
    """

    method = DesignMethod.SCALED_ADJOINT
    options = frozenset({"initial_scale", "max_doublings", "bisection_steps"})

    def design(
        self,
        basis: SpectralBasis,
        c_matrix: np.ndarray,
        target_rate: float,
    ) -> ObserverGain:
        a_matrix = np.diag(basis.eigenvalues)
        ctc = c_matrix.T @ c_matrix

        def abscissa(kappa: float) -> float:
            return spectral_abscissa(a_matrix - kappa * ctc)

        if abscissa(0.0) <= -target_rate:
            return ObserverGain(np.zeros_like(c_matrix.T), self.method, target_rate)

        initial = float(self.config.get("initial_scale", 1.0))
        upper = initial
        tried = initial
        for _ in range(int(self.config.get("max_doublings", 60))):
            tried = upper
            if abscissa(tried) <= -target_rate:
                break
            upper *= 2.0
        else:
            raise GainDesignError(
                f"No κ up to {tried:.3g} reaches rate {target_rate}; "
                f"best abscissa {abscissa(tried):.6g}",
                kappa=tried,
            )

        lower = upper / 2.0 if upper > initial else 0.0
        for _ in range(int(self.config.get("bisection_steps", 40))):
            middle = 0.5 * (lower + upper)
            if abscissa(middle) <= -target_rate:
                upper = middle
            else:
                lower = middle

        logger.debug(f"Scaled adjoint gain κ={upper:.6g}, abscissa {abscissa(upper):.6g}")
        return ObserverGain(upper * c_matrix.T, self.method, target_rate)
