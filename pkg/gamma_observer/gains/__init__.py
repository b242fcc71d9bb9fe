"""Output-injection gain designers."""

from typing import Any, Dict, Optional, Type, Union

from .base import DesignMethod, GainDesigner, ObserverGain, spectral_abscissa
from .modal_shift import ModalShiftDesigner
from .scaled_adjoint import ScaledAdjointDesigner

DESIGNERS: Dict[DesignMethod, Type[GainDesigner]] = {
    DesignMethod.MODAL_SHIFT: ModalShiftDesigner,
    DesignMethod.SCALED_ADJOINT: ScaledAdjointDesigner,
}


def get_designer(
    method: Union[DesignMethod, str],
    config: Optional[Dict[str, Any]] = None,
) -> GainDesigner:
    """Instantiate the designer registered for a method."""
    designer = DESIGNERS[DesignMethod(method)](config)
    if not designer.validate_config():
        unknown = sorted(set(designer.config) - designer.options)
        raise ValueError(f"Unknown options for {designer.method.value}: {unknown}")
    return designer


__all__ = [
    "DesignMethod",
    "GainDesigner",
    "ObserverGain",
    "ModalShiftDesigner",
    "ScaledAdjointDesigner",
    "DESIGNERS",
    "get_designer",
    "spectral_abscissa",
]
