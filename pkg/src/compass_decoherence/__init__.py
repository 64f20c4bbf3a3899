"""Phase-space decoherence of compass states and their photon-added/subtracted variants."""

from .states import CompassParams, ReservoirParams

__all__ = ["CompassParams", "ReservoirParams"]
__version__ = "0.1.0"
