"""Sharp adversarial-outlier thresholds for nonlinear LAD phase retrieval."""

from .balance import AMPLITUDE, INTENSITY, min_balance, sharp_threshold
from .dist_amp import AmpDistParams
from .dist_int import IntDistParams

__version__ = "0.1.0"

__all__ = [
    "AMPLITUDE",
    "INTENSITY",
    "AmpDistParams",
    "IntDistParams",
    "min_balance",
    "sharp_threshold",
]
