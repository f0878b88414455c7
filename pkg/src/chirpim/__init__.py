"""Link-level toolkit for multi-chirp-rate index modulation over Zadoff-Chu sequences."""

__version__ = "0.1.0"

from .config import SystemConfig

__all__ = ["SystemConfig", "__version__"]
