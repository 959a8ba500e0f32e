"""Uplink spectral efficiency of scalable cell-free massive MIMO with
finite-resolution converters over spatially correlated Rician fading."""

__version__ = "0.1.0"

from .config import SimConfig, load_config  # noqa: F401
