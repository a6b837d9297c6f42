"""Spectral laboratory for perturbations of rotating Couette flow."""

from .regime import RegimeKind, RegimeReport, classify, growth_rate
from .spectral_core import Frame, Grid, ModeClass, ModeIndex, SpectralField

__all__ = [
    "Frame", "Grid", "ModeClass", "ModeIndex", "RegimeKind", "RegimeReport", "SpectralField",
    "classify", "growth_rate",
]
__version__ = "0.1.0"
