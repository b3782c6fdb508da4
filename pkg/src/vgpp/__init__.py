"""Variance Gamma++ process toolkit.

Distributional functions, forward/backward path simulation, integral-free
European pricing, FFT and Monte Carlo pricers, calibration, exotic pricing,
and the common-factor multivariate subordinator.
"""

from . import calibration, distributions, ept, exotics, gammapp, multivariate, paths, pricing, process
from .calibration import CalibResult, QuoteSet, ReturnSeries, constrained_params
from .distributions import PolyaParams, RngStream
from .ept import CGMParams, EPTRealization, cgm_from_vg
from .exotics import LSMCConfig, VGParams
from .gammapp import AtomicDensity, GammaPPParams, LevyTriplet
from .multivariate import MultiGPPParams
from .paths import SamplePath
from .pricing import FFTConfig, MarketModel
from .process import DecomposedBetas, VGPPParams

__version__ = "0.1.0"

__all__ = [
    "AtomicDensity",
    "CGMParams",
    "CalibResult",
    "DecomposedBetas",
    "EPTRealization",
    "FFTConfig",
    "GammaPPParams",
    "LSMCConfig",
    "LevyTriplet",
    "MarketModel",
    "MultiGPPParams",
    "PolyaParams",
    "QuoteSet",
    "ReturnSeries",
    "RngStream",
    "SamplePath",
    "VGPPParams",
    "VGParams",
    "calibration",
    "cgm_from_vg",
    "constrained_params",
    "distributions",
    "ept",
    "exotics",
    "gammapp",
    "multivariate",
    "paths",
    "pricing",
    "process",
]
