"""Aggregation of random-coefficient autoregressive and Ornstein-Uhlenbeck processes.

The package computes mixture spectra, classifies long memory of the limit
aggregate, simulates finite panels and checks the local power laws numerically.
"""

from .classify import LMReport, classify_ar1, classify_ar2, classify_arp, classify_model, classify_oup
from .errors import LMAggError
from .laws import AngularLaw, RadialLaw, mixed_angular_law
from .model import InnovationScheme, ModelSpec, ar1_model, complex_pair_model
from .poles import PoleGroupSpec
from .spectral import SpectralCurve, existence_integral, mixture_F, mixture_H

__version__ = "0.1.0"

__all__ = [
    "AngularLaw", "InnovationScheme", "LMAggError", "LMReport", "ModelSpec", "PoleGroupSpec",
    "RadialLaw", "SpectralCurve", "ar1_model", "classify_ar1", "classify_ar2", "classify_arp",
    "classify_model", "classify_oup", "complex_pair_model", "existence_integral",
    "mixed_angular_law", "mixture_F", "mixture_H", "__version__",
]
