"""Driven two-level and Kerr-oscillator models of a granular-aluminium transmon,
with parameter estimation, coil field calculations and a reproducible CLI."""

__version__ = "0.1.0"

from .circuit import (CircuitParams, GrAlVolume, JunctionModel, MaterialParams,
                      SAMPLE_CIRCUIT, SAMPLE_MATERIAL, SAMPLE_VOLUME)
from .estimation import (ComplexTrace, FieldDependenceRegressor, FitResult,
                         LorentzianPeakRegressor, RabiPowerLawRegressor,
                         TwoLevelReflectionRegressor)
from .exceptions import AmbiguityError, ConfigError, DomainError, MissingPeakError
from .kerr import KerrModel, SAMPLE_KERR, SpectrumGrid
from .magnetics import CoilGeometry, HelmholtzPair
from .twolevel import DriveConfig, TwoLevelParams

__all__ = [
    "__version__",
    "AmbiguityError", "CircuitParams", "CoilGeometry", "ComplexTrace", "ConfigError",
    "DomainError", "DriveConfig", "FieldDependenceRegressor", "FitResult", "GrAlVolume",
    "HelmholtzPair", "JunctionModel", "KerrModel", "LorentzianPeakRegressor",
    "MaterialParams", "MissingPeakError", "SAMPLE_CIRCUIT", "SAMPLE_KERR", "SAMPLE_MATERIAL",
    "SAMPLE_VOLUME", "RabiPowerLawRegressor", "SpectrumGrid", "TwoLevelParams",
    "TwoLevelReflectionRegressor",
]
