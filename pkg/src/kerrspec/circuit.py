"""Lumped-element and materials physics of the grAl transmon.

Covers the LC resonance, Mattis-Bardeen kinetic inductance, the two-fluid
gap suppression by an in-plane field, the effective junction array picture
of the grAl volume and the two self-Kerr estimates. All functions are pure
and accept numpy arrays where that makes sense (field sweeps).

Units are SI throughout; mode frequencies passed to the Kerr estimates are
angular (rad/s), resonance frequencies returned are ordinary (Hz).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import constants as const
from ._validation import check_fraction, check_positive
from .exceptions import DomainError

__all__ = [
    "MaterialParams",
    "CircuitParams",
    "GrAlVolume",
    "JunctionModel",
    "SAMPLE_CIRCUIT",
    "SAMPLE_MATERIAL",
    "SAMPLE_VOLUME",
    "bcs_gap",
    "resonant_frequency",
    "mattis_bardeen_sheet_inductance",
    "wire_kinetic_inductance",
    "gap_vs_field",
    "al_kinetic_inductance_vs_field",
    "qubit_frequency_vs_field",
    "charging_energy",
    "effective_junction_number",
    "critical_current_density",
    "junction_critical_current",
    "self_kerr_estimate",
    "junction_kerr",
]


def bcs_gap(critical_temperature):
    """Zero-temperature BCS gap 1.764 k_B T_c in joules."""
    check_positive("critical_temperature", critical_temperature)
    return const.BCS_RATIO * const.k_B * critical_temperature


@dataclass(frozen=True)
class MaterialParams:
    sheet_resistance: float
    critical_temperature: float
    grain_size: float
    critical_current_density: float
    gap_zero: Optional[float] = None

    def __post_init__(self):
        for name in ("sheet_resistance", "critical_temperature", "grain_size",
                     "critical_current_density"):
            check_positive(name, getattr(self, name))
        if self.gap_zero is not None:
            check_positive("gap_zero", self.gap_zero)
            ratio = self.gap_zero / bcs_gap(self.critical_temperature)
            if not 0.5 <= ratio <= 2.0:
                raise DomainError(
                    f"gap_zero is {ratio:.3g} x the BCS value; expected within [0.5, 2]")

    @property
    def gap(self):
        if self.gap_zero is not None:
            return self.gap_zero
        return bcs_gap(self.critical_temperature)


@dataclass(frozen=True)
class CircuitParams:
    shunt_capacitance: float
    geometric_inductance: float
    gral_kinetic_inductance: float
    al_kinetic_inductance_zero_field: float
    al_critical_field: float
    gral_squares: float = 2.5

    def __post_init__(self):
        for name, value in self.__dict__.items():
            check_positive(name, value)

    @property
    def total_inductance(self):
        return (self.geometric_inductance + self.gral_kinetic_inductance
                + self.al_kinetic_inductance_zero_field)


@dataclass(frozen=True)
class GrAlVolume:
    thickness: float
    width: float
    length: float

    def __post_init__(self):
        for name, value in self.__dict__.items():
            check_positive(name, value)
        if not self.thickness <= self.width <= self.length:
            raise DomainError("expected thickness <= width <= length")

    @property
    def volume(self):
        return self.thickness * self.width * self.length

    @property
    def cross_section(self):
        return self.thickness * self.width


@dataclass(frozen=True)
class JunctionModel:
    effective_junction_count: float
    critical_current: float
    participation: float

    def __post_init__(self):
        if self.effective_junction_count < 1:
            raise DomainError("effective_junction_count must be >= 1")
        check_positive("critical_current", self.critical_current)
        check_fraction("participation", self.participation)


# Circuit of the measured sample (zero-field values).
SAMPLE_CIRCUIT = CircuitParams(
    shunt_capacitance=137e-15,
    geometric_inductance=450e-12,
    gral_kinetic_inductance=2.7e-9,
    al_kinetic_inductance_zero_field=200e-12,
    al_critical_field=0.150,
    gral_squares=2.5,
)
# grain size: midpoint of the quoted 3-5 nm range
SAMPLE_MATERIAL = MaterialParams(
    sheet_resistance=1800.0,
    critical_temperature=1.9,
    grain_size=4e-9,
    critical_current_density=0.4e9,
)
SAMPLE_VOLUME = GrAlVolume(thickness=10e-9, width=200e-9, length=500e-9)


def resonant_frequency(capacitance, total_inductance):
    """LC resonance 1/(2 pi sqrt(C L)) in Hz."""
    check_positive("capacitance", capacitance)
    check_positive("total_inductance", total_inductance)
    return 1.0 / (const.TWO_PI * np.sqrt(capacitance * total_inductance))


def mattis_bardeen_sheet_inductance(sheet_resistance, gap):
    """Kinetic sheet inductance h R_sq / (2 pi^2 Delta), local dirty limit."""
    check_positive("sheet_resistance", sheet_resistance)
    check_positive("gap", gap)
    return const.h * sheet_resistance / (2 * np.pi**2 * gap)


def wire_kinetic_inductance(normal_resistance, gap):
    """Kinetic inductance hbar R_n / (pi Delta) of a film with resistance R_n."""
    check_positive("normal_resistance", normal_resistance)
    check_positive("gap", gap)
    return const.hbar * normal_resistance / (np.pi * gap)


def _reduced_field(field, critical_field):
    check_positive("critical_field", critical_field)
    b = np.asarray(field, dtype=float)
    if np.any(~np.isfinite(b)) or np.any(b < 0):
        raise DomainError(f"field must be finite and >= 0, got {field!r}")
    if np.any(b >= critical_field):
        raise DomainError(
            f"field {np.max(b):.6g} T is at or above the critical field "
            f"{critical_field:.6g} T; the two-fluid model is undefined there")
    return (b / critical_field) ** 2


def gap_vs_field(field, critical_field, gap_zero):
    """Two-fluid gap suppression Delta_00 sqrt((1 - b^2) / (1 + b^2))."""
    check_positive("gap_zero", gap_zero)
    b2 = _reduced_field(field, critical_field)
    return gap_zero * np.sqrt((1 - b2) / (1 + b2))


def al_kinetic_inductance_vs_field(field, params):
    """Al kinetic inductance, the reciprocal of the gap suppression."""
    b2 = _reduced_field(field, params.al_critical_field)
    return params.al_kinetic_inductance_zero_field * np.sqrt((1 + b2) / (1 - b2))


def qubit_frequency_vs_field(field, params):
    """Lumped-element f_1(B); the grAl inductance is taken field independent."""
    inductance = (al_kinetic_inductance_vs_field(field, params)
                  + params.gral_kinetic_inductance + params.geometric_inductance)
    return resonant_frequency(params.shunt_capacitance, inductance)


def charging_energy(capacitance):
    """E_c / hbar = e^2 / (2 C hbar) in rad/s."""
    check_positive("capacitance", capacitance)
    return const.e**2 / (2 * capacitance * const.hbar)


def effective_junction_number(charging_energy, anharmonicity):
    """N = sqrt(E_c / (hbar alpha)); not rounded."""
    check_positive("charging_energy", charging_energy)
    check_positive("anharmonicity", anharmonicity)
    return np.sqrt(charging_energy / anharmonicity)


def critical_current_density(junction_count, gral_inductance, cross_section):
    """j_c = (Phi_0 / 2 pi) N / (L A) in A/m^2."""
    check_positive("junction_count", junction_count)
    check_positive("gral_inductance", gral_inductance)
    check_positive("cross_section", cross_section)
    return const.phi_0 / const.TWO_PI * junction_count / (gral_inductance * cross_section)


def junction_critical_current(josephson_inductance):
    """I_c = Phi_0 / (2 pi L_J) for a single junction."""
    check_positive("josephson_inductance", josephson_inductance)
    return const.phi_0 / (const.TWO_PI * josephson_inductance)


def self_kerr_estimate(grain_size, mode_frequency, current_density, volume,
                       geometry_factor=1.0):
    """Order-of-magnitude self-Kerr C pi e a w^2 / (j_c V) in rad/s.

    ``mode_frequency`` is angular. ``geometry_factor`` is the current
    distribution factor, of order one.
    """
    for name, value in (("grain_size", grain_size), ("mode_frequency", mode_frequency),
                        ("current_density", current_density), ("volume", volume),
                        ("geometry_factor", geometry_factor)):
        check_positive(name, value)
    return (geometry_factor * np.pi * const.e * grain_size * mode_frequency**2
            / (current_density * volume))


def junction_kerr(mode_frequency, critical_current, participation):
    """Kerr of one contact junction, h w^2 p^2 / (4 Phi_0 I_c), in rad/s.

    Implemented as printed; ``participation`` = 0 is allowed and gives 0.
    """
    check_positive("mode_frequency", mode_frequency)
    check_positive("critical_current", critical_current)
    check_positive("participation", participation, allow_zero=True)
    if participation >= 1:
        raise DomainError("participation must be < 1")
    return const.h * mode_frequency**2 / (4 * const.phi_0 * critical_current) * participation**2
