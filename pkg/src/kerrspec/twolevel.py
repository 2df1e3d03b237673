"""Closed-form resonance fluorescence of a driven two-level system.

Detuning convention, used everywhere in the package: ``detuning = w_q - w``
(qubit minus drive, rad/s). Reflection coefficients follow the sign of the
imaginary part in the weak-drive reflection formula

    S11 = 1 - (2 kappa / G) (1 + 2i D / G) / (1 + (2 D / G)^2 + 2 (W / G)^2)

with G = kappa + gamma the total relaxation rate.
"""

from dataclasses import dataclass

import numpy as np

from . import constants as const
from ._validation import check_positive
from .exceptions import DomainError

__all__ = [
    "TwoLevelParams",
    "DriveConfig",
    "pauli_steady_state",
    "reflection_two_level",
    "reflection_from_pauli",
    "rabi_from_power",
    "drive_amplitude",
    "mollow_splittings",
    "excited_population",
]


@dataclass(frozen=True)
class TwoLevelParams:
    """Qubit-limit parameters. Rates are angular (rad/s), frequency in Hz."""

    qubit_frequency: float
    external_rate: float
    internal_rate: float
    pure_dephasing_rate: float = 0.0

    def __post_init__(self):
        check_positive("qubit_frequency", self.qubit_frequency)
        check_positive("external_rate", self.external_rate)
        check_positive("internal_rate", self.internal_rate, allow_zero=True)
        check_positive("pure_dephasing_rate", self.pure_dephasing_rate, allow_zero=True)

    @property
    def relaxation_rate(self):
        """Gamma_01 = kappa + gamma."""
        return self.external_rate + self.internal_rate

    @property
    def dephasing_rate(self):
        """Gamma_2 = Gamma_01 / 2 + Gamma_phi."""
        return self.relaxation_rate / 2 + self.pure_dephasing_rate

    @property
    def coupling_efficiency(self):
        return self.external_rate / self.relaxation_rate

    def detuning(self, probe_frequency):
        """Angular detuning w_q - w for a probe at ``probe_frequency`` (Hz)."""
        return const.TWO_PI * (self.qubit_frequency - np.asarray(probe_frequency, dtype=float))


@dataclass(frozen=True)
class DriveConfig:
    frequency: float
    on_chip_power: float
    attenuation: float = 0.0

    def __post_init__(self):
        check_positive("frequency", self.frequency)
        check_positive("on_chip_power", self.on_chip_power, allow_zero=True)

    @property
    def generator_power(self):
        return self.on_chip_power * 10 ** (self.attenuation / 10)


def pauli_steady_state(rabi, detuning, params):
    """Steady-state Bloch vector (sx, sy, sz).

    Broadcasts over array ``rabi`` and ``detuning``.
    """
    check_positive("rabi", rabi, allow_zero=True)
    g1 = params.relaxation_rate
    g2 = params.dephasing_rate
    rabi = np.asarray(rabi, dtype=float)
    detuning = np.asarray(detuning, dtype=float)
    if g1 == 0 and np.any(rabi > 0):
        raise DomainError("relaxation rate is zero; steady state undefined under drive")
    denom = g1 * (g2**2 + detuning**2) + g2 * rabi**2
    sx = g1 * g2 * rabi / denom
    sy = g1 * detuning * rabi / denom
    sz = -1 + g2 * rabi**2 / denom
    if sx.ndim == 0:
        return float(sx), float(sy), float(sz)
    return sx, sy, sz


def excited_population(rabi, detuning, params):
    """p_1 = (sz + 1) / 2, bounded by 1/2."""
    _, _, sz = pauli_steady_state(rabi, detuning, params)
    return (np.asarray(sz) + 1) / 2 if np.ndim(sz) else (sz + 1) / 2


def reflection_two_level(detuning, rabi, params):
    """Complex S11 of the driven qubit.

    Reduces to the weak-drive formula in the module docstring when the pure
    dephasing rate is zero; for finite dephasing the Bloch-vector solution is
    used (Gamma_2 in place of Gamma_01 / 2).
    """
    check_positive("rabi", rabi, allow_zero=True)
    kappa = params.external_rate
    g1 = params.relaxation_rate
    g2 = params.dephasing_rate
    detuning = np.asarray(detuning, dtype=float)
    rabi = np.asarray(rabi, dtype=float)
    # written with Gamma_2 so that g2 = g1 / 2 gives the weak-drive formula exactly
    denom = g1 * (g2**2 + detuning**2) + g2 * rabi**2
    s11 = 1 - kappa * g1 * (g2 + 1j * detuning) / denom
    return complex(s11) if s11.ndim == 0 else s11


def reflection_from_pauli(rabi, detuning, params):
    """S11 = 1 - sqrt(kappa) <sigma_-> / alpha_in from the Bloch vector.

    ``<sigma_->`` is evaluated as (sx + i sy) / 2, the phase convention of
    :func:`reflection_two_level`; with alpha_in = rabi / (2 sqrt(kappa)) the
    two functions agree identically.
    """
    if np.any(np.asarray(rabi) <= 0):
        raise DomainError("reflection_from_pauli needs a finite drive")
    sx, sy, _ = pauli_steady_state(rabi, detuning, params)
    sigma_minus = (np.asarray(sx) + 1j * np.asarray(sy)) / 2
    alpha_in = np.asarray(rabi) / (2 * np.sqrt(params.external_rate))
    return 1 - np.sqrt(params.external_rate) * sigma_minus / alpha_in


def drive_amplitude(power, frequency):
    """Incident photon-flux amplitude sqrt(P / (hbar w)) in sqrt(photons/s)."""
    check_positive("power", power, allow_zero=True)
    check_positive("frequency", frequency)
    return np.sqrt(power / (const.hbar * const.TWO_PI * frequency))


def rabi_from_power(drive, external_rate):
    """Rabi rate 2 sqrt(kappa) sqrt(P / (hbar w)) for an on-chip drive."""
    check_positive("external_rate", external_rate)
    return 2 * np.sqrt(external_rate) * drive_amplitude(drive.on_chip_power, drive.frequency)


def mollow_splittings(drive_power, drive_detuning, external_rate, drive_frequency):
    """Mollow sideband and Autler-Townes splittings in Hz.

    Returns ``(2 W_R / 2pi, W_R / 2pi)`` with the generalized Rabi rate
    W_R = sqrt(D^2 + W^2) and W = sqrt(4 kappa P / (h f)).
    """
    check_positive("drive_power", drive_power, allow_zero=True)
    check_positive("external_rate", external_rate, allow_zero=True)
    check_positive("drive_frequency", drive_frequency)
    omega = np.sqrt(4 * external_rate * np.asarray(drive_power, dtype=float)
                    / (const.h * drive_frequency))
    generalized = np.hypot(drive_detuning, omega)
    return 2 * generalized / const.TWO_PI, generalized / const.TWO_PI
