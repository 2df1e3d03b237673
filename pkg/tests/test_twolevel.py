import numpy as np
import pytest
from hypothesis import given, strategies as st

from kerrspec import constants as const
from kerrspec.exceptions import DomainError
from kerrspec.twolevel import (
    DriveConfig, TwoLevelParams, drive_amplitude, excited_population, mollow_splittings,
    pauli_steady_state, rabi_from_power, reflection_from_pauli, reflection_two_level)

from oracles import bloch_steady_state

QUBIT = TwoLevelParams(7.4887e9, const.TWO_PI * 40e3, const.TWO_PI * 10e3)
GAMMA = QUBIT.relaxation_rate


def weak_drive_formula(detuning, rabi, kappa, gamma):
    g = kappa + gamma
    return 1 - (2 * kappa / g) * (1 + 2j * detuning / g) / (1 + (2 * detuning / g) ** 2
                                                             + 2 * (rabi / g) ** 2)


def test_resonant_dip():
    assert reflection_two_level(0.0, 0.0, QUBIT) == pytest.approx(-0.6, abs=1e-12)


def test_lifetimes():
    assert 1 / QUBIT.external_rate == pytest.approx(3.98e-6, abs=0.005e-6)
    assert 1 / QUBIT.internal_rate == pytest.approx(15.9e-6, abs=0.05e-6)


@given(st.floats(-20, 20), st.floats(0, 10), st.floats(0.05, 0.95))
def test_matches_weak_drive_formula(x, w, eta):
    qubit = TwoLevelParams(7e9, eta * GAMMA, (1 - eta) * GAMMA)
    got = reflection_two_level(x * GAMMA, w * GAMMA, qubit)
    want = weak_drive_formula(x * GAMMA, w * GAMMA, qubit.external_rate, qubit.internal_rate)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_far_detuned_is_unity():
    assert abs(reflection_two_level(100 * GAMMA, 0.0, QUBIT) - 1) < 0.01


@given(st.floats(-10, 10), st.floats(0.01, 10), st.floats(0, 2))
def test_reflection_from_bloch_vector_is_identical(x, w, phi):
    qubit = TwoLevelParams(7e9, 0.8 * GAMMA, 0.2 * GAMMA, phi * GAMMA)
    a = reflection_from_pauli(w * GAMMA, x * GAMMA, qubit)
    b = reflection_two_level(x * GAMMA, w * GAMMA, qubit)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("w, x, phi", [
    (0.5, 0.0, 0.0), (2.0, 1.0, 0.0), (1.0, -2.0, 0.3), (4.0, 0.5, 1.0), (0.1, 3.0, 0.0)])
def test_pauli_steady_state_against_bloch_integration(w, x, phi):
    qubit = TwoLevelParams(7e9, 0.8 * GAMMA, 0.2 * GAMMA, phi * GAMMA)
    closed = np.array(pauli_steady_state(w * GAMMA, x * GAMMA, qubit))
    # the oracle integrates in units of GAMMA to keep step counts modest
    numeric = bloch_steady_state(w, x, 1.0, qubit.dephasing_rate / GAMMA)
    assert np.max(np.abs(closed - numeric)) < 1e-8


def test_bloch_vector_length_bounded():
    w = np.linspace(0, 20, 50)[:, None] * GAMMA
    x = np.linspace(-10, 10, 41)[None, :] * GAMMA
    sx, sy, sz = pauli_steady_state(w, x, QUBIT)
    assert np.all(sx**2 + sy**2 + sz**2 <= 1 + 1e-12)


def test_excited_population_saturates_at_half():
    assert excited_population(1e4 * GAMMA, 0.0, QUBIT) == pytest.approx(0.5, abs=1e-7)
    assert excited_population(0.0, 0.0, QUBIT) == 0.0
    p = excited_population(np.logspace(-2, 3, 60) * GAMMA, 0.0, QUBIT)
    assert np.all(np.diff(p) > 0) and np.all(p < 0.5)


def test_rabi_from_power():
    drive = DriveConfig(7.4887e9, 1e-18)
    amp = np.sqrt(1e-18 / (const.hbar * const.TWO_PI * 7.4887e9))
    assert rabi_from_power(drive, QUBIT.external_rate) == pytest.approx(
        2 * np.sqrt(QUBIT.external_rate) * amp, rel=1e-14)
    assert drive_amplitude(0.0, 7e9) == 0.0


def test_generator_power_adds_attenuation():
    assert DriveConfig(7e9, 1e-18, attenuation=103).generator_power == pytest.approx(
        1e-18 * 10**10.3)


@given(st.floats(0, 1e-12), st.floats(-1e8, 1e8))
def test_mollow_is_twice_autler_townes(power, detuning):
    mollow, at = mollow_splittings(power, detuning, QUBIT.external_rate, 7.4887e9)
    assert mollow == pytest.approx(2 * at, rel=1e-15)


@given(st.floats(-1e8, 1e8))
def test_mollow_zero_power_collapses_to_detuning(detuning):
    mollow, at = mollow_splittings(0.0, detuning, QUBIT.external_rate, 7.4887e9)
    assert (mollow, at) == (pytest.approx(2 * abs(detuning) / const.TWO_PI),
                            pytest.approx(abs(detuning) / const.TWO_PI))


@given(st.floats(1e-20, 1e-12), st.floats(1.01, 100))
def test_mollow_scales_with_root_power_on_resonance(power, factor):
    m1, a1 = mollow_splittings(power, 0.0, QUBIT.external_rate, 7.4887e9)
    m2, a2 = mollow_splittings(power * factor, 0.0, QUBIT.external_rate, 7.4887e9)
    assert m2 / m1 == pytest.approx(np.sqrt(factor), rel=1e-12)
    assert a2 / a1 == pytest.approx(np.sqrt(factor), rel=1e-12)


def test_mollow_equals_rabi_rate():
    p = 1e-16
    _, at = mollow_splittings(p, 0.0, QUBIT.external_rate, 7.4887e9)
    assert at * const.TWO_PI == pytest.approx(
        rabi_from_power(DriveConfig(7.4887e9, p), QUBIT.external_rate), rel=1e-12)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        TwoLevelParams(7e9, 0.0, 1.0)
    with pytest.raises(DomainError):
        TwoLevelParams(7e9, 1.0, -1.0)
    with pytest.raises(DomainError):
        reflection_two_level(0.0, -1.0, QUBIT)
    with pytest.raises(DomainError):
        reflection_from_pauli(0.0, 0.0, QUBIT)
    with pytest.raises(DomainError):
        mollow_splittings(-1.0, 0.0, 1.0, 7e9)
