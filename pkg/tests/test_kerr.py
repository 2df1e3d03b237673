from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from kerrspec import constants as const
from kerrspec.exceptions import AmbiguityError, DomainError, MissingPeakError
from kerrspec.kerr import (
    SAMPLE_KERR, KerrModel, SpectrumGrid, annihilation, build_kerr_hamiltonian,
    build_liouvillian, extract_multiphoton_peaks, kerr_shift_series, ladder_frequencies,
    ladder_from_eigenvalues, ladder_window_grid, photon_number_curve, reflection_kerr,
    solve_point, steady_state, sweep_spectrum, sweep_threads, validate_density_matrix)
from kerrspec.twolevel import TwoLevelParams, excited_population, reflection_two_level

from oracles import (kerr_operators, lindblad_rk4_steady, liouvillian_by_columns,
                     propagated_steady, trace_distance)

GAMMA = SAMPLE_KERR.relaxation_rate


def dbm(x):
    return 10 ** ((x - 30) / 10)


# -- Hamiltonian and generator ----------------------------------------------

def test_hamiltonian_structure():
    h = build_kerr_hamiltonian(2.0, 3.0, 0.5, 6)
    n = np.arange(6)
    assert np.allclose(np.diag(h), 2.0 * n - 1.5 * n * (n - 1))
    assert np.allclose(np.diag(h, 1), -0.25 * np.sqrt(n[1:]))
    assert np.allclose(h, h.conj().T)
    assert np.count_nonzero(np.triu(h, 2)) == 0


def test_harmonic_limit_and_kerr_entry():
    h = build_kerr_hamiltonian(1.5, 0.0, 0.0, 5)
    assert np.allclose(h, np.diag(1.5 * np.arange(5)))
    assert build_kerr_hamiltonian(0.0, 7.0, 0.0, 4)[2, 2] == -7.0


@pytest.mark.parametrize("n", [1, 0, 65, 2.5])
def test_truncation_bounds(n):
    with pytest.raises(DomainError):
        build_kerr_hamiltonian(0.0, 1.0, 0.0, n)


def test_ladder_identity_from_eigenvalues():
    assert np.allclose(ladder_from_eigenvalues(SAMPLE_KERR, 12), ladder_frequencies(SAMPLE_KERR, 12),
                       rtol=0, atol=1e-5)
    # f3 on the ideal ladder
    assert ladder_frequencies(SAMPLE_KERR, 3)[-1] == pytest.approx(7.4842e9, abs=1.0)


def test_eigvalsh_ladder_matches_closed_form():
    h = build_kerr_hamiltonian(0.0, SAMPLE_KERR.self_kerr, 0.0, 20)
    energies = np.sort(np.linalg.eigvalsh(h))[::-1]  # E_n decreases with n for K > 0
    n = np.arange(1, 12)
    fn = SAMPLE_KERR.mode_frequency + (energies[n] - energies[0]) / (const.TWO_PI * n)
    assert np.allclose(fn, ladder_frequencies(SAMPLE_KERR, 11)[0:], atol=1e-6)


def test_zero_generator():
    liouv = build_liouvillian(np.zeros((4, 4)), 0.0)
    assert liouv.nnz == 0 or np.allclose(liouv.toarray(), 0)


@given(st.integers(2, 8), st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 5), st.floats(0, 5))
def test_trace_preservation(n, det, kerr, drive, rate):
    liouv = build_liouvillian(build_kerr_hamiltonian(det, kerr, drive, n), rate).toarray()
    trace_row = np.eye(n).reshape(-1, order="F")
    assert np.max(np.abs(trace_row @ liouv)) < 1e-10


@given(st.integers(2, 6), st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 3), st.floats(0.1, 3))
def test_generator_matches_column_oracle(n, det, kerr, drive, rate):
    h, a = kerr_operators(det, kerr, drive, n)
    assert np.allclose(build_liouvillian(h, rate).toarray(), liouvillian_by_columns(h, a, rate),
                       atol=1e-12)


def test_two_level_decay_eigenvalue():
    liouv = build_liouvillian(build_kerr_hamiltonian(0.0, 0.0, 0.0, 2), 3.7).toarray()
    eig = np.linalg.eigvals(liouv)
    assert np.min(np.abs(eig + 3.7)) < 1e-12


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        build_liouvillian(np.zeros((3, 4)), 1.0)
    with pytest.raises(DomainError):
        steady_state(sp.identity(5))


# -- steady state -----------------------------------------------------------

def test_undriven_steady_state_is_vacuum():
    for method in ("lstsq", "direct"):
        rho = steady_state(build_liouvillian(build_kerr_hamiltonian(1.0, 2.0, 0.0, 6), 1.0),
                           method)
        vacuum = np.zeros((6, 6))
        vacuum[0, 0] = 1
        assert np.allclose(rho, vacuum, atol=1e-12)


def test_ambiguous_null_space():
    # no dissipation and no drive: every Fock state is stationary
    liouv = build_liouvillian(build_kerr_hamiltonian(1.0, 2.0, 0.0, 4), 0.0)
    with pytest.raises(AmbiguityError, match="singular value"):
        steady_state(liouv, "lstsq")


def test_residual_and_invariants():
    liouv = build_liouvillian(build_kerr_hamiltonian(0.3 * GAMMA, SAMPLE_KERR.self_kerr,
                                                     2 * GAMMA, 12), GAMMA)
    for method in ("lstsq", "direct"):
        rho = steady_state(liouv, method)
        validate_density_matrix(rho)
        resid = np.linalg.norm(liouv @ rho.reshape(-1, order="F"))
        assert resid <= 1e-9 * sp.linalg.norm(liouv)


def test_direct_and_lstsq_agree():
    liouv = build_liouvillian(build_kerr_hamiltonian(-0.7 * GAMMA, 30 * GAMMA, 5 * GAMMA, 15),
                              GAMMA)
    assert trace_distance(steady_state(liouv, "lstsq"), steady_state(liouv, "direct")) < 1e-10


def test_two_level_population_matches_closed_form():
    qubit = TwoLevelParams(7.4887e9, SAMPLE_KERR.external_rate, SAMPLE_KERR.internal_rate)
    for w in (0.1, 1.0, 3.0):
        liouv = build_liouvillian(build_kerr_hamiltonian(0.0, 0.0, w * GAMMA, 2), GAMMA)
        rho = steady_state(liouv)
        assert rho[1, 1].real == pytest.approx(excited_population(w * GAMMA, 0.0, qubit),
                                               abs=1e-8)


RANDOM_SETS = [
    # detuning, kerr, drive in units of the relaxation rate, and truncation
    (0.0, 3.0, 1.0, 6),
    (0.8, 5.0, 2.5, 8),
    (-1.5, 2.0, 0.7, 10),
    (2.5, 8.0, 4.0, 10),
    (-0.3, 1.0, 1.8, 7),
]


@pytest.mark.parametrize("det, kerr, drive, n", RANDOM_SETS)
def test_steady_state_against_rk4(det, kerr, drive, n):
    h, a = kerr_operators(det, kerr, drive, n)
    numeric = lindblad_rk4_steady(h, a, 1.0)
    for method in ("lstsq", "direct"):
        rho = steady_state(build_liouvillian(h, 1.0), method)
        assert trace_distance(rho, numeric) < 1e-6


def test_steady_state_against_propagator_at_third_order_peak():
    model = SAMPLE_KERR
    f3 = ladder_frequencies(model, 3)[-1]
    rho, drive = solve_point(model, f3, dbm(-121))
    h, a = kerr_operators(model.detuning(f3), model.self_kerr, drive, model.truncation)
    numeric = propagated_steady(h, a, GAMMA, 120 / GAMMA)
    assert trace_distance(rho, numeric) < 1e-6


# -- reflection ---------------------------------------------------------------

def test_vacuum_reflects_fully():
    rho = np.zeros((5, 5))
    rho[0, 0] = 1
    assert reflection_kerr(rho, 1.0, 2.0) == 1.0


def test_reflection_needs_drive():
    with pytest.raises(DomainError):
        reflection_kerr(np.eye(2) / 2, 1.0, 0.0)


def test_weak_resonant_dip():
    rho, drive = solve_point(SAMPLE_KERR, SAMPLE_KERR.mode_frequency, dbm(-190))
    s11 = reflection_kerr(rho, SAMPLE_KERR.external_rate,
                          drive / (2 * np.sqrt(SAMPLE_KERR.external_rate)))
    assert s11 == pytest.approx(-0.6, abs=0.001)


def test_far_detuned():
    f = SAMPLE_KERR.mode_frequency + 100 * GAMMA / const.TWO_PI
    grid = sweep_spectrum(SAMPLE_KERR, [f], [dbm(-170)], threads=1)
    assert abs(grid.s11[0, 0] - 1) < 0.01


@pytest.mark.parametrize("x", [-3.0, -0.4, 0.0, 0.9, 2.0])
def test_two_level_truncation_equals_qubit_formula(x):
    model = replace(SAMPLE_KERR, truncation=2)
    qubit = TwoLevelParams(model.mode_frequency, model.external_rate, model.internal_rate)
    f = model.mode_frequency - x * GAMMA / const.TWO_PI
    p = dbm(-150)
    grid = sweep_spectrum(model, [f], [p], threads=1)
    expected = reflection_two_level(qubit.detuning(f), model.drive_rate(p), qubit)
    assert grid.s11[0, 0] == pytest.approx(expected, abs=1e-10)


# -- sweeps ---------------------------------------------------------------------

def test_sweep_matches_single_points_and_threads():
    model = replace(SAMPLE_KERR, truncation=12)
    f = np.linspace(7.4880e9, 7.4890e9, 5)
    p = dbm(np.array([-150.0, -130.0]))
    serial = sweep_spectrum(model, f, p, threads=1)
    parallel = sweep_spectrum(model, f, p, threads=3)
    assert np.array_equal(serial.s11, parallel.s11)
    rho, drive = solve_point(model, f[2], p[1])
    assert serial.s11[1, 2] == reflection_kerr(rho, model.external_rate,
                                               drive / (2 * np.sqrt(model.external_rate)))


def test_every_solved_point_is_a_density_matrix():
    model = replace(SAMPLE_KERR, truncation=20)
    for dbm_value in (-150, -121, -106):
        for f in ladder_frequencies(model, 8):
            rho, _ = solve_point(model, f, dbm(dbm_value))
            validate_density_matrix(rho)


def test_failed_point_is_recorded(monkeypatch):
    import kerrspec.kerr as kerr

    real = kerr._point_s11

    def flaky(model, f, p):
        if f > 7.48865e9:
            raise np.linalg.LinAlgError("synthetic failure")
        return real(model, f, p)

    monkeypatch.setattr(kerr, "_point_s11", flaky)
    grid = sweep_spectrum(replace(SAMPLE_KERR, truncation=5), [7.4886e9, 7.4887e9], [1e-18],
                          threads=1)
    assert np.isfinite(grid.s11[0, 0]) and np.isnan(grid.s11[0, 1])
    assert list(grid.errors) == [(0, 1)] and "synthetic" in grid.errors[(0, 1)]
    assert grid.failure_fraction == 0.5


def test_sweep_validation():
    with pytest.raises(DomainError):
        sweep_spectrum(SAMPLE_KERR, [2.0, 1.0], [1e-18])
    with pytest.raises(DomainError):
        sweep_spectrum(SAMPLE_KERR, [1.0, 2.0], [0.0])
    with pytest.raises(DomainError):
        SpectrumGrid([1.0, 2.0], [1.0], np.zeros((2, 2)))


def test_thread_setting(monkeypatch):
    monkeypatch.setenv("KERRSPEC_THREADS", "3")
    assert sweep_threads() == 3
    monkeypatch.setenv("KERRSPEC_THREADS", "0")
    assert sweep_threads() >= 1
    monkeypatch.setenv("KERRSPEC_THREADS", "many")
    with pytest.raises(DomainError):
        sweep_threads()


def test_truncation_convergence_30_to_40():
    m40 = replace(SAMPLE_KERR, truncation=40)
    worst = 0.0
    for dbm_value in (-145, -121, -106, -101, -100):
        freqs = np.sort(np.append(ladder_frequencies(SAMPLE_KERR, 12), 7.4888e9))
        a = sweep_spectrum(SAMPLE_KERR, freqs, [dbm(dbm_value)], threads=1).s11
        b = sweep_spectrum(m40, freqs, [dbm(dbm_value)], threads=1).s11
        worst = max(worst, np.max(np.abs(a - b)))
    assert worst < 1e-6


def test_window_grid_covers_ladder():
    f = ladder_window_grid(SAMPLE_KERR, 4, half_width=100e3, step=20e3)
    assert np.all(np.diff(f) > 0)
    for centre in ladder_frequencies(SAMPLE_KERR, 4):
        assert np.min(np.abs(f - centre)) < 1e-3


# -- photon number ------------------------------------------------------------

def test_photon_number_two_level_saturates():
    model = replace(SAMPLE_KERR, truncation=2)
    n = photon_number_curve(model, [0.0, dbm(-70)])
    assert n[0] == 0.0
    assert n[1] == pytest.approx(0.5, abs=1e-6)


# -- peak extraction on a synthetic ladder ----------------------------------------

def synthetic_grid(centres, powers, width=40e3, depth=0.02, step=10e3, half=150e3,
                   visible=None):
    """Fundamental dip plus rotated complex Lorentzians at ``centres[1:]``."""
    offsets = np.arange(-half, half + step / 2, step)
    f = np.unique(np.round((np.asarray(centres)[:, None] + offsets).ravel(), 3))
    s = np.ones((len(powers), f.size), dtype=complex)
    for i, _ in enumerate(powers):
        x = 2 * (centres[0] - f) / 50e3
        s[i] = 1 - 1.6 * (1 + 1j * x) / (1 + x**2)
        for n, c in enumerate(centres[1:], start=2):
            if visible is None or visible(n, i):
                s[i] += depth * 1j / (1 + 2j * (f - c) / width)
    return SpectrumGrid(f, powers, s)


def test_extraction_on_synthetic_ladder():
    centres = 7.4887e9 - np.arange(6) * 2.25e6
    grid = synthetic_grid(centres, dbm(np.arange(-150.0, -140.0)))
    peaks = extract_multiphoton_peaks(grid, 6)
    assert [p[0] for p in peaks] == list(range(1, 7))
    got = np.array([p[1] for p in peaks])
    assert np.max(np.abs(got - centres)) < 100.0
    assert all(p[2] == grid.powers[0] for p in peaks)


def test_extraction_picks_lowest_visible_power():
    centres = 7.4887e9 - np.arange(4) * 2.25e6
    powers = dbm(np.arange(-150.0, -140.0))
    grid = synthetic_grid(centres, powers, visible=lambda n, i: i >= 2 * n)
    peaks = extract_multiphoton_peaks(grid, 4)
    assert [p[2] for p in peaks[1:]] == [powers[4], powers[6], powers[8]]


def test_missing_order_lists_found_orders():
    centres = 7.4887e9 - np.arange(4) * 2.25e6
    grid = synthetic_grid(centres, dbm(np.arange(-150.0, -145.0)),
                          visible=lambda n, i: n < 4)
    with pytest.raises(MissingPeakError) as info:
        extract_multiphoton_peaks(grid, 4)
    assert info.value.found_orders == (1, 2, 3)


def test_single_row_features_are_ignored():
    centres = 7.4887e9 - np.arange(3) * 2.25e6
    grid = synthetic_grid(centres, dbm(np.arange(-150.0, -145.0)),
                          visible=lambda n, i: n == 2 or i == 3)
    with pytest.raises(MissingPeakError):
        extract_multiphoton_peaks(grid, 3)


# -- K(n) -----------------------------------------------------------------------

def test_constant_kerr_on_ideal_ladder():
    f = ladder_frequencies(SAMPLE_KERR, 11)
    shifts = kerr_shift_series(list(zip(range(1, 12), f)))
    assert [n for n, _ in shifts] == list(range(1, 11))
    assert np.allclose([k for _, k in shifts], SAMPLE_KERR.self_kerr, rtol=1e-6)


def test_quadratic_ladder_gives_linear_kerr():
    # E_n / h = n f_n with f_n = f1 - (n-1) c - (n-1)^2 d
    f1, c, d = 7e9, 2e6, 10e3
    n = np.arange(1, 9)
    f = f1 - (n - 1) * c - (n - 1) ** 2 * d
    k = np.array([v for _, v in kerr_shift_series(list(zip(n, f)))]) / const.TWO_PI
    # by hand: K(n) = 2c + d (6n^2 + ... ) differences; check second difference is constant
    by_hand = []
    e = dict(zip(n, n * f))
    e[0] = 0.0
    for m in n[:-1]:
        by_hand.append((e[m] - e[m - 1]) - (e[m + 1] - e[m]))
    assert np.allclose(k, by_hand, rtol=1e-12)
    assert np.allclose(np.diff(k, 2), 0, atol=1e-3)
    assert np.all(np.diff(k) > 0)


def test_kerr_series_needs_contiguous_orders():
    with pytest.raises(DomainError):
        kerr_shift_series([(1, 7e9), (2, 6.9e9), (4, 6.8e9)])
    with pytest.raises(DomainError):
        kerr_shift_series([(2, 7e9), (3, 6.9e9)])
    with pytest.raises(DomainError):
        kerr_shift_series([(1, 7e9), (1, 6.9e9)])


def test_model_validation():
    with pytest.raises(DomainError):
        KerrModel(7e9, 1.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        KerrModel(7e9, 1.0, 1.0, 1.0, truncation=65)
    assert annihilation(3)[0, 1] == 1.0
