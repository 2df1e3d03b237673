"""Driven Kerr oscillator: Lindblad steady state and reflection spectra.

The rotating-frame Hamiltonian is

    H / hbar = D a^dag a - (K / 2) a^dag^2 a^2 - (W / 2) (a^dag + a)

with D = w_1 - w the detuning from the drive. Dissipation is single-photon
loss at the total rate kappa + gamma. Density matrices are vectorized by
column stacking, so vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import constants as const
from ._validation import check_grid, check_positive
from .exceptions import AmbiguityError, DomainError
from .twolevel import drive_amplitude

log = logging.getLogger(__name__)

__all__ = [
    "KerrModel",
    "SpectrumGrid",
    "SAMPLE_KERR",
    "MAX_DENSE_LEVELS",
    "annihilation",
    "build_kerr_hamiltonian",
    "build_liouvillian",
    "steady_state",
    "validate_density_matrix",
    "reflection_kerr",
    "solve_point",
    "sweep_spectrum",
    "photon_number_curve",
    "ladder_frequencies",
    "ladder_from_eigenvalues",
    "ladder_window_grid",
    "sweep_threads",
    "extract_multiphoton_peaks",
    "kerr_shift_series",
]

MAX_DENSE_LEVELS = 64


@dataclass(frozen=True)
class KerrModel:
    """Anharmonic oscillator. ``mode_frequency`` in Hz, rates in rad/s.

    ``truncation`` = 2 is the qubit limit and is accepted so that the two-level
    and multi-level curves come out of the same solver.
    """

    mode_frequency: float
    self_kerr: float
    external_rate: float
    internal_rate: float
    truncation: int = 30

    def __post_init__(self):
        check_positive("mode_frequency", self.mode_frequency)
        check_positive("external_rate", self.external_rate, allow_zero=True)
        check_positive("internal_rate", self.internal_rate, allow_zero=True)
        if self.external_rate + self.internal_rate <= 0:
            raise DomainError("kappa + gamma must be > 0")
        if not 2 <= int(self.truncation) <= MAX_DENSE_LEVELS:
            raise DomainError(f"truncation must be in [2, {MAX_DENSE_LEVELS}]")

    @property
    def relaxation_rate(self):
        return self.external_rate + self.internal_rate

    def drive_rate(self, power):
        """Drive amplitude W = 2 sqrt(kappa) sqrt(P / (hbar w_1)) in rad/s."""
        return 2 * np.sqrt(self.external_rate) * drive_amplitude(power, self.mode_frequency)

    def detuning(self, probe_frequency):
        return const.TWO_PI * (self.mode_frequency - np.asarray(probe_frequency, dtype=float))


SAMPLE_KERR = KerrModel(
    mode_frequency=7.4887e9,
    self_kerr=const.TWO_PI * 4.5e6,
    external_rate=const.TWO_PI * 40e3,
    internal_rate=const.TWO_PI * 10e3,
    truncation=30,
)


@dataclass
class SpectrumGrid:
    """Reflection on a (power x frequency) grid; failed points hold NaN."""

    frequencies: np.ndarray
    powers: np.ndarray
    s11: np.ndarray
    errors: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = check_grid("frequencies", self.frequencies)
        self.powers = check_grid("powers", self.powers)
        self.s11 = np.asarray(self.s11, dtype=complex)
        if self.s11.shape != (self.powers.size, self.frequencies.size):
            raise DomainError(
                f"s11 shape {self.s11.shape} does not match grids "
                f"({self.powers.size}, {self.frequencies.size})")

    @property
    def phase(self):
        return np.angle(self.s11)

    @property
    def failure_fraction(self):
        return len(self.errors) / self.s11.size


def annihilation(truncation):
    return np.diag(np.sqrt(np.arange(1, truncation, dtype=float)), 1)


def build_kerr_hamiltonian(detuning, self_kerr, drive_amplitude, truncation):
    """Dense rotating-frame Hamiltonian in rad/s."""
    if int(truncation) != truncation or truncation < 2:
        raise DomainError("truncation must be an integer >= 2")
    if truncation > MAX_DENSE_LEVELS:
        raise DomainError(f"truncation above {MAX_DENSE_LEVELS} is not supported")
    n = np.arange(truncation, dtype=float)
    a = annihilation(int(truncation))
    diag = detuning * n - 0.5 * self_kerr * n * (n - 1)
    return np.diag(diag).astype(complex) - 0.5 * drive_amplitude * (a + a.T)


def _dissipator(a):
    eye = sp.identity(a.shape[0], format="csr")
    a = sp.csr_matrix(a)
    num = a.conj().T @ a
    return sp.kron(a.conj(), a) - 0.5 * sp.kron(eye, num) - 0.5 * sp.kron(num.T, eye)


def _commutator(h):
    eye = sp.identity(h.shape[0], format="csr")
    h = sp.csr_matrix(h)
    return -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))


def build_liouvillian(hamiltonian, relaxation_rate):
    """Sparse generator L with vec(drho/dt) = L vec(rho)."""
    check_positive("relaxation_rate", relaxation_rate, allow_zero=True)
    h = hamiltonian.toarray() if sp.issparse(hamiltonian) else np.asarray(hamiltonian)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DomainError(f"hamiltonian must be square, got shape {h.shape}")
    a = annihilation(h.shape[0])
    return (_commutator(h) + relaxation_rate * _dissipator(a)).tocsr()


def _trace_row(dim):
    return np.eye(dim).reshape(-1, order="F")


def validate_density_matrix(rho, hermitian_tol=1e-10, trace_tol=1e-10, eig_tol=-1e-8):
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > hermitian_tol:
        raise DomainError(f"density matrix not Hermitian (deviation {herm:.2e})")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise DomainError(f"density matrix trace {tr} != 1")
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < eig_tol:
        raise DomainError(f"density matrix not positive (eigenvalue {lowest:.2e})")
    return rho


def _finish(x, dim):
    rho = x.reshape(dim, dim, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def steady_state(liouvillian, method="lstsq", gap_tol=1e-10):
    """Density matrix annihilated by ``liouvillian``, normalized to unit trace.

    ``method="lstsq"`` solves the generator stacked with a trace row in the
    least-squares sense and checks that the null space is one dimensional.
    ``method="direct"`` swaps the row of the rho_00 equation for the trace row
    (that row is linearly dependent through trace preservation) and uses a
    sparse LU factorization; it is the fast path for sweeps and falls back to
    ``lstsq`` if the factorization is singular.
    """
    dim2 = liouvillian.shape[0]
    dim = int(round(np.sqrt(dim2)))
    if dim * dim != dim2 or liouvillian.shape != (dim2, dim2):
        raise DomainError(f"liouvillian shape {liouvillian.shape} is not N^2 x N^2")
    if method == "direct":
        lil = sp.csr_matrix(liouvillian)
        stacked = sp.vstack([sp.csr_matrix(_trace_row(dim)), lil[1:]]).tocsc()
        rhs = np.zeros(dim2, dtype=complex)
        rhs[0] = 1
        try:
            x = spla.splu(stacked).solve(rhs)
        except RuntimeError:
            log.debug("singular sparse factorization, falling back to lstsq")
            return steady_state(liouvillian, method="lstsq", gap_tol=gap_tol)
        if not np.all(np.isfinite(x)):
            return steady_state(liouvillian, method="lstsq", gap_tol=gap_tol)
        return _finish(x, dim)
    if method != "lstsq":
        raise ValueError(f"unknown method {method!r}")

    dense = liouvillian.toarray() if sp.issparse(liouvillian) else np.asarray(liouvillian)
    svals = scipy.linalg.svdvals(dense)
    scale = svals[0] if svals[0] > 0 else 1.0
    if dim2 > 1 and svals[-2] <= gap_tol * scale:
        raise AmbiguityError(
            f"steady state not unique: second smallest singular value "
            f"{svals[-2]:.3e} (relative {svals[-2] / scale:.3e}, smallest {svals[-1]:.3e})")
    stacked = np.vstack([dense, _trace_row(dim)[None, :]])
    rhs = np.zeros(dim2 + 1, dtype=complex)
    rhs[-1] = 1
    x, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    return _finish(x, dim)


def reflection_kerr(rho, external_rate, input_amplitude):
    """S11 from the oscillator field <a> = tr(a rho).

    ``input_amplitude`` is the incident flux amplitude |alpha_in| (in
    sqrt(photons/s)) that produced the drive term -(W/2)(a^dag + a), i.e.
    W = 2 sqrt(kappa) |alpha_in|. That real drive term corresponds to an
    incident field of phase i; dividing by it and conjugating maps the
    master-equation (e^{-iwt}) result onto the sign convention of the
    two-level reflection formula, so both models return identical S11 in the
    qubit limit.
    """
    if not input_amplitude > 0:
        raise DomainError("input amplitude must be > 0")
    rho = np.asarray(rho)
    mean_a = np.sum(np.diagonal(rho, offset=-1) * np.sqrt(np.arange(1, rho.shape[0])))
    return complex(1 - np.conj(np.sqrt(external_rate) * mean_a / (1j * input_amplitude)))


@lru_cache(maxsize=8)
def _parts(truncation):
    n = np.arange(truncation, dtype=float)
    a = annihilation(truncation)
    detuning_part = _commutator(np.diag(n))
    kerr_part = _commutator(np.diag(-0.5 * n * (n - 1)))
    drive_part = _commutator(-0.5 * (a + a.T))
    return (detuning_part.tocsr(), kerr_part.tocsr(), drive_part.tocsr(),
            _dissipator(a).tocsr(), a)


def _fast_liouvillian(model, detuning, drive):
    dpart, kpart, wpart, lpart, _ = _parts(int(model.truncation))
    return detuning * dpart + model.self_kerr * kpart + drive * wpart + model.relaxation_rate * lpart


def solve_point(model, probe_frequency, power, method="direct"):
    """Steady state for one probe tone; returns (rho, drive_rate)."""
    drive = model.drive_rate(power)
    liouv = _fast_liouvillian(model, model.detuning(probe_frequency), drive)
    return steady_state(liouv, method=method), drive


def _point_s11(model, frequency, power):
    rho, drive = solve_point(model, frequency, power)
    return reflection_kerr(rho, model.external_rate, drive / (2 * np.sqrt(model.external_rate)))


def sweep_threads():
    """Worker count from KERRSPEC_THREADS (0 or unset = one per CPU)."""
    raw = os.environ.get("KERRSPEC_THREADS", "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError as exc:
        raise DomainError(f"KERRSPEC_THREADS must be an integer, got {raw!r}") from exc
    if value < 0:
        raise DomainError("KERRSPEC_THREADS must be >= 0")
    return value or (os.cpu_count() or 1)


def sweep_spectrum(model, frequencies, powers, threads=None):
    """Reflection over a frequency x power grid.

    Each point is solved independently; a failing point is stored as NaN with
    its message in ``grid.errors[(i_power, i_freq)]`` and the sweep goes on.
    Rows are distributed over ``threads`` workers (default from
    :func:`sweep_threads`).
    """
    frequencies = check_grid("frequencies", frequencies)
    powers = check_grid("powers", powers)
    if np.any(powers <= 0):
        raise DomainError("sweep powers must be > 0 (reflection undefined without drive)")
    _parts(int(model.truncation))  # build the cache before fanning out

    def row(i):
        out = np.empty(frequencies.size, dtype=complex)
        errs = {}
        for j, f in enumerate(frequencies):
            try:
                out[j] = _point_s11(model, f, powers[i])
            except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
                out[j] = np.nan
                errs[(i, j)] = f"{type(exc).__name__}: {exc}"
        return out, errs

    workers = threads if threads is not None else sweep_threads()
    s11 = np.empty((powers.size, frequencies.size), dtype=complex)
    errors = {}
    if workers <= 1:
        results = map(row, range(powers.size))
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        results = pool.map(row, range(powers.size))
    for i, (values, errs) in enumerate(results):
        s11[i] = values
        errors.update(errs)
    if workers > 1:
        pool.shutdown()
    if errors:
        log.warning("%d of %d sweep points failed", len(errors), s11.size)
    return SpectrumGrid(frequencies, powers, s11, errors)


def photon_number_curve(model, powers, drive_detuning=0.0):
    """Steady-state <a^dag a> versus drive power at a fixed detuning (rad/s)."""
    powers = np.asarray(powers, dtype=float)
    check_positive("powers", powers, allow_zero=True)
    n = np.arange(model.truncation, dtype=float)
    out = np.empty(powers.size)
    probe = model.mode_frequency - drive_detuning / const.TWO_PI
    for i, p in enumerate(powers):
        rho, _ = solve_point(model, probe, p)
        out[i] = float(np.real(np.diagonal(rho) @ n))
    return out


def ladder_frequencies(model, max_order):
    """Ideal multi-photon frequencies f_n = f_1 - (n - 1) K / (4 pi), n = 1..max_order."""
    n = np.arange(1, max_order + 1)
    return model.mode_frequency - (n - 1) * model.self_kerr / (2 * const.TWO_PI)


def ladder_from_eigenvalues(model, max_order):
    """f_n = (E_n - E_0) / (n h) from the undriven Hamiltonian's spectrum."""
    if max_order >= model.truncation:
        raise DomainError("max_order must be below the truncation")
    h0 = build_kerr_hamiltonian(0.0, model.self_kerr, 0.0, model.truncation)
    # undriven H is diagonal in the Fock basis: eigenvalue order follows n
    energies = np.diag(h0).real
    n = np.arange(1, max_order + 1)
    return model.mode_frequency + (energies[n] - energies[0]) / (const.TWO_PI * n)


def ladder_window_grid(model, max_order, half_width=150e3, step=10e3):
    """Union of frequency windows centred on the ideal ladder, n = 1..max_order.

    Keeps sweeps affordable: multi-photon features are narrow and sit near
    the ladder, so the space between them is not sampled.
    """
    offsets = np.arange(-half_width, half_width + step / 2, step)
    centres = ladder_frequencies(model, max_order)
    freqs = np.unique(np.round((centres[:, None] + offsets[None, :]).ravel(), 3))
    return freqs


def _segments(frequencies):
    """Split a grid into runs without gaps wider than 1.5 median steps."""
    steps = np.diff(frequencies)
    if steps.size == 0:
        return [slice(0, frequencies.size)]
    cuts = np.flatnonzero(steps > 1.5 * np.median(steps)) + 1
    bounds = np.concatenate([[0], cuts, [frequencies.size]])
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b - a >= 5]


def _fundamental(grid):
    """f_1 and its FWHM from the lowest-power row via |1 - S11|^2."""
    from .estimation import ComplexTrace, fit_lorentzian_peak

    s = grid.s11[0]
    ok = np.isfinite(s)
    resp = np.where(ok, np.abs(1 - s) ** 2, -np.inf)
    k = int(np.argmax(resp))
    seg = next(sl for sl in _segments(grid.frequencies) if sl.start <= k < sl.stop)
    f = grid.frequencies[seg]
    trace = ComplexTrace(f, np.where(ok[seg], s[seg], 1.0))
    try:
        fit = fit_lorentzian_peak(trace, (f[0], f[-1]), signal="response", with_slope=False)
        if fit.converged:
            return fit.parameters["center"], fit.parameters["linewidth"]
    except (DomainError, AmbiguityError):
        pass
    return grid.frequencies[k], 2 * float(np.median(np.diff(f)))


def _quadratic_vertex(x, y, k):
    if 0 < k < x.size - 1:
        y0, y1, y2 = y[k - 1:k + 2]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            shift = 0.5 * (y0 - y2) / denom
            if abs(shift) <= 1:
                return x[k] + shift * 0.5 * (x[k + 1] - x[k - 1])
    return x[k]


def _phase_candidates(grid, prominence, below):
    from scipy.signal import find_peaks

    found = []
    for i in range(grid.powers.size):
        for seg in _segments(grid.frequencies):
            f = grid.frequencies[seg]
            s = grid.s11[i, seg]
            if not np.all(np.isfinite(s)):
                continue
            phase = np.unwrap(np.angle(s))
            phase = phase - np.interp(f, [f[0], f[-1]], [phase[0], phase[-1]])
            idx, props = find_peaks(phase, prominence=prominence)
            for k, prom in zip(idx, props["prominences"]):
                if f[k] < below:
                    found.append((i, _quadratic_vertex(f, phase, k), float(prom)))
    return found


def _refine(grid, row, guess, max_shift):
    """Complex-Lorentzian centre near ``guess``; the guess if that fails."""
    from .estimation import ComplexTrace, fit_lorentzian_peak

    for seg in _segments(grid.frequencies):
        f = grid.frequencies[seg]
        if f[0] <= guess <= f[-1]:
            break
    else:
        return float(guess)
    s = grid.s11[row, seg]
    if not np.all(np.isfinite(s)):
        return float(guess)
    try:
        fit = fit_lorentzian_peak(ComplexTrace(f, s), (f[0], f[-1]), signal="complex")
    except (DomainError, AmbiguityError, ValueError):
        return float(guess)
    centre = fit.parameters["center"]
    if fit.converged and abs(centre - guess) <= max_shift:
        return float(centre)
    return float(guess)


def extract_multiphoton_peaks(grid, max_order, prominence=0.001, cluster_tol=150e3,
                              min_support=2):
    """Locate the n-photon features f_n, n = 1..max_order, in a sweep.

    The fundamental comes from a Lorentzian fit of |1 - S11|^2 on the
    lowest-power row. Higher orders are maxima of the detrended arg(S11)
    (quadratic-interpolated), grouped across powers by frequency; groups seen
    at fewer than ``min_support`` powers are dropped. Groups are ranked
    downward in frequency as n = 2, 3, ..., and each is taken at the lowest
    power where it clears ``prominence`` (rad). There the position is refined
    by a complex Lorentzian fit, since a phase maximum sits up to half a
    linewidth from the resonance.

    The lowest-power row must be in the weak-drive regime; f_1 is read there.

    Returns a list of ``(n, f_n, power_used)``.
    """
    if max_order < 1:
        raise DomainError("max_order must be >= 1")
    f1, width = _fundamental(grid)
    peaks = [(1, float(f1), float(grid.powers[0]))]
    if max_order == 1:
        return peaks
    candidates = sorted(_phase_candidates(grid, prominence, f1 - 5 * width),
                        key=lambda c: -c[1])
    clusters = []
    for cand in candidates:
        if clusters and abs(clusters[-1][-1][1] - cand[1]) <= cluster_tol:
            clusters[-1].append(cand)
        else:
            clusters.append([cand])
    clusters = [c for c in clusters if len({i for i, _, _ in c}) >= min_support]
    for n, members in enumerate(clusters[:max_order - 1], start=2):
        i, freq, _ = min(members, key=lambda c: (c[0], -c[2]))
        peaks.append((n, _refine(grid, i, freq, cluster_tol / 2), float(grid.powers[i])))
    if len(peaks) < max_order:
        from .exceptions import MissingPeakError

        raise MissingPeakError(
            f"found orders 1..{len(peaks)} of the requested {max_order}",
            found_orders=[n for n, _, _ in peaks])
    freqs = [f for _, f, _ in peaks]
    if np.any(np.diff(freqs) >= 0):
        raise DomainError("extracted ladder is not strictly decreasing")
    return peaks


def kerr_shift_series(peaks):
    """K(n) = 2 pi [(n f_n - (n-1) f_(n-1)) - ((n+1) f_(n+1) - n f_n)] in rad/s.

    ``peaks`` holds ``(n, f_n)`` or ``(n, f_n, ...)`` tuples, contiguous in n
    from 1. E_0 = 0, so n = 1 needs only f_1 and f_2; the last order has no
    successor and is not reported.
    """
    table = {}
    for item in peaks:
        n, f = int(item[0]), float(item[1])
        if n in table:
            raise DomainError(f"order {n} listed twice")
        table[n] = f
    orders = sorted(table)
    if not orders or orders[0] != 1 or orders != list(range(1, orders[-1] + 1)):
        raise DomainError(f"orders must be contiguous from 1, got {orders}")
    energy = {n: n * f for n, f in table.items()}
    energy[0] = 0.0
    return [(n, const.TWO_PI * ((energy[n] - energy[n - 1]) - (energy[n + 1] - energy[n])))
            for n in orders[:-1]]
