"""Parameter recovery from reflection traces and field sweeps.

The functional API (``fit_*``) returns :class:`FitResult`; the estimator
classes wrap the same code behind the scikit-learn ``fit``/``predict``
interface so fits compose with pipelines, ``clone`` and ``get_params``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy.signal import find_peaks
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import constants as const
from .circuit import SAMPLE_CIRCUIT, CircuitParams, qubit_frequency_vs_field
from .exceptions import AmbiguityError, DomainError
from .optimize import covariance, levenberg_marquardt

__all__ = [
    "ComplexTrace",
    "FitResult",
    "MIN_TRACE_SAMPLES",
    "fit_fluorescence_trace",
    "fit_fluorescence_series",
    "fit_rabi_power_law",
    "fit_field_dependence",
    "fit_lorentzian_peak",
    "initial_fluorescence_guess",
    "fluorescence_model",
    "lorentzian",
    "TwoLevelReflectionRegressor",
    "RabiPowerLawRegressor",
    "FieldDependenceRegressor",
    "LorentzianPeakRegressor",
]

MIN_TRACE_SAMPLES = 8
FLUORESCENCE_PARAMS = ("qubit_frequency", "external_rate", "internal_rate", "rabi")
FLUORESCENCE_UNITS = {"qubit_frequency": "Hz", "external_rate": "rad/s",
                      "internal_rate": "rad/s", "rabi": "rad/s"}


@dataclass
class ComplexTrace:
    frequencies: np.ndarray
    s11: np.ndarray
    on_chip_power: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.s11 = np.asarray(self.s11, dtype=complex)
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.s11.shape:
            raise DomainError("frequencies and s11 must be 1-d of equal length")
        bad = np.flatnonzero(~np.isfinite(self.frequencies) | ~np.isfinite(self.s11))
        if bad.size:
            raise DomainError(f"non-finite sample at index {int(bad[0])}")
        if self.frequencies.size > 1 and np.any(np.diff(self.frequencies) <= 0):
            raise DomainError("frequencies must be strictly increasing")

    def __len__(self):
        return self.frequencies.size

    def window(self, lo, hi):
        keep = (self.frequencies >= lo) & (self.frequencies <= hi)
        return ComplexTrace(self.frequencies[keep], self.s11[keep], self.on_chip_power,
                            dict(self.metadata))


@dataclass
class FitResult:
    parameters: dict
    standard_errors: dict
    residual_norm: float
    covariance: np.ndarray
    converged: bool
    iterations: int
    units: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    message: str = ""

    def __getitem__(self, name):
        return self.parameters[name]

    def as_dict(self):
        return {
            "parameters": {k: float(v) for k, v in self.parameters.items()},
            "standard_errors": {k: float(v) for k, v in self.standard_errors.items()},
            "units": dict(self.units),
            "residual_norm": float(self.residual_norm),
            "covariance": np.asarray(self.covariance, dtype=float).tolist(),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "flags": list(self.flags),
            "message": self.message,
        }


def _finish(names, free, values, lm, fixed_values, units, flags=(), extra=None):
    params = dict(fixed_values)
    params.update({n: float(v) for n, v in zip(free, lm.x)})
    if extra:
        params.update(extra)
    ordered = {n: params[n] for n in names if n in params}
    ordered.update({k: v for k, v in params.items() if k not in ordered})
    cov = covariance(lm.jacobian, lm.residuals)
    errors = {}
    if lm.converged:
        errors = {n: float(np.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(free)}
    return FitResult(
        parameters=ordered,
        standard_errors=errors,
        residual_norm=float(np.linalg.norm(lm.residuals)),
        covariance=cov,
        converged=lm.converged,
        iterations=lm.iterations,
        units=dict(units),
        flags=list(flags),
        message=lm.message,
    )


# -- two-level fluorescence -------------------------------------------------

def fluorescence_model(frequencies, qubit_frequency, external_rate, internal_rate, rabi):
    """Weak-drive reflection formula evaluated on a probe-frequency grid.

    Rates enter through their magnitudes so that the unconstrained optimizer
    cannot leave the physical region; the rabi rate only enters squared.
    """
    kappa = abs(external_rate)
    total = kappa + abs(internal_rate)
    x = 2 * const.TWO_PI * (qubit_frequency - np.asarray(frequencies)) / total
    sat = 2 * (rabi / total) ** 2
    return 1 - (2 * kappa / total) * (1 + 1j * x) / (1 + x**2 + sat)


def initial_fluorescence_guess(trace):
    """Deterministic start: peak of |1 - S11|, its FWHM and the dip depth."""
    f = trace.frequencies
    resp = np.abs(1 - trace.s11)
    k = int(np.argmax(resp))
    f1 = f[k]
    if 0 < k < f.size - 1:
        y0, y1, y2 = resp[k - 1:k + 2]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            f1 = f[k] + 0.5 * (y0 - y2) / denom * (f[k + 1] - f[k - 1]) / 2
    # |1 - S11|^2 is Lorentzian in detuning with FWHM G / 2pi
    power = resp**2
    half = power[k] / 2
    above = np.flatnonzero(power >= half)
    width_hz = max(f[above[-1]] - f[above[0]], f[min(k + 1, f.size - 1)] - f[max(k - 1, 0)])
    total = const.TWO_PI * width_hz
    depth = float(np.real(1 - trace.s11[k]))
    kappa = np.clip(depth * total / 2, 1e-3 * total, total * (1 - 1e-3))
    return {
        "qubit_frequency": float(f1),
        "external_rate": float(kappa),
        "internal_rate": float(total - kappa),
        "rabi": 0.1 * float(total),
    }


def fit_fluorescence_trace(trace, fixed: Optional[Mapping[str, float]] = None,
                           initial: Optional[Mapping[str, float]] = None,
                           max_iter=200, weights=None):
    """Least-squares fit of the qubit reflection formula to a complex trace.

    ``fixed`` pins any of ``qubit_frequency``, ``external_rate``,
    ``internal_rate``, ``rabi``; the rest are free. The residual stacks
    real and imaginary parts with equal weight, optionally times positive
    per-sample ``weights``.
    """
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(FLUORESCENCE_PARAMS)
    if unknown:
        raise DomainError(f"unknown parameter(s) {sorted(unknown)}")
    if len(trace) < MIN_TRACE_SAMPLES:
        raise DomainError(f"trace has {len(trace)} samples; at least "
                          f"{MIN_TRACE_SAMPLES} are needed")
    flags = []
    if np.ptp(np.abs(trace.s11 - np.mean(trace.s11))) < 1e-12:
        flags.append("degenerate: flat trace")
    start = initial_fluorescence_guess(trace)
    if initial:
        start.update(initial)
    free = [n for n in FLUORESCENCE_PARAMS if n not in fixed]
    if not free:
        raise DomainError("nothing left to fit")
    total = start["external_rate"] + start["internal_rate"]
    typical = {"qubit_frequency": total / const.TWO_PI, "external_rate": total,
               "internal_rate": total, "rabi": total}
    # the resonance is fitted as an offset from its start so that step and
    # finite-difference tests act on a quantity of order the linewidth
    origin = fixed.get("qubit_frequency", start["qubit_frequency"])
    freqs = trace.frequencies - origin
    data = trace.s11
    w = np.ones(len(trace)) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (len(trace),) or not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DomainError("weights must be positive, one per sample")

    shift = {n: (origin if n == "qubit_frequency" else 0.0) for n in FLUORESCENCE_PARAMS}

    def residual(x):
        p = {n: v - shift[n] for n, v in fixed.items()}
        p.update(zip(free, x))
        diff = w * (fluorescence_model(freqs, **p) - data)
        return np.concatenate([diff.real, diff.imag])

    x0 = [start[n] - shift[n] for n in free]
    lm = levenberg_marquardt(residual, x0, scale=[typical[n] for n in free], max_iter=max_iter)
    lm.x = lm.x + np.array([shift[n] for n in free])
    result = _finish(FLUORESCENCE_PARAMS, free, lm.x, lm, fixed, FLUORESCENCE_UNITS, flags)
    for name in ("external_rate", "internal_rate", "rabi"):
        result.parameters[name] = abs(result.parameters[name])
    return result


def fit_fluorescence_series(traces, low_power_index=0, max_iter=200):
    """Two-stage protocol: all four parameters on the low-power trace, then
    only the rabi rate per trace with frequency and rates held fixed.

    Returns ``(stage_one, [per_trace_results])``.
    """
    traces = list(traces)
    stage_one = fit_fluorescence_trace(traces[low_power_index], max_iter=max_iter)
    fixed = {k: stage_one.parameters[k]
             for k in ("qubit_frequency", "external_rate", "internal_rate")}
    total = fixed["external_rate"] + fixed["internal_rate"]
    results = []
    for tr in traces:
        # seed the rabi rate from the resonant dip depth, 1 - S11(0) = 2k/G / (1 + 2 (W/G)^2)
        near = np.argmin(np.abs(tr.frequencies - fixed["qubit_frequency"]))
        depth = float(np.real(1 - tr.s11[near]))
        ratio = (2 * fixed["external_rate"] / total) / max(depth, 1e-12) - 1
        seed = total * np.sqrt(max(ratio, 1e-4) / 2)
        results.append(fit_fluorescence_trace(tr, fixed=fixed, initial={"rabi": seed},
                                              max_iter=max_iter))
    return stage_one, results


# -- rabi calibration -------------------------------------------------------

def fit_rabi_power_law(points, external_rate, mode_frequency, through_origin=True,
                       relative_errors=True):
    """Slope of rabi^2 versus power, and the implied line attenuation.

    ``points`` are ``(power_W, rabi_rad_per_s)`` pairs. With generator-side
    powers the ideal on-chip slope 4 kappa / (hbar w_1) exceeds the fitted
    one by the attenuation, returned in dB. ``relative_errors`` weights each
    point by 1 / power (constant relative scatter); on exact data the
    weighting does not change the answer.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DomainError("need at least 3 (power, rabi) points")
    power, rabi = pts[:, 0], pts[:, 1]
    if np.any(power <= 0):
        raise DomainError("powers must be > 0")
    y = rabi**2
    w = 1 / power if relative_errors else np.ones_like(power)
    design = power[:, None] if through_origin else np.column_stack([power, np.ones_like(power)])
    jw = design * w[:, None]
    # powers are ~1e-20 W: equilibrate the columns before solving
    col = np.linalg.norm(jw, axis=0)
    coef_scaled, *_ = np.linalg.lstsq(jw / col, y * w, rcond=None)
    coef = coef_scaled / col
    slope = float(coef[0])
    if slope <= 0:
        raise DomainError(f"fitted slope {slope:.3e} is not positive")
    resid = (y - design @ coef) * w
    dof = max(power.size - design.shape[1], 1)
    s2 = float(resid @ resid) / dof
    inv_scaled = np.linalg.inv((jw / col).T @ (jw / col))
    cov = inv_scaled / np.outer(col, col) * s2
    ideal = 4 * external_rate / (const.hbar * const.TWO_PI * mode_frequency)
    attenuation = 10 * np.log10(ideal / slope)
    slope_err = float(np.sqrt(cov[0, 0]))
    params = {"slope": slope, "attenuation_dB": float(attenuation)}
    errors = {"slope": slope_err, "attenuation_dB": float(10 / np.log(10) * slope_err / slope)}
    units = {"slope": "rad^2/s^2/W", "attenuation_dB": "dB"}
    if not through_origin:
        params["intercept"] = float(coef[1])
        errors["intercept"] = float(np.sqrt(cov[1, 1]))
        units["intercept"] = "rad^2/s^2"
    return FitResult(params, errors, float(np.linalg.norm(resid)), cov, True, 1, units)


# -- field dependence -------------------------------------------------------

FIELD_PARAMS = ("al_critical_field", "al_kinetic_inductance_zero_field")


def fit_field_dependence(points, circuit: CircuitParams = SAMPLE_CIRCUIT,
                         free=FIELD_PARAMS, max_iter=200):
    """Fit f_1(B) with the two-fluid Al kinetic inductance.

    ``points`` are ``(field_T, frequency_Hz)`` pairs; the circuit's values
    serve as starting point for the free parameters and as fixed values for
    the others.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be (field, frequency) pairs")
    if pts.shape[0] < 5:
        raise DomainError(f"need at least 5 field points, got {pts.shape[0]}")
    fields, freqs = pts[:, 0], pts[:, 1]
    if np.any(fields < 0) or np.any(fields >= circuit.al_critical_field):
        bad = fields[(fields < 0) | (fields >= circuit.al_critical_field)]
        raise DomainError(f"field values {bad.tolist()} outside [0, B_c = "
                          f"{circuit.al_critical_field}) of the starting model")
    free = tuple(free)
    base = {k: getattr(circuit, k) for k in circuit.__dataclass_fields__}
    bmax = fields.max()

    def model(x):
        p = dict(base)
        p.update(zip(free, x))
        if p["al_critical_field"] <= bmax or min(p.values()) <= 0:
            return None
        return qubit_frequency_vs_field(fields, CircuitParams(**p))

    scale_hz = max(np.ptp(freqs), 1e3)

    def residual(x):
        f = model(x)
        if f is None:
            return np.full(freqs.size, np.nan)
        return (f - freqs) / scale_hz

    x0 = [base[n] for n in free]
    lm = levenberg_marquardt(residual, x0, max_iter=max_iter)
    units = {"al_critical_field": "T", "al_kinetic_inductance_zero_field": "H",
             "shunt_capacitance": "F", "geometric_inductance": "H",
             "gral_kinetic_inductance": "H", "gral_squares": "1"}
    # report frequency-scaled covariance in SI units of the parameters
    result = _finish(free, free, lm.x, lm, {}, {k: units[k] for k in free})
    result.residual_norm *= scale_hz
    return result


# -- Lorentzian peak --------------------------------------------------------

def lorentzian(frequencies, center, linewidth, amplitude, offset, slope=0.0, reference=0.0):
    f = np.asarray(frequencies, dtype=float)
    return offset + slope * (f - reference) + amplitude / (1 + (2 * (f - center) / linewidth) ** 2)


def _signal(trace, signal):
    if signal == "phase":
        return np.unwrap(np.angle(trace.s11))
    if signal == "magnitude":
        return np.abs(trace.s11)
    if signal == "response":
        return np.abs(1 - trace.s11) ** 2
    raise ValueError(f"unknown signal {signal!r}")


def fit_lorentzian_peak(trace, window, signal="phase", ambiguity_ratio=0.5,
                        with_slope=True, max_iter=200):
    """Lorentzian plus linear background fitted to one feature in ``window``.

    ``signal`` selects arg(S11) (default), |S11| or |1 - S11|^2. The window
    must contain exactly one dominant interior extremum; a second feature
    with at least ``ambiguity_ratio`` of the dominant prominence raises
    :class:`AmbiguityError`. ``signal="complex"`` instead fits a complex
    Lorentzian on a complex linear background directly to S11.
    """
    lo, hi = sorted(window)
    if lo < trace.frequencies[0] or hi > trace.frequencies[-1]:
        raise DomainError("window extends beyond the trace")
    sub = trace.window(lo, hi)
    if len(sub) < 5:
        raise DomainError("fewer than 5 samples inside the window")
    if signal == "complex":
        return _fit_complex_lorentzian(sub, lo, hi, max_iter)
    f = sub.frequencies
    y = _signal(sub, signal)
    line = np.interp(f, [f[0], f[-1]], [y[0], y[-1]])
    detr = y - line
    peaks = []
    # below this, "extrema" are rounding noise on a smooth background
    floor = 1e-9 * max(np.max(np.abs(y)), 1e-300)
    for sign in (1, -1):
        idx, props = find_peaks(sign * detr, prominence=floor)
        peaks += [(p, sign, i) for i, p in zip(idx, props["prominences"])]
    if not peaks:
        raise DomainError("no extremum inside the window")
    peaks.sort(reverse=True)
    best_prom, sign, k = peaks[0]
    rivals = [p for p in peaks[1:] if p[1] == sign and p[0] >= ambiguity_ratio * best_prom
              and abs(f[p[2]] - f[k]) > 2 * np.median(np.diff(f))]
    if rivals:
        raise AmbiguityError(
            f"{len(rivals) + 1} comparable features in window "
            f"(prominences {best_prom:.3g} and {rivals[0][0]:.3g})")
    # half-maximum width estimate for the start
    above = np.flatnonzero(sign * detr >= 0.5 * sign * detr[k])
    run = above[(above >= 0)]
    left = k
    while left - 1 in run:
        left -= 1
    right = k
    while right + 1 in run:
        right += 1
    width = max(f[min(right + 1, f.size - 1)] - f[max(left - 1, 0)], 2 * np.median(np.diff(f)))
    ref = 0.5 * (lo + hi)
    slope0 = (y[-1] - y[0]) / (f[-1] - f[0])
    names = ["center", "linewidth", "amplitude", "offset"] + (["slope"] if with_slope else [])
    x0 = [f[k] - ref, width, detr[k], line[k] - slope0 * (f[k] - ref)]
    if with_slope:
        x0.append(slope0)
    yscale = max(np.max(np.abs(detr)), 1e-15)
    scales = [width, width, yscale, yscale] + ([yscale / (f[-1] - f[0])] if with_slope else [])

    df = f - ref

    def residual(x):
        p = dict(zip(names, x))
        p["linewidth"] = abs(p["linewidth"])
        return (lorentzian(df, **p) - y) / yscale

    lm = levenberg_marquardt(residual, x0, scale=scales, max_iter=max_iter)
    lm.x[0] += ref
    units = {"center": "Hz", "linewidth": "Hz", "amplitude": "signal", "offset": "signal",
             "slope": "signal/Hz"}
    result = _finish(names, names, lm.x, lm, {}, {n: units[n] for n in names})
    result.parameters["linewidth"] = abs(result.parameters["linewidth"])
    result.residual_norm *= yscale
    result.covariance = result.covariance * yscale**2
    result.standard_errors = {k: v * yscale for k, v in result.standard_errors.items()}
    c = result.parameters["center"]
    if not lo <= c <= hi:
        result.flags.append("center outside window")
        result.converged = False
        result.standard_errors = {}
    return result


def _fit_complex_lorentzian(trace, lo, hi, max_iter):
    """S11 = c0 + c1 (f - f_ref) + A / (1 + 2i (f - center) / linewidth).

    Variable projection: the complex c0, c1, A are solved linearly for each
    trial (center, linewidth), so the optimizer only sees two parameters.
    The center is the pole of the response, free of the half-linewidth bias
    a phase extremum has when the feature is rotated in the complex plane.
    """
    f = trace.frequencies
    s = trace.s11
    ref = 0.5 * (f[0] + f[-1])
    span = f[-1] - f[0]

    df = f - ref

    def design(offset, width):
        lor = 1 / (1 + 2j * (df - offset) / abs(width))
        return np.column_stack([np.ones_like(f), df / span, lor]).astype(complex)

    def residual(x):
        mat = design(*x)
        coef, *_ = np.linalg.lstsq(mat, s, rcond=None)
        r = mat @ coef - s
        return np.concatenate([r.real, r.imag])

    # start at the largest deviation from the straight background
    line = np.interp(f, [f[0], f[-1]], [s[0], s[-1]])
    k = int(np.argmax(np.abs(s - line)))
    step = float(np.median(np.diff(f)))
    best = None
    for width0 in (4 * step, span / 4):
        lm = levenberg_marquardt(residual, [f[k] - ref, width0], scale=[width0, width0],
                                 max_iter=max_iter)
        if best is None or lm.cost < best.cost:
            best = lm
    lm = best
    mat = design(*lm.x)
    coef, *_ = np.linalg.lstsq(mat, s, rcond=None)
    lm.x[0] += ref
    names = ["center", "linewidth"]
    result = _finish(names, names, lm.x, lm, {}, {"center": "Hz", "linewidth": "Hz"},
                     extra={"amplitude": float(abs(coef[2])),
                            "amplitude_phase": float(np.angle(coef[2])),
                            "offset": float(abs(coef[0]))})
    result.parameters["linewidth"] = abs(result.parameters["linewidth"])
    result.units.update(amplitude="1", amplitude_phase="rad", offset="1")
    if not lo <= result.parameters["center"] <= hi:
        result.flags.append("center outside window")
        result.converged = False
        result.standard_errors = {}
    return result


# -- scikit-learn style estimators -----------------------------------------

def _as_1d(X, name="X"):
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DomainError(f"{name} must be 1-d or a single column")
    return arr.astype(float)


class TwoLevelReflectionRegressor(RegressorMixin, BaseEstimator):
    """Fit the qubit reflection formula: X = probe frequency (Hz), y = complex S11.

    Parameters left as ``None`` are fitted; numbers pin them.
    """

    def __init__(self, qubit_frequency=None, external_rate=None, internal_rate=None,
                 rabi=None, max_iter=200):
        self.qubit_frequency = qubit_frequency
        self.external_rate = external_rate
        self.internal_rate = internal_rate
        self.rabi = rabi
        self.max_iter = max_iter

    def fit(self, X, y):
        freqs = _as_1d(X)
        order = np.argsort(freqs)
        trace = ComplexTrace(freqs[order], np.asarray(y, dtype=complex)[order])
        fixed = {k: getattr(self, k) for k in FLUORESCENCE_PARAMS if getattr(self, k) is not None}
        self.result_ = fit_fluorescence_trace(trace, fixed=fixed, max_iter=self.max_iter)
        self.params_ = dict(self.result_.parameters)
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        return fluorescence_model(_as_1d(X), **self.params_)

    def score(self, X, y, sample_weight=None):
        """Complex coefficient of determination."""
        y = np.asarray(y, dtype=complex)
        resid = np.sum(np.abs(self.predict(X) - y) ** 2)
        total = np.sum(np.abs(y - y.mean()) ** 2)
        return 1 - resid / total


class RabiPowerLawRegressor(RegressorMixin, BaseEstimator):
    """X = power (W), y = rabi rate (rad/s); rabi = sqrt(slope * P)."""

    def __init__(self, external_rate=const.TWO_PI * 40e3, mode_frequency=7.4887e9,
                 through_origin=True, relative_errors=True):
        self.external_rate = external_rate
        self.mode_frequency = mode_frequency
        self.through_origin = through_origin
        self.relative_errors = relative_errors

    def fit(self, X, y):
        pts = np.column_stack([_as_1d(X), _as_1d(y, "y")])
        self.result_ = fit_rabi_power_law(pts, self.external_rate, self.mode_frequency,
                                          self.through_origin, self.relative_errors)
        self.slope_ = self.result_.parameters["slope"]
        self.intercept_ = self.result_.parameters.get("intercept", 0.0)
        self.attenuation_db_ = self.result_.parameters["attenuation_dB"]
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        return np.sqrt(np.clip(self.slope_ * _as_1d(X) + self.intercept_, 0, None))


class FieldDependenceRegressor(RegressorMixin, BaseEstimator):
    """X = in-plane field (T), y = qubit frequency (Hz)."""

    def __init__(self, circuit=SAMPLE_CIRCUIT, free=FIELD_PARAMS, max_iter=200):
        self.circuit = circuit
        self.free = free
        self.max_iter = max_iter

    def fit(self, X, y):
        pts = np.column_stack([_as_1d(X), _as_1d(y, "y")])
        self.result_ = fit_field_dependence(pts, self.circuit, self.free, self.max_iter)
        values = {k: getattr(self.circuit, k) for k in self.circuit.__dataclass_fields__}
        values.update({k: self.result_.parameters[k] for k in self.free})
        self.circuit_ = CircuitParams(**values)
        return self

    def predict(self, X):
        check_is_fitted(self, "circuit_")
        return qubit_frequency_vs_field(_as_1d(X), self.circuit_)


class LorentzianPeakRegressor(BaseEstimator):
    """X = frequency (Hz), y = complex S11; fits one feature inside ``window``."""

    def __init__(self, window=None, signal="phase", ambiguity_ratio=0.5):
        self.window = window
        self.signal = signal
        self.ambiguity_ratio = ambiguity_ratio

    def fit(self, X, y):
        freqs = _as_1d(X)
        order = np.argsort(freqs)
        trace = ComplexTrace(freqs[order], np.asarray(y, dtype=complex)[order])
        self.window_ = tuple(self.window or (trace.frequencies[0], trace.frequencies[-1]))
        self.result_ = fit_lorentzian_peak(trace, self.window_, self.signal,
                                           self.ambiguity_ratio)
        self.center_ = self.result_.parameters["center"]
        self.linewidth_ = self.result_.parameters["linewidth"]
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        p = dict(self.result_.parameters)
        f = _as_1d(X)
        if self.signal == "complex":
            raise ValueError("predict is only defined for real-valued signals")
        lo, hi = self.window_
        # fitted against the unwrapped signal over the trace, reference at mid-window
        return lorentzian(f, reference=0.5 * (lo + hi), **p)
