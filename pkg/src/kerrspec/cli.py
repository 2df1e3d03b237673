"""Command-line entry point ``kerrspec``.

Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure,
4 fit did not converge. Every run writes a ``manifest.json`` next to its
outputs.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import constants as const
from .circuit import SAMPLE_CIRCUIT, CircuitParams, qubit_frequency_vs_field
from .estimation import ComplexTrace, MIN_TRACE_SAMPLES, fit_field_dependence, \
    fit_fluorescence_trace, fluorescence_model
from .exceptions import AmbiguityError, ConfigError, DomainError, MissingPeakError
from .fileio import RunManifest, config_digest, dbm_to_watt, format_fit_report, \
    load_config, read_table, read_trace, watt_to_dbm, write_fit_report, write_json, \
    write_table, write_trace
from .kerr import KerrModel, extract_multiphoton_peaks, kerr_shift_series, \
    ladder_frequencies, ladder_window_grid, solve_point, reflection_kerr, sweep_spectrum
from .magnetics import CoilGeometry, HelmholtzPair, WIRE_DIAMETER, assembly_field, \
    conversion_factor, homogeneity_report
from .twolevel import TwoLevelParams, reflection_two_level

log = logging.getLogger("kerrspec")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_NOFIT = 0, 2, 3, 4
MAX_FAILURE_FRACTION = 0.01


class UsageError(Exception):
    """Bad arguments or configuration: exit code 2."""


class NumericFailure(Exception):
    """Solver failure: exit code 3."""


# -- config -> model objects -------------------------------------------------

def _section(config, name, required=True):
    if name not in config:
        if required:
            raise UsageError(f"config has no [{name}] section")
        return {}
    return config[name]


def _need(section, key, where):
    if key not in section:
        raise UsageError(f"[{where}] is missing {key!r} (with a unit suffix)")
    return section[key]


def _as_list(value):
    return list(value) if isinstance(value, list) else [value]


def qubit_from_config(config):
    q = _section(config, "qubit")
    try:
        return TwoLevelParams(
            qubit_frequency=_need(q, "qubit_frequency", "qubit"),
            external_rate=_need(q, "external_rate", "qubit"),
            internal_rate=_need(q, "internal_rate", "qubit"),
            pure_dephasing_rate=q.get("pure_dephasing_rate", 0.0),
        )
    except DomainError as exc:
        raise UsageError(f"[qubit] {exc}") from None


def kerr_from_config(config, levels=None):
    qubit = qubit_from_config(config)
    k = _section(config, "kerr")
    try:
        return KerrModel(
            mode_frequency=qubit.qubit_frequency,
            self_kerr=_need(k, "self_kerr", "kerr"),
            external_rate=qubit.external_rate,
            internal_rate=qubit.internal_rate,
            truncation=int(levels if levels is not None else k.get("truncation", 30)),
        )
    except DomainError as exc:
        raise UsageError(f"[kerr] {exc}") from None


def circuit_from_config(config):
    c = _section(config, "circuit", required=False)
    names = {"shunt_capacitance": "shunt_capacitance",
             "geometric_inductance": "geometric_inductance",
             "gral_kinetic_inductance": "gral_kinetic_inductance",
             "al_kinetic_inductance": "al_kinetic_inductance_zero_field",
             "al_critical_field": "al_critical_field",
             "gral_length": "gral_squares"}
    values = {f: getattr(SAMPLE_CIRCUIT, f) for f in names.values()}
    for key, value in c.items():
        if key not in names:
            raise UsageError(f"[circuit] unknown key {key!r}")
        values[names[key]] = value
    try:
        return CircuitParams(**values)
    except DomainError as exc:
        raise UsageError(f"[circuit] {exc}") from None


def assembly_from_config(config):
    c = _section(config, "coil")
    d = c.get("wire_diameter", WIRE_DIAMETER)
    turns = int(_need(c, "turns_per_layer", "coil"))
    try:
        coil = CoilGeometry(
            layer_count=int(_need(c, "layers", "coil")),
            turns_per_layer=turns,
            inner_radius=_need(c, "inner_radius", "coil"),
            length=c.get("length", turns * d),
            wire_diameter=d,
            axis=tuple(float(v) for v in _as_list(c.get("axis", [0.0, 1.0, 0.0]))),
            center=tuple(float(v) for v in _as_list(c.get("center", [0.0, 0.0, 0.0]))),
        )
        if "helmholtz" in config:
            sep = _need(config["helmholtz"], "separation", "helmholtz")
            return HelmholtzPair(coil, sep)
        return coil
    except DomainError as exc:
        raise UsageError(f"geometry: {exc}") from None


def _float_list(text, flag):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag}: not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise UsageError(f"{flag}: empty list")
    return values


def _manifest(args, config=None, inputs=()):
    digest = config_digest(config if config is not None else {})
    argv = {k: v for k, v in vars(args).items() if k != "handler"}
    return RunManifest(command=args.command, config_digest=digest,
                       toolkit_version=__version__, inputs=[str(p) for p in inputs],
                       arguments={k: str(v) for k, v in argv.items()})


# -- subcommands ------------------------------------------------------------

def cmd_simulate_fluorescence(args):
    config = load_config(args.config)
    section = _section(config, "fluorescence", required=False)
    if args.power_list is not None:
        powers_dbm = _float_list(args.power_list, "--power-list")
    elif "power_list" in section:
        powers_dbm = [watt_to_dbm(p) for p in _as_list(section["power_list"])]
    else:
        raise UsageError("no powers: give --power-list or [fluorescence] power_list_dBm")
    span = args.freq_span if args.freq_span is not None else section.get("freq_span", 500e3)
    points = int(args.points if args.points is not None else section.get("points", 201))
    if span <= 0 or points < MIN_TRACE_SAMPLES:
        raise UsageError(f"need freq span > 0 and at least {MIN_TRACE_SAMPLES} points")
    out = Path(args.out)
    manifest = _manifest(args, config, [args.config])
    qubit = qubit_from_config(config)
    freqs = qubit.qubit_frequency + np.linspace(-span / 2, span / 2, points)
    model = kerr_from_config(config) if args.model == "kerr" else None
    plot_cols = [[], [], [], [], [], []]
    for k, dbm in enumerate(sorted(powers_dbm)):
        power = dbm_to_watt(dbm)
        rabi = 2 * np.sqrt(qubit.external_rate) * np.sqrt(
            power / (const.hbar * const.TWO_PI * qubit.qubit_frequency))
        if model is None:
            s11 = reflection_two_level(qubit.detuning(freqs), rabi, qubit)
        else:
            s11 = np.empty(points, dtype=complex)
            for j, f in enumerate(freqs):
                rho, drive = solve_point(model, f, power)
                s11[j] = reflection_kerr(rho, model.external_rate,
                                         drive / (2 * np.sqrt(model.external_rate)))
        meta = {"power_dbm": format(dbm, ".17g"), "model": args.model,
                "rabi_rad_s": format(rabi, ".17g")}
        path = write_trace(out / f"trace_{k:03d}.csv", ComplexTrace(freqs, s11, power, meta))
        manifest.add_output(path)
        for col, values in zip(plot_cols, (np.full(points, dbm), freqs, s11.real, s11.imag,
                                           np.angle(s11), np.full(points, rabi))):
            col.extend(values)
    path = write_table(out / "plot_data.csv", plot_cols,
                       ["power_dbm", "freq_hz", "re_s11", "im_s11", "arg_s11", "rabi_rad_s"])
    manifest.add_output(path)
    manifest.write(out / "manifest.json")
    print(f"wrote {len(powers_dbm)} traces to {out}")
    return EXIT_OK


def _spectrum_grid(config, model, grid_kind, max_order):
    s = _section(config, "spectrum", required=False)
    if "power_list" in s:
        powers = np.array(sorted(_as_list(s["power_list"])))
    else:
        start = watt_to_dbm(s.get("power_start", dbm_to_watt(-145.0)))
        stop = watt_to_dbm(s.get("power_stop", dbm_to_watt(-100.0)))
        step = s.get("power_step", 1.0)
        if step <= 0 or stop < start:
            raise UsageError("[spectrum] needs power_start <= power_stop and power_step > 0")
        dbm = np.arange(start, stop + step / 2, step)
        if "low_power" in s:
            dbm = np.concatenate([[watt_to_dbm(s["low_power"])], dbm])
        powers = dbm_to_watt(np.round(dbm, 9))
    step_hz = s.get("step", 10e3)
    if grid_kind == "window":
        freqs = ladder_window_grid(model, max_order, s.get("half_width", 150e3), step_hz)
    else:
        lowest = ladder_frequencies(model, max_order)[-1] - 3 * s.get("half_width", 150e3)
        highest = model.mode_frequency + 3 * s.get("half_width", 150e3)
        freqs = np.arange(lowest, highest + step_hz / 2, step_hz)
    return freqs, np.unique(powers)


def cmd_simulate_spectrum(args):
    config = load_config(args.config)
    s = _section(config, "spectrum", required=False)
    model = kerr_from_config(config, levels=args.levels)
    max_order = int(args.max_order or s.get("max_order", 12))
    if model.truncation <= 2:
        max_order = 1
    max_order = min(max_order, model.truncation - 1)
    freqs, powers = _spectrum_grid(config, model, args.grid, max(max_order, 2))
    out = Path(args.out)
    manifest = _manifest(args, config, [args.config])
    log.info("sweeping %d x %d points", powers.size, freqs.size)
    grid = sweep_spectrum(model, freqs, powers, threads=args.threads)
    ii, jj = np.meshgrid(np.arange(powers.size), np.arange(freqs.size), indexing="ij")
    s11 = grid.s11.ravel()
    manifest.add_output(write_table(
        out / "spectrum.csv",
        [watt_to_dbm(powers)[ii.ravel()], freqs[jj.ravel()], s11.real, s11.imag, np.angle(s11)],
        ["power_dbm", "freq_hz", "re_s11", "im_s11", "arg_s11"]))
    manifest.notes["failed_points"] = {f"{i},{j}": msg for (i, j), msg in grid.errors.items()}
    manifest.notes["failure_fraction"] = grid.failure_fraction
    prominence = s.get("prominence", 0.001)
    try:
        peaks = extract_multiphoton_peaks(grid, max_order, prominence=prominence)
    except MissingPeakError as exc:
        log.warning("%s", exc)
        manifest.notes["missing_orders"] = str(exc)
        found = len(exc.found_orders)
        peaks = extract_multiphoton_peaks(grid, found, prominence=prominence) if found else []
    manifest.add_output(write_table(
        out / "peaks.csv",
        [[p[0] for p in peaks], [p[1] for p in peaks], [watt_to_dbm(p[2]) for p in peaks]],
        ["n", "freq_hz", "power_dbm"]))
    shifts = kerr_shift_series(peaks) if len(peaks) >= 2 else []
    manifest.add_output(write_table(
        out / "kerr_shift.csv",
        [[n for n, _ in shifts], [k for _, k in shifts], [k / const.TWO_PI for _, k in shifts]],
        ["n", "kerr_rad_s", "kerr_hz"]))
    manifest.write(out / "manifest.json")
    for n, f, p in peaks:
        print(f"n={n:2d}  f_n={f / 1e9:.6f} GHz  at {watt_to_dbm(p):.1f} dBm")
    for n, k in shifts:
        print(f"K({n}) = 2pi x {k / const.TWO_PI / 1e6:.4f} MHz")
    if grid.failure_fraction > MAX_FAILURE_FRACTION:
        raise NumericFailure(f"{len(grid.errors)} of {grid.s11.size} points failed")
    return EXIT_OK


_FIX_ALIASES = {"f": "qubit_frequency", "f1": "qubit_frequency", "k": "external_rate",
                "kappa": "external_rate", "g": "internal_rate", "gamma": "internal_rate",
                "rabi": "rabi", "w": "rabi"}


def _parse_fix(text):
    fixed = {}
    if not text:
        return fixed
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        name = _FIX_ALIASES.get(key, key)
        if not sep or name not in set(_FIX_ALIASES.values()):
            raise UsageError(f"--fix: cannot parse {item!r} (use f=, k=, g=, rabi= in SI units)")
        try:
            fixed[name] = float(value)
        except ValueError:
            raise UsageError(f"--fix: {key} is not a number") from None
    return fixed


def cmd_fit_trace(args):
    try:
        trace = read_trace(args.trace)
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc}") from None
    if len(trace) < MIN_TRACE_SAMPLES:
        raise UsageError(f"trace has {len(trace)} samples; at least {MIN_TRACE_SAMPLES} needed")
    fixed = _parse_fix(args.fix)
    if args.max_iter < 1:
        raise UsageError("--max-iter must be >= 1")
    result = fit_fluorescence_trace(trace, fixed=fixed, max_iter=args.max_iter)
    report = Path(args.out)
    out_dir = report.parent
    manifest = _manifest(args, {"fixed": fixed, "model": args.model}, [args.trace])
    manifest.add_output(write_fit_report(report, result, {"model": args.model,
                                                         "input": str(args.trace)}))
    text_path = report.with_suffix(".txt")
    from .fileio import atomic_write
    manifest.add_output(atomic_write(text_path, format_fit_report(result)))
    model = fluorescence_model(trace.frequencies, **{k: result.parameters[k] for k in
                                                      ("qubit_frequency", "external_rate",
                                                       "internal_rate", "rabi")})
    resid = trace.s11 - model
    manifest.add_output(write_table(
        report.with_name(report.stem + "_residuals.csv"),
        [trace.frequencies, resid.real, resid.imag], ["freq_hz", "re_residual", "im_residual"]))
    manifest.write(out_dir / (report.stem + "_manifest.json"))
    sys.stdout.write(format_fit_report(result))
    return EXIT_OK if result.converged else EXIT_NOFIT


def cmd_field_sweep(args):
    config = load_config(args.config)
    circuit = circuit_from_config(config)
    section = _section(config, "field", required=False)
    if args.b_list is not None:
        fields = np.array(_float_list(args.b_list, "--b-list")) * 1e-3
    elif "field_list" in section:
        fields = np.array(_as_list(section["field_list"]), dtype=float)
    else:
        fields = np.linspace(0, 0.07, 15)
    bad = fields[(fields < 0) | (fields >= circuit.al_critical_field)]
    if bad.size:
        raise UsageError(f"field {bad[0] * 1e3:g} mT is outside [0, B_c = "
                         f"{circuit.al_critical_field * 1e3:g} mT)")
    out = Path(args.out)
    inputs = [args.config] + ([args.fit] if args.fit else [])
    manifest = _manifest(args, config, inputs)
    f0 = float(qubit_frequency_vs_field(0.0, circuit))
    f1 = qubit_frequency_vs_field(fields, circuit)
    manifest.add_output(write_table(out / "field_sweep.csv", [fields, f1, f1 - f0],
                                    ["field_t", "freq_hz", "delta_freq_hz"]))
    status = EXIT_OK
    if args.fit:
        header, data, _ = read_table(args.fit)
        if data.shape[1] < 2:
            raise UsageError(f"{args.fit}: need columns field_t,freq_hz")
        try:
            result = fit_field_dependence(data[:, :2], circuit)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        manifest.add_output(write_fit_report(out / "field_fit.json", result))
        sys.stdout.write(format_fit_report(result))
        status = EXIT_OK if result.converged else EXIT_NOFIT
    manifest.write(out / "manifest.json")
    for b, d in zip(fields, f1 - f0):
        print(f"B = {b * 1e3:7.2f} mT   delta f1 = {d / 1e6:10.4f} MHz")
    return status


def _parse_line(text):
    try:
        start, end = text.split(":")
        a = [float(v) for v in start.split(",")]
        b = [float(v) for v in end.split(",")]
    except ValueError:
        raise UsageError("--line must look like x0,y0,z0:x1,y1,z1 (metres)") from None
    if len(a) != 3 or len(b) != 3:
        raise UsageError("--line endpoints need three coordinates each")
    return np.array(a), np.array(b)


def cmd_coil_field(args):
    config = load_config(args.geometry)
    assembly = assembly_from_config(config)
    line = _parse_line(args.line) if args.line else (
        np.array([-5e-3, 0, 0]) + np.asarray(assembly.center),
        np.array([5e-3, 0, 0]) + np.asarray(assembly.center))
    try:
        report = homogeneity_report(assembly, args.current, line, args.samples)
    except DomainError as exc:
        raise UsageError(f"geometry: {exc}") from None
    out = Path(args.out)
    manifest = _manifest(args, config, [args.geometry])
    table = report.table()
    manifest.add_output(write_table(out / "field.csv", table.T,
                                    ["x_m", "y_m", "z_m", "bx_t", "by_t", "bz_t"]))
    factor = conversion_factor(assembly)
    centre = assembly_field(assembly, args.current, np.asarray(assembly.center, dtype=float))
    summary = {"conversion_factor_t_per_a": factor, "current_a": args.current,
               "center_field_t": centre.tolist(),
               "max_relative_deviation": report.max_relative_deviation,
               "samples": int(args.samples)}
    manifest.add_output(write_json(out / "summary.json", summary))
    manifest.write(out / "manifest.json")
    print(f"conversion factor: {factor * 1e3:.4f} mT/A")
    print(f"max relative deviation along line: {report.max_relative_deviation * 100:.3f} %")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="kerrspec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-fluorescence", help="reflection traces of the driven qubit")
    p.add_argument("config")
    p.add_argument("--power-list", help="on-chip powers in dBm, comma separated")
    p.add_argument("--freq-span", type=float, help="total span around f1 in Hz")
    p.add_argument("--points", type=int)
    p.add_argument("--model", choices=("two-level", "kerr"), default="two-level")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_simulate_fluorescence)

    p = sub.add_parser("simulate-spectrum", help="driven-Kerr spectrum and multi-photon ladder")
    p.add_argument("config")
    p.add_argument("--levels", type=int, help="Fock-space truncation (overrides config)")
    p.add_argument("--grid", choices=("window", "uniform"), default="window",
                   help="windows around the ladder (default) or a uniform frequency grid")
    p.add_argument("--max-order", type=int)
    p.add_argument("--threads", type=int, help="worker threads (default KERRSPEC_THREADS)")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_simulate_spectrum)

    p = sub.add_parser("fit-trace", help="fit the qubit reflection formula to a trace file")
    p.add_argument("trace")
    p.add_argument("--model", choices=("two-level",), default="two-level")
    p.add_argument("--fix", help="pinned values, e.g. k=251327.4,g=62831.9 (SI)")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--out", required=True, help="JSON report path")
    p.set_defaults(handler=cmd_fit_trace)

    p = sub.add_parser("field-sweep", help="qubit frequency versus in-plane field")
    p.add_argument("config")
    p.add_argument("--b-list", help="fields in mT, comma separated")
    p.add_argument("--fit", help="CSV with field_t,freq_hz columns to fit")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_field_sweep)

    p = sub.add_parser("coil-field", help="coil or Helmholtz-pair field along a line")
    p.add_argument("geometry")
    p.add_argument("--current", type=float, default=1.0, help="A")
    p.add_argument("--line", help="x0,y0,z0:x1,y1,z1 in metres (default x = -5..5 mm)")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_coil_field)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.handler(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, AmbiguityError, ArithmeticError, np.linalg.LinAlgError,
            RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
