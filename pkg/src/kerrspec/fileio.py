"""File formats: CSV traces, unit-suffixed INI configs, JSON reports and run manifests.

Power units are converted between dBm and watts only in this module.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
import re
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import constants as const
from .exceptions import ConfigError, DomainError

__all__ = [
    "TRACE_HEADER",
    "UNIT_SCALE",
    "dbm_to_watt",
    "watt_to_dbm",
    "atomic_write",
    "write_trace",
    "read_trace",
    "load_config",
    "parse_config",
    "config_digest",
    "write_json",
    "write_fit_report",
    "read_fit_report",
    "format_fit_report",
    "RunManifest",
    "write_table",
    "read_table",
]

TRACE_HEADER = "freq_hz,re_s11,im_s11"
_FMT = ".17g"

# Multiplier to SI. Rate suffixes ending in "2pi" mean 2 pi x value (rad/s).
UNIT_SCALE = {
    "Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9,
    "Hz2pi": const.TWO_PI, "kHz2pi": const.TWO_PI * 1e3, "MHz2pi": const.TWO_PI * 1e6,
    "rads": 1.0,
    "F": 1.0, "pF": 1e-12, "fF": 1e-15,
    "H": 1.0, "uH": 1e-6, "nH": 1e-9, "pH": 1e-12,
    "T": 1.0, "mT": 1e-3, "uT": 1e-6,
    "A": 1.0, "mA": 1e-3,
    "Am2": 1.0, "mAum2": 1e-3 / 1e-12,
    "m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9,
    "K": 1.0, "mK": 1e-3,
    "ohm": 1.0, "s": 1.0, "us": 1e-6,
    "W": 1.0, "dB": 1.0, "dBm": None, "rad": 1.0,
    "J": 1.0,
    "count": 1.0, "ratio": 1.0, "squares": 1.0, "vector": 1.0,
}


def dbm_to_watt(dbm):
    """P[W] = 10^((P[dBm] - 30) / 10)."""
    dbm = np.asarray(dbm, dtype=float)
    out = 10.0 ** ((dbm - 30.0) / 10.0)
    return float(out) if out.ndim == 0 else out


def watt_to_dbm(watt):
    watt = np.asarray(watt, dtype=float)
    if np.any(watt <= 0):
        raise DomainError("power must be > 0 to express in dBm")
    out = 10.0 * np.log10(watt) + 30.0
    return float(out) if out.ndim == 0 else out


def atomic_write(path, data):
    """Write text or bytes to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8",
                                                            "newline": "\n"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# -- traces -----------------------------------------------------------------

def write_trace(path, trace):
    """CSV with ``# key=value`` metadata lines, then header and samples."""
    meta = dict(trace.metadata)
    if trace.on_chip_power is not None and trace.on_chip_power > 0:
        meta.setdefault("power_dbm", format(watt_to_dbm(trace.on_chip_power), _FMT))
    lines = []
    for key, value in meta.items():
        if "=" in str(key) or "\n" in str(key) or "\n" in str(value):
            raise DomainError(f"metadata entry {key!r} cannot be serialized")
        lines.append(f"# {key}={value}")
    lines.append(TRACE_HEADER)
    for f, s in zip(trace.frequencies, trace.s11):
        lines.append(f"{format(f, _FMT)},{format(s.real, _FMT)},{format(s.imag, _FMT)}")
    return atomic_write(path, "\n".join(lines) + "\n")


def read_trace(path):
    from .estimation import ComplexTrace

    meta = {}
    rows = []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if header_seen:
                    raise DomainError(f"{path}:{lineno}: metadata after the header")
                body = line[1:].strip()
                if "=" not in body:
                    raise DomainError(f"{path}:{lineno}: metadata line needs key=value")
                key, value = body.split("=", 1)
                meta[key.strip()] = value.strip()
                continue
            if not header_seen:
                if line.replace(" ", "") != TRACE_HEADER:
                    raise DomainError(f"{path}:{lineno}: expected header {TRACE_HEADER!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DomainError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            try:
                values = [float(p) for p in parts]
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in values):
                raise DomainError(f"{path}:{lineno}: non-finite sample in data row "
                                  f"{len(rows)}")
            rows.append(values)
    if not header_seen:
        raise DomainError(f"{path}: missing header {TRACE_HEADER!r}")
    data = np.array(rows, dtype=float).reshape(-1, 3)
    power = None
    if "power_dbm" in meta:
        try:
            power = dbm_to_watt(float(meta["power_dbm"]))
        except ValueError:
            raise DomainError(f"{path}: power_dbm is not a number") from None
    return ComplexTrace(data[:, 0], data[:, 1] + 1j * data[:, 2], power, meta)


def write_table(path, columns, header, metadata=None):
    """Numeric CSV with a header row; columns are equal-length arrays."""
    lines = [f"# {k}={v}" for k, v in (metadata or {}).items()]
    lines.append(",".join(header))
    for row in zip(*columns):
        lines.append(",".join(format(float(v), _FMT) for v in row))
    return atomic_write(path, "\n".join(lines) + "\n")


def read_table(path):
    """Returns (header, 2-d array, metadata) of a file written by :func:`write_table`."""
    meta, header, rows = {}, None, []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif header is None:
                header = line.split(",")
            else:
                try:
                    rows.append([float(v) for v in line.split(",")])
                except ValueError as exc:
                    raise DomainError(f"{path}:{lineno}: {exc}") from None
    return header, np.array(rows, dtype=float).reshape(-1, len(header or [])), meta


# -- configs ----------------------------------------------------------------

_KEY = re.compile(r"^(?P<name>[a-z][a-z0-9_]*?)_(?P<unit>[A-Za-z0-9]+)$")


def _convert(section, key, unit, raw):
    if unit not in UNIT_SCALE:
        raise ConfigError(f"[{section}] {key}: unknown unit suffix {unit!r}")
    items = [v.strip() for v in raw.split(",") if v.strip()]
    if not items:
        raise ConfigError(f"[{section}] {key}: empty value")
    try:
        values = [float(v) for v in items]
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"[{section}] {key}: non-finite value")
    if unit == "dBm":
        values = [dbm_to_watt(v) for v in values]
    else:
        values = [v * UNIT_SCALE[unit] for v in values]
    if unit == "count":
        if any(v != int(v) for v in values):
            raise ConfigError(f"[{section}] {key}: count must be an integer")
        values = [int(v) for v in values]
    multi = len(values) > 1 or key.endswith(("_list_" + unit, "_vector")) or unit == "vector"
    return values if multi else values[0]


def parse_config(text, source="<string>"):
    """Parse INI text into ``{section: {name: SI value}}``.

    Every key ends in a unit suffix (``shunt_capacitance_fF``); the suffix is
    stripped and the value converted to SI. Powers given in dBm come out in
    watts. Comma-separated values become lists.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    out = {}
    for section in parser.sections():
        values = {}
        for key, raw in parser.items(section):
            match = _KEY.match(key)
            if not match:
                raise ConfigError(f"{source}: [{section}] {key}: missing unit suffix")
            name = match["name"]
            if name in values:
                raise ConfigError(f"{source}: [{section}] {name} given twice")
            values[name] = _convert(section, key, match["unit"], raw)
        out[section] = values
    return out


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path))


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), _FMT)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def config_digest(config):
    """sha256 of the canonical JSON form; independent of key order."""
    blob = json.dumps(_canonical(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# -- reports and manifests --------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, payload):
    return atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def write_fit_report(path, result, extra=None):
    payload = result.as_dict()
    if extra:
        payload.update(extra)
    return write_json(path, payload)


def read_fit_report(path):
    from .estimation import FitResult

    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return FitResult(
        parameters=data["parameters"],
        standard_errors=data["standard_errors"],
        residual_norm=data["residual_norm"],
        covariance=np.array(data["covariance"], dtype=float),
        converged=data["converged"],
        iterations=data["iterations"],
        units=data.get("units", {}),
        flags=data.get("flags", []),
        message=data.get("message", ""),
    )


def format_fit_report(result):
    """Plain-text summary, one parameter per line."""
    lines = [f"converged: {'yes' if result.converged else 'no'} "
             f"({result.iterations} iterations, {result.message})",
             f"residual norm: {result.residual_norm:.6g}"]
    for name, value in result.parameters.items():
        err = result.standard_errors.get(name)
        unit = result.units.get(name, "")
        err_txt = f" +/- {err:.3g}" if err is not None else ""
        lines.append(f"  {name:<20s} {value:.10g}{err_txt} {unit}".rstrip())
    for flag in result.flags:
        lines.append(f"flag: {flag}")
    return "\n".join(lines) + "\n"


@dataclass
class RunManifest:
    command: str
    config_digest: str
    toolkit_version: str
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"))
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    arguments: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def add_output(self, path):
        self.outputs.append(str(path))

    def file_digests(self):
        out = {}
        for p in self.inputs + self.outputs:
            try:
                out[str(p)] = hashlib.sha256(Path(p).read_bytes()).hexdigest()
            except OSError:
                out[str(p)] = None
        return out

    def write(self, path):
        missing = [p for p in self.outputs if not Path(p).exists()]
        if missing:
            raise DomainError(f"manifest lists missing outputs: {missing}")
        payload = asdict(self)
        payload["sha256"] = self.file_digests()
        return write_json(path, payload)
