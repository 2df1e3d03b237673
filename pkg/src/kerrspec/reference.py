"""Bundled reference values: per-cooldown circuit parameters and scalar anchors.

Cells are stored as printed (``"1.9 × 10^5"``); :func:`load_cooldowns` keeps
the text next to the parsed SI value so the original notation survives.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache
from importlib import resources
from typing import Optional

from . import constants as const

__all__ = ["CooldownRecord", "load_cooldowns", "cooldown", "load_anchors", "parse_printed"]

_SCI = re.compile(r"^\s*([0-9.]+)\s*×\s*10\^(-?\d+)\s*$")


def parse_printed(text):
    """'1.9 × 10^5' -> Decimal('1.9E+5'); '-' -> None."""
    text = text.strip()
    if text in ("-", ""):
        return None
    match = _SCI.match(text)
    if match:
        return Decimal(match[1]).scaleb(int(match[2]))
    return Decimal(text)


def _flag(text):
    return {"yes": True, "no": False}[text.strip()]


@dataclass(frozen=True)
class CooldownRecord:
    run: int
    raw: dict
    qubit_frequency: float
    anharmonicity: Optional[float]
    external_q: float
    internal_q: float
    external_rate: float
    internal_rate: float
    shield_cu: bool
    shield_al: bool
    shield_mumetal: bool
    magnetic_field: bool


def _read(name):
    return resources.files("kerrspec").joinpath("data", name).read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def load_cooldowns():
    lines = [ln for ln in _read("cooldowns.csv").splitlines() if not ln.startswith("#")]
    records = []
    for row in csv.DictReader(lines):
        alpha = parse_printed(row["alpha_2pi_MHz"])
        records.append(CooldownRecord(
            run=int(row["run"]),
            raw=dict(row),
            qubit_frequency=float(parse_printed(row["f1_GHz"])) * 1e9,
            anharmonicity=None if alpha is None else const.TWO_PI * float(alpha) * 1e6,
            external_q=float(parse_printed(row["Qc0"])),
            internal_q=float(parse_printed(row["Qi0"])),
            external_rate=const.TWO_PI * float(parse_printed(row["kappa0_2pi_kHz"])) * 1e3,
            internal_rate=const.TWO_PI * float(parse_printed(row["gamma0_2pi_kHz"])) * 1e3,
            shield_cu=_flag(row["shield_Cu"]),
            shield_al=_flag(row["shield_Al"]),
            shield_mumetal=_flag(row["shield_mumetal"]),
            magnetic_field=_flag(row["magnetic_field"]),
        ))
    return tuple(records)


def cooldown(run):
    for rec in load_cooldowns():
        if rec.run == run:
            return rec
    raise KeyError(f"no cooldown run {run}")


@lru_cache(maxsize=1)
def load_anchors():
    """Anchor values as Decimal, keyed as in the data file (units in the key)."""
    data = json.loads(_read("anchors.json"))
    return {k: Decimal(v) for k, v in data.items() if not k.startswith("_")}
