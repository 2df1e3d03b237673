"""Biot-Savart fields of circular filaments, wound coils and Helmholtz pairs.

Each turn of a coil is one circular filament through the wire centre; a coil
of ``layer_count`` x ``turns_per_layer`` turns is the superposition of those
loops. Positions are 3-vectors in metres; arrays of positions with a trailing
axis of length 3 are evaluated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import constants as const
from ._validation import check_positive
from .exceptions import DomainError

__all__ = [
    "WIRE_DIAMETER",
    "SERIES_TERMS",
    "ellipk_agm",
    "ellipke_agm",
    "ellipke_series",
    "loop_field",
    "CoilGeometry",
    "HelmholtzPair",
    "FieldPoint",
    "coil_field",
    "helmholtz_field",
    "assembly_field",
    "conversion_factor",
    "homogeneity_report",
    "HomogeneityReport",
    "REFERENCE_HELMHOLTZ",
    "REFERENCE_COMPENSATION_COIL",
]

WIRE_DIAMETER = 140e-6
SERIES_TERMS = 20
_AGM_TOL = 1e-15


def ellipke_agm(m):
    """Complete elliptic integrals K(m), E(m) by the AGM, parameter m = k^2 < 1."""
    m = np.asarray(m, dtype=float)
    if np.any(m >= 1) or np.any(m < 0):
        raise DomainError("elliptic parameter must lie in [0, 1)")
    a = np.ones_like(m)
    b = np.sqrt(1 - m)
    # E = K (1 - sum_n 2^(n-1) c_n^2) with c_0^2 = m
    power = 0.5
    c2_sum = 0.5 * m
    for _ in range(64):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        power *= 2
        c2_sum = c2_sum + power * c * c
        if np.all(np.abs(c) <= _AGM_TOL * a):
            break
    k = np.pi / (2 * a)
    return k, k * (1 - c2_sum)


def ellipk_agm(m):
    return ellipke_agm(m)[0]


def _maclaurin_ke(m, terms):
    coef = 1.0
    k_sum = np.zeros_like(m)
    e_sum = np.zeros_like(m)
    mn = np.ones_like(m)
    for n in range(terms):
        if n:
            coef *= ((2 * n - 1) / (2 * n)) ** 2
        k_sum = k_sum + coef * mn
        e_sum = e_sum + coef * mn / (1 - 2 * n)
        mn = mn * m
    return 0.5 * np.pi * k_sum, 0.5 * np.pi * e_sum


def ellipke_series(m, terms=SERIES_TERMS, landen_steps=2):
    """K(m), E(m) from a truncated power series in the modulus.

    Two descending Landen steps first shrink the modulus so that ``terms``
    terms of the Maclaurin series suffice away from m -> 1.
    """
    m = np.asarray(m, dtype=float)
    if np.any(m >= 1) or np.any(m < 0):
        raise DomainError("elliptic parameter must lie in [0, 1)")
    chain = []
    k = np.sqrt(m)
    for _ in range(landen_steps):
        kp = np.sqrt(1 - k * k)
        k1 = (1 - kp) / (1 + kp)
        chain.append((kp, k1))
        k = k1
    big_k, big_e = _maclaurin_ke(k * k, terms)
    for kp, k1 in reversed(chain):
        big_k, big_e = (1 + k1) * big_k, (1 + kp) * big_e - kp * (1 + k1) * big_k
    return big_k, big_e


def _loop_cylindrical(radius, current, rho, z, method):
    """(B_rho, B_z) of a loop of ``radius`` in the z = 0 plane."""
    a = radius
    r2 = rho * rho + z * z
    alpha2 = a * a + r2 - 2 * a * rho
    beta2 = a * a + r2 + 2 * a * rho
    beta = np.sqrt(beta2)
    m = 1 - alpha2 / beta2
    kernel = ellipke_agm if method == "exact" else ellipke_series
    big_k, big_e = kernel(m)
    c = const.mu_0 * current / np.pi
    bz = c / (2 * alpha2 * beta) * ((a * a - r2) * big_e + alpha2 * big_k)
    # near the axis the bracket cancels; use the leading-order expansion there
    near = rho < 1e-6 * a
    safe_rho = np.where(near, 1.0, rho)
    brho = c * z / (2 * alpha2 * beta * safe_rho) * ((a * a + r2) * big_e - alpha2 * big_k)
    paraxial = 3 * const.mu_0 * current * a * a * z * rho / (4 * (a * a + z * z) ** 2.5)
    brho = np.where(near, paraxial, brho)
    return brho, bz


def _as_points(position):
    p = np.asarray(position, dtype=float)
    if p.shape[-1:] != (3,):
        raise DomainError("positions need a trailing axis of length 3")
    if not np.all(np.isfinite(p)):
        raise DomainError("positions must be finite")
    return p


def loop_field(radius, current, position, method="exact", wire_diameter=WIRE_DIAMETER,
               axis=(0.0, 0.0, 1.0)):
    """Field (T) of a circular filament centred at the origin with normal ``axis``.

    ``method`` is ``"exact"`` (AGM elliptic integrals) or ``"series"``
    (truncated expansion, :data:`SERIES_TERMS` terms). Points closer than
    half a wire diameter to the filament raise :class:`DomainError`.
    """
    check_positive("radius", radius)
    if method not in ("exact", "series"):
        raise ValueError(f"unknown method {method!r}")
    p = _as_points(position)
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    z = p @ n
    radial = p - z[..., None] * n
    rho = np.linalg.norm(radial, axis=-1)
    dist = np.hypot(rho - radius, z)
    if np.any(dist <= max(wire_diameter / 2, 1e-12 * radius)):
        raise DomainError("evaluation point lies on the wire")
    brho, bz = _loop_cylindrical(radius, current, rho, z, method)
    unit = np.divide(radial, rho[..., None], out=np.zeros_like(radial), where=rho[..., None] > 0)
    return bz[..., None] * n + brho[..., None] * unit


@dataclass(frozen=True)
class CoilGeometry:
    """Multi-layer solenoid. ``inner_radius`` is the filament radius of layer 0."""

    layer_count: int
    turns_per_layer: int
    inner_radius: float
    length: float
    wire_diameter: float = WIRE_DIAMETER
    axis: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    center: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if int(self.layer_count) < 1 or int(self.turns_per_layer) < 1:
            raise DomainError("layer_count and turns_per_layer must be >= 1")
        check_positive("wire_diameter", self.wire_diameter)
        check_positive("inner_radius", self.inner_radius)
        check_positive("length", self.length)
        if self.inner_radius <= self.wire_diameter:
            raise DomainError("inner_radius must exceed the wire diameter")
        wound = self.turns_per_layer * self.wire_diameter
        if abs(self.length - wound) > self.wire_diameter:
            raise DomainError(
                f"length {self.length:.6g} m does not fit {self.turns_per_layer} turns of "
                f"{self.wire_diameter:.6g} m wire (expected {wound:.6g} m within one diameter)")
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,) or not np.isclose(np.linalg.norm(axis), 1, atol=1e-12):
            raise DomainError("axis must be a unit 3-vector")
        if np.shape(self.center) != (3,):
            raise DomainError("center must be a 3-vector")

    @property
    def turns(self):
        return int(self.layer_count) * int(self.turns_per_layer)

    def loops(self):
        """(radius, axial offset) of every filament."""
        d = self.wire_diameter
        radii = self.inner_radius + d * np.arange(int(self.layer_count))
        offsets = d * (np.arange(int(self.turns_per_layer)) - (int(self.turns_per_layer) - 1) / 2)
        rr, oo = np.meshgrid(radii, offsets, indexing="ij")
        return rr.ravel(), oo.ravel()

    def contains(self, position):
        """True where a point lies inside the winding volume."""
        p = _as_points(position) - np.asarray(self.center, dtype=float)
        n = np.asarray(self.axis, dtype=float)
        z = p @ n
        rho = np.linalg.norm(p - z[..., None] * n, axis=-1)
        d = self.wire_diameter
        r_lo = self.inner_radius - d / 2
        r_hi = self.inner_radius + (int(self.layer_count) - 0.5) * d
        half = int(self.turns_per_layer) * d / 2
        return (rho >= r_lo) & (rho <= r_hi) & (np.abs(z) <= half)

    def shifted(self, offset):
        return CoilGeometry(self.layer_count, self.turns_per_layer, self.inner_radius,
                            self.length, self.wire_diameter, self.axis,
                            tuple(np.asarray(self.center, dtype=float) + offset))


@dataclass(frozen=True)
class HelmholtzPair:
    """Two identical coaxial coils whose centres sit ``separation`` apart."""

    coil: CoilGeometry
    separation: float

    def __post_init__(self):
        check_positive("separation", self.separation)
        if self.separation < self.coil.turns_per_layer * self.coil.wire_diameter:
            raise DomainError("coils overlap at this separation")

    @property
    def coils(self):
        step = 0.5 * self.separation * np.asarray(self.coil.axis, dtype=float)
        return self.coil.shifted(-step), self.coil.shifted(step)

    @property
    def center(self):
        return self.coil.center

    @property
    def axis(self):
        return self.coil.axis


@dataclass(frozen=True)
class FieldPoint:
    position: Tuple[float, float, float]
    field: Tuple[float, float, float]

    def __post_init__(self):
        if not (np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.field))):
            raise DomainError("field point components must be finite")


def coil_field(coil, current, position, method="exact"):
    """Superposed field (T) of all filaments of ``coil``."""
    p = _as_points(position)
    if np.any(coil.contains(p)):
        raise DomainError("evaluation point inside the winding volume")
    n = np.asarray(coil.axis, dtype=float)
    rel = p - np.asarray(coil.center, dtype=float)
    total = np.zeros(p.shape)
    for radius, offset in zip(*coil.loops()):
        total += loop_field(radius, current, rel - offset * n, method=method,
                            wire_diameter=coil.wire_diameter, axis=n)
    return total


def helmholtz_field(pair, current, position, method="exact"):
    first, second = pair.coils
    return coil_field(first, current, position, method) + coil_field(second, current, position,
                                                                       method)


def assembly_field(assembly, current, position, method="exact"):
    if isinstance(assembly, HelmholtzPair):
        return helmholtz_field(assembly, current, position, method)
    if isinstance(assembly, CoilGeometry):
        return coil_field(assembly, current, position, method)
    raise TypeError(f"unsupported assembly {type(assembly).__name__}")


def conversion_factor(assembly, method="exact"):
    """|B| per ampere (T/A) at the assembly centre."""
    return float(np.linalg.norm(assembly_field(assembly, 1.0, assembly.center, method)))


@dataclass
class HomogeneityReport:
    points: list = field(default_factory=list)
    max_relative_deviation: float = 0.0
    reference_field: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def table(self):
        """Rows of (x, y, z, Bx, By, Bz)."""
        return np.array([tuple(p.position) + tuple(p.field) for p in self.points])


def homogeneity_report(assembly, current, line, samples, method="exact"):
    """Sample B along the segment ``line = (start, end)``.

    The deviation is max |B(x) - B_0| / |B_0| with B_0 the field at the
    assembly centre. With zero current the deviation is reported as 0.
    """
    if int(samples) < 2:
        raise DomainError("need at least 2 samples")
    start, end = (np.asarray(v, dtype=float) for v in line)
    if start.shape != (3,) or end.shape != (3,):
        raise DomainError("line endpoints must be 3-vectors")
    t = np.linspace(0.0, 1.0, int(samples))[:, None]
    positions = start + t * (end - start)
    fields = assembly_field(assembly, current, positions, method)
    ref = assembly_field(assembly, current, np.asarray(assembly.center, dtype=float), method)
    ref_norm = np.linalg.norm(ref)
    deviation = 0.0
    if ref_norm > 0:
        deviation = float(np.max(np.linalg.norm(fields - ref, axis=-1)) / ref_norm)
    points = [FieldPoint(tuple(p), tuple(b)) for p, b in zip(positions, fields)]
    return HomogeneityReport(points, deviation, tuple(ref))


# Geometries reconstructed to reproduce the quoted conversion factors
# (80 mT/A for the pair, 50 mT/A for the compensation coil) and a field change
# of at most a few percent over |x| <= 5 mm. The winding tables themselves
# are not available, so treat these as configuration.
REFERENCE_HELMHOLTZ = HelmholtzPair(
    coil=CoilGeometry(layer_count=30, turns_per_layer=42, inner_radius=12e-3,
                      length=42 * WIRE_DIAMETER),
    separation=14e-3,
)
REFERENCE_COMPENSATION_COIL = CoilGeometry(
    layer_count=10, turns_per_layer=64, inner_radius=6e-3, length=64 * WIRE_DIAMETER,
    axis=(0.0, 0.0, 1.0),
)
