"""Conserved quantities of the flow and their drift along trajectories."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .grid import SphereField, fourier_multiply

E3 = np.array([0.0, 0.0, 1.0])
POLE_EPS = 1e-6
BOUNDARY_TOL = 1e-2


class NonDecayingWarning(UserWarning):
    """Field does not approach the base point at the window edges."""


def energy(u: SphereField) -> float:
    """``1/2 sum_j u_j . (|nabla| u)_j dx``."""
    w = fourier_multiply(u.values, u.grid, "halfwave")
    return 0.5 * float(np.sum(u.values * w)) * u.grid.dx


def energy_fourier(u: SphereField) -> float:
    """Same energy from the spectrum: ``dx/(2n) sum_k |kappa_k| |u_hat_k|^2``."""
    coeffs = np.fft.fft(u.values, axis=0)
    weights = np.abs(u.grid.wavenumbers)[:, None]
    return 0.5 * float(np.sum(weights * np.abs(coeffs) ** 2)) * u.grid.dx / u.grid.n


def energy_double_integral(u: SphereField) -> float:
    """``1/(4 pi) iint |u(x) - u(y)|^2 / dist(x, y)^2`` by direct quadrature.

    ``dist`` is ``|x - y|`` on a window and the chord ``2 |sin((x - y)/2)|`` on
    the torus.  The diagonal uses the limit ``|u'(x)|^2``.  Cost ``O(n^2)``.
    """
    grid = u.grid
    x = grid.nodes
    vals = u.values
    du = fourier_multiply(vals, grid, "derivative")
    total = float(np.sum(du * du))
    for j in range(grid.n):
        diff = vals - vals[j]
        sep = x - x[j]
        if grid.is_torus:
            dist2 = (2.0 * np.sin(sep / 2.0)) ** 2
        else:
            dist2 = sep * sep
        dist2[j] = 1.0
        row = np.einsum("ij,ij->i", diff, diff) / dist2
        row[j] = 0.0
        total += float(np.sum(row))
    return total * grid.dx**2 / (4.0 * np.pi)


def _check_base_point(base_point) -> np.ndarray:
    p = np.asarray(base_point, dtype=float)
    if p.shape != (3,) or abs(np.linalg.norm(p) - 1.0) > 1e-12:
        raise DomainError(f"base point must lie on the unit sphere, got {base_point!r}")
    return p


def boundary_deviation(u: SphereField, base_point) -> float:
    """``max |u - P|`` over the outer 1% of window nodes (0 on the torus)."""
    if u.grid.is_torus:
        return 0.0
    p = _check_base_point(base_point)
    x = u.grid.nodes
    outer = np.abs(x) >= 0.99 * u.grid.half_width
    return float(np.max(np.linalg.norm(u.values[outer] - p, axis=1)))


def total_spin(u: SphereField, base_point=E3) -> np.ndarray:
    """``int (u - P) dx`` by the symmetric (principal-value style) node sum.

    A :class:`NonDecayingWarning` is issued when ``u`` is not close to ``P``
    at the window edges.
    """
    p = _check_base_point(base_point)
    dev = boundary_deviation(u, p)
    if dev > BOUNDARY_TOL:
        warnings.warn(
            f"field deviates from the base point by {dev:.3g} at the window edge",
            NonDecayingWarning,
            stacklevel=2,
        )
    return np.sum(u.values - p, axis=0) * u.grid.dx


def mass(u: SphereField, base_point=E3) -> float:
    """``int |u - P|^2 dx``."""
    p = _check_base_point(base_point)
    diff = u.values - p
    return float(np.sum(diff * diff)) * u.grid.dx


def momentum(u: SphereField, pole_eps: float = POLE_EPS) -> float:
    """``int (u2 u1' - u1 u2') / (1 - u3) dx`` with spectral derivatives.

    Raises :class:`DomainError` if ``u3`` comes within ``pole_eps`` of 1.
    """
    vals = u.values
    gap = 1.0 - vals[:, 2]
    bad = np.flatnonzero(gap < pole_eps)
    if bad.size:
        shown = ", ".join(str(i) for i in bad[:8])
        raise DomainError(
            f"momentum integrand singular: u3 within {pole_eps:g} of the north pole "
            f"at {bad.size} node(s) [{shown}{', ...' if bad.size > 8 else ''}]"
        )
    du = fourier_multiply(vals[:, :2], u.grid, "derivative")
    integrand = (vals[:, 1] * du[:, 0] - vals[:, 0] * du[:, 1]) / gap
    return float(np.sum(integrand)) * u.grid.dx


def curve_length(u: SphereField) -> float:
    """Length ``int |u'| dx`` of the sampled curve."""
    du = fourier_multiply(u.values, u.grid, "derivative")
    return float(np.sum(np.linalg.norm(du, axis=1))) * u.grid.dx


@dataclass(frozen=True)
class InvariantRecord:
    time: float
    energy: float
    spin: tuple
    mass: float
    momentum: float
    length: float
    base_point: tuple
    spin_pv: bool = False

    def row(self) -> list[float]:
        """Values in CSV column order ``t, E, S1, S2, S3, M, P, length``."""
        return [self.time, self.energy, *self.spin, self.mass, self.momentum, self.length]


CSV_COLUMNS = ("t", "E", "S1", "S2", "S3", "M", "P", "length")


def invariant_record(u: SphereField, time: float = 0.0, base_point=E3) -> InvariantRecord:
    """Evaluate every invariant; momentum is NaN where its integrand is singular."""
    p = _check_base_point(base_point)
    pv = boundary_deviation(u, p) > BOUNDARY_TOL
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonDecayingWarning)
        spin = total_spin(u, p)
    try:
        mom = momentum(u)
    except DomainError:
        mom = math.nan
    return InvariantRecord(
        time=float(time),
        energy=energy(u),
        spin=tuple(float(s) for s in spin),
        mass=mass(u, p),
        momentum=mom,
        length=curve_length(u),
        base_point=tuple(float(c) for c in p),
        spin_pv=bool(pv),
    )


INVARIANT_NAMES = ("E", "S1", "S2", "S3", "M", "P", "length")


@dataclass(frozen=True)
class DriftReport:
    """Largest absolute and relative deviation of each invariant from its initial value."""

    absolute: dict
    relative: dict
    snapshots: int

    def to_dict(self) -> dict:
        return asdict(self)


def drift_from_records(records) -> DriftReport:
    rows = np.array([r.row()[1:] for r in records], dtype=float)
    first = rows[0]
    with np.errstate(invalid="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN momentum column
        dev = np.abs(rows - first)
        absolute = np.nanmax(dev, axis=0) if len(rows) else np.zeros(len(first))
    absolute = np.where(np.isnan(first), np.nan, absolute)
    scale = np.abs(first)
    relative = np.where(scale > 0, absolute / np.where(scale > 0, scale, 1.0), absolute)
    return DriftReport(
        absolute={k: float(v) for k, v in zip(INVARIANT_NAMES, absolute)},
        relative={k: float(v) for k, v in zip(INVARIANT_NAMES, relative)},
        snapshots=len(records),
    )


def drift_report(traj, base_point=E3) -> DriftReport:
    """Recompute all invariants on every snapshot and report deviations from the first."""
    records = [invariant_record(u, t, base_point) for t, u in zip(traj.times, traj.snapshots)]
    return drift_from_records(records)
