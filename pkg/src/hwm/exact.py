"""Closed-form fields: Blaschke traveling waves, circle waves, the rational
time-periodic field, stereographic transfer to the torus and Moebius
reparametrizations of the domain.

Sign conventions
----------------
The Blaschke profile is ``R (a Re B, -c a Im B, -c v)`` with ``a = sqrt(1-v^2)``
and ``c`` the chirality (+1 or -1).  Under ``du/dt = u x |nabla| u`` this field
translates with speed ``-v``; see :func:`profile_velocity`.

The stereographic map sends the torus angle ``theta in (-pi, pi)`` to
``x = tan(theta / 2)`` and ``theta = pi`` to infinity, where ``B = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InterpolationError
from .grid import Grid1D, SphereField, fourier_multiply, hwm_rhs_values, interpolate

PERIODIC_ORBIT_OMEGA = 1.0 / np.sqrt(2.0)
PERIODIC_ORBIT_PERIOD = 2.0 * np.pi * np.sqrt(2.0)


@dataclass(frozen=True)
class BlaschkeSpec:
    """Zeros in the upper half-plane, velocity, target rotation and chirality."""

    zeros: tuple = ()
    velocity: float = 0.0
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    chirality: int = 1

    def __post_init__(self):
        zeros = tuple(complex(z) for z in self.zeros)
        for z in zeros:
            if not z.imag > 0:
                raise DomainError(f"Blaschke zero {z} is not in the open upper half-plane")
        rot = np.asarray(self.rotation, dtype=float)
        if rot.shape != (3, 3):
            raise DomainError("rotation must be a 3x3 matrix")
        if np.linalg.norm(rot.T @ rot - np.eye(3)) > 1e-12 or np.linalg.det(rot) < 0:
            raise DomainError("rotation must be orthogonal with determinant +1")
        if self.chirality not in (1, -1):
            raise DomainError("chirality must be +1 or -1")
        if not np.isfinite(self.velocity):
            raise DomainError("velocity must be finite")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "rotation", rot)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    @classmethod
    def pure(cls, m: int, velocity: float = 0.0, chirality: int = 1) -> "BlaschkeSpec":
        """Degree-``m`` product with every zero at ``i``."""
        return cls(zeros=(1j,) * m, velocity=velocity, chirality=chirality)


def blaschke_product(spec: BlaschkeSpec, z):
    """``prod_k (z - z_k) / (z - conj(z_k))``; unimodular on the real line."""
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for zk in spec.zeros:
        denom = z - np.conj(zk)
        if np.any(denom == 0):
            raise DomainError(f"evaluation point hits the pole {np.conj(zk)}")
        out = out * (z - zk) / denom
    return out if out.ndim else complex(out)


def _check_velocity(v: float) -> None:
    if abs(v) >= 1:
        raise DomainError(
            f"no nonconstant profile for |v| ≥ 1 (got v={v}); finite-energy "
            "traveling waves are constant in that regime"
        )


def _profile_from_product(b: np.ndarray, spec: BlaschkeSpec) -> np.ndarray:
    v = spec.velocity
    a = np.sqrt(1.0 - v * v)
    c = spec.chirality
    raw = np.column_stack([a * b.real, -c * a * b.imag, np.full(b.shape, -c * v)])
    return raw @ spec.rotation.T


def blaschke_profile(spec: BlaschkeSpec, grid: Grid1D) -> SphereField:
    """Sample the traveling-wave profile; torus grids go through the pullback."""
    _check_velocity(spec.velocity)
    if grid.is_torus:
        return stereographic_pullback(spec, grid)
    b = blaschke_product(spec, grid.nodes.astype(complex))
    return SphereField(grid, _profile_from_product(np.atleast_1d(b), spec))


def soliton_energy_expected(m: int, v: float) -> float:
    """Energy ``(1 - v^2) m pi`` of a degree-``m`` profile with speed ``v``."""
    if m < 0 or int(m) != m:
        raise DomainError("degree must be a non-negative integer")
    _check_velocity(v)
    return (1.0 - v * v) * m * np.pi


def stereographic_pullback(spec: BlaschkeSpec, grid: Grid1D) -> SphereField:
    """Evaluate the line profile at ``x = tan(theta / 2)`` on a torus grid."""
    if not grid.is_torus:
        raise DomainError("stereographic pullback needs a torus grid")
    _check_velocity(spec.velocity)
    s = np.sin(grid.nodes / 2.0)
    c = np.cos(grid.nodes / 2.0)
    # (x - z)/(x - conj z) with x = s/c, multiplied through by c; equals 1 at theta = pi
    b = np.ones(grid.n, dtype=complex)
    for zk in spec.zeros:
        b *= (s - zk * c) / (s - np.conj(zk) * c)
    return SphereField(grid, _profile_from_product(b, spec))


def circle_wave(m: int, v: float, t: float, grid: Grid1D) -> SphereField:
    """``(a cos m(x - vt), a sin m(x - vt), -v)`` with ``a = sqrt(1 - v^2)``."""
    if m < 1 or int(m) != m:
        raise DomainError("circle wave degree must be a positive integer")
    _check_velocity(v)
    a = np.sqrt(1.0 - v * v)
    phase = m * (grid.nodes - v * t)
    values = np.column_stack([a * np.cos(phase), a * np.sin(phase), np.full(grid.n, -v)])
    return SphereField(grid, values)


def _periodic_orbit_parts(x: np.ndarray):
    x4 = x**4
    return 2.0 * x * x / (x4 + 1.0), (x4 - 1.0) / (x4 + 1.0)


def periodic_orbit_field(t: float, grid: Grid1D) -> SphereField:
    """The rational field rotating about the third axis with angular speed ``1/sqrt(2)``."""
    radial, height = _periodic_orbit_parts(grid.nodes)
    phase = t * PERIODIC_ORBIT_OMEGA
    values = np.column_stack([np.cos(phase) * radial, np.sin(phase) * radial, height])
    return SphereField(grid, values)


def periodic_orbit_velocity(t: float, grid: Grid1D) -> np.ndarray:
    """Exact time derivative of :func:`periodic_orbit_field`."""
    radial, _ = _periodic_orbit_parts(grid.nodes)
    phase = t * PERIODIC_ORBIT_OMEGA
    w = PERIODIC_ORBIT_OMEGA
    return np.column_stack(
        [-w * np.sin(phase) * radial, w * np.cos(phase) * radial, np.zeros(grid.n)]
    )


def profile_residual(u: SphereField, v: float) -> float:
    """Sup norm of ``u x |nabla| u + v du/dx``."""
    res = hwm_rhs_values(u.values, u.grid) + v * fourier_multiply(u.values, u.grid, "derivative")
    return float(np.max(np.abs(res)))


def profile_velocity(spec: BlaschkeSpec) -> float:
    """Speed at which :func:`blaschke_profile` actually travels under the flow."""
    return -spec.velocity


def winding_number(u: SphereField, axis=(0.0, 0.0, 1.0)) -> int:
    """Signed winding of the projection of ``u`` onto the plane normal to ``axis``.

    The sampled curve is closed (periodic grid) and the phase is unwound node
    to node, so the grid must resolve every turn.
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    e1 = np.cross(axis, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 1e-8:
        e1 = np.cross(axis, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    w = u.values @ e1 + 1j * (u.values @ e2)
    if np.min(np.abs(w)) < 1e-12:
        raise DomainError("curve passes through the axis; winding undefined")
    steps = np.angle(np.roll(w, -1) / w)
    return int(np.rint(np.sum(steps) / (2.0 * np.pi)))


@dataclass(frozen=True)
class MobiusMap:
    """Conformal self-map of the line (``(ax+b)/(cx+d)``) or the circle (disk automorphism).

    The circle map sends ``e^{i theta}`` to ``e^{i alpha} (e^{i theta} - a) / (1 - conj(a) e^{i theta})``.
    """

    kind: str
    a: complex = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind == "line":
            det = self.a * self.d - self.b * self.c
            if abs(det - 1.0) > 1e-12 or np.iscomplexobj(self.a) and np.imag(self.a) != 0:
                raise DomainError(f"line Moebius map needs real a,b,c,d with ad - bc = 1 (got {det})")
        elif self.kind == "circle":
            if not abs(self.a) < 1:
                raise DomainError("disk automorphism needs |a| < 1")
        else:
            raise DomainError(f"unknown Moebius kind {self.kind!r}")

    @classmethod
    def line(cls, a, b, c, d):
        return cls("line", a=float(a), b=float(b), c=float(c), d=float(d))

    @classmethod
    def circle(cls, alpha: float = 0.0, a: complex = 0.0):
        return cls("circle", a=complex(a), alpha=float(alpha))

    @property
    def is_identity(self) -> bool:
        if self.kind == "line":
            return self.b == 0 and self.c == 0 and self.a == self.d == 1.0
        return self.a == 0 and self.alpha == 0

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if self.kind == "line":
            denom = self.c * points + self.d
            if np.any(denom == 0):
                raise InterpolationError("Moebius map sends a node to infinity")
            return (self.a * points + self.b) / denom
        zeta = np.exp(1j * points)
        img = np.exp(1j * self.alpha) * (zeta - self.a) / (1.0 - np.conj(self.a) * zeta)
        return np.mod(np.angle(img), 2.0 * np.pi)

    def stretch(self, points) -> float:
        """Largest local stretch ``|phi'|`` over ``points`` (interpolation condition estimate)."""
        points = np.asarray(points, dtype=float)
        if self.kind == "line":
            return float(np.max(1.0 / (self.c * points + self.d) ** 2))
        zeta = np.exp(1j * points)
        return float(np.max((1.0 - abs(self.a) ** 2) / np.abs(1.0 - np.conj(self.a) * zeta) ** 2))


def mobius_reparam(u: SphereField, phi: MobiusMap, tail_tol: float = 1e-8) -> SphereField:
    """Resample ``u o phi`` on the grid of ``u`` by trigonometric interpolation.

    Raises :class:`InterpolationError` when the image leaves the window or the
    resampled field is not resolved (spectral tail above ``tail_tol``).
    """
    if phi.is_identity:
        return u
    grid = u.grid
    if (phi.kind == "circle") != grid.is_torus:
        raise DomainError("circle maps act on torus fields, line maps on window fields")
    mapped = phi(grid.nodes)
    stretch = phi.stretch(grid.nodes)
    if not grid.is_torus:
        L = grid.half_width
        if np.any(mapped < -L) or np.any(mapped > L):
            raise InterpolationError(
                f"Moebius image leaves the window [-{L}, {L}] (max stretch {stretch:.3g})"
            )
    values = interpolate(u.values, grid, mapped)
    coeffs = np.abs(np.fft.fft(values, axis=0))
    k = np.abs(grid.wavenumbers) / max(grid.k_max, 1e-300)
    tail = np.linalg.norm(coeffs[k > 0.5]) / max(np.linalg.norm(coeffs), 1e-300)
    if tail > tail_tol:
        raise InterpolationError(
            f"resampled field unresolved: spectral tail {tail:.2e} (stretch up to {stretch:.3g})"
        )
    norms = np.linalg.norm(values, axis=1, keepdims=True)
    # interpolation error shows up as a norm defect; the tail check bounds it
    return SphereField(grid, values / norms)
