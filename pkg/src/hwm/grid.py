"""Uniform 1-D grids and exact Fourier-multiplier calculus.

Discrete Fourier convention (used everywhere in the package)::

    f_hat[k] = sum_j f[j] exp(-i kappa_k (x_j - x_0))      (numpy.fft.fft)
    f[j]     = (1/n) sum_k f_hat[k] exp(i kappa_k (x_j - x_0))

with ``kappa_k`` the entries of :attr:`Grid1D.wavenumbers` in ``numpy.fft``
order.  On the torus ``kappa_k`` are the integers in ``[-n/2, n/2)``; on a
window ``[-L, L)`` they are those integers times ``pi / L``.  A multiplier
``m(kappa)`` acts as ``ifft(m(kappa) * fft(f))``.  ``sgn(0) = 0``, so the
Hilbert transform and ``|nabla|`` both annihilate the mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

SYMBOLS = ("halfwave", "hilbert", "derivative")
UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Equispaced periodic grid on the torus ``[0, 2pi)`` or a window ``[-L, L)``."""

    kind: str
    n: int
    half_width: float | None
    nodes: np.ndarray = field(repr=False)
    wavenumbers: np.ndarray = field(repr=False)
    dx: float

    @property
    def circumference(self) -> float:
        return self.dx * self.n

    @property
    def k_max(self) -> float:
        """Largest wavenumber magnitude (the Nyquist mode)."""
        return float(np.max(np.abs(self.wavenumbers)))

    @property
    def is_torus(self) -> bool:
        return self.kind == "torus"

    def same_as(self, other: "Grid1D") -> bool:
        return (
            self.kind == other.kind
            and self.n == other.n
            and self.half_width == other.half_width
        )

    def __eq__(self, other):
        return isinstance(other, Grid1D) and self.same_as(other)

    def __hash__(self):
        return hash((self.kind, self.n, self.half_width))


def make_grid(kind: str, n: int, L: float | None = None) -> Grid1D:
    """Build a torus or window grid with ``n`` nodes (a power of two, ``n >= 8``)."""
    if kind not in ("torus", "window"):
        raise DomainError(f"unknown grid kind {kind!r}; expected 'torus' or 'window'")
    if not isinstance(n, (int, np.integer)) or n < 8 or (n & (n - 1)) != 0:
        raise DomainError(f"n must be a power of two >= 8, got {n!r}")
    n = int(n)
    if kind == "torus":
        if L is not None:
            raise DomainError("torus grids have fixed circumference 2*pi; do not pass L")
        dx = 2.0 * np.pi / n
        nodes = dx * np.arange(n)
        wavenumbers = np.fft.fftfreq(n, d=1.0 / n)
        half_width = None
    else:
        if L is None or not np.isfinite(L) or L <= 0:
            raise DomainError(f"window grids need a positive half width L, got {L!r}")
        L = float(L)
        dx = 2.0 * L / n
        nodes = -L + dx * np.arange(n)
        wavenumbers = np.fft.fftfreq(n, d=1.0 / n) * (np.pi / L)
        half_width = L
    nodes.setflags(write=False)
    wavenumbers.setflags(write=False)
    return Grid1D(kind, n, half_width, nodes, wavenumbers, dx)


def symbol_table(grid: Grid1D, symbol: str) -> np.ndarray:
    """Multiplier values ``m(kappa_k)`` in ``numpy.fft`` order."""
    k = grid.wavenumbers
    if symbol == "halfwave":
        return np.abs(k)
    if symbol == "hilbert":
        return -1j * np.sign(k)
    if symbol == "derivative":
        return 1j * k
    raise DomainError(f"unknown symbol {symbol!r}; expected one of {SYMBOLS}")


def fourier_multiply(values: np.ndarray, grid: Grid1D, symbol: str) -> np.ndarray:
    """Apply a multiplier along axis 0 of ``values`` (shape ``(n,)`` or ``(n, c)``).

    Real input gives real output (the imaginary part left by the Nyquist mode
    of odd symbols is discarded, which zeroes that mode).
    """
    values = np.asarray(values)
    if values.shape[0] != grid.n:
        raise DomainError(f"expected {grid.n} samples, got {values.shape[0]}")
    table = symbol_table(grid, symbol)
    if values.ndim == 2:
        table = table[:, None]
    out = np.fft.ifft(table * np.fft.fft(values, axis=0), axis=0)
    if np.isrealobj(values):
        return out.real
    return out


def multiplier_matrix(grid: Grid1D, symbol: str) -> np.ndarray:
    """Dense matrix ``M`` with ``M @ f == fourier_multiply(f, grid, symbol)`` for real ``f``."""
    eye = np.eye(grid.n)
    return fourier_multiply(eye, grid, symbol)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples on a grid."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise DomainError(f"scalar field needs shape ({self.grid.n},), got {values.shape}")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class VectorField3:
    """Triples of reals on a grid, stored with shape ``(n, 3)``."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n, 3):
            raise DomainError(f"vector field needs shape ({self.grid.n}, 3), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("field contains non-finite samples")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class SphereField(VectorField3):
    """Unit-vector valued samples; ``|u(x_j)| = 1`` is checked on construction."""

    def __post_init__(self):
        super().__post_init__()
        defect = norm_defect(self.values)
        if defect > UNIT_NORM_TOL:
            raise DomainError(f"sphere field violates |u| = 1 by {defect:.3e}")


def norm_defect(values: np.ndarray) -> float:
    """``max_j | |u_j|^2 - 1 |``."""
    return float(np.max(np.abs(np.einsum("ij,ij->i", values, values) - 1.0)))


def apply_multiplier(f, symbol: str):
    """Apply ``halfwave`` (``|k|``), ``hilbert`` (``-i sgn k``) or ``derivative`` (``ik``).

    Sphere fields come back as plain :class:`VectorField3` since the image is
    not unit-normed.
    """
    out = fourier_multiply(f.values, f.grid, symbol)
    if isinstance(f, ScalarField):
        return ScalarField(f.grid, out)
    return VectorField3(f.grid, out)


def hwm_rhs_values(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Array-level ``u x |nabla| u``."""
    return np.cross(values, fourier_multiply(values, grid, "halfwave"))


def hwm_rhs(u: SphereField) -> VectorField3:
    """Right-hand side ``u x |nabla| u`` of the half-wave maps equation."""
    return VectorField3(u.grid, hwm_rhs_values(u.values, u.grid))


def inner(f: np.ndarray, g: np.ndarray, grid: Grid1D) -> complex:
    """Quadrature pairing ``sum_j f_j conj(g_j) dx`` (summed over components)."""
    return complex(np.sum(f * np.conj(g)) * grid.dx)


def interpolate(values: np.ndarray, grid: Grid1D, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``values`` at arbitrary ``points``.

    The Nyquist coefficient is split symmetrically so real data interpolate
    to real values.  Cost is ``O(n * len(points))``.
    """
    values = np.asarray(values)
    n = grid.n
    coeffs = np.fft.fft(values, axis=0) / n
    k = grid.wavenumbers
    phase = np.exp(1j * np.outer(np.asarray(points) - grid.nodes[0], k))
    weights = np.ones(n)
    weights[n // 2] = 0.5
    if values.ndim == 2:
        body = phase @ (weights[:, None] * coeffs)
        nyq = np.exp(-1j * np.outer(np.asarray(points) - grid.nodes[0], k[n // 2:n // 2 + 1]))
        body = body + nyq * (0.5 * coeffs[n // 2])[None, :]
    else:
        body = phase @ (weights * coeffs)
        nyq = np.exp(-1j * (np.asarray(points) - grid.nodes[0]) * k[n // 2])
        body = body + 0.5 * coeffs[n // 2] * nyq
    if np.isrealobj(values):
        return body.real
    return body
