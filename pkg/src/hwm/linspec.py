"""Linearized operators around the half-harmonic maps ``Q_m`` and their
classified point spectra.

``L+ = |nabla| - 2m/(1+x^2)`` and ``L- = L+ + R`` are assembled as dense
symmetric matrices on a window grid.  A finite window has no true continuous
spectrum, so eigenvectors below the continuum edge are sorted into classes by
how much of their l2 mass sits in the outer part of the window:

``bound``
    tail mass below ``tail_factor * tail_fraction`` (half the share a uniform
    density would put there);
``resonance-like``
    not decaying, eigenvalue within ``near_zero_tol`` of zero;
``continuum-artifact``
    everything else.

Inside the cluster of eigenvalues near zero the eigenvectors are only
defined up to rotation, so that cluster is re-diagonalized against the tail
projector before classification.  This separates an L2 zero mode from a
resonance sharing (numerically) the same eigenvalue.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, ResolutionError
from .grid import Grid1D, multiplier_matrix

MIN_NODES = 2048
REFERENCE_L = 200.0
REFERENCE_NEAR_ZERO_TOL = 5e-3
TAIL_FRACTION = 0.25
TAIL_FACTOR = 0.5
CLASSES = ("bound", "resonance-like", "continuum-artifact")


@dataclass(frozen=True, eq=False)
class LinOpDisc:
    """Dense symmetric discretization of ``L+`` or ``L-`` around ``Q_m``."""

    which: str
    m: int
    grid: Grid1D
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.which not in ("Lplus", "Lminus"):
            raise DomainError(f"unknown operator {self.which!r}; expected 'Lplus' or 'Lminus'")

    @property
    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T)))


def _check(m, grid):
    if int(m) != m or m < 1:
        raise DomainError(f"degree m must be a positive integer, got {m!r}")
    if grid.is_torus:
        raise DomainError("linearized operators are assembled on window grids")
    return int(m)


def potential(m: int, grid: Grid1D) -> np.ndarray:
    """``-2m / (1 + x^2)`` at the nodes."""
    x = grid.nodes
    return -2.0 * m / (1.0 + x * x)


def assemble_Lplus(m: int, grid: Grid1D) -> LinOpDisc:
    """Multiplier matrix of ``|nabla|`` plus the diagonal potential."""
    m = _check(m, grid)
    mat = multiplier_matrix(grid, "halfwave")
    mat = 0.5 * (mat + mat.T)
    mat[np.diag_indices(grid.n)] += potential(m, grid)
    return LinOpDisc("Lplus", m, grid, mat)


def assemble_R(m: int, grid: Grid1D) -> np.ndarray:
    """Kernel matrix of ``(Rf)(x) = 1/(2 pi) int |Q(x) - Q(y)|^2 / |x - y|^2 f(y) dy``.

    ``Q_m = ((x - i)/(x + i))^m = exp(-2im arctan2(1, x))``, so the numerator
    is ``4 sin^2(m (t(x) - t(y)))`` with ``t = arctan2(1, x)``; no cancellation
    near the diagonal.  The diagonal is the limit ``|Q'(x)|^2 = (2m/(1+x^2))^2``.
    Entries carry the quadrature weight ``dx``.
    """
    m = _check(m, grid)
    x = grid.nodes
    t = np.arctan2(1.0, x)
    sep = x[:, None] - x[None, :]
    np.fill_diagonal(sep, 1.0)
    kern = 4.0 * np.sin(m * (t[:, None] - t[None, :])) ** 2
    kern /= sep * sep
    np.fill_diagonal(kern, (2.0 * m / (1.0 + x * x)) ** 2)
    kern *= grid.dx / (2.0 * np.pi)
    return kern


def assemble_Lminus(m: int, grid: Grid1D) -> LinOpDisc:
    """``L- = L+ + R``."""
    lp = assemble_Lplus(m, grid)
    return LinOpDisc("Lminus", lp.m, grid, lp.matrix + assemble_R(m, grid))


def continuum_edge(grid: Grid1D) -> float:
    """Smallest positive eigenvalue ``pi / L`` of ``|nabla|`` on the window."""
    return float(np.min(np.abs(grid.wavenumbers[1:])))


def default_near_zero_tol(grid: Grid1D) -> float:
    """``5e-3`` at ``L = 200``, scaled like ``1/L``."""
    return REFERENCE_NEAR_ZERO_TOL * REFERENCE_L / grid.half_width


@dataclass
class SpectralReport:
    which: str
    m: int
    n: int
    half_width: float
    eigenvalues: list
    tail_mass: list
    classes: list
    cluster_ids: list
    near_zero_tol: float
    tail_fraction: float
    tail_threshold: float
    continuum_edge: float
    upper: float

    def values_of(self, cls: str) -> np.ndarray:
        return np.array([e for e, c in zip(self.eigenvalues, self.classes) if c == cls])

    @property
    def bound_count(self) -> int:
        return self.classes.count("bound")

    @property
    def near_zero_bound(self) -> int:
        """Bound-class members within ``near_zero_tol`` of zero (L2 kernel candidates)."""
        return int(np.sum(np.abs(self.values_of("bound")) <= self.near_zero_tol))

    @property
    def kernel_candidates(self) -> int:
        """All eigenvalues within ``near_zero_tol`` of zero, any class."""
        return int(np.sum(np.abs(np.asarray(self.eigenvalues)) <= self.near_zero_tol))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["counts"] = {
            "bound": self.bound_count,
            "resonance-like": self.classes.count("resonance-like"),
            "continuum-artifact": self.classes.count("continuum-artifact"),
            "near_zero_bound": self.near_zero_bound,
            "kernel_candidates": self.kernel_candidates,
        }
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def tail_mask(grid: Grid1D, tail_fraction: float = TAIL_FRACTION) -> np.ndarray:
    """Nodes in the outer ``tail_fraction`` of the window (half on each side)."""
    if not 0 < tail_fraction < 1:
        raise DomainError("tail_fraction must lie in (0, 1)")
    k = int(round(0.5 * tail_fraction * grid.n))
    mask = np.zeros(grid.n, dtype=bool)
    mask[:k] = True
    mask[grid.n - k:] = True
    return mask


def _clusters(values: np.ndarray, tol: float) -> list:
    groups, start = [], 0
    for j in range(1, len(values) + 1):
        if j == len(values) or values[j] - values[j - 1] > tol:
            groups.append(list(range(start, j)))
            start = j
    return groups


def classify_spectrum(
    op: LinOpDisc,
    near_zero_tol: float | None = None,
    tail_fraction: float = TAIL_FRACTION,
    tail_factor: float = TAIL_FACTOR,
    upper: float | None = None,
) -> SpectralReport:
    """Eigenvalues below ``upper`` (default: the continuum edge) with decay classes.

    Raises :class:`ResolutionError` for grids with fewer than 2048 nodes.
    """
    grid = op.grid
    if grid.n < MIN_NODES:
        raise ResolutionError(f"spectral classification needs n >= {MIN_NODES}, got n = {grid.n}")
    tol = default_near_zero_tol(grid) if near_zero_tol is None else float(near_zero_tol)
    edge = continuum_edge(grid)
    upper = edge if upper is None else float(upper)
    vals, vecs = scipy.linalg.eigh(op.matrix, subset_by_value=(-np.inf, upper), driver="evr")
    mask = tail_mask(grid, tail_fraction)
    threshold = tail_factor * tail_fraction

    out_vals, out_tail, cluster_ids = [], [], []
    for cid, idx in enumerate(_clusters(vals, tol)):
        block = vecs[:, idx]
        if len(idx) == 1 or np.min(np.abs(vals[idx])) > tol:
            # only the zero cluster carries a predicted degeneracy to resolve
            out_vals.extend(float(v) for v in vals[idx])
            out_tail.extend(float(t) for t in np.sum(block[mask] ** 2, axis=0))
            cluster_ids.extend([cid] * len(idx))
            continue
        tproj = block[mask].T @ block[mask]
        tails, rot = np.linalg.eigh(tproj)
        # Rayleigh quotients of the rotated cluster basis
        rq = np.einsum("ij,i,ij->j", rot, vals[idx], rot)
        order = np.argsort(rq)
        out_vals.extend(float(v) for v in rq[order])
        out_tail.extend(float(t) for t in np.clip(tails[order], 0.0, 1.0))
        cluster_ids.extend([cid] * len(idx))

    classes = []
    for e, t in zip(out_vals, out_tail):
        if t < threshold:
            classes.append("bound")
        elif abs(e) <= tol:
            classes.append("resonance-like")
        else:
            classes.append("continuum-artifact")
    return SpectralReport(
        which=op.which,
        m=op.m,
        n=grid.n,
        half_width=float(grid.half_width),
        eigenvalues=out_vals,
        tail_mass=out_tail,
        classes=classes,
        cluster_ids=cluster_ids,
        near_zero_tol=tol,
        tail_fraction=tail_fraction,
        tail_threshold=threshold,
        continuum_edge=edge,
        upper=upper,
    )


@dataclass(frozen=True, eq=False)
class JacobiDisc:
    """Truncation of ``(1 - sin theta)(|nabla|_S - m)`` to modes ``|k| <= K``."""

    m: int
    K: int
    matrix: np.ndarray = field(repr=False)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)


# Fourier coefficients of sin(theta) = (e^{i theta} - e^{-i theta}) / (2i)
SIN_COEFF = {1: -0.5j, -1: 0.5j}


def jacobi_matrix(m: int, K: int) -> JacobiDisc:
    """``J_kl = (delta_kl - s_{k-l}) (|l| - m)`` for ``|k|, |l| <= K``."""
    if int(m) != m or m < 1:
        raise DomainError(f"degree m must be a positive integer, got {m!r}")
    if K < m:
        raise ResolutionError(f"mode cutoff K = {K} does not resolve the split at m = {m}")
    k = np.arange(-K, K + 1)
    s = np.zeros((k.size, k.size), dtype=complex)
    for offset, coeff in SIN_COEFF.items():
        s += coeff * np.eye(k.size, k=-offset)
    mat = (np.eye(k.size) - s) * (np.abs(k) - m)[None, :]
    return JacobiDisc(int(m), int(K), mat)


@dataclass
class JacobiAgreement:
    m: int
    K: int
    jacobi_real: list
    pairs: list
    discrepancies: list
    max_mismatch: float

    def to_dict(self) -> dict:
        return asdict(self)


def jacobi_crosscheck(m: int, K: int, report: SpectralReport, imag_tol: float = 1e-8) -> JacobiAgreement:
    """Match real eigenvalues of the truncated ``J`` below the report's ``upper``
    bound against the ``L+`` bound-class eigenvalues.

    Unmatched entries on either side are listed as discrepancies; nothing is
    asserted.
    """
    ev = np.linalg.eigvals(jacobi_matrix(m, K).matrix)
    real = np.sort(ev[np.abs(ev.imag) <= imag_tol].real)
    real = real[real <= report.upper]
    bound = np.sort(report.values_of("bound"))
    pairs, used = [], set()
    for e in bound:
        if real.size == 0:
            break
        j = int(np.argmin(np.abs(real - e)))
        pairs.append((float(e), float(real[j])))
        used.add(j)
    discrepancies = [("jacobi-only", float(r)) for j, r in enumerate(real) if j not in used]
    if len(pairs) < len(bound):
        discrepancies += [("direct-only", float(e)) for e in bound[len(pairs):]]
    mismatch = max((abs(a - b) for a, b in pairs), default=float("nan"))
    return JacobiAgreement(int(m), int(K), [float(r) for r in real], pairs, discrepancies, mismatch)
