"""Pauli-matrix encoding, the Lax operators ``L = [H, U]`` and ``B``, Schatten
norms and numerical (Kronecker) rank.

Two bases are supported.

``window_kernel``
    Node basis on a window grid.  Block ``(j, k)`` is
    ``(1/pi) (U(x_j) - U(x_k)) / (x_j - x_k) dx`` with diagonal
    ``(1/pi) U'(x_j) dx``.  Large grids use a matrix-free operator (Toeplitz
    products by FFT) and Lanczos for the leading singular values.
``torus_fourier``
    Fourier modes ``-N..N`` on a torus grid; block ``(n, m)`` is
    ``-i (sgn n - sgn m) U_hat[n - m]``.

Matrices are ``2 x 2`` blocks in node/mode-major order, i.e. ``sum_j kron(A_j, sigma_j)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .errors import DomainError, ResolutionError
from .grid import Grid1D, SphereField, fourier_multiply, multiplier_matrix

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
DENSE_WINDOW_LIMIT = 1024
DEFAULT_RANK_TOL = 1e-8
STENCIL_POINTS = 25
EDGE_STENCIL_POINTS = 9


@dataclass(frozen=True, eq=False)
class PauliField:
    """``U(x_j) = u(x_j) . sigma`` for every node, shape ``(n, 2, 2)``."""

    grid: Grid1D
    matrices: np.ndarray


def pauli_matrix(vec) -> np.ndarray:
    return np.einsum("i,ijk->jk", np.asarray(vec, dtype=float), SIGMA)


def pauli_field(u: SphereField) -> PauliField:
    return PauliField(u.grid, np.einsum("ni,ijk->njk", u.values, SIGMA))


def _kron_sum(blocks) -> np.ndarray:
    return sum(np.kron(a, s) for a, s in zip(blocks, SIGMA))


@dataclass(eq=False)
class LaxMatrix:
    """Finite representation of ``L_u``; either dense or matrix-free."""

    backend: str
    size: int
    matrix: np.ndarray | None = None
    operator: spla.LinearOperator | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)
    _frob2: float | None = field(default=None, repr=False)

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    def dense(self) -> np.ndarray:
        if self.matrix is None:
            raise ResolutionError(
                f"{self.size}x{self.size} operator is matrix-free; dense form not assembled"
            )
        return self.matrix

    def matvec(self, f: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ f
        return self.operator.matvec(f)

    def frobenius2(self) -> float:
        """``Tr |L|^2``."""
        if self._frob2 is None:
            self._frob2 = float(np.sum(np.abs(self.dense()) ** 2))
        return self._frob2

    def hermiticity_defect(self) -> float:
        m = self.dense()
        return float(np.max(np.abs(m - m.conj().T)))


# ---------------------------------------------------------------- window backend


def fd_weights(offsets: np.ndarray, order: int = 1) -> np.ndarray:
    """Finite-difference weights at 0 for the given node offsets (Fornberg's recursion)."""
    z = np.asarray(offsets, dtype=float)
    m = len(z)
    c = np.zeros((m, order + 1))
    c[0, 0] = 1.0
    c1, c4 = 1.0, z[0]
    for i in range(1, m):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def window_derivative(values: np.ndarray, dx: float, points: int = STENCIL_POINTS) -> np.ndarray:
    """Non-periodic finite-difference derivative along axis 0.

    Centered ``points``-node stencils in the interior, shifted one-sided
    stencils near the window edges.  Unlike the spectral derivative it does
    not see the wrap-around mismatch at ``x = +-L``.
    """
    n = values.shape[0]
    half = points // 2
    values = values - values[:1]  # constants then differentiate to exact zeros
    out = np.empty_like(values, dtype=float)
    w = fd_weights(np.arange(-half, half + 1)) / dx
    inner = slice(half, n - half)
    out[inner] = sum(w[i] * values[i:n - points + 1 + i] for i in range(points))
    # near the edges the field is nearly flat; short shifted stencils suffice
    edge = min(EDGE_STENCIL_POINTS, points)
    for j in list(range(half)) + list(range(n - half, n)):
        start = min(max(j - edge // 2, 0), n - edge)
        idx = np.arange(start, start + edge)
        out[j] = fd_weights(idx - j) @ values[idx] / dx
    return out


def _pairwise_offsets(n: int, dx: float):
    d = np.arange(n, dtype=float)
    c = np.zeros(n)
    c[1:] = 1.0 / (d[1:] * dx)
    return c


def _window_frobenius2(vals: np.ndarray, du: np.ndarray, x: np.ndarray, dx: float) -> float:
    total = 2.0 * float(np.sum(du * du))
    chunk = 256
    for start in range(0, len(x), chunk):
        stop = min(start + chunk, len(x))
        diff = vals[start:stop, None, :] - vals[None, :, :]
        sep = x[start:stop, None] - x[None, :]
        idx = np.arange(start, stop)
        sep[idx - start, idx] = 1.0
        block = np.einsum("abi,abi->ab", diff, diff) / sep**2
        block[idx - start, idx] = 0.0
        total += 2.0 * float(np.sum(block))
    return total * dx * dx / np.pi**2


def lax_L_window(u: SphereField, dense: bool | None = None, diagonal: str = "stencil") -> LaxMatrix:
    """Kernel-quadrature matrix of ``L_u`` on a window grid.

    ``diagonal`` selects how the limit ``U'(x)`` is computed: ``"stencil"``
    (non-periodic finite differences, default) or ``"spectral"``.  The
    spectral derivative carries Gibbs noise from the window edges, which
    floods the numerical rank.
    """
    grid = u.grid
    if grid.is_torus:
        raise DomainError("torus fields use lax_L_fourier")
    n, dx, x = grid.n, grid.dx, grid.nodes
    vals = u.values
    if diagonal == "stencil":
        du = window_derivative(vals, dx)
    elif diagonal == "spectral":
        du = fourier_multiply(vals, grid, "derivative")
    else:
        raise DomainError(f"unknown diagonal rule {diagonal!r}")
    if dense is None:
        dense = n <= DENSE_WINDOW_LIMIT
    meta = {"n": n, "dx": dx, "L": grid.half_width, "diagonal": diagonal}
    if dense:
        sep = x[:, None] - x[None, :]
        np.fill_diagonal(sep, 1.0)
        blocks = []
        for i in range(3):
            k = (vals[:, i][:, None] - vals[:, i][None, :]) / sep
            np.fill_diagonal(k, du[:, i])
            blocks.append(k * dx / np.pi)
        return LaxMatrix("window_kernel", 2 * n, matrix=_kron_sum(blocks), meta=meta)

    col = _pairwise_offsets(n, dx)
    row = -col
    umat = np.einsum("ni,ijk->njk", vals, SIGMA)
    dumat = np.einsum("ni,ijk->njk", du, SIGMA)
    scale = dx / np.pi

    def matvec(f):
        f = np.asarray(f, dtype=complex).reshape(n, 2)
        cf = scipy.linalg.matmul_toeplitz((col, row), f)
        uf = np.einsum("njk,nk->nj", umat, f)
        out = np.einsum("njk,nk->nj", umat, cf) - scipy.linalg.matmul_toeplitz((col, row), uf)
        out += np.einsum("njk,nk->nj", dumat, f)
        return (scale * out).reshape(-1)

    op = spla.LinearOperator((2 * n, 2 * n), matvec=matvec, rmatvec=matvec, dtype=complex)
    lm = LaxMatrix("window_kernel", 2 * n, operator=op, meta=meta)
    lm._frob2 = _window_frobenius2(vals, du, x, dx)
    return lm


# ---------------------------------------------------------------- torus backend


def _mode_coefficients(u: SphereField, cut: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``u_hat[k]`` for ``|k| <= 2 cut`` (zero beyond ``n/2 - 1``)."""
    n = u.grid.n
    coeffs = np.fft.fft(u.values, axis=0) / n
    ks = np.arange(-2 * cut, 2 * cut + 1)
    table = np.zeros((len(ks), 3), dtype=complex)
    ok = np.abs(ks) < n // 2
    table[ok] = coeffs[np.mod(ks[ok], n)]
    return ks, table


def _check_cut(grid: Grid1D, cut: int | None) -> int:
    if not grid.is_torus:
        raise DomainError("the Fourier backend needs a torus field")
    if cut is None:
        cut = grid.n // 4
    if cut < 1 or cut > grid.n // 2:
        raise ResolutionError(f"mode cut {cut} outside [1, n/2 = {grid.n // 2}]")
    return int(cut)


def _toeplitz_blocks(u: SphereField, cut: int, weight) -> np.ndarray:
    modes = np.arange(-cut, cut + 1)
    ks, table = _mode_coefficients(u, cut)
    diff = modes[:, None] - modes[None, :]
    w = weight(modes[:, None], modes[None, :])
    blocks = [w * table[diff + 2 * cut, i] for i in range(3)]
    return _kron_sum(blocks)


def lax_L_fourier(u: SphereField, mode_cut: int | None = None) -> LaxMatrix:
    """``L_u`` on Fourier modes ``-N..N`` (default ``N = n/4``)."""
    cut = _check_cut(u.grid, mode_cut)
    mat = _toeplitz_blocks(u, cut, lambda a, b: -1j * (np.sign(a) - np.sign(b)))
    return LaxMatrix("torus_fourier", mat.shape[0], matrix=mat, meta={"n": u.grid.n, "mode_cut": cut})


def lax_L(u: SphereField, mode_cut: int | None = None) -> LaxMatrix:
    """Pick the backend from the grid kind."""
    if u.grid.is_torus:
        return lax_L_fourier(u, mode_cut)
    return lax_L_window(u)


def lax_B(u: SphereField, backend: str | None = None, mode_cut: int | None = None,
          partner: LaxMatrix | None = None) -> np.ndarray:
    """``B_u = -(i/2)(U |nabla| + |nabla| U) + (i/2) (|nabla| U)`` in the backend basis."""
    default = "torus_fourier" if u.grid.is_torus else "window_kernel"
    backend = backend or (partner.backend if partner else default)
    if partner is not None:
        if partner.backend != backend:
            raise DomainError(f"B backend {backend!r} does not match L backend {partner.backend!r}")
        mode_cut = mode_cut or partner.meta.get("mode_cut")
    if backend == "torus_fourier":
        cut = _check_cut(u.grid, mode_cut)
        return _toeplitz_blocks(
            u, cut, lambda a, b: -0.5j * (np.abs(a) + np.abs(b) - np.abs(a - b))
        )
    if backend != "window_kernel" or u.grid.is_torus:
        raise DomainError(f"backend {backend!r} incompatible with a {u.grid.kind} field")
    n = u.grid.n
    if n > DENSE_WINDOW_LIMIT:
        raise ResolutionError(f"dense window B limited to n <= {DENSE_WINDOW_LIMIT}")
    d = np.kron(multiplier_matrix(u.grid, "halfwave"), np.eye(2))
    umat = scipy.linalg.block_diag(*pauli_field(u).matrices)
    wu = fourier_multiply(u.values, u.grid, "halfwave")
    wmat = scipy.linalg.block_diag(*np.einsum("ni,ijk->njk", wu, SIGMA))
    return -0.5j * (umat @ d + d @ umat) + 0.5j * wmat


# ---------------------------------------------------------------- spectra


@dataclass
class SchattenReport:
    """Singular values (descending), Schatten norms and numerical rank.

    ``partial`` marks a Lanczos spectrum holding only the leading values;
    ``tail_hs2`` is then ``Tr|L|^2`` minus their squares.  Norms for ``p < 1``
    are quasi-norms.
    """

    p: list
    norm: list
    sigma: list
    rank: int
    threshold: float
    quasi: list = field(default_factory=list)
    partial: bool = False
    tail_hs2: float = 0.0

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


@dataclass(frozen=True)
class RankReport:
    rank: int
    sigma: tuple = field(repr=False)
    threshold: float
    gap: float
    sigma_max_zero: bool = False

    def __int__(self):
        return self.rank

    def __eq__(self, other):
        if isinstance(other, (int, np.integer)):
            return self.rank == other
        return NotImplemented

    __hash__ = None


def singular_values(lmat: LaxMatrix, k: int = 24, tol: float = 1e-13) -> tuple[np.ndarray, bool]:
    """Descending singular values; all of them when dense, else the leading ``k``."""
    if lmat.is_dense:
        m = lmat.matrix
        if not np.all(np.isfinite(m)):
            raise DomainError("Lax matrix has non-finite entries")
        # Hermitian: singular values are |eigenvalues|
        s = np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))
        return np.sort(s)[::-1], False
    if lmat.frobenius2() == 0:
        return np.zeros(k), True
    v0 = np.ones(lmat.size, dtype=complex) / np.sqrt(lmat.size)
    k = min(k, lmat.size - 2)
    vals = spla.eigsh(lmat.operator, k=k, which="LM", v0=v0, tol=tol,
                      return_eigenvectors=False, maxiter=20 * lmat.size)
    return np.sort(np.abs(vals))[::-1], True


def schatten(lmat: LaxMatrix, p_list=(1, 2, 4), tau_rel: float = DEFAULT_RANK_TOL) -> SchattenReport:
    """Schatten norms ``(sum sigma^p)^(1/p)``; ``p = 2`` is exact even for partial spectra."""
    sigma, partial = singular_values(lmat)
    ps = [float(p) for p in p_list]
    if any(p <= 0 for p in ps):
        raise DomainError("Schatten exponents must be positive")
    norms = []
    for p in ps:
        if p == 2.0 and partial:
            norms.append(float(np.sqrt(lmat.frobenius2())))
        else:
            norms.append(float(np.sum(sigma**p) ** (1.0 / p)))
    rr = _rank_from_sigma(sigma, tau_rel)
    tail = max(lmat.frobenius2() - float(np.sum(sigma**2)), 0.0) if partial else 0.0
    report = SchattenReport(
        p=ps, norm=norms, sigma=[float(s) for s in sigma], rank=rr.rank,
        threshold=rr.threshold, quasi=[p < 1 for p in ps], partial=partial, tail_hs2=tail,
    )
    ordered = sorted(zip(ps, norms))
    for (p1, n1), (p2, n2) in zip(ordered, ordered[1:]):
        if n1 < n2 * (1 - 1e-12) - 1e-300:
            raise AssertionError(f"Schatten norms not monotone: p={p1}:{n1} < p={p2}:{n2}")
    return report


def _rank_from_sigma(sigma: np.ndarray, tau_rel: float) -> RankReport:
    smax = float(sigma[0]) if len(sigma) else 0.0
    if smax == 0.0:
        return RankReport(0, tuple(float(s) for s in sigma), 0.0, float("inf"), True)
    thr = tau_rel * smax
    rank = int(np.sum(sigma > thr))
    if rank < len(sigma):
        nxt = float(sigma[rank])
        gap = float(sigma[rank - 1] / nxt) if nxt > 0 else float("inf")
    else:
        gap = float("inf")
    return RankReport(rank, tuple(float(s) for s in sigma), thr, gap)


def numerical_rank(lmat: LaxMatrix, tau_rel: float = DEFAULT_RANK_TOL) -> RankReport:
    """Count singular values above ``tau_rel * sigma_1``; the spectrum rides along for audit."""
    sigma, _ = singular_values(lmat)
    return _rank_from_sigma(sigma, tau_rel)


# ---------------------------------------------------------------- Lax equation


def _snapshot_matrix(u, backend, mode_cut):
    if backend == "torus_fourier":
        return lax_L_fourier(u, mode_cut).matrix
    return lax_L_window(u, dense=True).matrix


def lax_residual_series(traj, backend: str = "torus_fourier", dt_fd: float | None = None,
                        mode_cut: int | None = None, centers: int = 8) -> list[tuple[float, float]]:
    """Relative residual ``||dL/dt - [B, L]||_F / ||L||_F`` at several snapshots.

    ``dL/dt`` is the central difference over ``t +- dt_fd``; snapshots must be
    evenly spaced with ``dt_fd`` a multiple of the spacing.
    """
    times = np.asarray(traj.times)
    if len(times) < 3:
        raise DomainError("Lax residual needs at least three snapshots")
    spacing = np.diff(times)
    h = float(np.median(spacing))
    if np.max(np.abs(spacing - h)) > 1e-9 * max(h, 1.0):
        raise DomainError("snapshots are not evenly spaced")
    dt_fd = h if dt_fd is None else dt_fd
    stride = int(round(dt_fd / h))
    if stride < 1 or abs(stride * h - dt_fd) > 1e-9 * dt_fd:
        raise DomainError(f"dt_fd = {dt_fd} is not a multiple of the snapshot spacing {h}")
    if len(times) < 2 * stride + 1:
        raise DomainError("trajectory too short for the requested dt_fd")
    idx = np.unique(np.linspace(stride, len(times) - 1 - stride, centers).round().astype(int))
    out = []
    for i in idx:
        u = traj.snapshots[i]
        lm = _snapshot_matrix(u, backend, mode_cut)
        lp = _snapshot_matrix(traj.snapshots[i + stride], backend, mode_cut)
        lq = _snapshot_matrix(traj.snapshots[i - stride], backend, mode_cut)
        b = lax_B(u, backend, mode_cut)
        dl = (lp - lq) / (times[i + stride] - times[i - stride])
        res = dl - (b @ lm - lm @ b)
        norm = np.linalg.norm(lm)
        rel = 0.0 if norm == 0 and np.linalg.norm(res) == 0 else float(np.linalg.norm(res) / norm)
        out.append((float(times[i]), rel))
    return out


def lax_residual(traj, backend: str = "torus_fourier", dt_fd: float | None = None,
                 mode_cut: int | None = None, centers: int = 8) -> float:
    """Largest relative Lax residual over the sampled snapshots."""
    return max(r for _, r in lax_residual_series(traj, backend, dt_fd, mode_cut, centers))
