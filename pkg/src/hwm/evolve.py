"""Time stepping for ``du/dt = u x |nabla| u`` on the unit sphere."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, HWMError, ResolutionError
from .grid import SphereField, hwm_rhs_values
from .invariants import E3, InvariantRecord, invariant_record

log = logging.getLogger(__name__)

SCHEMES = ("implicit_midpoint", "rk4_projected")
STABILITY_FACTOR = 0.5


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "implicit_midpoint"
    dt: float = 1e-3
    fp_tolerance: float = 1e-13
    fp_max_iter: int = 100
    record_every: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not self.fp_tolerance > 0:
            raise DomainError("fp_tolerance must be positive")
        if self.fp_max_iter < 1 or self.record_every < 1:
            raise DomainError("fp_max_iter and record_every must be >= 1")


def check_step_size(grid, dt: float) -> None:
    """Fixed-point contraction needs ``|dt| * k_max <= 0.5``."""
    limit = STABILITY_FACTOR / grid.k_max
    if abs(dt) > limit:
        raise ResolutionError(
            f"|dt| = {abs(dt):g} exceeds {limit:g} = 0.5 / k_max for this grid"
        )


def _midpoint_values(u, grid, dt, tol, max_iter):
    w = u + dt * hwm_rhs_values(u, grid)
    prev_inc = None
    for it in range(1, max_iter + 1):
        w_new = u + dt * hwm_rhs_values(0.5 * (u + w), grid)
        inc = float(np.max(np.abs(w_new - w)))
        w = w_new
        if inc <= tol:
            return w, it
        prev_inc, rate = inc, (inc / prev_inc if prev_inc else float("nan"))
    raise ConvergenceError(
        f"midpoint fixed point not converged after {max_iter} iterations "
        f"(last increment {inc:.2e}, contraction ~{rate:.2f}); reduce dt"
    )


def step_midpoint(u: SphereField, dt: float, cfg: IntegratorConfig | None = None) -> SphereField:
    """One implicit-midpoint step solved by fixed-point iteration.

    ``|u|`` is conserved by the exact midpoint solution, so the result is
    validated rather than renormalized.
    """
    cfg = cfg or IntegratorConfig(dt=abs(dt) or 1.0)
    check_step_size(u.grid, dt)
    w, _ = _midpoint_values(u.values, u.grid, dt, cfg.fp_tolerance, cfg.fp_max_iter)
    return SphereField(u.grid, w)


def _rk4_values(u, grid, dt):
    k1 = hwm_rhs_values(u, grid)
    k2 = hwm_rhs_values(u + 0.5 * dt * k1, grid)
    k3 = hwm_rhs_values(u + 0.5 * dt * k2, grid)
    k4 = hwm_rhs_values(u + dt * k3, grid)
    w = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    if np.min(norms) < 1e-8:
        raise ConvergenceError("RK4 stage produced a near-zero vector; dt too large")
    return w / norms


def step_rk4_projected(u: SphereField, dt: float) -> SphereField:
    """Classical RK4 step followed by pointwise projection ``u / |u|``."""
    check_step_size(u.grid, dt)
    return SphereField(u.grid, _rk4_values(u.values, u.grid, dt))


@dataclass
class Trajectory:
    grid: object
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    complete: bool = True
    failure: str | None = None

    def append(self, t: float, u: SphereField, record: InvariantRecord | None) -> None:
        if self.times and t <= self.times[-1]:
            raise DomainError("trajectory times must increase strictly")
        self.times.append(float(t))
        self.snapshots.append(u)
        if record is not None:
            self.records.append(record)

    @property
    def final(self) -> SphereField:
        return self.snapshots[-1]


def evolve(
    u0: SphereField,
    t_end: float,
    cfg: IntegratorConfig,
    base_point=E3,
    with_invariants: bool = True,
) -> Trajectory:
    """Integrate to ``t_end`` and record a snapshot every ``cfg.record_every`` steps.

    The step count is ``round(t_end / dt)`` and the step is adjusted to land
    on ``t_end`` exactly.  The last step is always recorded.  A stepper error
    leaves the partial trajectory with ``complete = False``.
    """
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    grid = u0.grid
    n_steps = max(1, int(round(t_end / cfg.dt)))
    dt = t_end / n_steps
    check_step_size(grid, dt)

    def rec(t, u):
        return invariant_record(u, t, base_point) if with_invariants else None

    traj = Trajectory(grid)
    traj.append(0.0, u0, rec(0.0, u0))
    values = u0.values
    for step in range(1, n_steps + 1):
        try:
            if cfg.scheme == "implicit_midpoint":
                values, _ = _midpoint_values(values, grid, dt, cfg.fp_tolerance, cfg.fp_max_iter)
                u = SphereField(grid, values)
            else:
                values = _rk4_values(values, grid, dt)
                u = SphereField(grid, values)
        except HWMError as exc:
            traj.complete = False
            traj.failure = f"step {step} (t={step * dt:.6g}): {exc}"
            log.warning("evolution aborted: %s", traj.failure)
            break
        if step % cfg.record_every == 0 or step == n_steps:
            t = step * dt if step < n_steps else float(t_end)
            traj.append(t, u, rec(t, u))
    return traj


def perturbed_equator(grid, amplitude: float = 0.1, modes: int = 4, seed: int = 1) -> SphereField:
    """Seeded smooth perturbation of the equator ``(cos x, sin x, 0)`` on the torus.

    Adds ``amplitude * sum_{k=1..modes} (a_k cos kx + b_k sin kx)`` with
    standard normal 3-vectors ``a_k, b_k`` drawn from ``default_rng(seed)``,
    then projects back to the sphere.
    """
    if not grid.is_torus:
        raise DomainError("perturbed equator data live on the torus")
    if modes < 0 or not np.isfinite(amplitude):
        raise DomainError("modes must be >= 0 and amplitude finite")
    rng = np.random.default_rng(seed)
    th = grid.nodes
    base = np.column_stack([np.cos(th), np.sin(th), np.zeros(grid.n)])
    pert = np.zeros((grid.n, 3))
    for k in range(1, modes + 1):
        pert += np.outer(np.cos(k * th), rng.normal(size=3))
        pert += np.outer(np.sin(k * th), rng.normal(size=3))
    vals = base + amplitude * pert
    norms = np.linalg.norm(vals, axis=1, keepdims=True)
    if np.min(norms) < 1e-3:
        raise DomainError("perturbation too large: field passes near the origin")
    return SphereField(grid, vals / norms)
