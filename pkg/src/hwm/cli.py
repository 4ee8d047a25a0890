"""Command-line front end.

Usage::

    hwm <command> --config <path> [--out <dir>] [--seed <u64>]

Commands are ``soliton``, ``evolve``, ``lax`` and ``spectrum``.  The config
file is INI-style (``key = value`` lines under ``[section]`` headers); the
accepted sections and keys are listed in :data:`SCHEMA` and anything else is
rejected.  Every run writes ``manifest.json`` listing each emitted file with
its sha256.

Exit codes: 0 success, 2 invalid input, 3 resolution guard, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, HWMError
from .evolve import IntegratorConfig, evolve, perturbed_equator
from .exact import (
    BlaschkeSpec,
    blaschke_profile,
    circle_wave,
    periodic_orbit_field,
    profile_residual,
    profile_velocity,
    soliton_energy_expected,
)
from .grid import SphereField, make_grid, norm_defect
from .invariants import CSV_COLUMNS, drift_from_records, invariant_record
from .lax import lax_L, lax_residual_series, numerical_rank, schatten
from .linspec import assemble_Lminus, assemble_Lplus, classify_spectrum, jacobi_crosscheck

log = logging.getLogger("hwm")

COMMANDS = ("soliton", "evolve", "lax", "spectrum")
LOCK_NAME = ".hwm.lock"
MANIFEST = "manifest.json"


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _ints(text):
    return [int(t) for t in text.replace(",", " ").split()]


def _words(text):
    return [t for t in text.replace(",", " ").split()]


def _complexes(text):
    return [complex(t.replace(" ", "")) for t in text.split(",") if t.strip()]


SCHEMA = {
    "grid": {"kind": str, "n": int, "L": float},
    "data": {
        "kind": str,
        "m": int,
        "velocity": float,
        "chirality": int,
        "zeros": _complexes,
        "amplitude": float,
        "modes": int,
        "seed": int,
        "direction": _floats,
        "t0": float,
    },
    "integrator": {
        "scheme": str,
        "dt": float,
        "t_end": float,
        "fp_tolerance": float,
        "fp_max_iter": int,
        "record_every": int,
        "snapshot_every": int,
    },
    "lax": {"mode_cut": int, "p": _floats, "tau_rel": float, "dt_fd": float},
    "spectrum": {
        "operators": _words,
        "degrees": _ints,
        "near_zero_tol": float,
        "tail_fraction": float,
        "jacobi_K": int,
    },
}

SECTIONS = {
    "soliton": ("grid", "data"),
    "evolve": ("grid", "data", "integrator"),
    "lax": ("grid", "data", "integrator", "lax"),
    "spectrum": ("grid", "spectrum"),
}

DATA_KINDS = ("soliton", "circle_wave", "periodic_orbit", "perturbed_equator", "constant")


def load_config(path, command: str) -> dict:
    """Parse and type-check a config file; unknown sections or keys raise :class:`DomainError`."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from exc
    allowed = SECTIONS[command]
    out = {name: {} for name in allowed}
    for name in parser.sections():
        if name not in allowed:
            raise DomainError(f"section [{name}] not accepted by '{command}' (allowed: {allowed})")
        schema = SCHEMA[name]
        for key, raw in parser.items(name):
            if key not in schema:
                raise DomainError(f"unknown key '{key}' in [{name}]; allowed: {sorted(schema)}")
            try:
                out[name][key] = schema[key](raw.strip())
            except ValueError as exc:
                raise DomainError(f"bad value for {name}.{key}: {raw!r}") from exc
    return out


def build_grid(cfg: dict):
    g = cfg["grid"]
    kind = g.get("kind", "torus")
    if "n" not in g:
        raise DomainError("[grid] needs n")
    return make_grid(kind, g["n"], g.get("L"))


def _spec_from(data: dict) -> BlaschkeSpec:
    if "zeros" in data:
        zeros = tuple(data["zeros"])
    else:
        m = data.get("m", 1)
        if m < 0:
            raise DomainError("degree m must be >= 0")
        zeros = (1j,) * m
    return BlaschkeSpec(zeros, data.get("velocity", 0.0), chirality=data.get("chirality", 1))


def build_initial(cfg: dict, grid, seed: int | None = None) -> SphereField:
    """Initial field described by the ``[data]`` section."""
    data = cfg.get("data", {})
    kind = data.get("kind", "soliton")
    if kind not in DATA_KINDS:
        raise DomainError(f"unknown data kind {kind!r}; expected one of {DATA_KINDS}")
    t0 = data.get("t0", 0.0)
    if kind == "soliton":
        return blaschke_profile(_spec_from(data), grid)
    if kind == "circle_wave":
        if not grid.is_torus:
            raise DomainError("circle waves need a torus grid")
        return circle_wave(data.get("m", 1), data.get("velocity", 0.0), t0, grid)
    if kind == "periodic_orbit":
        if grid.is_torus:
            raise DomainError("the periodic orbit is defined on a window grid")
        return periodic_orbit_field(t0, grid)
    if kind == "perturbed_equator":
        s = data.get("seed", 1) if seed is None else seed
        return perturbed_equator(grid, data.get("amplitude", 0.1), data.get("modes", 4), s)
    d = np.asarray(data.get("direction", [1.0, 0.0, 0.0]), dtype=float)
    if d.shape != (3,) or np.linalg.norm(d) == 0:
        raise DomainError("constant data need a nonzero 3-vector direction")
    return SphereField(grid, np.tile(d / np.linalg.norm(d), (grid.n, 1)))


def exact_solution(cfg: dict, grid, t: float):
    """Exact field at time ``t`` when the data kind has one, else ``None``."""
    data = cfg.get("data", {})
    kind = data.get("kind", "soliton")
    t0 = data.get("t0", 0.0)
    if kind == "circle_wave":
        return circle_wave(data.get("m", 1), data.get("velocity", 0.0), t0 + t, grid)
    if kind == "constant":
        return build_initial(cfg, grid)
    if kind == "soliton" and grid.is_torus and data.get("velocity", 0.0) == 0.0:
        return build_initial(cfg, grid)
    return None


def integrator_config(cfg: dict) -> IntegratorConfig:
    it = cfg.get("integrator", {})
    return IntegratorConfig(
        scheme=it.get("scheme", "implicit_midpoint"),
        dt=it.get("dt", 1e-3),
        fp_tolerance=it.get("fp_tolerance", 1e-13),
        fp_max_iter=it.get("fp_max_iter", 100),
        record_every=it.get("record_every", 1),
    )


# ---------------------------------------------------------------- output


def fmt(x) -> str:
    """17 significant digits; round-trips every double."""
    return format(float(x), ".17g")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not serializable: {type(obj)}")


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


class OutputDir:
    """Output directory with an exclusive lock file and a running file list."""

    def __init__(self, path):
        self.path = Path(path)
        self.files: list[str] = []
        self._lock = None

    def __enter__(self):
        self.path.mkdir(parents=True, exist_ok=True)
        lock = self.path / LOCK_NAME
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as exc:
            raise DomainError(f"output directory {self.path} is locked by another run ({lock})") from exc
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        self._lock = lock
        return self

    def __exit__(self, *exc):
        if self._lock is not None:
            self._lock.unlink(missing_ok=True)
        return False

    def _register(self, rel: str) -> Path:
        target = self.path / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        if rel not in self.files:
            self.files.append(rel)
        return target

    def write_csv(self, rel: str, header, rows) -> None:
        with open(self._register(rel), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])

    def write_json(self, rel: str, payload) -> None:
        text = json.dumps(_clean(payload), indent=2, sort_keys=True, default=_json_default)
        self._register(rel).write_text(text + "\n", encoding="utf-8")

    def write_text(self, rel: str, text: str) -> None:
        self._register(rel).write_text(text, encoding="utf-8")

    def snapshot(self, rel: str, u: SphereField) -> None:
        rows = np.column_stack([u.grid.nodes, u.values])
        self.write_csv(rel, ("x", "u1", "u2", "u3"), rows)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: OutputDir, command, config_path, cfg, seed, started, status) -> None:
    """Timestamps live only here, so every other file hashes reproducibly."""
    entries = [{"path": rel, "sha256": sha256(out.path / rel)} for rel in sorted(out.files)]
    payload = {
        "command": command,
        "config_path": str(config_path),
        "config": cfg,
        "seed": seed,
        "version": __version__,
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "status": status,
        "files": entries,
    }
    text = json.dumps(_clean(payload), indent=2, sort_keys=True, default=_json_default)
    (out.path / MANIFEST).write_text(text + "\n", encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_soliton(cfg, out: OutputDir, seed=None) -> None:
    grid = build_grid(cfg)
    data = dict(cfg.get("data", {}))
    data.setdefault("kind", "soliton")
    if data["kind"] != "soliton":
        raise DomainError("the soliton command only builds [data] kind = soliton")
    spec = _spec_from(data)
    u = blaschke_profile(spec, grid)
    out.snapshot("snapshot.csv", u)
    rec = invariant_record(u, 0.0)
    out.write_csv("invariants.csv", CSV_COLUMNS, [rec.row()])
    pure = all(z == 1j for z in spec.zeros)
    out.write_json(
        "residual.json",
        {
            "profile_residual": profile_residual(u, profile_velocity(spec)),
            "velocity_parameter": spec.velocity,
            "travel_velocity": profile_velocity(spec),
            "degree": spec.degree,
            "energy": rec.energy,
            "energy_expected": soliton_energy_expected(spec.degree, spec.velocity) if pure else None,
            "norm_defect": norm_defect(u.values),
        },
    )


def _run_trajectory(cfg, seed):
    grid = build_grid(cfg)
    u0 = build_initial(cfg, grid, seed)
    it = cfg.get("integrator", {})
    t_end = it.get("t_end", 1.0)
    icfg = integrator_config(cfg)
    return grid, evolve(u0, t_end, icfg)


def cmd_evolve(cfg, out: OutputDir, seed=None) -> int:
    grid, traj = _run_trajectory(cfg, seed)
    every = cfg.get("integrator", {}).get("snapshot_every", 1)
    if every < 1:
        raise DomainError("snapshot_every must be >= 1")
    for i in list(range(0, len(traj.times), every)) + [len(traj.times) - 1]:
        out.snapshot(f"snapshots/snapshot_{i:05d}.csv", traj.snapshots[i])
    out.write_csv("invariants.csv", CSV_COLUMNS, [r.row() for r in traj.records])
    out.write_json("drift.json", drift_from_records(traj.records).to_dict())
    exact = exact_solution(cfg, grid, traj.times[-1])
    if exact is not None:
        err = float(np.max(np.abs(traj.final.values - exact.values)))
        out.write_json("final_error.json", {"t": traj.times[-1], "sup_error": err})
    if not traj.complete:
        out.write_text("FAILED", traj.failure + "\n")
        return 4
    return 0


def cmd_lax(cfg, out: OutputDir, seed=None) -> int:
    grid = build_grid(cfg)
    lx = cfg.get("lax", {})
    cut = lx.get("mode_cut")
    ps = lx.get("p", [1.0, 2.0, 4.0])
    tau = lx.get("tau_rel", 1e-8)
    t_end = cfg.get("integrator", {}).get("t_end", 0.0)
    if t_end > 0:
        _, traj = _run_trajectory(cfg, seed)
        times, snaps, complete = traj.times, traj.snapshots, traj.complete
    else:
        traj = None
        times, snaps, complete = [0.0], [build_initial(cfg, grid, seed)], True

    reports, rank_rows = [], []
    for t, u in zip(times, snaps):
        lm = lax_L(u, cut)
        rep = schatten(lm, ps, tau)
        rr = numerical_rank(lm, tau) if lm.is_dense else None
        rank = rr.rank if rr else rep.rank
        sig = rep.sigma
        gap = rr.gap if rr else (sig[rank - 1] / sig[rank] if 0 < rank < len(sig) and sig[rank] > 0 else math.inf)
        reports.append({"t": t, **json.loads(rep.to_json())})
        nxt = sig[rank] if rank < len(sig) else 0.0
        lead = sig[rank - 1] if rank > 0 else 0.0
        rank_rows.append((t, rank, gap, lead, nxt))
    out.write_json("schatten.json", {"backend": lm.backend, "tau_rel": tau, "snapshots": reports})
    out.write_csv("rank.csv", ("t", "rank", "gap", "sigma_rank", "sigma_next"), rank_rows)
    if traj is not None and len(times) >= 3 and lm.is_dense:
        dt_fd = lx.get("dt_fd")
        series = lax_residual_series(traj, lm.backend, dt_fd, cut)
        out.write_csv("lax_residual.csv", ("t", "residual"), series)
    if not complete:
        out.write_text("FAILED", traj.failure + "\n")
        return 4
    return 0


def cmd_spectrum(cfg, out: OutputDir, seed=None) -> None:
    grid = build_grid(cfg)
    sp = cfg.get("spectrum", {})
    ops = sp.get("operators", ["Lplus", "Lminus"])
    degrees = sp.get("degrees", [1])
    jk = sp.get("jacobi_K")
    for which in ops:
        if which not in ("Lplus", "Lminus"):
            raise DomainError(f"unknown operator {which!r}")
    for m in degrees:
        for which in ops:
            op = (assemble_Lplus if which == "Lplus" else assemble_Lminus)(m, grid)
            rep = classify_spectrum(op, sp.get("near_zero_tol"), sp.get("tail_fraction", 0.25))
            out.write_json(f"spectrum_{which}_m{m}.json", rep.to_dict())
            if which == "Lplus" and jk:
                out.write_json(f"jacobi_m{m}.json", jacobi_crosscheck(m, jk, rep).to_dict())


HANDLERS = {"soliton": cmd_soliton, "evolve": cmd_evolve, "lax": cmd_lax, "spectrum": cmd_spectrum}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hwm", description="Half-wave maps experiments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI config file")
    p.add_argument("--out", default=None, help="output directory (default: ./hwm_out/<command>)")
    p.add_argument("--seed", type=int, default=None, help="RNG seed for perturbed data (u64)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def exit_code(exc: BaseException) -> int:
    return exc.exit_code if isinstance(exc, HWMError) else 4


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    out_path = args.out or os.path.join("hwm_out", args.command)
    try:
        cfg = load_config(args.config, args.command)
        with OutputDir(out_path) as out:
            status = "ok"
            code = 0
            try:
                code = HANDLERS[args.command](cfg, out, args.seed) or 0
                status = "ok" if code == 0 else "failed"
            except (HWMError, FloatingPointError, np.linalg.LinAlgError) as exc:
                status = f"error: {exc}"
                code = exit_code(exc)
                raise
            finally:
                write_manifest(out, args.command, args.config, cfg, args.seed, started, status)
    except HWMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return code


if __name__ == "__main__":
    sys.exit(main())
