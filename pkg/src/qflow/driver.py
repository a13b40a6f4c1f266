"""Configuration, initial data, snapshots and the run/sweep/steady commands."""

import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor
from .diagnostics import DiagnosticsRecord, apriori_bounds_check, record, steady_state_check
from .dynamics import Discretization, State, apply_bc
from .energetics import Params
from .errors import ConfigInvalid, FormatError, IoError, QFlowError
from .grid import Grid, integrate
from .integrator import StepControl, run

log = logging.getLogger(__name__)

PRESETS = ("quiescent", "density_bump", "shear_defect")
SNAPSHOT_FORMAT = "qflow-snapshot"
SNAPSHOT_VERSION = 1
MIN_INITIAL_RHO = 0.1


@dataclass
class SimConfig:
    grid: Grid
    params: Params
    control: StepControl
    initial: dict = field(default_factory=lambda: {"preset": "quiescent"})
    t_end: float = 1.0
    diag_every: int = 1
    snapshot_every: int = 0
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        try:
            return cls._from_dict(d)
        except ConfigInvalid:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad config: {exc}") from exc

    @classmethod
    def _from_dict(cls, d):
        known = {"units", "grid", "params", "control", "initial", "t_end", "output", "seed"}
        unknown = set(d) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        if d.get("units", "nondimensional") != "nondimensional":
            raise ConfigInvalid("only nondimensional units are supported")
        g = d["grid"]
        shape = tuple(int(n) for n in g["shape"])
        bc = g.get("bc", "box")
        if "spacing" in g:
            grid = Grid(shape, tuple(g["spacing"]), bc)
        else:
            grid = Grid.from_lengths(shape, g.get("lengths", (1.0, 1.0, 1.0)), bc)
        params = Params.from_dict(d.get("params", {})).validate()
        c = dict(d.get("control", {}))
        spatial = Discretization(rho_advection=c.pop("rho_advection", "upwind"),
                                 ericksen=c.pop("ericksen", "force"))
        control = StepControl(spatial=spatial, **{k: (v if k == "scheme" else float(v))
                                                  for k, v in c.items()})
        initial = dict(d.get("initial", {"preset": "quiescent"}))
        if initial.get("preset") not in PRESETS:
            raise ConfigInvalid(f"initial.preset must be one of {PRESETS}")
        out = d.get("output", {})
        cfg = cls(grid=grid, params=params, control=control, initial=initial,
                  t_end=float(d.get("t_end", 1.0)),
                  diag_every=int(out.get("diag_every", 1)),
                  snapshot_every=int(out.get("snapshot_every", 0)),
                  seed=int(d.get("seed", 0)))
        if cfg.diag_every < 1 or cfg.snapshot_every < 0:
            raise ConfigInvalid("diag_every must be >= 1 and snapshot_every >= 0")
        if not cfg.t_end >= 0:
            raise ConfigInvalid("t_end must be >= 0")
        return cfg

    def to_dict(self):
        ctl = self.control
        return {
            "units": "nondimensional",
            "grid": self.grid.describe(),
            "params": self.params.to_dict(),
            "control": {
                "cfl_adv": ctl.cfl_adv, "cfl_diff": ctl.cfl_diff, "dt_max": ctl.dt_max,
                "rho_floor": ctl.rho_floor, "scheme": ctl.scheme,
                "rho_advection": ctl.spatial.rho_advection, "ericksen": ctl.spatial.ericksen,
            },
            "initial": dict(self.initial),
            "t_end": self.t_end,
            "output": {"diag_every": self.diag_every, "snapshot_every": self.snapshot_every},
            "seed": self.seed,
        }

    def digest(self):
        """sha256 of the canonical JSON form of the physics-relevant settings."""
        d = self.to_dict()
        d.pop("output")
        d.pop("t_end")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_params(self, **kw):
        return SimConfig(self.grid, self.params.replace(**kw).validate(), self.control,
                         dict(self.initial), self.t_end, self.diag_every,
                         self.snapshot_every, self.seed)


def load_config(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path} is not valid JSON: {exc}") from exc
    return SimConfig.from_dict(d)


# ---------------------------------------------------------------------------
# initial data


def _director(vec, shape):
    n = np.asarray(vec, dtype=np.float64)
    if n.shape != (3,) or not np.linalg.norm(n) > 0:
        raise ConfigInvalid(f"director must be a nonzero 3-vector, got {vec}")
    return np.broadcast_to(n.reshape(3, 1, 1, 1), (3,) + shape)


def _smooth_noise(grid, rng, kmax=3):
    """Sum of random low Fourier modes, unit-ish amplitude, zero on box walls."""
    x = grid.coords()
    out = np.zeros(grid.shape)
    lengths = grid.lengths
    for _ in range(8):
        term = rng.normal()
        for d in grid.active:
            k = rng.integers(1, kmax + 1)
            ph = rng.uniform(0, 2 * np.pi)
            xi = x[d] / lengths[d]
            if grid.periodic:
                term = term * np.cos(2 * np.pi * k * xi + ph)
            else:
                term = term * np.sin(np.pi * k * xi)
        out += term
    return out / 8.0


def make_initial(cfg):
    """State at t = 0 for the configured preset (walls already imposed)."""
    grid, p = cfg.grid, cfg.params
    opts = dict(cfg.initial)
    preset = opts.pop("preset")
    x = grid.coords()
    centre = np.array([0.5 * grid.lengths[d] if grid.shape[d] > 1 else 0.0 for d in range(3)])
    rho = np.full(grid.shape, float(opts.pop("rho0", 1.0)))
    u = grid.zeros(3)
    director = opts.pop("director", [1.0, 0.0, 0.0])

    if preset == "quiescent":
        order = float(opts.pop("order", 0.0))
        q = tensor.uniaxial(order, _director(director, grid.shape))
    elif preset == "density_bump":
        amp = float(opts.pop("amplitude", 0.2))
        width = float(opts.pop("width", 0.1))
        c = np.asarray(opts.pop("center", centre), dtype=np.float64)
        r2 = sum((x[d] - c[d]) ** 2 for d in grid.active)
        rho = rho + amp * np.exp(-r2 / (2.0 * width ** 2))
        order = float(opts.pop("order", 0.5))
        q = tensor.uniaxial(order, _director(director, grid.shape))
    else:  # shear_defect
        amp = float(opts.pop("amplitude", 0.5))
        order = float(opts.pop("order", 0.5))
        tilt = float(opts.pop("perturbation", 0.3))
        rng = np.random.default_rng(cfg.seed)
        ax = [d for d in grid.active]
        a0, a1 = ax[0], ax[1] if len(ax) > 1 else ax[0]
        xi = [x[d] / grid.lengths[d] for d in range(3)]
        if grid.periodic:
            u[a0] = amp * np.sin(2 * np.pi * xi[a1])
        else:
            u[a0] = amp * np.sin(np.pi * xi[a0]) * np.sin(2 * np.pi * xi[a1])
        phi = tilt * np.pi * _smooth_noise(grid, rng)
        psi = 0.5 * tilt * np.pi * _smooth_noise(grid, rng)
        n0 = np.asarray(director, dtype=np.float64)
        n0 = n0 / np.linalg.norm(n0)
        # rotate the base director in-plane by phi and out of plane by psi
        n = np.stack([np.cos(phi) * n0[0] - np.sin(phi) * n0[1],
                      np.sin(phi) * n0[0] + np.cos(phi) * n0[1],
                      np.full(grid.shape, n0[2])])
        n = np.stack([np.cos(psi) * n[0], np.cos(psi) * n[1], n[2] + np.sin(psi)])
        q = tensor.uniaxial(order, n)

    if opts:
        raise ConfigInvalid(f"unknown options for preset {preset!r}: {sorted(opts)}")
    if not float(np.min(rho)) >= MIN_INITIAL_RHO:
        raise ConfigInvalid(f"initial density must stay >= {MIN_INITIAL_RHO}")
    state = State(grid, rho, u, q, t=0.0, step=0)
    return apply_bc(state)


# ---------------------------------------------------------------------------
# snapshots


def _stem(path):
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".bin", ".json") else path


def save_snapshot(state, path, config_digest=""):
    """Write ``<stem>.bin`` (little-endian float64, x fastest) and ``<stem>.json``."""
    stem = _stem(path)
    comps = [state.rho] + [state.u[i] for i in range(3)] + [state.q[i] for i in range(5)]
    payload = b"".join(np.asarray(c, dtype="<f8").tobytes(order="F") for c in comps)
    header = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "grid": state.grid.describe(),
        "time": state.t,
        "step": state.step,
        "config_digest": config_digest,
        "fields": [{"name": "rho", "components": 1}, {"name": "u", "components": 3},
                   {"name": "q", "components": 5, "packing": "q11,q12,q13,q22,q23"}],
        "dtype": "<f8",
        "order": "x-fastest",
        "payload_bytes": len(payload),
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
        with open(f"{stem}.bin", "wb") as fh:
            fh.write(payload)
        with open(f"{stem}.json", "w") as fh:
            json.dump(header, fh, indent=1)
    except OSError as exc:
        raise IoError(f"cannot write snapshot {stem}: {exc}") from exc
    return Path(f"{stem}.bin")


def read_snapshot_header(path):
    stem = _stem(path)
    try:
        with open(f"{stem}.json") as fh:
            header = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read snapshot header {stem}.json: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"corrupt snapshot header: {exc}") from exc
    if header.get("format") != SNAPSHOT_FORMAT or header.get("version") != SNAPSHOT_VERSION:
        raise FormatError("not a qflow snapshot header")
    return header


def load_snapshot(path, expected_digest=None):
    """Load a snapshot; checks payload size, checksum and (optionally) config digest."""
    stem = _stem(path)
    header = read_snapshot_header(stem)
    if expected_digest is not None and header.get("config_digest") != expected_digest:
        raise FormatError("snapshot was written by a different configuration")
    g = header["grid"]
    grid = Grid(tuple(g["shape"]), tuple(g["spacing"]), g["bc"])
    nnode = int(np.prod(grid.shape))
    expected = 9 * nnode * 8
    try:
        with open(f"{stem}.bin", "rb") as fh:
            payload = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read snapshot payload {stem}.bin: {exc}") from exc
    if len(payload) != expected or header.get("payload_bytes") != expected:
        raise FormatError(f"payload has {len(payload)} bytes, expected {expected}")
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise FormatError("payload checksum mismatch")
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    comps = [flat[i * nnode:(i + 1) * nnode].reshape(grid.shape, order="F") for i in range(9)]
    rho = comps[0].copy()
    u = np.stack(comps[1:4])
    q = np.stack(comps[4:9])
    return State(grid, rho, u, q, t=float(header["time"]), step=int(header["step"]))


def snapshot_info(path):
    header = read_snapshot_header(path)
    state = load_snapshot(path)
    info = dict(header)
    info["stats"] = {
        "rho_min": float(state.rho.min()), "rho_max": float(state.rho.max()),
        "u_max": float(np.abs(state.u).max()), "q_max": float(np.abs(state.q).max()),
        "mass": float(integrate(state.rho, state.grid)),
    }
    return info


# ---------------------------------------------------------------------------
# runs


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def write_timeseries(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DiagnosticsRecord.columns())
        for rec in records:
            w.writerow([_fmt(v) for v in rec.row()])


def read_timeseries(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    cols = rows[0]
    out = []
    for r in rows[1:]:
        vals = {c: (int(v) if c == "step" else float(v)) for c, v in zip(cols, r)}
        out.append(DiagnosticsRecord(**vals))
    return out


@dataclass
class RunResult:
    state: State
    records: list
    bounds: object
    out_dir: Path = None
    stopped_early: bool = False


def _dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o))


def simulate(cfg, out_dir=None, state=None, t_end=None, stop_when=None):
    """Run ``cfg`` (optionally from ``state``) and write outputs to ``out_dir``.

    Records diagnostics every ``cfg.diag_every`` steps plus the final state.
    ``stop_when(record)`` ends the run early when it returns true.
    """
    p, ctl = cfg.params, cfg.control
    digest = cfg.digest()
    if state is None:
        state = make_initial(cfg)
    t_end = cfg.t_end if t_end is None else float(t_end)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create {out}: {exc}") from exc
        _dump_json(cfg.to_dict(), out / "config.echo.json")

    records = [record(state, p)]
    stop = {"flag": False}

    def on_step(s, info):
        if s.step % cfg.diag_every == 0 or s.t >= t_end:
            records.append(record(s, p, records[-1]))
            if stop_when is not None and stop_when(records[-1]):
                stop["flag"] = True
        if out is not None and cfg.snapshot_every and s.step % cfg.snapshot_every == 0:
            save_snapshot(s, out / f"snap_{s.step:06d}", digest)

    if stop_when is not None and stop_when(records[0]):
        stop["flag"] = True
    if not stop["flag"] and state.t < t_end:
        state = run(state, p, ctl, t_end, on_step=on_step, stop_when=lambda s: stop["flag"])
    bounds = apriori_bounds_check(records, p, volume=cfg.grid.volume)
    if out is not None:
        write_timeseries(records, out / "timeseries.csv")
        save_snapshot(state, out / f"snap_{state.step:06d}", digest)
        spacetime = sum(0.5 * (a.lgamma_theta_rho + b.lgamma_theta_rho) * (b.time - a.time)
                        for a, b in zip(records, records[1:]))
        _dump_json({
            "final": dict(zip(DiagnosticsRecord.columns(), records[-1].row())),
            "apriori_bounds": bounds.to_dict(),
            "density_spacetime_norm": spacetime,
            "config_digest": digest,
        }, out / "final.json")
    return RunResult(state, records, bounds, out, stop["flag"])


def _error_exit(exc, out_dir=None):
    name = type(exc).__name__
    msg = str(exc)
    log.error("%s: %s", name, msg)
    print(json.dumps({"error": name, "message": msg}), file=sys.stderr)
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            _dump_json({"error": name, "message": msg}, Path(out_dir) / "error.json")
        except OSError:
            pass
    return exc.exit_code


def cmd_run(config_path, out_dir, resume=None):
    """Run a config; returns the process exit status."""
    try:
        cfg = load_config(config_path)
        state = load_snapshot(resume, cfg.digest()) if resume else None
        if state is not None and not cfg.grid.periodic:
            state = state.replace(q_bc=state.q)
        simulate(cfg, out_dir, state=state)
    except QFlowError as exc:
        return _error_exit(exc, out_dir)
    return 0


def field_distance(a, b):
    """L2 distance of (rho, u, Q) between two states on the same grid."""
    grid = a.grid
    dq = a.q - b.q
    dens = ((a.rho - b.rho) ** 2 + np.sum((a.u - b.u) ** 2, axis=0) + tensor.qdot(dq, dq))
    return math.sqrt(float(integrate(dens, grid)))


def _threads():
    raw = os.environ.get("QFLOW_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return os.cpu_count() or 1 if n <= 0 else n


def _sweep_level(args):
    cfg, out = args
    return simulate(cfg, out).state


def sweep(cfg, param, values, out_dir=None):
    """Run the regularization ladder ``values + [0]``; returns rows of sweep.csv."""
    if param not in ("eps", "delta"):
        raise ConfigInvalid("sweep param must be eps or delta")
    values = [float(v) for v in values]
    if not values or any(not v > 0 for v in values):
        raise ConfigInvalid("sweep values must be positive")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ConfigInvalid("sweep values must be strictly decreasing")
    ladder = values + [0.0]
    cfgs = [cfg.with_params(**{param: v}) for v in ladder]
    outs = [None if out_dir is None else Path(out_dir) / f"level_{i:02d}_{param}_{v:.3e}"
            for i, v in enumerate(ladder)]
    workers = min(_threads(), len(cfgs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            finals = list(pool.map(_sweep_level, zip(cfgs, outs)))
    else:
        finals = [_sweep_level(a) for a in zip(cfgs, outs)]
    rows = []
    for i, v in enumerate(ladder):
        rows.append({
            "level": i,
            "param": param,
            "value": v,
            "dist_prev": field_distance(finals[i], finals[i - 1]) if i > 0 else math.nan,
            "dist_zero": field_distance(finals[i], finals[-1]),
        })
    if out_dir is not None:
        with open(Path(out_dir) / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level", "param", "value", "dist_prev", "dist_zero"])
            for r in rows:
                w.writerow([r["level"], r["param"], _fmt(r["value"]), _fmt(r["dist_prev"]),
                            _fmt(r["dist_zero"])])
    return rows


def cmd_sweep(config_path, param, values, out_dir):
    try:
        cfg = load_config(config_path)
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        sweep(cfg, param, values, out_dir)
    except QFlowError as exc:
        return _error_exit(exc, out_dir)
    except OSError as exc:
        return _error_exit(IoError(str(exc)), None)
    return 0


def steady(cfg, tol, t_max, out_dir=None):
    """Run until :func:`steady_state_check` passes or ``t_max``; returns the report."""
    if not tol > 0:
        raise ConfigInvalid("tol must be positive")
    volume = cfg.grid.volume
    res = simulate(cfg, out_dir, t_end=t_max,
                   stop_when=lambda rec: steady_state_check(rec, tol, volume))
    first, last = res.records[0], res.records[-1]
    converged = steady_state_check(last, tol, volume)
    report = {
        "converged": converged,
        "tol": tol,
        "t_max": t_max,
        "time_to_tol": last.time if converged else None,
        "steps": last.step,
        "l2_u": last.l2_u,
        "l2_H": last.l2_H,
        "l2_H_initial": first.l2_H,
        "l2_rho_dev": last.l2_rho_dev,
        "m0": first.mass,
        "mean_density": last.mass / volume,
        "mean_density_deviation": abs(last.mass / volume - first.mass / volume),
    }
    if out_dir is not None:
        _dump_json(report, Path(out_dir) / "steady.json")
    return report


def cmd_steady(config_path, tol, t_max, out_dir):
    try:
        cfg = load_config(config_path)
        report = steady(cfg, tol, t_max, out_dir)
    except QFlowError as exc:
        return _error_exit(exc, out_dir)
    return 0 if report["converged"] else 4
