"""Benchmark harness: configures and runs the advection convergence study,
the rotating-Gaussian decay study, the isentropic-vortex study, and the
free-stream sanity check; emits per-run CSV diagnostics, machine-readable
manifests, fitted convergence rates, and per-step timing tables."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .dg import DgOperator
from .mesh import BoundarySpec, Mesh, build_cartesian_mesh, build_shifted_interface_mesh
from .mesh_file import load_mesh
from .norms import l2_error, linf_peak
from .physics import AdvectionModel, EulerModel, VortexParams, gaussian_field, vortex_exact
from .simulation import RunRecord, TimeIntegratorConfig, run_simulation

CSV_COLUMNS = ("case", "method", "P", "Q", "mesh", "sample_index", "time",
               "metric_name", "metric_value")

CONV_DOMAIN = (-5.0, 5.0, -5.0, 5.0)
GAUSS_DOMAIN = (-2.0, 2.0, -2.0, 2.0)
GAUSS_CENTER = (-0.625, -0.625)
GAUSS_SIGMA = 0.1
VORTEX_DOMAIN = (-5.0, 5.0, -5.0, 5.0)
VORTEX_PARAMS = VortexParams(center=(0.0, 0.0), beta=5.0, velocity=(1.0, 0.0),
                             gamma=1.4, x_period=10.0)
VORTEX_CYCLE_TIME = 10.0
GAUSS_CYCLE_TIME = 2.0 * math.pi

DESK_PROFILE = {
    "convergence": {"grids": (9, 15, 21, 27), "orders": (3, 5)},
    "gaussian": {"cycles": 10, "orders": (4, 7)},
    "vortex": {"cycles": 2, "orders": (5,)},
}
PAPER_PROFILE = {
    "convergence": {"grids": (9, 15, 21, 27, 39, 57, 81, 120, 150),
                    "orders": (3, 5, 7, 9)},
    "gaussian": {"cycles": 100, "orders": (4, 5, 6, 7, 8, 9, 10)},
    "vortex": {"cycles": 100, "orders": (3, 4, 5, 6, 7)},
}


@dataclass
class CaseConfig:
    """One run of one case with one interface method."""

    case: str
    method: str = "conformal"
    p: int = 3
    q: int | None = None          # defaults to the q_rule
    q_rule: str = "p+2"           # "p+2" | "2p+2"
    nx: int = 21
    ny: int | None = None         # defaults to nx
    shift: float = 0.5
    dt: float = 1e-3
    cycles: float | None = None
    t_final: float | None = None
    sample_every: int | None = None
    out_dir: str | None = None
    seed: int = 0
    threads: int = 1
    mesh_file: str | None = None

    def __post_init__(self):
        if self.case not in ("convergence", "gaussian", "vortex", "free-stream"):
            raise ValueError(f"unknown case {self.case!r}")
        if self.method not in ("conformal", "mortar", "p2p"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.ny is None:
            self.ny = self.nx
        if self.q is None:
            self.q = resolve_q(self.p, self.q_rule)
        if self.q < self.p + 2:
            raise ValueError(f"Q={self.q} must be at least P+2={self.p + 2}")

    @classmethod
    def from_file(cls, path, **overrides) -> "CaseConfig":
        """Config from a JSON file whose keys mirror the dataclass fields;
        keyword overrides (CLI flags) win."""
        data = json.loads(Path(path).read_text())
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def resolve_q(p: int, q_rule: str) -> int:
    if q_rule == "p+2":
        return p + 2
    if q_rule == "2p+2":
        return 2 * p + 2
    raise ValueError(f"unknown q rule {q_rule!r}")


# ---------------------------------------------------------------------------
# mesh construction per case
# ---------------------------------------------------------------------------

def mesh_label(config: CaseConfig) -> str:
    if config.method == "conformal" and config.case != "free-stream":
        return f"{config.nx}x{config.ny}"
    cols = "+".join(str(c) for c in three_columns(config.nx)) \
        if config.case in ("convergence", "vortex", "free-stream") \
        else "+".join(str(c) for c in two_columns(config.nx))
    return f"{cols}x{config.ny}~s{config.shift}"


def three_columns(nx: int) -> tuple[int, int, int]:
    if nx % 3:
        raise ValueError(f"three-column layout needs nx divisible by 3, got {nx}")
    return (nx // 3, nx // 3, nx // 3)


def two_columns(nx: int) -> tuple[int, int]:
    if nx % 2:
        raise ValueError(f"two-column layout needs even nx, got {nx}")
    return (nx // 2, nx // 2)


def build_case_mesh(config: CaseConfig) -> Mesh:
    if config.mesh_file:
        return load_mesh(config.mesh_file)
    nx, ny, shift = config.nx, config.ny, config.shift
    if config.case == "convergence":
        boundary = BoundarySpec(x="periodic", y="periodic")
        if config.method == "conformal":
            return build_cartesian_mesh(CONV_DOMAIN, nx, ny, boundary)
        return build_shifted_interface_mesh(CONV_DOMAIN, three_columns(nx), ny,
                                            shift, boundary)
    if config.case == "gaussian":
        boundary = BoundarySpec(x="dirichlet0", y="dirichlet0")
        if config.method == "conformal":
            return build_cartesian_mesh(GAUSS_DOMAIN, nx, ny, boundary)
        return build_shifted_interface_mesh(GAUSS_DOMAIN, two_columns(nx), ny,
                                            shift, boundary)
    if config.case in ("vortex", "free-stream"):
        boundary = BoundarySpec(x="periodic", y="farfield")
        if config.method == "conformal" and config.case == "vortex":
            return build_cartesian_mesh(VORTEX_DOMAIN, nx, ny, boundary)
        if config.method == "conformal":
            shift = 0.0  # free-stream: conformal-null needs aligned zones
        return build_shifted_interface_mesh(VORTEX_DOMAIN, three_columns(nx), ny,
                                            shift, boundary)
    raise ValueError(config.case)


# ---------------------------------------------------------------------------
# exact solutions and metrics
# ---------------------------------------------------------------------------

def convergence_initial(x, y):
    return np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)


def convergence_exact(x, y, t):
    return np.sin(2 * np.pi * (x - t)) * np.cos(2 * np.pi * y)


def vortex_exact_fn(x, y, t):
    return vortex_exact(VORTEX_PARAMS, x, y, t)


def metric_l2_convergence(op, field, t):
    return float(l2_error(op, field, convergence_exact, t=t)[0])


def metric_l2_rho(op, field, t):
    return float(l2_error(op, field, vortex_exact_fn, t=t)[0])


def metric_linf_peak(op, field, t):
    return linf_peak(op, field)[0]


# ---------------------------------------------------------------------------
# CSV / manifest emission
# ---------------------------------------------------------------------------

def write_csv(path, config: CaseConfig, record: RunRecord) -> None:
    mesh = mesh_label(config)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for sample_index, t, name, value in record.rows:
            writer.writerow([config.case, config.method, config.p, config.q,
                             mesh, sample_index, repr(float(t)), name,
                             repr(float(value))])


def write_manifest(path, config: CaseConfig, record: RunRecord) -> None:
    payload = {
        "config": asdict(config),
        "mesh": mesh_label(config),
        "timings": record.timings,
        "status": record.status,
        "diverged_at": record.diverged_at,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_stem(config: CaseConfig) -> str:
    return f"{config.case}_{config.method}_P{config.p}Q{config.q}_{mesh_label(config)}"


def emit_run(config: CaseConfig, record: RunRecord) -> None:
    if config.out_dir is None:
        return
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = run_stem(config)
    write_csv(out / f"{stem}.csv", config, record)
    write_manifest(out / f"{stem}.manifest.json", config, record)


# ---------------------------------------------------------------------------
# rate fitting
# ---------------------------------------------------------------------------

PLATEAU_ERROR = 1e-12


def fit_rate(hs, errors, n_points: int = 3) -> float:
    """Least-squares slope of log error vs log h over the finest
    ``n_points`` non-plateaued points (plateau: error < 1e-12)."""
    pts = [(h, e) for h, e in zip(hs, errors) if e >= PLATEAU_ERROR]
    if len(pts) < 2:
        raise ValueError("not enough non-plateaued points to fit a rate")
    pts.sort(key=lambda he: he[0])
    pts = pts[:n_points]
    log_h = np.log([p[0] for p in pts])
    log_e = np.log([p[1] for p in pts])
    return float(np.polyfit(log_h, log_e, 1)[0])


# ---------------------------------------------------------------------------
# case runners
# ---------------------------------------------------------------------------

def run_case(config: CaseConfig, metrics, model, initial, n_steps,
             farfield_state=None, defect_metric: bool = False):
    op = DgOperator(build_case_mesh(config), config.p, config.q, model,
                    method=config.method, farfield_state=farfield_state)
    field = op.project(initial) if callable(initial) else op.constant_field(initial)
    integ = TimeIntegratorConfig(dt=config.dt, n_steps=n_steps)
    sample_every = config.sample_every or max(n_steps, 1)
    field, record = run_simulation(op, field, integ, metrics=metrics,
                                   sample_every=sample_every,
                                   defect_metric=defect_metric)
    emit_run(config, record)
    return op, field, record


def run_convergence_single(config: CaseConfig) -> tuple[CaseConfig, RunRecord]:
    n_steps = round((config.t_final or 1.0) / config.dt)
    _, _, record = run_case(config, {"l2_error": metric_l2_convergence},
                            AdvectionModel(velocity=(1.0, 0.0)),
                            convergence_initial, n_steps)
    return config, record


def run_convergence(grids=(9, 15, 21, 27), orders=(3, 5),
                    methods=("conformal", "mortar", "p2p"),
                    q_rules=None, dt=1e-3, t_final=1.0, shift=0.5,
                    out_dir=None, threads=1) -> dict:
    """h-convergence study; returns per-(method, P) errors and fitted rates.

    ``q_rules`` maps method -> "p+2" | "2p+2" (default: p2p dealiased at
    2p+2, the others at p+2, mirroring the benchmark setup).
    """
    q_rules = q_rules or {"conformal": "p+2", "mortar": "p+2", "p2p": "2p+2"}
    configs = []
    for method in methods:
        for p in orders:
            for n in grids:
                configs.append(CaseConfig(
                    case="convergence", method=method, p=p,
                    q_rule=q_rules.get(method, "p+2"), nx=n, ny=n, shift=shift,
                    dt=dt, t_final=t_final, out_dir=out_dir))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_convergence_single, configs))
    else:
        results = [run_convergence_single(c) for c in configs]

    study: dict = {}
    domain_w = CONV_DOMAIN[1] - CONV_DOMAIN[0]
    for config, record in results:
        key = (config.method, config.p)
        entry = study.setdefault(key, {"hs": [], "errors": [], "statuses": []})
        err = record.series("l2_error")[-1][1] if record.status == "ok" else None
        entry["hs"].append(domain_w / config.nx)
        entry["errors"].append(err)
        entry["statuses"].append(record.status)
    for key, entry in study.items():
        ok = [(h, e) for h, e in zip(entry["hs"], entry["errors"]) if e is not None]
        entry["plateaued"] = [e is not None and e < PLATEAU_ERROR
                              for e in entry["errors"]]
        entry["rate"] = fit_rate([h for h, _ in ok], [e for _, e in ok])
    if out_dir is not None:
        payload = {f"{m}_P{p}": {k: v for k, v in entry.items()}
                   for (m, p), entry in study.items()}
        Path(out_dir, "rates.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return study


def run_gaussian(config: CaseConfig) -> tuple[list[float], RunRecord]:
    """Rotating-Gaussian decay; returns per-cycle peak values."""
    cycles = config.cycles if config.cycles is not None else 10
    steps_per_cycle = round(GAUSS_CYCLE_TIME / config.dt)
    n_steps = round(cycles * steps_per_cycle)
    if config.sample_every is None:
        config.sample_every = steps_per_cycle
    g = gaussian_field(GAUSS_CENTER, GAUSS_SIGMA)
    _, _, record = run_case(config, {"linf_peak": metric_linf_peak},
                            AdvectionModel(rotation=True),
                            lambda x, y: g(x, y), n_steps)
    peaks = [v for _, v in record.series("linf_peak")]
    return peaks, record


def run_vortex(config: CaseConfig, defect_metric: bool = False):
    """Isentropic-vortex error history; cycle = 10 time units."""
    cycles = config.cycles if config.cycles is not None else 2
    n_steps = round(cycles * VORTEX_CYCLE_TIME / config.dt)
    if config.sample_every is None:
        config.sample_every = max(round(0.1 * VORTEX_CYCLE_TIME / config.dt), 1)
    model = EulerModel(gamma=VORTEX_PARAMS.gamma)
    farfield = model.conserved(1.0, *VORTEX_PARAMS.velocity, 1.0)
    op, field, record = run_case(
        config, {"l2_rho_error": metric_l2_rho}, model,
        lambda x, y: vortex_exact_fn(x, y, 0.0), n_steps,
        farfield_state=farfield, defect_metric=defect_metric)
    return op, field, record


@dataclass
class FreeStreamReport:
    passed: bool
    max_rate: float
    drift: float
    worst_edges: list = dc_field(default_factory=list)


def run_free_stream(config: CaseConfig, model_kind: str = "advection",
                    n_steps: int = 100, corrupt=None) -> FreeStreamReport:
    """Constant-state preservation over ``n_steps``; pass iff the state
    drift stays below 1e-10.

    ``corrupt`` is a test hook (side, edge_pos, delta) that damages the p2p
    map before stepping; the report then localizes the offending edges.
    """
    if model_kind == "advection":
        model = AdvectionModel(velocity=(1.0, 0.0))
        state = 1.0
        farfield = np.array([1.0])
    else:
        model = EulerModel()
        state = model.conserved(1.0, 1.0, 0.0, 1.0)
        farfield = state
    op = DgOperator(build_case_mesh(config), config.p, config.q, model,
                    method=config.method, farfield_state=farfield)
    if corrupt is not None:
        side, edge_pos, delta = corrupt
        for handler in op.zone_handlers:
            handler.map.corrupt(op, side, edge_pos, delta)
    field = op.constant_field(state)
    max_rate = float(np.max(np.abs(op.rhs(field.coeffs, 0.0))))
    integ = TimeIntegratorConfig(dt=config.dt, n_steps=n_steps)
    field, record = run_simulation(op, field, integ)
    ref = op.constant_field(state)
    drift = float(np.max(np.abs(field.coeffs - ref.coeffs)))
    passed = drift <= 1e-10 and record.status == "ok"

    worst_edges = []
    if not passed and op.mesh.interface_zones:
        per_element = np.max(np.abs(field.coeffs - ref.coeffs), axis=(1, 2, 3))
        for zone in op.mesh.interface_zones:
            for eid in list(zone.left_edges) + list(zone.right_edges):
                worst_edges.append((int(eid), float(per_element[eid // 4])))
        worst_edges.sort(key=lambda kv: -kv[1])
        worst_edges = worst_edges[:8]
    report = FreeStreamReport(passed=passed, max_rate=max_rate, drift=drift,
                              worst_edges=worst_edges)
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        record.rows.append((0, 0.0, "max_rate", max_rate))
        record.rows.append((0, n_steps * config.dt, "drift", drift))
        emit_run(config, record)
        Path(out, run_stem(config) + ".freestream.json").write_text(
            json.dumps({"passed": passed, "max_rate": max_rate, "drift": drift,
                        "worst_edges": worst_edges}, indent=2) + "\n")
    return report


# ---------------------------------------------------------------------------
# timing table
# ---------------------------------------------------------------------------

def timing_study(p: int = 3, q_rule: str = "p+2", steps: int = 200,
                 methods=("conformal", "p2p", "mortar"), dt: float = 1e-3,
                 repeats: int = 1, out_dir=None) -> dict:
    """Short vortex runs per method for the per-step cost comparison.

    With ``repeats`` > 1 the methods run interleaved and each cell keeps the
    fastest repetition, which damps scheduling noise on shared machines.
    """
    records = {}
    for _ in range(repeats):
        for method in methods:
            config = CaseConfig(case="vortex", method=method, p=p, q_rule=q_rule,
                                nx=21, ny=21, dt=dt,
                                cycles=steps * dt / VORTEX_CYCLE_TIME,
                                sample_every=steps, out_dir=out_dir)
            _, _, record = run_vortex(config)
            key = (method, p, config.q)
            best = records.get(key)
            if best is None or record.timings["avg_step"] < best.timings["avg_step"]:
                records[key] = record
    table = emit_timing_table(records)
    if out_dir is not None:
        Path(out_dir, f"timing_P{p}.json").write_text(
            json.dumps(table["data"], indent=2, sort_keys=True) + "\n")
        Path(out_dir, f"timing_P{p}.txt").write_text(table["text"])
    return table


def emit_timing_table(records: dict) -> dict:
    """Rows = methods, columns = (P, Q) labels, cells = average per-step cost
    in seconds; ratios are relative to the conformal row.  Setup time is
    reported separately, never inside the per-step average."""
    if not records:
        raise ValueError("timing table needs at least one record")
    columns = sorted({f"P{p}Q{q}" for (_, p, q) in records})
    methods = []
    for (m, _, _) in records:
        if m not in methods:
            methods.append(m)
    data: dict = {"columns": columns, "avg_step": {}, "setup": {}, "ratio": {}}
    for (m, p, q), record in records.items():
        label = f"P{p}Q{q}"
        data["avg_step"].setdefault(m, {})[label] = record.timings["avg_step"]
        data["setup"].setdefault(m, {})[label] = record.timings["setup"]
    for m in methods:
        data["ratio"][m] = {}
        for label in columns:
            base = data["avg_step"].get("conformal", {}).get(label)
            cell = data["avg_step"].get(m, {}).get(label)
            data["ratio"][m][label] = (cell / base if base and cell else None)

    width = 12
    lines = ["Average cost per timestep (s); setup excluded",
             "method".ljust(width) + "".join(c.rjust(width) for c in columns)]
    for m in methods:
        cells = [f"{data['avg_step'][m].get(c, float('nan')):.6f}".rjust(width)
                 for c in columns]
        lines.append(m.ljust(width) + "".join(cells))
    lines.append("")
    lines.append("ratio vs conformal")
    for m in methods:
        cells = []
        for c in columns:
            r = data["ratio"][m].get(c)
            cells.append(("-" if r is None else f"{r:.2f}").rjust(width))
        lines.append(m.ljust(width) + "".join(cells))
    return {"data": data, "text": "\n".join(lines) + "\n"}
