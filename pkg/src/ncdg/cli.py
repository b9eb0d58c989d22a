"""Command-line interface for the benchmark harness and mesh generators."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .harness import CaseConfig
from .mesh import BoundarySpec, build_cartesian_mesh, build_shifted_interface_mesh
from .mesh_file import save_mesh


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(","))


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring CaseConfig")
    p.add_argument("--method", choices=("conformal", "mortar", "p2p"))
    p.add_argument("--p", type=int, dest="p")
    p.add_argument("--q", type=int)
    p.add_argument("--q-rule", choices=("p+2", "2p+2"), dest="q_rule")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--shift", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--cycles", type=float)
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--sample-every", type=int, dest="sample_every")
    p.add_argument("--out", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--mesh-file", dest="mesh_file")


def _case_config(args, case: str, **defaults) -> CaseConfig:
    overrides = {k: getattr(args, k, None) for k in CaseConfig.__dataclass_fields__
                 if k != "case"}
    if args.config:
        overrides["case"] = case
        return CaseConfig.from_file(args.config, **overrides)
    merged = dict(defaults)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return CaseConfig(case=case, **merged)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncdg",
        description="2D DG benchmarks comparing mortar and point-to-point "
                    "non-conformal interface handling")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convergence", help="advection h-convergence study")
    conv.add_argument("--grids", type=_int_list, default=None)
    conv.add_argument("--orders", type=_int_list, default=None)
    conv.add_argument("--methods", default="conformal,mortar,p2p")
    conv.add_argument("--q-rule", choices=("p+2", "2p+2"), dest="q_rule",
                      help="quadrature rule applied to every method")
    conv.add_argument("--dt", type=float, default=1e-3)
    conv.add_argument("--t-final", type=float, dest="t_final", default=1.0)
    conv.add_argument("--shift", type=float, default=0.5)
    conv.add_argument("--out", dest="out_dir")
    conv.add_argument("--threads", type=int, default=1)
    conv.add_argument("--profile", choices=("desk", "paper"), default="desk")

    gauss = sub.add_parser("gaussian", help="rotating-Gaussian decay study")
    _add_run_flags(gauss)
    gauss.add_argument("--profile", choices=("desk", "paper"))

    vort = sub.add_parser("vortex", help="isentropic-vortex error history")
    _add_run_flags(vort)
    vort.add_argument("--profile", choices=("desk", "paper"))
    vort.add_argument("--defect", action="store_true",
                      help="record the interface conservation defect per step")

    free = sub.add_parser("free-stream", help="constant-state preservation check")
    _add_run_flags(free)
    free.add_argument("--model", choices=("advection", "euler"),
                      default="advection")
    free.add_argument("--steps", type=int, default=100)

    timing = sub.add_parser("timing", help="per-step cost table on the vortex")
    timing.add_argument("--p", type=int, default=3)
    timing.add_argument("--q-rule", choices=("p+2", "2p+2"), dest="q_rule",
                        default="p+2")
    timing.add_argument("--steps", type=int, default=200)
    timing.add_argument("--out", dest="out_dir")

    mesh = sub.add_parser("mesh", help="write a benchmark mesh file")
    mesh.add_argument("--kind", choices=("cartesian", "shifted"), required=True)
    mesh.add_argument("--domain", default="-5,5,-5,5",
                      help="x0,x1,y0,y1 (comma separated)")
    mesh.add_argument("--nx", type=int, required=True)
    mesh.add_argument("--ny", type=int, required=True)
    mesh.add_argument("--columns", type=_int_list,
                      help="element counts per column (shifted kind)")
    mesh.add_argument("--shift", type=float, default=0.5)
    mesh.add_argument("--boundary-x", default="periodic",
                      choices=("periodic", "dirichlet0", "farfield"))
    mesh.add_argument("--boundary-y", default="periodic",
                      choices=("periodic", "dirichlet0", "farfield"))
    mesh.add_argument("--out", required=True)
    return parser


def cmd_convergence(args) -> int:
    profile = harness.DESK_PROFILE if args.profile == "desk" else harness.PAPER_PROFILE
    grids = args.grids or profile["convergence"]["grids"]
    orders = args.orders or profile["convergence"]["orders"]
    methods = tuple(args.methods.split(","))
    q_rules = ({m: args.q_rule for m in methods} if args.q_rule else None)
    study = harness.run_convergence(grids=grids, orders=orders, methods=methods,
                                    q_rules=q_rules, dt=args.dt,
                                    t_final=args.t_final, shift=args.shift,
                                    out_dir=args.out_dir, threads=args.threads)
    for (method, p), entry in sorted(study.items()):
        print(f"{method} P={p}: rate {entry['rate']:.3f}  "
              f"errors {['%.3e' % e if e is not None else 'diverged' for e in entry['errors']]}")
    return 0


def cmd_gaussian(args) -> int:
    defaults = {"nx": 16, "ny": 16, "p": 4}
    if args.profile == "paper":
        defaults["cycles"] = harness.PAPER_PROFILE["gaussian"]["cycles"]
    config = _case_config(args, "gaussian", **defaults)
    peaks, record = harness.run_gaussian(config)
    for k, peak in enumerate(peaks):
        print(f"cycle {k}: peak {peak:.6f}")
    print(f"status: {record.status}")
    return 0 if record.status == "ok" else 2


def cmd_vortex(args) -> int:
    defaults = {"nx": 21, "ny": 21, "p": 5, "q_rule": "2p+2"}
    if args.profile == "paper":
        defaults["cycles"] = harness.PAPER_PROFILE["vortex"]["cycles"]
    config = _case_config(args, "vortex", **defaults)
    _, _, record = harness.run_vortex(config, defect_metric=args.defect)
    for _, t, name, value in record.rows:
        if name == "l2_rho_error":
            print(f"cycle {t / harness.VORTEX_CYCLE_TIME:.2f}: L2rho {value:.6e}")
    if record.status == "diverged":
        print(f"diverged at t={record.diverged_at}")
        return 2
    return 0


def cmd_free_stream(args) -> int:
    config = _case_config(args, "free-stream", nx=6, ny=6, p=3, method="mortar")
    report = harness.run_free_stream(config, model_kind=args.model,
                                     n_steps=args.steps)
    print(json.dumps({"passed": report.passed, "max_rate": report.max_rate,
                      "drift": report.drift,
                      "worst_edges": report.worst_edges}, indent=2))
    return 0 if report.passed else 1


def cmd_timing(args) -> int:
    table = harness.timing_study(p=args.p, q_rule=args.q_rule, steps=args.steps,
                                 out_dir=args.out_dir)
    print(table["text"])
    return 0


def cmd_mesh(args) -> int:
    domain = tuple(float(tok) for tok in args.domain.split(","))
    boundary = BoundarySpec(x=args.boundary_x, y=args.boundary_y)
    if args.kind == "cartesian":
        mesh = build_cartesian_mesh(domain, args.nx, args.ny, boundary)
    else:
        columns = args.columns or harness.three_columns(args.nx)
        mesh = build_shifted_interface_mesh(domain, columns, args.ny,
                                            args.shift, boundary)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_elements} elements, "
          f"{len(mesh.interface_zones)} interface zones")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "convergence": cmd_convergence,
        "gaussian": cmd_gaussian,
        "vortex": cmd_vortex,
        "free-stream": cmd_free_stream,
        "timing": cmd_timing,
        "mesh": cmd_mesh,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
