"""Command-line front end.

Subcommands: riemann, riemann-table, simulate, capillary, steady, converge,
contract, discrepancy, validate.  Runs write one directory each: a manifest
with content hashes first, then snapshot CSVs (columns x,u, full double
precision) and a JSON summary.  Identical configuration and seed produce
byte-identical outputs.

Exit codes: 0 success/pass, 1 verdict failure, 2 usage or configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (RunConfig, build_boundaries, build_grid, build_initial,
                     build_mode, build_model, load_config, parse_config,
                     snapshot_times)
from .diagnostics import (contraction_suite, mode_discrepancy_report,
                          vanishing_viscosity_study)
from .errors import (CflError, ConfigError, DomainError, ModelAssumptionError,
                     NumericalError, RegimeError)
from .flux_model import FluxModel, validate_H1, validate_H2
from .hyperbolic import entropy_residual_audit, run_hyperbolic
from .parabolic import EpsProblem, energy_estimate, run_parabolic
from .riemann import riemann_case_table, solve_riemann
from .steady import (build_kappa_lambda, build_sub_super, build_y_eta,
                     build_z_eta)

_EXIT_PASS = 0
_EXIT_VERDICT = 1
_EXIT_USAGE = 2
_EXIT_NUMERICS = 3


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv_field(x: float) -> str:
    return format(float(x), ".17e")


def snapshot_csv(x: np.ndarray, u: np.ndarray) -> str:
    lines = ["x,u"]
    lines.extend(f"{_csv_field(a)},{_csv_field(b)}" for a, b in zip(x, u))
    return "\n".join(lines) + "\n"


def write_outputs(files: dict, out_dir: str, force: bool = False) -> dict:
    """Write a run directory: manifest.json first, then the named files.

    ``files`` maps names to text content.  Existing run directories are not
    overwritten unless forced.  Returns the manifest (names, sha256, sizes).
    """
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise ConfigError(
            f"output directory {out} is not empty; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": {"name": "twophase1d", "version": __version__},
        "files": [
            {
                "name": name,
                "sha256": hashlib.sha256(content.encode()).hexdigest(),
                "bytes": len(content.encode()),
            }
            for name, content in sorted(files.items())
        ],
    }
    (out / "manifest.json").write_text(_json(manifest), encoding="utf-8")
    for name, content in files.items():
        (out / name).write_text(content, encoding="utf-8")
    return manifest


def _trajectory_files(traj, cfg_dict, extra_summary=None) -> dict:
    grid = traj.grid
    files = {}
    for k in range(len(traj)):
        files[f"snapshot_{k:03d}.csv"] = snapshot_csv(grid.centers,
                                                      traj.fields[k])
    mass = [
        {"t": traj.times[k], "total": traj.mass(k),
         "left": traj.mass(k, (grid.x_min, 0.0)),
         "right": traj.mass(k, (0.0, grid.x_max))}
        for k in range(len(traj))
    ]
    summary = {
        "tool": {"name": "twophase1d", "version": __version__},
        "config": cfg_dict,
        "mode": traj.mode_tag,
        "eps": traj.eps,
        "snapshot_times": list(traj.times),
        "mass_series": mass,
        "interface_flux_series": {
            "t": list(traj.step_times),
            "dt": list(traj.step_dts),
            "flux": list(traj.interface_flux),
        },
        "boundary_flux_series": {
            "left": list(traj.left_boundary_flux),
            "right": list(traj.right_boundary_flux),
        },
        "tie_breaks": traj.tie_breaks,
    }
    if extra_summary:
        summary.update(extra_summary)
    files["summary.json"] = _json(summary)
    return files


def _load_cfg(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    preset = getattr(args, "preset", None) or "TF1"
    return parse_config(f"model: {{preset: {preset}}}\n")


def _emit(files: dict, args, default_name: str) -> int:
    if getattr(args, "out", None):
        write_outputs(files, args.out, force=getattr(args, "force", False))
        print(f"wrote {len(files) + 1} files to {args.out}")
    else:
        sys.stdout.write(files[default_name])
    return _EXIT_PASS


# -- subcommands ---------------------------------------------------------------


def cmd_riemann(args) -> int:
    cfg = _load_cfg(args)
    model = build_model(cfg)
    mode = build_mode(cfg) if args.mode is None else _mode_from_str(args.mode)
    traces = solve_riemann(model, mode, args.ul, args.ur)
    sys.stdout.write(_json(traces.as_dict()))
    return _EXIT_PASS


def _mode_from_str(text: str):
    from .riemann import CouplingMode

    if text == "nonclassical":
        return CouplingMode.non_classical()
    if text == "optimal_entropy":
        return CouplingMode.optimal_entropy()
    if text.startswith("flux:"):
        return CouplingMode.prescribed_flux(float(text.split(":", 1)[1]))
    raise ConfigError(f"unknown mode {text!r}")


def cmd_riemann_table(args) -> int:
    cfg = _load_cfg(args)
    model = build_model(cfg)
    points = None
    if args.dense:
        n = args.dense
        us = np.linspace(0.0, 1.0, n)
        points = [(ul, ur) for ul in us for ur in us]
    rows = riemann_case_table(model, points=points)
    lines = ["ul,ur,case,u1,u2,flux,classification"]
    for r in rows:
        lines.append(
            f"{_csv_field(r['ul'])},{_csv_field(r['ur'])},{r['case']},"
            f"{_csv_field(r['u1'])},{_csv_field(r['u2'])},"
            f"{_csv_field(r['flux'])},{r['classification']}")
    files = {"riemann_table.csv": "\n".join(lines) + "\n"}
    return _emit(files, args, "riemann_table.csv")


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    if args.t_end is not None:
        cfg.t_end = args.t_end
    model = build_model(cfg)
    grid = build_grid(cfg)
    mode = build_mode(cfg)
    u0 = build_initial(cfg, grid)
    bc = build_boundaries(cfg)
    audit_kappas = ([float(k) for k in args.audit.split(",")]
                    if args.audit else None)
    traj = run_hyperbolic(model, mode, grid, u0, cfg.t_end,
                          snapshot_times=snapshot_times(cfg), bc=bc,
                          cfl=cfg.cfl,
                          record_every_step=audit_kappas is not None)
    extra = {"seed": cfg.seed, "audit": None}
    if audit_kappas:
        rep = entropy_residual_audit(model, traj, audit_kappas,
                                     straddle_interface=True, bc=bc)
        extra["audit"] = {
            "kappas": rep.kappa_values,
            "worst_interior_production": rep.worst_interior,
            "worst_interface_production": rep.worst_interface,
            "interior_ok": rep.interior_ok,
        }
    files = _trajectory_files(traj, cfg.to_dict(), extra)
    out = args.out or cfg.output
    if out:
        write_outputs(files, out, force=args.force)
        print(f"wrote {len(files) + 1} files to {out}")
    else:
        sys.stdout.write(files["summary.json"])
    return _EXIT_PASS


def cmd_capillary(args) -> int:
    cfg = _load_cfg(args)
    if args.t_end is not None:
        cfg.t_end = args.t_end
    if args.eps is not None:
        cfg.eps = args.eps
    if cfg.eps is None:
        raise ConfigError("capillary runs need eps (config key or --eps)")
    model = build_model(cfg)
    grid = build_grid(cfg)
    u0 = build_initial(cfg, grid)
    bc = build_boundaries(cfg)
    interface_mode = "graph"
    if args.interface_mode and args.interface_mode != "graph":
        interface_mode = ("flux", float(args.interface_mode.split(":", 1)[1]))
    problem = EpsProblem(model, cfg.eps, interface_mode=interface_mode)
    traj = run_parabolic(problem, grid, u0, cfg.t_end,
                         snapshot_times=snapshot_times(cfg), bc=bc,
                         cfl=cfg.cfl)
    E1, E2 = energy_estimate(problem, traj)
    files = _trajectory_files(traj, cfg.to_dict(), {
        "seed": cfg.seed,
        "energy_estimate": {"left": E1, "right": E2},
        "interface_traces": [list(t) for t in traj.interface_traces],
    })
    out = args.out or cfg.output
    if out:
        write_outputs(files, out, force=args.force)
        print(f"wrote {len(files) + 1} files to {out}")
    else:
        sys.stdout.write(files["summary.json"])
    return _EXIT_PASS


def cmd_steady(args) -> int:
    cfg = _load_cfg(args)
    model = build_model(cfg)
    profiles = []
    if args.kind == "y":
        profiles.append(build_y_eta(model, args.eta))
    elif args.kind == "z":
        profiles.append(build_z_eta(model, args.eta))
    elif args.kind in ("sub", "super"):
        lo, hi = build_sub_super(model, args.eta, args.eps)
        profiles.append(lo if args.kind == "sub" else hi)
    elif args.kind == "kappa":
        profiles.append(build_kappa_lambda(model, args.lam, eps=args.eps))
    else:
        raise ConfigError(f"unknown steady profile kind {args.kind!r}")
    files = {}
    report = []
    for prof in profiles:
        lines = [f"x,{'y' if prof.variable == 'potential' else 'u'}"]
        lines.extend(f"{_csv_field(a)},{_csv_field(b)}"
                     for a, b in zip(prof.x, prof.values))
        files[f"profile_{prof.kind}.csv"] = "\n".join(lines) + "\n"
        report.append({
            "kind": prof.kind, "eta": prof.eta, "eps": prof.eps,
            "variable": prof.variable, "residual": prof.residual,
            "monotone": prof.monotone_nondecreasing(),
            "limits": prof.limits,
        })
    files["residuals.json"] = _json({"profiles": report})
    return _emit(files, args, "residuals.json")


def cmd_converge(args) -> int:
    cfg = _load_cfg(args)
    if args.t_end is not None:
        cfg.t_end = args.t_end
    model = build_model(cfg)
    grid = build_grid(cfg)
    u0 = build_initial(cfg, grid)
    eps_list = [float(e) for e in args.eps_list.split(",")]
    report = vanishing_viscosity_study(model, u0, eps_list, grid, cfg.t_end,
                                       n_snapshots=args.snapshots)
    lines = ["eps,l1_distance"]
    lines.extend(f"{_csv_field(e)},{_csv_field(d)}"
                 for e, d in zip(report.eps_list, report.distances))
    files = {
        "convergence.csv": "\n".join(lines) + "\n",
        "verdict.json": _json({
            "passed": report.passed, "regime": report.regime,
            "reference_mode": report.reference_mode,
            "eps": report.eps_list, "distances": report.distances,
            "seed": cfg.seed,
        }),
    }
    _emit(files, args, "verdict.json")
    return _EXIT_PASS if report.passed else _EXIT_VERDICT


def cmd_contract(args) -> int:
    cfg = _load_cfg(args)
    if args.t_end is not None:
        cfg.t_end = args.t_end
    model = build_model(cfg)
    grid = build_grid(cfg)
    seed = args.seed if args.seed is not None else cfg.seed
    suite = contraction_suite(model, grid, cfg.t_end, args.pairs, seed,
                              eps=args.eps)
    files = {"verdict.json": _json({
        "passed": suite.passed,
        "pairs": args.pairs,
        "seed": seed,
        "eps": args.eps,
        "max_increase": max(r.max_increase for r in suite.reports),
        "series": [list(r.series) for r in suite.reports],
    })}
    _emit(files, args, "verdict.json")
    return _EXIT_PASS if suite.passed else _EXIT_VERDICT


def cmd_discrepancy(args) -> int:
    cfg = _load_cfg(args)
    if args.t_end is not None:
        cfg.t_end = args.t_end
    model = build_model(cfg)
    grid = build_grid(cfg)
    u0 = build_initial(cfg, grid)
    rep = mode_discrepancy_report(model, u0, grid, cfg.t_end)
    files = {"verdict.json": _json({
        "passed": rep.passed, "l1_gap": rep.l1_gap, "flux_gap": rep.flux_gap,
        "floor": rep.floor, "regime": rep.regime, "seed": cfg.seed,
    })}
    _emit(files, args, "verdict.json")
    return _EXIT_PASS if rep.passed else _EXIT_VERDICT


def cmd_validate(args) -> int:
    cfg = _load_cfg(args)
    model = build_model(cfg)
    h1 = validate_H1(model)
    result = {
        "model": repr(model),
        "H1": {"passed": h1.passed, "message": h1.message,
               "u_star": {s: h1.sides[s].get("u_star") for s in (1, 2)}},
        "H2": None,
    }
    if h1.passed:
        h2 = validate_H2(model)
        result["H2"] = {"passed": h2.passed, "m": h2.m, "R": h2.R,
                        "alpha": h2.alpha, "message": h2.message}
    sys.stdout.write(_json(result))
    ok = h1.passed and (result["H2"] is None or result["H2"]["passed"])
    return _EXIT_PASS if ok else _EXIT_VERDICT


def _add_common(p, config=True, out=True):
    if config:
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--preset", help="named model preset (default TF1)")
    if out:
        p.add_argument("--out", help="output directory")
        p.add_argument("--force", action="store_true",
                       help="overwrite an existing output directory")
    p.add_argument("--seed", type=int, default=None, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twophase1d",
        description=("1-D two-phase flow across a rock interface: exact "
                     "interface Riemann solutions, finite-volume solvers, "
                     "and capillarity-regularized runs."))
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("riemann", help="exact interface Riemann traces")
    p.add_argument("--ul", type=float, required=True)
    p.add_argument("--ur", type=float, required=True)
    p.add_argument("--mode", default=None)
    _add_common(p, out=False)
    p.set_defaults(func=cmd_riemann)

    p = sub.add_parser("riemann-table", help="case table across all regimes")
    p.add_argument("--dense", type=int, default=0,
                   help="emit an N x N state grid instead of the 6 cases")
    _add_common(p)
    p.set_defaults(func=cmd_riemann_table)

    p = sub.add_parser("simulate", help="sharp-interface finite-volume run")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--audit", default=None,
                   help="comma-separated kappa list for the entropy audit")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("capillary", help="capillarity-regularized run")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--interface-mode", default="graph",
                   help="graph or flux:<value>")
    p.add_argument("--t-end", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_capillary)

    p = sub.add_parser("steady", help="steady profile construction")
    p.add_argument("--kind", required=True,
                   choices=["y", "z", "sub", "super", "kappa"])
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("converge", help="vanishing-capillarity study")
    p.add_argument("--eps-list", required=True,
                   help="comma-separated decreasing list")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--snapshots", type=int, default=21)
    _add_common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("contract", help="seeded L1-contraction suite")
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--eps", type=float, default=None,
                   help="run the capillary solver at this eps instead")
    p.add_argument("--t-end", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_contract)

    p = sub.add_parser("discrepancy", help="gap between the two couplings")
    p.add_argument("--t-end", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_discrepancy)

    p = sub.add_parser("validate", help="structural flux model checks")
    _add_common(p, out=False)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except (NumericalError, CflError, ModelAssumptionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
