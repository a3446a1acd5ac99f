"""Command-line entry point: run experiments, verify and synthesize gains,
list presets, audit Jacobian bounds.

Artifacts per run: trajectory.csv (fixed column order), summary.json,
certificate.json (when an observer is configured), and plotdata/*.csv with
the state-space, weight, and control curves.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import lmi
from .config import ConfigError, RunConfig, build_problem, load_config
from .model import audit_jacobian_bounds
from .presets import PRESET_NAMES, preset
from .safety import lipschitz_audit
from .sim import run, safety_report

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_USAGE = 2


def _load_run_config(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("pass either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        if args.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {args.preset!r}; "
                              f"known: {', '.join(PRESET_NAMES)}")
        cfg = preset(args.preset)
    else:
        raise ConfigError("a --config file or a --preset name is required")
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.horizon is not None:
        overrides["T"] = args.horizon
    if args.monitor is not None:
        overrides["monitor_action"] = args.monitor
    if overrides:
        cfg = cfg.replace_sim(**overrides)
    return cfg


def _write_plotdata(out: Path, log):
    pd = out / "plotdata"
    pd.mkdir(exist_ok=True)
    with open(pd / "state_space.csv", "w") as f:
        f.write("x1,x2,xhat1,xhat2\n")
        for i in range(log.size):
            f.write(",".join(repr(float(v))
                             for v in (*log.x[i], *log.x_hat[i])) + "\n")
    with open(pd / "weights.csv", "w") as f:
        f.write("t," + ",".join(f"w{i+1}" for i in range(log.L)) + "\n")
        for i in range(log.size):
            f.write(",".join(repr(float(v))
                             for v in (log.t[i], *log.weights[i])) + "\n")
    with open(pd / "control.csv", "w") as f:
        f.write("t," + ",".join(f"u{i+1}" for i in range(log.m)) + "\n")
        for i in range(log.size):
            f.write(",".join(repr(float(v))
                             for v in (log.t[i], *log.u[i])) + "\n")


def cmd_run(args) -> int:
    cfg = _load_run_config(args)
    out = Path(args.out)
    problem, synth_cert = build_problem(cfg)
    out.mkdir(parents=True, exist_ok=True)

    cert_file = None
    if cfg.observer.enabled:
        problem_lmi = lmi.LmiProblem.from_model(problem.model,
                                                problem.gains.alpha)
        g = problem.gains
        certs = {mode: lmi.verify_gains(problem_lmi, g.P, g.R_lmi, g.l1, g.l2,
                                        mode=mode).to_json_dict()
                 for mode in ("theta_identity", "all_vertices")}
        if synth_cert is not None:
            certs["synthesis"] = synth_cert.to_json_dict()
        cert_file = out / "certificate.json"
        cert_file.write_text(json.dumps(certs, indent=2, sort_keys=True))

    try:
        log, summary = run(problem)
    except ValueError as exc:
        print(json.dumps({"error": "run_error", "reason": str(exc)}))
        return EXIT_RUN_FAILED
    summary.certificate_file = cert_file.name if cert_file else None
    log.to_csv(out / "trajectory.csv")
    _write_plotdata(out, log)

    payload = summary.to_json_dict()
    report = safety_report(problem, log)
    payload["safety"] = report.to_json_dict() if report else None
    (out / "summary.json").write_text(json.dumps(payload, indent=2,
                                                 sort_keys=True))
    if summary.ok:
        print(f"run complete: {log.size} records, min h = {summary.min_h:.6g}, "
              f"terminal |x| = {np.linalg.norm(summary.terminal_x):.6g}")
        return EXIT_OK
    print(json.dumps({"error": "run_aborted", "reason": summary.abort_reason}))
    return EXIT_RUN_FAILED


def cmd_verify_lmi(args) -> int:
    cfg = _load_run_config(args)
    problem, _ = build_problem(cfg)
    g = problem.gains
    problem_lmi = lmi.LmiProblem.from_model(problem.model, g.alpha)
    certs = {}
    for mode in ("theta_identity", "all_vertices"):
        cert = lmi.verify_gains(problem_lmi, g.P, g.R_lmi, g.l1, g.l2, mode=mode)
        certs[mode] = cert.to_json_dict()
        verdict = "feasible" if cert.feasible else "infeasible"
        print(f"{mode}: {verdict} (max eigenvalue {cert.max_eigenvalue:.6g}, "
              f"|l1C| = {cert.norm_l1C:.4g}, |l2C| = {cert.norm_l2C:.4g})")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "certificate.json").write_text(json.dumps(certs, indent=2,
                                                     sort_keys=True))
    return EXIT_OK


def cmd_synthesize(args) -> int:
    cfg = _load_run_config(args)
    model = cfg.model.build()
    problem_lmi = lmi.LmiProblem.from_model(model, cfg.observer.alpha)
    params = lmi.SearchParams(budget=args.budget, step=args.step,
                              seed=args.seed, tol=args.tol)
    P, l1, l2, l3, cert = lmi.synthesize_gains(problem_lmi, search=params,
                                               mode=args.mode)
    verdict = "feasible" if cert.feasible else "infeasible"
    print(f"synthesis ({args.mode}): {verdict}, "
          f"max eigenvalue {cert.max_eigenvalue:.6g}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "gains": {"P": P.tolist(), "l1": l1.ravel().tolist(),
                  "l2": l2.ravel().tolist(), "l3": l3.ravel().tolist()},
        "certificate": cert.to_json_dict(),
    }
    (out / "synthesis.json").write_text(json.dumps(payload, indent=2,
                                                   sort_keys=True))
    return EXIT_OK if cert.feasible else EXIT_RUN_FAILED


def cmd_presets(args) -> int:
    if args.name:
        cfg = preset(args.name)
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True, default=str))
    else:
        for name in PRESET_NAMES:
            print(name)
    return EXIT_OK


def cmd_audit_bounds(args) -> int:
    cfg = _load_run_config(args)
    model = cfg.model.build()
    report = audit_jacobian_bounds(model, n_grid=args.grid, tol=args.tol)
    spec = cfg.safety.build()
    if spec is not None:
        report["lipschitz"] = lipschitz_audit(spec, model.domain, seed=args.seed)
        if not report["lipschitz"]["ok"]:
            print("warning: configured ell is smaller than the observed "
                  f"variation ratio {report['lipschitz']['observed_ratio_max']:.4g}",
                  file=sys.stderr)
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bounds_audit.json").write_text(
            json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report["ok"] else EXIT_RUN_FAILED


def _add_common(p):
    p.add_argument("--config", help="path to a JSON run configuration")
    p.add_argument("--preset", help=f"preset name ({', '.join(PRESET_NAMES)})")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--dt", type=float, default=None, help="override step size")
    p.add_argument("--horizon", type=float, default=None,
                   help="override horizon T")
    p.add_argument("--monitor", choices=("warn", "abort"), default=None,
                   help="override monitor action")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for sampled audits and synthesis")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safeadp",
        description="Safe output-feedback model-based RL simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a closed-loop experiment")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-lmi", help="verify observer gains")
    _add_common(p)
    p.set_defaults(func=cmd_verify_lmi)

    p = sub.add_parser("synthesize", help="search for feasible observer gains")
    _add_common(p)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=lmi.FEASIBILITY_TOL)
    p.add_argument("--mode", choices=("theta_identity", "all_vertices"),
                   default="theta_identity")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("presets", help="list presets or dump one as JSON")
    p.add_argument("--name", default=None)
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("audit-bounds", help="finite-difference Jacobian audit")
    _add_common(p)
    p.add_argument("--grid", type=int, default=21, help="samples per axis")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_audit_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError) as exc:
        print(json.dumps({"error": "config_error", "reason": str(exc)}),
              file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(json.dumps({"error": "io_error", "reason": str(exc)}),
              file=sys.stderr)
        return EXIT_RUN_FAILED


if __name__ == "__main__":
    sys.exit(main())
