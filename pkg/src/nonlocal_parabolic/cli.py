"""Command-line entry point.

Exit codes: 0 when every requested check passes, 1 on errors or failed
checks, 2 when the outer fixed-point iteration does not converge.
"""
import argparse
import itertools
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import fixedpoint as fp
from . import io
from .config import ConfigError, RunConfig
from .elliptic import solve_V
from .grid import norm_l2
from .oracle import monolithic_solve, scalar_solve
from .parabolic import solve_U
from .potential import builtin, validate_assumption

log = logging.getLogger("nonlocal_parabolic")

OUTPUT_ENV = "NONLOCAL_PARABOLIC_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_NONCONVERGED = 0, 1, 2


def output_dir(cfg: RunConfig, override: str | None) -> Path:
    out = override or os.environ.get(OUTPUT_ENV) or cfg.output_dir
    path = Path(out)
    if not path.is_absolute() and override is None and OUTPUT_ENV not in os.environ:
        path = Path(cfg.base_dir) / path
    return path


def problem_spec(cfg: RunConfig, T: float | None = None) -> fp.ProblemSpec:
    g = cfg.grid()
    return fp.ProblemSpec(
        grid=g,
        potential=cfg.build_potential(),
        u0=cfg.build_field("u0", g),
        T=cfg.T if T is None else T,
        nt=cfg.nt,
        tol=cfg.outer.tol,
        max_iter=cfg.outer.max_iter,
        alpha=cfg.outer.alpha,
        elliptic=cfg.elliptic_options(),
    )


def problem_summary(spec: fp.ProblemSpec) -> dict:
    g = spec.grid
    return {
        "dim": g.dim, "extents": list(g.extents), "nodes": list(g.nodes), "potential": spec.potential.name,
        "T": spec.T, "nt": spec.nt, "outer_tol": spec.tol, "alpha": spec.alpha,
        "u0_l2": spec.radius, "u0_inf": float(np.max(np.abs(spec.u0))) if spec.u0.size else 0.0,
    }


def write_snapshots(out: Path, traj, times) -> list[str]:
    indices = sorted({traj.nearest_index(t) for t in times} | {traj.nt})
    names = []
    for j in indices:
        name = f"u_step{j:05d}.csv"
        io.write_field_csv(out / name, traj.grid, traj.states[j])
        names.append(name)
    return names


def solution_checks(sol: fp.Solution, cfg: RunConfig) -> dict:
    par = sol.parabolic_report
    res = fp.residual_weak_form(sol)
    energy_excess = max(c.lhs - c.rhs for c in par.energy)
    mp = par.max_principle
    return {
        "lemma31": {k: b.to_dict() for k, b in sol.elliptic_report.bounds.items()},
        "energy": {"max_violation": energy_excess, "atol": cfg.slack.energy_atol,
                   "pass": energy_excess <= cfg.slack.energy_atol},
        "max_principle": {"lhs": mp.lhs, "rhs": mp.rhs,
                          "pass": mp.lhs <= mp.rhs + cfg.slack.max_principle_atol},
        "self_map": fp.psi_self_map_check(sol, cfg.slack.self_map_rtol),
        "weak_residual": {"value": res, "tol": cfg.slack.weak_residual, "pass": res <= cfg.slack.weak_residual},
        "aggregate": fp.aggregate_consistency(sol),
    }


def checks_passed(checks: dict) -> bool:
    ok = all(b["pass"] for b in checks["lemma31"].values())
    return ok and all(v["pass"] for k, v in checks.items() if k not in ("lemma31", "aggregate"))


def cmd_solve(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.starts is not None:
        cfg.starts = args.starts
    if args.seed is not None:
        cfg.seed = args.seed
    spec = problem_spec(cfg)
    out = output_dir(cfg, args.output_dir)
    cert = fp.certify_uniqueness(spec)
    report = {"problem": problem_summary(spec), "certificate": cert.to_dict()}

    if cfg.starts > 1:
        ms = fp.multistart(spec, cfg.starts, cfg.seed, workers=args.workers)
        sols = ms.converged
        pairs = [fp.check_gronwall_51(a, b, cert, cfg.slack.gronwall_atol).to_dict()
                 for a, b in itertools.combinations(sols, 2)]
        report["multistart"] = {
            "starts": cfg.starts, "seed": cfg.seed, "converged": len(sols),
            "dispersion": ms.dispersion,
            "runs": [{"start_l2": norm_l2(spec.grid, w0),
                      "iterations": None if s is None else s.iterations,
                      "converged": s is not None, "error": e}
                     for w0, s, e in zip(ms.starts, ms.solutions, ms.errors)],
            "gronwall": pairs,
        }
        failed = len(sols) < cfg.starts
        sol = sols[0] if sols else None
        history = sol.history if sol else []
    else:
        try:
            sol = fp.solve(spec)
            failed = False
            history = sol.history
        except fp.OuterNonConvergence as exc:
            sol, failed, history = None, True, exc.history

    report["converged"] = not failed
    report["history"] = history
    passed = False
    if sol is not None:
        report["iterations"] = sol.iterations
        report["contraction_ratio"] = sol.contraction_ratio()
        checks = solution_checks(sol, cfg)
        report["checks"] = checks
        passed = checks_passed(checks) and all(p["pass"] for p in report.get("multistart", {}).get("gronwall", []))
        report["files"] = write_snapshots(out, sol.trajectory, cfg.snapshot_times) + ["v.csv", "w_star.csv"]
        io.write_field_csv(out / "v.csv", spec.grid, sol.v)
        io.write_field_csv(out / "w_star.csv", spec.grid, sol.w_star)
    report["passed"] = passed
    io.write_json(out / "report.json", report)
    if failed:
        print(f"outer iteration did not converge; history in {out / 'report.json'}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK if passed else EXIT_FAIL


def cmd_solve_elliptic(args) -> int:
    cfg = RunConfig.load(args.config)
    g = cfg.grid()
    out = output_dir(cfg, args.output_dir)
    v, rep = solve_V(g, cfg.build_potential(), cfg.build_field("f", g), cfg.elliptic_options())
    io.write_field_csv(out / "v.csv", g, v)
    io.write_json(out / "elliptic_report.json", rep.to_dict())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_solve_parabolic(args) -> int:
    cfg = RunConfig.load(args.config)
    g = cfg.grid()
    out = output_dir(cfg, args.output_dir)
    zeta = cfg.build_field("zeta", g)
    traj, rep = solve_U(g, zeta, cfg.build_field("u0", g), cfg.T, cfg.nt)
    for c in rep.energy:
        c.atol = cfg.slack.energy_atol
    rep.max_principle.atol = cfg.slack.max_principle_atol
    files = write_snapshots(out, traj, cfg.snapshot_times)
    io.write_json(out / "parabolic_report.json", {**rep.to_dict(), "files": files})
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_oracle(args) -> int:
    cfg = RunConfig.load(args.config)
    out = output_dir(cfg, args.output_dir)
    phi = cfg.build_potential()
    if args.mode == "scalar":
        s = scalar_solve(phi, cfg.scalar.u0, cfg.T)
        result = {"mode": "scalar", "potential": phi.name, "u0": s.u0, "T": s.T, "V": s.V, "c": s.c,
                  "terminal": s.terminal}
    else:
        spec = problem_spec(cfg)
        traj = monolithic_solve(spec.grid, phi, spec.u0, spec.T, spec.nt)
        result = {"mode": "monolithic", "problem": problem_summary(spec),
                  "terminal_l2": norm_l2(spec.grid, traj.states[-1]),
                  "terminal": list(traj.states[-1])}
        if args.compare:
            sol = fp.solve(spec)
            result["fixedpoint_distance"] = max(
                norm_l2(spec.grid, a - b) for a, b in zip(traj.states, sol.trajectory.states))
    io.write_json(out / f"oracle_{args.mode}.json", result)
    sys.stdout.write(io.dumps(result))
    return EXIT_OK


def cmd_validate_potential(args) -> int:
    try:
        a, b = (float(x) for x in args.interval.split(","))
    except ValueError:
        raise ConfigError(f"--interval: expected 'a,b', got {args.interval!r}") from None
    rep = validate_assumption(builtin(args.name), (a, b), args.samples)
    sys.stdout.write(io.dumps(rep.to_dict()))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_certify(args) -> int:
    cfg = RunConfig.load(args.config)
    cert = fp.certify_uniqueness(problem_spec(cfg))
    sys.stdout.write(io.dumps(cert.to_dict()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    out = output_dir(cfg, args.output_dir)
    starts = args.starts if args.starts is not None else max(cfg.starts, 3)
    rows = ["T,MKT2,certified,converged,iterations,dispersion"]
    for T in (float(x) for x in args.T_list.split(",")):
        spec = problem_spec(cfg, T)
        cert = fp.certify_uniqueness(spec)
        try:
            sol = fp.solve(spec)
            converged, iters = True, sol.iterations
        except fp.OuterNonConvergence as exc:
            converged, iters = False, len(exc.history)
        disp = fp.multistart(spec, starts, cfg.seed, workers=args.workers).dispersion
        rows.append(",".join([io.fmt(T), io.fmt(cert.product), str(cert.certified).lower(),
                              str(converged).lower(), str(iters), io.fmt(disp)]))
    text = "\n".join(rows) + "\n"
    io.atomic_write(out / "sweep.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def render_report(report: dict) -> str:
    """Fixed-layout text table of a solve report."""
    lines = [f"{'iteration':>9}  {'update_norm':>24}"]
    for k, h in enumerate(report.get("history", []), start=1):
        lines.append(f"{k:>9}  {io.fmt(h):>24}")
    checks = report.get("checks")
    if checks:
        lines.append("")
        lines.append(f"{'check':<20}  {'lhs':>24}  {'rhs':>24}  {'pass':>5}")
        rows = [(f"lemma31.{k}", b["lhs"], b["rhs"], b["pass"]) for k, b in checks.get("lemma31", {}).items()]
        if "energy" in checks:
            rows.append(("energy", checks["energy"]["max_violation"], checks["energy"]["atol"], checks["energy"]["pass"]))
        for key in ("max_principle", "self_map"):
            if key in checks:
                rows.append((key, checks[key]["lhs"], checks[key]["rhs"], checks[key]["pass"]))
        if "weak_residual" in checks:
            c = checks["weak_residual"]
            rows.append(("weak_residual", c["value"], c["tol"], c["pass"]))
        for name, lhs, rhs, ok in rows:
            lines.append(f"{name:<20}  {io.fmt(lhs):>24}  {io.fmt(rhs):>24}  {'yes' if ok else 'no':>5}")
    cert = report.get("certificate")
    if cert:
        lines.append("")
        lines.append(f"certificate: M={io.fmt(cert['M'])} K={io.fmt(cert['K'])} T={io.fmt(cert['T'])} "
                     f"MKT^2={io.fmt(cert['MKT2'])} certified={'yes' if cert['certified'] else 'no'}")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    report = json.loads(Path(args.report).read_text())
    if not isinstance(report, dict):
        raise ValueError("report must be a JSON object")
    sys.stdout.write(render_report(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-parabolic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--config", required=True)
        p.add_argument("--output-dir", default=None)
        p.set_defaults(func=fn)
        return p

    p = with_config("solve", cmd_solve, help="solve the nonlocal problem")
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    with_config("solve-elliptic", cmd_solve_elliptic, help="solve the elliptic subproblem for [f]")
    with_config("solve-parabolic", cmd_solve_parabolic, help="solve the linear parabolic subproblem for [zeta]")
    p = with_config("oracle", cmd_oracle, help="run a reference solver")
    p.add_argument("--mode", choices=["monolithic", "scalar"], required=True)
    p.add_argument("--compare", action="store_true", help="also report distance to the fixed-point solve")
    with_config("certify-uniqueness", cmd_certify, help="evaluate the M K T^2 < 2 certificate")
    p = with_config("sweep-T", cmd_sweep, help="sweep the final time")
    p.add_argument("--T-list", dest="T_list", required=True)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("validate-potential", help="sample-check a built-in potential")
    p.add_argument("--name", required=True)
    p.add_argument("--interval", default="-50,50")
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_validate_potential)

    p = sub.add_parser("report", help="render a report JSON as a table")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
