"""Command-line front end.

Subcommands: landscape (deployed-risk grid to CSV), solve (one method to a
trajectory CSV plus summary JSON), verify (condition reports to JSON), and
certify (bound certificates to JSON). Every command writes a manifest next
to its outputs; re-running with the same config and seed reproduces every
output byte for byte (the manifest's wall-time field excepted).

Exit codes: 0 success, 2 usage, 3 condition violation, 4 inconclusive,
5 I/O failure. Numeric fields are printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bounds, conditions, risk, solvers
from .config import load_instance_path
from .core import SeedSpec
from .errors import PerflabError

SCHEMA_LINE = "# perflab-schema v1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VIOLATED = 3
EXIT_INCONCLUSIVE = 4
EXIT_IO = 5

_CONDITION_NAMES = ("sens", "mixdom", "sc", "wsc", "rsi", "pl", "qg",
                    "smooth", "lipz")


def fmt(x) -> str:
    return f"{float(x):.12g}"


def _round12(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if np.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(_round12(payload), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list, rows) -> None:
    lines = [SCHEMA_LINE, ",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, (int, float, np.floating))
                              else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _manifest(out_dir: Path, command: str, args, outputs, t0: float) -> None:
    payload = {
        "command": command,
        "instance": str(args.instance),
        "seed": args.seed,
        "parameters": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("func", "instance", "seed", "out") and v is not None
        },
        "outputs": [str(p.name) for p in outputs],
        "tool_version": __version__,
        "wall_time_s": round(time.time() - t0, 3),
    }
    _write_json(out_dir / f"{command}_manifest.json", payload)


def _prepare(args):
    instance = load_instance_path(args.instance)
    seed = SeedSpec(args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return instance, seed, out_dir


def _theta_header(dim: int) -> list:
    return [f"theta_{i}" for i in range(dim)]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_landscape(args) -> int:
    t0 = time.time()
    instance, seed, out_dir = _prepare(args)
    thetas = instance.domain.grid(args.grid_step)
    values, ses = risk.pr_grid(instance, thetas, n=args.samples,
                               seed=seed.child(1), mode=args.mode)
    ps = solvers.fixed_point_oracle_ps(instance, n=args.samples,
                                       seed=seed.child(2), mode=args.mode)
    rows = []
    for i, th in enumerate(thetas):
        d = risk.dpr(instance, ps.theta_star, th, n=args.samples,
                     seed=seed.child(3), mode=args.mode)
        rows.append(list(th) + [values[i], ses[i], d.value])
    header = _theta_header(instance.dim) + ["pr", "pr_stderr", "dpr_at_ps"]
    path = out_dir / "landscape.csv"
    _write_csv(path, header, rows)
    _manifest(out_dir, "landscape", args, [path], t0)
    k = int(np.argmin(values))
    print(f"landscape: {thetas.shape[0]} cells, min pr {fmt(values[k])} "
          f"at theta {np.round(thetas[k], 6).tolist()} -> {path}")
    return EXIT_OK


def _write_trajectory(path: Path, traj: solvers.Trajectory, dim: int) -> None:
    header = ["iter"] + _theta_header(dim) + ["pr_value", "pr_stderr", "grad_norm"]
    rows = []
    for t, (th, est, gn) in enumerate(zip(traj.iterates, traj.pr_values,
                                          traj.grad_norms)):
        rows.append([t] + list(th) + [est.value, est.std_err, gn])
    _write_csv(path, header, rows)


def cmd_solve(args) -> int:
    t0 = time.time()
    instance, seed, out_dir = _prepare(args)
    outputs = []
    if args.method == "oracle":
        po = solvers.grid_oracle_po(instance, args.grid_step, n=args.samples,
                                    seed=seed.child(1), mode=args.mode)
        ps = solvers.fixed_point_oracle_ps(instance, n=args.samples,
                                           seed=seed.child(2), mode=args.mode)
        path = out_dir / "oracles.csv"
        header = ["role"] + _theta_header(instance.dim) + ["objective", "method",
                                                           "residual"]
        _write_csv(path, header, [
            ["po"] + list(po.theta_star) + [po.objective, po.method, po.residual],
            ["ps"] + list(ps.theta_star) + [ps.objective, ps.method, ps.residual],
        ])
        summary = {
            "theta_po": po.theta_star.tolist(),
            "pr_at_po": po.objective,
            "theta_ps": ps.theta_star.tolist(),
            "pr_at_ps": ps.objective,
            "ps_conclusive": ps.conclusive,
            "grid_step": po.grid_step,
        }
        spath = out_dir / "summary_oracle.json"
        _write_json(spath, summary)
        outputs += [path, spath]
        _manifest(out_dir, "solve", args, outputs, t0)
        print(f"oracle: theta_po {np.round(po.theta_star, 6).tolist()} "
              f"(pr {fmt(po.objective)}), theta_ps "
              f"{np.round(ps.theta_star, 6).tolist()} (pr {fmt(ps.objective)})")
        return EXIT_OK

    theta0 = (np.full(instance.dim, args.theta0)
              if args.theta0 is not None else instance.domain.center())
    common = dict(n=args.samples, seed=seed.child(1), mode=args.mode)
    if args.method == "rrm":
        traj = solvers.rrm(instance, theta0, max_iters=args.max_iters or 100,
                           tol=args.tol, **common)
    elif args.method == "rgd":
        traj = solvers.rgd(instance, theta0, step=args.step,
                           max_iters=args.max_iters or solvers.MAX_ITERS_DEFAULT,
                           tol=args.tol, **common)
    else:
        traj = solvers.pgd(instance, theta0, step=args.step,
                           max_iters=args.max_iters or solvers.MAX_ITERS_DEFAULT,
                           tol=args.tol, **common)
    path = out_dir / f"trajectory_{args.method}.csv"
    _write_trajectory(path, traj, instance.dim)
    po = solvers.grid_oracle_po(instance, args.grid_step, n=args.samples,
                                seed=seed.child(2), mode=args.mode)
    ps = solvers.fixed_point_oracle_ps(instance, n=args.samples,
                                       seed=seed.child(3), mode=args.mode)
    final = traj.final
    summary = {
        "method": traj.method,
        "final_theta": final.tolist(),
        "final_pr": traj.pr_values[-1].value,
        "stop_reason": traj.stop_reason,
        "iterations": len(traj.iterates) - 1,
        "dist_to_po": float(np.linalg.norm(final - po.theta_star)),
        "dist_to_ps": float(np.linalg.norm(final - ps.theta_star)),
    }
    spath = out_dir / f"summary_{args.method}.json"
    _write_json(spath, summary)
    _manifest(out_dir, "solve", args, [path, spath], t0)
    print(f"{traj.method}: final theta {np.round(final, 6).tolist()}, "
          f"pr {fmt(summary['final_pr'])}, {traj.stop_reason} "
          f"after {summary['iterations']} iterations")
    return EXIT_OK


def _run_condition(name, instance, n, seed, mode):
    if name == "sens":
        return conditions.check_sensitivity(instance, n_samples=min(n, 2000),
                                            seed=seed)
    if name == "mixdom":
        return conditions.check_mixture_dominance(instance, n=n, seed=seed)
    if name == "smooth":
        return conditions.check_smoothness(instance, seed=seed)
    if name == "lipz":
        return conditions.check_lipschitz(instance, seed=seed)
    if name == "sc" and instance.declared.gamma_sc is not None:
        return conditions.check_loss_strong_convexity(instance, seed=seed)
    return conditions.check_condition(instance, name.upper(), anchor="po",
                                      n=n, seed=seed, mode=mode)


def cmd_verify(args) -> int:
    t0 = time.time()
    instance, seed, out_dir = _prepare(args)
    payload = {"instance": instance.name, "reports": []}
    violated = False
    if args.theorem is not None:
        fn = (conditions.check_weak_convexity_transfer if args.theorem == 1
              else conditions.check_rsi_transfer)
        rep = fn(instance, n=args.samples, seed=seed.child(1), mode=args.mode)
        payload["theorem"] = rep.to_dict()
        violated = rep.any_violated()
        print(f"theorem {args.theorem}: status={rep.status}"
              + (f", threshold ok={rep.threshold['ok']}" if rep.threshold else ""))
    elif args.chain:
        audit = conditions.chain_audit(instance, n=args.samples,
                                       seed=seed.child(1), mode=args.mode)
        payload["reports"] = [r.to_dict() for r in audit.reports]
        payload["chain_consistent"] = audit.consistent
        payload["inconsistencies"] = list(audit.inconsistencies)
        violated = any(r.verdict == "violated" for r in audit.reports)
        print("chain: " + ", ".join(f"{r.condition}={r.verdict}"
                                    for r in audit.reports))
    else:
        names = [s.strip() for s in args.conditions.split(",") if s.strip()]
        for nm in names:
            if nm not in _CONDITION_NAMES:
                print(f"unknown condition {nm!r}; choose from "
                      f"{', '.join(_CONDITION_NAMES)}", file=sys.stderr)
                return EXIT_USAGE
        for i, nm in enumerate(names):
            rep = _run_condition(nm, instance, args.samples, seed.child(10 + i),
                                 args.mode)
            payload["reports"].append(rep.to_dict())
            violated = violated or rep.verdict == "violated"
            print(f"{rep.condition}: {rep.verdict} "
                  f"(best constant {fmt(rep.best_constant)})")
    path = out_dir / "reports_verify.json"
    _write_json(path, payload)
    _manifest(out_dir, "verify", args, [path], t0)
    return EXIT_VIOLATED if violated else EXIT_OK


def cmd_certify(args) -> int:
    t0 = time.time()
    instance, seed, out_dir = _prepare(args)
    ps, certs = bounds.certify_all(instance, n=args.samples, seed=seed.child(1),
                                   mode=args.mode, grid_step=args.grid_step)
    if not certs:
        print(f"stable point search inconclusive "
              f"(residual {fmt(ps.residual)}); no certificates issued",
              file=sys.stderr)
        payload = {
            "theta_ps": ps.theta_star.tolist(),
            "residual": ps.residual,
            "conclusive": False,
            "certificates": [],
        }
        path = out_dir / "certificates.json"
        _write_json(path, payload)
        _manifest(out_dir, "certify", args, [path], t0)
        return EXIT_INCONCLUSIVE
    payload = {
        "theta_ps": ps.theta_star.tolist(),
        "residual": ps.residual,
        "conclusive": True,
        "certificates": [c.to_dict() for c in certs],
    }
    path = out_dir / "certificates.json"
    _write_json(path, payload)
    _manifest(out_dir, "certify", args, [path], t0)
    for c in certs:
        print(f"{c.name}: holds={c.holds} bound={fmt(c.bound_value)} "
              f"actual={fmt(c.actual_value)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", required=True, help="instance config path")
    p.add_argument("--seed", type=int,
                   default=int(os.environ.get("PERFLAB_SEED", "12345")),
                   help="root seed (default: PERFLAB_SEED env or 12345)")
    p.add_argument("--samples", type=int, default=risk.DEFAULT_SAMPLES,
                   help="Monte Carlo sample count")
    p.add_argument("--grid-step", type=float, default=1e-3, dest="grid_step",
                   help="grid resolution for oracles and landscapes")
    p.add_argument("--out", default="perflab_out", help="output directory")
    p.add_argument("--mode", choices=("auto", "closed_form", "monte_carlo"),
                   default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perflab",
        description="performative-prediction laboratory: risk estimation, "
                    "retraining dynamics, condition certification, bounds",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("landscape", help="deployed risk over the parameter grid")
    _add_common(p)
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("solve", help="run one solver or the oracles")
    _add_common(p)
    p.add_argument("--method", required=True, choices=("rrm", "rgd", "pgd", "oracle"))
    p.add_argument("--theta0", type=float, default=None,
                   help="scalar start value broadcast over coordinates")
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None, dest="max_iters")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="certify conditions, the chain, or a theorem")
    _add_common(p)
    p.add_argument("--conditions", default="sens,mixdom",
                   help=f"comma list from: {', '.join(_CONDITION_NAMES)}")
    p.add_argument("--chain", action="store_true",
                   help="run the implication-chain audit")
    p.add_argument("--theorem", type=int, choices=(1, 2), default=None,
                   help="validate transfer theorem 1 (weak convexity) or 2 (RSI)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("certify", help="bound certificates at the stable point")
    _add_common(p)
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PerflabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
