"""Command-line front end.

Subcommands: list-methods, dump-tableau, verify, converge, stability,
integrate.  Numeric grids and traces go to CSV, run manifests and summaries
to JSON, so outputs are plot-ready and diff-able.  Every run is fully
deterministic: identical configurations produce byte-identical files.

Exit codes: 0 success, 1 numerical/verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adaptivity import ControllerConfig, drive
from .assembly import (
    assemble,
    check_decoupled,
    check_internal_consistency,
    check_stiff_accuracy,
    check_telescopic,
    derive_schedule,
)
from .errors import MrGarkError, UnknownMethod
from .order import classify, residuals
from .problems import PROBLEM_NAMES, make_problem, reference_error
from .schemes import METHOD_NAMES, registry_lookup
from .stability import scan_region
from .stepping import Tolerances, error_estimates, step
from .tableaux import MethodFlag, TableauKind

__all__ = ["main"]


def _out_dir(args) -> Path:
    base = args.out_dir or os.environ.get("MRGARK_OUTPUT_DIR") or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(path: Path, payload: dict) -> None:
    payload = dict(payload)
    payload["tool_version"] = __version__
    payload["determinism"] = "outputs are seed-free and reproducible bit-for-bit"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_sweep(text: str) -> list[int]:
    """Parse '1:8' (inclusive range) or '2,4,8' (explicit list)."""
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok]


def _parse_floats(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "/" in tok:
            num, den = tok.split("/")
            out.append(float(num) / float(den))
        else:
            out.append(float(tok))
    return out


def cmd_list_methods(args) -> int:
    for name, p, p_hat, flags in (
        (m.name, m.order, m.embedded_order, m.flags)
        for m in (registry_lookup(n) for n in METHOD_NAMES)
    ):
        tags = ",".join(sorted(f.value for f in flags)) or "-"
        print(f"{name:16s} order {p}({p_hat})  {tags}")
    return 0


def cmd_dump_tableau(args) -> int:
    method = registry_lookup(args.method)
    g = assemble(method, args.M)
    out = _out_dir(args)
    if args.format == "json":
        payload = {
            "name": method.name,
            "tool_version": __version__,
            "M": args.M,
            "order": method.order,
            "embedded_order": method.embedded_order,
            "flags": sorted(f.value for f in method.flags),
            "fast": {
                "A": method.fast.A.tolist(),
                "b": method.fast.b.tolist(),
                "b_hat": method.fast.b_hat.tolist(),
                "c": method.fast.c.tolist(),
                "kind": method.fast.kind.value,
            },
            "slow": {
                "A": method.slow.A.tolist(),
                "b": method.slow.b.tolist(),
                "b_hat": method.slow.b_hat.tolist(),
                "c": method.slow.c.tolist(),
                "kind": method.slow.kind.value,
            },
            "fs_coupling": [method.coupling("fs", lam, args.M).tolist() for lam in range(1, args.M + 1)],
            "sf_coupling": [method.coupling("sf", lam, args.M).tolist() for lam in range(1, args.M + 1)],
            "assembled": {"A": g.A.tolist(), "b": g.b.tolist(), "c": g.c.tolist()},
        }
        path = out / (args.out or "tableau.json")
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        path = out / (args.out or "tableau.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row"] + [f"a{j+1}" for j in range(g.stage_count)] + ["b", "c"])
            for i in range(g.stage_count):
                w.writerow([i + 1] + [f"{x:.17g}" for x in g.A[i]] + [f"{g.b[i]:.17g}", f"{g.c[i]:.17g}"])
    print(f"wrote {path}")
    return 0


def _verify_one(name: str, sweep: list[int], weights: str, rows: list, failures: list) -> None:
    method = registry_lookup(name)
    for M in sweep:
        g = assemble(method, M)
        rep = check_internal_consistency(g)
        if not rep.passed:
            failures.append(f"{name} M={M}: internal consistency residual {max(rep.max_fs_residual, rep.max_sf_residual):.2e}")
        if not check_decoupled(g):
            failures.append(f"{name} M={M}: coupling sparsity not complementary")
        try:
            derive_schedule(g, method)
        except MrGarkError as exc:
            failures.append(f"{name} M={M}: schedule: {exc}")
        for part, flag in (("slow", MethodFlag.STIFFLY_ACCURATE_SLOW), ("fast", MethodFlag.STIFFLY_ACCURATE_FAST)):
            base = method.slow if part == "slow" else method.fast
            if base.kind is TableauKind.SDIRK and method.has_flag(flag) and not check_stiff_accuracy(method, M, part):
                failures.append(f"{name} M={M}: stiff accuracy fails in {part} partition")
        rep = residuals(method, M, weights)
        for e in rep.entries:
            rows.append([name, M, weights, e.id, e.order, e.group, f"{e.value:.17g}", f"{e.rhs:.17g}", f"{e.residual:.3e}"])

    if check_telescopic(method) != method.has_flag(MethodFlag.TELESCOPIC):
        failures.append(f"{name}: telescopic flag does not match the tableaus")
    cls = classify(method, sweep)
    if (cls.verified_order, cls.verified_embedded_order) != (method.order, method.embedded_order):
        failures.append(
            f"{name}: verified order {cls.verified_order}({cls.verified_embedded_order}) "
            f"!= declared {method.order}({method.embedded_order})"
        )
    if len([m for m in sweep if m >= 2]) > 0 and cls.naturally_adaptive != method.has_flag(MethodFlag.NATURALLY_ADAPTIVE):
        failures.append(f"{name}: natural adaptivity {cls.naturally_adaptive} != declared flag")


def cmd_verify(args) -> int:
    sweep = _parse_sweep(args.M_sweep)
    names = list(METHOD_NAMES) if args.all else [args.method]
    if not args.all and args.method is None:
        print("verify: give a method name or --all", file=sys.stderr)
        return 2
    rows: list = []
    failures: list = []
    for name in names:
        _verify_one(name, sweep, args.weights, rows, failures)
    out = _out_dir(args)
    path = out / args.out
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "M", "weights", "condition", "order", "group", "value", "rhs", "residual"])
        w.writerows(rows)
    _write_manifest(out / "verify_manifest.json", {
        "command": "verify", "methods": names, "M_sweep": sweep, "weights": args.weights,
    })
    if args.all:
        print(f"verified {len(names)} methods over M in {sweep}; residuals in {path}")
    for f in failures:
        print(f"FAIL: {f}", file=sys.stderr)
    return 1 if failures else 0


def _fixed_run(method, ode, y0, t0, t_end, H, M):
    t, y = t0, np.array(y0, dtype=float)
    carry = None
    n_steps = int(round((t_end - t0) / H))
    actual_h = (t_end - t0) / n_steps
    for _ in range(n_steps):
        res = step(method, ode, y, t, actual_h, M, fsal_carry=carry)
        y, t, carry = res.y_next, res.t, res.fsal_carry
    return y


def cmd_converge(args) -> int:
    method = registry_lookup(args.method)
    problem = make_problem(args.problem, **json.loads(args.problem_params))
    ode = problem.to_ode()
    y0 = problem.initial_condition()
    ladder = _parse_floats(args.h_ladder)
    out = _out_dir(args)
    rows = []
    for M in _parse_sweep(args.M):
        errs = []
        for H in ladder:
            try:
                y_T = _fixed_run(method, ode, y0, 0.0, args.t_end, H, M)
                if hasattr(problem, "exact"):
                    err = reference_error(problem, y_T, args.t_end)
                else:
                    h_ref = min(ladder) / 64.0
                    y_ref = _fixed_run(method, ode, y0, 0.0, args.t_end, h_ref, M)
                    err = reference_error(problem, y_T, args.t_end, reference_state=y_ref)
                errs.append(err)
                rows.append([method.name, M, f"{H:.10g}", f"{err:.6e}", ""])
            except MrGarkError as exc:
                errs.append(math.nan)
                rows.append([method.name, M, f"{H:.10g}", "", f"{type(exc).__name__}"])
        # successive-ratio observed order needs at least two clean points
        idx = len(rows) - len(ladder)
        for k in range(1, len(ladder)):
            if math.isfinite(errs[k - 1]) and math.isfinite(errs[k]) and errs[k] > 0:
                order = math.log(errs[k - 1] / errs[k]) / math.log(ladder[k - 1] / ladder[k])
                rows[idx + k][4] = f"{order:.3f}"
    path = out / args.out
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "M", "H", "error", "observed_order"])
        w.writerows(rows)
    _write_manifest(out / "converge_manifest.json", {
        "command": "converge", "method": method.name, "problem": args.problem,
        "M": args.M, "h_ladder": args.h_ladder, "t_end": args.t_end,
    })
    print(f"wrote {path}")
    return 0


def cmd_stability(args) -> int:
    method = registry_lookup(args.method)
    g = assemble(method, args.M)
    grid = scan_region(g, rho_max=args.rho_max, n_theta=args.n_theta, n_rho=args.n_rho)
    out = _out_dir(args)
    path = out / args.out
    grid.write_csv(path)
    _write_manifest(out / "stability_manifest.json", {
        "command": "stability", "method": method.name, "M": args.M,
        "rho_max": args.rho_max, "n_theta": args.n_theta, "n_rho": args.n_rho,
    })
    print(f"wrote {path}")
    return 0


def cmd_integrate(args) -> int:
    method = registry_lookup(args.method)
    problem = make_problem(args.problem, **json.loads(args.problem_params))
    ode = problem.to_ode()
    y0 = problem.initial_condition()
    out = _out_dir(args)
    tolerances = Tolerances(abs_tol=args.abstol, rel_tol=args.reltol)
    summary: dict = {
        "command": "integrate", "method": method.name, "problem": args.problem,
        "t_end": args.t_end, "abstol": args.abstol, "reltol": args.reltol,
    }

    if args.adaptive:
        strategy = "classic-h" if args.adaptive == "classic" else args.adaptive
        config = ControllerConfig(
            strategy=strategy,
            abs_tol=args.abstol,
            rel_tol=args.reltol,
            synthetic_cost_ratio=args.ts_tf_ratio,
        )
        result = drive(method, ode, y0, 0.0, args.t_end, config, H0=args.H, M0=args.M)
        trace_path = out / "trace.csv"
        with open(trace_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "H", "M", "eps_total", "eps_slow", "eps_fast", "accepted"])
            for r in result.state.trace:
                w.writerow([f"{r.t:.12g}", f"{r.H:.12g}", r.M, f"{r.eps_total:.6e}",
                            f"{r.eps_slow:.6e}", f"{r.eps_fast:.6e}", int(r.accepted)])
        summary.update(
            strategy=strategy,
            accepted=result.state.accepted,
            rejected=result.state.rejected,
            final_H=result.state.H,
            final_M=result.state.M,
            ts_tf_ratio=args.ts_tf_ratio,
        )
        ts, ys = result.ts, result.ys
    else:
        t, y = 0.0, y0.copy()
        ts_list, ys_list = [t], [y.copy()]
        carry = None
        n_steps = max(1, int(round(args.t_end / args.H)))
        H = args.t_end / n_steps
        eps_last = None
        for _ in range(n_steps):
            res = step(method, ode, y, t, H, args.M, fsal_carry=carry)
            eps_last = error_estimates(res, tolerances)
            y, t, carry = res.y_next, res.t, res.fsal_carry
            ts_list.append(t)
            ys_list.append(y.copy())
        summary.update(H=H, M=args.M, steps=n_steps, final_error_estimates=eps_last)
        ts, ys = np.array(ts_list), np.array(ys_list)

    traj_path = out / "trajectory.csv"
    with open(traj_path, "w", newline="") as fh:
        w = csv.writer(fh)
        if ys.shape[1] <= 16:
            w.writerow(["t"] + [f"y{i}" for i in range(ys.shape[1])])
            for t, y in zip(ts, ys):
                w.writerow([f"{t:.12g}"] + [f"{v:.12g}" for v in y])
        else:
            w.writerow(["t", "norm2", "min", "max"])
            for t, y in zip(ts, ys):
                w.writerow([f"{t:.12g}", f"{np.linalg.norm(y):.12g}",
                            f"{y.min():.12g}", f"{y.max():.12g}"])
    if hasattr(problem, "exact"):
        summary["reference_error"] = reference_error(problem, ys[-1], args.t_end)
    _write_manifest(out / "integrate_manifest.json", summary)
    print(f"wrote {traj_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrgark",
        description="Multirate GARK methods: inspection, verification, stability, integration.",
    )
    parser.add_argument("--out-dir", default=None, help="output directory (or set MRGARK_OUTPUT_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-methods", help="list the registered method pairs").set_defaults(fn=cmd_list_methods)

    p = sub.add_parser("dump-tableau", help="dump a method's coefficients at a given M")
    p.add_argument("method")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="file name inside the output directory")
    p.set_defaults(fn=cmd_dump_tableau)

    p = sub.add_parser("verify", help="structure and order verification over an M sweep")
    p.add_argument("method", nargs="?", default=None)
    p.add_argument("--all", action="store_true")
    p.add_argument("--M-sweep", dest="M_sweep", default="1:8")
    p.add_argument("--weights", default="main",
                   choices=("main", "embedded", "mixed-slow-hat", "mixed-fast-hat"))
    p.add_argument("--out", default="residuals.csv")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("converge", help="fixed-step convergence sweep over an H ladder")
    p.add_argument("--method", required=True)
    p.add_argument("--problem", choices=PROBLEM_NAMES, default="linear-two-rate")
    p.add_argument("--problem-params", default="{}", help="JSON overrides for the problem")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--M", default="2,4")
    p.add_argument("--h-ladder", default="1/8,1/16,1/32,1/64,1/128")
    p.add_argument("--out", default="convergence.csv")
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("stability", help="export |R| over the (theta_f, theta_s, rho) grid")
    p.add_argument("method")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--rho-max", type=float, default=6.0)
    p.add_argument("--n-theta", type=int, default=65)
    p.add_argument("--n-rho", type=int, default=129)
    p.add_argument("--out", default="region.csv")
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("integrate", help="fixed-step or adaptive integration")
    p.add_argument("--method", required=True)
    p.add_argument("--problem", choices=PROBLEM_NAMES, default="linear-two-rate")
    p.add_argument("--problem-params", default="{}")
    p.add_argument("--H", type=float, default=0.01)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--t-end", type=float, default=1.0)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--fixed", action="store_true", default=True)
    group.add_argument("--adaptive", choices=("balancing", "efficiency", "classic", "classic-h"),
                       default=None)
    p.add_argument("--abstol", type=float, default=1e-6)
    p.add_argument("--reltol", type=float, default=1e-6)
    p.add_argument("--ts-tf-ratio", type=float, default=None,
                   help="synthetic slow/fast cost ratio for the efficiency controller")
    p.set_defaults(fn=cmd_integrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UnknownMethod as exc:
        print(f"UnknownMethod: {exc}", file=sys.stderr)
        return 2
    except MrGarkError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
