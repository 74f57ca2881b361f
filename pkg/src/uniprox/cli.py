"""Command-line harness: ``uniprox solve | verify | bounds``.

Exit codes: ``solve`` returns 0 when solved, 2 when the budget ran out and
1 on errors; ``verify`` returns 0 iff the replay matches and every check
passes; ``bounds`` returns 0 on success.
"""

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import theory
from .config import load_config
from .errors import UniproxError
from .instances import make_instance_from_spec
from .trace import read_trace_csv, write_trace_csv
from .ucs import Status, ucs_solve
from .upb import upb_solve
from .verify import run_checks, summarize

log = logging.getLogger("uniprox")

EXIT_OK, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2
_STATUS_EXIT = {Status.SOLVED: EXIT_OK, Status.BUDGET_EXHAUSTED: EXIT_BUDGET, Status.ERROR: EXIT_ERROR}
# relative tolerance when comparing a replayed run against a stored trace
REPLAY_RTOL = 1e-12


def _setup_logging():
    level = os.environ.get("UNIPROX_LOG", "off").lower()
    levels = {"off": logging.CRITICAL + 1, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.CRITICAL + 1), format="%(levelname)s %(name)s: %(message)s")


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def prepare(cfg, seed=None):
    """Build the instance, resolve ``lambda0`` and return ``(cfg, inst, x0)``."""
    if seed is not None:
        cfg = replace(cfg, instance=replace(cfg.instance, seed=int(seed)))
    inst = make_instance_from_spec(cfg.instance)
    if cfg.lambda0_rule == "lambda_constant":
        lam = theory.lambda_constant(inst.meta, cfg.solver.chi, cfg.solver.epsbar)
        cfg = replace(cfg, solver=replace(cfg.solver, lambda0=lam), lambda0_rule="")
    return cfg, inst, inst.x0


def run(cfg, inst, x0, run_id):
    solve = ucs_solve if cfg.method == "ucs" else upb_solve
    return solve(inst, x0, cfg.solver, run_id=run_id)


def summary(cfg, inst, x0, result):
    meta = inst.meta
    d0 = float(np.linalg.norm(x0 - meta.x_star)) if meta.x_star is not None else math.nan
    out = {
        "method": cfg.method,
        "status": result.status.value,
        "message": result.message,
        "best_value": result.best_value,
        "best_point": result.best_point.tolist(),
        "phi_star": meta.phi_star,
        "observed_inner": result.iterations_inner,
        "observed_serious": result.serious_steps,
        "observed_halvings": result.halvings,
        "observed_min_lambda": float(min(r.lam for r in result.trace.records)) if len(result.trace) else None,
        "flags": result.trace.flags,
    }
    if math.isfinite(d0):
        rep = theory.bound_report(meta, cfg.solver, d0, method=cfg.method)
        out.update(rep.as_dict())
        out["bound_inner"] = rep.ucs_bound if cfg.method == "ucs" else rep.upb_bound
    return {k: _jsonable(v) for k, v in out.items()}


def cmd_solve(args):
    cfg = load_config(args.config)
    run_id = Path(args.config).stem
    cfg, inst, x0 = prepare(cfg, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run(cfg, inst, x0, run_id)
    write_trace_csv(result.trace, out / "trace.csv")
    with open(out / "summary.json", "w") as fh:
        json.dump(summary(cfg, inst, x0, result), fh, indent=2)
    with open(out / "config.json", "w") as fh:
        json.dump(cfg.as_dict(), fh, indent=2)
    print(f"{result.status.value}: {result.iterations_inner} inner iterations, best value {result.best_value:.10g}")
    return _STATUS_EXIT[result.status]


def _close(a, b):
    return a == b or abs(a - b) <= REPLAY_RTOL * max(1.0, abs(a), abs(b))


def compare_records(stored, fresh):
    """First index where two record lists disagree, or ``None``."""
    if len(stored) != len(fresh):
        return min(len(stored), len(fresh))
    for i, (s, f) in enumerate(zip(stored, fresh)):
        if (s.j, s.k, s.N, s.event, s.halvings) != (f.j, f.k, f.N, f.event, f.halvings):
            return i
        if not all(_close(a, b) for a, b in ((s.lam, f.lam), (s.t_j, f.t_j), (s.phi_xj, f.phi_xj),
                                             (s.barphi, f.barphi))):
            return i
    return None


def cmd_verify(args):
    cfg = load_config(args.config)
    _, stored = read_trace_csv(args.trace)
    cfg, inst, x0 = prepare(cfg)
    result = run(cfg, inst, x0, "replay")
    bad = compare_records(stored, result.trace.records)
    ok = True
    if bad is not None:
        print(f"replay mismatch at row {bad + 2} of {args.trace}")
        ok = False
    checks = cfg.checks or None
    outcomes = run_checks(result.trace, inst, cfg.solver, checks, method=cfg.method)
    # event semantics are also checked on the stored rows themselves
    outcomes += run_checks(_as_trace(stored, cfg.method), inst, cfg.solver, ("events",), method=cfg.method)
    for name, (passed, total) in sorted(summarize(outcomes).items()):
        print(f"{name:16s} {passed}/{total}")
        ok &= passed == total
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_ERROR


def _as_trace(records, method):
    from .trace import RunTrace

    return RunTrace(run_id="stored", method=method, records=list(records))


def cmd_bounds(args):
    cfg = load_config(args.config)
    cfg, inst, x0 = prepare(cfg)
    meta = inst.meta
    if meta.x_star is None:
        raise UniproxError("bounds need a known optimal solution")
    d0 = float(np.linalg.norm(x0 - meta.x_star))
    rep = theory.bound_report(meta, cfg.solver, d0, method=cfg.method)
    for k, v in rep.as_dict().items():
        print(f"{k:18s} {v}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="uniprox", description="Universal prox methods: solve, verify, bounds.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run a solver and write trace.csv and summary.json")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", default="out")
    s.add_argument("--seed", type=int, default=None, help="override the instance seed")
    s.set_defaults(func=cmd_solve)
    v = sub.add_parser("verify", help="replay a trace and run the configured checks")
    v.add_argument("--trace", required=True)
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_verify)
    b = sub.add_parser("bounds", help="print every theoretical bound for a config")
    b.add_argument("--config", required=True)
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UniproxError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
