"""Trace checkers for the inequalities guaranteed by the convergence analysis.

Every checker recomputes its quantities from the instance oracles and the
recorded model snapshots instead of trusting logged values. All of them
use an absolute slack of ``SLACK`` (times a problem scale where noted),
two orders above the default inner-solver duality gap.
"""

from dataclasses import dataclass

import numpy as np

from . import theory
from .errors import MissingDiameter, MissingMeta
from .oracle import eval_h, eval_phi
from .proxcore import solve_cut_model
from .trace import NULL, RESET, SERIOUS, SeriousRecord  # noqa: F401  (re-export)

SLACK = 1e-8
ETA_FLOOR = -1e-10

CHECKS = ("bb", "contraction", "tj_decay", "first_t", "eps_subgrad", "monotone_lambda", "lambda_floor",
          "reset_cap", "events")
# opt-in diagnostics, never part of the default set
DEBUG_CHECKS = ("qphi",)


@dataclass
class CheckOutcome:
    """Result of one inequality test ``lhs <= rhs + slack_used``."""

    name: str
    passed: bool
    lhs: float
    rhs: float
    slack_used: float
    detail: str = ""

    @classmethod
    def of(cls, name, lhs, rhs, slack, detail=""):
        lhs, rhs = float(lhs), float(rhs)
        return cls(name, bool(lhs <= rhs + slack), lhs, rhs, float(slack), detail)


def _sq(v):
    return float(v @ v)


def replay(rec, inst, tol=1e-10):
    """Re-solve the recorded serious-step subproblem."""
    return solve_cut_model(rec.model_snapshot, inst, rec.center_prev, rec.lam_k, tol=tol)


def check_bb_contract(rec, inst, chi, eps, sol=None):
    """Black-box contract of a serious step.

    The subproblem minimum is bounded below by the replayed dual value, so
    a pass certifies the contract for the exact minimum as well.
    """
    sol = replay(rec, inst) if sol is None else sol
    lam, xm = rec.lam_k, rec.center_prev
    lhs = eval_phi(inst, rec.y_hat) + chi * _sq(rec.y_hat - xm) / (2.0 * lam) - sol.dual_value
    scale = max(1.0, abs(sol.dual_value))
    out = CheckOutcome.of("bb", lhs, eps, SLACK * scale)
    drift = float(np.linalg.norm(sol.x - rec.x_hat))
    if drift > SLACK * (1.0 + float(np.linalg.norm(xm))):
        out.passed = False
        out.detail = f"replayed prox point differs from x_hat by {drift:.3e}"
    return out


def check_contraction(rec, inst, chi, eps, u=None, sigma_override=None):
    """Contraction inequality at ``u`` (default ``meta.x_star``)."""
    meta = inst.meta
    if u is None:
        if meta.x_star is None:
            raise MissingMeta("contraction check needs meta.x_star")
        u = meta.x_star
    u = np.asarray(u, dtype=float)
    mu = meta.mu_phi
    nu = min(meta.mu_phi, meta.mu_h)
    lam = rec.lam_k
    sig = theory.sigma(mu, nu, chi, lam) if sigma_override is None else sigma_override
    phi_y, phi_u = eval_phi(inst, rec.y_hat), eval_phi(inst, u)
    a, b = _sq(rec.center_prev - u), _sq(rec.x_hat - u)
    lhs = 2.0 * lam * (phi_y - phi_u)
    rhs = 2.0 * lam * eps / (1.0 - chi) + a - (1.0 + sig) * b
    scale = max(1.0, abs(2.0 * lam * phi_y), abs(2.0 * lam * phi_u), a, (1.0 + sig) * b)
    return CheckOutcome.of("contraction", lhs, rhs, SLACK * scale)


def check_eps_subgrad(rec, inst, chi, eps, sample_count=32, seed=0):
    """``s = (x_prev - x_hat)/lam`` is an ``eta``-subgradient of ``phi`` at ``y_hat``."""
    lam, xm, x, y = rec.lam_k, rec.center_prev, rec.x_hat, rec.y_hat
    s = (xm - x) / lam
    gamma_x = rec.model_snapshot(x) + eval_h(inst, x)
    phi_y = eval_phi(inst, y)
    eta = phi_y - gamma_x - float(s @ (y - x))
    scale = max(1.0, abs(phi_y), abs(gamma_x))
    if eta < ETA_FLOOR * scale:
        return CheckOutcome("eps_subgrad", False, -eta, 0.0, -ETA_FLOOR * scale, "negative eta")
    lhs = 2.0 * lam * eta
    rhs = 2.0 * lam * eps - _sq(y - x) + (1.0 - chi) * _sq(y - xm)
    out = CheckOutcome.of("eps_subgrad", lhs, rhs, SLACK * max(scale * 2.0 * lam, 1.0))
    if sample_count > 0 and out.passed:
        rng = np.random.default_rng(seed)
        us = inst.sample(rng, sample_count)
        worst = -np.inf
        for u in us:
            viol = phi_y + float(s @ (u - y)) - eta - eval_phi(inst, u)
            worst = max(worst, viol / max(1.0, abs(phi_y)))
        if worst > SLACK:
            out.passed = False
            out.detail = f"sampled subgradient inequality violated by {worst:.3e}"
    return out


def check_qphi(rec, inst, chi, sample_count=32, seed=0):
    """Strongly convex lower bound on ``phi`` around ``y_hat`` (diagnostic).

    With ``s`` and ``eta`` as in :func:`check_eps_subgrad`, ``zeta = chi``,
    ``mu = mu(phi)`` and ``nu = mu(h)`` it tests, at sampled ``u`` and at
    ``x_star`` when known,

    ``phi(u) >= phi(y) + <s, u-y> + zeta(mu-nu)/2 |u-y|^2 - eta/(1-zeta)
    + zeta/(1-zeta) nu/2 |y-x|^2 + nu/2 |u-x|^2``.
    """
    meta = inst.meta
    mu = meta.mu_phi
    nu = min(meta.mu_phi, meta.mu_h)
    lam, xm, x, y = rec.lam_k, rec.center_prev, rec.x_hat, rec.y_hat
    s = (xm - x) / lam
    phi_y = eval_phi(inst, y)
    eta = phi_y - (rec.model_snapshot(x) + eval_h(inst, x)) - float(s @ (y - x))
    const = phi_y - eta / (1.0 - chi) + chi / (1.0 - chi) * nu / 2.0 * _sq(y - x)
    us = list(inst.sample(np.random.default_rng(seed), sample_count))
    if meta.x_star is not None:
        us.append(np.asarray(meta.x_star, dtype=float))
    worst, at = -np.inf, 0.0
    for u in us:
        rhs = const + float(s @ (u - y)) + chi * (mu - nu) / 2.0 * _sq(u - y) + nu / 2.0 * _sq(u - x)
        lhs = eval_phi(inst, u)
        if rhs - lhs > worst:
            worst, at = rhs - lhs, lhs
    scale = max(1.0, abs(phi_y), abs(at))
    return CheckOutcome.of("qphi", worst, 0.0, SLACK * scale)


def check_tj_decay(cycle, meta, chi, epsbar):
    """Geometric decay of ``t_j`` inside one cycle and the cycle-length bound."""
    first = cycle[0]
    lam = first.lam
    if any(r.lam != lam for r in cycle):
        raise ValueError("records of one cycle must share the stepsize")
    u = theory.u_lambda(lam, meta, chi, epsbar)
    tau = theory.tau(u)
    c = (1.0 - chi) * epsbar / 4.0
    base = first.t_j - c
    worst, worst_rhs = -np.inf, 0.0
    for r in cycle:
        p = r.j - first.j
        rhs = (tau**p) * base if p > 0 else base
        if r.t_j - c - rhs > worst:
            worst, worst_rhs = r.t_j - c - rhs, rhs
    slack = SLACK * max(1.0, abs(first.t_j))
    out = CheckOutcome("tj_decay", bool(worst <= slack), worst + worst_rhs, worst_rhs, slack)
    last = cycle[-1]
    if last.t_j > 2.0 * c and last.j > first.j:
        cap = (1.0 + u) * np.log(4.0 * first.t_j / ((1.0 - chi) * epsbar))
        if not last.j - first.j < cap:
            out.passed = False
            out.detail = f"cycle length {last.j - first.j} not below {cap:.6g}"
    return out


def check_first_t_bounds(rec, meta, chi, lam):
    """Upper bounds on ``t_i`` at the first iteration of a cycle."""
    bounds = []
    if meta.L_f == 0 or lam <= (1.0 - chi) / (2.0 * meta.L_f):
        bounds.append(4.0 * lam * meta.M_f**2 / (1.0 - chi))
    if meta.D is not None:
        bounds.append(lam * (16.0 * meta.M_f**2 + meta.L_f**2 * meta.D**2) / (4.0 * (1.0 - chi)))
    if not bounds:
        raise MissingDiameter("first-iteration bound for large stepsizes needs D")
    return CheckOutcome.of("first_t", rec.t_j, min(bounds), SLACK)


def check_events(records, cfg, method):
    """Event labels agree with ``t_j``, ``N`` and the stepsize updates."""
    eps = cfg.eps
    nbar = 1 if method == "ucs" else cfg.nbar
    bad = []
    for i, r in enumerate(records):
        if r.event == SERIOUS and not r.t_j <= eps:
            bad.append(r.j)
        elif r.event == NULL and not (r.t_j > eps and r.N < nbar):
            bad.append(r.j)
        elif r.event == RESET and not (r.t_j > eps and r.N == nbar):
            bad.append(r.j)
        if i + 1 < len(records):
            nxt = records[i + 1]
            want = r.lam / 2.0 if r.event == RESET else r.lam
            want_n = r.N + 1 if r.event == NULL else 1
            if nxt.lam != want or nxt.N != want_n:
                bad.append(nxt.j)
    return CheckOutcome("events", not bad, float(len(bad)), 0.0, 0.0,
                        f"inconsistent records at j={bad[:5]}" if bad else "")


def check_monotone_lambda(records):
    lam = np.array([r.lam for r in records])
    inc = float(np.max(np.diff(lam))) if lam.size > 1 else 0.0
    return CheckOutcome.of("monotone_lambda", inc, 0.0, 0.0)


def check_lambda_floor(records, meta, cfg, method):
    lam_min = min(r.lam for r in records)
    if method == "ucs":
        floor = theory.lambda_floor_ucs(meta, cfg.chi, cfg.lambda0, cfg.epsbar)
    else:
        floor = theory.lambda_floor_upb(meta, cfg.chi, cfg.lambda0, cfg.epsbar, cfg.nbar)
    return CheckOutcome.of("lambda_floor", floor, lam_min, 0.0)


def check_reset_cap(records, meta, cfg, method):
    n = sum(1 for r in records if r.event == RESET)
    if method == "ucs":
        cap = theory.halving_cap_ucs(meta, cfg.chi, cfg.lambda0, cfg.epsbar)
    else:
        cap = theory.reset_cap(meta, cfg.chi, cfg.lambda0, cfg.epsbar, cfg.nbar)
    return CheckOutcome.of("reset_cap", n, cap, 0.0)


def run_checks(trace, inst, cfg, checks=None, method=None):
    """Run the named checkers over a trace; return a list of outcomes.

    Per-record checkers (``bb``, ``contraction``, ``eps_subgrad``,
    ``tj_decay``, ``first_t``) yield one outcome per serious step or cycle.
    Checkers whose metadata is missing are skipped. Names from
    ``DEBUG_CHECKS`` run only when requested explicitly.
    """
    method = method or trace.method
    checks = CHECKS if checks is None else tuple(checks)
    unknown = set(checks) - set(CHECKS) - set(DEBUG_CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    meta, chi, eps = inst.meta, cfg.chi, cfg.eps
    out = []
    records = trace.records
    if "events" in checks:
        out.append(check_events(records, cfg, method))
    if "monotone_lambda" in checks and records:
        out.append(check_monotone_lambda(records))
    if "lambda_floor" in checks and records and (method == "ucs" or meta.D is not None):
        out.append(check_lambda_floor(records, meta, cfg, method))
    if "reset_cap" in checks and (method == "ucs" or meta.D is not None):
        out.append(check_reset_cap(records, meta, cfg, method))
    for rec in trace.serious:
        sol = None
        if "bb" in checks:
            sol = replay(rec, inst)
            out.append(check_bb_contract(rec, inst, chi, eps, sol))
        if "contraction" in checks and meta.x_star is not None:
            out.append(check_contraction(rec, inst, chi, eps))
        if "eps_subgrad" in checks:
            out.append(check_eps_subgrad(rec, inst, chi, eps, sample_count=8, seed=rec.k))
        if "qphi" in checks:
            out.append(check_qphi(rec, inst, chi, sample_count=8, seed=rec.k))
    for cycle in trace.cycles():
        if "tj_decay" in checks:
            out.append(check_tj_decay(cycle, meta, chi, cfg.epsbar))
        if "first_t" in checks:
            lam = cycle[0].lam
            if meta.D is not None or meta.L_f == 0 or lam <= (1.0 - chi) / (2.0 * meta.L_f):
                out.append(check_first_t_bounds(cycle[0], meta, chi, lam))
    return out


def summarize(outcomes):
    """Map checker name to ``(passed, total)``."""
    agg = {}
    for o in outcomes:
        p, t = agg.get(o.name, (0, 0))
        agg[o.name] = (p + int(o.passed), t + 1)
    return agg
