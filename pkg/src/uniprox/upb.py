"""Universal proximal bundle method (U-PB).

Inner iterations solve bundle subproblems around a fixed prox-center.
A cycle ends with a serious update once ``t_j <= (1 - chi) epsbar / 2``,
or with a reset (``lam`` halved, center kept) after ``nbar`` iterations
without success; otherwise a null update refines the model.
"""

import logging
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .bundle import Scheme, bu_multi_cuts, bu_two_cuts, reset_model
from .errors import UniproxError
from .oracle import eval_phi
from .proxcore import CutModel, linearization, solve_cut_model
from .trace import NULL, RESET, SERIOUS, STOP, InnerRecord, RunTrace, SeriousRecord
from .ucs import RunResult, Status, _phi_star

log = logging.getLogger(__name__)

__all__ = ["CycleState", "InnerRecord", "compute_t", "initial_state", "upb_step", "upb_solve"]


@dataclass
class CycleState:
    """Solver state between inner iterations.

    ``N`` counts the iterations already performed in the current cycle,
    ``barphi``/``y_best`` are meaningful only when ``N > 0``.
    """

    k: int
    j: int
    N: int
    lam: float
    center: np.ndarray
    model: CutModel
    barphi: float
    y_best: np.ndarray
    t_first: float
    halvings: int = 0
    # filled by upb_step for the caller
    x_last: Optional[np.ndarray] = None
    phi_last: float = np.nan
    sol_last: object = None
    serious_last: Optional[SeriousRecord] = None


def compute_t(barphi, sol):
    """Gap between the best penalized value and the subproblem optimum."""
    return float(barphi - sol.objective_value)


def initial_state(inst, x0, cfg):
    x0 = np.array(x0, dtype=float)
    model = reset_model(x0, inst, cfg.bundle)
    return CycleState(k=1, j=1, N=0, lam=float(cfg.lambda0), center=x0, model=model,
                      barphi=np.inf, y_best=x0, t_first=np.nan)


def upb_step(state, inst, cfg, phi_star=None):
    """Perform inner iteration ``state.j``; return ``(new_state, record)``.

    ``phi_star`` enables the stop test; the returned state is unchanged
    apart from bookkeeping when the record's event is ``stop``.
    """
    t0 = time.perf_counter_ns()
    lam, center, chi = state.lam, state.center, cfg.chi
    sol = solve_cut_model(state.model, inst, center, lam, tol=cfg.tol_inner)
    x = sol.x
    phi_x = eval_phi(inst, x)
    d = x - center
    cand = phi_x + chi * float(d @ d) / (2.0 * lam)
    if state.N == 0 or cand < state.barphi:
        barphi, y_best = cand, x
    else:
        barphi, y_best = state.barphi, state.y_best
    N = state.N + 1
    t = compute_t(barphi, sol)
    t_first = t if N == 1 else state.t_first
    new = replace(state, N=N, barphi=barphi, y_best=y_best, t_first=t_first,
                  x_last=x, phi_last=phi_x, sol_last=sol, serious_last=None)

    if phi_star is not None and phi_x - phi_star <= cfg.epsbar:
        event = STOP
    elif t > cfg.eps and N < cfg.nbar:
        event = NULL
        new_cut = linearization(inst, x)
        if cfg.bundle.scheme is Scheme.TWO_CUTS:
            new.model = bu_two_cuts(center, sol, state.model, lam, new_cut, inst)
        else:
            new.model = bu_multi_cuts(state.model, sol, new_cut, cfg.bundle)
    elif t > cfg.eps:
        event = RESET
        new.lam = lam / 2.0
        new.halvings = state.halvings + 1
        new.N = 0
        new.model = reset_model(center, inst, cfg.bundle, state.model)
    else:
        event = SERIOUS
        new.serious_last = SeriousRecord(state.k, lam, center, x, y_best, state.model,
                                         sol.weights, sol.aggregate, state.j)
        new.k = state.k + 1
        new.center = x
        new.N = 0
        new.model = reset_model(x, inst, cfg.bundle, state.model)
    rec = InnerRecord(state.j, state.k, N, lam, t, phi_x, barphi, event,
                      sol.inner_gap, new.halvings, time.perf_counter_ns() - t0)
    if event != STOP:
        new.j = state.j + 1
    return new, rec


def upb_solve(inst, x0, cfg, run_id="upb"):
    """Run U-PB from ``x0``.

    At a stop the reported point is the better of the stopping iterate
    ``x_j`` and the cycle's best point ``y_j``; ``trace.flags`` records
    whether the two differ.
    """
    phi_star = _phi_star(inst, cfg)
    trace = RunTrace(run_id=run_id, method="upb")
    state = initial_state(inst, x0, cfg)
    best_x, best_v = state.center.copy(), eval_phi(inst, state.center)
    status, message, stop_point = Status.BUDGET_EXHAUSTED, "", None
    try:
        for _ in range(cfg.budget_inner):
            state, rec = upb_step(state, inst, cfg, phi_star)
            trace.records.append(rec)
            trace.points.append(state.x_last)
            if state.phi_last < best_v:
                best_x, best_v = state.x_last, state.phi_last
            if state.serious_last is not None:
                trace.serious.append(state.serious_last)
            if rec.event == STOP:
                status = Status.SOLVED
                x, y = state.x_last, state.y_best
                phi_y = eval_phi(inst, y)
                trace.flags["stop_point_disagreement"] = bool(np.any(x != y))
                trace.flags["phi_stop_x"] = state.phi_last
                trace.flags["phi_stop_y"] = phi_y
                stop_point = x if state.phi_last <= phi_y else y
                best_x, best_v = stop_point, min(state.phi_last, phi_y)
                break
    except UniproxError as exc:
        status, message = Status.ERROR, str(exc)
        log.warning("upb run %s failed: %s", run_id, exc)
    log.info("upb %s: %s after %d inner iterations", run_id, status.value, len(trace))
    return RunResult(
        status=status,
        best_point=best_x,
        best_value=best_v,
        iterations_inner=len(trace),
        serious_steps=len(trace.serious),
        halvings=state.halvings,
        trace=trace,
        message=message,
        stop_point=stop_point,
    )
