"""Universal composite subgradient method (U-CS).

Each iteration takes one prox step on the linearization of ``f`` at the
prox-center and halves ``lam`` until the step passes the acceptance test

    f(x) - l_f(x; xc) - (1 - chi) ||x - xc||^2 / (2 lam) <= (1 - chi) epsbar / 2.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .bundle import BundlePolicy
from .errors import MissingMeta, UniproxError
from .oracle import eval_f, eval_phi
from .proxcore import CutModel, linearization, solve_single_cut
from .theory import lambda_constant  # noqa: F401  (public re-export)
from .trace import RESET, SERIOUS, STOP, InnerRecord, RunTrace, SeriousRecord

log = logging.getLogger(__name__)


class Termination(str, Enum):
    KNOWN_OPTIMAL = "KnownOptimal"
    BUDGET_ONLY = "BudgetOnly"


class Status(str, Enum):
    SOLVED = "Solved"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    ERROR = "Error"


@dataclass(frozen=True)
class SolverConfig:
    """Settings shared by U-CS and U-PB (``nbar`` and ``bundle`` are U-PB only)."""

    chi: float = 0.5
    lambda0: float = 1.0
    epsbar: float = 1e-3
    nbar: int = 10
    budget_inner: int = 100_000
    termination: Termination = Termination.KNOWN_OPTIMAL
    tol_inner: float = 1e-10
    checks: tuple = ()
    bundle: BundlePolicy = field(default_factory=BundlePolicy)

    def __post_init__(self):
        object.__setattr__(self, "termination", Termination(self.termination))
        object.__setattr__(self, "checks", tuple(self.checks))
        if not 0.0 <= self.chi < 1.0:
            raise ValueError(f"chi must lie in [0, 1), got {self.chi}")
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if not self.epsbar > 0:
            raise ValueError("epsbar must be positive")
        if int(self.nbar) != self.nbar or self.nbar < 1:
            raise ValueError("nbar must be a positive integer")
        if self.budget_inner < 1:
            raise ValueError("budget_inner must be positive")
        if not self.tol_inner > 0:
            raise ValueError("tol_inner must be positive")

    @property
    def eps(self):
        """Serious-step threshold ``(1 - chi) epsbar / 2``."""
        return (1.0 - self.chi) * self.epsbar / 2.0

    def with_(self, **kw):
        return replace(self, **kw)

    def as_dict(self):
        return {
            "chi": self.chi,
            "lambda0": self.lambda0,
            "epsbar": self.epsbar,
            "nbar": self.nbar,
            "budget_inner": self.budget_inner,
            "termination": self.termination.value,
            "tol_inner": self.tol_inner,
            "checks": list(self.checks),
            "bundle": self.bundle.as_dict(),
        }


@dataclass
class RunResult:
    status: Status
    best_point: np.ndarray
    best_value: float
    iterations_inner: int
    serious_steps: int
    halvings: int
    trace: RunTrace
    message: str = ""
    stop_point: Optional[np.ndarray] = None

    @property
    def resets(self):
        return self.halvings


def _phi_star(inst, cfg):
    if cfg.termination is Termination.KNOWN_OPTIMAL:
        if inst.meta.phi_star is None:
            raise MissingMeta("KnownOptimal termination needs meta.phi_star")
        return inst.meta.phi_star
    return None


def ucs_solve(inst, x0, cfg, run_id="ucs"):
    """Run U-CS from ``x0``.

    Every computed point is recorded; ``halvings`` counts ``lam <- lam/2``
    events and each one is logged as a ``reset`` record. Oracle failures
    end the run with status ``Error``.
    """
    phi_star = _phi_star(inst, cfg)
    xc = np.array(x0, dtype=float)
    lam = float(cfg.lambda0)
    chi, eps = cfg.chi, cfg.eps
    trace = RunTrace(run_id=run_id, method="ucs")
    best_x, best_v = xc.copy(), eval_phi(inst, xc)
    k, halvings = 1, 0
    status, message = Status.BUDGET_EXHAUSTED, ""
    cut = linearization(inst, xc)
    try:
        for j in range(1, cfg.budget_inner + 1):
            t0 = time.perf_counter_ns()
            sol = solve_single_cut(cut, inst, xc, lam)
            x = sol.x
            phi_x = eval_phi(inst, x)
            if phi_x < best_v:
                best_x, best_v = x, phi_x
            d = x - xc
            q = float(d @ d)
            t = eval_f(inst, x) - cut(x) - (1.0 - chi) * q / (2.0 * lam)
            barphi = phi_x + chi * q / (2.0 * lam)
            trace.points.append(x)
            if phi_star is not None and phi_x - phi_star <= cfg.epsbar:
                event = STOP
            elif t <= eps:
                event = SERIOUS
            else:
                event = RESET
            if event == RESET:
                halvings += 1
            rec = InnerRecord(j, k, 1, lam, t, phi_x, barphi, event, 0.0, halvings, 0)
            if event == SERIOUS:
                trace.serious.append(
                    SeriousRecord(k, lam, xc, x, x, CutModel.from_cuts([cut]), sol.weights, sol.aggregate, j)
                )
                xc, k = x, k + 1
                cut = linearization(inst, xc)
            elif event == RESET:
                lam *= 0.5
            rec.elapsed_ns = time.perf_counter_ns() - t0
            trace.records.append(rec)
            if event == STOP:
                status = Status.SOLVED
                best_x, best_v = x, phi_x
                break
    except UniproxError as exc:
        status, message = Status.ERROR, str(exc)
        log.warning("ucs run %s failed: %s", run_id, exc)
    log.info("ucs %s: %s after %d iterations", run_id, status.value, len(trace))
    return RunResult(
        status=status,
        best_point=best_x,
        best_value=best_v,
        iterations_inner=len(trace),
        serious_steps=len(trace.serious),
        halvings=halvings,
        trace=trace,
        message=message,
        stop_point=best_x if status is Status.SOLVED else None,
    )
