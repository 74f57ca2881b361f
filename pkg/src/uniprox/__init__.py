"""Parameter-free composite subgradient and proximal bundle methods."""

from .bundle import BundlePolicy, ResetModel, Scheme, bu_multi_cuts, bu_two_cuts, reset_model
from .errors import (
    BadSpec,
    BudgetExhausted,
    ContractViolation,
    DomainError,
    MissingDiameter,
    MissingMeta,
    NonConvergence,
    UniproxError,
)
from .instances import Family, FamilySpec, make_instance_from_spec, reference_solve
from .oracle import HcoInstance, InstanceMeta, eval_f, eval_h, eval_phi, prox_tilted_h, subgrad_f
from .proxcore import Cut, CutModel, SubproblemSolution, aggregate_cut, solve_cut_model, solve_single_cut
from .theory import BoundReport, bound_report, lambda_constant
from .trace import InnerRecord, RunTrace, SeriousRecord
from .ucs import RunResult, SolverConfig, Status, Termination, ucs_solve
from .upb import CycleState, compute_t, upb_solve, upb_step
from .verify import CheckOutcome, run_checks

__version__ = "0.1.0"
