"""Bundle updates: the two-cuts and multiple-cuts schemes, plus cycle resets.

Both null-step updates return a model ``m+`` with
``max{m_bar, l_f(.; x)} <= m+ <= f`` where ``m_bar`` reproduces the
current subproblem solution. Reset models satisfy ``l_f(.; center) <= m <= f``.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractViolation
from .oracle import prox_tilted_h
from .proxcore import CutModel, linearization

# tolerance for the contract checks on bundle updates
CONTRACT_TOL = 1e-8


class Scheme(str, Enum):
    TWO_CUTS = "TwoCuts"
    MULTI_CUTS = "MultiCuts"


class ResetModel(str, Enum):
    FRESH_SINGLE_CUT = "FreshSingleCut"
    KEEP_ACTIVE = "KeepActive"


@dataclass(frozen=True)
class BundlePolicy:
    """How the cutting-plane model evolves inside and across cycles."""

    scheme: Scheme = Scheme.MULTI_CUTS
    max_cuts: int = 10
    reset_model: ResetModel = ResetModel.FRESH_SINGLE_CUT

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "reset_model", ResetModel(self.reset_model))
        if self.scheme is Scheme.MULTI_CUTS and self.max_cuts < 2:
            raise ValueError("MultiCuts needs max_cuts >= 2")

    def as_dict(self):
        return {"scheme": self.scheme.value, "max_cuts": self.max_cuts, "reset_model": self.reset_model.value}


def bu_two_cuts(center, sol, model, lam, new_cut, inst):
    """Two-cuts update: ``max{A+, new_cut}`` with ``A+`` the aggregate cut.

    ``model`` is ``{A}`` or ``{A, l_f(.; x_prev)}``; the weight on ``A`` in
    ``sol.weights`` plays the role of ``theta``.

    Raises
    ------
    ContractViolation
        If ``A+`` does not reproduce ``m(x)`` at ``x = sol.x`` or ``x`` is
        not the prox point of ``A+``.
    """
    if len(model) not in (1, 2):
        raise ValueError(f"two-cuts scheme expects 1 or 2 cuts, got {len(model)}")
    center = np.asarray(center, dtype=float)
    x = sol.x
    agg = sol.aggregate
    m_x = model(x)
    if abs(agg(x) - m_x) > CONTRACT_TOL * (1.0 + abs(m_x)):
        raise ContractViolation(f"aggregate value {agg(x)!r} differs from model value {m_x!r}")
    x_agg = prox_tilted_h(inst, agg.slope, center, lam)
    if np.linalg.norm(x_agg - x) > CONTRACT_TOL * (1.0 + np.linalg.norm(center)):
        raise ContractViolation("subproblem point is not the prox point of the aggregate cut")
    return CutModel.from_cuts([agg, new_cut])


def bu_multi_cuts(model, sol, new_cut, policy):
    """Multiple-cuts update keeping every active cut plus ``new_cut``.

    Cuts with positive weight are treated as active too, so the aggregate
    never exceeds the retained max. Inactive cuts are dropped oldest first
    until the model fits in ``policy.max_cuts``.
    """
    vals = model.values(sol.x)
    m = float(np.max(vals))
    active = (vals >= m - CONTRACT_TOL) | (sol.weights > 0)
    room = max(policy.max_cuts - 1 - int(active.sum()), 0)
    inactive = np.nonzero(~active)[0]
    keep_inactive = inactive[len(inactive) - room :] if room > 0 else inactive[:0]
    keep = np.sort(np.concatenate([np.nonzero(active)[0], keep_inactive]))
    return model.select(keep).with_cut(new_cut)


def reset_model(center, inst, policy, previous=None):
    """Model at the start of a cycle, always containing ``l_f(.; center)``.

    With ``KeepActive`` the previous cuts are retained (they minorize ``f``
    already): for the two-cuts scheme only the first, aggregate cut, for the
    multiple-cuts scheme the newest ``max_cuts - 1`` cuts.
    """
    base = linearization(inst, np.asarray(center, dtype=float))
    if policy.reset_model is ResetModel.FRESH_SINGLE_CUT or previous is None:
        return CutModel.from_cuts([base])
    if policy.scheme is Scheme.TWO_CUTS:
        return previous.select([0]).with_cut(base)
    n_keep = min(len(previous), policy.max_cuts - 1)
    return previous.select(range(len(previous) - n_keep, len(previous))).with_cut(base)
