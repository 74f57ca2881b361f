import numpy as np
import pytest

from conftest import abs_value, half_square
from uniprox import FamilySpec, make_instance_from_spec, theory
from uniprox.bundle import BundlePolicy
from uniprox.proxcore import CutModel, solve_cut_model
from uniprox.trace import NULL, RESET, SERIOUS, STOP
from uniprox.ucs import SolverConfig, Status, ucs_solve
from uniprox.upb import compute_t, initial_state, upb_solve, upb_step


def test_compute_t_examples():
    inst = abs_value()
    sol = solve_cut_model(CutModel([[1.0]], [0.0]), inst, np.array([1.0]), 1.0)
    assert compute_t(sol.objective_value, sol) == 0.0
    assert sol.x[0] == 0.0 and sol.objective_value == 0.5
    assert compute_t(0.0, sol) == -0.5


def test_first_iteration_bound_smooth():
    # M_f = 0 and lam <= (1 - chi)/(2 L_f): t_i <= 0
    inst = half_square(n=2)
    cfg = SolverConfig(chi=0.5, lambda0=0.25, epsbar=1e-3)
    state = initial_state(inst, np.array([1.0, -2.0]), cfg)
    _, rec = upb_step(state, inst, cfg)
    assert rec.t_j <= 1e-12


def test_nbar_one_alternates_serious_and_reset():
    inst = make_instance_from_spec(FamilySpec(n=3, seed=1))
    cfg = SolverConfig(chi=0.5, lambda0=50.0, epsbar=1e-2, nbar=1)
    res = upb_solve(inst, inst.x0, cfg)
    for r in res.trace.records:
        assert r.N == 1 and r.event in (SERIOUS, RESET, STOP)
        if r.event == SERIOUS:
            assert r.t_j <= cfg.eps
        elif r.event == RESET:
            assert r.t_j > cfg.eps


@pytest.mark.parametrize("family,seed", [("PiecewiseLinQuad", 0), ("LassoBall", 1), ("ExpPair", 2)])
def test_equivalence_with_ucs(family, seed):
    n = 1 if family == "ExpPair" else 4
    inst = make_instance_from_spec(FamilySpec(family=family, n=n, seed=seed))
    cfg = SolverConfig(chi=0.5, lambda0=3.0, epsbar=1e-3, nbar=1, bundle=BundlePolicy(reset_model="FreshSingleCut"))
    a = ucs_solve(inst, inst.x0, cfg)
    b = upb_solve(inst, inst.x0, cfg)
    assert [r.event for r in a.trace.records] == [r.event for r in b.trace.records]
    assert max(np.max(np.abs(x - y)) for x, y in zip(a.trace.points, b.trace.points)) <= 1e-12


def test_cycle_invariants():
    inst = make_instance_from_spec(FamilySpec(family="LassoBall", n=8, seed=3))
    cfg = SolverConfig(chi=0.5, lambda0=20.0, epsbar=1e-4, nbar=4)
    res = upb_solve(inst, inst.x0, cfg)
    assert res.status is Status.SOLVED
    for cyc in res.trace.cycles():
        assert len(cyc) <= cfg.nbar
        assert [r.N for r in cyc] == list(range(1, len(cyc) + 1))
        bars = [r.barphi for r in cyc]
        assert all(a >= b for a, b in zip(bars, bars[1:]))
        assert len({r.lam for r in cyc}) == 1
    halved = [r for r in res.trace.records if r.event == RESET]
    assert res.halvings == len(halved)
    assert res.trace.records[-1].lam == cfg.lambda0 / 2 ** res.halvings


def test_no_reset_below_threshold():
    inst = make_instance_from_spec(FamilySpec(n=3, seed=4, L=1.0, mu_h=1.0, slope_scale=0.05, radius=2.0))
    base = SolverConfig(chi=0.5, epsbar=1e-2, nbar=10)
    lam = theory.no_reset_lambda(inst.meta, base.chi, base.epsbar, base.nbar)
    res = upb_solve(inst, inst.x0, base.with_(lambda0=lam))
    assert res.status is Status.SOLVED
    assert res.trace.count(RESET) == 0 and np.all(res.trace.lambdas == lam)


def test_stop_point_reporting():
    inst = make_instance_from_spec(FamilySpec(family="ExpPair", n=1, r=2.0, start_radius=2.0))
    res = upb_solve(inst, inst.x0, SolverConfig(chi=0.5, lambda0=1.0, epsbar=1e-6))
    flags = res.trace.flags
    assert {"stop_point_disagreement", "phi_stop_x", "phi_stop_y"} <= set(flags)
    assert res.best_value == min(flags["phi_stop_x"], flags["phi_stop_y"])


@pytest.mark.parametrize("scheme,reset", [("TwoCuts", "FreshSingleCut"), ("TwoCuts", "KeepActive"),
                                          ("MultiCuts", "KeepActive")])
def test_policies_solve(scheme, reset):
    inst = make_instance_from_spec(FamilySpec(family="LassoBall", n=5, seed=0))
    cfg = SolverConfig(epsbar=1e-3, nbar=6, bundle=BundlePolicy(scheme=scheme, max_cuts=4, reset_model=reset))
    res = upb_solve(inst, inst.x0, cfg)
    assert res.status is Status.SOLVED
    assert res.best_value - inst.meta.phi_star <= cfg.epsbar
    if scheme == "TwoCuts":
        assert all(len(r.model_snapshot) <= 2 for r in res.trace.serious)
    assert res.trace.count(NULL) > 0
