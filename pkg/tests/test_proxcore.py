import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assert_solution_invariants, half_square, zero_h
from uniprox.errors import NonConvergence
from uniprox.instances import FamilySpec, make_instance_from_spec
from uniprox.oracle import QuadraticBallH, InstanceMeta, make_instance
from uniprox.proxcore import (
    Cut,
    CutModel,
    aggregate_cut,
    linearization,
    project_simplex,
    solve_cut_model,
    solve_single_cut,
)

PM = CutModel([[1.0], [-1.0]], [0.0, 0.0])


def test_single_cut_examples():
    inst = zero_h(1)
    sol = solve_single_cut(Cut(np.array([1.0]), 0.0), inst, np.zeros(1), 1.0)
    assert sol.x[0] == -1.0 and sol.inner_gap == 0.0
    sol = solve_single_cut(Cut(np.array([0.0]), 3.0), inst, np.array([0.7]), 2.0)
    assert sol.x[0] == 0.7
    cut = linearization(half_square(), np.array([1.0]))
    assert (cut.slope[0], cut.offset) == (1.0, -0.5)
    assert solve_single_cut(cut, inst, np.array([1.0]), 1.0).x[0] == 0.0


def test_one_cut_model_reduces_to_single_cut():
    inst = zero_h(2)
    cut = Cut(np.array([0.3, -1.0]), 0.2)
    a = solve_cut_model(CutModel.from_cuts([cut]), inst, np.ones(2), 0.5)
    b = solve_single_cut(cut, inst, np.ones(2), 0.5)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.weights, [1.0])


def test_symmetric_pair():
    sol = solve_cut_model(PM, zero_h(1), np.zeros(1), 1.0)
    assert abs(sol.x[0]) <= 1e-10
    np.testing.assert_allclose(sol.weights, [0.5, 0.5], atol=1e-8)
    agg = aggregate_cut(sol, PM)
    assert abs(agg.slope[0]) <= 1e-8 and abs(agg.offset) <= 1e-12


def test_shifted_pair():
    sol = solve_cut_model(PM, zero_h(1), np.array([0.3]), 1.0)
    assert abs(sol.x[0]) <= 1e-10
    np.testing.assert_allclose(sol.weights, [0.65, 0.35], atol=1e-8)
    agg = aggregate_cut(sol, PM)
    assert agg.slope[0] == pytest.approx(0.3, abs=1e-8)
    # dense grid reference for max|u| + (u - 0.3)^2 / 2
    u = np.linspace(-1, 1, 200001)
    assert u[np.argmin(np.abs(u) + (u - 0.3) ** 2 / 2)] == pytest.approx(0.0, abs=1e-5)


def test_cut_model_validation():
    with pytest.raises(ValueError):
        CutModel(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        CutModel([[1.0], [2.0]], [0.0])
    with pytest.raises(ValueError):
        CutModel.from_cuts([])
    with pytest.raises(ValueError):
        solve_cut_model(PM, zero_h(1), np.zeros(1), -1.0)


def test_nonconvergence_reports_state():
    rng = np.random.default_rng(3)
    model = CutModel(rng.standard_normal((6, 2)), rng.standard_normal(6))
    with pytest.raises(NonConvergence) as err:
        solve_cut_model(model, zero_h(2), np.zeros(2), 1.0, tol=1e-300, max_iter=1)
    assert "gap" in err.value.state


def test_project_simplex():
    np.testing.assert_allclose(project_simplex(np.array([0.2, 0.3, 0.5])), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex(np.array([5.0, 0.0])), [1.0, 0.0])
    np.testing.assert_allclose(project_simplex(np.array([1.0, 1.0])), [0.5, 0.5])


def _ball_inst(n, mu, R):
    h = QuadraticBallH(n, mu, R)
    meta = InstanceMeta(n=n, M_f=0.0, L_f=0.0, mu_phi=mu, mu_h=mu)
    return make_instance(meta, lambda x: 0.0, lambda x: np.zeros(n), h)


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(1, 3),
    k=st.integers(1, 8),
    seed=st.integers(0, 2**32 - 1),
    mu=st.sampled_from([0.0, 0.5, 2.0]),
    R=st.sampled_from([np.inf, 0.5, 3.0]),
    loglam=st.floats(-2, 1),
)
def test_invariants_random_models(n, k, seed, mu, R, loglam):
    rng = np.random.default_rng(seed)
    inst = _ball_inst(n, mu, R)
    model = CutModel(rng.standard_normal((k, n)), rng.standard_normal(k))
    c = rng.standard_normal(n)
    sol = solve_cut_model(model, inst, c, 10**loglam)
    assert_solution_invariants(sol, model, inst)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 5))
def test_adding_a_cut_never_lowers_the_minimum(seed, k):
    rng = np.random.default_rng(seed)
    inst = _ball_inst(2, 0.0, np.inf)
    model = CutModel(rng.standard_normal((k, 2)), rng.standard_normal(k))
    extra = Cut(rng.standard_normal(2), float(rng.standard_normal()))
    c, lam = rng.standard_normal(2), 10 ** rng.uniform(-1, 0.5)
    a = solve_cut_model(model, inst, c, lam)
    b = solve_cut_model(model.with_cut(extra), inst, c, lam)
    assert b.objective_value >= a.objective_value - 1e-9


def test_large_stepsize_on_ball_boundary():
    # gradient and Newton steps used to undo each other here and stall
    inst = make_instance_from_spec(FamilySpec(family="LassoBall", seed=1, n=5))
    model = CutModel(
        [[0.47778114, -0.11984075, -0.84925049, 0.34110091, 1.16453067],
         [-5.43404206, 1.09864158, 6.03163701, -1.37530269, -8.89474302],
         [1.82980813, 0.78608443, 4.01116292, -1.31690602, -4.29688926]],
        [0.63238073, -63.23052094, -29.75401065],
    )
    c = np.array([0.03561099, 0.17955564, -0.64649201, -0.72889073, 0.13136975])
    sol = solve_cut_model(model, inst, c, 1000.0)
    assert_solution_invariants(sol, model, inst)
    assert sol.iterations < 100


@settings(max_examples=100, deadline=None)
@given(k=st.integers(2, 6), seed=st.integers(0, 2**32 - 1), loglam=st.floats(0, 3))
def test_invariants_l1_ball_large_stepsizes(k, seed, loglam):
    inst = make_instance_from_spec(FamilySpec(family="LassoBall", seed=1, n=5))
    rng = np.random.default_rng(seed)
    model = CutModel(5 * rng.standard_normal((k, 5)), 30 * rng.standard_normal(k))
    sol = solve_cut_model(model, inst, rng.standard_normal(5), 10**loglam)
    assert_solution_invariants(sol, model, inst)
