import numpy as np
import pytest

from uniprox import FamilySpec, make_instance_from_spec
from uniprox.errors import BadSpec, BudgetExhausted
from uniprox.instances import Family, reference_solve
from uniprox.oracle import eval_f, eval_phi, subgrad_f

SPECS = [
    FamilySpec(family="PiecewiseLinQuad", n=4, seed=0, L=0.0, mu_h=1.0),
    FamilySpec(family="PiecewiseLinQuad", n=3, seed=1, L=2.0, mu_h=0.5, cuts=8, active=3),
    FamilySpec(family="LassoBall", n=6, m=10, seed=2, rho=0.3),
    FamilySpec(family="LassoBall", n=3, seed=3, sparsity=1.0),
    FamilySpec(family="ExpPair", n=1, alpha=2.0, r=1.5),
]


@pytest.fixture(scope="module", params=range(len(SPECS)), ids=lambda i: f"{SPECS[i].family.value}-{i}")
def inst(request):
    return make_instance_from_spec(SPECS[request.param])


def test_planted_optimum_is_consistent(inst):
    m = inst.meta
    assert m.mu_h <= m.mu_phi
    assert eval_phi(inst, m.x_star) == pytest.approx(m.phi_star, abs=1e-9 * (1 + abs(m.phi_star)))
    assert inst.feasible(m.x_star) and inst.feasible(inst.x0)
    rng = np.random.default_rng(0)
    for u in inst.sample(rng, 300):
        assert eval_phi(inst, u) >= m.phi_star - 1e-9


def test_hybrid_condition_sampled(inst):
    M, L = inst.meta.M_f, inst.meta.L_f
    rng = np.random.default_rng(1)
    xs, ys = inst.sample(rng, 1000), inst.sample(rng, 1000)
    for x, y in zip(xs, ys):
        gx, gy = subgrad_f(inst, x), subgrad_f(inst, y)
        r = float(np.linalg.norm(x - y))
        assert np.linalg.norm(gx - gy) <= 2 * M + L * r + 1e-9
        lin = eval_f(inst, y) + float(gy @ (x - y))
        assert eval_f(inst, x) - lin <= 2 * M * r + 0.5 * L * r * r + 1e-9
        assert eval_f(inst, x) >= lin - 1e-9


def test_mu_convexity_sampled(inst):
    mu = inst.meta.mu_phi
    rng = np.random.default_rng(2)
    xs, ys = inst.sample(rng, 1000), inst.sample(rng, 1000)
    for x, y, t in zip(xs, ys, rng.uniform(size=1000)):
        z = t * x + (1 - t) * y
        lhs = eval_phi(inst, z)
        rhs = t * eval_phi(inst, x) + (1 - t) * eval_phi(inst, y) - 0.5 * mu * t * (1 - t) * float((x - y) @ (x - y))
        assert lhs <= rhs + 1e-9 * (1 + abs(rhs))


def test_plq_symmetric_example():
    inst = make_instance_from_spec(
        FamilySpec(n=1, slopes=[[1.0], [-1.0]], offsets=[0, 0], L=0.0, mu_h=1.0, radius=10.0, z=[0.0], x0=[3.0])
    )
    assert eval_phi(inst, [2.0]) == 2.0 + 2.0
    assert inst.meta.phi_star == pytest.approx(0.0, abs=1e-9)
    assert abs(inst.meta.x_star[0]) <= 1e-6
    assert inst.meta.D == 20.0 and inst.meta.M_f == 1.0


def test_exp_pair_example():
    inst = make_instance_from_spec(FamilySpec(family="ExpPair", alpha=1.0, r=5.0))
    assert inst.meta.phi_star == 2.0 and inst.meta.x_star[0] == 0.0
    assert eval_phi(inst, [0.7]) == pytest.approx(np.exp(0.7) + np.exp(-0.7))
    assert inst.meta.mu_h == pytest.approx(np.exp(-5.0))


def test_lasso_identity_example():
    inst = make_instance_from_spec(
        FamilySpec(family="LassoBall", n=2, A=[[1, 0], [0, 1]], b=[1.0, 0.0], rho=0.5, radius=10.0, x0=[0.0, 0.0])
    )
    assert inst.meta.phi_star == pytest.approx(0.375, abs=1e-8)
    np.testing.assert_allclose(inst.meta.x_star, [0.5, 0.0], atol=1e-6)
    # grid check of the per-coordinate soft threshold
    u = np.linspace(-1, 2, 30001)
    vals = 0.5 * (u - 1) ** 2 + 0.5 * np.abs(u)
    assert u[np.argmin(vals)] == pytest.approx(0.5, abs=1e-4)


@pytest.mark.parametrize("spec", [FamilySpec(family="ExpPair", r=2.0), FamilySpec(n=3, seed=7),
                                  FamilySpec(family="LassoBall", n=4, seed=7)])
def test_reference_solve_matches_planted(spec):
    inst = make_instance_from_spec(spec)
    tol = 1e-6
    phi, x = reference_solve(inst, tol)
    assert abs(phi - inst.meta.phi_star) <= tol


def test_reference_solve_budget():
    inst = make_instance_from_spec(FamilySpec(family="LassoBall", n=4, seed=7))
    with pytest.raises(BudgetExhausted):
        reference_solve(inst, 1e-9, budget=3)
    with pytest.raises(ValueError):
        reference_solve(inst, 0.0)


def test_seed_reproducible():
    a = make_instance_from_spec(FamilySpec(family="LassoBall", n=5, seed=11))
    b = make_instance_from_spec(FamilySpec(family="LassoBall", n=5, seed=11))
    c = make_instance_from_spec(FamilySpec(family="LassoBall", n=5, seed=12))
    np.testing.assert_array_equal(a.x0, b.x0)
    assert a.meta.phi_star == b.meta.phi_star and a.meta.phi_star != c.meta.phi_star


@pytest.mark.parametrize("bad", [
    dict(family="Nope"),
    dict(n=0),
    dict(radius=-1.0),
    dict(colour="red"),
    dict(family="ExpPair", n=2),
    dict(family="PiecewiseLinQuad", L=0.0, mu_h=0.0),
    dict(family="PiecewiseLinQuad", cuts=2, active=3),
    dict(family="LassoBall", n=5, m=3),
    dict(family="LassoBall", n=2, rho=-1.0),
    dict(family="PiecewiseLinQuad", n=2, start_radius=50.0),
    dict(family="PiecewiseLinQuad", n=2, x0=[1.0]),
    dict(family="PiecewiseLinQuad", n=2, slopes=[[1.0, 2.0, 3.0]]),
])
def test_bad_specs(bad):
    with pytest.raises(BadSpec):
        make_instance_from_spec(bad)


def test_spec_round_trip():
    spec = FamilySpec(family="LassoBall", n=7, m=9, seed=3, rho=0.2)
    again = FamilySpec.from_dict(spec.as_dict())
    assert again == spec and again.family is Family.LASSO_BALL
