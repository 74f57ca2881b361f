"""Synthetic benchmark families with exactly known metadata.

Random families plant their optimum: the data are drawn so that a chosen
point satisfies the optimality conditions, which makes ``phi_star`` and
``x_star`` exact. Explicitly supplied data fall back to
:func:`reference_solve`.

Random stream order (``numpy.random.default_rng(seed)``):

* PiecewiseLinQuad: slopes, active weights, planted optimum, inactive
  margins, start direction.
* LassoBall: matrix ``A``, support, nonzero values, zero-coordinate
  subgradients, start direction.
* ExpPair: start direction.
"""

from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Optional

import numpy as np

from .errors import BadSpec
from .oracle import ExpIntervalH, InstanceMeta, QuadraticBallH, eval_phi, subgrad_f
from .oracle import make_instance as _assemble


class Family(str, Enum):
    PIECEWISE_LIN_QUAD = "PiecewiseLinQuad"
    LASSO_BALL = "LassoBall"
    EXP_PAIR = "ExpPair"


@dataclass
class FamilySpec:
    """Family name plus parameters; unused parameters are ignored.

    Explicit data (``slopes``/``offsets``/``z`` or ``A``/``b``) replace the
    random draw; ``x0`` replaces the random start point.
    """

    family: Family = Family.PIECEWISE_LIN_QUAD
    # defaults to 1 for ExpPair and 2 otherwise
    n: Optional[int] = None
    m: Optional[int] = None
    seed: int = 0
    # PiecewiseLinQuad
    cuts: int = 5
    active: int = 2
    L: float = 0.0
    mu_h: float = 1.0
    slope_scale: float = 1.0
    # LassoBall
    rho: float = 0.1
    sparsity: float = 0.5
    # shared ball radius
    radius: float = 10.0
    # ExpPair
    alpha: float = 1.0
    r: float = 1.0
    start_radius: float = 1.0
    slopes: Optional[list] = None
    offsets: Optional[list] = None
    z: Optional[list] = None
    A: Optional[list] = None
    b: Optional[list] = None
    x0: Optional[list] = None

    def __post_init__(self):
        try:
            self.family = Family(self.family)
        except ValueError:
            raise BadSpec(f"unknown family {self.family!r}") from None
        if self.n is None:
            self.n = 1 if self.family is Family.EXP_PAIR else 2
        if self.n < 1:
            raise BadSpec("n must be positive")
        if not self.radius > 0:
            raise BadSpec("radius must be positive")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise BadSpec(f"unknown instance fields: {sorted(extra)}")
        return cls(**d)

    def as_dict(self):
        d = asdict(self)
        d["family"] = self.family.value
        return {k: v for k, v in d.items() if v is not None}


def _unit(rng, n):
    d = rng.standard_normal(n)
    return d / np.linalg.norm(d)


def _start(spec, rng, n, limit):
    if spec.x0 is not None:
        x0 = np.asarray(spec.x0, dtype=float)
        if x0.shape != (n,):
            raise BadSpec(f"x0 must have length {n}")
        return x0
    if not 0 < spec.start_radius <= limit:
        raise BadSpec("start_radius must lie inside the domain")
    return spec.start_radius * _unit(rng, n)


def _min_norm_in_hull(G, base):
    """Minimum-norm point of ``base + conv(rows of G)`` (projected gradient)."""
    from .proxcore import project_simplex

    k = G.shape[0]
    w = np.full(k, 1.0 / k)
    step = 1.0 / max(float(np.linalg.norm(G, 2)) ** 2, 1e-300)
    for _ in range(500):
        g = G @ (base + G.T @ w)
        w_new = project_simplex(w - step * g)
        if np.max(np.abs(w_new - w)) <= 1e-15:
            break
        w = w_new
    return base + G.T @ w


# ---------------------------------------------------------------------------
# PiecewiseLinQuad: f = max_i(<a_i,x> + c_i) + (L/2)||x - z||^2,
#                   h = (mu_h/2)||x||^2 + indicator(||x|| <= R)


def _plq(spec):
    n, L, mu_h, R = spec.n, float(spec.L), float(spec.mu_h), float(spec.radius)
    if L < 0 or mu_h < 0:
        raise BadSpec("L and mu_h must be nonnegative")
    if L + mu_h == 0:
        raise BadSpec("PiecewiseLinQuad needs L + mu_h > 0 for a unique optimum")
    rng = np.random.default_rng(spec.seed)
    planted = spec.slopes is None
    if planted:
        p = int(spec.cuts)
        q = int(spec.active)
        if not 1 <= q <= p:
            raise BadSpec("need 1 <= active <= cuts")
        a = spec.slope_scale * rng.standard_normal((p, n))
        w = rng.dirichlet(np.ones(q))
        sw = w @ a[:q]
        if L > 0:
            x_star = 0.5 * R * rng.uniform() ** (1.0 / n) * _unit(rng, n)
            z = ((L + mu_h) * x_star + sw) / L
        else:
            z = np.zeros(n)
            x_star = -sw / mu_h
        if not np.linalg.norm(x_star) < R:
            raise BadSpec("planted optimum falls outside the ball; enlarge radius")
        margins = rng.uniform(0.1, 1.0, size=p - q) * spec.slope_scale
        c = -(a @ x_star)
        c[q:] -= margins
    else:
        a = np.atleast_2d(np.asarray(spec.slopes, dtype=float))
        if a.shape[1] != n:
            raise BadSpec(f"slopes must have {n} columns")
        c = np.asarray(spec.offsets if spec.offsets is not None else np.zeros(a.shape[0]), dtype=float)
        if c.shape != (a.shape[0],):
            raise BadSpec("offsets must match the number of slopes")
        z = np.zeros(n) if spec.z is None else np.asarray(spec.z, dtype=float)
        x_star = None
    x0 = _start(spec, rng, n, R)

    def f_value(x):
        d = x - z
        return float(np.max(a @ x + c)) + 0.5 * L * float(d @ d)

    def f_subgrad(x):
        vals = a @ x + c
        top = np.nonzero(vals == np.max(vals))[0]
        smooth = L * (x - z)
        if top.size == 1:
            return a[top[0]] + smooth
        return _min_norm_in_hull(a[top], smooth)

    h = QuadraticBallH(n, mu_h, R)
    M = float(np.max(np.linalg.norm(a, axis=1)))
    meta = InstanceMeta(n=n, M_f=M, L_f=L, mu_phi=L + mu_h, mu_h=mu_h, D=2.0 * R)
    inst = _assemble(meta, f_value, f_subgrad, h, name="PiecewiseLinQuad", x0=x0, spec=spec.as_dict())
    if x_star is not None:
        phi_star = eval_phi(inst, x_star)
        return _with_optimum(inst, phi_star, x_star)
    return inst


# ---------------------------------------------------------------------------
# LassoBall: f = 0.5||Ax - b||^2 + rho||x||_1, h = indicator(||x|| <= R)


def _lasso(spec):
    n = spec.n
    m = spec.m if spec.m is not None else 2 * n
    rho, R = float(spec.rho), float(spec.radius)
    if rho < 0:
        raise BadSpec("rho must be nonnegative")
    rng = np.random.default_rng(spec.seed)
    planted = spec.A is None
    if planted:
        if m < n:
            raise BadSpec("LassoBall needs m >= n so that A has full column rank")
        A = rng.standard_normal((m, n)) / np.sqrt(m)
        k = max(1, int(round(spec.sparsity * n)))
        support = rng.choice(n, size=k, replace=False)
        x_star = np.zeros(n)
        x_star[support] = rng.uniform(0.5, 1.5, size=k) * rng.choice([-1.0, 1.0], size=k)
        s = rng.uniform(-1.0, 1.0, size=n)
        s[support] = np.sign(x_star[support])
        if not np.linalg.norm(x_star) < R:
            raise BadSpec("planted optimum falls outside the ball; enlarge radius")
        b = A @ x_star + rho * A @ np.linalg.solve(A.T @ A, s)
    else:
        A = np.atleast_2d(np.asarray(spec.A, dtype=float))
        b = np.asarray(spec.b, dtype=float)
        if A.shape[1] != n or b.shape != (A.shape[0],):
            raise BadSpec("A must be m x n and b of length m")
        x_star = None
    x0 = _start(spec, rng, n, R)
    eig = np.linalg.eigvalsh(A.T @ A)
    L, mu = float(eig[-1]), float(max(eig[0], 0.0))

    def f_value(x):
        r = A @ x - b
        return 0.5 * float(r @ r) + rho * float(np.sum(np.abs(x)))

    def f_subgrad(x):
        g = A.T @ (A @ x - b)
        nz = x != 0
        out = g - np.clip(g, -rho, rho)
        out[nz] = g[nz] + rho * np.sign(x[nz])
        return out

    h = QuadraticBallH(n, 0.0, R)
    meta = InstanceMeta(n=n, M_f=rho * np.sqrt(n), L_f=L, mu_phi=mu, mu_h=0.0, D=2.0 * R)
    inst = _assemble(meta, f_value, f_subgrad, h, name="LassoBall", x0=x0, spec=spec.as_dict())
    if x_star is not None:
        return _with_optimum(inst, eval_phi(inst, x_star), x_star)
    return inst


# ---------------------------------------------------------------------------
# ExpPair: f = alpha e^x, h = alpha e^{-x} + indicator([-r, r]) in one dimension


def _exp_pair(spec):
    if spec.n != 1:
        raise BadSpec("ExpPair is one-dimensional")
    alpha, r = float(spec.alpha), float(spec.r)
    if alpha <= 0 or r <= 0:
        raise BadSpec("alpha and r must be positive")
    rng = np.random.default_rng(spec.seed)
    x0 = _start(spec, rng, 1, r)

    def f_value(x):
        return alpha * float(np.exp(x[0]))

    def f_subgrad(x):
        return np.array([alpha * np.exp(x[0])])

    h = ExpIntervalH(alpha, r)
    meta = InstanceMeta(n=1, M_f=0.0, L_f=alpha * np.exp(r), mu_phi=2.0 * alpha, mu_h=alpha * np.exp(-r),
                        phi_star=2.0 * alpha, x_star=np.zeros(1), D=2.0 * r)
    return _assemble(meta, f_value, f_subgrad, h, name="ExpPair", x0=x0, spec=spec.as_dict())


def _with_optimum(inst, phi_star, x_star):
    from dataclasses import replace

    meta = replace(inst.meta, phi_star=float(phi_star), x_star=np.asarray(x_star, dtype=float))
    return replace(inst, meta=meta)


_BUILDERS = {
    Family.PIECEWISE_LIN_QUAD: _plq,
    Family.LASSO_BALL: _lasso,
    Family.EXP_PAIR: _exp_pair,
}


def make_instance_from_spec(spec, resolve_optimum=True, tol=1e-9):
    """Build the instance described by ``spec``.

    For explicit data without a planted optimum, ``resolve_optimum`` runs
    :func:`reference_solve` to fill ``phi_star`` and ``x_star``.
    """
    if isinstance(spec, dict):
        spec = FamilySpec.from_dict(spec)
    inst = _BUILDERS[spec.family](spec)
    if resolve_optimum and inst.meta.phi_star is None:
        phi_star, x_star = reference_solve(inst, tol)
        inst = _with_optimum(inst, phi_star, x_star)
    return inst


# ``make_instance`` in this module takes a FamilySpec
make_instance = make_instance_from_spec


def optimality_certificate(inst, rec):
    """Upper bound on ``phi(y_hat) - phi_star`` from a serious record.

    Uses ``s = (x_prev - x_hat)/lam`` as an ``eta``-subgradient at
    ``y_hat``: with ``mu = meta.mu_phi > 0`` the bound is
    ``2 eta + ||s||^2/mu``, otherwise ``eta + ||s|| D``.
    """
    from .oracle import eval_h

    lam, xm, x, y = rec.lam_k, rec.center_prev, rec.x_hat, rec.y_hat
    s = (xm - x) / lam
    eta = eval_phi(inst, y) - rec.model_snapshot(x) - eval_h(inst, x) - float(s @ (y - x))
    eta = max(eta, 0.0)
    ns = float(np.linalg.norm(s))
    mu = inst.meta.mu_phi
    if mu > 0:
        return 2.0 * eta + ns * ns / mu
    if inst.meta.D is not None:
        return eta + ns * inst.meta.D
    return np.inf


def polish(inst, x, lam, steps=200):
    """Prox-linear fixed-point steps from ``x``, kept only while ``phi`` drops.

    Returns ``(phi, x)``. The stepsize is halved after a rejected step.
    """
    from .oracle import prox_tilted_h

    x = np.array(x, dtype=float)
    v = eval_phi(inst, x)
    for _ in range(steps):
        y = prox_tilted_h(inst, subgrad_f(inst, x), x, lam)
        w = eval_phi(inst, y)
        if w < v:
            x, v = y, w
        else:
            lam *= 0.5
    return float(v), x


def reference_solve(inst, tol, budget=1_000_000, x0=None):
    """Independent high-accuracy solve returning ``(phi_star, x_star)``.

    Runs U-PB with ``epsbar = tol / 10`` until the certificate of
    :func:`optimality_certificate` drops to ``tol``, then applies
    :func:`polish`; needs no ``phi_star``.

    Raises
    ------
    BudgetExhausted
        If the certificate does not reach ``tol`` within ``budget`` inner
        iterations.
    """
    from .errors import BudgetExhausted
    from .ucs import SolverConfig, Termination
    from .upb import initial_state, upb_step

    if not tol > 0:
        raise ValueError("tol must be positive")
    cfg = SolverConfig(chi=0.5, lambda0=1.0, epsbar=tol / 10.0, nbar=20, budget_inner=budget,
                       termination=Termination.BUDGET_ONLY)
    start = inst.x0 if x0 is None else x0
    if start is None:
        start = np.zeros(inst.n)
    state = initial_state(inst, start, cfg)
    best_x, best_v, best_cert = state.center, eval_phi(inst, state.center), np.inf
    for _ in range(budget):
        state, rec = upb_step(state, inst, cfg)
        if state.serious_last is not None:
            sr = state.serious_last
            cert = optimality_certificate(inst, sr)
            v = eval_phi(inst, sr.y_hat)
            if v < best_v:
                best_x, best_v = sr.y_hat, v
            best_cert = min(best_cert, cert)
            if cert <= tol:
                return polish(inst, best_x, sr.lam_k)
    raise BudgetExhausted(f"reference solve stopped at certificate {best_cert:.3e} > {tol:.1e}")
