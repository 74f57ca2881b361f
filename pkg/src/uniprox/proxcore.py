"""Prox bundle subproblem solver.

Solves ``min_u m(u) + h(u) + ||u - c||^2 / (2 lam)`` for a max-of-affine
model ``m`` through its dual over the simplex of cut weights ``w``::

    D(w) = sum_i w_i * offset_i + min_u <S^T w, u> + h(u) + ||u - c||^2/(2 lam)

The inner minimizer is one tilted prox call, ``u(w) = prox_tilted_h(S^T w,
c, lam)``, and the dual gradient is the vector of cut values at ``u(w)``.
The duality gap ``max_i v_i - <w, v>`` certifies every returned solution.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence
from .oracle import eval_f, eval_h, prox_tilted_h, subgrad_f

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class Cut:
    """Affine function ``u -> offset + <slope, u>``."""

    slope: np.ndarray
    offset: float

    def __call__(self, u):
        return float(self.offset + self.slope @ u)


class CutModel:
    """Max of finitely many cuts, stored oldest first."""

    def __init__(self, slopes, offsets):
        slopes = np.atleast_2d(np.asarray(slopes, dtype=float))
        offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        if slopes.shape[0] == 0:
            raise ValueError("a cut model needs at least one cut")
        if slopes.shape[0] != offsets.shape[0]:
            raise ValueError("slopes and offsets disagree in length")
        self.slopes = slopes
        self.offsets = offsets
        self.slopes.setflags(write=False)
        self.offsets.setflags(write=False)

    @classmethod
    def from_cuts(cls, cuts):
        cuts = list(cuts)
        if not cuts:
            raise ValueError("a cut model needs at least one cut")
        return cls(np.vstack([c.slope for c in cuts]), np.array([c.offset for c in cuts]))

    def __len__(self):
        return self.offsets.shape[0]

    def __repr__(self):
        return f"CutModel({len(self)} cuts, n={self.slopes.shape[1]})"

    @property
    def cuts(self):
        return [Cut(s.copy(), float(o)) for s, o in zip(self.slopes, self.offsets)]

    def values(self, u):
        return self.offsets + self.slopes @ u

    def __call__(self, u):
        return float(np.max(self.values(u)))

    def select(self, idx):
        idx = list(idx)
        return CutModel(self.slopes[idx], self.offsets[idx])

    def with_cut(self, cut):
        return CutModel(
            np.vstack([self.slopes, cut.slope[None, :]]),
            np.append(self.offsets, cut.offset),
        )


@dataclass
class SubproblemSolution:
    x: np.ndarray
    model_value: float
    objective_value: float
    weights: np.ndarray
    aggregate: Cut
    inner_gap: float
    dual_value: float
    center: np.ndarray
    lam: float
    iterations: int = 0


def linearization(inst, x):
    """The cut ``l_f(.; x) = f(x) + <f'(x), . - x>``."""
    g = subgrad_f(inst, x)
    return Cut(g, eval_f(inst, x) - float(g @ x))


def aggregate_cut(sol, model):
    """Convex combination of the model's cuts by the solution's weights."""
    w = sol.weights
    return Cut(model.slopes.T @ w, float(model.offsets @ w))


def solve_single_cut(cut, inst, center, lam):
    center = np.asarray(center, dtype=float)
    x = prox_tilted_h(inst, cut.slope, center, lam)
    m = cut(x)
    quad = eval_h(inst, x) + float((x - center) @ (x - center)) / (2.0 * lam)
    return SubproblemSolution(
        x=x,
        model_value=m,
        objective_value=m + quad,
        weights=np.ones(1),
        aggregate=Cut(np.array(cut.slope, dtype=float), float(cut.offset)),
        inner_gap=0.0,
        dual_value=m + quad,
        center=center,
        lam=float(lam),
    )


def project_simplex(y):
    """Euclidean projection onto the unit simplex (sort-based)."""
    k = y.shape[0]
    s = np.sort(y)[::-1]
    css = np.cumsum(s) - 1.0
    ind = np.arange(1, k + 1)
    rho = np.nonzero(s - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


class _Dual:
    """Evaluates the dual at a weight vector; caches the last point."""

    def __init__(self, model, inst, center, lam):
        self.S = model.slopes
        self.o = model.offsets
        self.inst = inst
        self.c = center
        self.lam = lam
        self.evals = 0

    def u_of(self, g):
        self.evals += 1
        return prox_tilted_h(self.inst, g, self.c, self.lam)

    def point(self, w):
        u = self.u_of(self.S.T @ w)
        v = self.o + self.S @ u
        d = u - self.c
        quad = eval_h(self.inst, u) + float(d @ d) / (2.0 * self.lam)
        vmax = float(np.max(v))
        wv = float(w @ v)
        return _Point(w, u, v, vmax + quad, wv + quad, max(vmax - wv, 0.0), vmax)


@dataclass
class _Point:
    w: np.ndarray
    u: np.ndarray
    v: np.ndarray
    primal: float
    dual: float
    gap: float
    vmax: float


def _solution(pt, model, center, lam, iterations):
    return SubproblemSolution(
        x=pt.u,
        model_value=pt.vmax,
        objective_value=pt.primal,
        weights=pt.w,
        aggregate=Cut(model.slopes.T @ pt.w, float(model.offsets @ pt.w)),
        inner_gap=pt.gap,
        dual_value=pt.dual,
        center=center,
        lam=float(lam),
        iterations=iterations,
    )


def _solve_two(dual, tol, max_iter):
    # d(theta) = v_1 - v_2 is nonincreasing along w = (theta, 1 - theta)
    p1 = dual.point(np.array([1.0, 0.0]))
    if p1.v[0] >= p1.v[1]:
        return p1, 1
    p0 = dual.point(np.array([0.0, 1.0]))
    if p0.v[1] >= p0.v[0]:
        return p0, 2
    a, da = 0.0, p0.v[0] - p0.v[1]
    b, db = 1.0, p1.v[0] - p1.v[1]
    best = p0 if p0.gap <= p1.gap else p1
    side = 0
    target = tol * 1e-3
    for it in range(max_iter):
        # regula falsi with the Illinois modification, bisection as safeguard
        theta = (a * db - b * da) / (db - da) if db != da else 0.5 * (a + b)
        if not a < theta < b:
            theta = 0.5 * (a + b)
        p = dual.point(np.array([theta, 1.0 - theta]))
        if p.gap < best.gap:
            best = p
        if best.gap <= target or b - a <= 4.0 * np.spacing(1.0):
            return best, it + 3
        d = p.v[0] - p.v[1]
        if d > 0:
            a, da = theta, d
            if side == 1:
                db *= 0.5
            side = 1
        elif d < 0:
            b, db = theta, d
            if side == -1:
                da *= 0.5
            side = -1
        else:
            return p, it + 3
        if it % 3 == 2:
            # guarantee geometric shrinkage of the bracket
            mid = 0.5 * (a + b)
            pm = dual.point(np.array([mid, 1.0 - mid]))
            if pm.gap < best.gap:
                best = pm
            dm = pm.v[0] - pm.v[1]
            if dm > 0:
                a, da = mid, dm
            elif dm < 0:
                b, db = mid, dm
            else:
                return pm, it + 3
    return best, max_iter


def _newton_direction(dual, pt, support, delta=1e-7):
    """Newton direction on the face spanned by ``support``."""
    S = dual.S
    g = S.T @ pt.w
    A = np.asarray(support)
    k = A.shape[0]
    H = np.empty((k, k))
    for col, i in enumerate(A):
        ui = dual.u_of(g + delta * S[i])
        H[:, col] = S[A] @ (ui - pt.u) / delta
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = H
    K[:k, k] = -1.0
    K[k, :k] = 1.0
    rhs = np.concatenate([-pt.v[A], [0.0]])
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    d = np.zeros_like(pt.w)
    d[A] = sol[:k]
    d -= d.sum() / k * np.isin(np.arange(d.shape[0]), A)
    return d


def _solve_general(dual, tol, max_iter, w0):
    k = dual.o.shape[0]
    w = np.full(k, 1.0 / k) if w0 is None else project_simplex(np.asarray(w0, dtype=float))
    pt = best = dual.point(w)
    lip = dual.lam * float(np.linalg.norm(dual.S, 2)) ** 2
    alpha = 1.0 / lip if lip > 0 else 1.0

    def noise(p):
        return 1e-14 * (1.0 + abs(p.dual))

    for it in range(max_iter):
        if best.gap <= tol:
            return best, it
        # projected gradient ascent with Armijo backtracking
        alpha *= 2.0
        for _ in range(60):
            w_new = project_simplex(pt.w + alpha * pt.v)
            step = w_new - pt.w
            cand = dual.point(w_new)
            if cand.dual >= pt.dual + float(pt.v @ step) - float(step @ step) / (2.0 * alpha) - 0.1 * noise(pt):
                break
            alpha *= 0.5
        # the iterate never loses dual value beyond rounding; the returned
        # point is the one with the best gap certificate
        if cand.dual >= pt.dual - noise(pt):
            pt = cand
        if cand.gap < best.gap:
            best = cand
        if best.gap <= tol:
            return best, it + 1
        # Newton refinement on the current face
        support = np.nonzero(pt.w > 0.0)[0]
        if support.shape[0] >= 2:
            d = _newton_direction(dual, pt, support)
            neg = d < 0
            tmax = 1.0
            if np.any(neg):
                tmax = min(1.0, float(np.min(-pt.w[neg] / d[neg])))
            t = tmax
            for _ in range(8):
                w_try = np.maximum(pt.w + t * d, 0.0)
                w_try /= w_try.sum()
                cand = dual.point(w_try)
                if cand.gap < best.gap:
                    best = cand
                # dual increments fall below float resolution near the optimum,
                # so a smaller gap at equal dual value also counts as progress
                if cand.dual > pt.dual + noise(pt) or (cand.gap < pt.gap and cand.dual >= pt.dual - noise(pt)):
                    pt = cand
                    break
                t *= 0.5
    return best, max_iter


def _clean_weights(dual, pt, tol):
    """Zero negligible weights on cuts that are clearly inactive."""
    drop = (pt.w > 0) & (pt.w <= 1e-8) & (pt.v < pt.vmax - 1e-9)
    if not np.any(drop):
        return pt
    w = np.where(drop, 0.0, pt.w)
    w /= w.sum()
    cand = dual.point(w)
    return cand if cand.gap <= tol else pt


def solve_cut_model(model, inst, center, lam, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, w0=None):
    """Solve the prox bundle subproblem for ``model`` to duality gap ``tol``.

    Raises
    ------
    NonConvergence
        If the gap certificate does not reach ``tol`` within ``max_iter``
        iterations. The exception carries the subproblem state.
    """
    if not lam > 0:
        raise ValueError(f"stepsize must be positive, got {lam}")
    center = np.asarray(center, dtype=float)
    if len(model) == 1:
        return solve_single_cut(model.cuts[0], inst, center, lam)
    dual = _Dual(model, inst, center, float(lam))
    if len(model) == 2:
        pt, iters = _solve_two(dual, tol, max_iter)
        if pt.gap > tol:
            pt, more = _solve_general(dual, tol, max_iter, pt.w)
            iters += more
    else:
        pt, iters = _solve_general(dual, tol, max_iter, w0)
    if pt.gap > tol:
        raise NonConvergence(
            f"subproblem gap {pt.gap:.3e} above tolerance {tol:.1e} after {iters} iterations",
            state={"model": model, "center": center, "lam": lam, "weights": pt.w, "gap": pt.gap},
        )
    pt = _clean_weights(dual, pt, tol)
    return _solution(pt, model, center, lam, iters)
