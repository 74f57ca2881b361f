"""Hybrid composite problem abstraction.

An instance pairs a first-order oracle for ``f`` with a tilted prox oracle
for ``h``::

    prox_tilted_h(g, c, lam) = argmin_u <g, u> + h(u) + ||u - c||^2 / (2 lam)

together with metadata (hybrid constants, intrinsic convexity, optimum)
that the solvers never read but the checkers and bound evaluators do.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonConvergence

# relative slack when testing membership of the constraint sets
FEAS_TOL = 1e-12


@dataclass(frozen=True)
class InstanceMeta:
    """Exact constants describing an instance.

    ``D`` is present only when the domain of ``h`` is bounded.
    """

    n: int
    M_f: float
    L_f: float
    mu_phi: float
    mu_h: float
    phi_star: Optional[float] = None
    x_star: Optional[np.ndarray] = None
    D: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if self.M_f < 0 or self.L_f < 0:
            raise ValueError("hybrid constants must be nonnegative")
        if self.mu_h < 0 or self.mu_phi < 0:
            raise ValueError("convexity parameters must be nonnegative")
        if self.mu_h > self.mu_phi:
            raise ValueError("mu_h must not exceed mu_phi")
        if self.D is not None and self.D <= 0:
            raise ValueError("diameter must be positive")
        if self.x_star is not None:
            object.__setattr__(self, "x_star", np.asarray(self.x_star, dtype=float))


@dataclass(frozen=True)
class HcoInstance:
    """Oracles for ``phi = f + h`` plus metadata.

    ``feasible`` and ``sample`` describe ``dom h``; ``sample(rng, count)``
    returns a ``(count, n)`` array of feasible points.
    """

    meta: InstanceMeta
    f_value: Callable[[np.ndarray], float]
    f_subgrad: Callable[[np.ndarray], np.ndarray]
    h_value: Callable[[np.ndarray], float]
    h_prox_tilted: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    feasible: Callable[[np.ndarray], bool]
    sample: Callable[[np.random.Generator, int], np.ndarray]
    name: str = "custom"
    x0: Optional[np.ndarray] = None
    spec: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.meta.n

    def phi(self, x):
        return self.f_value(x) + self.h_value(x)


def eval_f(inst, x):
    return float(inst.f_value(np.asarray(x, dtype=float)))


def subgrad_f(inst, x):
    return np.asarray(inst.f_subgrad(np.asarray(x, dtype=float)), dtype=float)


def eval_h(inst, x):
    return float(inst.h_value(np.asarray(x, dtype=float)))


def eval_phi(inst, x):
    x = np.asarray(x, dtype=float)
    return float(inst.f_value(x)) + float(inst.h_value(x))


def prox_tilted_h(inst, g, c, lam):
    """Return ``argmin_u <g,u> + h(u) + ||u-c||^2/(2 lam)``."""
    if not lam > 0:
        raise ValueError(f"stepsize must be positive, got {lam}")
    g = np.asarray(g, dtype=float)
    c = np.asarray(c, dtype=float)
    return inst.h_prox_tilted(g, c, float(lam))


# ---------------------------------------------------------------------------
# Building blocks for h


class QuadraticBallH:
    """``h(u) = (mu/2)||u||^2`` restricted to the ball ``||u|| <= radius``.

    ``radius = inf`` gives an unconstrained quadratic; ``mu = 0`` a pure
    indicator (or ``h = 0``).
    """

    def __init__(self, n, mu=0.0, radius=np.inf):
        if mu < 0:
            raise ValueError("mu must be nonnegative")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.n = n
        self.mu = float(mu)
        self.radius = float(radius)

    @property
    def diameter(self):
        return 2.0 * self.radius if np.isfinite(self.radius) else None

    def feasible(self, u):
        return bool(np.linalg.norm(u) <= self.radius * (1.0 + FEAS_TOL))

    def value(self, u):
        if not self.feasible(u):
            return np.inf
        return 0.5 * self.mu * float(u @ u)

    def prox(self, g, c, lam):
        # objective is isotropic around v, so projecting v is exact
        v = (c - lam * g) / (1.0 + lam * self.mu)
        nv = np.linalg.norm(v)
        if nv > self.radius:
            v = v * (self.radius / nv)
        return v

    def sample(self, rng, count):
        if np.isfinite(self.radius):
            d = rng.standard_normal((count, self.n))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            r = self.radius * rng.uniform(size=(count, 1)) ** (1.0 / self.n)
            return d * r
        return 3.0 * rng.standard_normal((count, self.n))


class ExpIntervalH:
    """``h(u) = alpha * exp(-u)`` on the interval ``[-r, r]`` (one dimension)."""

    max_iter = 200
    target = 1e-12

    def __init__(self, alpha, r):
        if alpha <= 0 or r <= 0:
            raise ValueError("alpha and r must be positive")
        self.n = 1
        self.alpha = float(alpha)
        self.r = float(r)

    @property
    def diameter(self):
        return 2.0 * self.r

    def feasible(self, u):
        return bool(abs(u[0]) <= self.r * (1.0 + FEAS_TOL))

    def value(self, u):
        if not self.feasible(u):
            return np.inf
        return self.alpha * float(np.exp(-u[0]))

    def prox(self, g, c, lam):
        g0, c0 = float(g[0]), float(c[0])
        a, r = self.alpha, self.r

        # scaled stationarity residual, increasing in u
        def F(u):
            return lam * g0 - lam * a * np.exp(-u) + (u - c0)

        lo, hi = -r, r
        if F(lo) >= 0.0:
            return np.array([lo])
        if F(hi) <= 0.0:
            return np.array([hi])
        scale = max(1.0, abs(c0), abs(lam * g0))
        u = min(max(c0 - lam * g0, lo), hi)
        for _ in range(self.max_iter):
            fu = F(u)
            if abs(fu) <= self.target * scale:
                return np.array([u])
            if fu > 0:
                hi = u
            else:
                lo = u
            if hi - lo <= 4.0 * np.spacing(max(abs(lo), abs(hi), 1.0)):
                return np.array([u])
            step = u - fu / (1.0 + lam * a * np.exp(-u))
            u = step if lo < step < hi else 0.5 * (lo + hi)
        raise NonConvergence(
            "exp prox did not converge",
            state={"g": g0, "c": c0, "lam": lam, "u": u, "residual": F(u)},
        )

    def sample(self, rng, count):
        return rng.uniform(-self.r, self.r, size=(count, 1))


def make_instance(meta, f_value, f_subgrad, h, name="custom", x0=None, spec=None):
    """Assemble an :class:`HcoInstance` from ``f`` oracles and an ``h`` block."""
    return HcoInstance(
        meta=meta,
        f_value=f_value,
        f_subgrad=f_subgrad,
        h_value=h.value,
        h_prox_tilted=h.prox,
        feasible=h.feasible,
        sample=h.sample,
        name=name,
        x0=None if x0 is None else np.asarray(x0, dtype=float),
        spec=dict(spec or {}),
    )
