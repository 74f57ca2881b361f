"""Closed-form constants and iteration bounds for U-CS, U-PB and FSCO.

Everything here is a pure function of instance metadata and solver
settings. Conventions shared by all bounds:

* a branch with a zero denominator (``chi = 0``, ``mu = 0``, ``nu = 0``)
  is ``+inf``;
* ``inf * 0`` is treated as ``+inf`` so that ``mu = 0`` always selects the
  ``d0^2``-type branch;
* ``ceil(2 log(.))`` terms are clamped below at zero.
"""

import math
from dataclasses import asdict, dataclass

from .errors import DomainError, MissingDiameter

# stepsize returned by lambda_constant when the formula has a zero denominator
LAMBDA_CAP = 1e6
# guard replacing M_f = 0 inside the log of B, and the cap applied to B
B_GUARD = 1e-300
B_CAP = 1e4

INF = math.inf


def _div(a, b):
    if b == 0:
        return INF if a > 0 else (0.0 if a == 0 else -INF)
    return a / b


def _mul(a, b):
    # inf * 0 = inf: a vanishing log factor cannot rescue an undefined rate
    if math.isinf(a) or math.isinf(b):
        return INF
    return a * b


def _ceil_log2(arg):
    """``max(0, ceil(2 log arg))``."""
    if not arg > 1.0:
        return 0
    return max(0, math.ceil(2.0 * math.log(arg)))


def _check_chi(chi):
    if not 0.0 <= chi < 1.0:
        raise DomainError(f"chi must lie in [0, 1), got {chi}")


# ---------------------------------------------------------------------------
# building blocks


def sigma(mu, nu, chi, lam):
    """Contraction factor of the prox-center recursion."""
    _check_chi(chi)
    if mu < 0 or nu < 0 or nu > mu:
        raise DomainError(f"need 0 <= nu <= mu, got mu={mu}, nu={nu}")
    if not lam > 0:
        raise DomainError(f"stepsize must be positive, got {lam}")
    num = lam * (nu * (1.0 + mu * lam) + chi * (mu - nu))
    den = 1.0 + mu * lam + chi * lam * (nu - mu)
    return num / den


def lambda_constant(meta, chi, epsbar):
    """Largest stepsize for which the U-CS acceptance test always passes."""
    _check_chi(chi)
    den = 4.0 * meta.M_f**2 + epsbar * meta.L_f
    if den == 0:
        return LAMBDA_CAP
    return (1.0 - chi) ** 2 * epsbar / den


def q_eps(meta, chi, lambda0, epsbar):
    _check_chi(chi)
    c = (1.0 - chi) ** 2
    return 8.0 * meta.M_f**2 / c + epsbar * (1.0 / lambda0 + 2.0 * meta.L_f / c)


def b_capped(meta):
    """True when B had to be guarded because ``M_f = 0 < L_f``."""
    return meta.M_f == 0 and meta.L_f > 0


def b_const(meta, nbar):
    if meta.D is None:
        raise MissingDiameter("B needs the domain diameter D")
    if meta.L_f == 0:
        return 8.0
    # log of L^2 D^2 nbar / (16 M^2), formed in log space to avoid overflow
    m2 = max(meta.M_f**2, B_GUARD)
    log_arg = 2.0 * math.log(meta.L_f * meta.D) + math.log(nbar) - math.log(16.0 * m2)
    grow = math.log1p(math.exp(log_arg)) if log_arg < 700.0 else log_arg
    return min(8.0 + 12.0 * grow, B_CAP)


def u_eps(meta, chi, lambda0, epsbar, nbar):
    _check_chi(chi)
    B = b_const(meta, nbar)
    return 4.0 * (meta.M_f**2 + epsbar * meta.L_f) * B / (1.0 - chi) ** 2 + nbar * epsbar / lambda0


def u_lambda(lam, meta, chi, epsbar):
    _check_chi(chi)
    return 4.0 * lam * (2.0 * meta.M_f**2 + (1.0 - chi) * epsbar * meta.L_f) / ((1.0 - chi) * epsbar)


def tau(u):
    if u < 0:
        raise DomainError("u must be nonnegative")
    if math.isinf(u):
        return 1.0
    return u / (1.0 + u)


def recurrence_bound(alpha0, gamma_floor, delta, sigma):
    """Iterations after which ``min eta_j <= 2 delta`` is guaranteed."""
    if alpha0 < 0 or delta < 0 or sigma < 0 or not gamma_floor > 0:
        raise DomainError("need alpha0, delta, sigma >= 0 and gamma_floor > 0")
    if alpha0 == 0:
        return 0.0
    lin = _div(alpha0, gamma_floor * delta)
    if sigma == 0:
        return lin
    if delta == 0:
        return INF
    geo = (1.0 + sigma) / sigma * math.log1p(sigma * alpha0 / (gamma_floor * delta))
    return min(geo, lin)


# ---------------------------------------------------------------------------
# stepsize floors and reset caps


def lambda_floor_ucs(meta, chi, lambda0, epsbar):
    _check_chi(chi)
    den = 8.0 * meta.M_f**2 + 2.0 * epsbar * meta.L_f
    return min(_div((1.0 - chi) ** 2 * epsbar, den), lambda0)


def lambda_floor_upb(meta, chi, lambda0, epsbar, nbar):
    return nbar * epsbar / u_eps(meta, chi, lambda0, epsbar, nbar)


def halving_cap_ucs(meta, chi, lambda0, epsbar):
    return _ceil_log2(lambda0 * q_eps(meta, chi, lambda0, epsbar) / epsbar)


def reset_cap(meta, chi, lambda0, epsbar, nbar):
    return _ceil_log2(lambda0 * u_eps(meta, chi, lambda0, epsbar, nbar) / (nbar * epsbar))


def no_reset_lambda(meta, chi, epsbar, nbar):
    """Stepsizes at or below this value never trigger a reset cycle."""
    _check_chi(chi)
    B = b_const(meta, nbar)
    den = 2.0 * (meta.M_f**2 + epsbar * meta.L_f) * B
    return _div((1.0 - chi) ** 2 * nbar * epsbar, den)


# ---------------------------------------------------------------------------
# iteration bounds


def _universal_bound(mu, nu, chi, epsbar, d0, head, growth):
    # min{ min[(1/chi)(head + G/mu), head + G/nu] * log(1 + mu d0^2/epsbar), d0^2 G }
    # where growth = G already divided by epsbar once
    strong = min(
        _div(head + _div(growth, mu), chi) if chi > 0 else INF,
        head + _div(growth, nu),
    )
    log_term = _mul(strong, math.log1p(mu * d0 * d0 / epsbar))
    if mu == 0:
        log_term = INF
    return min(log_term, d0 * d0 * growth / epsbar)


def ucs_total_bound(meta, cfg, d0):
    if d0 < 0:
        raise DomainError("d0 must be nonnegative")
    Q = q_eps(meta, cfg.chi, cfg.lambda0, cfg.epsbar)
    main = _universal_bound(meta.mu_phi, meta.mu_h, cfg.chi, cfg.epsbar, d0, 1.0, Q / cfg.epsbar)
    return main + _ceil_log2(cfg.lambda0 * Q / cfg.epsbar)


def upb_total_bound(meta, cfg, d0):
    if d0 < 0:
        raise DomainError("d0 must be nonnegative")
    U = u_eps(meta, cfg.chi, cfg.lambda0, cfg.epsbar, cfg.nbar)
    main = _universal_bound(meta.mu_phi, meta.mu_h, cfg.chi, cfg.epsbar, d0, float(cfg.nbar), U / cfg.epsbar)
    return main + cfg.nbar * _ceil_log2(cfg.lambda0 * U / (cfg.nbar * cfg.epsbar))


def fsco_total_bound(mu, nu, chi, lam_floor, d0, epsbar):
    """Outer-iteration bound for any FSCO instance with stepsizes >= lam_floor."""
    _check_chi(chi)
    if not lam_floor > 0:
        raise DomainError("lam_floor must be positive")
    inv = 1.0 / lam_floor
    return _universal_bound(mu, nu, chi, epsbar, d0, 1.0, inv)


# ---------------------------------------------------------------------------
# report


@dataclass
class BoundReport:
    q_eps: float
    u_eps: float
    b_const: float
    b_capped: bool
    sigma: float
    ucs_bound: float
    upb_bound: float
    fsco_bound: float
    lambda_floor_ucs: float
    lambda_floor_upb: float
    halving_cap: int
    reset_cap: int
    no_reset_lambda: float
    lam_const: float
    d0: float

    def as_dict(self):
        return asdict(self)


def bound_report(meta, cfg, d0, method="upb"):
    """Evaluate every bound for one instance/configuration pair.

    Quantities needing the diameter are ``nan`` when ``meta.D`` is absent.
    ``sigma`` and ``fsco_bound`` use the floor stepsize of ``method``.
    """
    chi, lam0, eps, nbar = cfg.chi, cfg.lambda0, cfg.epsbar, cfg.nbar
    has_d = meta.D is not None
    nan = math.nan
    floor_ucs = lambda_floor_ucs(meta, chi, lam0, eps)
    floor_upb = lambda_floor_upb(meta, chi, lam0, eps, nbar) if has_d else nan
    floor = floor_ucs if method == "ucs" or not has_d else floor_upb
    nu = min(meta.mu_h, meta.mu_phi)
    return BoundReport(
        q_eps=q_eps(meta, chi, lam0, eps),
        u_eps=u_eps(meta, chi, lam0, eps, nbar) if has_d else nan,
        b_const=b_const(meta, nbar) if has_d else nan,
        b_capped=b_capped(meta),
        sigma=sigma(meta.mu_phi, nu, chi, floor),
        ucs_bound=ucs_total_bound(meta, cfg, d0),
        upb_bound=upb_total_bound(meta, cfg, d0) if has_d else nan,
        fsco_bound=fsco_total_bound(meta.mu_phi, nu, chi, floor, d0, eps),
        lambda_floor_ucs=floor_ucs,
        lambda_floor_upb=floor_upb,
        halving_cap=halving_cap_ucs(meta, chi, lam0, eps),
        reset_cap=reset_cap(meta, chi, lam0, eps, nbar) if has_d else -1,
        no_reset_lambda=no_reset_lambda(meta, chi, eps, nbar) if has_d else nan,
        lam_const=lambda_constant(meta, chi, eps),
        d0=float(d0),
    )
