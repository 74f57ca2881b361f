"""JSON benchmark configuration.

Example::

    {"method": "upb",
     "solver": {"chi": 0.5, "lambda0": 1.0, "epsbar": 1e-3, "nbar": 10,
                "budget_inner": 100000, "termination": "KnownOptimal",
                "tol_inner": 1e-10,
                "bundle": {"scheme": "MultiCuts", "max_cuts": 10,
                           "reset_model": "FreshSingleCut"}},
     "instance": {"family": "LassoBall", "n": 50, "m": 100, "rho": 0.1,
                  "radius": 10.0, "seed": 42},
     "checks": ["bb", "contraction", "tj_decay", "eps_subgrad"]}

``solver.lambda0`` may also be the string ``"lambda_constant"``, which
resolves to the constant stepsize computed from the instance metadata.
"""

import json
from dataclasses import dataclass, field

from .bundle import BundlePolicy
from .errors import BadSpec
from .instances import FamilySpec
from .ucs import SolverConfig
from .verify import CHECKS

METHODS = ("ucs", "upb")


@dataclass
class BenchConfig:
    method: str
    solver: SolverConfig
    instance: FamilySpec
    checks: tuple = ()
    lambda0_rule: str = ""
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "method": self.method,
            "solver": self.solver.as_dict(),
            "instance": self.instance.as_dict(),
            "checks": list(self.checks),
        }


_SOLVER_KEYS = {"chi", "lambda0", "epsbar", "nbar", "budget_inner", "termination", "tol_inner", "checks", "bundle"}


def solver_config_from_dict(d):
    d = dict(d)
    extra = set(d) - _SOLVER_KEYS
    if extra:
        raise BadSpec(f"unknown solver fields: {sorted(extra)}")
    if "bundle" in d:
        try:
            d["bundle"] = BundlePolicy(**d["bundle"])
        except (TypeError, ValueError) as exc:
            raise BadSpec(f"bad bundle policy: {exc}") from None
    try:
        return SolverConfig(**d)
    except (TypeError, ValueError) as exc:
        raise BadSpec(f"bad solver settings: {exc}") from None


def config_from_dict(d):
    if not isinstance(d, dict):
        raise BadSpec("config must be a JSON object")
    extra = set(d) - {"method", "solver", "instance", "checks"}
    if extra:
        raise BadSpec(f"unknown config fields: {sorted(extra)}")
    method = d.get("method")
    if method not in METHODS:
        raise BadSpec(f"method must be one of {METHODS}, got {method!r}")
    solver = dict(d.get("solver", {}))
    rule = ""
    if isinstance(solver.get("lambda0"), str):
        rule = solver.pop("lambda0")
        if rule != "lambda_constant":
            raise BadSpec(f"unknown lambda0 rule {rule!r}")
    checks = tuple(d.get("checks", ()))
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise BadSpec(f"unknown checks: {sorted(unknown)}")
    if "instance" not in d:
        raise BadSpec("config needs an instance section")
    try:
        inst = FamilySpec.from_dict(d["instance"])
    except TypeError as exc:
        raise BadSpec(f"bad instance section: {exc}") from None
    return BenchConfig(method=method, solver=solver_config_from_dict(solver), instance=inst, checks=checks,
                       lambda0_rule=rule)


def load_config(path):
    """Parse a config file; parse errors carry the line and column."""
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadSpec(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(data)
