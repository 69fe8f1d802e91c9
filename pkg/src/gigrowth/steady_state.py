"""Closed-form balanced-growth steady state of the two-sector model.

Powers are evaluated as ``exp(sum(w * log x))``; with elasticities near 0.2
the gig-sector constant is raised to the fifth power of a number near 36 and
reaches ~6e7, where chained ``**`` calls visibly lose digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum

from .params import Demographics, EconomyParams, Preferences


class CapitalWeight(str, Enum):
    """Weight on gig output in the capital-share and capital formulas."""

    PRINTED = "printed"  # a2, as printed
    TABLE_CONSISTENT = "table-consistent"  # b1, the Hamiltonian derivative


class ConsumptionFormula(str, Enum):
    PRINTED = "printed"  # (sigma1 / sigma2) factor
    TABLE = "table"  # sigma1 factor


@dataclass(frozen=True)
class VariantPolicy:
    capital_weight: CapitalWeight = CapitalWeight.TABLE_CONSISTENT
    consumption_formula: ConsumptionFormula = ConsumptionFormula.TABLE

    def __post_init__(self):
        object.__setattr__(self, "capital_weight", CapitalWeight(self.capital_weight))
        object.__setattr__(
            self, "consumption_formula", ConsumptionFormula(self.consumption_formula)
        )

    def weight(self, params: EconomyParams) -> float:
        if self.capital_weight is CapitalWeight.PRINTED:
            return params.tech.a2
        return params.tech.b1

    def consumption_factor(self, prefs: Preferences) -> float:
        if self.consumption_formula is ConsumptionFormula.PRINTED:
            return prefs.sigma1 / prefs.sigma2
        return prefs.sigma1

    def as_dict(self) -> dict[str, str]:
        return {
            "capital_weight": self.capital_weight.value,
            "consumption_formula": self.consumption_formula.value,
        }


DEFAULT_POLICY = VariantPolicy()


@dataclass(frozen=True)
class AuxiliaryConstants:
    M1: float
    M2: float
    M3: float
    P: float
    Delta: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Feasibility:
    """Outcome of the existence test. Truthy when a steady state exists."""

    feasible: bool
    consumption_slack: float  # M2 - b3, must be > 0
    m3: float  # must be <= 0
    violations: tuple[str, ...] = ()
    boundary: bool = False  # M3 == 0 exactly: zero physical output

    def __bool__(self) -> bool:
        return self.feasible

    @property
    def reason(self) -> str:
        return "; ".join(self.violations) if self.violations else "feasible"

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "consumption_slack": self.consumption_slack,
            "M3": self.m3,
            "violations": list(self.violations),
            "boundary": self.boundary,
        }


class InfeasibleParameters(ValueError):
    def __init__(self, report: Feasibility):
        self.report = report
        super().__init__(f"no economically meaningful steady state: {report.reason}")


# Serialization order of steady-state records; CSV column order depends on it.
RECORD_FIELDS = ("h_p", "h_d", "y_p", "y_d", "y", "c", "d", "u", "u_p", "u_d", "k", "lambda")


@dataclass(frozen=True)
class SteadyState:
    y_p: float
    y_d: float
    y: float
    h_p: float
    h_d: float
    d: float
    u_p: float
    u_d: float
    k: float
    c: float
    u: float
    lam: float
    boundary: bool = False

    def as_record(self) -> dict[str, float]:
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["lambda"] = values.pop("lam")
        return {key: values[key] for key in RECORD_FIELDS}


@dataclass(frozen=True)
class LevelPath:
    t: float
    N_t: float
    K_t: float
    Y_p_t: float
    Y_d_t: float
    Y_t: float


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def log_m1(params: EconomyParams) -> float:
    t = params.tech
    r = t.delta + params.prefs.rho
    return (math.log(t.A_p) + t.a1 * math.log(t.a1) + t.a2 * math.log(t.a2)
            - t.a1 * math.log(r)) / t.a2


def log_m2(params: EconomyParams, log_M1: float | None = None) -> float:
    t = params.tech
    r = t.delta + params.prefs.rho
    if log_M1 is None:
        log_M1 = log_m1(params)
    return ((t.b2 + t.b3) * log_M1 + t.b1 * math.log(r) - math.log(t.A_d)
            - t.b1 * math.log(t.b1) - t.b2 * math.log(t.b2)) / t.b3


def growth_ratio(params: EconomyParams) -> float:
    """(delta + n) / (delta + rho), the recurring ratio of effective rates."""
    t = params.tech
    return (t.delta + params.demo.n) / (t.delta + params.prefs.rho)


def compute_constants(params: EconomyParams) -> AuxiliaryConstants:
    t = params.tech
    g = growth_ratio(params)
    lm1 = log_m1(params)
    M1 = _safe_exp(lm1)
    M2 = _safe_exp(log_m2(params, lm1))
    M3 = 1.0 - t.a2 * g - M2 + t.b3
    P = 1.0 - t.a1 * g
    Delta = P * (M2 + t.b2) - t.a2 * M3
    return AuxiliaryConstants(M1, M2, M3, P, Delta)


def check_feasibility(constants: AuxiliaryConstants, params: EconomyParams) -> Feasibility:
    slack = constants.M2 - params.tech.b3
    m3 = constants.M3
    violations = []
    if not all(math.isfinite(x) for x in (constants.M1, constants.M2, constants.Delta)):
        violations.append("auxiliary constants overflow double precision")
    if not slack > 0:
        violations.append(f"M2 - b3 <= 0 (slack {slack!r})")
    if not m3 <= 0:
        violations.append(f"M3 > 0 (M3 = {m3!r})")
    return Feasibility(
        feasible=not violations,
        consumption_slack=slack,
        m3=m3,
        violations=tuple(violations),
        boundary=not violations and m3 == 0.0,
    )


def utility_flow(c: float, d: float, prefs: Preferences) -> float:
    if not (c > 0 and d > 0):
        raise ValueError(f"utility needs positive consumption and leisure (c={c!r}, d={d!r})")
    s = prefs.sigma
    return math.exp((1.0 - s) * (prefs.sigma1 * math.log(c) + prefs.sigma2 * math.log(d))) / (1.0 - s)


def _close_shares(shares: list[float]) -> list[float]:
    """Make the largest share the complement of the rest so the left-to-right sum is 1.

    Small shares keep full relative precision; only the dominant one absorbs
    rounding, nudged by at most a few ulps.
    """
    i = max(range(len(shares)), key=shares.__getitem__)
    rest = 0.0
    for j, s in enumerate(shares):
        if j != i:
            rest += s
    out = list(shares)
    out[i] = 1.0 - rest
    for _ in range(4):
        total = 0.0
        for s in out:
            total += s
        if total == 1.0:
            break
        out[i] = math.nextafter(out[i], -math.inf if total > 1.0 else math.inf)
    return out


def solve(params: EconomyParams, policy: VariantPolicy = DEFAULT_POLICY) -> SteadyState:
    """Unique steady state in closed form; raises :class:`InfeasibleParameters`."""
    constants = compute_constants(params)
    report = check_feasibility(constants, params)
    if not report:
        raise InfeasibleParameters(report)
    return _closed_form(params, constants, policy, report.boundary)


def _closed_form(params, constants, policy, boundary=False) -> SteadyState:
    t, prefs = params.tech, params.prefs
    M1, M2, M3, P, Delta = (constants.M1, constants.M2, constants.M3,
                            constants.P, constants.Delta)

    y_p = -M1 * (M3 / Delta)
    if y_p == 0.0:
        y_p = 0.0  # drop the sign of -0.0 at the boundary
    y_d = M1 * (P / Delta)
    y = y_p + y_d

    time_den = t.a2 * y_p + (t.b2 + M2) * y_d
    h_p, h_d, d = _close_shares([t.a2 * y_p / time_den, t.b2 * y_d / time_den,
                                 M2 * y_d / time_den])

    w = policy.weight(params)
    cap_den = t.a1 * y_p + w * y_d
    u_p, u_d = _close_shares([t.a1 * y_p / cap_den, w * y_d / cap_den])
    k = cap_den / (t.delta + prefs.rho)

    c = policy.consumption_factor(prefs) * (M2 - t.b3) * y_d
    u = utility_flow(c, d, prefs)
    lam = (1.0 - prefs.sigma) * prefs.sigma1 * u / c
    return SteadyState(y_p=y_p, y_d=y_d, y=y, h_p=h_p, h_d=h_d, d=d, u_p=u_p, u_d=u_d,
                       k=k, c=c, u=u, lam=lam, boundary=boundary)


def level_path(ss: SteadyState, demo: Demographics, t: float) -> LevelPath:
    """Aggregate levels on the balanced growth path at time ``t``."""
    if not t >= 0:
        raise ValueError(f"time must be non-negative (got {t!r})")
    N_t = demo.N0 * math.exp(demo.n * t)
    return LevelPath(t=t, N_t=N_t, K_t=N_t * ss.k, Y_p_t=N_t * ss.y_p,
                     Y_d_t=N_t * ss.y_d, Y_t=N_t * ss.y)
