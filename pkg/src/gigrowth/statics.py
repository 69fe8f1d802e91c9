"""Comparative statics of the steady state with respect to the two TFPs.

Analytic derivatives are written with every large factor divided by Delta
before multiplication, so parameter sets with M2 ~ 1e60 do not overflow
Delta**2.

Two of the printed sign constants do not match the derivatives they are
meant to sign. Summing the physical-TFP derivatives of y_p and y_d gives

    dy/dA_p = M1 / (a2 A_p Delta^2) * (Delta (P - M3) - P M2 q M6),  q = (b2+b3)/b3,

which equals P M1 M4 / (a2 A_p Delta^2) only for M4 = (Delta (P - M3) - P M2 q M6) / P;
likewise the consumption derivative carries a2 (1 - a2 g) where the
printed M5 has a2 (1 - g), g = (delta+n)/(delta+rho). :func:`sign_constants`
returns the constants that make those identities hold;
:func:`printed_sign_constants` keeps the literal formulas for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np
from mpmath import mp, mpf

from .params import EconomyParams, ParameterError, validate, with_shock
from .reference import outputs_mp
from .steady_state import (
    DEFAULT_POLICY,
    AuxiliaryConstants,
    InfeasibleParameters,
    VariantPolicy,
    check_feasibility,
    compute_constants,
    growth_ratio,
    solve,
)


@dataclass(frozen=True)
class SignConstants:
    M4: float
    M5: float
    M6: float
    M7: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class DerivativeSet:
    d_yp: float
    d_yd: float
    d_y: float
    d_c: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class Sector(str, Enum):
    PHYSICAL = "physical"
    GIG = "gig"


TFP_FIELD = {Sector.PHYSICAL: "A_p", Sector.GIG: "A_d"}


def _sector(target) -> Sector:
    if target in ("A_p", Sector.PHYSICAL, "physical"):
        return Sector.PHYSICAL
    if target in ("A_d", Sector.GIG, "gig"):
        return Sector.GIG
    raise ValueError(f"unknown TFP target {target!r}")


def _require_feasible(params: EconomyParams) -> AuxiliaryConstants:
    constants = compute_constants(params)
    report = check_feasibility(constants, params)
    if not report:
        raise InfeasibleParameters(report)
    return constants


def m2_plus_m3(params: EconomyParams) -> float:
    """M2 + M3 without forming either term; both can exceed 1e20 in magnitude."""
    t = params.tech
    return 1.0 - t.a2 * growth_ratio(params) + t.b3


def printed_sign_constants(params: EconomyParams) -> SignConstants:
    """The four sign constants exactly as printed."""
    t = params.tech
    M1, M2, M3, P, Delta = _require_feasible(params).as_dict().values()
    g = growth_ratio(params)
    q = (t.b2 + t.b3) / t.b3
    a2, b2, b3 = t.a2, t.b2, t.b3
    M4 = (P * P * (M2 + b2) - P * (a2 * M3 + M2 * M3 + b2 * M3) + a2 * M3 * M3
          + P * M2 * q * (m2_plus_m3(params) + b2))
    M5 = M2 * q * (P * (b2 + b3) - a2 * (1.0 - g)) + (M2 - b3) * Delta
    M6 = P + a2 - b2 - b3 - (1.0 - a2 * g)
    M7 = a2 * (1.0 - a2 * g) - P * (b2 + b3)
    return SignConstants(M4, M5, M6, M7)


def sign_constants(params: EconomyParams) -> SignConstants:
    """Constants whose signs are those of dy/dA_p, dc/dA_p, dy/dA_d, dc/dA_d."""
    t = params.tech
    M1, M2, M3, P, Delta = _require_feasible(params).as_dict().values()
    g = growth_ratio(params)
    q = (t.b2 + t.b3) / t.b3
    M6 = P + t.a2 - t.b2 - t.b3 - (1.0 - t.a2 * g)
    M7 = t.a2 * (1.0 - t.a2 * g) - P * (t.b2 + t.b3)
    M4 = (Delta * (P - M3) - P * M2 * q * M6) / P
    M5 = (M2 - t.b3) * Delta - q * M2 * M7
    return SignConstants(M4, M5, M6, M7)


def analytic_tfp_derivatives(params: EconomyParams, sector,
                             policy: VariantPolicy = DEFAULT_POLICY) -> DerivativeSet:
    """Closed-form derivatives of (y_p, y_d, y, c) in one TFP.

    ``d_y`` is ``d_yp + d_yd``. ``d_c`` is scaled by the consumption factor of
    ``policy``, so it differentiates the same consumption formula that
    :func:`~gigrowth.steady_state.solve` evaluates.
    """
    sector = _sector(sector)
    t = params.tech
    M1, M2, M3, P, Delta = _require_feasible(params).as_dict().values()
    sc = sign_constants(params)
    factor = policy.consumption_factor(params.prefs)
    q = (t.b2 + t.b3) / t.b3
    m2r = M2 / Delta
    k23 = m2_plus_m3(params) + t.b2
    if sector is Sector.PHYSICAL:
        s = M1 / (t.a2 * t.A_p)
        lead = (P * M2 + P * t.b2 - t.a2 * M3) / Delta
        d_yp = s * (-(M3 / Delta) * lead + P * q * m2r * k23 / Delta)
        d_yd = P * s * (lead - m2r * (P + t.a2) * q) / Delta
        d_c = factor * P * s * (sc.M5 / Delta) / Delta
    else:
        s = P * M1 * m2r / (t.b3 * t.A_d)
        d_yp = -s * k23 / Delta
        d_yd = s * (P + t.a2) / Delta
        d_c = factor * s * sc.M7 / Delta
    return DerivativeSet(d_yp=d_yp, d_yd=d_yd, d_y=d_yp + d_yd, d_c=d_c)


def printed_total_derivative(params: EconomyParams, sector) -> float:
    """Total-output derivative as printed, from the literal M4 or M6."""
    sector = _sector(sector)
    t = params.tech
    M1, M2, M3, P, Delta = _require_feasible(params).as_dict().values()
    sc = printed_sign_constants(params)
    if sector is Sector.PHYSICAL:
        return P * M1 * (sc.M4 / Delta) / Delta / (t.a2 * t.A_p)
    return P * M1 * (M2 / Delta) * sc.M6 / Delta / (t.b3 * t.A_d)


def fd_derivatives(params: EconomyParams, target, relative_step: float = 1e-5,
                   policy: VariantPolicy = DEFAULT_POLICY,
                   digits: int | None = None) -> DerivativeSet:
    """Central differences of the closed-form solve in ``A_p`` or ``A_d``.

    With ``digits`` set, both sides are evaluated by the mpmath reference
    instead of the double-precision solver, at ``digits`` or ``log10(M2) + 30``
    digits, whichever is larger; this is needed when an output moves by less
    than its own rounding error over the step.
    Raises :class:`InfeasibleParameters` when a perturbed point leaves the
    feasible region.
    """
    name = TFP_FIELD[_sector(target)]
    h = relative_step * params[name]
    up = validate(with_shock(params, name, params[name] + h))
    down = validate(with_shock(params, name, params[name] - h))
    hi, lo = solve(up, policy).as_record(), solve(down, policy).as_record()
    if digits is not None:
        digits = max(digits, int(math.log10(compute_constants(params).M2)) + 30)
        with mp.workdps(digits):
            base = params.as_dict()
            step = mpf(relative_step) * mpf(base[name])
            hi = outputs_mp({**base, name: mpf(base[name]) + step}, digits, policy)
            lo = outputs_mp({**base, name: mpf(base[name]) - step}, digits, policy)
            return DerivativeSet(*(float((hi[k] - lo[k]) / (2 * step))
                                   for k in ("y_p", "y_d", "y", "c")))
    span = up[name] - down[name]
    return DerivativeSet(*((hi[k] - lo[k]) / span for k in ("y_p", "y_d", "y", "c")))


class Sign(str, Enum):
    POSITIVE = "+"
    NEGATIVE = "-"
    BOUNDARY = "0"

    @classmethod
    def of(cls, x: float) -> "Sign":
        if x > 0:
            return cls.POSITIVE
        if x < 0:
            return cls.NEGATIVE
        return cls.BOUNDARY


@dataclass(frozen=True)
class SignReport:
    y_wrt_A_p: Sign
    c_wrt_A_p: Sign
    y_wrt_A_d: Sign
    c_wrt_A_d: Sign

    def as_dict(self) -> dict[str, str]:
        return {f.name: getattr(self, f.name).value for f in fields(self)}


def predict_signs(sc: SignConstants) -> SignReport:
    return SignReport(Sign.of(sc.M4), Sign.of(sc.M5), Sign.of(sc.M6), Sign.of(sc.M7))


@dataclass(frozen=True)
class FieldAgreement:
    field: str
    analytic: float
    fd: float
    rel_error: float
    ok: bool


def relative_error(a: float, b: float, floor: float = 0.0) -> float:
    scale = max(abs(a), abs(b), floor)
    return abs(a - b) / scale if scale > 0 else 0.0


def derivative_agreement(params: EconomyParams, target, rel_tol: float = 1e-6,
                         relative_step: float = 1e-5,
                         policy: VariantPolicy = DEFAULT_POLICY,
                         fields_: tuple[str, ...] = ("d_yp", "d_yd", "d_y"),
                         digits: int | None = None) -> list[FieldAgreement]:
    an = analytic_tfp_derivatives(params, target, policy).as_dict()
    fd = fd_derivatives(params, target, relative_step, policy, digits).as_dict()
    out = []
    for name in fields_:
        err = relative_error(an[name], fd[name])
        out.append(FieldAgreement(name, an[name], fd[name], err, err <= rel_tol))
    return out


def richardson_ratio(params: EconomyParams, target, field: str = "d_y",
                     step: float = 1e-2, policy: VariantPolicy = DEFAULT_POLICY) -> float:
    """Ratio of central-difference errors at ``step`` and ``step / 2``; ~4 for second order."""
    exact = getattr(analytic_tfp_derivatives(params, target, policy), field)
    e1 = getattr(fd_derivatives(params, target, step, policy), field) - exact
    e2 = getattr(fd_derivatives(params, target, step / 2, policy), field) - exact
    return e1 / e2


def erratum_report(params: EconomyParams, relative_step: float = 1e-5) -> dict:
    """Printed sign constants and total derivatives next to their corrected forms
    and a finite-difference reference."""
    printed = printed_sign_constants(params)
    corrected = sign_constants(params)
    factor_one = VariantPolicy(consumption_formula="printed")
    # d_c is compared for c = (M2 - b3) y_d, the form the printed constants sign
    scale = params.prefs.sigma2 / params.prefs.sigma1
    entries = {}
    for sector, y_const, c_const in ((Sector.PHYSICAL, "M4", "M5"), (Sector.GIG, "M6", "M7")):
        fd = fd_derivatives(params, sector, relative_step, factor_one)
        printed_dy = printed_total_derivative(params, sector)
        entries[TFP_FIELD[sector]] = {
            "d_y_printed": printed_dy,
            "d_y_fd": fd.d_y,
            "d_y_printed_rel_error": relative_error(printed_dy, fd.d_y),
            "d_c_fd_unit_factor": fd.d_c * scale,
            f"{y_const}_printed": getattr(printed, y_const),
            f"{y_const}_corrected": getattr(corrected, y_const),
            f"{c_const}_printed": getattr(printed, c_const),
            f"{c_const}_corrected": getattr(corrected, c_const),
            "sign_mismatch": sorted(
                name for name in (y_const, c_const)
                if Sign.of(getattr(printed, name)) != Sign.of(getattr(corrected, name))
            ),
        }
    return entries


def random_feasible_params(rng: np.random.Generator, max_attempts: int = 10_000,
                           margin: float = 0.05) -> EconomyParams:
    """Rejection-sample a feasible parameter set.

    TFPs are log-uniform on [0.5, 2]; elasticities are uniform on the simplex
    interior with every entry at least ``margin``. Draws whose constants are
    not representable in double precision are rejected along with infeasible
    ones.
    """
    for _ in range(max_attempts):
        n = rng.uniform(0.001, 0.03)
        sigma1 = rng.uniform(0.05, 0.95)
        sigma = rng.uniform(0.05, 0.9) if rng.random() < 0.75 else rng.uniform(1.1, 3.0)
        a1 = margin + (1.0 - 2 * margin) * rng.random()
        b = margin + (1.0 - 3 * margin) * rng.dirichlet((1.0, 1.0, 1.0))
        candidate = {
            "rho": n + rng.uniform(0.001, 0.05),
            "n": n,
            "sigma1": sigma1,
            "sigma2": 1.0 - sigma1,
            "sigma": sigma,
            "A_p": math.exp(rng.uniform(math.log(0.5), math.log(2.0))),
            "a1": a1,
            "a2": 1.0 - a1,
            "A_d": math.exp(rng.uniform(math.log(0.5), math.log(2.0))),
            "b1": float(b[0]),
            "b2": float(b[1]),
            "b3": 1.0 - float(b[0]) - float(b[1]),
            "delta": rng.uniform(0.01, 0.1),
        }
        try:
            params = validate(candidate)
        except ParameterError:
            continue
        constants = compute_constants(params)
        if not check_feasibility(constants, params):
            continue
        if not all(math.isfinite(x) for x in printed_sign_constants(params).as_dict().values()):
            continue
        return params
    raise RuntimeError(f"no feasible parameter draw in {max_attempts} attempts")


def feasible_draws(seed: int, count: int) -> list[EconomyParams]:
    """``count`` independent draws from a splittable seeded stream."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [random_feasible_params(np.random.default_rng(child)) for child in children]
