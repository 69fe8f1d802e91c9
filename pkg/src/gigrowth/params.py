"""Exogenous parameter set: typed containers, validation, and shocks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

# Flat key order used for ingestion, serialization and digests.
PARAM_KEYS = (
    "rho", "n", "N0",
    "sigma1", "sigma2", "sigma",
    "A_p", "a1", "a2",
    "A_d", "b1", "b2", "b3",
    "delta",
)

SUM_TOL = 1e-12
DEFAULT_N0 = 1.0


class ParameterError(ValueError):
    """Raised when a parameter candidate violates one or more invariants.

    ``errors`` holds one message per violated constraint.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class UnknownFieldError(ParameterError, KeyError):
    def __str__(self):
        return "; ".join(self.errors)


@dataclass(frozen=True)
class Preferences:
    sigma1: float
    sigma2: float
    sigma: float
    rho: float


@dataclass(frozen=True)
class Demographics:
    n: float
    N0: float = DEFAULT_N0


@dataclass(frozen=True)
class Technology:
    A_p: float
    a1: float
    a2: float
    A_d: float
    b1: float
    b2: float
    b3: float
    delta: float


@dataclass(frozen=True)
class EconomyParams:
    """Validated parameter set. Build it through :func:`validate`."""

    prefs: Preferences
    demo: Demographics
    tech: Technology

    def as_dict(self) -> dict[str, float]:
        p, d, t = self.prefs, self.demo, self.tech
        flat = {
            "rho": p.rho, "n": d.n, "N0": d.N0,
            "sigma1": p.sigma1, "sigma2": p.sigma2, "sigma": p.sigma,
            "A_p": t.A_p, "a1": t.a1, "a2": t.a2,
            "A_d": t.A_d, "b1": t.b1, "b2": t.b2, "b3": t.b3,
            "delta": t.delta,
        }
        return {k: flat[k] for k in PARAM_KEYS}

    def __getitem__(self, key: str) -> float:
        try:
            return self.as_dict()[key]
        except KeyError:
            raise UnknownFieldError([f"unknown parameter field {key!r}"]) from None


def _check_unknown(keys) -> None:
    unknown = sorted(set(keys) - set(PARAM_KEYS))
    if unknown:
        raise UnknownFieldError([f"unknown parameter field {k!r}" for k in unknown])


def _collect_errors(v: Mapping[str, float]) -> list[str]:
    errors = []

    def pos(key, what):
        if not v[key] > 0:
            errors.append(f"{what} must be positive ({key}={v[key]!r})")

    def unit(key):
        if not 0 < v[key] < 1:
            errors.append(f"elasticity {key} must lie in (0, 1) (got {v[key]!r})")

    pos("sigma1", "consumption utility weight")
    pos("sigma2", "digital-leisure utility weight")
    if abs(v["sigma1"] + v["sigma2"] - 1.0) > SUM_TOL:
        errors.append(
            f"sigma weights must sum to 1 (sigma1 + sigma2 = {v['sigma1'] + v['sigma2']!r})"
        )
    pos("sigma", "curvature sigma")
    if v["sigma"] == 1.0:
        errors.append("curvature sigma must differ from 1")
    pos("n", "population growth rate")
    pos("N0", "initial worker count")
    if not v["rho"] > v["n"]:
        errors.append(
            f"discount rate must exceed population growth (rho={v['rho']!r}, n={v['n']!r})"
        )
    pos("A_p", "physical TFP")
    pos("A_d", "gig TFP")
    pos("delta", "depreciation rate")
    for key in ("a1", "a2", "b1", "b2", "b3"):
        unit(key)
    if abs(v["a1"] + v["a2"] - 1.0) > SUM_TOL:
        errors.append(f"physical elasticities must sum to 1 (a1 + a2 = {v['a1'] + v['a2']!r})")
    b_sum = v["b1"] + v["b2"] + v["b3"]
    if abs(b_sum - 1.0) > SUM_TOL:
        errors.append(f"gig elasticities must sum to 1 (b1 + b2 + b3 = {b_sum!r})")
    return errors


def validate(raw: EconomyParams | Mapping[str, Any]) -> EconomyParams:
    """Certify a parameter candidate.

    ``raw`` is either an already validated :class:`EconomyParams` or a flat
    mapping keyed by :data:`PARAM_KEYS` (``N0`` may be omitted). Raises
    :class:`ParameterError` listing every violated constraint.
    """
    if isinstance(raw, EconomyParams):
        raw = raw.as_dict()
    _check_unknown(raw.keys())
    values = dict(raw)
    values.setdefault("N0", DEFAULT_N0)
    missing = [k for k in PARAM_KEYS if k not in values]
    if missing:
        raise ParameterError([f"missing parameter {k!r}" for k in missing])

    errors = []
    clean = {}
    for key in PARAM_KEYS:
        try:
            x = float(values[key])
        except (TypeError, ValueError):
            errors.append(f"parameter {key!r} is not a number ({values[key]!r})")
            continue
        if not math.isfinite(x):
            errors.append(f"parameter {key!r} must be finite (got {x!r})")
            continue
        clean[key] = x
    if errors:
        raise ParameterError(errors)

    errors = _collect_errors(clean)
    if errors:
        raise ParameterError(errors)

    return EconomyParams(
        prefs=Preferences(clean["sigma1"], clean["sigma2"], clean["sigma"], clean["rho"]),
        demo=Demographics(clean["n"], clean["N0"]),
        tech=Technology(
            clean["A_p"], clean["a1"], clean["a2"],
            clean["A_d"], clean["b1"], clean["b2"], clean["b3"],
            clean["delta"],
        ),
    )


def with_overrides(base: EconomyParams | Mapping[str, Any], overrides: Mapping[str, Any]) -> dict:
    """Return a flat candidate with ``overrides`` applied jointly (not validated)."""
    _check_unknown(overrides.keys())
    flat = base.as_dict() if isinstance(base, EconomyParams) else dict(base)
    flat.update(overrides)
    return flat


def with_shock(base: EconomyParams | Mapping[str, Any], field: str, value: Any) -> dict:
    """Replace one scalar field. The result must be passed through :func:`validate`."""
    return with_overrides(base, {field: value})
