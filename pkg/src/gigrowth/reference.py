"""Arbitrary-precision evaluation of the closed form with mpmath.

Used as a reference for the double-precision path and for finite differences
in regimes where the steady-state outputs change by less than one ulp over a
finite-difference step (M2 in the 1e10+ range).
"""

from __future__ import annotations

from mpmath import mp, mpf

from .steady_state import DEFAULT_POLICY, VariantPolicy


def _mp_params(flat):
    # mpf(float) is exact, so the reference sees the same binary inputs
    return {k: mpf(v) for k, v in flat.items()}


def constants_mp(flat, digits: int = 50) -> dict:
    """M1, M2, M3, P, Delta as mpf values; ``flat`` is a key-to-number mapping."""
    with mp.workdps(digits):
        v = _mp_params(flat)
        r = v["delta"] + v["rho"]
        g = (v["delta"] + v["n"]) / r
        M1 = (v["A_p"] * v["a1"] ** v["a1"] * v["a2"] ** v["a2"] / r ** v["a1"]) ** (1 / v["a2"])
        M2 = (M1 ** (v["b2"] + v["b3"]) * r ** v["b1"]
              / (v["A_d"] * v["b1"] ** v["b1"] * v["b2"] ** v["b2"])) ** (1 / v["b3"])
        M3 = 1 - v["a2"] * g - M2 + v["b3"]
        P = 1 - v["a1"] * g
        Delta = P * (M2 + v["b2"]) - v["a2"] * M3
        return {"M1": +M1, "M2": +M2, "M3": +M3, "P": +P, "Delta": +Delta}


def outputs_mp(flat, digits: int = 50, policy: VariantPolicy = DEFAULT_POLICY) -> dict:
    """y_p, y_d, y and c from the closed form, as mpf values."""
    with mp.workdps(digits):
        v = _mp_params(flat)
        k = constants_mp(v, digits)
        y_p = -k["M1"] * k["M3"] / k["Delta"]
        y_d = k["M1"] * k["P"] / k["Delta"]
        if policy.consumption_formula.value == "printed":
            factor = v["sigma1"] / v["sigma2"]
        else:
            factor = v["sigma1"]
        c = factor * (k["M2"] - v["b3"]) * y_d
        return {"y_p": y_p, "y_d": y_d, "y": y_p + y_d, "c": c}
