"""Raw first-order conditions and a damped Newton solver for them.

This is the independent check on the closed form: the co-state is eliminated
through the consumption condition, leaving five residuals in the unknowns
(c, h_p, h_d, u_p, k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .params import EconomyParams
from .steady_state import (
    DEFAULT_POLICY,
    CapitalWeight,
    SteadyState,
    VariantPolicy,
    solve,
    utility_flow,
)

BOX_MARGIN = 1e-12
FD_REL_STEP = 1e-7
MAX_HALVINGS = 30
# logit bound matching the box margin on u_p
_Z_MAX = math.log((1.0 - BOX_MARGIN) / BOX_MARGIN)
# keeps exp() of the log coordinates finite
_LOG_MAX = 700.0


class SingularJacobian(ArithmeticError):
    pass


@dataclass(frozen=True)
class CandidateState:
    """Point in the unknown space. ``u_d`` is carried separately so that a
    share of order 1e-9 keeps its digits instead of being ``1 - u_p``."""

    c: float
    h_p: float
    h_d: float
    u_p: float
    k: float
    u_d: float | None = None

    def __post_init__(self):
        if self.u_d is None:
            object.__setattr__(self, "u_d", 1.0 - self.u_p)
        problems = []
        if not (self.c > 0 and self.k > 0):
            problems.append("consumption and capital must be positive")
        if not (self.h_p > 0 and self.h_d > 0 and self.h_p + self.h_d < 1):
            problems.append("working times must be positive and leave positive leisure")
        if not (0 < self.u_p < 1 and 0 < self.u_d < 1):
            problems.append("capital shares must lie in (0, 1)")
        elif abs(self.u_p + self.u_d - 1.0) > 1e-12:
            problems.append("capital shares must sum to 1")
        if problems:
            raise ValueError("invalid candidate state: " + "; ".join(problems))

    @property
    def d(self) -> float:
        return 1.0 - self.h_p - self.h_d

    @classmethod
    def from_steady_state(cls, ss: SteadyState, params: EconomyParams,
                          lambda_weight: CapitalWeight = CapitalWeight.TABLE_CONSISTENT):
        """Closed-form guess; capital is re-derived from the co-state condition."""
        t = params.tech
        w = t.a2 if lambda_weight is CapitalWeight.PRINTED else t.b1
        k = (t.a1 * ss.y_p + w * ss.y_d) / (t.delta + params.prefs.rho)
        return cls(c=ss.c, h_p=ss.h_p, h_d=ss.h_d, u_p=ss.u_p, k=k, u_d=ss.u_d)


@dataclass(frozen=True)
class StateOutputs:
    """Quantities implied by a candidate state."""

    y_p: float
    y_d: float
    y: float
    d: float
    u: float
    lam: float


def state_outputs(params: EconomyParams, s: CandidateState) -> StateOutputs:
    t, prefs = params.tech, params.prefs
    d = s.d
    y_p = t.A_p * math.exp(t.a1 * math.log(s.u_p * s.k) + t.a2 * math.log(s.h_p))
    y_d = t.A_d * math.exp(t.b1 * math.log(s.u_d * s.k) + t.b2 * math.log(s.h_d)
                           + t.b3 * math.log(d))
    u = utility_flow(s.c, d, prefs)
    lam = (1.0 - prefs.sigma) * prefs.sigma1 * u / s.c
    return StateOutputs(y_p=y_p, y_d=y_d, y=y_p + y_d, d=d, u=u, lam=lam)


RESIDUAL_NAMES = ("r_c", "r_u", "r_hp", "r_hd", "r_lambda", "r_k")


@dataclass(frozen=True)
class FocResiduals:
    """Signed residuals plus the magnitude of each one's largest term."""

    r_c: float
    r_u: float
    r_hp: float
    r_hd: float
    r_lambda: float
    r_k: float
    scales: tuple[float, ...] = field(default=(1.0,) * 6, repr=False)

    @property
    def raw(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in RESIDUAL_NAMES}

    @property
    def relative(self) -> dict[str, float]:
        return {name: (getattr(self, name) / s if s > 0 else getattr(self, name))
                for name, s in zip(RESIDUAL_NAMES, self.scales)}

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.raw.values())

    @property
    def relative_sup_norm(self) -> float:
        return max(abs(v) for v in self.relative.values())


def _term_sum(*terms: float) -> tuple[float, float]:
    return math.fsum(terms), max(abs(x) for x in terms)


def residuals(params: EconomyParams, s: CandidateState,
              lambda_weight: CapitalWeight = CapitalWeight.TABLE_CONSISTENT) -> FocResiduals:
    """Evaluate the stationarity conditions at ``s``.

    ``lambda_weight`` selects the gig-output weight in the co-state condition:
    ``b1`` is the derivative of the Hamiltonian in k, ``a2`` replicates the
    printed variant.
    """
    t, prefs = params.tech, params.prefs
    o = state_outputs(params, s)
    d, lam, u = o.d, o.lam, o.u
    leisure_mu = (1.0 - prefs.sigma) * prefs.sigma2 * u / d
    w = t.a2 if lambda_weight is CapitalWeight.PRINTED else t.b1

    r_u, s_u = _term_sum(t.a1 * o.y_p / s.u_p, -t.b1 * o.y_d / s.u_d)
    r_hp, s_hp = _term_sum(lam * t.a2 * o.y_p / s.h_p, -lam * t.b3 * o.y_d / d, -leisure_mu)
    r_hd, s_hd = _term_sum(lam * t.b2 * o.y_d / s.h_d, -lam * t.b3 * o.y_d / d, -leisure_mu)
    r_lam, s_lam = _term_sum(t.a1 * o.y_p / s.k, w * o.y_d / s.k, -(t.delta + prefs.rho))
    r_k, s_k = _term_sum(o.y_p, o.y_d, -s.c, -(t.delta + params.demo.n) * s.k)
    # lambda is defined by the consumption condition, so r_c vanishes identically
    return FocResiduals(0.0, r_u, r_hp, r_hd, r_lam, r_k,
                        scales=(1.0, s_u, s_hp, s_hd, s_lam, s_k))


# Internal coordinates: log c, log h_p, log h_d, logit u_p, log k.

def _to_coords(s: CandidateState) -> np.ndarray:
    return np.array([math.log(s.c), math.log(s.h_p), math.log(s.h_d),
                     math.log(s.u_p) - math.log(s.u_d), math.log(s.k)])


def _from_coords(x: np.ndarray) -> CandidateState:
    z = min(max(float(x[3]), -_Z_MAX), _Z_MAX)
    u_p = 1.0 / (1.0 + math.exp(-z))
    u_d = 1.0 / (1.0 + math.exp(z))
    h_p = math.exp(min(float(x[1]), 0.0))
    h_d = math.exp(min(float(x[2]), 0.0))
    total = h_p + h_d
    if total > 1.0 - BOX_MARGIN:
        shrink = (1.0 - BOX_MARGIN) / total
        h_p, h_d = h_p * shrink, h_d * shrink
    c = math.exp(min(max(float(x[0]), -_LOG_MAX), _LOG_MAX))
    k = math.exp(min(max(float(x[4]), -_LOG_MAX), _LOG_MAX))
    return CandidateState(c=c, h_p=h_p, h_d=h_d, u_p=u_p, k=k, u_d=u_d)


def _project(x: np.ndarray) -> np.ndarray:
    return _to_coords(_from_coords(x))


@dataclass(frozen=True)
class StrictSolution:
    state: CandidateState
    residuals: FocResiduals
    trace: tuple[float, ...]  # relative sup-norm at each accepted iterate, start included
    converged: bool
    iterations: int
    message: str = ""


class _System:
    def __init__(self, params, lambda_weight):
        self.params = params
        self.lambda_weight = lambda_weight

    def __call__(self, x: np.ndarray) -> np.ndarray:
        try:
            rel = residuals(self.params, _from_coords(x), self.lambda_weight).relative
        except (OverflowError, ValueError, ZeroDivisionError):
            return np.full(5, np.inf)
        return np.array([rel[name] for name in RESIDUAL_NAMES[1:]])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        J = np.empty((5, 5))
        for j in range(5):
            h = FD_REL_STEP * max(1.0, abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            J[:, j] = (self(xp) - self(xm)) / (xp[j] - xm[j])
        return J


def strict_solve(params: EconomyParams, guess: CandidateState | None = None,
                 tol: float = 1e-12, max_iter: int = 200,
                 policy: VariantPolicy = DEFAULT_POLICY,
                 lambda_weight: CapitalWeight = CapitalWeight.TABLE_CONSISTENT,
                 trace_stream: TextIO | None = None) -> StrictSolution:
    """Solve the FOC system by damped Newton from ``guess``.

    The default guess is the closed-form state under ``policy``. Each step is
    halved (at most 30 times) until the relative sup-norm strictly decreases;
    when no halving helps, the best iterate is returned flagged non-converged.
    Raises :class:`SingularJacobian` when the Newton step cannot be computed.
    """
    if guess is None:
        guess = CandidateState.from_steady_state(solve(params, policy), params, lambda_weight)
    system = _System(params, lambda_weight)
    x = _project(_to_coords(guess))
    f = system(x)
    norm = float(np.max(np.abs(f)))
    trace = [norm]

    def emit(i, value):
        if trace_stream is not None:
            trace_stream.write(f"{i} {value:.6e}\n")

    emit(0, norm)
    converged, message, it = norm < tol, "", 0
    while not converged and it < max_iter:
        J = system.jacobian(x)
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"Newton step failed at iteration {it}: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian(f"Newton step is not finite at iteration {it}")

        scale = 1.0
        for _ in range(MAX_HALVINGS + 1):
            x_new = _project(x + scale * step)
            f_new = system(x_new)
            new_norm = float(np.max(np.abs(f_new)))
            if new_norm < norm:
                break
            scale *= 0.5
        else:
            message = f"no descent after {MAX_HALVINGS} halvings"
            break

        x, f, norm = x_new, f_new, new_norm
        it += 1
        trace.append(norm)
        emit(it, norm)
        converged = norm < tol
    else:
        if not converged:
            message = f"no convergence in {max_iter} iterations"

    state = _from_coords(x)
    return StrictSolution(
        state=state,
        residuals=residuals(params, state, lambda_weight),
        trace=tuple(trace),
        converged=converged,
        iterations=it,
        message=message or "converged",
    )


DISCREPANCY_FIELDS = ("y_p", "y_d", "y", "h_p", "h_d", "d", "u_p", "u_d", "k", "c", "u", "lambda")


def as_steady_state(params: EconomyParams, s: CandidateState) -> SteadyState:
    """Express a candidate state in the closed-form record layout."""
    o = state_outputs(params, s)
    return SteadyState(y_p=o.y_p, y_d=o.y_d, y=o.y, h_p=s.h_p, h_d=s.h_d, d=o.d,
                       u_p=s.u_p, u_d=s.u_d, k=s.k, c=s.c, u=o.u, lam=o.lam)


def discrepancy_report(closed: SteadyState, strict: CandidateState,
                       params: EconomyParams, eps: float = 1e-300) -> dict[str, float]:
    """Relative gap |closed - strict| / max(|closed|, |strict|, eps) per field."""
    closed_values = closed.as_record()
    strict_values = as_steady_state(params, strict).as_record()
    return {
        name: abs(closed_values[name] - strict_values[name])
        / max(abs(closed_values[name]), abs(strict_values[name]), eps)
        for name in DISCREPANCY_FIELDS
    }
