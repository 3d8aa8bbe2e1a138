"""Closed-form epidemiologic measures for a single binary risk factor.

A scenario is the triple (f, p0, rr): risk factor prevalence, disease
incidence among the unexposed, and the relative risk. Everything else is
derived from it: the incidence among the exposed, the factor prevalence
among future cases and future controls, the population-attributable risk
(PAR), and the concordance index of the prediction rule that calls every
exposed subject a case and every unexposed subject a control.

Two routes to the concordance index are kept deliberately distinct.
:func:`c_index_three_term` evaluates the pairwise success probability term
by term, :func:`c_index_closed` evaluates the simplified linear form
0.5 * (1 + f_cases - f_controls), and the test suite holds the two to
agree to 1e-12. Inverse problems (which rr produces a given PAR, which rr
produces a given c-index) are solved algebraically where possible and by
bisection otherwise; bisection is sound because the c-index is strictly
increasing in rr at fixed (f, p0).

All computation is plain 64-bit floating point. Scenario validation is
centralised in :class:`PopulationParams`, so a params object that exists
is always a realizable population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    DegenerateScenarioError,
    InvalidParamsError,
    NoConvergenceError,
    TargetUnreachableError,
)

__all__ = [
    "PopulationParams",
    "DerivedMeasures",
    "SolverConfig",
    "incidence_exposed",
    "prevalence_in_cases",
    "prevalence_in_controls",
    "par",
    "c_index_three_term",
    "c_index_closed",
    "derive_measures",
    "rr_from_par",
    "max_feasible_rr",
    "rr_for_target_c",
]


def _require_finite(value, name: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidParamsError(f"{name} must be a real number, got {value!r}") from exc
    if not math.isfinite(x):
        raise InvalidParamsError(f"{name} must be finite, got {x}")
    return x


def _require_prob(value, name: str, *, open_interval: bool = False) -> float:
    """Validate a probability; boundary values are degenerate, not invalid."""
    x = _require_finite(value, name)
    if x < 0.0 or x > 1.0:
        raise InvalidParamsError(f"{name} must lie in [0, 1], got {x}")
    if open_interval and (x == 0.0 or x == 1.0):
        raise DegenerateScenarioError(
            f"{name} = {x:g} makes the scenario degenerate; "
            f"{name} must lie strictly between 0 and 1"
        )
    return x


def _require_rr(value, *, allow_zero: bool = False) -> float:
    x = _require_finite(value, "rr")
    if x < 0.0 or (x == 0.0 and not allow_zero):
        raise InvalidParamsError(f"rr must be positive, got {x}")
    return x


@dataclass(frozen=True)
class PopulationParams:
    """A realizable population scenario for one binary risk factor.

    f
        Risk factor prevalence, strictly inside (0, 1).
    p0
        Disease incidence among the unexposed, strictly inside (0, 1).
    rr
        Relative risk p1/p0. Must be positive, and rr * p0 may not exceed
        1 because the implied incidence among the exposed is itself a
        probability.

    Construction validates every constraint; the constraint check is not
    repeated downstream.
    """

    f: float
    p0: float
    rr: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "f", _require_prob(self.f, "f", open_interval=True))
        object.__setattr__(self, "p0", _require_prob(self.p0, "p0", open_interval=True))
        rr = _require_rr(self.rr)
        if rr * self.p0 > 1.0:
            raise InvalidParamsError(
                f"rr*p0 = {rr * self.p0:.6g} exceeds 1, so the incidence among the "
                f"exposed would not be a probability; rr*p0 <= 1 is required"
            )
        object.__setattr__(self, "rr", rr)

    @property
    def p1(self) -> float:
        """Disease incidence among the exposed, rr * p0."""
        return self.rr * self.p0


@dataclass(frozen=True)
class DerivedMeasures:
    """All measures computed from one scenario.

    ``par`` is negative when the factor is protective (rr < 1); for
    rr >= 1 it lies in [0, 1) and ``c_index`` in [0.5, 1). The record
    itself is not validated so that plug-in estimates from finite cohorts,
    including protective ones, can be carried in the same type.
    """

    p1: float
    f_cases: float
    f_controls: float
    par: float
    c_index: float


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and bounds for the inverse solvers.

    ``rr_upper_bound`` of None means "the largest rr with rr * p0 <= 1",
    resolved per call once p0 is known.
    """

    abs_tolerance: float = 1e-10
    max_iterations: int = 200
    rr_upper_bound: float | None = None

    def __post_init__(self) -> None:
        tol = _require_finite(self.abs_tolerance, "abs_tolerance")
        if tol <= 0.0:
            raise InvalidParamsError(f"abs_tolerance must be positive, got {tol}")
        object.__setattr__(self, "abs_tolerance", tol)
        if not isinstance(self.max_iterations, int) or isinstance(self.max_iterations, bool):
            raise InvalidParamsError("max_iterations must be an integer")
        if self.max_iterations < 1:
            raise InvalidParamsError(
                f"max_iterations must be at least 1, got {self.max_iterations}"
            )
        if self.rr_upper_bound is not None:
            ub = _require_rr(self.rr_upper_bound)
            object.__setattr__(self, "rr_upper_bound", ub)


def incidence_exposed(p0, rr) -> float:
    """Disease incidence among the exposed, p1 = rr * p0.

    Raises :class:`InvalidParamsError` when rr * p0 exceeds 1: such a
    scenario is unrealizable.
    """
    p0 = _require_prob(p0, "p0", open_interval=True)
    rr = _require_rr(rr)
    p1 = rr * p0
    if p1 > 1.0:
        raise InvalidParamsError(
            f"rr*p0 = {p1:.6g} exceeds 1, so the incidence among the exposed "
            f"would not be a probability; rr*p0 <= 1 is required"
        )
    return p1


def prevalence_in_cases(f, p0, p1) -> float:
    """Risk factor prevalence among future cases.

    Bayes' rule applied to the scenario: f*p1 / (f*p1 + (1-f)*p0). The
    denominator is the overall disease incidence; when it vanishes there
    are no cases and the quantity is undefined.
    """
    f = _require_prob(f, "f")
    p0 = _require_prob(p0, "p0")
    p1 = _require_prob(p1, "p1")
    denom = f * p1 + (1.0 - f) * p0
    if denom <= 0.0:
        raise DegenerateScenarioError(
            "overall incidence f*p1 + (1-f)*p0 is zero: no cases exist, so the "
            "factor prevalence among cases is undefined"
        )
    return f * p1 / denom


def prevalence_in_controls(f, p0, p1) -> float:
    """Risk factor prevalence among future controls.

    f*(1-p1) / (f*(1-p1) + (1-f)*(1-p0)); undefined when everyone becomes
    a case.
    """
    f = _require_prob(f, "f")
    p0 = _require_prob(p0, "p0")
    p1 = _require_prob(p1, "p1")
    denom = f * (1.0 - p1) + (1.0 - f) * (1.0 - p0)
    if denom <= 0.0:
        raise DegenerateScenarioError(
            "f*(1-p1) + (1-f)*(1-p0) is zero: everyone is a case, so the factor "
            "prevalence among controls is undefined"
        )
    return f * (1.0 - p1) / denom


def par(f, rr) -> float:
    """Population-attributable risk, f*(rr-1) / (f*(rr-1) + 1).

    Negative values indicate a protective factor (rr < 1) and are returned
    unclamped. rr = 0 is accepted as the fully protective limit so that
    plug-in estimates from cohorts with no exposed cases stay computable.
    """
    f = _require_prob(f, "f", open_interval=True)
    rr = _require_rr(rr, allow_zero=True)
    excess = f * (rr - 1.0)
    denom = excess + 1.0
    if denom <= 0.0:
        raise InvalidParamsError(
            f"f*(rr-1) + 1 = {denom:.6g} is not positive; the attributable "
            f"risk is undefined for f = {f:g}, rr = {rr:g}"
        )
    return excess / denom


def c_index_three_term(f_cases, f_controls) -> float:
    """Concordance probability as the explicit three-term pairwise expansion.

    For a randomly selected case-control pair, the exposure rule succeeds
    with probability 0.5 when both members are exposed, 0.5 when neither
    is, and 1 when the case is exposed and the control is not:

        0.5 * f_cases * f_controls
        + 0.5 * (1 - f_cases) * (1 - f_controls)
        + 1 * f_cases * (1 - f_controls)

    The expansion is evaluated term by term on purpose. It serves as an
    independent cross-check of :func:`c_index_closed` and must never be
    simplified into it.
    """
    a = _require_prob(f_cases, "f_cases")
    b = _require_prob(f_controls, "f_controls")
    return 0.5 * (a * b) + 0.5 * ((1.0 - a) * (1.0 - b)) + 1.0 * (a * (1.0 - b))


def c_index_closed(f_cases, f_controls) -> float:
    """Concordance index in closed linear form, 0.5 * (1 + f_cases - f_controls)."""
    a = _require_prob(f_cases, "f_cases")
    b = _require_prob(f_controls, "f_controls")
    return 0.5 * (1.0 + a - b)


def derive_measures(params: PopulationParams) -> DerivedMeasures:
    """Compute the full set of derived measures for one scenario.

    The ``c_index`` field is computed via :func:`c_index_closed`.
    """
    if not isinstance(params, PopulationParams):
        raise InvalidParamsError(
            f"params must be a PopulationParams, got {type(params).__name__}"
        )
    p1 = params.p1
    f_cases = prevalence_in_cases(params.f, params.p0, p1)
    f_controls = prevalence_in_controls(params.f, params.p0, p1)
    return DerivedMeasures(
        p1=p1,
        f_cases=f_cases,
        f_controls=f_controls,
        par=par(params.f, params.rr),
        c_index=c_index_closed(f_cases, f_controls),
    )


def rr_from_par(f, target_par) -> float:
    """Relative risk producing a given attributable risk at prevalence f.

    Algebraic inversion of :func:`par`:
    rr = 1 + target_par / (f * (1 - target_par)).
    """
    f = _require_prob(f, "f", open_interval=True)
    tp = _require_finite(target_par, "target_par")
    if tp < 0.0 or tp >= 1.0:
        raise InvalidParamsError(f"target_par must lie in [0, 1), got {tp}")
    return 1.0 + tp / (f * (1.0 - tp))


def max_feasible_rr(p0) -> float:
    """Largest rr such that (f, p0, rr) is still a realizable scenario.

    Mathematically 1/p0; nudged down by at most a couple of ulps when
    floating point rounding would push rr * p0 above 1.
    """
    p0 = _require_prob(p0, "p0", open_interval=True)
    rr = 1.0 / p0
    while rr * p0 > 1.0:
        rr = math.nextafter(rr, 0.0)
    return rr


def rr_for_target_c(f, p0, target_c, config: SolverConfig | None = None) -> float:
    """Relative risk whose c-index equals ``target_c``, found by bisection.

    The c-index is strictly increasing in rr at fixed (f, p0), so the root
    on [1, rr_upper] is unique. Iteration stops once the bracket is
    narrower than ``abs_tolerance`` and the c-index at the midpoint is
    within ``abs_tolerance`` of the target; both conditions together make
    the result accurate in rr as well as in c.

    Raises :class:`TargetUnreachableError` when ``target_c`` exceeds the
    c-index at the upper bracket end, and :class:`NoConvergenceError` when
    the iteration budget runs out.
    """
    cfg = config if config is not None else SolverConfig()
    if not isinstance(cfg, SolverConfig):
        raise InvalidParamsError(f"config must be a SolverConfig, got {type(cfg).__name__}")
    f = _require_prob(f, "f", open_interval=True)
    p0 = _require_prob(p0, "p0", open_interval=True)
    target = _require_finite(target_c, "target_c")
    if target < 0.5:
        raise InvalidParamsError(
            f"target_c must be at least 0.5 (the c-index at rr = 1), got {target}"
        )

    lo = 1.0
    if cfg.rr_upper_bound is not None:
        hi = cfg.rr_upper_bound
        if hi * p0 > 1.0:
            raise InvalidParamsError(
                f"rr_upper_bound = {hi:g} is infeasible for p0 = {p0:g} "
                f"(rr*p0 <= 1 is required)"
            )
    else:
        hi = max_feasible_rr(p0)
    if hi <= lo:
        raise InvalidParamsError(
            f"the bracket [1, {hi:g}] is empty; rr_upper_bound must exceed 1"
        )

    def c_at(rr: float) -> float:
        return derive_measures(PopulationParams(f=f, p0=p0, rr=rr)).c_index

    c_hi = c_at(hi)
    if target > c_hi:
        raise TargetUnreachableError(
            f"target_c = {target:.12g} is unreachable: the achievable c-index "
            f"range is [0.5, {c_hi:.12g}] for f = {f:g}, p0 = {p0:g} with rr "
            f"in [1, {hi:.6g}]"
        )
    c_lo = c_at(lo)
    if target <= c_lo:
        return lo

    tol = cfg.abs_tolerance
    for _ in range(cfg.max_iterations):
        mid = 0.5 * (lo + hi)
        c_mid = c_at(mid)
        if abs(c_mid - target) <= tol and (hi - lo) <= tol:
            return mid
        if c_mid < target:
            lo = mid
        else:
            hi = mid
    raise NoConvergenceError(
        f"bisection did not reach tolerance {tol:g} within "
        f"{cfg.max_iterations} iterations"
    )
