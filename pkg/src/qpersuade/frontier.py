"""Welfare-optimal mechanisms and the Pareto frontier between the types.

For each welfare weight theta the solver compares two nested problems:

* admission optimum: maximize theta * W_L + (1 - theta) * W_H over all
  stationary distributions the queue can be steered to, ignoring whether
  users would follow the advice. The optimum is always an integer
  threshold at or below the full-information threshold.
* signaling optimum: the same objective restricted to obedient advice
  (join value >= 0, leave value <= 0).

Either the admission optimum is already obedient and the two coincide, or
the leave constraint binds and the signaling optimum sits at the unique
(generically fractional) threshold where the leave value crosses zero.
That crossing point does not depend on theta, so the signaling optimum is
piecewise constant: one fixed fractional threshold below a critical
weight, the admission threshold above it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .measures import ThresholdMeasures, WelfarePoint, threshold_measures
from .model import ModelSpec

# Absolute width to which the critical weight is resolved.
THETA_TOL = 1e-6
# Absolute width to which the leave-value root is resolved.
ROOT_TOL = 1e-12


class InternalInconsistency(RuntimeError):
    """The solver reached a state the theory rules out; indicates a bug."""


@dataclass(frozen=True)
class SignalingOptimum:
    """Optimal obedient mechanism for one welfare weight."""

    x: float
    coincides: bool  # True when the unconstrained admission optimum is obedient
    measures: ThresholdMeasures

    @property
    def point(self) -> WelfarePoint:
        return self.measures.point


@dataclass(frozen=True)
class CoincidenceWeight:
    """Critical weight above which signaling and admission optima coincide.

    ``kind`` is "interior" (value holds the weight), "always" (they
    coincide at every weight) or "never" (they coincide at no weight).
    """

    kind: str
    value: Optional[float] = None


@dataclass(frozen=True)
class FrontierRow:
    theta: float
    x_ap: float
    x_sm: float
    point_ap: WelfarePoint
    point_sm: WelfarePoint
    coincides: bool


@dataclass(frozen=True)
class FrontierResult:
    rows: List[FrontierRow]
    xgrid: List[Tuple[float, float, float, float]]  # (x, W_L, W_H, leave)


def optimal_admission(spec: ModelSpec, theta: float) -> List[int]:
    """All integer thresholds maximizing the weighted welfare, advice-free.

    Candidates never exceed the full-information threshold: pushing the
    threshold past it admits users with negative utility and harms both
    types. Ties within spec.tol are all returned.
    """
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"welfare weight theta = {theta:g} must lie in [0, 1]")
    m_fi = spec.m_fi
    values = [
        theta * tm.w_l + (1.0 - theta) * tm.w_h
        for tm in (threshold_measures(spec, float(m)) for m in range(m_fi + 1))
    ]
    best = max(values)
    return [m for m, v in enumerate(values) if v >= best - spec.tol]


def _pareto_refine(spec: ModelSpec, thresholds: Sequence[int]) -> List[int]:
    """Drop tied maximizers that another tied maximizer Pareto-dominates.

    Welfare ties across distinct thresholds (for instance every threshold
    at weight 0 when there are no high-need users) would otherwise let a
    dominated threshold masquerade as an optimum.
    """
    pts = {m: threshold_measures(spec, float(m)).point for m in thresholds}
    tol = spec.tol
    kept = []
    for m in thresholds:
        a = pts[m]
        dominated = any(
            o is not m
            and pts[o].w_l >= a.w_l - tol and pts[o].w_h >= a.w_h - tol
            and (pts[o].w_l > a.w_l + tol or pts[o].w_h > a.w_h + tol)
            for o in thresholds
        )
        if not dominated:
            kept.append(m)
    return kept


def leave_root(spec: ModelSpec) -> Optional[float]:
    """The unique threshold at which the leave value crosses zero.

    The leave value is strictly decreasing while nonnegative and stays
    negative afterwards, so at most one crossing exists. Returns None when
    the leave advice is already credible at threshold 0 (leave value <= 0
    there); otherwise the root, which always lies below the
    full-information threshold.
    """
    if threshold_measures(spec, 0.0).leave <= 0.0:
        return None
    m_fi = spec.m_fi
    lo_m = None
    for m in range(m_fi):
        if threshold_measures(spec, float(m)).leave > 0.0 \
                and threshold_measures(spec, float(m + 1)).leave <= 0.0:
            lo_m = m
            break
    if lo_m is None:
        raise InternalInconsistency(
            "leave value positive at the full-information threshold; it must "
            "have crossed zero below it")
    lo, hi = float(lo_m), float(lo_m + 1)
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if threshold_measures(spec, mid).leave > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimal_signaling(spec: ModelSpec, theta: float) -> SignalingOptimum:
    """Best obedient mechanism for weight theta.

    If some (Pareto-refined) admission maximizer is obedient, that
    threshold is optimal outright. Otherwise the leave constraint binds
    and the optimum is the leave-value root, independent of theta.
    """
    refined = _pareto_refine(spec, optimal_admission(spec, theta))
    obedient = [
        m for m in refined
        if threshold_measures(spec, float(m)).leave <= spec.tol
    ]
    if obedient:
        x = float(max(obedient))
        tm = threshold_measures(spec, x)
        if tm.join < -spec.tol:
            raise InternalInconsistency(
                f"join value {tm.join:g} negative at threshold {x:g} <= "
                "full-information threshold")
        return SignalingOptimum(x, True, tm)
    x = leave_root(spec)
    if x is None:
        raise InternalInconsistency(
            "no admission maximizer is obedient yet the leave value is "
            "nonpositive at threshold 0")
    tm = threshold_measures(spec, x)
    if tm.join < -spec.tol:
        raise InternalInconsistency(
            f"join value {tm.join:g} negative at the leave-value root {x:g}")
    return SignalingOptimum(x, False, tm)


def admission_representative(spec: ModelSpec, theta: float) -> int:
    """Deterministic representative of the admission-optimal set.

    The largest Pareto-refined maximizer; with ties this favors the
    low-need side and keeps the representative nondecreasing in theta.
    """
    return max(_pareto_refine(spec, optimal_admission(spec, theta)))


def theta_star(spec: ModelSpec) -> CoincidenceWeight:
    """Critical weight above which the two optima coincide.

    Coincidence is monotone in theta: once the admission optimum is
    obedient it stays so for larger weights. Bisection to THETA_TOL.
    "always" means even pure high-need weight (theta = 0) is obedient;
    "never" means not even pure low-need weight (theta = 1) is.
    """

    def coincides(theta: float) -> bool:
        return optimal_signaling(spec, theta).coincides

    if coincides(0.0):
        return CoincidenceWeight("always")
    if not coincides(1.0):
        return CoincidenceWeight("never")
    lo, hi = 0.0, 1.0  # false at lo, true at hi
    while hi - lo > THETA_TOL:
        mid = 0.5 * (lo + hi)
        if coincides(mid):
            hi = mid
        else:
            lo = mid
    return CoincidenceWeight("interior", 0.5 * (lo + hi))


def frontier_sweep(
    spec: ModelSpec,
    thetas: Sequence[float],
    x_step: float = 0.01,
    x_max: Optional[float] = None,
) -> FrontierResult:
    """Tabulate both optima over welfare weights plus a threshold-grid scan.

    The x-grid covers [0, m_fi + 2] (or x_max) at the given step and
    records low/high welfare and the leave value of every threshold, which
    is what frontier plots are drawn from.
    """
    rows = []
    for theta in thetas:
        sm = optimal_signaling(spec, theta)
        m_ap = admission_representative(spec, theta)
        tm_ap = threshold_measures(spec, float(m_ap))
        rows.append(FrontierRow(
            theta=theta,
            x_ap=float(m_ap),
            x_sm=sm.x,
            point_ap=tm_ap.point,
            point_sm=sm.point,
            coincides=sm.coincides,
        ))
    top = x_max if x_max is not None else spec.m_fi + 2.0
    xgrid = []
    n_steps = int(round(top / x_step))
    for i in range(n_steps + 1):
        x = min(i * x_step, top)
        tm = threshold_measures(spec, x)
        xgrid.append((x, tm.w_l, tm.w_h, tm.leave))
    return FrontierResult(rows, xgrid)
