"""The two information benchmarks and their dominance thresholds.

Full information lets every low-need user see the queue; they join exactly
below the first length with negative utility, so the outcome is the
integer threshold mechanism at that length. No information forces a
stationary mixed equilibrium: users join with the probability that makes
the resulting geometric queue leave them indifferent (or with certainty /
never when the indifference point falls outside [0, 1]).

Two critical arrival rates organize when these benchmarks can be beaten
by signaling:

* ``critical rate (high)``: the unique root of
  g(q) = sum_k q**k u_l(k) in (0, 1). When lam_h is at least this rate,
  withholding all information is already welfare-optimal for both types.
* ``critical rate (low)``: given lam_h below the high critical rate, the
  low-need arrival rate above which the full-information outcome becomes
  dominated by a lower threshold (congestion externalities outweigh the
  marginal joiner's surplus).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .measures import ThresholdMeasures, threshold_measures
from .model import ModelSpec, UtilityFunction, full_info_threshold, geometric_weighted_tail, u_eval
from .steady_state import SteadyState, threshold_distribution

# Bisections resolve roots to this absolute width.
ROOT_TOL = 1e-12
# Grid used to screen for unexpected multiple sign changes of g.
_SCREEN_POINTS = 1000


@dataclass(frozen=True)
class FullInfoOutcome:
    """Threshold and welfare of the full-information benchmark."""

    threshold: int
    measures: ThresholdMeasures


@dataclass(frozen=True)
class NoInfoEquilibrium:
    """Mixed equilibrium under no information.

    Low-need users join with probability ``p_join``; the queue is then
    geometric with ratio lam_h + lam_l * p_join.
    """

    p_join: float
    ratio: float
    w_l: float
    w_h: float


def full_info_outcome(spec: ModelSpec) -> FullInfoOutcome:
    m = full_info_threshold(spec.u_l)
    return FullInfoOutcome(m, threshold_measures(spec, float(m)))


def _g(u: UtilityFunction, q: float) -> float:
    """g(q) = sum_k q**k u(k); -inf at q >= 1 for admissible utilities."""
    return geometric_weighted_tail(u, q, 0)


def no_info_equilibrium(spec: ModelSpec) -> NoInfoEquilibrium:
    """Solve the uninformed joining game.

    The expected utility of joining a geometric queue with ratio q is
    proportional to g(q) = sum_k q**k u_l(k), which is strictly decreasing
    in q over the relevant range. Join with certainty if even the full
    arrival rate leaves g nonnegative, never join if g is already
    nonpositive at lam_h, and otherwise mix at the indifference ratio.
    """
    u = spec.u_l
    lam_l, lam_h, lam = spec.lam_l, spec.lam_h, spec.lam
    if _g(u, lam) >= 0.0:
        # certain joining is an equilibrium (lam < 1 here since g(1) = -inf)
        p, q = 1.0, lam
    elif _g(u, lam_h) <= 0.0:
        p, q = 0.0, lam_h
    else:
        lo, hi = lam_h, lam  # g(lo) > 0 > g(hi)
        while hi - lo > ROOT_TOL:
            mid = 0.5 * (lo + hi)
            if _g(u, mid) > 0.0:
                lo = mid
            else:
                hi = mid
        q = 0.5 * (lo + hi)
        p = (q - lam_h) / lam_l
    w_l = lam_l * p * (1.0 - q) * _g(u, q)
    w_h = lam_h * (1.0 - q) * _g(spec.u_h, q)
    return NoInfoEquilibrium(p, q, w_l, w_h)


def no_info_distribution(spec: ModelSpec) -> SteadyState:
    """Stationary distribution of the no-information equilibrium."""
    eq = no_info_equilibrium(spec)
    if eq.p_join == 0.0:
        return threshold_distribution(spec, 0.0)
    # geometric with ratio q: same as a threshold at infinity with the
    # low-need rate scaled down, but simplest to build directly
    from .steady_state import SignalingMechanism, mechanism_distribution

    return mechanism_distribution(spec, SignalingMechanism((), tail_join=eq.p_join))


def critical_rate_high(u_l: UtilityFunction) -> float:
    """Unique root of g(q) = sum_k q**k u_l(k) in (0, 1).

    g(0) = u_l(0) > 0 and g diverges to -inf at 1, so a root exists; for
    utilities with a single sign change it is unique. A coarse grid scan
    warns if additional sign changes are detected (possible in principle
    for irregular tabulated utilities) rather than failing.
    """
    changes = 0
    prev = u_eval(u_l, 0)
    for i in range(1, _SCREEN_POINTS):
        val = _g(u_l, i / _SCREEN_POINTS)
        if (val < 0.0) != (prev < 0.0):
            changes += 1
        prev = val
    if changes > 1:
        warnings.warn(
            f"g(q) changes sign {changes} times on a scan grid; returning the "
            "first root, but the critical rate may not be unique",
            RuntimeWarning)
    lo = 0.0
    hi = 1.0 - 0.5 ** 10
    while _g(u_l, hi) > 0.0:
        hi = 1.0 - (1.0 - hi) * 0.5
        if 1.0 - hi < 1e-15:
            raise ValueError("g(q) stays positive arbitrarily close to 1")
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if _g(u_l, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _dominance_gap(u: UtilityFunction, lam_l: float, lam_h: float, m: int) -> float:
    """Sign-equivalent margin for the full-information threshold being strict.

    Positive exactly when moving from threshold m-1 up to the
    full-information threshold m lowers low-need welfare, i.e. when full
    information is dominated:

        lam_l * u(0) - lam_l * sum_{k=1}^{m-1} lam**k (u(k-1) - u(k))
        - (1 - lam_h) * u(m-1)

    It is negative at lam_l = 0, vanishes at lam_l = 1 - lam_h, and its
    first root in between is the critical low-need rate.
    """
    lam = lam_l + lam_h
    total = lam_l * u_eval(u, 0)
    w = lam
    for k in range(1, m):
        total -= lam_l * w * (u_eval(u, k - 1) - u_eval(u, k))
        w *= lam
    total -= (1.0 - lam_h) * u_eval(u, m - 1)
    return total


def critical_rate_low(u_l: UtilityFunction, lam_h: float) -> float:
    """Low-need rate above which full information is dominated.

    Root in (0, 1 - lam_h] of the dominance margin; below it the
    full-information threshold strictly beats the next lower one. Returns
    1 - lam_h when the margin stays negative on the whole interior (full
    information then dominates for every feasible low-need rate).
    """
    if not (0.0 <= lam_h < 1.0):
        raise ValueError(f"lam_h = {lam_h:g} must lie in [0, 1)")
    m = full_info_threshold(u_l)
    top = 1.0 - lam_h
    tiny = top * 1e-12
    if _dominance_gap(u_l, tiny, lam_h, m) >= 0.0:
        # degenerate: marginal full-information user has zero utility
        return 0.0
    # scan toward the right endpoint (where the margin vanishes) for a
    # positive bracket; if none exists the root is the endpoint itself
    hi = None
    step = 0.5
    for _ in range(60):
        cand = top * (1.0 - step)
        if _dominance_gap(u_l, cand, lam_h, m) > 0.0:
            hi = cand
            break
        step *= 0.5
    if hi is None:
        return top
    lo = tiny
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if _dominance_gap(u_l, mid, lam_h, m) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def critical_rate_low_lower_bound(u_l: UtilityFunction, lam_h: float) -> float:
    """Closed-form lower bound on the critical low-need rate.

    Obtained by replacing the total-rate weights lam**k in the dominance
    margin with their largest value; useful as a cheap sanity check.
    """
    m = full_info_threshold(u_l)
    denom = u_eval(u_l, 0)
    w = lam_h
    for k in range(1, m):
        denom -= w * (u_eval(u_l, k - 1) - u_eval(u_l, k))
        w *= lam_h
    if denom <= 0.0:
        return 1.0 - lam_h
    return min(1.0 - lam_h, (1.0 - lam_h) * u_eval(u_l, m - 1) / denom)


def full_info_dominated(spec: ModelSpec) -> bool:
    """Whether some lower threshold weakly beats full information for both types.

    Equivalent to the full-information threshold not strictly improving
    low-need welfare over the threshold one below it (higher thresholds
    always hurt high-need users, so any low-need tie or loss means
    domination). Decided on the sign of the dominance margin rather than
    on the raw welfare difference: the two agree in sign, but the margin
    stays order one while the difference shrinks like lam_l * lam**m_fi
    and would drown in any absolute tolerance at small rates.
    """
    return _dominance_gap(spec.u_l, spec.lam_l, spec.lam_h, spec.m_fi) >= 0.0


def no_info_dominated(spec: ModelSpec) -> bool:
    """Whether signaling can strictly beat the no-information equilibrium.

    The no-information outcome is undominated exactly when its equilibrium
    join probability is zero, i.e. when the high-need load alone already
    deters low-need users.
    """
    return no_info_equilibrium(spec).p_join > spec.tol
