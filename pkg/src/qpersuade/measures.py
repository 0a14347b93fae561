"""Welfare and obedience functionals of stationary distributions.

For a stationary distribution pi induced by join advice, three linear
functionals drive everything:

* join value   J(pi)  = sum_n (pi_{n+1} - lam_h * pi_n) * u_l(n)
* leave value  L(pi)  = sum_n (lam * pi_n - pi_{n+1}) * u_l(n)
* high welfare W_H(pi) = lam_h * sum_n pi_n * u_h(n)

J is the expected utility flow of low-need users advised to join, so it
doubles as the low-need welfare rate W_L. L is the (negated) value of the
advice to leave: obedience requires J >= 0 and L <= 0. The two satisfy
J + L = lam_l * sum_n pi_n * u_l(n) identically.

All sums run over the full infinite support: the geometric tail of a
SteadyState is folded in analytically through the closed form of
sum_j q**j u(start + j), so no truncation error is incurred.

For threshold mechanisms x = m + a the same quantities are evaluated by
direct closed forms in (m, a); these agree with the series route to
rounding error and are what the frontier search optimizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    ModelSpec,
    geometric_partial_sum,
    geometric_weighted_tail,
    head_weighted_sum,
    u_eval,
)
from .steady_state import NotNormalizable, SteadyState, Threshold


@dataclass(frozen=True)
class WelfarePoint:
    """Welfare rates of the two need types under some mechanism."""

    w_l: float
    w_h: float


@dataclass(frozen=True)
class ThresholdMeasures:
    """All four functionals of a threshold mechanism."""

    w_l: float
    w_h: float
    join: float
    leave: float

    @property
    def point(self) -> WelfarePoint:
        return WelfarePoint(self.w_l, self.w_h)


@dataclass(frozen=True)
class ObedienceReport:
    join_ok: bool
    leave_ok: bool
    join: float
    leave: float

    @property
    def obedient(self) -> bool:
        return self.join_ok and self.leave_ok


def join_value(spec: ModelSpec, ss: SteadyState) -> float:
    """J(pi): welfare rate of low-need users who follow the join advice."""
    u = spec.u_l
    lam_h = spec.lam_h
    head = ss.head
    last = ss.n_head
    total = 0.0
    for n in range(last):
        total += (head[n + 1] - lam_h * head[n]) * u_eval(u, n)
    r = ss.tail_ratio
    total += (r - lam_h) * head[last] * geometric_weighted_tail(u, r, last)
    return total


def leave_value(spec: ModelSpec, ss: SteadyState) -> float:
    """L(pi): negated value of the leave advice; obedience needs L <= 0."""
    u = spec.u_l
    lam = spec.lam
    head = ss.head
    last = ss.n_head
    total = 0.0
    for n in range(last):
        total += (lam * head[n] - head[n + 1]) * u_eval(u, n)
    r = ss.tail_ratio
    total += (lam - r) * head[last] * geometric_weighted_tail(u, r, last)
    return total


def welfare_h(spec: ModelSpec, ss: SteadyState) -> float:
    """W_H(pi): welfare rate of high-need users, who always join."""
    u = spec.u_h
    head = ss.head
    last = ss.n_head
    total = 0.0
    for n in range(last):
        total += head[n] * u_eval(u, n)
    total += head[last] * geometric_weighted_tail(u, ss.tail_ratio, last)
    return spec.lam_h * total


def welfare_point(spec: ModelSpec, ss: SteadyState) -> WelfarePoint:
    return WelfarePoint(join_value(spec, ss), welfare_h(spec, ss))


def obedience_check(spec: ModelSpec, ss: SteadyState) -> ObedienceReport:
    """Whether low-need users are willing to follow both pieces of advice."""
    j = join_value(spec, ss)
    l = leave_value(spec, ss)
    return ObedienceReport(j >= -spec.tol, l <= spec.tol, j, l)


def threshold_measures(spec: ModelSpec, x: float) -> ThresholdMeasures:
    """Closed-form J, L, W_L, W_H of the threshold mechanism x = m + a.

    With q_k the unnormalized stationary weights (q_k = lam**k up to the
    threshold level, geometric in lam_h above it) and Z their total mass:

        W_L = lam_l * (sum_{k<m} lam**k u_l(k) + a lam**m u_l(m)) / Z
        L   = lam_l * lam**m * ((1-a) u_l(m)
              + (lam_h + a lam_l) * sum_{j>=0} lam_h**j u_l(m+1+j)) / Z
        W_H = lam_h * (sum_{k<=m} lam**k u_h(k)
              + lam**m (lam_h + a lam_l) * sum_{j>=0} lam_h**j u_h(m+1+j)) / Z

    and J = W_L. An infinite threshold needs lam < 1 and yields the plain
    geometric queue with L = 0.
    """
    thr = Threshold(x)
    lam, lam_h, lam_l = spec.lam, spec.lam_h, spec.lam_l
    u_l, u_h = spec.u_l, spec.u_h
    if thr.is_infinite:
        if lam >= 1.0:
            raise NotNormalizable(
                "always-join advice at total arrival rate >= 1 has no "
                "stationary distribution")
        w_l = lam_l * (1.0 - lam) * geometric_weighted_tail(u_l, lam, 0)
        w_h = lam_h * (1.0 - lam) * geometric_weighted_tail(u_h, lam, 0)
        return ThresholdMeasures(w_l, w_h, w_l, 0.0)
    m, a = thr.level, thr.frac
    lam_pow_m = lam ** m
    mix = lam_h + a * lam_l  # growth rate at the threshold level
    z = geometric_partial_sum(lam, m) + lam_pow_m * mix / (1.0 - lam_h)
    w_l = lam_l * (head_weighted_sum(u_l, lam, m) + a * lam_pow_m * u_eval(u_l, m)) / z
    tail_l = geometric_weighted_tail(u_l, lam_h, m + 1)
    leave = lam_l * lam_pow_m * ((1.0 - a) * u_eval(u_l, m) + mix * tail_l) / z
    tail_h = geometric_weighted_tail(u_h, lam_h, m + 1)
    w_h = lam_h * (head_weighted_sum(u_h, lam, m + 1) + lam_pow_m * mix * tail_h) / z
    return ThresholdMeasures(w_l, w_h, w_l, leave)


def weighted_welfare(spec: ModelSpec, x: float, theta: float) -> float:
    """theta * W_L + (1 - theta) * W_H of the threshold mechanism x."""
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"welfare weight theta = {theta:g} must lie in [0, 1]")
    tm = threshold_measures(spec, x)
    return theta * tm.w_l + (1.0 - theta) * tm.w_h
