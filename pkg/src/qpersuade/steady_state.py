"""Stationary queue-length distributions induced by signaling mechanisms.

A (binary, obedient) signaling mechanism is summarized by the probability
``p_n`` that a low-need arrival is advised to join when n customers are
present. High-need users always join. The queue length is then a birth and
death chain whose stationary distribution satisfies the balance recursion

    pi_{n+1} = (lam_h + lam_l * p_n) * pi_n.

Distributions are stored exactly as a finite head ``pi_0 .. pi_N`` plus a
geometric tail ``pi_{N+j} = pi_N * tail_ratio**j``, which is the form every
mechanism of interest induces (beyond some level the join advice is
constant, so the ratio is constant). All infinite sums downstream use the
tail ratio analytically; nothing is truncated.

Threshold mechanisms are the central special case: join advice is certain
below level m, given with probability a at level m, and withheld above.
The pair is written as a single number x = m + a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .model import ModelSpec


class NotNormalizable(ValueError):
    """The requested distribution has no finite normalizing constant."""


class NotAdmissible(ValueError):
    """The distribution cannot arise from any join-advice mechanism."""


# Head probabilities below this floor are treated as exactly zero when
# inverting a distribution into a mechanism; the advice there is
# unidentified and reported as "never join".
_MASS_FLOOR = 1e-250


@dataclass(frozen=True)
class Threshold:
    """A threshold policy x = m + a: join below level m, with prob a at m.

    ``x`` may be ``math.inf`` for the policy that always advises joining.
    """

    x: float

    def __post_init__(self):
        if math.isnan(self.x) or self.x < 0.0:
            raise ValueError(f"threshold must be nonnegative, got {self.x}")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.x)

    @property
    def level(self) -> int:
        """Integer part m of the threshold."""
        if self.is_infinite:
            raise ValueError("infinite threshold has no finite level")
        return int(math.floor(self.x))

    @property
    def frac(self) -> float:
        """Fractional joining probability a at the threshold level."""
        if self.is_infinite:
            raise ValueError("infinite threshold has no fractional part")
        return self.x - self.level


@dataclass(frozen=True)
class SignalingMechanism:
    """Join-advice probabilities: p_n = p[n] for n < len(p), tail_join after."""

    p: Tuple[float, ...]
    tail_join: float = 0.0

    def __init__(self, p, tail_join: float = 0.0):
        object.__setattr__(self, "p", tuple(float(v) for v in p))
        object.__setattr__(self, "tail_join", float(tail_join))
        for n, v in enumerate(self.p):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"p[{n}] = {v:g} is not a probability")
        if not (0.0 <= self.tail_join <= 1.0):
            raise ValueError(f"tail_join = {self.tail_join:g} is not a probability")

    def join_prob(self, n: int) -> float:
        return self.p[n] if n < len(self.p) else self.tail_join


def threshold_mechanism(x: float) -> SignalingMechanism:
    """The mechanism advising join below x, with prob frac(x) at floor(x)."""
    thr = Threshold(x)
    if thr.is_infinite:
        return SignalingMechanism((), tail_join=1.0)
    m, a = thr.level, thr.frac
    return SignalingMechanism((1.0,) * m + (a,), tail_join=0.0)


@dataclass(frozen=True)
class SteadyState:
    """Stationary distribution: explicit head plus geometric tail.

    ``head[n]`` is pi_n for n = 0..N with N = len(head) - 1, and
    pi_{N+j} = head[N] * tail_ratio**j for j >= 0. The tail ratio must be
    strictly below 1 so the total mass is finite.
    """

    head: np.ndarray
    tail_ratio: float

    def __init__(self, head, tail_ratio: float):
        arr = np.asarray(head, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("head must be a nonempty 1-d array")
        if np.any(arr < 0.0):
            raise ValueError("head probabilities must be nonnegative")
        if not (0.0 <= tail_ratio < 1.0):
            raise NotNormalizable(
                f"tail ratio {tail_ratio:g} must lie in [0, 1) for finite mass")
        object.__setattr__(self, "head", arr)
        object.__setattr__(self, "tail_ratio", float(tail_ratio))

    @property
    def n_head(self) -> int:
        """Index N of the last explicitly stored probability."""
        return self.head.size - 1

    def pmf(self, n: int) -> float:
        if n < 0:
            return 0.0
        last = self.n_head
        if n <= last:
            return float(self.head[n])
        return float(self.head[last] * self.tail_ratio ** (n - last))

    def total_mass(self) -> float:
        r = self.tail_ratio
        return float(self.head.sum() + self.head[-1] * r / (1.0 - r))

    def mean_queue_length(self) -> float:
        n_arr = np.arange(self.head.size, dtype=float)
        total = float(n_arr @ self.head)
        r = self.tail_ratio
        last = float(self.n_head)
        # sum_{j>=1} (N+j) r^j = N r/(1-r) + r/(1-r)^2
        total += self.head[-1] * (last * r / (1.0 - r) + r / (1.0 - r) ** 2)
        return total

    def to_dense(self, n_max: int) -> np.ndarray:
        """Probabilities pi_0..pi_{n_max} as a dense vector."""
        out = np.zeros(n_max + 1)
        last = self.n_head
        k = min(last, n_max)
        out[: k + 1] = self.head[: k + 1]
        if n_max > last:
            j = np.arange(1, n_max - last + 1, dtype=float)
            out[last + 1:] = self.head[last] * self.tail_ratio ** j
        return out


def _normalize(head: np.ndarray, tail_ratio: float) -> SteadyState:
    ss = SteadyState(head, tail_ratio)
    z = ss.total_mass()
    if not (z > 0.0 and math.isfinite(z)):
        raise NotNormalizable(f"normalizing constant {z:g} is not positive finite")
    return SteadyState(ss.head / z, tail_ratio)


def threshold_distribution(spec: ModelSpec, x: float) -> SteadyState:
    """Stationary distribution of the threshold mechanism x = m + a.

    Below the threshold both types join, so the chain grows by the total
    rate; at the threshold level only a fraction a of low-need users joins;
    above it only high-need users do, giving a geometric lam_h tail.
    """
    thr = Threshold(x)
    lam, lam_h, lam_l = spec.lam, spec.lam_h, spec.lam_l
    if thr.is_infinite:
        if lam >= 1.0:
            raise NotNormalizable(
                "always-join advice at total arrival rate >= 1 has no "
                "stationary distribution")
        return _normalize(np.array([1.0, lam]), lam)
    m, a = thr.level, thr.frac
    head = np.empty(m + 2)
    head[0] = 1.0
    for k in range(m):
        head[k + 1] = head[k] * lam
    head[m + 1] = head[m] * (lam_h + a * lam_l)
    return _normalize(head, lam_h)


def mechanism_distribution(spec: ModelSpec, mech: SignalingMechanism) -> SteadyState:
    """Stationary distribution induced by an arbitrary advice profile."""
    lam_h, lam_l = spec.lam_h, spec.lam_l
    n = len(mech.p)
    head = np.empty(n + 1)
    head[0] = 1.0
    for k in range(n):
        head[k + 1] = head[k] * (lam_h + lam_l * mech.p[k])
    tail_ratio = lam_h + lam_l * mech.tail_join
    if head[n] <= _MASS_FLOOR:
        # No mass ever reaches the tail; its ratio is immaterial.
        tail_ratio = 0.0
    if tail_ratio >= 1.0:
        raise NotNormalizable(
            f"tail growth ratio {tail_ratio:g} >= 1: advice must eventually "
            "turn some arrivals away")
    return _normalize(head, tail_ratio)


def mechanism_from_distribution(spec: ModelSpec, ss: SteadyState) -> SignalingMechanism:
    """Invert a stationary distribution into the advice that induces it.

    Balance forces p_n = (pi_{n+1} - lam_h * pi_n) / (lam_l * pi_n); the
    distribution is admissible only if every such ratio is a probability
    (within spec.tol). Where pi_n is zero the advice is unidentified and
    reported as 0.
    """
    lam_h, lam_l, tol = spec.lam_h, spec.lam_l, spec.tol
    head = ss.head
    n_head = ss.n_head
    p = []
    dead = False  # set once the chain has no mass left
    for n in range(n_head):
        if dead or head[n] <= _MASS_FLOOR:
            dead = True
            p.append(0.0)
            continue
        ratio = (head[n + 1] - lam_h * head[n]) / (lam_l * head[n])
        if ratio < -tol or ratio > 1.0 + tol:
            raise NotAdmissible(
                f"implied join probability {ratio:g} at queue length {n} "
                "lies outside [0, 1]")
        p.append(min(1.0, max(0.0, ratio)))
    if dead or head[n_head] <= _MASS_FLOOR:
        tail_join = 0.0
    else:
        tail_join = (ss.tail_ratio - lam_h) / lam_l
        if tail_join < -tol or tail_join > 1.0 + tol:
            raise NotAdmissible(
                f"implied tail join probability {tail_join:g} lies outside [0, 1]")
        tail_join = min(1.0, max(0.0, tail_join))
    return SignalingMechanism(tuple(p), tail_join)
