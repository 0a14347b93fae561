"""Problem data for the unobservable single-server queue with two need types.

Users arrive in Poisson streams and cannot see the queue. Low-need users
(rate ``lam_l``) have an outside option worth 0 and join only when advised;
high-need users (rate ``lam_h``) always join. Service is exponential with
rate 1, so all rates are expressed as fractions of the service rate.

A user who joins with ``n`` customers already present receives expected
utility ``u(n)``. Utilities are strictly decreasing in ``n``, positive at
``n = 0`` and eventually negative; the first queue length at which a
low-need user would rather stay out defines the full-information threshold.

Two utility families are supported:

* ``LinearUtility(c)``: ``u(n) = 1 - c * (n + 1)``, the classic linear
  waiting cost with reward 1 and unit mean service time.
* ``TabulatedUtility(values, tail_slope)``: explicit values for the first
  queue lengths, continued beyond the table by a line with slope
  ``-tail_slope``.

Both families are affine beyond a known index, which makes every infinite
geometric-weighted sum used elsewhere available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

# Default absolute tolerance for feasibility and sign checks.
DEFAULT_TOL = 1e-9

# Hard cap when scanning for the first negative utility; generous because
# utilities decrease by at least tail_slope per step past the table.
_SCAN_CAP = 10_000_000


@dataclass(frozen=True)
class LinearUtility:
    """Utility u(n) = 1 - c * (n + 1) for joining behind n customers.

    ``c`` is the waiting cost per unit time relative to the service reward.
    Requires 0 < c < 1 so that u(0) > 0 and u is eventually negative.
    """

    c: float

    def value(self, n: int) -> float:
        return 1.0 - self.c * (n + 1)

    @property
    def tail_start(self) -> int:
        # Affine from the very first index.
        return 0

    @property
    def tail_slope(self) -> float:
        return self.c


@dataclass(frozen=True)
class TabulatedUtility:
    """Utility given by a table for n = 0..K, affine with slope -tail_slope after.

    ``values[n]`` is u(n) for n <= K; for n > K,
    ``u(n) = values[K] - tail_slope * (n - K)``.
    """

    values: Tuple[float, ...]
    tail_slope: float

    def __init__(self, values: Sequence[float], tail_slope: float):
        object.__setattr__(self, "values", tuple(float(v) for v in values))
        object.__setattr__(self, "tail_slope", float(tail_slope))
        if not self.values:
            raise ValueError("utility table must contain at least u(0)")

    def value(self, n: int) -> float:
        k = len(self.values) - 1
        if n <= k:
            return self.values[n]
        return self.values[k] - self.tail_slope * (n - k)

    @property
    def tail_start(self) -> int:
        return len(self.values) - 1

    # tail_slope is a plain field


UtilityFunction = Union[LinearUtility, TabulatedUtility]


def u_eval(u: UtilityFunction, n: int) -> float:
    """Utility of joining when n customers are already in the system."""
    if n < 0:
        raise ValueError(f"queue length must be nonnegative, got {n}")
    return u.value(n)


def validate_utility(u: UtilityFunction, require_diminishing: bool = False) -> List[str]:
    """Check the standing assumptions on a utility function.

    Returns a list of human-readable violations; an empty list means the
    utility is admissible. Checked: u(0) > 0, strict decrease at every
    index (including the junction into the affine tail), and eventual
    negativity. With ``require_diminishing`` the increments
    u(k) - u(k+1) must also be non-increasing in k, which some frontier
    characterizations rely on.
    """
    violations: List[str] = []
    if u.value(0) <= 0:
        violations.append(f"u(0) = {u.value(0):g} must be positive")

    if isinstance(u, LinearUtility):
        if u.c <= 0:
            violations.append(
                f"cost c = {u.c:g} must be positive for u to decrease")
        # Linear utility always has constant increments; nothing more to check.
        return violations

    vals = u.values
    k_last = len(vals) - 1
    for k in range(k_last):
        if vals[k + 1] >= vals[k]:
            violations.append(
                f"u({k + 1}) = {vals[k + 1]:g} must be below u({k}) = {vals[k]:g}")
    if u.tail_slope <= 0:
        violations.append(
            f"tail slope {u.tail_slope:g} must be positive for u to decrease")

    if require_diminishing:
        incs = [vals[k] - vals[k + 1] for k in range(k_last)]
        incs.append(u.tail_slope)  # first increment past the table
        for k in range(len(incs) - 1):
            if incs[k + 1] > incs[k] + 1e-15:
                violations.append(
                    f"increment u({k + 1})-u({k + 2}) = {incs[k + 1]:g} exceeds "
                    f"u({k})-u({k + 1}) = {incs[k]:g}; increments must diminish")
    return violations


def full_info_threshold(u: UtilityFunction) -> int:
    """Smallest queue length at which joining has strictly negative utility.

    A fully informed low-need user joins exactly when fewer than this many
    customers are present. A utility of exactly zero still counts as
    joining, so the threshold is the first strictly negative index.
    """
    k = 0
    while u.value(k) >= 0.0:
        k += 1
        if k > _SCAN_CAP:
            raise ValueError("utility never becomes negative; invalid model")
    return k


def geometric_weighted_tail(u: UtilityFunction, q: float, start: int) -> float:
    """Closed form of sum_{j>=0} q**j * u(start + j) for 0 <= q < 1.

    Utilities are affine beyond ``u.tail_start``, so the sum splits into a
    finite head and the exact affine-geometric identity
    sum_{j>=0} q**j (a - d j) = a/(1-q) - d q/(1-q)**2.
    Returns -inf for q >= 1, where the series diverges to -infinity for
    any admissible (eventually negative, decreasing) utility.
    """
    if q < 0.0:
        raise ValueError(f"ratio must be nonnegative, got {q}")
    if q >= 1.0:
        return -math.inf
    t = u.tail_start
    d = u.tail_slope
    if start >= t:
        a = u.value(start)
        return a / (1.0 - q) - d * q / (1.0 - q) ** 2
    total = 0.0
    w = 1.0
    for j in range(t - start):
        total += w * u.value(start + j)
        w *= q
    a = u.value(t)
    return total + w * (a / (1.0 - q) - d * q / (1.0 - q) ** 2)


def head_weighted_sum(u: UtilityFunction, q: float, m: int) -> float:
    """Finite sum_{k=0}^{m-1} q**k * u(k); exact for any q including q = 1."""
    total = 0.0
    w = 1.0
    for k in range(m):
        total += w * u.value(k)
        w *= q
    return total


def geometric_partial_sum(q: float, m: int) -> float:
    """sum_{k=0}^{m} q**k, computed termwise so q = 1 is exact."""
    total = 0.0
    w = 1.0
    for _ in range(m + 1):
        total += w
        w *= q
    return total


@dataclass(frozen=True)
class ArrivalRates:
    """Poisson arrival rates of the two need types, in units of the service rate.

    ``lam_l`` is the rate of low-need (persuadable) users and must be
    positive; ``lam_h`` is the rate of high-need users who always join.
    The total may not exceed the service rate 1.
    """

    lam_l: float
    lam_h: float

    def __post_init__(self):
        if not self.lam_l > 0.0:
            raise ValueError(f"lam_l = {self.lam_l:g} must be positive")
        if self.lam_h < 0.0:
            raise ValueError(f"lam_h = {self.lam_h:g} must be nonnegative")
        if self.lam_l + self.lam_h > 1.0 + 1e-12:
            raise ValueError(
                f"total arrival rate {self.lam_l + self.lam_h:g} exceeds the "
                "service rate 1")

    @property
    def total(self) -> float:
        return self.lam_l + self.lam_h


@dataclass(frozen=True)
class ModelSpec:
    """A complete two-type problem instance.

    ``u_l`` and ``u_h`` are the joining utilities of low- and high-need
    users. ``tol`` is the absolute tolerance used for feasibility and sign
    decisions throughout the solver.
    """

    rates: ArrivalRates
    u_l: UtilityFunction
    u_h: UtilityFunction
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        for label, u in (("u_l", self.u_l), ("u_h", self.u_h)):
            bad = validate_utility(u)
            if bad:
                raise ValueError(f"invalid {label}: " + "; ".join(bad))
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")

    @property
    def lam_l(self) -> float:
        return self.rates.lam_l

    @property
    def lam_h(self) -> float:
        return self.rates.lam_h

    @property
    def lam(self) -> float:
        return self.rates.total

    @property
    def m_fi(self) -> int:
        return full_info_threshold(self.u_l)


def linear_spec(lam_l: float, lam_h: float, c: float, tol: float = DEFAULT_TOL) -> ModelSpec:
    """Convenience constructor for the common case of shared linear utility."""
    u = LinearUtility(c)
    return ModelSpec(ArrivalRates(lam_l, lam_h), u, u, tol)


@dataclass(frozen=True)
class AbandonmentSpec:
    """Abandonment extension parameters.

    Waiting users renege independently at rate ``gamma``, so state n empties
    at total rate 1 + gamma * (n - 1) while serving. A user who abandons
    collects ``a_l`` (low-need) or ``a_h`` (high-need) instead of the
    service reward.
    """

    gamma: float
    a_l: float = 0.0
    a_h: float = 0.0

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError(f"gamma = {self.gamma:g} must be nonnegative")


@dataclass(frozen=True)
class MultiTypeSpec:
    """Problem data for the many-type public-signal extension.

    Type i arrives at rate ``rates[i]``, values its outside option at
    ``outside[i]`` (``-inf`` marks a type that always joins), and enjoys
    ``utilities[i].value(n)`` when joining behind n customers.
    """

    rates: Tuple[float, ...]
    outside: Tuple[float, ...]
    utilities: Tuple[UtilityFunction, ...]
    tol: float = DEFAULT_TOL

    def __init__(self, rates, outside, utilities, tol: float = DEFAULT_TOL):
        object.__setattr__(self, "rates", tuple(float(r) for r in rates))
        object.__setattr__(self, "outside", tuple(float(o) for o in outside))
        object.__setattr__(self, "utilities", tuple(utilities))
        object.__setattr__(self, "tol", tol)
        n = len(self.rates)
        if not (1 <= n <= 8):
            raise ValueError(f"number of types {n} must be between 1 and 8")
        if len(self.outside) != n or len(self.utilities) != n:
            raise ValueError(
                f"rates ({n}), outside ({len(self.outside)}) and utilities "
                f"({len(self.utilities)}) must have equal lengths")
        for i, r in enumerate(self.rates):
            if r <= 0.0:
                raise ValueError(f"rate of type {i} must be positive, got {r:g}")
        if sum(self.rates) > 1.0 + 1e-12:
            raise ValueError(
                f"total arrival rate {sum(self.rates):g} exceeds the service rate 1")
        for i, o in enumerate(self.outside):
            if math.isnan(o) or o == math.inf:
                raise ValueError(f"outside value of type {i} must be finite or -inf")
        for i, u in enumerate(self.utilities):
            bad = validate_utility(u)
            if bad:
                raise ValueError(f"invalid utility for type {i}: " + "; ".join(bad))

    @property
    def n_types(self) -> int:
        return len(self.rates)

    @property
    def total_rate(self) -> float:
        return sum(self.rates)
