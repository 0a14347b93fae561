"""Independent linear-programming route to the optimal mechanisms.

The closed-form frontier search has a second, structure-free derivation:
welfare maximization over stationary distributions is a linear program in
the occupancy probabilities. This module builds those programs (base
two-type problem, abandonment variant, many-type public signals) and
solves them with a self-contained dense two-phase simplex, so agreement
between the two routes is a genuine cross-check rather than a tautology.

States are truncated at a configurable level N. The base program folds
the geometric high-need tail beyond N into the coefficients analytically,
so its optimum is exact for any N at least two above the full-information
threshold. The extension programs use a hard cutoff instead (their tails
are not geometric in one ratio) with N chosen so a conservative bound on
the neglected tail mass is reported and small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .model import (
    AbandonmentSpec,
    ModelSpec,
    MultiTypeSpec,
    UtilityFunction,
    full_info_threshold,
    geometric_weighted_tail,
    u_eval,
)
from .steady_state import SteadyState

DEFAULT_PIVOT_TOL = 1e-10
DEFAULT_MAX_ITER = 10 ** 6
# Phase-1 residual above this is reported as infeasible.
_FEAS_TOL = 1e-8
# Consecutive non-improving pivots before switching to Bland's rule.
_STALL_LIMIT = 200


class MaxIterationsError(RuntimeError):
    """Simplex failed to terminate within the iteration cap."""


class InfeasibleExtraction(ValueError):
    """An LP solution does not encode a valid stationary distribution."""


@dataclass
class LinearProgram:
    """max objective @ x subject to listed rows, x >= 0 componentwise.

    ``ineq`` rows are (coefficients, sense, rhs) with sense "<=" or ">=";
    ``eq`` rows are (coefficients, rhs). ``names`` label variables in the
    text dump.
    """

    n_vars: int
    objective: np.ndarray
    ineq: List[Tuple[np.ndarray, str, float]] = field(default_factory=list)
    eq: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    names: Optional[List[str]] = None
    row_names: Optional[List[str]] = None

    def var_name(self, j: int) -> str:
        if self.names is not None:
            return self.names[j]
        return f"x{j}"

    def dump(self) -> str:
        """Plain-text rendering of the program, one row per line."""

        def terms(coeffs) -> str:
            parts = []
            for j, v in enumerate(coeffs):
                if v == 0.0:
                    continue
                sign = "-" if v < 0 else ("+" if parts else "")
                parts.append(f"{sign} {abs(v):.12g} {self.var_name(j)}")
            return " ".join(parts) if parts else "0"

        rows = [f"maximize {terms(self.objective)}", "subject to"]
        labels = iter(self.row_names or [])
        for coeffs, sense, rhs in self.ineq:
            label = next(labels, f"r{len(rows) - 2}")
            rows.append(f"  {label}: {terms(coeffs)} {sense} {rhs:.12g}")
        for coeffs, rhs in self.eq:
            label = next(labels, f"r{len(rows) - 2}")
            rows.append(f"  {label}: {terms(coeffs)} == {rhs:.12g}")
        rows.append(f"  {', '.join(self.var_name(j) for j in range(min(self.n_vars, 8)))}"
                    + (", ..." if self.n_vars > 8 else "") + " >= 0")
        return "\n".join(rows)


@dataclass
class LpSolution:
    """Outcome of a simplex run.

    ``status`` is "optimal", "infeasible" or "unbounded". ``x`` holds the
    primal values of the original variables and ``duals`` the row
    multipliers (inequalities first, then equalities, in listed order)
    when the run is optimal.
    """

    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    iterations: int
    duals: Optional[np.ndarray] = None


def _canonical(lp: LinearProgram):
    """Rows as equalities A x = b with b >= 0 and slack columns appended.

    Returns (A, b, row_sign, n_slack) where row_sign records which rows
    were negated so duals can be mapped back.
    """
    m = len(lp.ineq) + len(lp.eq)
    n = lp.n_vars
    n_slack = len(lp.ineq)
    a = np.zeros((m, n + n_slack))
    b = np.zeros(m)
    sign = np.ones(m)
    for i, (coeffs, sense, rhs) in enumerate(lp.ineq):
        if sense not in ("<=", ">="):
            raise ValueError(f"unknown sense {sense!r}")
        # orient each row so its right side is nonnegative and, when the
        # right side is zero, so the slack can start in the basis
        flip = (rhs < 0.0) if sense == "<=" else (rhs <= 0.0)
        row = -np.asarray(coeffs, dtype=float) if flip else np.asarray(coeffs, dtype=float)
        slack = 1.0 if (sense == "<=") != flip else -1.0
        a[i, :n] = row
        a[i, n + i] = slack
        b[i] = -rhs if flip else rhs
        sign[i] = -1.0 if flip else 1.0
    for k, (coeffs, rhs) in enumerate(lp.eq):
        i = n_slack + k
        a[i, :n] = coeffs
        b[i] = rhs
        if b[i] < 0.0:
            a[i] *= -1.0
            b[i] *= -1.0
            sign[i] = -1.0
    return a, b, sign, n_slack


def simplex_solve(
    lp: LinearProgram,
    pivot_tol: float = DEFAULT_PIVOT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LpSolution:
    """Two-phase revised simplex with verified verdicts.

    The first attempt runs on the data exactly as given, with every
    optimal/unbounded/infeasible verdict re-derived from a fresh
    factorization of the original matrix. Heavily degenerate programs
    (the stationary-balance families here have almost all right sides
    zero) can make that attempt wander a plateau of equivalent bases; if
    it exhausts a pivot budget, a second attempt perturbs the right side
    by a tiny seeded amount, which makes the path nondegenerate, and the
    final basis is then re-evaluated against the unperturbed data. The
    optimality certificate (reduced costs) never involves the right
    side, so the perturbation cannot contaminate a verdict; feasibility
    calls that fall inside the perturbation's gray zone raise instead of
    guessing.
    """
    m_rows = len(lp.ineq) + len(lp.eq)
    budget = min(max_iter, max(4000, 30 * max(m_rows, 1)))
    try:
        return _simplex_attempt(lp, pivot_tol, budget, perturb=False)
    except MaxIterationsError:
        if budget >= max_iter:
            raise
    return _simplex_attempt(lp, pivot_tol, max_iter, perturb=True)


def _simplex_attempt(
    lp: LinearProgram,
    pivot_tol: float,
    max_iter: int,
    perturb: bool,
) -> LpSolution:
    a, b, row_sign, _ = _canonical(lp)
    m, n_cols = a.shape
    n = lp.n_vars
    if perturb:
        rng = np.random.default_rng(0xC0FFEE)
        b_work = b + (1.0 + np.abs(b)) * rng.uniform(1e-9, 2e-9, size=m)
    else:
        b_work = b

    # initial basis: unit slack columns where available, artificials elsewhere
    basis = [-1] * m
    for i in range(len(lp.ineq)):
        if a[i, n + i] == 1.0:
            basis[i] = n + i
    n_art = sum(1 for bi in basis if bi == -1)
    iterations = 0
    if n_art:
        a_ext = np.hstack([a, np.zeros((m, n_art))])
        k = 0
        for i in range(m):
            if basis[i] == -1:
                basis[i] = n_cols + k
                a_ext[i, n_cols + k] = 1.0
                k += 1
        phase1_cost = np.zeros(n_cols + n_art)
        phase1_cost[n_cols:] = -1.0
        status, iterations = _revised_simplex(a_ext, b_work, phase1_cost,
                                              basis, pivot_tol, max_iter,
                                              iterations)
        if status == "unbounded":
            raise MaxIterationsError(
                "phase 1 cannot be unbounded; numerical failure")
        # classify feasibility on the original right side
        x_b = np.linalg.solve(a_ext[:, basis], b)
        residual = sum(max(float(x_b[i]), 0.0)
                       for i in range(m) if basis[i] >= n_cols)
        if perturb:
            if residual > 1e-6:
                return LpSolution("infeasible", None, None, iterations)
            if residual > _FEAS_TOL:
                raise MaxIterationsError(
                    "feasibility is too close to call under perturbation")
        elif residual > _FEAS_TOL:
            return LpSolution("infeasible", None, None, iterations)
        # swap any leftover artificial for a structural column; a row
        # offering no pivot is linearly dependent and gets dropped
        guard = 0
        while any(bi >= n_cols for bi in basis):
            guard += 1
            if guard > m + n_art + 1:
                raise MaxIterationsError(
                    "artificial drive-out failed to terminate")
            i = next(r for r in range(m) if basis[r] >= n_cols)
            e_i = np.zeros(m)
            e_i[i] = 1.0
            w = np.linalg.solve(a_ext[:, basis].T, e_i)
            row = w @ a_ext[:, :n_cols]
            j = next((jj for jj in range(n_cols)
                      if abs(row[jj]) > pivot_tol), None)
            if j is None:
                keep = [r for r in range(m) if r != i]
                a = a[keep]
                b = b[keep]
                b_work = b_work[keep]
                a_ext = a_ext[keep]
                basis = [basis[r] for r in keep]
                m = len(keep)
            else:
                basis[i] = j
    cost2 = np.zeros(n_cols)
    cost2[:n] = lp.objective
    status, iterations = _revised_simplex(a, b_work, cost2, basis, pivot_tol,
                                          max_iter, iterations)
    if status == "unbounded":
        # the ray certificate never involves the right side, so it holds
        # for the original data as well
        return LpSolution("unbounded", None, None, iterations)
    if perturb:
        # the perturbed optimum's basis is dual feasible for the original
        # data; dual pivots on the exact right side restore primal
        # feasibility, then the exact engine finishes with its own verdict
        iterations = _dual_cleanup(a, b, cost2, basis, pivot_tol, iterations)
        status, iterations = _revised_simplex(a, b, cost2, basis, pivot_tol,
                                              max_iter, iterations)
        if status == "unbounded":
            return LpSolution("unbounded", None, None, iterations)
    x_b = np.linalg.solve(a[:, basis], b)
    if float(np.min(x_b)) < -1e-6:
        raise MaxIterationsError(
            "optimal basis is infeasible on the original data")
    x_full = np.zeros(n_cols)
    np.maximum(x_b, 0.0, out=x_b)
    for i, bi in enumerate(basis):
        x_full[bi] = x_b[i]
    x = x_full[:n]
    objective = float(lp.objective @ x)
    duals = _recover_duals(lp, basis, row_sign, cost2)
    return LpSolution("optimal", x, objective, iterations, duals)


def _dual_cleanup(a, b, costs, basis, pivot_tol, iters, max_pivots=2000):
    """Pivot out negative basics while preserving dual feasibility.

    Entered with a basis whose reduced costs are nonpositive but whose
    basic solution for ``b`` dips slightly negative. Each pass picks the
    most negative basic variable, leaves on its row, and enters the
    column with the smallest reduced-cost ratio, which keeps the basis
    dual feasible. Few pivots are expected, so the inverse is simply
    recomputed each time.
    """
    for _ in range(max_pivots):
        binv = np.linalg.inv(a[:, basis])
        xb = binv @ b
        r = int(np.argmin(xb))
        if float(xb[r]) >= -1e-9:
            return iters
        y = binv.T @ costs[basis]
        red = costs - y @ a
        red[basis] = 0.0
        row = binv[r] @ a
        cand = np.flatnonzero(row < -pivot_tol)
        if cand.size == 0:
            raise MaxIterationsError(
                "no dual pivot available; numerical failure")
        ratios = red[cand] / row[cand]
        basis[r] = int(cand[np.argmin(ratios)])
        iters += 1
    raise MaxIterationsError(
        "dual cleanup failed to restore feasibility")


_RAY_TOL = 1e-13
# Pivots between full refactorizations of the basis inverse.
_REFRESH = 64
# Reduced costs at or below this bar stop the search. Looser than the
# pivot admissibility tolerance on purpose: chasing noise-level reduced
# costs across a degenerate plateau buys objective increments far below
# anything observable downstream.
_OPT_TOL = 1e-9


def _revised_simplex(a, b, costs, basis, pivot_tol, max_iter, iters):
    """Pivot to optimality for max costs @ x over a @ x = b, x >= 0.

    The working state is the basis list plus a maintained basis inverse,
    product-form updated each pivot and refactorized every few dozen
    steps. An optimal or unbounded verdict is only accepted right after
    a fresh factorization, so the answer never rests on drifted numbers.
    Ratio-test ties go to the row with the largest pivot entry, which
    keeps the updates stable; Bland's rule remains as the fallback
    termination guarantee. Should a refactorization find the basis
    singular (a stale inverse let an exactly dependent column in), the
    swap journal since the last sound factorization is unwound until the
    basis factors again, and pivoting resumes from that vertex on fresh
    numbers.
    """
    m, ncols = a.shape
    journal = []

    def refactor():
        while True:
            try:
                out = np.linalg.inv(a[:, basis])
                journal.clear()
                return out
            except np.linalg.LinAlgError:
                if not journal:
                    raise MaxIterationsError(
                        "singular working basis; numerical failure") from None
                r0, old = journal.pop()
                basis[r0] = old

    binv = refactor()
    xb = binv @ b
    since = 0
    stall = 0
    bland = False
    tiny = 0
    while True:
        y = binv.T @ costs[basis]
        red = costs - y @ a
        red[basis] = 0.0
        if bland:
            cand = np.flatnonzero(red > _OPT_TOL)
            enter = int(cand[0]) if cand.size else -1
        else:
            enter = int(np.argmax(red))
            if red[enter] <= _OPT_TOL:
                enter = -1
        if enter < 0:
            if since == 0:
                return "optimal", iters
            binv = refactor()
            xb = binv @ b
            since = 0
            continue
        col = binv @ a[:, enter]
        if float(np.max(col)) <= _RAY_TOL:
            if since == 0:
                return "unbounded", iters
            binv = refactor()
            xb = binv @ b
            since = 0
            continue
        mask = col > pivot_tol
        if not mask.any():
            # entries between the noise floor and the pivot tolerance are
            # real but badly scaled; allow them rather than wedge, with a
            # bounded count to keep conditioning honest
            tiny += 1
            if tiny > 64:
                raise MaxIterationsError(
                    "pivot entries below tolerance keep recurring; "
                    "numerical failure")
            mask = col > _RAY_TOL
        feas = np.maximum(xb, 0.0)
        safe = np.where(mask, col, 1.0)
        ratios = np.where(mask, feas / safe, np.inf)
        best = float(np.min(ratios))
        tie = np.flatnonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))
        if bland:
            r = int(min(tie, key=lambda i: basis[i]))
        else:
            r = int(tie[np.argmax(col[tie])])
        piv = float(col[r])
        if since > 0 and abs(piv) < 1e-7:
            # a tiny pivot seen through a stale factorization may be an
            # exact zero in disguise; refresh and redo the step
            binv = refactor()
            xb = binv @ b
            since = 0
            continue
        journal.append((r, basis[r]))
        basis[r] = enter
        iters += 1
        if iters >= max_iter:
            raise MaxIterationsError(
                f"simplex exceeded {max_iter} iterations; the program is "
                "numerically troublesome")
        since += 1
        if since >= _REFRESH or abs(piv) < 1e-7:
            binv = refactor()
            xb = binv @ b
            since = 0
        else:
            binv[r] /= piv
            xb[r] /= piv
            other = col.copy()
            other[r] = 0.0
            binv -= np.outer(other, binv[r])
            xb -= other * xb[r]
        if best <= pivot_tol:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = False


def _recover_duals(lp, basis, row_sign, cost2):
    """Row multipliers y solving B^T y = c_B on the canonical system."""
    a, b, _, n_slack = _canonical(lp)
    m = a.shape[0]
    if len(basis) != m:
        # redundant rows were dropped; dual recovery is not meaningful then
        return None
    bmat = np.zeros((m, m))
    cb = np.zeros(m)
    for i, bi in enumerate(basis):
        bmat[:, i] = a[:, bi]
        cb[i] = cost2[bi]
    try:
        y = np.linalg.solve(bmat.T, cb)
    except np.linalg.LinAlgError:
        return None
    return y * row_sign


# ---------------------------------------------------------------------------
# Program builders
# ---------------------------------------------------------------------------


def default_n_states(spec: ModelSpec, n_states: Optional[int] = None) -> int:
    """Truncation level for the base program: at least m_fi + 2."""
    floor_n = spec.m_fi + 2
    if n_states is None:
        return floor_n
    if n_states < floor_n:
        raise ValueError(
            f"n_states = {n_states} too small; need at least {floor_n} to "
            "cover every candidate threshold")
    return n_states


def base_lp(
    spec: ModelSpec,
    theta: float,
    n_states: Optional[int] = None,
    admission_only: bool = False,
    analytic_tail: bool = True,
) -> LinearProgram:
    """Weighted-welfare program over stationary distributions pi_0..pi_N.

    Beyond N the advice is "never join", so pi decays geometrically in
    lam_h; with ``analytic_tail`` that tail is folded into the
    normalization, leave-value and high-welfare coefficients exactly.
    ``admission_only`` drops the two obedience rows, giving the
    unconstrained admission benchmark. Balance rows keep each pi ratio
    between the high-need and total arrival rates.
    """
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"welfare weight theta = {theta:g} must lie in [0, 1]")
    n = default_n_states(spec, n_states)
    lam, lam_h, lam_l = spec.lam, spec.lam_h, spec.lam_l
    u_l, u_h = spec.u_l, spec.u_h
    nv = n + 1

    norm = np.ones(nv)
    if analytic_tail:
        norm[n] = 1.0 / (1.0 - lam_h)

    j_row = np.zeros(nv)
    for k in range(n):
        j_row[k] += -lam_h * u_eval(u_l, k)
        j_row[k + 1] += u_eval(u_l, k)

    l_row = np.zeros(nv)
    for k in range(n):
        l_row[k] += lam * u_eval(u_l, k)
        l_row[k + 1] += -u_eval(u_l, k)
    if analytic_tail:
        l_row[n] += lam_l * geometric_weighted_tail(u_l, lam_h, n)

    h_row = np.zeros(nv)
    for k in range(n):
        h_row[k] = lam_h * u_eval(u_h, k)
    if analytic_tail:
        h_row[n] = lam_h * geometric_weighted_tail(u_h, lam_h, n)
    else:
        h_row[n] = lam_h * u_eval(u_h, n)

    ineq = []
    row_names = []
    for k in range(n):
        lo = np.zeros(nv)
        lo[k + 1] = 1.0
        lo[k] = -lam_h
        ineq.append((lo, ">=", 0.0))
        row_names.append(f"grow_{k}")
        hi = np.zeros(nv)
        hi[k] = lam
        hi[k + 1] = -1.0
        ineq.append((hi, ">=", 0.0))
        row_names.append(f"cap_{k}")
    if not admission_only:
        ineq.append((j_row.copy(), ">=", 0.0))
        row_names.append("join_obeys")
        ineq.append((l_row.copy(), "<=", 0.0))
        row_names.append("leave_obeys")
    row_names.append("mass")

    objective = theta * j_row + (1.0 - theta) * h_row
    names = [f"pi{k}" for k in range(nv)]
    return LinearProgram(nv, objective, ineq, [(norm, 1.0)], names, row_names)


def extract_distribution(spec: ModelSpec, x: Sequence[float]) -> SteadyState:
    """Interpret base-program variables as a head-plus-geometric-tail law.

    Validates total mass and the balance band
    lam_h * pi_n <= pi_{n+1} <= lam * pi_n within 1e-7 before accepting.
    """
    head = np.asarray(x, dtype=float)
    if head.ndim != 1 or head.size < 2:
        raise InfeasibleExtraction("need at least two state probabilities")
    if np.any(head < -1e-9):
        raise InfeasibleExtraction("negative state probability in LP solution")
    head = np.maximum(head, 0.0)
    lam, lam_h = spec.lam, spec.lam_h
    tol = 1e-7
    for k in range(head.size - 1):
        if head[k + 1] < lam_h * head[k] - tol or head[k + 1] > lam * head[k] + tol:
            raise InfeasibleExtraction(
                f"balance violated at state {k}: pi={head[k]:g}, "
                f"next={head[k + 1]:g}")
    ss = SteadyState(head, lam_h)
    mass = ss.total_mass()
    if abs(mass - 1.0) > 1e-6:
        raise InfeasibleExtraction(f"total mass {mass:g} is not 1")
    return SteadyState(head / mass, lam_h)


def solve_base(
    spec: ModelSpec,
    theta: float,
    n_states: Optional[int] = None,
    admission_only: bool = False,
) -> Tuple[LpSolution, SteadyState]:
    """Build, solve and extract the base program in one step."""
    lp = base_lp(spec, theta, n_states, admission_only)
    sol = simplex_solve(lp)
    if sol.status != "optimal":
        raise RuntimeError(f"base program unexpectedly {sol.status}")
    return sol, extract_distribution(spec, sol.x)


# -- abandonment ------------------------------------------------------------


def abandonment_utility(u: UtilityFunction, ab: AbandonmentSpec, a_value: float) -> Callable[[int], float]:
    """Effective joining utility when waiting users renege at rate gamma.

    A user who joins behind n others completes service with probability
    1 / (1 + (n+1) gamma) against the race with abandonment and collects
    ``a_value`` otherwise, discounting the original utility accordingly:

        u_eff(n) = u(n) / (1 + (n+1) gamma)
                 + a_value * (n+1) gamma / (1 + (n+1) gamma)
    """
    g = ab.gamma

    def u_eff(n: int) -> float:
        w = (n + 1) * g
        return (u_eval(u, n) + a_value * w) / (1.0 + w)

    return u_eff


def abandonment_truncation(
    spec: ModelSpec,
    ab: AbandonmentSpec,
    target: float = 1e-10,
    n_cap: int = 100_000,
) -> Tuple[int, float]:
    """Truncation level N and a conservative bound on the neglected mass.

    With reneging, occupancy ratios are at most lam / (1 + gamma n), so
    the all-join chain bounds every feasible tail. N is the smallest level
    with ratio at most 1/2 and bound below ``target``. Without reneging
    (gamma = 0) there is no such decay at full load; the bound then uses
    the high-need ratio, which governs every candidate optimum beyond the
    full-information threshold.
    """
    lam, lam_h = spec.lam, spec.lam_h
    m_fi = spec.m_fi
    if ab.gamma == 0.0:
        if lam_h == 0.0:
            return m_fi + 2, 0.0
        n = m_fi + 2
        while lam_h ** (n - m_fi) / (1.0 - lam_h) > target and n < n_cap:
            n += 1
        return n, lam_h ** (n - m_fi) / (1.0 - lam_h)

    def bound_at(n: int) -> float:
        # product bound on pi_n times geometric-dominated remainder
        log_head = 0.0
        for k in range(n):
            log_head += math.log(min(1.0, lam / (1.0 + ab.gamma * k)))
        r = lam / (1.0 + ab.gamma * n)
        if r >= 1.0:
            return math.inf
        return math.exp(log_head) * r / (1.0 - r)

    n = max(m_fi + 2, int(math.ceil(max(0.0, 2.0 * lam - 1.0) / ab.gamma)) + 1)
    while n < n_cap:
        b = bound_at(n)
        if lam / (1.0 + ab.gamma * n) <= 0.5 and b <= target:
            return n, b
        n = max(n + 1, int(n * 1.2))
    return n_cap, bound_at(n_cap)


def abandonment_lp(
    spec: ModelSpec,
    ab: AbandonmentSpec,
    theta: float,
    n_states: Optional[int] = None,
    admission_only: bool = False,
) -> LinearProgram:
    """Weighted-welfare program with reneging, truncated at pi_{N+1} = 0.

    State n+1 empties at rate 1 + gamma n, which rescales every balance
    and obedience coefficient; utilities are replaced by their
    abandonment-adjusted versions. At gamma = 0 the matrix coincides with
    the base program's hard-truncation variant.
    """
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"welfare weight theta = {theta:g} must lie in [0, 1]")
    if n_states is None:
        n_states, _ = abandonment_truncation(spec, ab)
    n = n_states
    lam, lam_h, lam_l = spec.lam, spec.lam_h, spec.lam_l
    u_l = abandonment_utility(spec.u_l, ab, ab.a_l)
    u_h = abandonment_utility(spec.u_h, ab, ab.a_h)
    nv = n + 1
    g = ab.gamma

    def drain(k: int) -> float:
        return 1.0 + g * k

    j_row = np.zeros(nv)
    l_row = np.zeros(nv)
    for k in range(n):
        j_row[k] += -lam_h * u_l(k)
        j_row[k + 1] += drain(k) * u_l(k)
        l_row[k] += lam * u_l(k)
        l_row[k + 1] += -drain(k) * u_l(k)
    h_row = np.array([lam_h * u_h(k) for k in range(nv)])

    ineq = []
    row_names = []
    for k in range(n):
        lo = np.zeros(nv)
        lo[k + 1] = drain(k)
        lo[k] = -lam_h
        ineq.append((lo, ">=", 0.0))
        row_names.append(f"grow_{k}")
        hi = np.zeros(nv)
        hi[k] = lam
        hi[k + 1] = -drain(k)
        ineq.append((hi, ">=", 0.0))
        row_names.append(f"cap_{k}")
    if not admission_only:
        ineq.append((j_row.copy(), ">=", 0.0))
        row_names.append("join_obeys")
        ineq.append((l_row.copy(), "<=", 0.0))
        row_names.append("leave_obeys")
    row_names.append("mass")

    objective = theta * j_row + (1.0 - theta) * h_row
    names = [f"pi{k}" for k in range(nv)]
    return LinearProgram(nv, objective, ineq, [(np.ones(nv), 1.0)], names, row_names)


@dataclass(frozen=True)
class AbandonmentReport:
    """Solved abandonment program at one welfare weight."""

    theta: float
    n_states: int
    tail_bound: float
    w_l: float
    w_h: float
    objective: float
    pi: np.ndarray


def solve_abandonment(
    spec: ModelSpec,
    ab: AbandonmentSpec,
    theta: float,
    n_states: Optional[int] = None,
    admission_only: bool = False,
) -> AbandonmentReport:
    if n_states is None:
        n_states, bound = abandonment_truncation(spec, ab)
    else:
        _, bound = abandonment_truncation(spec, ab, n_cap=n_states)
        bound = min(bound, math.inf)
    lp = abandonment_lp(spec, ab, theta, n_states, admission_only)
    sol = simplex_solve(lp)
    if sol.status != "optimal":
        raise RuntimeError(f"abandonment program unexpectedly {sol.status}")
    # reconstruct both welfare components from the solution
    u_l = abandonment_utility(spec.u_l, ab, ab.a_l)
    u_h = abandonment_utility(spec.u_h, ab, ab.a_h)
    pi = np.maximum(sol.x, 0.0)
    w_l = sum((
        (1.0 + ab.gamma * k) * pi[k + 1] - spec.lam_h * pi[k]) * u_l(k)
        for k in range(n_states))
    w_h = spec.lam_h * sum(pi[k] * u_h(k) for k in range(n_states + 1))
    return AbandonmentReport(theta, n_states, bound, float(w_l), float(w_h),
                             sol.objective, pi)


# -- many types with public signals ----------------------------------------


@dataclass(frozen=True)
class MultiTypeIndex:
    """Variable layout of the many-type program.

    Variables are x[(n, S)] = P(queue = n, advised set = S) laid out as
    n-major blocks over the usable subsets (those containing every
    always-join type).
    """

    n_states: int
    subsets: Tuple[Tuple[int, ...], ...]

    def var(self, n: int, s_idx: int) -> int:
        return n * len(self.subsets) + s_idx

    @property
    def n_vars(self) -> int:
        return (self.n_states + 1) * len(self.subsets)


def _attractive_limit(u: UtilityFunction, outside: float) -> int:
    """First queue length at which joining falls below the outside value."""
    if outside == -math.inf:
        return 0
    n = 0
    while u_eval(u, n) >= outside:
        n += 1
        if n > 100000:
            raise ValueError("utility never drops below the outside value")
    return n


def multitype_truncation(
    mt: MultiTypeSpec,
    target: float = 1e-8,
    n_cap: int = 2000,
) -> Tuple[int, float]:
    """Truncation level from the unavoidable (always-join) arrival rate.

    Beyond every finite-outside type's last attractive state (where
    joining still beats that type's outside value), welfare-maximizing
    advice admits only the always-join types, so occupancy decays at
    least geometrically at their combined rate. The returned bound is
    that geometric remainder; it is reported, not silently trusted.
    """
    forced = sum(r for r, o in zip(mt.rates, mt.outside) if o == -math.inf)
    deepest = max(_attractive_limit(u, o)
                  for u, o in zip(mt.utilities, mt.outside))
    if forced <= 0.0:
        ratio = mt.total_rate
    else:
        ratio = forced
    if ratio >= 1.0:
        raise ValueError(
            "no principled truncation exists at full load without an "
            "always-join type; pass n_states explicitly")
    if ratio == 0.0:
        return deepest + 2, 0.0
    n = deepest + 2
    while ratio ** (n - deepest) / (1.0 - ratio) > target and n < n_cap:
        n += 1
    return n, ratio ** (n - deepest) / (1.0 - ratio)


def multitype_lp(
    mt: MultiTypeSpec,
    theta_weights: Sequence[float],
    n_states: Optional[int] = None,
    admission_only: bool = False,
) -> Tuple[LinearProgram, MultiTypeIndex]:
    """Public-signal welfare program over joint laws x[(queue, advised set)].

    The public signal names the set S of types advised to join. Types
    whose outside option is -inf join regardless, so subsets omitting them
    are forced to zero and dropped, as are their (vacuous) obedience rows.
    Per-signal obedience for the remaining types compares joining utility
    with the outside value conditional on the advised set.
    """
    i_count = mt.n_types
    if len(theta_weights) != i_count:
        raise ValueError(
            f"need {i_count} welfare weights, got {len(theta_weights)}")
    if n_states is None:
        n_states, _ = multitype_truncation(mt)
    always = [i for i in range(i_count) if mt.outside[i] == -math.inf]
    optional = [i for i in range(i_count) if mt.outside[i] != -math.inf]
    subsets = []
    for r in range(len(optional) + 1):
        for extra in combinations(optional, r):
            subsets.append(tuple(sorted(always + list(extra))))
    subsets.sort()
    idx = MultiTypeIndex(n_states, tuple(subsets))
    nv = idx.n_vars
    n_sub = len(subsets)
    rate_of = [sum(mt.rates[i] for i in s) for s in subsets]

    eq = []
    eq_names = []
    # balance: total inflow from level n equals total mass at level n+1
    for n in range(n_states):
        row = np.zeros(nv)
        for s_idx in range(n_sub):
            row[idx.var(n, s_idx)] += rate_of[s_idx]
            row[idx.var(n + 1, s_idx)] -= 1.0
        eq.append((row, 0.0))
        eq_names.append(f"flow_{n}")
    eq.append((np.ones(nv), 1.0))
    eq_names.append("mass")

    ineq = []
    ineq_names = []
    if not admission_only:
        for i in optional:
            li = mt.outside[i]
            u_i = mt.utilities[i]
            for s_idx, s in enumerate(subsets):
                row = np.zeros(nv)
                for n in range(n_states + 1):
                    row[idx.var(n, s_idx)] = u_eval(u_i, n) - li
                tag = "".join(map(str, s)) or "none"
                if i in s:
                    ineq.append((row, ">=", 0.0))
                    ineq_names.append(f"join_t{i}_s{tag}")
                else:
                    ineq.append((row, "<=", 0.0))
                    ineq_names.append(f"leave_t{i}_s{tag}")

    objective = np.zeros(nv)
    for i in range(i_count):
        th = theta_weights[i]
        if th == 0.0:
            continue
        u_i = mt.utilities[i]
        li = mt.outside[i]
        for s_idx, s in enumerate(subsets):
            joined = i in s
            for n in range(n_states + 1):
                if joined:
                    objective[idx.var(n, s_idx)] += th * mt.rates[i] * u_eval(u_i, n)
                else:
                    objective[idx.var(n, s_idx)] += th * mt.rates[i] * li

    names = []
    for n in range(n_states + 1):
        for s in subsets:
            names.append(f"x{n}_j{''.join(map(str, s)) or 'none'}")
    lp = LinearProgram(nv, objective, ineq, eq, names,
                       ineq_names + eq_names)
    return lp, idx


@dataclass(frozen=True)
class MultiTypeReport:
    """Solved many-type program: per-type welfare and diagnostics.

    ``marginal`` is the queue-length law summed over advised sets;
    ``tail_mass`` is the probability parked at the truncation state.
    """

    welfare: Tuple[float, ...]
    objective: float
    n_states: int
    tail_bound: float
    tail_mass: float
    marginal: Tuple[float, ...]


def solve_multitype(
    mt: MultiTypeSpec,
    theta_weights: Sequence[float],
    n_states: Optional[int] = None,
    admission_only: bool = False,
) -> MultiTypeReport:
    if n_states is None:
        n_states, bound = multitype_truncation(mt)
    else:
        try:
            _, bound = multitype_truncation(mt, n_cap=n_states)
        except ValueError:
            bound = math.inf
    lp, idx = multitype_lp(mt, theta_weights, n_states, admission_only)
    sol = simplex_solve(lp)
    if sol.status != "optimal":
        raise RuntimeError(f"many-type program unexpectedly {sol.status}")
    x = np.maximum(sol.x, 0.0)
    n_sub = len(idx.subsets)
    welfare = []
    for i in range(mt.n_types):
        u_i = mt.utilities[i]
        li = mt.outside[i]
        w = 0.0
        for s_idx, s in enumerate(idx.subsets):
            joined = i in s
            for n in range(n_states + 1):
                v = x[idx.var(n, s_idx)]
                if v == 0.0:
                    continue
                w += v * (u_eval(u_i, n) if joined else li)
        welfare.append(mt.rates[i] * w)
    marginal = tuple(
        float(sum(x[idx.var(n, s)] for s in range(n_sub)))
        for n in range(n_states + 1))
    return MultiTypeReport(tuple(welfare), sol.objective, n_states, bound,
                           marginal[-1], marginal)
