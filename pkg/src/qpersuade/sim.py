"""Discrete-event validation of mechanisms: occupancy, welfare, obedience.

The queue is simulated with competing exponential clocks (low-need
arrivals, high-need arrivals, unit-rate service while busy). Low-need
arrivals seeing n customers are advised to join with the mechanism's
probability p_n and follow the advice; high-need arrivals always join.
Time-averaged occupancy and welfare accrual rates after a warmup period
estimate the analytic steady state and W_L, W_H.

The hot loop lives in a compiled extension (qpersuade._simcore) when the
build produced one, with a pure Python twin (_simcore_py) that yields
bit-identical results; runs are reproducible per seed either way.

Uncertainty is quantified by batch means: the post-warmup window splits
into 20 equal batches and the spread of per-batch estimates gives the
standard errors reported alongside each rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .model import LinearUtility, ModelSpec, u_eval
from .steady_state import NotNormalizable, SignalingMechanism

try:
    from . import _simcore as _core_ext
except ImportError:
    _core_ext = None
from . import _simcore_py as _core_py

BACKEND = "cython" if _core_ext is not None else "python"

_N_BATCH = 20


def available_backends() -> Tuple[str, ...]:
    return ("cython", "python") if _core_ext is not None else ("python",)


def _kernel(backend: Optional[str]):
    name = BACKEND if backend is None else backend
    if name == "cython":
        if _core_ext is None:
            raise ValueError("the compiled simulation kernel is not available")
        return _core_ext.simulate
    if name == "python":
        return _core_py.simulate
    raise ValueError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class SimConfig:
    """A run: total simulated time, seed, discarded warmup, and advice.

    ``warmup`` defaults to 5% of the horizon when omitted.
    """

    horizon: float
    seed: int
    mechanism: SignalingMechanism
    warmup: Optional[float] = None

    def __post_init__(self):
        if not (self.horizon > 0.0):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.warmup is not None:
            if not (0.0 <= self.warmup < self.horizon):
                raise ValueError(
                    f"warmup {self.warmup} must lie in [0, horizon)")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must fit in 64 bits")

    @property
    def warmup_time(self) -> float:
        return 0.05 * self.horizon if self.warmup is None else self.warmup


@dataclass(frozen=True)
class SimReport:
    """Post-warmup estimates with batch-means standard errors.

    ``empirical_pi[n]`` is the fraction of time spent at queue length n.
    Welfare rates are utility accrued per unit time; the realized variant
    (linear utilities only, else None) credits 1 - c * sojourn at each
    tracked departure instead of u(n) at the join instant.
    ``mean_u_given_join`` / ``mean_u_given_leave`` average the low-need
    joining utility u_L(n) over arrivals partitioned by the advice; a
    side with no samples reports nan.
    """

    empirical_pi: np.ndarray
    join_rate_l: float
    join_rate_h: float
    welfare_rate_l: float
    welfare_rate_h: float
    welfare_rate_l_realized: Optional[float]
    mean_u_given_join: float
    mean_u_given_leave: float
    se_welfare_l: float
    se_welfare_h: float
    se_welfare_l_realized: Optional[float]
    se_u_join: float
    se_u_leave: float
    arrivals_l: int
    joins_l: int
    arrivals_h: int
    arrivals_l_by_length: np.ndarray
    joins_l_by_length: np.ndarray
    event_count: int
    max_queue_length: int
    backend: str


def _batch_rate_se(sums: np.ndarray, blen: float) -> float:
    rates = sums / blen
    return float(np.std(rates, ddof=1) / math.sqrt(len(rates)))

def _batch_mean_se(sums: np.ndarray, counts: np.ndarray) -> float:
    ok = counts > 0
    if int(ok.sum()) < 2:
        return math.nan
    means = sums[ok] / counts[ok]
    return float(np.std(means, ddof=1) / math.sqrt(len(means)))


def run_simulation(spec: ModelSpec, cfg: SimConfig,
                   backend: Optional[str] = None) -> SimReport:
    """Simulate the mechanism and estimate occupancy, welfare, obedience.

    Deterministic per (spec, cfg, kernel arithmetic); both backends give
    bit-identical reports for the same seed.
    """
    mech = cfg.mechanism
    lam_l, lam_h = spec.rates.lam_l, spec.rates.lam_h
    tail_growth = lam_h + lam_l * mech.tail_join
    if tail_growth >= 1.0:
        raise NotNormalizable(
            f"tail growth rate {tail_growth:g} >= 1: the simulated queue "
            "has no stationary regime")

    p = np.asarray(mech.p, dtype=float)
    tab_len = max(512, len(mech.p) + 8,
                  spec.u_l.tail_start + 8, spec.u_h.tail_start + 8)
    u_ltab = np.array([u_eval(spec.u_l, k) for k in range(tab_len)])
    u_htab = np.array([u_eval(spec.u_h, k) for k in range(tab_len)])
    track = isinstance(spec.u_l, LinearUtility)
    linear_c = spec.u_l.c if track else 0.0

    warmup = cfg.warmup_time
    kern = _kernel(backend)
    (occ, lsum, rsum, hsum, jsum, jcnt, vsum, vcnt, arr_l, join_l,
     h_count, event_count, max_n) = kern(
        lam_l, lam_h, float(cfg.horizon), float(warmup), int(cfg.seed),
        p, float(mech.tail_join), u_ltab, float(spec.u_l.tail_slope),
        u_htab, float(spec.u_h.tail_slope), int(track), linear_c)

    elapsed = float(cfg.horizon) - warmup
    blen = elapsed / _N_BATCH
    top = max(max_n, 1)
    occ_head = occ[: top + 1]
    pi = occ_head / occ_head.sum()

    joins = int(join_l.sum())
    arrivals = int(arr_l.sum())
    jn, vn = int(jcnt.sum()), int(vcnt.sum())
    report = SimReport(
        empirical_pi=pi,
        join_rate_l=joins / elapsed,
        join_rate_h=int(h_count) / elapsed,
        welfare_rate_l=float(lsum.sum()) / elapsed,
        welfare_rate_h=float(hsum.sum()) / elapsed,
        welfare_rate_l_realized=float(rsum.sum()) / elapsed if track else None,
        mean_u_given_join=float(jsum.sum()) / jn if jn else math.nan,
        mean_u_given_leave=float(vsum.sum()) / vn if vn else math.nan,
        se_welfare_l=_batch_rate_se(lsum, blen),
        se_welfare_h=_batch_rate_se(hsum, blen),
        se_welfare_l_realized=_batch_rate_se(rsum, blen) if track else None,
        se_u_join=_batch_mean_se(jsum, jcnt),
        se_u_leave=_batch_mean_se(vsum, vcnt),
        arrivals_l=arrivals,
        joins_l=joins,
        arrivals_h=int(h_count),
        arrivals_l_by_length=arr_l[: top + 1].copy(),
        joins_l_by_length=join_l[: top + 1].copy(),
        event_count=int(event_count),
        max_queue_length=int(max_n),
        backend=BACKEND if backend is None else backend,
    )
    return report


def empirical_obedience(spec: ModelSpec, cfg: SimConfig,
                        backend: Optional[str] = None) -> Dict[str, object]:
    """Sample means of u_L(n) over advised-join and advised-leave arrivals.

    For an obedient mechanism the join-side mean must be nonnegative and
    the leave-side mean nonpositive, up to sampling error; the returned
    standard errors calibrate that band.
    """
    rep = run_simulation(spec, cfg, backend=backend)
    return {
        "mean_u_given_join": rep.mean_u_given_join,
        "mean_u_given_leave": rep.mean_u_given_leave,
        "se_u_join": rep.se_u_join,
        "se_u_leave": rep.se_u_leave,
        "counts": {
            "join": rep.joins_l,
            "leave": rep.arrivals_l - rep.joins_l,
        },
    }
