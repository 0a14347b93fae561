"""Timing comparison of the two simulation kernels.

The discrete-event loop ships twice: a Cython extension and a pure-Python
fallback with identical semantics (bit-identical accumulators). This script
times both on the same workload and checks that they agree exactly.

Run:  python3 benchmarks/kernel_speed.py [--horizon 2e5] [--reps 3]
"""

from __future__ import annotations

import argparse
import time

from qpersuade.frontier import optimal_signaling
from qpersuade.model import linear_spec
from qpersuade.sim import SimConfig, available_backends, run_simulation
from qpersuade.steady_state import threshold_mechanism


def _time_backend(spec, cfg, backend, reps):
    best = float("inf")
    rep = None
    for _ in range(reps):
        t0 = time.perf_counter()
        rep = run_simulation(spec, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, rep


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=float, default=2e5)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()

    cases = [
        ("homogeneous sm threshold", linear_spec(0.5, 0.0, 0.15),
         threshold_mechanism(5.8)),
        ("heavy high-need traffic", linear_spec(0.13, 0.87, 0.15),
         threshold_mechanism(6.0)),
    ]
    spec_mix = linear_spec(0.5, 0.3, 0.15)
    cases.append(("mixed traffic, optimal signal", spec_mix,
                  threshold_mechanism(optimal_signaling(spec_mix, 0.5).x)))

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if len(backends) < 2:
        print("extension not built; timing the fallback only")

    for name, spec, mech in cases:
        cfg = SimConfig(horizon=args.horizon, seed=7, mechanism=mech)
        print(f"\n{name}  (horizon {args.horizon:g})")
        results = {}
        for backend in backends:
            secs, rep = _time_backend(spec, cfg, backend, args.reps)
            results[backend] = (secs, rep)
            rate = rep.event_count / secs
            print(f"  {backend:7s}  {secs * 1e3:9.2f} ms   "
                  f"{rate / 1e6:7.2f} M events/s   "
                  f"W_L = {rep.welfare_rate_l:.9f}")
        if len(results) == 2:
            sc, rc = results["cython"]
            sp, rp = results["python"]
            same = (rc.welfare_rate_l == rp.welfare_rate_l
                    and rc.event_count == rp.event_count
                    and rc.joins_l == rp.joins_l)
            print(f"  speedup {sp / sc:6.1f}x   "
                  f"bit-identical: {'yes' if same else 'NO'}")
            if not same:
                raise SystemExit("kernel mismatch; the twins have diverged")


if __name__ == "__main__":
    main()
