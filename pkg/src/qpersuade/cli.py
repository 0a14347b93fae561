"""Command line surface: benchmark reports, frontier data, extensions, sim.

Subcommands emit the data behind each study as CSV or JSON with 12
significant digits, deterministically for fixed flags, so downstream
plotting is reproducible byte for byte. Exit codes: 0 success, 2 invalid
input, 3 I/O failure, 4 solver failure.

An optional ``--config FILE`` reads a flat ``key=value`` file whose keys
mirror the long flag names (for example ``lambda-l=0.2``); values given
on the command line win over the file. The ``QP_THREADS`` environment
variable bounds sweep parallelism (default: machine parallelism).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import benchmarks as bm
from .frontier import InternalInconsistency, frontier_sweep, optimal_signaling
from .lp import (MaxIterationsError, multitype_truncation, solve_abandonment,
                 solve_multitype)
from .model import (AbandonmentSpec, LinearUtility, MultiTypeSpec, linear_spec)
from .sim import SimConfig, run_simulation
from .steady_state import (NotAdmissible, NotNormalizable, SignalingMechanism,
                           threshold_mechanism)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_SOLVER = 4


def _fmt(v: float) -> str:
    if v == 0.0:
        v = 0.0
    return f"{v:.12g}"


def _jsonable(obj):
    """Floats to 12 significant digits; arrays to lists; nan/inf to text."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, str)) or obj is None:
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(_fmt(obj))
    return obj


def _emit_json(payload: Dict, out: Optional[str]) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    return _fmt(v)


def _workers() -> int:
    env = os.environ.get("QP_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"QP_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ValueError("QP_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


def _pmap(fn, items: List):
    """Map preserving order, in processes when the grid warrants it."""
    workers = min(_workers(), len(items))
    if workers <= 1 or len(items) < 4:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _parse_range(text: str) -> List[float]:
    """Grid notation "start:stop:step", or a single value, or a,b,c list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(
                f"range {text!r} must have the form start:stop:step")
        a, b, s = (float(p) for p in parts)
        if s <= 0:
            raise ValueError(f"range step must be positive in {text!r}")
        n = int(round((b - a) / s)) + 1
        if n < 1:
            raise ValueError(f"range {text!r} is empty")
        return [round(a + k * s, 12) for k in range(n)]
    if "," in text:
        return [float(p) for p in text.split(",") if p != ""]
    return [float(text)]


def _parse_list(text: str) -> List[float]:
    return [float(p) for p in text.split(",") if p != ""]


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name.lstrip("-").replace("-", "_")) is None:
            raise ValueError(f"{name} is required")


def _spec_from(args):
    if args.cost is not None and not (0.0 < args.cost < 1.0):
        raise ValueError(
            f"--cost must lie strictly between 0 and 1, got {args.cost:g}")
    if args.lambda_l is not None and args.lambda_l <= 0.0:
        raise ValueError(f"--lambda-l must be positive, got {args.lambda_l:g}")
    if args.lambda_h is not None and args.lambda_h < 0.0:
        raise ValueError(
            f"--lambda-h must be nonnegative, got {args.lambda_h:g}")
    if args.lambda_l + args.lambda_h > 1.0 + 1e-12:
        raise ValueError(
            "--lambda-l plus --lambda-h may not exceed the service rate 1")
    return linear_spec(args.lambda_l, args.lambda_h, args.cost)


def cmd_benchmarks(args) -> int:
    _require(args, "--lambda-l", "--cost")
    spec = _spec_from(args)
    fi = bm.full_info_outcome(spec)
    ni = bm.no_info_equilibrium(spec)
    ni_dominated = bm.no_info_dominated(spec)
    payload = {
        "lambda_l": spec.lam_l,
        "lambda_h": spec.lam_h,
        "cost": args.cost,
        "m_fi": spec.m_fi,
        "fi": {"threshold": fi.threshold,
               "w_l": fi.measures.w_l, "w_h": fi.measures.w_h},
        "p_ni": ni.p_join,
        "ni": {"p_join": ni.p_join, "ratio": ni.ratio,
               "w_l": ni.w_l, "w_h": ni.w_h},
        "lambda_bar_h": bm.critical_rate_high(spec.u_l),
        "lambda_bar_l": bm.critical_rate_low(spec.u_l, spec.lam_h),
        "fi_dominated": bm.full_info_dominated(spec),
        "ni_dominated": ni_dominated,
        "ni_dominant": not ni_dominated,
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def _heat_row(task):
    lam_h, thetas, cost = task
    spec = linear_spec(1.0 - lam_h, lam_h, cost)
    out = []
    for theta in thetas:
        opt = optimal_signaling(spec, theta)
        out.append((lam_h, theta, opt.x, opt.coincides))
    return out


def cmd_frontier(args) -> int:
    _require(args, "--lambda-l", "--cost")
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.sweep_lambda_h is not None:
        lam_hs = _parse_range(args.sweep_lambda_h)
        thetas = _parse_range(args.sweep_theta)
        tasks = []
        for lam_h in lam_hs:
            if lam_h >= 1.0 - 1e-12:
                print(f"warning: skipping lambda_h = {_fmt(lam_h)}: "
                      "the paired low-need rate 1 - lambda_h vanishes",
                      file=sys.stderr)
                continue
            if lam_h < 0.0:
                raise ValueError("--sweep-lambda-h values must be nonnegative")
            tasks.append((lam_h, thetas, args.cost))
        rows = []
        for chunk in _pmap(_heat_row, tasks):
            for lam_h, theta, x_sm, coincides in chunk:
                rows.append((_fmt(lam_h), _fmt(theta), _fmt(x_sm),
                             _cell(coincides)))
        _write_csv(outdir / "heatmap.csv",
                   ["lambda_h", "theta", "x_sm", "sm_equals_ap"], rows)
        return EXIT_OK
    spec = _spec_from(args)
    thetas = _parse_range(args.thetas)
    result = frontier_sweep(spec, thetas)
    rows = []
    for r in result.rows:
        rows.append((_fmt(r.theta), _fmt(r.x_ap), _fmt(r.x_sm),
                     _fmt(r.point_ap.w_l), _fmt(r.point_ap.w_h),
                     _fmt(r.point_sm.w_l), _fmt(r.point_sm.w_h),
                     _cell(r.coincides)))
    _write_csv(outdir / "frontier.csv",
               ["theta", "x_ap", "x_sm", "W_L_ap", "W_H_ap",
                "W_L_sm", "W_H_sm", "sm_equals_ap"], rows)
    _write_csv(outdir / "xgrid.csv", ["x", "W_L", "W_H", "L_value"],
               [(_fmt(x), _fmt(wl), _fmt(wh), _fmt(lv))
                for x, wl, wh, lv in result.xgrid])
    return EXIT_OK


def cmd_abandon(args) -> int:
    _require(args, "--lambda-l", "--cost")
    spec = _spec_from(args)
    gammas = _parse_range(args.gamma)
    thetas = _parse_range(args.thetas)
    for g in gammas:
        if g < 0.0:
            raise ValueError(f"--gamma values must be nonnegative, got {g:g}")
    rows = []
    for g in gammas:
        ab = AbandonmentSpec(g, args.a_l, args.a_h)
        for theta in thetas:
            rep = solve_abandonment(spec, ab, theta)
            rows.append((_fmt(g), _fmt(theta), str(rep.n_states),
                         _fmt(rep.tail_bound), _fmt(rep.w_l), _fmt(rep.w_h),
                         _fmt(rep.objective)))
    header = ["gamma", "theta", "n_states", "tail_bound", "w_l", "w_h",
              "objective"]
    if args.out is None or args.out == "-":
        sys.stdout.write(",".join(header) + "\n")
        for row in rows:
            sys.stdout.write(",".join(row) + "\n")
    else:
        _write_csv(args.out, header, rows)
    return EXIT_OK


def _mt_cell(task):
    lam_h, theta_l, outside, cost = task
    lam_l = (1.0 - lam_h) / 2.0
    mt = MultiTypeSpec(rates=(lam_l, lam_l, lam_h), outside=outside,
                       utilities=[LinearUtility(cost)] * 3)
    n, bound = multitype_truncation(mt)
    weights = (theta_l / 2.0, theta_l / 2.0, 1.0 - theta_l)
    sm = solve_multitype(mt, weights, n_states=n)
    ap = solve_multitype(mt, weights, n_states=n, admission_only=True)
    return (lam_h, theta_l, n, bound, sm.objective, ap.objective,
            ap.objective - sm.objective)


def cmd_multitype(args) -> int:
    outside = _parse_list(args.outside)
    _require(args, "--cost")
    if args.sweep_lambda_h is not None:
        if len(outside) != 3:
            raise ValueError(
                "--outside must list exactly 3 values in sweep mode, "
                f"got {len(outside)}")
        lam_hs = _parse_range(args.sweep_lambda_h)
        theta_ls = _parse_range(args.sweep_theta_l)
        tasks = [(lh, tl, tuple(outside), args.cost)
                 for lh in lam_hs for tl in theta_ls]
        for lh in lam_hs:
            if not (0.0 < lh < 1.0):
                raise ValueError(
                    f"--sweep-lambda-h values must lie in (0, 1), got {lh:g}")
        rows = []
        for lam_h, tl, n, bound, o_sm, o_ap, gap in _pmap(_mt_cell, tasks):
            rows.append((_fmt(lam_h), _fmt(tl), str(n), _fmt(bound),
                         _fmt(o_sm), _fmt(o_ap), _fmt(gap)))
        header = ["lambda_h", "theta_l", "n_states", "tail_bound",
                  "objective_sm", "objective_ap", "gap"]
        if args.out is None or args.out == "-":
            sys.stdout.write(",".join(header) + "\n")
            for row in rows:
                sys.stdout.write(",".join(row) + "\n")
        else:
            _write_csv(args.out, header, rows)
        return EXIT_OK
    _require(args, "--rates", "--weights")
    rates = _parse_list(args.rates)
    weights = _parse_list(args.weights)
    if not (len(rates) == len(outside) == len(weights)):
        raise ValueError(
            f"--rates ({len(rates)}), --outside ({len(outside)}) and "
            f"--weights ({len(weights)}) must have equal lengths")
    mt = MultiTypeSpec(rates=rates, outside=outside,
                       utilities=[LinearUtility(args.cost)] * len(rates))
    sm = solve_multitype(mt, weights)
    ap = solve_multitype(mt, weights, admission_only=True)
    payload = {
        "rates": rates,
        "outside": outside,
        "cost": args.cost,
        "weights": weights,
        "n_states": sm.n_states,
        "tail_bound": sm.tail_bound,
        "tail_mass_sm": sm.tail_mass,
        "welfare_sm": list(sm.welfare),
        "objective_sm": sm.objective,
        "welfare_ap": list(ap.welfare),
        "objective_ap": ap.objective,
        "gap": ap.objective - sm.objective,
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    _require(args, "--lambda-l", "--cost")
    spec = _spec_from(args)
    if args.threshold is not None:
        mech = threshold_mechanism(args.threshold)
    elif args.p is not None:
        mech = SignalingMechanism(_parse_list(args.p),
                                  tail_join=args.tail_join)
    else:
        raise ValueError("--threshold or --p is required")
    cfg = SimConfig(horizon=args.horizon, seed=args.seed, mechanism=mech,
                    warmup=args.warmup)
    rep = run_simulation(spec, cfg, backend=args.backend)
    payload = {
        "backend": rep.backend,
        "event_count": rep.event_count,
        "max_queue_length": rep.max_queue_length,
        "empirical_pi": rep.empirical_pi,
        "join_rate_l": rep.join_rate_l,
        "join_rate_h": rep.join_rate_h,
        "welfare_rate_l": rep.welfare_rate_l,
        "welfare_rate_h": rep.welfare_rate_h,
        "welfare_rate_l_realized": rep.welfare_rate_l_realized,
        "mean_u_given_join": rep.mean_u_given_join,
        "mean_u_given_leave": rep.mean_u_given_leave,
        "se_welfare_l": rep.se_welfare_l,
        "se_welfare_h": rep.se_welfare_h,
        "se_welfare_l_realized": rep.se_welfare_l_realized,
        "se_u_join": rep.se_u_join,
        "se_u_leave": rep.se_u_leave,
        "arrivals_l": rep.arrivals_l,
        "joins_l": rep.joins_l,
        "arrivals_h": rep.arrivals_h,
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def _add_spec_flags(sub) -> None:
    sub.add_argument("--lambda-l", type=float, default=None,
                     help="low-need arrival rate (required)")
    sub.add_argument("--lambda-h", type=float, default=0.0,
                     help="high-need arrival rate (default 0)")
    sub.add_argument("--cost", type=float, default=None,
                     help="waiting cost per unit time for the shared "
                          "linear utility (required)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="qpersuade",
        description="Welfare-optimal information sharing for an "
                    "unobservable queue: benchmarks, frontiers, extensions, "
                    "simulation.")
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {}

    b = subs.add_parser("benchmarks",
                        help="full-information and no-information reports")
    _add_spec_flags(b)
    b.add_argument("--out", default=None, help="output path (default stdout)")
    b.set_defaults(func=cmd_benchmarks)
    registry["benchmarks"] = b

    f = subs.add_parser("frontier",
                        help="Pareto frontier CSVs; heatmap sweep mode")
    _add_spec_flags(f)
    f.add_argument("--thetas", default="0:1:0.01",
                   help="welfare-weight grid start:stop:step")
    f.add_argument("--out-dir", default=".",
                   help="directory receiving frontier.csv and xgrid.csv")
    f.add_argument("--sweep-lambda-h", default=None,
                   help="heatmap mode: sweep lambda_h with "
                        "lambda_l = 1 - lambda_h")
    f.add_argument("--sweep-theta", default="0:1:0.01",
                   help="heatmap mode theta grid")
    f.set_defaults(func=cmd_frontier)
    registry["frontier"] = f

    e = subs.add_parser("extensions", help="abandonment and many-type LPs")
    esubs = e.add_subparsers(dest="extension", required=True)

    a = esubs.add_parser("abandon", help="exogenous abandonment welfare table")
    _add_spec_flags(a)
    a.add_argument("--gamma", default="0",
                   help="abandonment rate grid start:stop:step or list")
    a.add_argument("--thetas", default="0:1:0.25", help="welfare-weight grid")
    a.add_argument("--a-l", type=float, default=0.0,
                   help="low-need utility upon abandoning (default 0)")
    a.add_argument("--a-h", type=float, default=0.0,
                   help="high-need utility upon abandoning (default 0)")
    a.add_argument("--out", default=None, help="CSV path (default stdout)")
    a.set_defaults(func=cmd_abandon)
    registry["extensions.abandon"] = a

    m = esubs.add_parser("multitype",
                         help="public-signal many-type solve or gap sweep")
    m.add_argument("--rates", default=None,
                   help="per-type arrival rates, comma separated")
    m.add_argument("--outside", default="0,-0.25,-inf",
                   help="per-type outside options; -inf for always-join")
    m.add_argument("--weights", default=None,
                   help="per-type welfare weights, comma separated")
    m.add_argument("--cost", type=float, default=None,
                   help="waiting cost of the shared linear utility")
    m.add_argument("--sweep-lambda-h", default=None,
                   help="gap-sweep mode: lambda_h grid; rates become "
                        "((1-lambda_h)/2, (1-lambda_h)/2, lambda_h)")
    m.add_argument("--sweep-theta-l", default="0:1:0.25",
                   help="gap-sweep mode: total low-type weight grid")
    m.add_argument("--out", default=None, help="output path (default stdout)")
    m.set_defaults(func=cmd_multitype)
    registry["extensions.multitype"] = m

    s = subs.add_parser("simulate",
                        help="discrete-event run of a mechanism, JSON report")
    _add_spec_flags(s)
    s.add_argument("--threshold", type=float, default=None,
                   help="threshold mechanism x = m + a")
    s.add_argument("--p", default=None,
                   help="explicit join probabilities, comma separated")
    s.add_argument("--tail-join", type=float, default=0.0,
                   help="join probability past the end of --p")
    s.add_argument("--horizon", type=float, default=1e6,
                   help="simulated time units (default 1e6)")
    s.add_argument("--seed", type=int, default=0, help="64-bit seed")
    s.add_argument("--warmup", type=float, default=None,
                   help="discarded prefix (default 5%% of horizon)")
    s.add_argument("--backend", default=None,
                   choices=("cython", "python"),
                   help="force a simulation kernel")
    s.add_argument("--out", default=None, help="output path (default stdout)")
    s.set_defaults(func=cmd_simulate)
    registry["simulate"] = s

    for sub in registry.values():
        sub.add_argument("--config", default=None,
                         help="flat key=value file mirroring the long flag "
                              "names; explicit flags win")
    return parser, registry


def _load_config(path: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    text = Path(path).read_text()
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(
                f"{path}:{ln}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _apply_config(sub: argparse.ArgumentParser, conf: Dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions}
    updates = {}
    for key, value in conf.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("help", "config"):
            raise ValueError(f"unknown config key {key!r}")
        act = actions[dest]
        updates[dest] = act.type(value) if act.type is not None else value
    sub.set_defaults(**updates)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            name = args.command
            if getattr(args, "extension", None):
                name = f"{args.command}.{args.extension}"
            _apply_config(registry[name], _load_config(args.config))
            args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, NotNormalizable, NotAdmissible) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MaxIterationsError, InternalInconsistency) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
