"""Command-line interface: ``gesq {extremality,bounds,sweep,epi}``.

Set ``GESQ_THREADS`` to evaluate sweep points and EPI instances in parallel.
"""

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bounds as bd
from .epi import check_mcqepi, random_instance
from .errors import GesqError, UnsupportedDegenerateError
from .gaussian import amplifier, attenuator, load_channel, load_state, tmsv, two_mode_example

SWEEP_PARAMS = ("kappa_env", "eta2", "eta", "kappa", "n_s")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else f"{x:.12g}"
    return str(x)


def _write_csv(path, header, rows):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _threads():
    try:
        return max(1, int(os.environ.get("GESQ_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    workers = min(_threads(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _schedule(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad schedule {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty schedule")
    return vals


# --- extremality ----------------------------------------------------------------

def cmd_extremality(args):
    ch = load_channel(args.channel)
    try:
        res = bd.extremality_residual(ch.k, ch.alpha)
    except UnsupportedDegenerateError as exc:
        print(f"degenerate: {exc}")
        return 2
    if res <= args.tol:
        print(f"extreme residual={res:.3e}")
        return 0
    print(f"not-extreme residual={res:.3e}")
    return 1


# --- bounds ------------------------------------------------------------------------

def _upper(ch, squash_env, optimize_ns, ns_max, sched_t, conv_tol):
    if optimize_ns:
        ns, rep = bd.optimize_squash_squeezing(ch, ns_max=ns_max, schedule=sched_t, conv_tol=conv_tol)
        return rep, ns
    rep = bd.channel_upper_bound(ch, squash_env, sched_t, conv_tol)
    return rep, None


def cmd_bounds(args):
    ch = load_channel(args.channel)
    if not args.lower_only and ch.dilation is None:
        print("error: the upper bound needs a dilation ('dilation' field or a named channel kind); "
              "use --lower-only for the lower bound alone", file=sys.stderr)
        return 2
    lb = bd.channel_lower_bound(ch, args.schedule_n, args.conv_tol)
    reports = [lb]
    ub = None
    if not args.lower_only:
        squash = load_state(args.squash_env) if args.squash_env else None
        ub, _ = _upper(ch, squash, args.optimize_ns, args.ns_max, args.schedule_t, args.conv_tol)
        reports.append(ub)
    rows = [row for rep in reports for row in rep.csv_rows()]
    if args.out:
        _write_csv(args.out, ["kind", "param", "value", "limit", "converged", "residual"], rows)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([rep.to_dict() for rep in reports], fh, indent=2)
    if ub is None:
        print(f"LB={_fmt(lb.limit)}")
    else:
        line = f"LB={_fmt(lb.limit)} UB={_fmt(ub.limit)} gap={_fmt(ub.limit - lb.limit)}"
        if "n_s" in ub.extras:
            line += f" n_s={_fmt(ub.extras['n_s'])}"
        print(line)
    return 0


# --- sweep ---------------------------------------------------------------------------

def _build_channel(family, params):
    if family == "attenuator":
        return attenuator(params["eta"])
    if family == "amplifier":
        return amplifier(params["kappa"])
    if family == "two_mode_example":
        return two_mode_example(params["eta1"], params["eta2"], params.get("kappa_env", 0.0))
    raise GesqError(f"unknown channel family {family!r}")


def load_sweep_config(path):
    """Read and validate a sweep configuration (JSON)."""
    with open(path) as fh:
        cfg = json.load(fh)
    sweep = cfg.get("sweep", {})
    param = sweep.get("param")
    if param not in SWEEP_PARAMS:
        raise GesqError(f"sweep.param must be one of {SWEEP_PARAMS}, got {param!r}")
    lo, hi, steps = float(sweep["min"]), float(sweep["max"]), int(sweep["steps"])
    if not lo < hi or steps < 2:
        raise GesqError("sweep grid needs min < max and steps >= 2")
    family = cfg.get("channel", "two_mode_example")
    return {
        "family": family,
        "param": param,
        "grid": np.linspace(lo, hi, steps).tolist(),
        "fixed": dict(cfg.get("fixed", {})),
        "schedule_n": cfg.get("schedule_n", list(bd.DEFAULT_N_SCHEDULE)),
        "schedule_t": cfg.get("schedule_t", list(bd.DEFAULT_T_SCHEDULE)),
        "conv_tol": float(cfg.get("conv_tol", bd.DEFAULT_CONV_TOL)),
        "optimize_ns": bool(cfg.get("optimize_ns", family == "two_mode_example")),
        "ns_max": cfg.get("ns_max"),
        "output": cfg.get("output"),
    }


def _sweep_point(cfg, value):
    params = dict(cfg["fixed"])
    n_s = params.pop("n_s", None)
    if cfg["param"] == "n_s":
        n_s = value
    else:
        params[cfg["param"]] = value
    try:
        ch = _build_channel(cfg["family"], params)
        lb = bd.channel_lower_bound(ch, cfg["schedule_n"], cfg["conv_tol"])
        if cfg["param"] != "n_s" and cfg["optimize_ns"]:
            ub, n_s = _upper(ch, None, True, cfg["ns_max"], cfg["schedule_t"], cfg["conv_tol"])
        else:
            squash = tmsv(n_s, ("F1", "F2")) if n_s is not None else None
            ub, _ = _upper(ch, squash, False, None, cfg["schedule_t"], cfg["conv_tol"])
        status = "ok"
        if not (lb.converged and ub.converged):
            status = "not-converged"
        return (value, lb.limit, ub.limit, ub.limit - lb.limit,
                float("nan") if n_s is None else n_s, lb.converged, ub.converged, status)
    except (GesqError, ValueError, ArithmeticError, KeyError) as exc:
        msg = str(exc).replace(",", ";")
        nan = float("nan")
        return (value, nan, nan, nan, nan, False, False, f"error: {msg}")


def run_sweep(cfg):
    """Evaluate all grid points; rows come back in grid order."""
    return _pmap(lambda v: _sweep_point(cfg, v), cfg["grid"])


def cmd_sweep(args):
    cfg = load_sweep_config(args.config)
    rows = run_sweep(cfg)
    out = args.out or cfg["output"]
    _write_csv(out, [cfg["param"], "lb", "ub", "gap", "n_s", "lb_converged", "ub_converged", "status"], rows)
    failed = sum(1 for r in rows if r[-1].startswith("error"))
    print(f"points={len(rows)} failed={failed}", file=sys.stderr if out in (None, "-") else sys.stdout)
    return 0


# --- epi -------------------------------------------------------------------------------

def cmd_epi(args):
    if args.count < 1:
        print("error: --count must be >= 1", file=sys.stderr)
        return 2
    seeds = [args.seed + i for i in range(args.count)]
    verdicts = _pmap(lambda s: check_mcqepi(random_instance(args.k, args.n, s, args.memory)), seeds)
    rows = [(s, args.k, args.n, v.lhs, v.rhs, v.margin, v.holds) for s, v in zip(seeds, verdicts)]
    if args.out:
        _write_csv(args.out, ["seed", "K", "n", "lhs", "rhs", "margin", "holds"], rows)
    violations = sum(1 for v in verdicts if not v.holds)
    worst = min(v.margin for v in verdicts)
    print(f"instances={len(verdicts)} violations={violations} worst_margin={_fmt(worst)}")
    return 1 if violations else 0


# --- entry point ------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="gesq", description="Squashed-entanglement bounds for Gaussian channels.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extremality", help="test whether a channel is extreme")
    e.add_argument("channel", help="channel JSON file")
    e.add_argument("--tol", type=float, default=bd.EXTREMALITY_TOL)
    e.set_defaults(func=cmd_extremality)

    b = sub.add_parser("bounds", help="lower and upper bounds for a channel")
    b.add_argument("channel", help="channel JSON file")
    b.add_argument("--schedule-n", type=_schedule, default=list(bd.DEFAULT_N_SCHEDULE),
                   help="comma-separated TMSV photon numbers for the lower bound")
    b.add_argument("--schedule-t", type=_schedule, default=list(bd.DEFAULT_T_SCHEDULE),
                   help="comma-separated input temperatures for the upper bound")
    b.add_argument("--squash-env", help="state JSON file for the squashing environment")
    b.add_argument("--optimize-ns", action="store_true",
                   help="minimize the upper bound over TMSV squashing states")
    b.add_argument("--ns-max", type=float, default=None)
    b.add_argument("--conv-tol", type=float, default=bd.DEFAULT_CONV_TOL)
    b.add_argument("--lower-only", action="store_true", help="skip the upper bound")
    b.add_argument("--out", help="CSV output path")
    b.add_argument("--json", help="JSON output path for the full reports")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("sweep", help="parameter sweep from a JSON config")
    s.add_argument("config")
    s.add_argument("--out", help="CSV output path (overrides the config)")
    s.set_defaults(func=cmd_sweep)

    q = sub.add_parser("epi", help="entropy power inequality verification harness")
    q.add_argument("--k", type=int, default=2)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--count", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--memory", choices=("quantum", "thermal", "mixed"), default="mixed")
    q.add_argument("--out", help="CSV output path")
    q.set_defaults(func=cmd_epi)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GesqError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
