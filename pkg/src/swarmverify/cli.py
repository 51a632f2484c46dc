"""Command-line front end.

    swarmverify run CONFIG -o OUT [--seed N] [--truth-stride K] [--no-reach]
    swarmverify audit OUT
    swarmverify report OUT
    swarmverify dump-reach OUT --agent ID [--from T0] [--to T1]
    swarmverify capacity PROFILE

``run`` exits 0 on a clean run, 2 if any uncertain verdict occurred and 1
on a config error. ``audit`` exits 3 when the ground truth contradicts a
verdict.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .errors import CapacityZeroError, ConfigError, InvalidInputError
from .sim import io
from .sim.config import load_scenario
from .sim.engine import run_scenario
from .sim.metrics import metrics_report, soundness_audit
from .verify import TimingProfile, agent_capacity_bounds

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNCERTAIN = 2
EXIT_VIOLATION = 3

REACH_COLUMNS = ["t_rs", "kind", "t_start", "t_end", "axis", "lo", "hi"]


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_scenario(args.config)
    except ConfigError as exc:
        return _fail(str(exc))
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    result = run_scenario(cfg)
    m = metrics_report(result.events, len(cfg.agents), result.truth, cfg.position_axes)
    io.write_run(args.out, cfg, result, m, truth_stride=args.truth_stride, reaches=not args.no_reach)
    print(
        f"{len(result.events)} events, end {result.end_time:.3f} s, "
        f"uncertain {m.uncertain_total}, local-unsafe {m.local_unsafe_total}, "
        f"global-uncertain {m.global_uncertain_total}"
    )
    return EXIT_UNCERTAIN if m.any_uncertain else EXIT_OK


def _require(out: Path, *names: str) -> Optional[str]:
    missing = [n for n in names if not (out / n).is_file()]
    return f"missing run artifacts in {out}: {', '.join(missing)}" if missing else None


def cmd_audit(args: argparse.Namespace) -> int:
    out = Path(args.out)
    err = _require(out, io.SCENARIO_FILE, io.EVENTS_FILE, io.TRUTH_FILE)
    if err:
        return _fail(err)
    cfg = io.load_run_config(out)
    reaches = io.read_reaches(out / io.REACH_FILE) if (out / io.REACH_FILE).is_file() else []
    rep = soundness_audit(io.read_events(out / io.EVENTS_FILE), io.read_truth(out / io.TRUTH_FILE), cfg, reaches)
    print(f"reach samples  {rep.reach_checked:>10}  violations {rep.reach_violations}")
    print(f"pair verdicts  {rep.pair_checked:>10}  violations {rep.pair_violations}")
    print(f"global verdicts{rep.global_checked:>10}  violations {rep.global_violations}")
    for line in rep.details:
        print(f"  {line}")
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def _fmt(x: Optional[float], width: int = 10, digits: int = 4) -> str:
    return f"{'-':>{width}}" if x is None else f"{x:>{width}.{digits}f}"


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    err = _require(out, io.SCENARIO_FILE, io.EVENTS_FILE)
    if err:
        return _fail(err)
    cfg = io.load_run_config(out)
    truth = io.read_truth(out / io.TRUTH_FILE) if (out / io.TRUTH_FILE).is_file() else None
    n = len(cfg.agents)
    m = metrics_report(io.read_events(out / io.EVENTS_FILE), n, truth, cfg.position_axes)
    print(f"{'agent':>6}{'tau_e':>10}{'tau_d':>10}{'tau_tf':>10}{'tau_c':>10}{'VT':>10}  (ms)")
    for a in m.agents.values():
        comm = n > 1
        print(
            f"{a.agent:>6}{_fmt(a.tau_e)}{_fmt(a.tau_d if comm else None)}{_fmt(a.tau_tf if comm else None)}"
            f"{_fmt(a.tau_c if comm else None)}{_fmt(a.vt)}"
        )
    dist = "-" if m.min_distance is None else f"{m.min_distance:.3f}"
    print(f"min pairwise distance: {dist}")
    print(
        f"verdicts: useful {sum(a.useful for a in m.agents.values())}, "
        f"stale {sum(a.stale for a in m.agents.values())}, uncertain {m.uncertain_total}, "
        f"local-unsafe {m.local_unsafe_total}, global-uncertain {m.global_uncertain_total}"
    )
    return EXIT_OK


def cmd_dump_reach(args: argparse.Namespace) -> int:
    out = Path(args.out)
    err = _require(out, io.REACH_FILE)
    if err:
        return _fail(err)
    recs = io.read_reaches(out / io.REACH_FILE)
    if args.agent not in {r.agent for r in recs}:
        return _fail(f"unknown agent {args.agent}")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(REACH_COLUMNS)
    for rec in recs:
        if rec.agent != args.agent or not (args.t0 <= rec.t_global <= args.t1):
            continue
        res = rec.result
        for seg in res.intermediates:
            for k, (lo, hi) in enumerate(zip(seg.box.lo, seg.box.hi)):
                w.writerow([repr(res.t_rs), "segment", repr(seg.t_start), repr(seg.t_end), k, repr(lo), repr(hi)])
        for k, (lo, hi) in enumerate(zip(res.hull.lo, res.hull.hi)):
            w.writerow([repr(res.t_rs), "hull", repr(0.0), repr(res.horizon), k, repr(lo), repr(hi)])
    return EXIT_OK


def cmd_capacity(args: argparse.Namespace) -> int:
    """Profile file: ``worst`` and ``best`` timing profiles plus ``T_c`` and ``t_runtime`` (ms)."""
    try:
        with open(args.profile) as fh:
            doc = yaml.safe_load(fh)
        worst = TimingProfile(**doc["worst"])
        best = TimingProfile(**doc["best"])
        T_c = float(doc["T_c"])
        t_runtime = float(doc.get("t_runtime", worst.t_runtime))
        n_min, n_max = agent_capacity_bounds(worst, best, T_c, t_runtime)
    except CapacityZeroError as exc:
        return _fail(f"capacity is zero: {exc}")
    except (OSError, yaml.YAMLError, KeyError, TypeError, ValueError, ConfigError, InvalidInputError) as exc:
        return _fail(f"malformed profile {args.profile}: {exc}")
    print(f"n_min {n_min:.4f}")
    print(f"n_max {n_max:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmverify", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write run artifacts")
    run.add_argument("config", help="scenario YAML file")
    run.add_argument("-o", "--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--truth-stride", type=int, default=1, help="keep every k-th ground-truth sample")
    run.add_argument("--no-reach", action="store_true", help="skip the reach-set dump")
    run.set_defaults(func=cmd_run)

    audit = sub.add_parser("audit", help="check verdicts of a run against its ground truth")
    audit.add_argument("out")
    audit.set_defaults(func=cmd_audit)

    report = sub.add_parser("report", help="print per-agent cost and verdict table")
    report.add_argument("out")
    report.set_defaults(func=cmd_report)

    dump = sub.add_parser("dump-reach", help="print reach boxes of one agent as CSV")
    dump.add_argument("out")
    dump.add_argument("--agent", type=int, required=True)
    dump.add_argument("--from", dest="t0", type=float, default=float("-inf"), help="earliest reach start (global s)")
    dump.add_argument("--to", dest="t1", type=float, default=float("inf"), help="latest reach start (global s)")
    dump.set_defaults(func=cmd_dump_reach)

    cap = sub.add_parser("capacity", help="agent-count bounds from a timing profile file")
    cap.add_argument("profile")
    cap.set_defaults(func=cmd_capacity)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "truth_stride", 1) < 1:
        return _fail("--truth-stride must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
