"""On-disk run artifacts.

A run directory holds:

- ``scenario.yaml``: the resolved config (seed included);
- ``events.jsonl``: one event record per line, in log order;
- ``truth.csv``: ground truth, columns ``t, agent, s0, s1, ...`` with one
  row per agent and sample;
- ``metrics.csv``: one row per agent plus a ``summary`` row;
- ``reach.jsonl``: every reach computation with its intermediates.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..geometry import HyperRectangle
from ..reach import ReachResult, ReachSegment
from .config import ScenarioConfig, dump_scenario, load_scenario
from .engine import EventRecord, GroundTruth, ReachRecord, RunResult
from .metrics import COLUMNS, Metrics

SCENARIO_FILE = "scenario.yaml"
EVENTS_FILE = "events.jsonl"
TRUTH_FILE = "truth.csv"
METRICS_FILE = "metrics.csv"
REACH_FILE = "reach.jsonl"


def write_events(events: Iterable[EventRecord], path: Path) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(e.to_json() + "\n")


def read_events(path: Path) -> list[EventRecord]:
    with open(path) as fh:
        return [EventRecord.from_json(line) for line in fh if line.strip()]


def write_truth(truth: GroundTruth, path: Path, stride: int = 1) -> None:
    """Long-form table: one row per (agent, sample), grouped by agent."""
    ids = sorted(truth.states)
    width = max(truth.states[i].shape[1] for i in ids)
    header = ["t", "agent"] + [f"s{k}" for k in range(width)]
    times = truth.times[::stride]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for aid in ids:
            states = truth.states[aid][::stride]
            pad = np.full((len(times), width - states.shape[1]), np.nan)
            block = np.column_stack([times, np.full(len(times), aid), states, pad])
            np.savetxt(fh, block, delimiter=",", fmt="%.17g")


def read_truth(path: Path) -> GroundTruth:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    agents = table[:, 1].astype(int)
    states = {}
    times = None
    for aid in sorted(set(agents.tolist())):
        rows = table[agents == aid]
        cols = rows[:, 2:]
        cols = cols[:, ~np.all(np.isnan(cols), axis=0)]
        states[aid] = cols
        if times is None:
            times = rows[:, 0]
    dt = float(times[1] - times[0]) if len(times) > 1 else 1.0
    # Re-derive the grid so index lookups stay exact after the text round trip.
    dt = round(dt, 12)
    return GroundTruth(times=np.arange(len(times)) * dt, states=states, dt=dt)


def write_metrics(m: Metrics, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for a in m.agents.values():
            w.writerow(["" if getattr(a, c) is None else getattr(a, c) for c in COLUMNS])
        summary = {
            "agent": "summary",
            "reaches": sum(a.reaches for a in m.agents.values()),
            "useful": sum(a.useful for a in m.agents.values()),
            "stale": sum(a.stale for a in m.agents.values()),
            "malformed": sum(a.malformed for a in m.agents.values()),
            "uncertain": m.uncertain_total,
            "local_unsafe": m.local_unsafe_total,
            "global_uncertain": m.global_uncertain_total,
        }
        w.writerow([summary.get(c, "") for c in COLUMNS])
        w.writerow(["min_distance", "" if m.min_distance is None else m.min_distance] + [""] * (len(COLUMNS) - 2))


def _finite(x: float) -> Optional[float]:
    return x if math.isfinite(x) else None


def reach_to_dict(rec: ReachRecord) -> dict:
    r = rec.result
    return {
        "agent": rec.agent,
        "t_global": rec.t_global,
        "true_state": list(rec.true_state),
        "u": list(rec.u),
        "held_until": _finite(rec.held_until),
        "t_rs": r.t_rs,
        "horizon": r.horizon,
        "local_safe": r.local_safe,
        "passes_completed": r.passes_completed,
        "final_step": r.final_step,
        "budget_overrun": r.budget_overrun,
        "hull": [list(r.hull.lo), list(r.hull.hi)],
        "segments": [[s.t_start, s.t_end, list(s.box.lo), list(s.box.hi)] for s in r.intermediates],
    }


def reach_from_dict(doc: dict) -> ReachRecord:
    segs = tuple(
        ReachSegment(t0, t1, HyperRectangle(tuple(lo), tuple(hi))) for t0, t1, lo, hi in doc["segments"]
    )
    result = ReachResult(
        hull=HyperRectangle(tuple(doc["hull"][0]), tuple(doc["hull"][1])),
        intermediates=segs,
        t_rs=doc["t_rs"],
        horizon=doc["horizon"],
        local_safe=doc["local_safe"],
        passes_completed=doc["passes_completed"],
        final_step=doc["final_step"],
        budget_overrun=doc["budget_overrun"],
    )
    held = doc["held_until"]
    return ReachRecord(
        doc["agent"],
        doc["t_global"],
        result,
        tuple(doc["true_state"]),
        tuple(doc["u"]),
        math.inf if held is None else held,
    )


def write_reaches(reaches: Iterable[ReachRecord], path: Path) -> None:
    with open(path, "w") as fh:
        for rec in reaches:
            fh.write(json.dumps(reach_to_dict(rec), separators=(",", ":")) + "\n")


def read_reaches(path: Path) -> list[ReachRecord]:
    with open(path) as fh:
        return [reach_from_dict(json.loads(line)) for line in fh if line.strip()]


def write_run(
    out_dir: str | Path,
    cfg: ScenarioConfig,
    result: RunResult,
    metrics: Metrics,
    truth_stride: int = 1,
    reaches: bool = True,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_scenario(cfg, out / SCENARIO_FILE)
    write_events(result.events, out / EVENTS_FILE)
    write_truth(result.truth, out / TRUTH_FILE, truth_stride)
    write_metrics(metrics, out / METRICS_FILE)
    if reaches:
        write_reaches(result.reaches, out / REACH_FILE)
    return out


def load_run_config(out_dir: str | Path) -> ScenarioConfig:
    return load_scenario(Path(out_dir) / SCENARIO_FILE)
