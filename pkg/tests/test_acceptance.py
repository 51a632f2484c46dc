"""The eleven acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

from __future__ import annotations

import dataclasses
import math
import random
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from swarmverify.comm import ReachMessage, decode, encode
from swarmverify.dynamics import CONSTANT, HARMONIC, QUADCOPTER, ModelSpec
from swarmverify.geometry import HyperRectangle
from swarmverify.reach import BudgetMode, ReachResult, RuntimeBudget, reach_anytime
from swarmverify.sim.config import ChannelConfig
from swarmverify.sim.engine import run_scenario
from swarmverify.sim.io import write_events
from swarmverify.sim.metrics import metrics_report, pairwise_distance_trace, soundness_audit
from swarmverify.sim.scenarios import TABLE1_VT, geospatial, head_on, near_miss, search_mission, table1_run
from swarmverify.verify import TimingProfile, agent_capacity_bounds

FIXTURES = Path(__file__).resolve().parent / "fixtures"


# 1 -------------------------------------------------------------------------


def _dense_violations(res: ReachResult, model: ModelSpec, x0: np.ndarray, u: np.ndarray, dt: float) -> int:
    """RK4 at ``dt`` from every row of ``x0``; count samples outside their box."""
    steps = int(round(res.horizon / dt))
    offsets = np.arange(steps + 1) * dt
    ends = np.array([s.t_end for s in res.intermediates])
    seg = np.minimum(np.searchsorted(ends, offsets, side="left"), len(ends) - 1)
    lo = np.array([s.box.lo for s in res.intermediates])[seg]
    hi = np.array([s.box.hi for s in res.intermediates])[seg]
    f = model.deriv_batch
    uu = np.broadcast_to(u, (len(x0), len(u)))
    x = x0.copy()
    bad = int(np.any((x < lo[0] - 1e-9) | (x > hi[0] + 1e-9), axis=1).sum())
    for i in range(1, steps + 1):
        k1 = f(x, uu)
        k2 = f(x + 0.5 * dt * k1, uu)
        k3 = f(x + 0.5 * dt * k2, uu)
        k4 = f(x + dt * k3, uu)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        bad += int(np.any((x < lo[i] - 1e-9) | (x > hi[i] + 1e-9), axis=1).sum())
    return bad


def _soundness_case(model: ModelSpec, rng: np.random.Generator):
    if model is QUADCOPTER:
        c = rng.uniform([-500, -30, -500, -30], [500, 30, 500, 30])
        r = rng.uniform([0.5, 0.05, 0.5, 0.05], [5, 1, 5, 1])
        u = rng.uniform(-0.35, 0.35, 2)
    elif model is HARMONIC:
        c = rng.uniform(-2, 2, 2)
        r = rng.uniform(0.01, 0.2, 2)
        u = np.zeros(0)
    else:
        c = rng.uniform(-10, 10, 1)
        r = rng.uniform(0, 1, 1)
        u = rng.uniform(-5, 5, 1)
    box = HyperRectangle(tuple(c - r), tuple(c + r))
    pts = rng.uniform(c - r, c + r, (1000, model.state_dim))
    # Corners are where a sloppy face bound would show first.
    corners = np.array(np.meshgrid(*zip(c - r, c + r))).reshape(model.state_dim, -1).T
    pts[: len(corners)] = corners
    return box, pts, u


def test_c01_reach_soundness(criterion):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    cases = violations = 0
    for model in (QUADCOPTER, HARMONIC, CONSTANT):
        for _ in range(3):
            box, pts, u = _soundness_case(model, rng)
            res = reach_anytime(box, tuple(u), 0.0, 2.0, 0.1, RuntimeBudget(), None, model)
            violations += _dense_violations(res, model, pts, u, 1e-4)
            cases += 1
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 120
    criterion(1, "reach soundness", ok, f"{cases} cases x 1000 points, {violations} violations, {elapsed:.1f} s")
    assert ok


# 2 -------------------------------------------------------------------------


def test_c02_anytime_refinement(criterion):
    rng = random.Random(2)
    violations = 0
    for _ in range(100):
        c = [rng.uniform(-500, 500), rng.uniform(-40, 40), rng.uniform(-500, 500), rng.uniform(-40, 40)]
        r = [rng.uniform(0, 10), rng.uniform(0, 2), rng.uniform(0, 10), rng.uniform(0, 2)]
        box = HyperRectangle(tuple(a - b for a, b in zip(c, r)), tuple(a + b for a, b in zip(c, r)))
        u = (rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35))
        prev = None
        for passes in range(1, 5):
            res = reach_anytime(box, u, 0.0, 2.0, 0.2, RuntimeBudget(BudgetMode.DETERMINISTIC, passes), None, QUADCOPTER)
            if prev is not None:
                violations += sum(w > p + 1e-9 for w, p in zip(res.hull.widths(), prev.hull.widths()))
            prev = res
    ok = violations == 0
    criterion(2, "anytime refinement", ok, f"100 cases x 4 passes, {violations} violations")
    assert ok


# 3 -------------------------------------------------------------------------


def test_c03_vt_formula(criterion):
    cfg = table1_run(seed=0, duration=1.0)
    r = run_scenario(cfg)
    m = metrics_report(r.events, len(cfg.agents), r.truth)
    quad1 = m.agents[1].vt
    worst = max(abs(m.agents[a].vt - vt) for a, vt in TABLE1_VT.items())
    ok = abs(quad1 - 28.9363) <= 1e-4 and worst <= 1e-3
    criterion(3, "VT formula", ok, f"quad 1 VT {quad1:.4f} ms, max table deviation {worst:.2e} ms")
    assert ok


# 4 -------------------------------------------------------------------------


def test_c04_capacity_bound(criterion):
    worst = TimingProfile(tau_e=0.0597, tau_tf=2.64, tau_d=0.022, tau_c=0.14, tau_control=10.0)
    best = TimingProfile(tau_e=0.0525, tau_tf=1.05, tau_d=0.0169, tau_c=0.03, tau_control=5.0)
    n_min, n_max = agent_capacity_bounds(worst, best, T_c=200.0, t_runtime=10.0)
    ok = abs(n_min - 64) <= 2 and abs(n_max - 168) <= 2
    criterion(4, "capacity bound", ok, f"n_min {n_min:.4f} (published 64), n_max {n_max:.4f} (published 168)")
    assert ok


# 5 -------------------------------------------------------------------------


def test_c05_nominal_search(criterion, nominal_run):
    cfg, r = nominal_run.cfg, nominal_run.result
    m = metrics_report(r.events, len(cfg.agents), r.truth)
    a = cfg.agents[0]
    params = (a.control_period, a.horizon, a.delta, cfg.safe_distance)
    ok = (
        params == (0.2, 2.0, 0.003, 100.0)
        and m.uncertain_total == 0
        and m.local_unsafe_total == 0
        and m.min_distance >= cfg.safe_distance
        and nominal_run.seconds < 60
    )
    criterion(
        5,
        "nominal 8-agent search",
        ok,
        f"uncertain {m.uncertain_total}, local-unsafe {m.local_unsafe_total}, "
        f"min distance {m.min_distance:.1f}, {nominal_run.seconds:.1f} s wall for {r.end_time:.1f} s simulated",
    )
    assert ok


# 6 -------------------------------------------------------------------------


def test_c06_head_on_detection(criterion):
    leads = []
    misses = 0
    for seed in range(20):
        cfg = head_on(seed=seed)
        r = run_scenario(cfg)
        d = pairwise_distance_trace(r.truth, 0, 1)
        close = d < cfg.safe_distance
        flags = [e.time for e in r.events if e.kind == "pair_check" and e.payload["collision"] == "uncertain"]
        if not close.any() or not flags:
            misses += 1
            continue
        lead = r.truth.times[int(np.argmax(close))] - min(flags)
        leads.append(lead)
        if lead < 0.2:
            misses += 1
    ok = misses == 0
    detail = f"20 seeds, {misses} misses, min lead {min(leads):.3f} s" if leads else "no detections"
    criterion(6, "head-on detection", ok, detail)
    assert ok


# 7 -------------------------------------------------------------------------


def test_c07_collision_audit(criterion):
    violations = checked = 0
    for seed in range(100):
        if seed % 2:
            gap = 110.0 + (seed * 37) % 150
            cfg = near_miss(seed=seed, lateral_gap=gap)
        else:
            cfg = search_mission(2, seed=seed, lanes=2, cell_size=(150.0, 150.0))
        r = run_scenario(cfg)
        rep = soundness_audit(r.events, r.truth, cfg)
        violations += rep.pair_violations
        checked += rep.pair_checked
    ok = violations == 0 and checked > 0
    criterion(7, "collision soundness audit", ok, f"100 runs, {checked} verdicts, {violations} violations")
    assert ok


# 8 -------------------------------------------------------------------------


def test_c08_geospatial(criterion):
    out = {}
    global_violations = 0
    for staggered in (False, True):
        cfg = geospatial(staggered, seed=1)
        r = run_scenario(cfg)
        checks = [e for e in r.events if e.kind == "global_check"]
        out[staggered] = (
            Counter(e.payload["global_safe"] for e in checks),
            max((e.payload["t_global_safe"] - e.payload["t_c"] for e in checks if e.payload["global_safe"] == "true"), default=0.0),
        )
        global_violations += soundness_audit(r.events, r.truth, cfg).global_violations
    concurrent, _ = out[False]
    staggered, margin = out[True]
    ok = (
        concurrent["uncertain"] > 0
        and staggered["uncertain"] == 0
        and staggered["true"] > 0
        and margin > 0
        and global_violations == 0
    )
    criterion(
        8,
        "geospatial property",
        ok,
        f"concurrent {dict(concurrent)}, staggered {dict(staggered)} "
        f"(t_global_safe - t_c up to {margin:.3f} s), {global_violations} global violations",
    )
    assert ok


# 9 -------------------------------------------------------------------------


def test_c09_usefulness(criterion):
    base = near_miss(seed=9, duration=10.0)
    a = base.agents
    slow = a[0].horizon + a[0].delta + a[1].delta + 0.05
    results = {}
    for delay in (slow, 0.001):
        r = run_scenario(dataclasses.replace(base, channel=ChannelConfig(fixed_delay=delay)))
        k = Counter(e.kind for e in r.events)
        verdicts = k["pair_check"]
        results[delay] = (k["deliver"], k["stale_msg"], verdicts)
    d_slow, s_slow, v_slow = results[slow]
    d_fast, s_fast, v_fast = results[0.001]
    ok = d_slow > 0 and s_slow == d_slow and v_slow == 0 and d_fast > 0 and s_fast == 0 and v_fast == d_fast
    criterion(
        9,
        "usefulness filtering",
        ok,
        f"delay {slow:.3f} s: {s_slow}/{d_slow} stale; delay 1 ms: {v_fast}/{d_fast} useful",
    )
    assert ok


# 10 ------------------------------------------------------------------------


def test_c10_wire_format(criterion):
    rng = random.Random(10)
    mismatches = 0
    for _ in range(10_000):
        n = rng.randint(1, 8)
        lo = [rng.uniform(-1e6, 1e6) for _ in range(n)]
        hi = [x + rng.uniform(0, 1e3) for x in lo]
        t_rs = rng.uniform(0, 1e4)
        msg = ReachMessage(
            sender=rng.randrange(2**32),
            t_rs=t_rs,
            horizon=rng.uniform(1e-3, 10),
            hull=HyperRectangle(tuple(lo), tuple(hi)),
            t_send=t_rs + rng.uniform(0, 1),
        )
        mismatches += decode(encode(msg)) != msg
    quad = ReachMessage(3, 10.0, 2.0, HyperRectangle((-1.0, 0.5, 2.0, 0.0), (1.0, 3.0, 10.0, 0.0)), 10.5)
    wire = encode(quad)
    golden = (FIXTURES / "golden_n4.bin").read_bytes()
    ok = mismatches == 0 and len(wire) == 96 and wire == golden and decode(golden) == quad
    criterion(10, "wire format", ok, f"10000 round trips, {mismatches} mismatches, n=4 is {len(wire)} bytes, golden match {wire == golden}")
    assert ok


# 11 ------------------------------------------------------------------------


def test_c11_determinism(criterion, tmp_path):
    cfg = dataclasses.replace(
        near_miss(seed=11, lateral_gap=120.0, duration=15.0),
        channel=ChannelConfig(drop_prob=0.1, corrupt_prob=0.05, delay_max=0.05),
    )
    blobs = []
    for k in range(2):
        path = tmp_path / f"events{k}.jsonl"
        write_events(run_scenario(cfg).events, path)
        blobs.append(path.read_bytes())
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    criterion(11, "determinism", ok, f"two runs, {len(blobs[0])} bytes each, identical {blobs[0] == blobs[1]}")
    assert ok
