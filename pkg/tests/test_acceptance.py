"""End-to-end acceptance checks, one per release criterion.

Each test prints a single pass/fail line (run with -s to see them all).
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from afpa_sim.cli import main as cli_main
from afpa_sim.config import default_config_path, load_config
from afpa_sim.planner import HapticTarget, constant_stiffness_path, forward_map, plan_state
from afpa_sim.pneumatics import step_simulate
from afpa_sim.pouch import (
    ECAP_DECAY_FRACTION,
    ECAP_QUADRATIC_FRACTION,
    KPA_MM2_TO_N,
    PouchStackSpec,
    contact_force,
    free_height,
    volume,
)
from afpa_sim.rig import RigSpec, probe_force, solve_equilibrium, stiffness
from afpa_sim.study import (
    ResponderModel,
    confusion_matrix,
    schedule_trials,
    simulate_session,
    t_test_independent,
)
from afpa_sim.drivers import plan_states


@pytest.fixture(scope="module")
def config():
    return load_config(default_config_path())


def report(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance {num}] {name}: {status}{suffix}")
    assert ok, f"criterion {num} {name} failed{suffix}"


def test_criterion_1_virtual_work_consistency():
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    ok = True
    for _ in range(1000):
        spec = PouchStackSpec(
            flat_width=float(rng.uniform(5.0, 200.0)),
            flat_length=float(rng.uniform(5.0, 500.0)),
            pouch_count=int(rng.integers(1, 7)),
            end_cap_correction=bool(rng.integers(0, 2)),
        )
        hf = free_height(spec)
        h = float(rng.uniform(0.02, 0.98)) * hf
        p = float(rng.uniform(0.1, 150.0))
        eps = 1e-3
        dv = (volume(spec, h + eps) - volume(spec, h - eps)) / (2 * eps)
        expected = p * dv * KPA_MM2_TO_N
        got = contact_force(spec, p, h)
        err = abs(got - expected)
        if err > max(1e-3, 1e-3 * abs(expected)):
            ok = False
            break
        worst = max(worst, err / max(abs(expected), 1e-12))
    elapsed = time.time() - t0
    report(1, "virtual-work consistency", ok and elapsed < 5.0,
           f"worst rel err {worst:.2e}, {elapsed:.2f}s")


def _oracle_h2_vectorized(rig: RigSpec, p1: float, p2: float) -> float:
    """Independent 0.01 mm grid-scan force balance using the area law directly."""

    def area(spec: PouchStackSpec, h: np.ndarray) -> np.ndarray:
        x_free = 2.0 * spec.pouch_count * spec.flat_width / math.pi
        if not spec.end_cap_correction:
            return spec.flat_length * np.maximum(
                0.0, spec.flat_width - math.pi * h / (2.0 * spec.pouch_count)
            )
        s = math.pi * spec.flat_length / (2.0 * spec.pouch_count)
        lam = ECAP_DECAY_FRACTION * x_free
        x = np.clip(x_free - h, 0.0, x_free)
        return s * (
            ECAP_QUADRATIC_FRACTION * x * x / (2.0 * x_free)
            + lam * (np.exp((x - x_free) / lam) - math.exp(-x_free / lam))
        )

    x1 = free_height(rig.modulating)
    x2 = free_height(rig.morphing)
    c = rig.belt_span
    if x1 + x2 <= c:
        return x2
    lo = max(0.01, c - x1)
    hi = min(x2, c)
    hs = np.arange(lo, hi + 0.005, 0.01)
    f1 = p1 * area(rig.modulating, np.maximum(c - hs, 1e-9)) * KPA_MM2_TO_N
    f2 = p2 * area(rig.morphing, hs) * KPA_MM2_TO_N
    g = f1 - f2
    if g[-1] <= 0.0:
        return float(hs[-1])
    if g[0] >= 0.0:
        return float(hs[0])
    return float(hs[np.argmin(np.abs(g))])


def test_criterion_2_equilibrium_oracle():
    t0 = time.time()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        rig = RigSpec(
            modulating=PouchStackSpec(
                flat_width=float(rng.uniform(20.0, 70.0)),
                flat_length=float(rng.uniform(100.0, 600.0)),
                end_cap_correction=bool(rng.integers(0, 2)),
            ),
            morphing=PouchStackSpec(
                flat_width=float(rng.uniform(30.0, 70.0)),
                flat_length=float(rng.uniform(80.0, 300.0)),
                end_cap_correction=bool(rng.integers(0, 2)),
            ),
            belt_span=float(rng.uniform(50.0, 120.0)),
        )
        p1 = float(rng.uniform(0.0, 150.0))
        p2 = float(rng.uniform(0.5, 150.0))
        got = solve_equilibrium(rig, p1, p2).h2
        worst = max(worst, abs(got - _oracle_h2_vectorized(rig, p1, p2)))
    elapsed = time.time() - t0
    report(2, "equilibrium oracle equivalence", worst <= 0.05 and elapsed < 10.0,
           f"worst |dh2| {worst:.4f} mm, {elapsed:.2f}s")


def test_criterion_3_size_range(config):
    rig = config.rig
    h_min = solve_equilibrium(rig, 100.0, 90.0).h2
    h_max = solve_equilibrium(rig, 0.0, 90.0).h2
    ok = 45.0 <= h_min <= 55.0 and 95.0 <= h_max <= 110.0
    report(3, "size range", ok, f"h2(100,90)={h_min:.1f} mm, h2(0,90)={h_max:.1f} mm")


def test_criterion_4_stiffness_force_anchors(config):
    rig = config.rig
    p2_max = config.max_characterized_p2
    k_deep = stiffness(rig, 0.0, p2_max, 15.0)
    f_peak, _, _ = probe_force(rig, 0.0, p2_max, 15.0)
    eq = solve_equilibrium(rig, 0.0, 90.0)
    k_far = stiffness(rig, 0.0, 90.0, eq.h2 - 7.3)
    ok = k_deep >= 3.5 and 50.0 <= f_peak <= 90.0 and 0.05 <= k_far <= 0.2
    report(4, "stiffness/force anchors", ok,
           f"k(15mm)={k_deep:.2f} N/mm, F={f_peak:.1f} N, k(near free)={k_far:.3f} N/mm")


def test_criterion_5_decoupling(config):
    plans = constant_stiffness_path(config.rig, 0.1, [52.0, 73.0, 96.0],
                                    config.bounds, config.probe_depth)
    devs = [abs(p.achieved_stiffness - 0.1) for p in plans]
    ok = all(d <= 0.015 for d in devs)
    report(5, "constant-stiffness decoupling", ok,
           "k = " + ", ".join(f"{p.achieved_stiffness:.4f}" for p in plans) + " N/mm")


def _rise_time_from(series: np.ndarray, t_step: float) -> float:
    t = series[:, 0]
    y = series[:, 4]
    y0 = y[np.argmax(t >= t_step - 1e-9)]
    y1 = y[-1]
    frac = (y - y0) / (y1 - y0)
    hit = (t > t_step) & (frac >= 0.9)
    if not hit.any():
        return float("inf")
    return float(t[np.argmax(hit)] - t_step)


def test_criterion_6_step_dynamics(config):
    rig, valves, stp = config.rig, config.valves, config.step
    s_p2 = step_simulate(rig, valves, [(0.0, 0.0, 0.0), (stp.step_time, 0.0, 90.0)],
                         stp.dt, stp.t_end)
    s_p1 = step_simulate(rig, valves, [(0.0, 10.0, 10.0), (stp.step_time, 90.0, 10.0)],
                         stp.dt, stp.t_end)
    r_p2 = _rise_time_from(s_p2, stp.step_time)
    r_p1 = _rise_time_from(s_p1, stp.step_time)
    final_p2 = s_p2[-1, 4]
    final_p1 = s_p1[-1, 4]
    ok = (1.5 <= r_p2 <= 2.5 and 1.5 <= r_p1 <= 2.5
          and abs(final_p2 - 103.0) <= 5.0 and abs(final_p1 - 50.0) <= 5.0)
    report(6, "step dynamics", ok,
           f"P2 step: {r_p2:.2f}s to {final_p2:.1f} mm; P1 step: {r_p1:.2f}s to {final_p1:.1f} mm")


def test_criterion_7_planner_round_trip(config):
    t0 = time.time()
    rig = config.rig
    rng = np.random.default_rng(707)
    worst_h = worst_k = 0.0
    ok = True
    tested = 0
    while tested < 20:
        p1 = float(rng.uniform(0.0, 120.0))
        p2 = float(rng.uniform(2.0, 140.0))
        h, k = forward_map(rig, p1, p2, config.probe_depth)
        if k <= 1e-3 or h <= 6.0:
            continue
        plan = plan_state(rig, HapticTarget(target_height=h, target_stiffness=k),
                          config.bounds)
        if not plan.feasible:
            ok = False
            break
        h2, k2 = forward_map(rig, plan.p1, plan.p2, config.probe_depth)
        worst_h = max(worst_h, abs(h2 - h))
        worst_k = max(worst_k, abs(k2 - k) / k)
        tested += 1
    elapsed = time.time() - t0
    ok = ok and worst_h <= 1.0 and worst_k <= 0.05 and elapsed < 30.0
    report(7, "planner round trip", ok,
           f"worst |dh| {worst_h:.3f} mm, worst |dk|/k {worst_k:.3%}, {elapsed:.1f}s")


def test_criterion_8_study_statistics(config):
    rig = config.rig
    states = plan_states(config)

    perfect = ResponderModel(size_noise=0.0, stiffness_noise=0.0, lapse_rate=0.0)
    sched = schedule_trials(states, 2, seed=0)
    recs = simulate_session(rig, states, sched, perfect, seed=0)
    identity_ok = np.allclose(confusion_matrix(recs), np.eye(9)) and all(
        r.responded == r.presented for r in recs
    )

    accs = []
    stiff_mass = size_mass = 0.0
    for seed in range(10):
        sched = schedule_trials(states, config.study.reps, seed)
        recs = simulate_session(rig, states, sched, config.study.responder, seed)
        accs.append(np.mean([r.responded == r.presented for r in recs]))
        cm = confusion_matrix(recs)
        for i in range(9):
            for j in range(9):
                if i == j:
                    continue
                if i // 3 == j // 3:  # same size class, different stiffness
                    stiff_mass += cm[i, j]
                elif i % 3 == j % 3:  # same stiffness class, different size
                    size_mass += cm[i, j]
    acc_mean = float(np.mean(accs))
    acc_ok = abs(acc_mean - 0.894) <= 0.05
    pattern_ok = stiff_mass > size_mass

    rng = np.random.default_rng(808)
    t_ok = True
    for _ in range(50):
        a = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), int(rng.integers(3, 25)))
        b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), int(rng.integers(3, 25)))
        ev = bool(rng.integers(0, 2))
        mine = t_test_independent(list(a), list(b), ev)
        oracle = sps.ttest_ind(a, b, equal_var=ev)
        if abs(mine.p_two_sided - oracle.pvalue) > 1e-6:
            t_ok = False
            break

    ok = identity_ok and acc_ok and pattern_ok and t_ok
    report(8, "study statistics", ok,
           f"accuracy {acc_mean:.3f}, stiffness-vs-size confusion mass "
           f"{stiff_mass:.2f}/{size_mass:.2f}, t-test oracle {'ok' if t_ok else 'mismatch'}")


def test_criterion_9_cli_determinism(tmp_path, capsys):
    commands = [
        "characterize-size", "characterize-stiffness", "step", "plan",
        "feasibility", "study-run", "study-analyze",
    ]
    ok = True
    for run in ("a", "b"):
        for cmd in commands:
            out = tmp_path / run
            assert cli_main([cmd, "--seed", "13", "--out", str(out)]) == 0
    capsys.readouterr()
    files_a = sorted((tmp_path / "a").iterdir())
    files_b = sorted((tmp_path / "b").iterdir())
    ok = [p.name for p in files_a] == [p.name for p in files_b] and all(
        pa.read_bytes() == pb.read_bytes() for pa, pb in zip(files_a, files_b)
    )
    with capsys.disabled():
        print()
    report(9, "CLI determinism", ok, f"{len(files_a)} files byte-identical")
