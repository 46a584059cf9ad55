"""Protocol scheduling, synthetic responders, and the statistics battery."""

import math

import numpy as np
import pytest
from scipy import stats as sps

from afpa_sim.config import default_config_path, load_config
from afpa_sim.drivers import plan_states
from afpa_sim.study import (
    ResponderModel,
    StatisticsError,
    StudyDomainError,
    TrialRecord,
    accuracy_stats,
    box_stats,
    confusion_matrix,
    schedule_trials,
    segment_analysis,
    simulate_session,
    t_test_independent,
)


@pytest.fixture(scope="module")
def setup():
    config = load_config(default_config_path())
    return config.rig, plan_states(config)


def perfect() -> ResponderModel:
    return ResponderModel(size_noise=0.0, stiffness_noise=0.0, lapse_rate=0.0)


def make_records(pairs, times=None):
    times = times or [5.0] * len(pairs)
    return [
        TrialRecord(trial_index=i + 1, presented=p, responded=r,
                    response_time=t, segment=math.ceil((i + 1) / 10))
        for i, ((p, r), t) in enumerate(zip(pairs, times))
    ]


# --- scheduling ------------------------------------------------------------

def test_single_rep_is_permutation(setup):
    _, states = setup
    sched = schedule_trials(states, 1, seed=3)
    assert sorted(sched) == list(range(1, 10))


def test_rep_counts_exact(setup):
    _, states = setup
    sched = schedule_trials(states, 10, seed=5)
    assert len(sched) == 90
    for sid in range(1, 10):
        assert sched.count(sid) == 10


def test_schedule_seed_determinism(setup):
    _, states = setup
    assert schedule_trials(states, 10, 11) == schedule_trials(states, 10, 11)
    assert schedule_trials(states, 10, 11) != schedule_trials(states, 10, 12)


def test_schedule_rejects_bad_reps(setup):
    _, states = setup
    with pytest.raises(StudyDomainError):
        schedule_trials(states, 0, seed=1)


# --- sessions --------------------------------------------------------------

def test_perfect_responder_all_correct(setup):
    rig, states = setup
    sched = schedule_trials(states, 3, seed=2)
    records = simulate_session(rig, states, sched, perfect(), seed=2)
    assert all(r.responded == r.presented for r in records)
    assert all(r.response_time > 0 for r in records)


def test_huge_noise_near_chance(setup):
    rig, states = setup
    noisy = ResponderModel(size_noise=10.0, stiffness_noise=10.0, lapse_rate=0.0)
    sched = schedule_trials(states, 40, seed=4)
    records = simulate_session(rig, states, sched, noisy, seed=4)
    acc = np.mean([r.responded == r.presented for r in records])
    assert abs(acc - 1.0 / 9.0) < 0.08


def test_session_deterministic(setup):
    rig, states = setup
    resp = ResponderModel(size_noise=0.06, stiffness_noise=0.15, lapse_rate=0.01)
    sched = schedule_trials(states, 5, seed=6)
    a = simulate_session(rig, states, sched, resp, seed=6)
    b = simulate_session(rig, states, sched, resp, seed=6)
    assert a == b


def test_session_rejects_unknown_ids(setup):
    rig, states = setup
    with pytest.raises(StudyDomainError):
        simulate_session(rig, states, [1, 2, 42], perfect(), seed=1)


# --- confusion and accuracy ------------------------------------------------

def test_identity_confusion(setup):
    rig, states = setup
    sched = schedule_trials(states, 2, seed=8)
    records = simulate_session(rig, states, sched, perfect(), seed=8)
    cm = confusion_matrix(records)
    assert np.allclose(cm, np.eye(9))


def test_confusion_rows_normalized(setup):
    rig, states = setup
    noisy = ResponderModel(size_noise=0.2, stiffness_noise=0.5, lapse_rate=0.1)
    sched = schedule_trials(states, 10, seed=9)
    records = simulate_session(rig, states, sched, noisy, seed=9)
    cm = confusion_matrix(records)
    assert np.allclose(cm.sum(axis=1), 1.0, atol=1e-9)


def test_uniform_single_state_row():
    pairs = [(1, r) for r in range(1, 10)] + [(p, p) for p in range(2, 10)]
    cm = confusion_matrix(make_records(pairs))
    assert np.allclose(cm[0], 1.0 / 9.0)


def test_confusion_requires_every_state():
    pairs = [(p, p) for p in range(1, 9)]  # state 9 never shown
    with pytest.raises(StudyDomainError, match="9"):
        confusion_matrix(make_records(pairs))


def test_accuracy_all_correct():
    pairs = [(p, p) for p in range(1, 10)]
    overall, per_state, _ = accuracy_stats(make_records(pairs))
    assert overall == 1.0
    assert all(v == 1.0 for v in per_state.values())


def test_accuracy_one_wrong():
    pairs = [(p, p) for p in range(1, 9)] + [(9, 1)]
    overall, _, _ = accuracy_stats(make_records(pairs))
    assert overall == pytest.approx(8.0 / 9.0)


# --- segments --------------------------------------------------------------

def test_segments_flat_for_uniform_records():
    pairs = [(1 + i % 9, 1 + i % 9) for i in range(90)]
    segs = segment_analysis(make_records(pairs, times=[4.0] * 90))
    assert all(a == 1.0 and t == 4.0 for a, t in segs)
    assert len(segs) == 9


def test_segment_boundaries():
    pairs = [(1, 1)] * 90
    records = make_records(pairs)
    assert records[9].segment == 1  # trial 10
    assert records[10].segment == 2  # trial 11


def test_segment_requires_divisible_count():
    pairs = [(1, 1)] * 85
    with pytest.raises(StudyDomainError):
        segment_analysis(make_records(pairs))


def test_drifting_lapse_degrades_segments(setup):
    rig, states = setup
    drift = ResponderModel(size_noise=0.0, stiffness_noise=0.0,
                           lapse_rate=0.0, lapse_drift=0.01)
    sched = schedule_trials(states, 10, seed=12)
    records = simulate_session(rig, states, sched, drift, seed=12)
    segs = segment_analysis(records)
    accs = [a for a, _ in segs]
    # later blocks lapse more: sign test on first vs last third
    assert np.mean(accs[:3]) > np.mean(accs[-3:])


# --- box stats -------------------------------------------------------------

def test_box_stats_hand_case():
    b = box_stats([1.0, 2.0, 3.0, 4.0, 5.0])
    assert (b.median, b.q1, b.q3) == (3.0, 2.0, 4.0)
    assert b.whisker_low == 1.0 and b.whisker_high == 5.0
    assert b.outliers == ()


def test_box_stats_constant_samples():
    b = box_stats([2.5] * 8)
    assert b.median == b.q1 == b.q3 == b.whisker_low == b.whisker_high == 2.5
    assert b.outliers == ()


def test_box_stats_flags_outlier():
    samples = list(range(1, 10)) + [100]
    b = box_stats([float(s) for s in samples])
    # inclusive quartiles at positions 0.25/0.75 * (n-1): q1 = 3.25, q3 = 7.75;
    # upper fence = 7.75 + 1.5 * 4.5 = 14.5, so 100 is an outlier
    assert b.q1 == pytest.approx(3.25)
    assert b.q3 == pytest.approx(7.75)
    assert b.outliers == (100.0,)
    assert b.whisker_high == 9.0


def test_box_stats_ordering_invariant():
    rng = np.random.default_rng(0)
    samples = rng.lognormal(1.0, 0.8, 40)
    b = box_stats(samples)
    assert b.whisker_low <= b.q1 <= b.median <= b.q3 <= b.whisker_high
    for o in b.outliers:
        assert o < b.whisker_low or o > b.whisker_high


def test_box_stats_empty_rejected():
    with pytest.raises(StatisticsError):
        box_stats([])


# --- t test ----------------------------------------------------------------

def test_t_test_identical_samples():
    a = [1.0, 2.0, 3.0, 4.0]
    r = t_test_independent(a, a, equal_variance=True)
    assert r.t == 0.0
    assert r.p_two_sided == pytest.approx(1.0)


def test_t_test_hand_case():
    a = [1.0, 2.0, 3.0, 4.0, 5.0]
    b = [2.0, 3.0, 4.0, 5.0, 6.0]
    r = t_test_independent(a, b, equal_variance=True)
    assert r.t == pytest.approx(-1.0)
    assert r.dof == 8
    assert r.p_two_sided == pytest.approx(0.3466, abs=2e-4)


def test_t_test_antisymmetry():
    rng = np.random.default_rng(1)
    a = list(rng.normal(5.0, 1.0, 12))
    b = list(rng.normal(6.0, 2.0, 15))
    for ev in (True, False):
        r1 = t_test_independent(a, b, ev)
        r2 = t_test_independent(b, a, ev)
        assert r1.t == pytest.approx(-r2.t)
        assert r1.p_two_sided == pytest.approx(r2.p_two_sided)


def test_t_test_matches_oracle_50_random_pairs():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n1 = int(rng.integers(3, 30))
        n2 = int(rng.integers(3, 30))
        a = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3.0), n1)
        b = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3.0), n2)
        ev = bool(rng.integers(0, 2))
        mine = t_test_independent(list(a), list(b), ev)
        oracle = sps.ttest_ind(a, b, equal_var=ev)
        assert mine.t == pytest.approx(oracle.statistic, rel=1e-9)
        assert abs(mine.p_two_sided - oracle.pvalue) <= 1e-6


def test_t_test_welch_equals_pooled_for_balanced_equal_variance():
    a = [1.0, 2.0, 3.0, 4.0]
    b = [3.0, 4.0, 5.0, 6.0]
    pooled = t_test_independent(a, b, True)
    welch = t_test_independent(a, b, False)
    assert welch.dof == pytest.approx(pooled.dof)
    assert welch.t == pytest.approx(pooled.t)


def test_t_test_degenerate_rejected():
    with pytest.raises(StatisticsError):
        t_test_independent([1.0, 1.0], [1.0, 1.0], True)
    with pytest.raises(StatisticsError):
        t_test_independent([1.0], [1.0, 2.0], True)


def test_record_validation():
    with pytest.raises(ValueError):
        TrialRecord(trial_index=1, presented=1, responded=1,
                    response_time=-1.0, segment=1)
    with pytest.raises(ValueError):
        TrialRecord(trial_index=11, presented=1, responded=1,
                    response_time=5.0, segment=1)
