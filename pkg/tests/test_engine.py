import csv
import math

import numpy as np
import pytest

from fitvalley import bdp, engine
from fitvalley.model import ModelSpec, PhaseSpec, ScalingSpec

from conftest import load


def linear_model(p1, p2, T=(1.0, 5.0)):
    """Trait 0 with rates (B, D) per phase; competition negligible at K=1e9."""
    c = [[1.0, 0.0], [0.0, 1.0]]
    return ModelSpec(1, [PhaseSpec(T[0], [p1[0], 1], [p1[1], 1], c), PhaseSpec(T[1], [p2[0], 1], [p2[1], 1], c)])


BIG = ScalingSpec(10**9, 1.5, 1.0)


def test_initial_state(valley):
    m, s = valley
    st = engine.initial_state(m, s)
    assert st.counts.tolist() == [10_000, 0, 0]
    assert st.phase == 1 and st.time == 0.0
    b, d = engine.event_rates(st, m, s)
    assert b[0] == 10_000 and d[0] == pytest.approx(10_000)
    assert st.total_rate == pytest.approx(b.sum() + d.sum())


def test_same_seed_same_run(valley):
    m, s = valley
    runs = [engine.run(engine.initial_state(m, s), m, s, engine.StopSpec(max_time=30.0), np.random.default_rng(7))
            for _ in range(2)]
    assert runs[0].state.time == runs[1].state.time
    assert np.array_equal(runs[0].observables.counts, runs[1].observables.counts)
    assert np.array_equal(runs[0].state.counts, runs[1].state.counts)


def test_run_does_not_mutate_input(valley):
    m, s = valley
    st = engine.initial_state(m, s)
    before = st.counts.copy()
    engine.run(st, m, s, engine.StopSpec(max_time=1.0), np.random.default_rng(1))
    assert np.array_equal(st.counts, before)


def test_max_time_and_samples(valley):
    m, s = valley
    res = engine.run(engine.initial_state(m, s), m, s, engine.StopSpec(max_time=12.0), np.random.default_rng(2),
                     sample_stride=0.5)
    assert res.stop_reason == "max_time" and res.state.time == 12.0
    assert np.allclose(res.observables.times, np.arange(0, 12.5, 0.5))
    # samples at or after the boundary t = 5 belong to phase 2
    ph = res.observables.phases
    assert ph[res.observables.times < 5].tolist() == [1] * 10
    assert set(ph[(res.observables.times >= 5) & (res.observables.times < 10)]) == {2}
    assert res.state.phase == 1  # t = 12 is in the second cycle
    assert res.observables.audit_max_rel_error < 1e-9


def test_cached_rates_match_fresh_state(valley):
    m, s = valley
    res = engine.run(engine.initial_state(m, s), m, s, engine.StopSpec(max_events=50_000), np.random.default_rng(3))
    assert res.stop_reason == "max_events" and res.observables.events == 50_000
    fresh = engine.make_state(m, s, res.state.counts, res.state.time)
    assert fresh.total_rate == pytest.approx(res.state.total_rate, rel=1e-12)
    assert np.allclose(fresh.comp_load, res.state.comp_load)
    assert (res.state.counts >= 0).all()


def test_step_crosses_boundary_without_event():
    m = linear_model((0.0, 0.0001), (1.0, 1.0))
    rng = np.random.default_rng(0)
    st = engine.make_state(m, BIG, [1, 0], 0.0)
    # the waiting time in phase 1 (total rate 1e-4) almost surely exceeds the boundary at t = 1
    st2, kind = engine.step(st, m, BIG, rng)
    assert kind == "boundary" and st2.time == 1.0 and st2.phase == 2
    assert st2.counts.tolist() == [1, 0]
    st3, kind = engine.step(st2, m, BIG, rng)
    assert kind == "event" and st3.time > 1.0


def test_step_reports_extinction():
    m = linear_model((1.0, 1.0), (1.0, 1.0))
    st = engine.make_state(m, BIG, [0, 0], 0.0)
    _, kind = engine.step(st, m, BIG, np.random.default_rng(0))
    assert kind == "extinct"


def test_invasion_stop(valley):
    m, s = valley
    st = engine.make_state(m, s, [0, 0, 20_000], 0.0)
    res = engine.run(st, m, s, engine.StopSpec(invasion_epsilon=0.1), np.random.default_rng(0))
    assert res.stop_reason == "invasion"


def test_mutant_mass_and_arrivals():
    _, m, s = load("valley_crossing.json")
    res = engine.run(engine.initial_state(m, s), m, s, engine.StopSpec(mutant_mass_epsilon=1e-3),
                     np.random.default_rng(5))
    assert res.stop_reason == "mutant_mass"
    assert res.state.counts[1:].sum() >= 10
    assert not math.isnan(res.observables.first_arrival[1])
    assert res.observables.arrivals[1] >= 1


def test_zero_mutation_override(valley):
    m, s = valley
    res = engine.run(engine.initial_state(m, s), m, s, engine.StopSpec(max_time=20.0), np.random.default_rng(1),
                     mutation_probability=0.0)
    assert res.state.counts[1:].sum() == 0 and res.observables.arrivals.sum() == 0


def test_mutants_cleared_stop(pitstop):
    m, s = pitstop
    counts = engine.initial_state(m, s).counts.copy()
    counts[1] = 1
    res = engine.run(engine.make_state(m, s, counts, 0.0), m, s,
                     engine.StopSpec(max_time=1e4, stop_when_mutants_cleared=True), np.random.default_rng(4),
                     mutation_probability=0.0)
    assert res.stop_reason == "mutants_cleared"
    assert res.state.counts[1:].sum() == 0


def test_two_segment_extinction_small_sample():
    m = linear_model((1.0, 2.0), (2.0, 1.0), T=(0.7, 10.0))
    cm = engine.compile_model(m, BIG, 0.0)
    n, horizon = 5000, 1.7
    rng = np.random.default_rng(11)
    died = 0
    for _ in range(n):
        r = engine.run(engine.make_state(m, BIG, [1, 0], 0.0), m, BIG, engine.StopSpec(max_time=horizon), rng,
                       sample_stride=0.0, compiled=cm)
        died += r.stop_reason == "extinct"
    p = bdp.two_segment_extinction(0.7, 1.0, (1, 2), (2, 1))
    assert abs(died / n - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_growth_limit_matches_W_law():
    """e^{-ft} Z_t from the engine against the W law (b=2, d=1)."""
    m = linear_model((2.0, 1.0), (2.0, 1.0), T=(50.0, 50.0))
    cm = engine.compile_model(m, BIG, 0.0)
    rng = np.random.default_rng(21)
    t = 6.0
    z = np.array([engine.run(engine.make_state(m, BIG, [1, 0], 0.0), m, BIG, engine.StopSpec(max_time=t), rng,
                             sample_stride=0.0, compiled=cm).state.counts[0] for _ in range(2000)])
    scaled = z * math.exp(-t)
    assert np.mean(z > 0) == pytest.approx(0.5, abs=0.04)
    assert scaled.mean() == pytest.approx(1.0, abs=0.1)
    pos = scaled[z > 0]
    # exponential with mean b/f = 2 given survival
    assert np.median(pos) == pytest.approx(2 * math.log(2), rel=0.12)


def test_csv_outputs(tmp_path, valley):
    m, s = valley
    res = engine.run(engine.initial_state(m, s), m, s, engine.StopSpec(max_time=2.0), np.random.default_rng(0),
                     sample_stride=1.0)
    engine.write_trajectory_csv(tmp_path / "t.csv", res.observables, "config_sha256=x seed=1")
    engine.write_arrivals_csv(tmp_path / "a.csv", res.observables, "config_sha256=x seed=1")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    assert lines[1] == "t,N_0,N_1,N_2,phase"
    rows = list(csv.reader(lines[2:]))
    assert [float(r[0]) for r in rows] == [0.0, 1.0, 2.0]
    assert (tmp_path / "a.csv").read_text().splitlines()[1] == "trait,first_arrival_time"
