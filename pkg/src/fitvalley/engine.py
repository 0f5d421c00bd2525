"""Exact event-driven simulation of the multi-type logistic birth-death
process with mutation in a periodically switching environment.

Rates are piecewise constant in time, so the direct Gillespie method is
exact between phase boundaries. A proposed waiting time that reaches past
the next boundary is discarded and the clock moves to the boundary instead;
by memorylessness the residual waiting time is again exponential with the
new total rate.

Mutation is resolved at the birth event: a birth by ``v`` produces a
mutant with probability ``mu`` (trait drawn from row ``v`` of the kernel)
and a clone otherwise. Summing the birth channels of the generator this
way gives exactly the same jump rates as listing the clonal and mutant
terms separately, with ``2(L+1)`` channels instead of ``(L+1)^2``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .model import ModelSpec, PhaseClock, ScalingSpec
from .theory import fitness_table

AUDIT_INTERVAL = 1 << 20

STOP_INVASION = 0
STOP_MUTANT_MASS = 1
STOP_MAX_TIME = 2
STOP_MAX_EVENTS = 3
STOP_EXTINCT = 4
STOP_MUTANTS_CLEARED = 5
STOP_STEP = 6

STOP_NAMES = {
    STOP_INVASION: "invasion",
    STOP_MUTANT_MASS: "mutant_mass",
    STOP_MAX_TIME: "max_time",
    STOP_MAX_EVENTS: "max_events",
    STOP_EXTINCT: "extinct",
    STOP_MUTANTS_CLEARED: "mutants_cleared",
    STOP_STEP: "step",
}


@dataclass
class PopulationState:
    counts: np.ndarray
    time: float
    phase: int
    comp_load: np.ndarray
    total_rate: float

    def copy(self) -> "PopulationState":
        return PopulationState(self.counts.copy(), self.time, self.phase, self.comp_load.copy(), self.total_rate)


@dataclass(frozen=True)
class StopSpec:
    """Stopping rules. A non-positive epsilon disables the corresponding rule."""

    invasion_epsilon: float = 0.0
    mutant_mass_epsilon: float = 0.0
    max_time: float = math.inf
    max_events: int = 10**12
    stop_when_mutants_cleared: bool = False


@dataclass
class Observables:
    times: np.ndarray
    counts: np.ndarray
    phases: np.ndarray
    first_arrival: np.ndarray
    last_arrival: np.ndarray
    arrivals: np.ndarray
    peak: np.ndarray
    events: int
    audit_max_rel_error: float


@dataclass
class RunResult:
    state: PopulationState
    observables: Observables
    stop_reason: str

    @property
    def stopped_by_invasion(self) -> bool:
        return self.stop_reason == "invasion"


@dataclass
class CompiledModel:
    """Flat arrays consumed by the event loop (times in simulation units)."""

    birth: np.ndarray
    death: np.ndarray
    comp_over_k: np.ndarray
    kernel_cdf: np.ndarray
    boundaries: np.ndarray
    equilibrium_L: np.ndarray
    mu: float
    K: int
    num_traits: int
    extra: dict = field(default_factory=dict)


def compile_model(model: ModelSpec, scaling: ScalingSpec, mutation_probability: Optional[float] = None) -> CompiledModel:
    """Prepare the arrays used by the event loop.

    ``mutation_probability`` overrides the derived ``K**(-1/alpha)``; it is
    meant for oracle experiments that need the mutation-free process.
    """
    K = scaling.carrying_capacity
    mu = scaling.mu if mutation_probability is None else float(mutation_probability)
    clock = PhaseClock.from_model(model, scaling)
    cdf = np.cumsum(model.mutation_kernel, axis=1)
    cdf[:, -1] = 1.0
    nbar = fitness_table(model).equilibria[:, model.num_traits]
    return CompiledModel(
        birth=np.ascontiguousarray(model.birth_table()),
        death=np.ascontiguousarray(model.death_table()),
        comp_over_k=np.ascontiguousarray(model.competition_table() / K),
        kernel_cdf=np.ascontiguousarray(cdf),
        boundaries=np.ascontiguousarray(clock.scaled_boundaries),
        equilibrium_L=np.ascontiguousarray(nbar),
        mu=mu,
        K=K,
        num_traits=model.num_traits,
    )


@numba.njit(cache=True)
def _loads(counts, cK, phase, load):
    n = counts.shape[0]
    for v in range(n):
        acc = 0.0
        for w in range(n):
            acc += cK[phase, v, w] * counts[w]
        load[v] = acc


@numba.njit(cache=True)
def _total(counts, b, d, phase, load):
    tot = 0.0
    for v in range(counts.shape[0]):
        tot += counts[v] * (b[phase, v] + d[phase, v] + load[v])
    return tot


@numba.njit(cache=True)
def _locate(t, bounds):
    """Phase index and start of the current cycle for simulation time t."""
    period = bounds[bounds.shape[0] - 1]
    ncyc = math.floor(t / period)
    start = ncyc * period
    off = t - start
    ph = 0
    while ph < bounds.shape[0] - 2 and off >= bounds[ph + 1]:
        ph += 1
    return ph, start


@numba.njit(cache=True)
def _simulate(counts, t, b, d, cK, kcdf, bounds, nbarL, mu, K,
              inv_eps, mass_eps, max_time, max_events, clear_stop, single_step,
              stride, rng, first_arrival, last_arrival, arrivals, peak):
    n = counts.shape[0]
    L = n - 1
    ell = bounds.shape[0] - 1
    phase, cyc = _locate(t, bounds)
    next_bound = cyc + bounds[phase + 1]
    load = np.empty(n)
    _loads(counts, cK, phase, load)
    total = _total(counts, b, d, phase, load)
    ntot = 0
    for v in range(n):
        ntot += counts[v]
        if counts[v] > peak[v]:
            peak[v] = counts[v]

    cap = 16
    if stride > 0:
        cap = 1024
    ts = np.empty(cap)
    cs = np.empty((cap, n), dtype=np.int64)
    ps = np.empty(cap, dtype=np.int64)
    ns = 0
    k_sample = 0
    next_sample = t
    if stride > 0:
        k_sample = math.ceil(t / stride)
        next_sample = k_sample * stride

    events = 0
    audit_err = 0.0
    since_audit = 0
    mutants_seen = ntot - counts[0] > 0
    code = -1
    while True:
        if total > 0.0:
            t_new = t + rng.standard_exponential() / total
        else:
            if ntot == 0:
                code = STOP_EXTINCT
                break
            t_new = math.inf

        clipped = False
        at_end = False
        if t_new >= next_bound or t_new >= max_time:
            clipped = True
            if max_time <= next_bound:
                t_new = max_time
                at_end = True
            else:
                t_new = next_bound
        # samples strictly before the jump see the pre-jump state
        if stride > 0:
            while next_sample < t_new or (at_end and next_sample <= t_new):
                if ns == cap:
                    cap *= 2
                    ts2 = np.empty(cap)
                    cs2 = np.empty((cap, n), dtype=np.int64)
                    ps2 = np.empty(cap, dtype=np.int64)
                    ts2[:ns] = ts[:ns]
                    cs2[:ns] = cs[:ns]
                    ps2[:ns] = ps[:ns]
                    ts, cs, ps = ts2, cs2, ps2
                ts[ns] = next_sample
                cs[ns, :] = counts
                ps[ns] = phase
                ns += 1
                k_sample += 1
                next_sample = k_sample * stride
        t = t_new

        if at_end:
            code = STOP_MAX_TIME
            break

        if clipped:
            phase += 1
            if phase == ell:
                phase = 0
                cyc = next_bound
            next_bound = cyc + bounds[phase + 1]
            _loads(counts, cK, phase, load)
            total = _total(counts, b, d, phase, load)
            if inv_eps > 0.0:
                if abs(counts[L] / K - nbarL[phase]) < inv_eps and (ntot - counts[L]) / K < inv_eps:
                    code = STOP_INVASION
                    break
            if single_step:
                code = STOP_STEP
                break
            continue

        # channel selection: birth_0, death_0, birth_1, death_1, ...
        u = rng.random() * total
        v = -1
        is_birth = False
        acc = 0.0
        for x in range(n):
            if counts[x] == 0:
                continue
            rb = counts[x] * b[phase, x]
            acc += rb
            if u < acc:
                v = x
                is_birth = True
                break
            acc += counts[x] * (d[phase, x] + load[x])
            if u < acc:
                v = x
                break
        if v < 0:
            # rounding at the top end: take the last death channel with mass
            for x in range(n - 1, -1, -1):
                if counts[x] > 0:
                    v = x
                    break
            is_birth = False

        if is_birth:
            child = v
            if mu > 0.0 and rng.random() < mu:
                r = rng.random()
                child = 0
                while child < n - 1 and r >= kcdf[v, child]:
                    child += 1
                if child != v:
                    arrivals[child] += 1
                    last_arrival[child] = t
                    if math.isnan(first_arrival[child]):
                        first_arrival[child] = t
            w = child
            delta = 1
        else:
            w = v
            delta = -1

        # incremental update of loads and the total rate
        dtot = delta * (b[phase, w] + d[phase, w] + load[w])
        counts[w] += delta
        ntot += delta
        for x in range(n):
            load[x] += delta * cK[phase, x, w]
            dtot += delta * counts[x] * cK[phase, x, w]
        total += dtot
        if counts[w] > peak[w]:
            peak[w] = counts[w]
        if total < 0.0:
            total = 0.0
        events += 1
        since_audit += 1

        if since_audit >= AUDIT_INTERVAL:
            since_audit = 0
            fresh = np.empty(n)
            _loads(counts, cK, phase, fresh)
            ftot = _total(counts, b, d, phase, fresh)
            if ftot > 0.0:
                err = abs(ftot - total) / ftot
                if err > audit_err:
                    audit_err = err
            load[:] = fresh
            total = ftot

        if inv_eps > 0.0:
            if abs(counts[L] / K - nbarL[phase]) < inv_eps and (ntot - counts[L]) / K < inv_eps:
                code = STOP_INVASION
                break
        if mass_eps > 0.0 and ntot - counts[0] >= mass_eps * K:
            code = STOP_MUTANT_MASS
            break
        if ntot - counts[0] > 0:
            mutants_seen = True
        elif clear_stop and mutants_seen:
            code = STOP_MUTANTS_CLEARED
            break
        if ntot == 0:
            code = STOP_EXTINCT
            break
        if events >= max_events:
            code = STOP_MAX_EVENTS
            break
        if single_step:
            code = STOP_STEP
            break

    # final audit so callers get exact caches
    fresh = np.empty(n)
    _loads(counts, cK, phase, fresh)
    ftot = _total(counts, b, d, phase, fresh)
    if ftot > 0.0:
        err = abs(ftot - total) / ftot
        if err > audit_err:
            audit_err = err
    return code, t, phase, fresh, ftot, events, audit_err, ts[:ns], cs[:ns], ps[:ns]


# --- Python API -----------------------------------------------------------

def initial_state(model: ModelSpec, scaling: ScalingSpec) -> PopulationState:
    """Resident at floor(nbar_0 K) in phase 1, every other trait absent."""
    nbar0 = fitness_table(model).equilibria[0, 0]
    if not nbar0 > 0:
        raise ValueError("resident equilibrium in phase 1 must be positive")
    counts = np.zeros(model.num_traits + 1, dtype=np.int64)
    counts[0] = math.floor(nbar0 * scaling.carrying_capacity)
    return make_state(model, scaling, counts, 0.0)


def make_state(model: ModelSpec, scaling: ScalingSpec, counts, time: float = 0.0) -> PopulationState:
    """Build a state with consistent caches from arbitrary counts and time."""
    cm = compile_model(model, scaling)
    counts = np.asarray(counts, dtype=np.int64).copy()
    phase, _ = _locate(float(time), cm.boundaries)
    load = np.empty(len(counts))
    _loads(counts, cm.comp_over_k, phase, load)
    total = _total(counts, cm.birth, cm.death, phase, load)
    return PopulationState(counts, float(time), int(phase) + 1, load, float(total))


def event_rates(state: PopulationState, model: ModelSpec, scaling: ScalingSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-trait (birth, death) channel rates in the current phase, computed
    from scratch."""
    cm = compile_model(model, scaling)
    phase, _ = _locate(state.time, cm.boundaries)
    n = state.counts.astype(float)
    load = cm.comp_over_k[phase] @ n
    return n * cm.birth[phase], n * (cm.death[phase] + load)


def run(state: PopulationState, model: ModelSpec, scaling: ScalingSpec, stop: StopSpec,
        rng: np.random.Generator, *, sample_stride: Optional[float] = None,
        mutation_probability: Optional[float] = None, compiled: Optional[CompiledModel] = None,
        _single_step: bool = False) -> RunResult:
    """Simulate from ``state`` until a stopping rule fires.

    ``sample_stride`` defaults to lambda_K/100; pass 0 to disable trajectory
    sampling. The input state is not modified.
    """
    cm = compiled or compile_model(model, scaling, mutation_probability)
    if sample_stride is None:
        sample_stride = scaling.lambda_k / 100.0
    counts = state.counts.astype(np.int64).copy()
    n = len(counts)
    first = np.full(n, np.nan)
    last = np.full(n, np.nan)
    arrivals = np.zeros(n, dtype=np.int64)
    peak = counts.copy()
    code, t, phase, load, total, events, audit, ts, cs, ps = _simulate(
        counts, float(state.time), cm.birth, cm.death, cm.comp_over_k, cm.kernel_cdf,
        cm.boundaries, cm.equilibrium_L, cm.mu, float(cm.K),
        float(stop.invasion_epsilon), float(stop.mutant_mass_epsilon), float(stop.max_time),
        int(stop.max_events), bool(stop.stop_when_mutants_cleared), bool(_single_step),
        float(sample_stride), rng, first, last, arrivals, peak,
    )
    new_state = PopulationState(counts, float(t), int(phase) + 1, load, float(total))
    obs = Observables(ts, cs, ps + 1, first, last, arrivals, peak, int(events), float(audit))
    return RunResult(new_state, obs, STOP_NAMES[code])


def step(state: PopulationState, model: ModelSpec, scaling: ScalingSpec, rng: np.random.Generator,
         *, mutation_probability: Optional[float] = None) -> tuple[PopulationState, str]:
    """Apply one event or one phase-boundary crossing.

    Returns the new state and ``"event"``, ``"boundary"`` or the name of the
    absorbing condition that prevented progress.
    """
    res = run(state, model, scaling, StopSpec(), rng, sample_stride=0.0,
              mutation_probability=mutation_probability, _single_step=True)
    if res.stop_reason == "step":
        kind = "event" if res.observables.events else "boundary"
        return res.state, kind
    return res.state, res.stop_reason


# --- output ---------------------------------------------------------------

def write_trajectory_csv(path, obs: Observables, header_comment: str = "") -> None:
    n = obs.counts.shape[1] if obs.counts.ndim == 2 else 0
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["t"] + [f"N_{v}" for v in range(n)] + ["phase"])
        for t, row, ph in zip(obs.times, obs.counts, obs.phases):
            w.writerow([repr(float(t))] + [int(x) for x in row] + [int(ph)])


def write_arrivals_csv(path, obs: Observables, header_comment: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["trait", "first_arrival_time"])
        for v, t in enumerate(obs.first_arrival):
            w.writerow([v, "" if math.isnan(t) else repr(float(t))])
