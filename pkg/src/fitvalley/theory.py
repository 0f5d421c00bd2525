"""Closed-form quantities: equilibria, invasion fitness, the arrival set of
successful mutants, crossing rates and time scales.

All time arguments here are in unrescaled units (one period has length
``sum(T_i)``) unless a function says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .model import ModelSpec, Pitstop, ScalingSpec, StrictValley, Unsupported, classify_landscape

LOG_SWITCH = 30.0


def stable_product(factors: Sequence[float]) -> float:
    """Product of non-negative factors; switches to log space when any factor
    is extreme so that intermediate results cannot overflow."""
    factors = [float(x) for x in factors]
    if not factors:
        return 1.0
    if any(x == 0.0 for x in factors):
        return 0.0
    logs = [math.log(abs(x)) for x in factors]
    sign = -1.0 if sum(x < 0 for x in factors) % 2 else 1.0
    if max(abs(v) for v in logs) > LOG_SWITCH:
        return sign * math.exp(math.fsum(logs))
    return math.prod(factors)


# --- elementary quantities -----------------------------------------------

def monomorphic_equilibrium(b: float, d: float, c_self: float) -> float:
    if not c_self > 0:
        raise ValueError("self-competition must be positive")
    return (b - d) / c_self


def average_fitness(phase_fitness: Sequence[float], durations: Sequence[float]) -> float:
    f = np.asarray(phase_fitness, dtype=float)
    T = np.asarray(durations, dtype=float)
    return float(np.dot(f, T) / T.sum())


def lambda_of_rho(rho: float) -> float:
    """Expected number of births in a subcritical excursion, rho/(1-2 rho)."""
    if not 0 <= rho < 0.5:
        raise ValueError("lambda(rho) needs 0 <= rho < 1/2 (subcritical)")
    return rho / (1.0 - 2.0 * rho)


def lambda_series(rho: float, n_terms: int) -> float:
    """Partial sum of the combinatorial series for lambda(rho)."""
    if not 0 < rho < 0.5:
        raise ValueError("lambda series needs 0 < rho < 1/2")
    k = np.arange(1, n_terms + 1, dtype=float)
    log_terms = (gammaln(2 * k + 1) - gammaln(k) - gammaln(k + 2)
                 + k * math.log(rho) + (k + 1) * math.log1p(-rho))
    return math.fsum(np.exp(log_terms))


@dataclass
class FitnessTable:
    """equilibria[i, v] and phase_fitness[i, w, v] (NaN where the resident
    equilibrium is not positive); average_fitness[w] is against resident 0."""

    equilibria: np.ndarray
    phase_fitness: np.ndarray
    average_fitness: np.ndarray

    def to_dict(self) -> dict:
        return {
            "equilibria": self.equilibria.tolist(),
            "phase_fitness_vs_0": self.phase_fitness[:, :, 0].tolist(),
            "average_fitness_vs_0": self.average_fitness.tolist(),
        }


def fitness_table(model: ModelSpec) -> FitnessTable:
    b, d, c = model.birth_table(), model.death_table(), model.competition_table()
    ell, n = b.shape
    nbar = np.empty((ell, n))
    for i in range(ell):
        for v in range(n):
            nbar[i, v] = monomorphic_equilibrium(b[i, v], d[i, v], c[i, v, v])
    f = np.full((ell, n, n), np.nan)
    for i in range(ell):
        for v in range(n):
            if nbar[i, v] > 0:
                f[i, :, v] = b[i] - d[i] - c[i, :, v] * nbar[i, v]
    fav = np.array([average_fitness(f[:, w, 0], model.durations) for w in range(n)])
    return FitnessTable(nbar, f, fav)


def invasion_fitness(model: ModelSpec, w: int, v: int, i: int) -> float:
    """Fitness of a rare ``w`` against resident ``v`` at equilibrium in phase ``i`` (1-based)."""
    ph = model.phases[i - 1]
    nbar = monomorphic_equilibrium(ph.birth[v], ph.death[v], ph.competition[v, v])
    if not nbar > 0:
        raise ValueError(f"resident {v} has no positive equilibrium in phase {i}")
    return float(ph.birth[w] - ph.death[w] - ph.competition[w, v] * nbar)


# --- piecewise-constant integrals ----------------------------------------

def fitness_integral(values: Sequence[float], durations: Sequence[float], t0: float, t1: float) -> float:
    """Exact integral over [t0, t1] of the periodic piecewise-constant function
    taking ``values[i]`` on the i-th phase."""
    f = np.asarray(values, dtype=float)
    T = np.asarray(durations, dtype=float)
    if t1 < t0:
        return -fitness_integral(f, T, t1, t0)
    period = T.sum()
    edges = np.concatenate([[0.0], np.cumsum(T)])
    full_period = float(np.dot(f, T))

    def primitive(t: float) -> float:
        n, r = divmod(t, period)
        j = min(int(np.searchsorted(edges, r, side="right")) - 1, len(T) - 1)
        partial = float(np.dot(f[:j], T[:j])) + f[j] * (r - edges[j])
        return n * full_period + partial

    return primitive(t1) - primitive(t0)


# --- arrival set ----------------------------------------------------------

@dataclass
class ArrivalSet:
    intervals: list
    period: float

    @property
    def total_measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def contains(self, t: float) -> bool:
        t = math.fmod(t, self.period)
        return any(a <= t < b for a, b in self.intervals)

    def to_dict(self) -> dict:
        return {"intervals": [list(iv) for iv in self.intervals], "total_measure": self.total_measure}


def compute_arrival_set(f_L: Sequence[float], durations: Sequence[float]) -> ArrivalSet:
    """Times in one period from which the integrated growth of L stays strictly
    positive over every horizon up to one period.

    On a phase with positive slope the integral g(t) rises linearly; the
    constraint is g(t) < min g over the next ``ell`` phase end points, so each
    phase contributes at most one interval starting at its left end.
    """
    f = np.asarray(f_L, dtype=float)
    T = np.asarray(durations, dtype=float)
    if np.any(f == 0):
        raise ValueError("fitness of L must be nonzero in every phase")
    ell = len(T)
    period = float(T.sum())
    edges = np.concatenate([[0.0], np.cumsum(T)])
    if np.dot(f, T) <= 0:
        return ArrivalSet([], period)
    # g at the phase end points over two periods
    ext_f = np.concatenate([f, f])
    ext_T = np.concatenate([T, T])
    g = np.concatenate([[0.0], np.cumsum(ext_f * ext_T)])
    pieces = []
    for j in range(ell):
        if f[j] < 0:
            continue
        floor_ahead = g[j + 1: j + ell + 1].min()
        room = floor_ahead - g[j]
        if room <= 0:
            continue
        right = min(edges[j] + room / f[j], edges[j + 1])
        pieces.append([edges[j], right])
    merged = []
    for a, b in pieces:
        if merged and abs(merged[-1][1] - a) <= 1e-15 * period:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    return ArrivalSet([(float(a), float(b)) for a, b in merged], period)


def arrival_predicate(f_L: Sequence[float], durations: Sequence[float], t: float) -> bool:
    """Direct evaluation of the defining strict inequality at one time ``t``,
    checking every phase end point in (t, t + period] and the period itself."""
    f = np.asarray(f_L, dtype=float)
    T = np.asarray(durations, dtype=float)
    period = float(T.sum())
    edges = np.concatenate([[0.0], np.cumsum(T)])
    t = math.fmod(t, period)
    points = [e + k * period for k in (0, 1) for e in edges if t < e + k * period <= t + period]
    points.append(t + period)
    j = min(int(np.searchsorted(edges, t, side="right")) - 1, len(T) - 1)
    if f[j] <= 0:
        return False
    return all(fitness_integral(f, T, t, p) > 0 for p in points)


def phase_overlap(arrival: ArrivalSet, durations: Sequence[float]) -> np.ndarray:
    """Length of A inside each phase."""
    edges = np.concatenate([[0.0], np.cumsum(durations)])
    out = np.zeros(len(durations))
    for i in range(len(durations)):
        lo, hi = edges[i], edges[i + 1]
        for a, b in arrival.intervals:
            out[i] += max(0.0, min(b, hi) - max(a, lo))
    return out


# --- crossing rates -------------------------------------------------------

def _rho(model: ModelSpec, table: FitnessTable, i: int, w: int) -> float:
    ph = model.phases[i]
    nbar0 = table.equilibria[i, 0]
    return float(ph.birth[w] / (ph.birth[w] + ph.death[w] + ph.competition[w, 0] * nbar0))


def _rate_factors(model: ModelSpec, scaling: ScalingSpec, table: FitnessTable, i: int) -> dict:
    """Factor breakdown of the phase-i crossing rate (0-based phase index)."""
    L = model.num_traits
    fa = scaling.floor_alpha
    b = model.phases[i].birth
    f = table.phase_fitness[i, :, 0]
    for v in list(range(1, fa + 1)) + list(range(fa + 1, L)):
        if f[v] == 0:
            raise ValueError(f"zero fitness of trait {v} in phase {i + 1} appears in a denominator")
    meso = [b[v - 1] / abs(f[v]) for v in range(1, fa + 1)]
    rho = [_rho(model, table, i, w) for w in range(fa + 1, L)]
    lam = [b[w] / abs(f[w]) for w in range(fa + 1, L)]
    survival = max(f[L], 0.0) / b[L]
    rate = stable_product([table.equilibria[i, 0], *meso, b[fa], *lam, survival])
    return {
        "resident": float(table.equilibria[i, 0]),
        "mesoscopic_factors": [float(x) for x in meso],
        "feeding_birth_rate": float(b[fa]),
        "rho": rho,
        "lambda": [float(x) for x in lam],
        "survival": float(survival),
        "rate": rate,
    }


def phase_crossing_rate(model: ModelSpec, scaling: ScalingSpec, i: int, table: FitnessTable | None = None) -> float:
    """Crossing rate while phase ``i`` (1-based) is active."""
    if scaling.floor_alpha >= model.num_traits:
        raise ValueError("phase crossing rate needs floor(alpha) < L")
    table = table or fitness_table(model)
    return _rate_factors(model, scaling, table, i - 1)["rate"]


def effective_crossing_rate(phase_rates: Sequence[float], arrival: ArrivalSet, durations: Sequence[float]) -> float:
    overlap = phase_overlap(arrival, durations)
    return float(np.dot(phase_rates, overlap) / np.sum(durations))


@dataclass
class RateReport:
    classification: str
    rho: list
    lam: list
    phase_rates: list
    effective_rate: float
    timescale: float
    arrival_set: ArrivalSet
    factors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arrival_set"] = self.arrival_set.to_dict()
        d["R_eff"] = self.effective_rate
        d["timescale"] = _json_float(self.timescale)
        return d


def crossing_report(model: ModelSpec, scaling: ScalingSpec, table: FitnessTable | None = None) -> RateReport:
    """Phase rates, arrival set, effective rate and mean crossing time for a
    strict fitness valley."""
    table = table or fitness_table(model)
    factors = [_rate_factors(model, scaling, table, i) for i in range(model.num_phases)]
    arrival = compute_arrival_set(table.phase_fitness[:, model.num_traits, 0], model.durations)
    rates = [fc["rate"] for fc in factors]
    r_eff = effective_crossing_rate(rates, arrival, model.durations)
    report = RateReport(
        classification="strict_valley",
        rho=[fc["rho"] for fc in factors],
        lam=[fc["lambda"] for fc in factors],
        phase_rates=rates,
        effective_rate=r_eff,
        timescale=math.inf,
        arrival_set=arrival,
        factors=factors,
    )
    report.timescale = predicted_crossing_timescale(report, scaling, model.num_traits)
    return report


@dataclass
class PitstopReport:
    w: int
    Lambda: list
    rate: float
    peak_exponent: float
    timescale: float
    h_zero: float
    prefix: float
    bracket: list

    def to_dict(self) -> dict:
        d = asdict(self)
        d["R_pitstop"] = self.rate
        d["timescale"] = _json_float(self.timescale)
        return d


def pitstop_crossing_rate(model: ModelSpec, scaling: ScalingSpec, table: FitnessTable | None = None) -> PitstopReport:
    table = table or fitness_table(model)
    cls = classify_landscape(model, scaling, table)
    if not isinstance(cls, Pitstop):
        reason = cls.reason if isinstance(cls, Unsupported) else "landscape is a strict valley"
        raise ValueError(f"pit stop rate not applicable: {reason}")
    w, L, fa = cls.w, model.num_traits, scaling.floor_alpha
    b1, b2 = model.phases[0].birth, model.phases[1].birth
    f1, f2 = table.phase_fitness[0, :, 0], table.phase_fitness[1, :, 0]
    Lam = [
        stable_product([b1[z] / abs(f1[z]) for z in range(w + 1, L)]),
        stable_product([b2[z] / abs(f2[z]) for z in range(w + 1, L)]),
    ]
    prefix = stable_product(
        [table.equilibria[0, 0]]
        + [b1[v - 1] / abs(f1[v]) for v in range(1, fa + 1)]
        + [b1[fa]]
        + [b1[z] / abs(f1[z]) for z in range(fa + 1, w)]
        + [1.0 / f1[w]]
    )
    bracket = [
        (b1[w] / f1[w]) * Lam[0] * (f1[L] / b1[L]),
        (b2[w] / abs(f2[w])) * Lam[1] * (f2[L] / b2[L]),
    ]
    period = model.period
    rate = prefix * math.fsum(bracket) / period
    T1 = model.phases[0].duration
    report = PitstopReport(
        w=w,
        Lambda=Lam,
        rate=float(rate),
        peak_exponent=float(scaling.lambda_k * T1 * f1[w]),
        timescale=math.inf,
        h_zero=float(T1 * (1.0 + f1[w] / abs(f2[w]))),
        prefix=float(prefix),
        bracket=[float(x) for x in bracket],
    )
    report.timescale = predicted_crossing_timescale(report, scaling, L)
    return report


def predicted_crossing_timescale(report: RateReport | PitstopReport, scaling: ScalingSpec, num_traits: int) -> float:
    """Mean crossing time in simulation units; ``inf`` when no crossing is predicted."""
    K, mu = scaling.carrying_capacity, scaling.mu
    log_kmu = math.log(K) + num_traits * math.log(mu)
    if isinstance(report, PitstopReport):
        if report.rate <= 0:
            return math.inf
        log_t = math.log(scaling.lambda_k) - report.peak_exponent - log_kmu - math.log(report.rate)
        return math.exp(log_t)
    if report.effective_rate <= 0:
        return math.inf
    return math.exp(-log_kmu - math.log(report.effective_rate))


def theory_report(model: ModelSpec, scaling: ScalingSpec) -> dict:
    """Everything the ``theory`` command prints."""
    table = fitness_table(model)
    cls = classify_landscape(model, scaling, table)
    out = {"fitness": table.to_dict(), "mu_K": scaling.mu}
    if isinstance(cls, StrictValley):
        out["classification"] = "strict_valley"
        out["rates"] = crossing_report(model, scaling, table).to_dict()
    elif isinstance(cls, Pitstop):
        out["classification"] = f"pitstop(w={cls.w})"
        out["rates"] = pitstop_crossing_rate(model, scaling, table).to_dict()
        out["growth_profile"] = asdict(pitstop_growth_profile(table.phase_fitness[:, cls.w, 0], model.durations))
    else:
        out["classification"] = "unsupported"
        out["reason"] = cls.reason
        out["note"] = "no crossing predicted"
    return out


def _json_float(x: float):
    return x if math.isfinite(x) else "inf"


# --- pit stop growth optimizer -------------------------------------------

@dataclass
class GrowthProfile:
    t_star: float
    s_star: float
    peak: float


def pitstop_growth_profile(f_w: Sequence[float], durations: Sequence[float]) -> GrowthProfile:
    """Best arrival time and growth duration for a trait with negative average
    fitness, keeping the integrated growth positive along the way.

    Optima sit at phase starts (for the arrival) and phase ends (for the
    peak), so only those candidates are scanned.
    """
    f = np.asarray(f_w, dtype=float)
    T = np.asarray(durations, dtype=float)
    if np.dot(f, T) >= 0:
        raise ValueError("growth profile needs negative average fitness")
    ell = len(T)
    edges = np.concatenate([[0.0], np.cumsum(T)])
    best = GrowthProfile(0.0, 0.0, 0.0)
    for j in range(ell):
        if f[j] <= 0:
            continue
        g = s = 0.0
        for k in range(ell):
            idx = (j + k) % ell
            g += f[idx] * T[idx]
            s += T[idx]
            if g <= 0:
                break
            if g > best.peak:
                best = GrowthProfile(float(edges[j]), float(s), float(g))
    return best


# --- mesoscopic equilibria ------------------------------------------------

def mesoscopic_equilibria(model: ModelSpec, scaling: ScalingSpec, table: FitnessTable | None = None) -> np.ndarray:
    """a[i, v] for v = 0..floor(alpha): expected N_v / (K mu^v) in phase i."""
    table = table or fitness_table(model)
    fa = min(scaling.floor_alpha, model.num_traits)
    out = np.empty((model.num_phases, fa + 1))
    for i, ph in enumerate(model.phases):
        f = table.phase_fitness[i, :, 0]
        a = table.equilibria[i, 0]
        out[i, 0] = a
        for v in range(1, fa + 1):
            if not f[v] < 0:
                raise ValueError(f"trait {v} must be unfit in phase {i + 1}")
            a *= ph.birth[v - 1] / abs(f[v])
            out[i, v] = a
    return out
