"""Linear birth-death processes: excursion laws, extinction and survival
probabilities, the growth limit variable and its samplers.

These serve as independent oracles for the individual-based engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model import ModelSpec, ScalingSpec
from .theory import fitness_integral, fitness_table


@dataclass(frozen=True)
class BDParams:
    birth: float
    death: float

    def __post_init__(self):
        if not (self.birth >= 0 and self.death >= 0 and self.birth + self.death > 0):
            raise ValueError("need b, d >= 0 and b + d > 0")

    @property
    def rho(self) -> float:
        return self.birth / (self.birth + self.death)


def _require_subcritical(b, d):
    if not b < d:
        raise ValueError("excursion laws need a subcritical process (b < d)")


def excursion_pmf(k, b: float, d: float):
    """P(B = k) for the number of births before extinction, from one founder."""
    _require_subcritical(b, d)
    k = np.asarray(k, dtype=float)
    rho = b / (b + d)
    logp = (gammaln(2 * k + 1) - gammaln(k + 1) - gammaln(k + 2)
            + k * math.log(rho) + (k + 1) * math.log1p(-rho)) if rho > 0 else np.where(k == 0, 0.0, -np.inf)
    out = np.exp(logp)
    return float(out) if out.ndim == 0 else out


def excursion_mean(b: float, d: float) -> float:
    _require_subcritical(b, d)
    return b / (d - b)


def simulate_excursion(b: float, d: float, rng: np.random.Generator, track_lifetime: bool = False):
    """One excursion via the embedded jump chain; returns (births, lifetime).

    The lifetime is ``nan`` unless ``track_lifetime`` is set, in which case the
    exponential holding times of the continuous-time process are summed.
    """
    _require_subcritical(b, d)
    rho = b / (b + d)
    n, births, life = 1, 0, 0.0
    while n > 0:
        if track_lifetime:
            life += rng.standard_exponential() / (n * (b + d))
        if rng.random() < rho:
            n += 1
            births += 1
        else:
            n -= 1
    return births, (life if track_lifetime else math.nan)


def simulate_excursions(b: float, d: float, rng: np.random.Generator, n: int, track_lifetime: bool = False):
    """Vectorised batch of ``n`` independent excursions.

    Returns ``(births, lifetimes)`` arrays; lifetimes are NaN when not tracked.
    """
    _require_subcritical(b, d)
    rho = b / (b + d)
    size = np.ones(n, dtype=np.int64)
    births = np.zeros(n, dtype=np.int64)
    life = np.zeros(n) if track_lifetime else np.full(n, np.nan)
    active = np.arange(n)
    while active.size:
        if track_lifetime:
            life[active] += rng.standard_exponential(active.size) / (size[active] * (b + d))
        up = rng.random(active.size) < rho
        size[active] += np.where(up, 1, -1)
        births[active] += up
        active = active[size[active] > 0]
    return births, life


def extinction_cdf(t, B: float, D: float):
    """P(extinct by time t | one founder) for constant rates B != D.

    Written with the signed growth rate so that it is also valid for the
    supercritical case, where it tends to D/B.
    """
    if B == D:
        raise ValueError("critical case B == D is not supported")
    f = B - D
    e = np.exp(f * np.asarray(t, dtype=float))
    out = 1.0 - (-f) * e / (D - B * e)
    return float(out) if np.ndim(out) == 0 else out


def extinction_cdf_standard(t, B: float, D: float):
    """The textbook form D(e^{rt}-1)/(B e^{rt}-D), r = B - D."""
    if B == D:
        raise ValueError("critical case B == D is not supported")
    e = np.exp((B - D) * np.asarray(t, dtype=float))
    out = D * (e - 1.0) / (B * e - D)
    return float(out) if np.ndim(out) == 0 else out


def geometric_tail(t: float, B: float, D: float) -> float:
    """Ratio q in P(Z_t = k | Z_t > 0) = (1-q) q^(k-1) for a founder at time 0."""
    e = math.exp((B - D) * t)
    return B * (e - 1.0) / (B * e - D)


def two_segment_extinction(t1: float, t2: float, first: tuple, second: tuple) -> float:
    """P(extinct by t1 + t2) when rates switch from ``first`` to ``second``
    (each a (B, D) pair) at time t1, for one founder at time 0.

    Conditioned on survival to t1 the population is geometric, so the second
    segment enters through its extinction probability raised to that law.
    """
    p0 = extinction_cdf(t1, *first)
    q = geometric_tail(t1, *first)
    p2 = extinction_cdf(t2, *second)
    return p0 + (1.0 - p0) * (1.0 - q) * p2 / (1.0 - q * p2)


def survival_probability(b: float, d_eff: float) -> float:
    if not b > 0:
        raise ValueError("birth rate must be positive")
    return max(b - d_eff, 0.0) / b


def simulate_fate(b: float, d: float, rng: np.random.Generator, n: int, threshold: int = 60) -> np.ndarray:
    """For ``n`` independent founders, whether the line reaches ``threshold``
    individuals before dying out (a proxy for survival when b > d)."""
    rho = b / (b + d)
    size = np.ones(n, dtype=np.int64)
    active = np.arange(n)
    while active.size:
        size[active] += np.where(rng.random(active.size) < rho, 1, -1)
        active = active[(size[active] > 0) & (size[active] < threshold)]
    return size >= threshold


def sample_W(b: float, d_eff: float, rng: np.random.Generator, size=None):
    """Draw from the growth limit law: 0 with probability 1 - f/b, otherwise
    exponential with mean b/f, where f = b - d_eff."""
    f = b - d_eff
    if not f > 0:
        raise ValueError("W law needs a supercritical process (b > d_eff)")
    p = f / b
    n = 1 if size is None else size
    w = np.where(rng.random(n) < p, rng.exponential(1.0 / p, n), 0.0)
    return float(w[0]) if size is None else w


def growth_exponent(model: ModelSpec, scaling: ScalingSpec, w: int, t0: float, t1: float) -> float:
    """Integral of the rescaled invasion fitness of ``w`` against resident 0
    over simulation times [t0, t1]."""
    if t1 < t0:
        raise ValueError("need t0 <= t1")
    f = fitness_table(model).phase_fitness[:, w, 0]
    lam = scaling.lambda_k
    return lam * fitness_integral(f, model.durations, t0 / lam, t1 / lam)
