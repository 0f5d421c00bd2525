"""Deterministic Lotka-Volterra limit of the rescaled population process."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, PhaseClock, ScalingSpec

BLOWUP = 1e12


@dataclass
class DensityTrajectory:
    times: np.ndarray
    densities: np.ndarray
    phases: np.ndarray


def lv_derivative(n, birth, death, competition):
    n = np.asarray(n, dtype=float)
    return (birth - death - competition @ n) * n


def _rk4(n, h, b, d, c):
    k1 = lv_derivative(n, b, d, c)
    k2 = lv_derivative(n + 0.5 * h * k1, b, d, c)
    k3 = lv_derivative(n + 0.5 * h * k2, b, d, c)
    k4 = lv_derivative(n + h * k3, b, d, c)
    return n + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(n0, t0: float, t1: float, model: ModelSpec, scaling: ScalingSpec,
              step: float = 1e-3, record_every: int = 1) -> DensityTrajectory:
    """Classical RK4 from simulation time t0 to t1 with steps cut at every
    phase boundary, so each step sees constant parameters."""
    if t1 < t0:
        raise ValueError("need t0 <= t1")
    if not step > 0:
        raise ValueError("step must be positive")
    b, d, c = model.birth_table(), model.death_table(), model.competition_table()
    clock = PhaseClock.from_model(model, scaling)
    bounds = clock.scaled_boundaries
    period = bounds[-1]
    n = np.asarray(n0, dtype=float).copy()

    times, states, phases = [t0], [n.copy()], []
    t = t0
    cyc = np.floor(t0 / period) * period
    i = int(np.searchsorted(bounds, t0 - cyc, side="right")) - 1
    i = min(i, len(bounds) - 2)
    phases.append(i + 1)
    count = 0
    while t < t1:
        seg_end = min(cyc + bounds[i + 1], t1)
        nsteps = max(int(np.ceil((seg_end - t) / step - 1e-9)), 1)
        h = (seg_end - t) / nsteps
        for k in range(nsteps):
            n = np.maximum(_rk4(n, h, b[i], d[i], c[i]), 0.0)
            count += 1
            if np.any(n > BLOWUP) or not np.all(np.isfinite(n)):
                raise FloatingPointError("density blow-up in Lotka-Volterra integration")
            tk = seg_end if k == nsteps - 1 else t + (k + 1) * h
            if count % record_every == 0 or tk == t1:
                times.append(tk)
                states.append(n.copy())
                phases.append(i + 1)
        t = seg_end
        if t >= cyc + bounds[i + 1]:
            i += 1
            if i == len(bounds) - 1:
                i = 0
                cyc += period
    return DensityTrajectory(np.array(times), np.array(states), np.array(phases))


def write_density_csv(path, traj: DensityTrajectory, header_comment: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        nv = traj.densities.shape[1]
        w.writerow(["t"] + [f"n_{v}" for v in range(nv)] + ["phase"])
        for t, row, ph in zip(traj.times, traj.densities, traj.phases):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in row] + [int(ph)])
