"""Model parameters, validation, the phase clock and landscape classification."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration document cannot be turned into a model."""


@dataclass(frozen=True)
class PhaseSpec:
    """Constant parameters of one environmental phase (durations are unrescaled)."""

    duration: float
    birth: np.ndarray
    death: np.ndarray
    competition: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "birth", np.asarray(self.birth, dtype=float))
        object.__setattr__(self, "death", np.asarray(self.death, dtype=float))
        object.__setattr__(self, "competition", np.asarray(self.competition, dtype=float))
        for arr in (self.birth, self.death, self.competition):
            arr.setflags(write=False)


def default_kernel(num_traits: int) -> np.ndarray:
    """Nearest-neighbour forward mutation, with trait L mutating to itself."""
    m = np.zeros((num_traits + 1, num_traits + 1))
    for v in range(num_traits):
        m[v, v + 1] = 1.0
    m[num_traits, num_traits] = 1.0
    return m


@dataclass(frozen=True)
class ModelSpec:
    num_traits: int
    phases: tuple
    mutation_kernel: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        kernel = self.mutation_kernel
        if kernel is None:
            kernel = default_kernel(self.num_traits)
        kernel = np.asarray(kernel, dtype=float)
        kernel.setflags(write=False)
        object.__setattr__(self, "mutation_kernel", kernel)

    @property
    def num_phases(self) -> int:
        return len(self.phases)

    @property
    def durations(self) -> np.ndarray:
        return np.array([p.duration for p in self.phases])

    @property
    def period(self) -> float:
        return float(sum(p.duration for p in self.phases))

    def birth_table(self) -> np.ndarray:
        """(num_phases, L+1) array of birth rates."""
        return np.array([p.birth for p in self.phases])

    def death_table(self) -> np.ndarray:
        return np.array([p.death for p in self.phases])

    def competition_table(self) -> np.ndarray:
        """(num_phases, L+1, L+1) array of competition kernels."""
        return np.array([p.competition for p in self.phases])

    def has_default_kernel(self) -> bool:
        return bool(np.array_equal(self.mutation_kernel, default_kernel(self.num_traits)))


@dataclass(frozen=True)
class ScalingSpec:
    carrying_capacity: int
    alpha: float
    lambda_k: float

    @property
    def mu(self) -> float:
        """Mutation probability per birth, K ** (-1/alpha)."""
        return float(self.carrying_capacity ** (-1.0 / self.alpha))

    @property
    def floor_alpha(self) -> int:
        return int(math.floor(self.alpha))


@dataclass(frozen=True)
class PhaseClock:
    """Cumulative phase end points (unrescaled) together with the time rescaling."""

    boundaries: np.ndarray
    lambda_k: float

    @classmethod
    def from_model(cls, model: ModelSpec, scaling: ScalingSpec) -> "PhaseClock":
        return cls(np.concatenate([[0.0], np.cumsum(model.durations)]), scaling.lambda_k)

    @property
    def period(self) -> float:
        return float(self.boundaries[-1])

    @property
    def scaled_boundaries(self) -> np.ndarray:
        """Phase end points in simulation time units."""
        return self.boundaries * self.lambda_k


def phase_at(clock: PhaseClock, t: float) -> tuple[int, float]:
    """Return the 1-based phase index active at simulation time ``t`` and the
    simulation time elapsed since that phase began.

    Intervals are left-closed, so a boundary instant belongs to the phase
    that starts there.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    u = math.fmod(t / clock.lambda_k, clock.period)
    idx = int(np.searchsorted(clock.boundaries, u, side="right")) - 1
    idx = min(max(idx, 0), len(clock.boundaries) - 2)
    return idx + 1, (u - clock.boundaries[idx]) * clock.lambda_k


def validate_model(model: ModelSpec, scaling: ScalingSpec) -> list[str]:
    """Collect violated invariants as human-readable strings; empty if valid."""
    out = []
    n = model.num_traits + 1
    if model.num_traits < 1:
        out.append("L must be at least 1")
    if model.num_phases < 1:
        out.append("phases must contain at least one phase")
    for i, ph in enumerate(model.phases, start=1):
        if not ph.duration > 0:
            out.append(f"phase {i}: duration T must be positive")
        if ph.birth.shape != (n,):
            out.append(f"phase {i}: b must have length L+1")
        elif np.any(ph.birth < 0):
            out.append(f"phase {i}: b must be non-negative")
        if ph.death.shape != (n,):
            out.append(f"phase {i}: d must have length L+1")
        elif np.any(ph.death < 0):
            out.append(f"phase {i}: d must be non-negative")
        if ph.competition.shape != (n, n):
            out.append(f"phase {i}: c must be (L+1)x(L+1)")
        else:
            if np.any(ph.competition < 0):
                out.append(f"phase {i}: c must be non-negative")
            if np.any(np.diag(ph.competition) <= 0):
                out.append("competition diagonal must be positive")
    m = model.mutation_kernel
    if m.shape != (n, n):
        out.append("kernel must be (L+1)x(L+1)")
    elif np.any(m < 0) or not np.allclose(m.sum(axis=1), 1.0, rtol=0, atol=1e-12):
        out.append("kernel rows must be probability vectors")
    if scaling.carrying_capacity < 1:
        out.append("K must be a positive integer")
    if not scaling.alpha > 0:
        out.append("alpha must be positive")
    elif float(scaling.alpha).is_integer():
        out.append("alpha must be non-integer")
    if not scaling.lambda_k > 0:
        out.append("lambda_K must be positive")
    return out


def scale_warnings(scaling: ScalingSpec) -> list[str]:
    """Soft checks on the asymptotic regime 1 << lambda_K << ln K."""
    out = []
    if scaling.carrying_capacity > 1 and scaling.lambda_k >= math.log(scaling.carrying_capacity):
        out.append("lambda_K >= ln K: environment changes are not faster than mutant growth")
    return out


# --- landscape classification -------------------------------------------

@dataclass(frozen=True)
class StrictValley:
    pass


@dataclass(frozen=True)
class Pitstop:
    w: int


@dataclass(frozen=True)
class Unsupported:
    reason: str


def classify_landscape(model: ModelSpec, scaling: ScalingSpec, table) -> StrictValley | Pitstop | Unsupported:
    """Decide which crossing result applies, given a ``FitnessTable``.

    The clauses are checked in a fixed order and the first failure is
    reported.
    """
    L = model.num_traits
    fa = scaling.floor_alpha
    nbar0 = table.equilibria[:, 0]
    f = table.phase_fitness
    interior = range(1, L)

    if not model.has_default_kernel():
        return Unsupported("mutation kernel must be nearest-neighbour forward")
    if fa >= L:
        return Unsupported("floor(alpha) must be smaller than L")
    if np.any(nbar0 <= 0):
        return Unsupported("resident equilibrium must be positive in every phase")
    fL = f[:, L, 0]
    if np.any(fL == 0):
        return Unsupported("f_{L,0} must be nonzero in every phase")
    for i in range(model.num_phases):
        if fL[i] > 0:
            if table.equilibria[i, L] <= 0 or not f[i, 0, L] < 0:
                return Unsupported(f"phase {i + 1}: f_{{0,L}} must be negative where f_{{L,0}} > 0")

    if all(np.all(f[:, w, 0] < 0) for w in interior):
        if table.average_fitness[L] > 0:
            return StrictValley()
        return Unsupported("average fitness of L must be positive")

    # some interior trait is fit in some phase: only the pit stop can apply
    if model.num_phases != 2:
        return Unsupported("pitstop requires ℓ=2")
    if nbar0[0] != nbar0[1]:
        return Unsupported("pitstop requires equal resident equilibria in both phases")
    candidates = [w for w in interior if np.any(f[:, w, 0] > 0)]
    if len(candidates) != 1:
        return Unsupported("pitstop requires a unique interior trait with a fit phase")
    w = candidates[0]
    if not fa + 1 <= w <= L - 1:
        return Unsupported("pitstop trait must lie in [floor(alpha)+1, L-1]")
    if not (f[0, w, 0] > 0 and f[1, w, 0] < 0):
        return Unsupported("pitstop trait must be fit in phase 1 only")
    if not table.average_fitness[w] < 0:
        return Unsupported("pitstop trait must have negative average fitness")
    if not np.all(fL > 0):
        return Unsupported("pitstop requires L fit in both phases")
    return Pitstop(w)


# --- JSON config ----------------------------------------------------------

def model_from_dict(doc: dict[str, Any]) -> tuple[ModelSpec, ScalingSpec]:
    try:
        L = int(doc["L"])
        phases = [
            PhaseSpec(float(p["T"]), p["b"], p["d"], p["c"])
            for p in doc["phases"]
        ]
        kernel = doc.get("kernel")
        model = ModelSpec(L, phases, None if kernel is None else np.asarray(kernel, dtype=float))
        scaling = ScalingSpec(int(doc["K"]), float(doc["alpha"]), float(doc["lambda_K"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc!r}") from exc
    return model, scaling


def model_to_dict(model: ModelSpec, scaling: ScalingSpec) -> dict[str, Any]:
    doc = {
        "L": model.num_traits,
        "phases": [
            {"T": p.duration, "b": p.birth.tolist(), "d": p.death.tolist(), "c": p.competition.tolist()}
            for p in model.phases
        ],
        "K": scaling.carrying_capacity,
        "alpha": scaling.alpha,
        "lambda_K": scaling.lambda_k,
    }
    if not model.has_default_kernel():
        doc["kernel"] = model.mutation_kernel.tolist()
    return doc


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
