import json
from pathlib import Path

import numpy as np
import pytest

from fitvalley.model import ModelSpec, PhaseSpec, ScalingSpec, model_from_dict

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def load(name: str):
    doc = json.loads((CONFIGS / name).read_text())
    return (doc, *model_from_dict(doc))


def two_phase(L, p1, p2, T=(1.0, 1.0)):
    """ModelSpec from two (b, d, c) triples."""
    return ModelSpec(L, [PhaseSpec(T[0], *p1), PhaseSpec(T[1], *p2)])


@pytest.fixture
def valley():
    """Sample strict valley: f_L = (1, -0.5), R = (0.5, 0), A = [0, 0.5)."""
    _, m, s = load("strict_valley.json")
    return m, s


@pytest.fixture
def pitstop():
    _, m, s = load("pitstop.json")
    return m, s


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
