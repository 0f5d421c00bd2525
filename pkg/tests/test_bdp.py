import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fitvalley import bdp
from fitvalley.model import ScalingSpec


def test_params_rho():
    assert bdp.BDParams(1, 3).rho == 0.25
    with pytest.raises(ValueError):
        bdp.BDParams(0, 0)


def test_excursion_pmf_anchor_and_mean():
    assert bdp.excursion_pmf(0, 1, 2) == pytest.approx(2 / 3)
    k = np.arange(2000)
    p = bdp.excursion_pmf(k, 1, 2)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert (k * p).sum() == pytest.approx(bdp.excursion_mean(1, 2), rel=1e-9)


def test_excursion_pmf_needs_subcritical():
    with pytest.raises(ValueError):
        bdp.excursion_pmf(1, 2, 1)


@given(st.floats(0.05, 0.95))
def test_excursion_mean_matches_lambda(ratio):
    b, d = ratio, 1.0
    rho = b / (b + d)
    assert bdp.excursion_mean(b, d) == pytest.approx(rho / (1 - 2 * rho))


def test_single_and_batch_excursions_agree(rng):
    singles = [bdp.simulate_excursion(1, 2, rng)[0] for _ in range(4000)]
    batch, life = bdp.simulate_excursions(1, 2, rng, 4000)
    assert np.isnan(life).all()
    assert abs(np.mean(singles) - np.mean(batch)) < 0.15
    _, t = bdp.simulate_excursion(1, 2, rng, track_lifetime=True)
    assert t > 0


def test_extinction_forms_agree():
    t = np.linspace(0, 10, 501)
    for B, D in ((1, 2), (2, 1), (0.3, 5)):
        assert np.max(np.abs(bdp.extinction_cdf(t, B, D) - bdp.extinction_cdf_standard(t, B, D))) < 1e-12


def test_extinction_limits():
    assert bdp.extinction_cdf(0.0, 1, 2) == 0.0
    assert bdp.extinction_cdf(60.0, 1, 2) == pytest.approx(1.0)
    assert bdp.extinction_cdf(60.0, 2, 1) == pytest.approx(0.5)
    assert bdp.extinction_cdf(1.0, 1, 2) == pytest.approx(0.7746, abs=1e-4)
    with pytest.raises(ValueError):
        bdp.extinction_cdf(1.0, 1, 1)


def test_two_segment_reduces_to_single_segment():
    one = bdp.extinction_cdf(1.7, 1, 2)
    assert bdp.two_segment_extinction(0.7, 1.0, (1, 2), (1, 2)) == pytest.approx(one, rel=1e-12)
    assert bdp.two_segment_extinction(0.7, 0.0, (1, 2), (3, 1)) == pytest.approx(bdp.extinction_cdf(0.7, 1, 2))


def test_survival_probability():
    assert bdp.survival_probability(2, 1) == 0.5
    assert bdp.survival_probability(1, 2) == 0.0
    with pytest.raises(ValueError):
        bdp.survival_probability(0, 1)


def test_W_law_moments(rng):
    w = bdp.sample_W(3, 1, rng, 50_000)
    assert np.mean(w == 0) == pytest.approx(1 / 3, abs=0.01)
    assert w.mean() == pytest.approx(1.0, abs=0.03)
    assert isinstance(bdp.sample_W(3, 1, rng), float)
    with pytest.raises(ValueError):
        bdp.sample_W(1, 1, rng)


def test_growth_exponent(valley):
    m, s = valley
    # f_L = (1, -0.5), lambda = 5: one full period gives 5 * 0.5
    assert bdp.growth_exponent(m, s, 2, 0.0, 10.0) == pytest.approx(2.5)
    assert bdp.growth_exponent(m, s, 2, 0.0, 2.5) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        bdp.growth_exponent(m, s, 2, 1.0, 0.0)


def test_excursion_mean_continuity():
    eps = 0.01
    assert abs(bdp.excursion_mean(1, 2) - bdp.excursion_mean(1.01, 2.01)) <= 2.1 * eps
    # sweep the whole eps-box around (1, 2): worst direction is (+eps, -eps)
    grid = np.linspace(-eps, eps, 41)
    worst = max(abs(bdp.excursion_mean(1 + db, 2 + dd) - 1.0) for db in grid for dd in grid) / eps
    assert 2.9 < worst <= 3.1


def test_catalan_recurrence():
    rho = 1 / 3
    k = np.arange(0, 300)
    p = bdp.excursion_pmf(k, 1, 2)
    ratio = np.log(p[1:]) - np.log(p[:-1])
    expected = np.log(rho * (1 - rho) * (2 * k[:-1] + 2) * (2 * k[:-1] + 1) / ((k[:-1] + 1) * (k[:-1] + 2)))
    assert np.allclose(ratio, expected, atol=1e-10)


@pytest.mark.parametrize("rho", [0.1, 0.25, 1 / 3, 0.4])
def test_pmf_tail_beyond_500(rho):
    # terms decay like (4 rho (1 - rho))^k k^(-3/2); by rho = 0.45 the ratio is 0.99
    # and the mass beyond 500 is still ~1e-5, so the bound is only asserted up to 0.4
    tail = bdp.excursion_pmf(np.arange(501, 20_000), rho, 1 - rho).sum()
    assert tail < 1e-10


def test_excursion_d_large_gives_no_births(rng):
    births, _ = bdp.simulate_excursions(1e-9, 1.0, rng, 1000)
    assert births.max() == 0


def test_extinction_cdf_monotone():
    t = np.linspace(0, 30, 3001)
    for B, D in ((1, 2), (2, 1), (0.2, 0.3)):
        assert np.all(np.diff(bdp.extinction_cdf(t, B, D)) >= -1e-15)


def test_time_dependent_growth_envelope():
    """Started from K^(eps/2) individuals at a time in the arrival set, the
    linear process stays within a constant factor of e^{g(t)} Z(0) up to
    eps ln K, except with probability O(1/Z(0))."""
    from fitvalley import engine
    from fitvalley.model import ModelSpec, PhaseSpec
    from fitvalley.theory import fitness_integral

    c = [[1.0, 0.0], [0.0, 1.0]]
    m = ModelSpec(1, [PhaseSpec(1.0, [2.0, 1.0], [1.0, 1.0], c), PhaseSpec(1.0, [1.0, 1.0], [1.5, 1.0], c)])
    s = ScalingSpec(10**9, 1.5, 2.0)  # K only sets a negligible competition
    K_nominal, eps = 1e8, 0.5
    z0 = math.ceil(K_nominal ** (eps / 2))
    horizon = eps * math.log(K_nominal)
    cm = engine.compile_model(m, s, 0.0)
    rng = np.random.default_rng(8)
    inside = 0
    runs = 400
    for _ in range(runs):
        r = engine.run(engine.make_state(m, s, [z0, 0], 0.0), m, s, engine.StopSpec(max_time=horizon), rng,
                       sample_stride=0.1, compiled=cm)
        # growth rate b - d per phase, integrated in simulation time
        g = np.array([s.lambda_k * fitness_integral([1.0, -0.5], m.durations, 0.0, t / s.lambda_k)
                      for t in r.observables.times])
        ratio = r.observables.counts[:, 0] / (np.exp(g) * z0)
        inside += bool(np.all((ratio > 0.5) & (ratio < 2.0)))
    assert inside / runs >= 1 - 5 / z0
