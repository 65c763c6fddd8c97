import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from condpred import FormulaInconsistencyError, PairedSample, sample_joint
from condpred.closed_form import (
    SufficientStats,
    binormal_conjugate_estimate,
    binormal_estimate,
    binormal_printed_parameters,
    closed_form_conditional,
    gammaexp_estimate,
    sufficient_stats,
    twocoin_estimate,
    twocoin_printed_estimate,
)
from condpred.quadrature import integrate

from oracles import binormal_quadrature, gammaexp_quadrature, twocoin_exact


def test_sufficient_stats_examples():
    g = sufficient_stats("gamma-exp", PairedSample.from_pairs([(1, 1), (2, 0)]))
    assert (g.s, g.n) == (4.0, 2)
    c = sufficient_stats("two-coin", PairedSample.from_pairs([(0, 1), (1, 0), (1, 1)]))
    assert (c.n_plus0, c.n01, c.n11, c.n) == (1, 1, 1, 3)
    for kind in ("gamma-exp", "two-coin", "binormal"):
        assert sufficient_stats(kind, PairedSample()) == SufficientStats(kind)


@pytest.mark.parametrize("kind", ["gamma-exp", "two-coin", "binormal"])
def test_sequential_update_matches_batch(models, kind):
    sample = sample_joint(models[kind], 30, 9).sample
    stats = SufficientStats(kind)
    for x1, x2 in sample.pairs:
        stats = stats.add(x1, x2)
    batch = sufficient_stats(kind, sample)
    assert stats.n == batch.n
    assert stats.s == pytest.approx(batch.s, rel=1e-13)
    assert (stats.n_plus0, stats.n01, stats.n11) == (batch.n_plus0, batch.n01, batch.n11)


def test_gammaexp_reference_values():
    empty = SufficientStats("gamma-exp")
    # oracle: theta-quadrature, frozen values 1 and 8/27
    assert gammaexp_quadrature(1.0, [], 1.0, 0.0) == pytest.approx(1.0, rel=1e-10)
    assert gammaexp_quadrature(1.0, [], 1.0, 1.0) == pytest.approx(8 / 27, rel=1e-10)
    assert gammaexp_estimate(1.0, empty, 1.0, 0.0) == pytest.approx(1.0, abs=1e-6)
    assert gammaexp_estimate(1.0, empty, 1.0, 1.0) == pytest.approx(0.296296, abs=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_gammaexp_matches_quadrature_oracle(gamma_exp, seed):
    draw = sample_joint(gamma_exp, 3 * seed, seed)
    stats = sufficient_stats("gamma-exp", draw.sample)
    x1 = draw.fresh_pair[0]
    for x2 in (0.0, 0.3, 2.0):
        expected = gammaexp_quadrature(1.0, draw.sample.pairs, x1, x2)
        assert gammaexp_estimate(1.0, stats, x1, x2) == pytest.approx(expected, rel=1e-6)


def test_gammaexp_large_n_is_finite():
    stats = SufficientStats("gamma-exp", n=100_000, s=150_000.0)
    value = gammaexp_estimate(1.0, stats, 1.2, 0.4)
    assert np.isfinite(value) and value > 0


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(0.05, 20), n=st.integers(0, 300), s=st.floats(0, 500), x1=st.floats(1e-3, 50))
def test_gammaexp_normalizes(lam, n, s, x1):
    stats = SufficientStats("gamma-exp", n=n, s=s)
    a = lam + x1 + s
    value, _ = integrate(lambda t: gammaexp_estimate(lam, stats, x1, t), 0.0, np.inf,
                         scale=a / ((2 * n + 2) * x1), abstol=1e-10)
    assert value == pytest.approx(1.0, abs=1e-8)


def test_twocoin_reference_values():
    empty = SufficientStats("two-coin")
    assert twocoin_exact([], 0, 0) == pytest.approx(1 / 3, abs=0)
    assert twocoin_estimate(empty, 0, 0) == 1 / 3
    assert twocoin_estimate(empty, 0, 1) == 2 / 3
    one = sufficient_stats("two-coin", PairedSample.from_pairs([(0, 1)]))
    assert twocoin_estimate(one, 0, 1) == pytest.approx(4 / 5, abs=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_twocoin_matches_exact_integration(two_coin, seed):
    sample = sample_joint(two_coin, 5 * seed, seed).sample
    stats = sufficient_stats("two-coin", sample)
    for k1 in (0, 1):
        for k2 in (0, 1):
            exact = twocoin_exact([(int(a), int(b)) for a, b in sample.pairs], k1, k2)
            assert twocoin_estimate(stats, k1, k2) == float(exact)


@settings(max_examples=100, deadline=None)
@given(np0=st.integers(0, 60), n01=st.integers(0, 60), n11=st.integers(0, 60), k1=st.sampled_from([0, 1]))
def test_twocoin_normalizes_exactly(np0, n01, n11, k1):
    stats = SufficientStats("two-coin", n=np0 + n01 + n11, n_plus0=np0, n01=n01, n11=n11)
    assert twocoin_estimate(stats, k1, 0) + twocoin_estimate(stats, k1, 1) == 1.0
    assert twocoin_printed_estimate(stats, k1, 0) + twocoin_printed_estimate(stats, k1, 1) == pytest.approx(1.0, abs=1e-15)


def test_twocoin_printed_formula_differs_at_n0():
    empty = SufficientStats("two-coin")
    assert twocoin_printed_estimate(empty, 0, 0) == pytest.approx(2 / 3, abs=1e-15)
    assert abs(twocoin_printed_estimate(empty, 0, 0) - twocoin_estimate(empty, 0, 0)) == pytest.approx(1 / 3, abs=1e-15)


def test_binormal_conjugate_matches_quadrature(binormal):
    for seed in range(3):
        draw = sample_joint(binormal, 4 * seed, seed)
        stats = sufficient_stats("binormal", draw.sample)
        x1 = draw.fresh_pair[0]
        for x2 in (-1.0, 0.2, 1.7):
            expected = binormal_quadrature(0.0, 1.0, 1.0, 0.5, draw.sample.pairs, x1, x2)
            assert binormal_conjugate_estimate(0.0, 1.0, 1.0, 0.5, stats, x1, x2) == pytest.approx(expected, rel=1e-8)


def test_binormal_printed_is_a_normal_density():
    stats = SufficientStats("binormal", n=3, s=1.4)
    rho1, s1, m1 = binormal_printed_parameters(0.2, 1.5, 0.8, 0.3, stats)
    mode = (1 - rho1) * m1 + rho1 * 0.7
    value, _ = integrate(lambda t: binormal_estimate(0.2, 1.5, 0.8, 0.3, stats, 0.7, t), -np.inf, np.inf,
                         center=mode, scale=1.0, abstol=1e-11)
    assert value == pytest.approx(1.0, abs=1e-9)
    grid = np.linspace(mode - 2, mode + 2, 4001)
    assert grid[np.argmax(binormal_estimate(0.2, 1.5, 0.8, 0.3, stats, 0.7, grid))] == pytest.approx(mode, abs=1e-3)


def test_binormal_printed_disagrees_with_conjugate_algebra():
    # Reference point mu=0, tau=1, sigma=1, rho=0.5, n=0, x1=x2=0: conjugate answer N(0, 0.875).
    empty = SufficientStats("binormal")
    conjugate = binormal_conjugate_estimate(0.0, 1.0, 1.0, 0.5, empty, 0.0, 0.0)
    assert conjugate == pytest.approx(1 / math.sqrt(2 * math.pi * 0.875), rel=1e-14)
    printed = binormal_estimate(0.0, 1.0, 1.0, 0.5, empty, 0.0, 0.0)
    assert abs(printed / conjugate - 1) > 1e-4


def test_binormal_printed_negative_variance_is_an_error():
    # rho=-0.9, sigma/tau=0.5: a_n = 0.45 < (1-rho)/(1+rho) = 19 and |rho1| < 1
    with pytest.raises(FormulaInconsistencyError, match="variance"):
        binormal_estimate(0.0, 1.0, 0.5, -0.9, SufficientStats("binormal"), 0.0, 0.0)


@pytest.mark.parametrize("kind", ["gamma-exp", "two-coin", "binormal"])
def test_closed_form_conditional_normalizes(models, kind):
    model = models[kind]
    draw = sample_joint(model, 12, 4)
    est = closed_form_conditional(model, draw.sample, draw.fresh_pair[0])
    if model.x2_support.is_discrete:
        assert est.total_mass() == 1.0
    else:
        assert est.total_mass(abstol=1e-10) == pytest.approx(1.0, abs=1e-8)
