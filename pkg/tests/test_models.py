import math

import numpy as np
import pytest

from condpred import ConfigError, DomainError, PairedSample, make_model, sample_joint, true_conditional_density
from condpred.quadrature import integrate


def test_gamma_exp_joint_density_value(gamma_exp):
    assert float(gamma_exp.joint_log_density(1.0, 1.0, 0.0)) == pytest.approx(-1.0, abs=1e-15)


def test_two_coin_case_table(two_coin):
    assert math.exp(float(two_coin.joint_log_density(0.5, 1, 1))) == pytest.approx(0.25, abs=1e-15)
    for theta in (0.1, 0.37, 0.9):
        f00 = float(two_coin.joint_log_density(theta, 0, 0))
        f10 = float(two_coin.joint_log_density(theta, 1, 0))
        assert f00 == f10
        assert math.exp(float(two_coin.joint_log_density(theta, 0, 1))) == pytest.approx((1 - theta) ** 2)


def test_binormal_joint_density_matches_scipy(binormal):
    from scipy import stats

    cov = np.array([[1.0, 0.5], [0.5, 1.0]])
    for theta, x1, x2 in [(0.0, 0.0, 0.0), (1.3, -0.4, 2.2), (-2.0, -1.0, -3.5)]:
        expected = stats.multivariate_normal.logpdf([x1, x2], mean=[theta, theta], cov=cov)
        assert float(binormal.joint_log_density(theta, x1, x2)) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize(
    "kind, params, fragment",
    [
        ("gamma-exp", {"lambda": 0.0}, "lambda"),
        ("gamma-exp", {"lambda": -1.0}, "lambda > 0"),
        ("binormal", {"rho": 1.0}, "|rho| < 1"),
        ("binormal", {"tau": 0.0}, "tau > 0"),
        ("binormal", {"sigma": -2.0}, "sigma > 0"),
        ("two-coin", {"lambda": 1.0}, "not a hyperparameter"),
    ],
)
def test_invalid_hyperparameters_name_the_constraint(kind, params, fragment):
    with pytest.raises(ConfigError) as info:
        make_model(kind, params)
    assert any(fragment in v for v in info.value.violations)


def test_unknown_kind():
    with pytest.raises(ConfigError, match="unknown-model"):
        make_model("unknown-model")


def test_true_conditional_values(gamma_exp, two_coin):
    assert true_conditional_density(gamma_exp, 2.0, 3.0, 0.0) == pytest.approx(6.0, rel=1e-15)
    assert true_conditional_density(gamma_exp, 2.0, 3.0, 0.5) == pytest.approx(6.0 * math.exp(-3.0), rel=1e-14)
    assert true_conditional_density(two_coin, 0.3, 1, 1) == pytest.approx(0.3, abs=1e-15)
    assert true_conditional_density(two_coin, 0.3, 0, 1) == pytest.approx(0.7, abs=1e-15)


def test_true_conditional_rejects_zero_marginal(gamma_exp, two_coin):
    with pytest.raises(DomainError, match="x1=-1.0"):
        true_conditional_density(gamma_exp, 1.0, -1.0, 0.5)
    with pytest.raises(DomainError):
        true_conditional_density(two_coin, 0.5, 2, 0)


@pytest.mark.parametrize("kind", ["gamma-exp", "binormal"])
@pytest.mark.parametrize("theta_q", [0.05, 0.5, 0.95])
@pytest.mark.parametrize("x1", [0.1, 1.0, 4.0])
def test_normalization_continuous(models, kind, theta_q, x1):
    model = models[kind]
    theta = float(model.prior_quantile(theta_q))
    center, scale = model.x2_hint(theta, x1)
    value, _ = integrate(
        lambda t: np.exp(model.joint_log_density(theta, x1, t)),
        model.x2_support.lower, model.x2_support.upper, center=center, scale=scale, abstol=1e-13,
    )
    marginal = math.exp(float(model.x1_marginal_log_density(theta, x1)))
    assert value == pytest.approx(marginal, rel=1e-8)


@pytest.mark.parametrize("theta", [0.01, 0.3, 0.5, 0.99])
@pytest.mark.parametrize("k1", [0, 1])
def test_normalization_discrete(two_coin, theta, k1):
    total = sum(math.exp(float(two_coin.joint_log_density(theta, k1, k2))) for k2 in (0, 1))
    assert total == pytest.approx(math.exp(float(two_coin.x1_marginal_log_density(theta, k1))), rel=1e-15)


@pytest.mark.parametrize("kind", ["gamma-exp", "two-coin", "binormal"])
def test_prior_integrates_to_one(models, kind):
    model = models[kind]
    lo, hi = model.theta_support.lower, model.theta_support.upper
    value, _ = integrate(lambda th: np.exp(model.prior_log_density(th)), lo, hi,
                         center=float(model.prior_quantile(0.5)), scale=1.0, abstol=1e-12)
    assert value == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind", ["gamma-exp", "two-coin", "binormal"])
def test_sampler_draws_lie_in_support(models, kind):
    model = models[kind]
    draw = sample_joint(model, 500, 11)
    assert model.theta_support.contains(draw.theta)
    assert np.all(model.x1_support.contains(draw.sample.x1))
    assert np.all(model.x2_support.contains(draw.sample.x2))


def test_sample_joint_is_deterministic(models):
    for model in models.values():
        assert sample_joint(model, 25, 123) == sample_joint(model, 25, 123)
        assert sample_joint(model, 25, 123) != sample_joint(model, 25, 124)


def test_sample_joint_empty(gamma_exp):
    draw = sample_joint(gamma_exp, 0, 5)
    assert draw.sample.n == 0 and draw.sample.pairs == []
    assert len(draw.fresh_pair) == 2


def test_two_coin_prior_mean_of_fresh_x1(two_coin):
    draws = np.array([sample_joint(two_coin, 0, s).fresh_pair[0] for s in range(100_000)])
    se = math.sqrt(0.25 / draws.size)
    assert abs(draws.mean() - 0.5) < 5 * se


def test_two_coin_sampler_frequencies(two_coin):
    theta = 0.3
    rng = np.random.default_rng(2022)
    k1, k2 = two_coin.joint_sampler(theta, rng, 100_000)
    for a in (0, 1):
        for b in (0, 1):
            p = math.exp(float(two_coin.joint_log_density(theta, a, b)))
            freq = np.mean((k1 == a) & (k2 == b))
            assert abs(freq - p) < 5 * math.sqrt(p * (1 - p) / k1.size)


def test_paired_sample_basics():
    s = PairedSample.from_pairs([(1, 2), (3, 4)])
    assert s.n == 2 and s.pairs == [(1.0, 2.0), (3.0, 4.0)]
    assert s.prefix(1) == PairedSample.from_pairs([(1, 2)])
    assert s.append(5, 6).n == 3
    with pytest.raises(ValueError):
        s.x1[0] = 9.0
