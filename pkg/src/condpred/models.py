"""Parametric joint models for (X1, X2) with a prior on a scalar theta.

Three models are registered:

``gamma-exp``
    X1 ~ Exp(rate theta), X2 | X1=x1 ~ Exp(rate theta*x1), theta ~ Exp(rate lambda).
    Gamma laws use the shape-scale convention, so G(1, 1/lambda) is Exp(rate lambda).
``two-coin``
    X1 ~ Bernoulli(theta); X2 | X1=0 ~ Bernoulli(1-theta), X2 | X1=1 ~ Bernoulli(theta);
    theta ~ Uniform(0, 1).
``binormal``
    (X1, X2) ~ N2((theta, theta), sigma^2 [[1, rho], [rho, 1]]), theta ~ N(mu, tau^2).

All densities are exposed on the log scale and broadcast over numpy arrays.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from condpred.density import ConditionalDensityEstimate, Support
from condpred.errors import ConfigError, DomainError

MODEL_KINDS = ("gamma-exp", "two-coin", "binormal")

DEFAULT_HYPERPARAMS = {
    "gamma-exp": {"lambda": 1.0},
    "two-coin": {},
    "binormal": {"mu": 0.0, "tau": 1.0, "sigma": 1.0, "rho": 0.5},
}


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A Bayesian model for a pair (X1, X2) with scalar parameter theta.

    ``theta_transform`` names the axis on which the parameter grid is uniform
    ("log", "logit" or "identity"); the grid spans the prior's ``grid_tail`` and
    ``1 - grid_tail`` quantiles. ``x2_hint(theta, x1)`` returns a
    (center, scale) pair for the conditional law of X2, used to place quadrature.
    Samplers take a ``numpy.random.Generator``.
    """

    name: str
    hyperparams: dict
    prior_log_density: Callable
    prior_sampler: Callable
    prior_quantile: Callable
    joint_log_density: Callable
    x1_marginal_log_density: Callable
    joint_sampler: Callable
    x1_support: Support
    x2_support: Support
    theta_support: Support
    theta_transform: str
    x2_hint: Callable = field(repr=False)
    grid_tail: float = 1e-10

    @property
    def kind(self) -> str:
        return self.name

    def conditional_log_density(self, theta, x1, t):
        with np.errstate(invalid="ignore"):
            return self.joint_log_density(theta, x1, t) - self.x1_marginal_log_density(theta, x1)


class PairedSample:
    """An ordered sample of n pairs (x1_i, x2_i), stored column-wise."""

    __slots__ = ("x1", "x2")

    def __init__(self, x1=(), x2=()):
        x1 = np.array(x1, dtype=float).reshape(-1)
        x2 = np.array(x2, dtype=float).reshape(-1)
        if x1.shape != x2.shape:
            raise ValueError("x1 and x2 must have the same length")
        x1.setflags(write=False)
        x2.setflags(write=False)
        self.x1 = x1
        self.x2 = x2

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        if not pairs:
            return cls()
        x1, x2 = zip(*pairs)
        return cls(x1, x2)

    @property
    def n(self) -> int:
        return int(self.x1.size)

    @property
    def pairs(self) -> list:
        return list(zip(self.x1.tolist(), self.x2.tolist()))

    def __len__(self):
        return self.n

    def prefix(self, n: int) -> "PairedSample":
        return PairedSample(self.x1[:n], self.x2[:n])

    def append(self, x1, x2) -> "PairedSample":
        return PairedSample(np.append(self.x1, x1), np.append(self.x2, x2))

    def __eq__(self, other):
        if not isinstance(other, PairedSample):
            return NotImplemented
        return np.array_equal(self.x1, other.x1) and np.array_equal(self.x2, other.x2)

    def __repr__(self):
        return f"PairedSample(n={self.n})"


@dataclass(frozen=True, eq=False)
class JointDraw:
    """One draw (theta, sample, fresh pair) from the joint law of parameter and data."""

    theta: float
    sample: PairedSample
    fresh_pair: tuple

    def __eq__(self, other):
        if not isinstance(other, JointDraw):
            return NotImplemented
        return (
            self.theta == other.theta
            and self.sample == other.sample
            and self.fresh_pair == other.fresh_pair
        )


def _check_hyperparams(kind, given):
    if kind not in MODEL_KINDS:
        raise ConfigError(
            f"model kind {kind!r} is not one of {', '.join(MODEL_KINDS)}",
            [f"model.kind: unknown model kind {kind!r} (expected one of {', '.join(MODEL_KINDS)})"],
        )
    params = dict(DEFAULT_HYPERPARAMS[kind])
    problems = []
    for key, value in given.items():
        if key not in params:
            problems.append(f"model.hyperparams.{key}: not a hyperparameter of {kind}")
            continue
        try:
            params[key] = float(value)
        except (TypeError, ValueError):
            problems.append(f"model.hyperparams.{key}: expected a real number, got {value!r}")
    for key, value in params.items():
        if not np.isfinite(value):
            problems.append(f"model.hyperparams.{key}: must be finite")
    if kind == "gamma-exp" and not params["lambda"] > 0:
        problems.append("model.hyperparams.lambda: must satisfy lambda > 0")
    if kind == "binormal":
        for key in ("tau", "sigma"):
            if not params[key] > 0:
                problems.append(f"model.hyperparams.{key}: must satisfy {key} > 0")
        if not abs(params["rho"]) < 1:
            problems.append("model.hyperparams.rho: must satisfy |rho| < 1")
    if problems:
        raise ConfigError("; ".join(problems), problems)
    return params


def make_model(kind: str, hyperparams=None, **kwargs) -> ModelSpec:
    """Build one of the registered models.

    Hyperparameters may be passed as a mapping or as keywords; missing ones take
    the defaults in ``DEFAULT_HYPERPARAMS``.
    """
    given = dict(hyperparams or {})
    given.update(kwargs)
    params = _check_hyperparams(kind, given)
    if kind == "gamma-exp":
        return _gamma_exp(params)
    if kind == "two-coin":
        return _two_coin(params)
    return _binormal(params)


def _gamma_exp(params):
    lam = params["lambda"]

    def prior_log_density(theta):
        theta = np.asarray(theta, dtype=float)
        with np.errstate(invalid="ignore"):
            return np.where(theta > 0, np.log(lam) - lam * theta, -np.inf)

    def prior_sampler(rng):
        return float(rng.standard_exponential() / lam)

    def prior_quantile(p):
        return -np.log1p(-np.asarray(p, dtype=float)) / lam

    def joint_log_density(theta, x1, x2):
        theta, x1, x2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (theta, x1, x2)))
        ok = (theta > 0) & (x1 > 0) & (x2 >= 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 2.0 * np.log(theta) + np.log(x1) - theta * x1 * (1.0 + x2)
        return np.where(ok, val, -np.inf)

    def x1_marginal_log_density(theta, x1):
        theta, x1 = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(x1, dtype=float))
        ok = (theta > 0) & (x1 > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.log(theta) - theta * x1
        return np.where(ok, val, -np.inf)

    def joint_sampler(theta, rng, size):
        x1 = rng.standard_exponential(size) / theta
        x2 = rng.standard_exponential(size) / (theta * x1)
        return x1, x2

    def x2_hint(theta, x1):
        return 0.0, 1.0 / (theta * x1)

    return ModelSpec(
        name="gamma-exp",
        hyperparams=params,
        prior_log_density=prior_log_density,
        prior_sampler=prior_sampler,
        prior_quantile=prior_quantile,
        joint_log_density=joint_log_density,
        x1_marginal_log_density=x1_marginal_log_density,
        joint_sampler=joint_sampler,
        x1_support=Support.interval(0.0, np.inf),
        x2_support=Support.interval(0.0, np.inf),
        theta_support=Support.interval(0.0, np.inf),
        theta_transform="log",
        x2_hint=x2_hint,
    )


def _two_coin(params):
    def prior_log_density(theta):
        theta = np.asarray(theta, dtype=float)
        return np.where((theta > 0) & (theta < 1), 0.0, -np.inf)

    def prior_sampler(rng):
        theta = 0.0
        while theta == 0.0:
            theta = float(rng.random())
        return theta

    def prior_quantile(p):
        return np.asarray(p, dtype=float)

    def joint_log_density(theta, k1, k2):
        theta, k1, k2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (theta, k1, k2)))
        ok = (theta > 0) & (theta < 1) & np.isin(k1, (0.0, 1.0)) & np.isin(k2, (0.0, 1.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            log_t = np.log(theta)
            log_1mt = np.log1p(-theta)
        # theta(1-theta) if k2=0; (1-theta)^2 if (0,1); theta^2 if (1,1)
        val = np.where(k2 == 0, log_t + log_1mt, np.where(k1 == 0, 2.0 * log_1mt, 2.0 * log_t))
        return np.where(ok, val, -np.inf)

    def x1_marginal_log_density(theta, k1):
        theta, k1 = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(k1, dtype=float))
        ok = (theta > 0) & (theta < 1) & np.isin(k1, (0.0, 1.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(k1 == 1, np.log(theta), np.log1p(-theta))
        return np.where(ok, val, -np.inf)

    def joint_sampler(theta, rng, size):
        k1 = (rng.random(size) < theta).astype(float)
        p2 = np.where(k1 == 1, theta, 1.0 - theta)
        k2 = (rng.random(size) < p2).astype(float)
        return k1, k2

    def x2_hint(theta, k1):
        return 0.5, 1.0

    return ModelSpec(
        name="two-coin",
        hyperparams=params,
        prior_log_density=prior_log_density,
        prior_sampler=prior_sampler,
        prior_quantile=prior_quantile,
        joint_log_density=joint_log_density,
        x1_marginal_log_density=x1_marginal_log_density,
        joint_sampler=joint_sampler,
        x1_support=Support.finite((0, 1)),
        x2_support=Support.finite((0, 1)),
        theta_support=Support.interval(0.0, 1.0),
        theta_transform="logit",
        x2_hint=x2_hint,
        # Beta(1, b) posteriors put b * tail mass below the lowest node.
        grid_tail=1e-13,
    )


def _binormal(params):
    mu, tau, sigma, rho = params["mu"], params["tau"], params["sigma"], params["rho"]
    one_m_rho2 = 1.0 - rho * rho
    log_norm2 = np.log(2.0 * np.pi * sigma * sigma * np.sqrt(one_m_rho2))
    cond_sd = sigma * np.sqrt(one_m_rho2)

    def prior_log_density(theta):
        return stats.norm.logpdf(np.asarray(theta, dtype=float), loc=mu, scale=tau)

    def prior_sampler(rng):
        return float(mu + tau * rng.standard_normal())

    def prior_quantile(p):
        return stats.norm.ppf(np.asarray(p, dtype=float), loc=mu, scale=tau)

    def joint_log_density(theta, x1, x2):
        theta, x1, x2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (theta, x1, x2)))
        z1 = (x1 - theta) / sigma
        z2 = (x2 - theta) / sigma
        return -log_norm2 - (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (2.0 * one_m_rho2)

    def x1_marginal_log_density(theta, x1):
        return stats.norm.logpdf(np.asarray(x1, dtype=float), loc=np.asarray(theta, dtype=float), scale=sigma)

    def joint_sampler(theta, rng, size):
        z1 = rng.standard_normal(size)
        z2 = rng.standard_normal(size)
        x1 = theta + sigma * z1
        x2 = theta + sigma * (rho * z1 + np.sqrt(one_m_rho2) * z2)
        return x1, x2

    def x2_hint(theta, x1):
        return (1.0 - rho) * theta + rho * x1, cond_sd

    return ModelSpec(
        name="binormal",
        hyperparams=params,
        prior_log_density=prior_log_density,
        prior_sampler=prior_sampler,
        prior_quantile=prior_quantile,
        joint_log_density=joint_log_density,
        x1_marginal_log_density=x1_marginal_log_density,
        joint_sampler=joint_sampler,
        x1_support=Support.interval(),
        x2_support=Support.interval(),
        theta_support=Support.interval(),
        theta_transform="identity",
        x2_hint=x2_hint,
    )


def true_conditional_density(model: ModelSpec, theta: float, x1: float, t):
    """f_theta(t | x1) = f_theta(x1, t) / f_theta,X1(x1)."""
    log_marginal = float(model.x1_marginal_log_density(theta, x1))
    if not np.isfinite(log_marginal):
        raise DomainError(
            f"{model.name}: marginal density of X1 vanishes at (theta={theta!r}, x1={x1!r})"
        )
    arr = np.asarray(t, dtype=float)
    out = np.exp(model.joint_log_density(theta, x1, arr) - log_marginal)
    return float(out) if out.ndim == 0 else out


def true_conditional(model: ModelSpec, theta: float, x1: float, source: str = "truth") -> ConditionalDensityEstimate:
    """The sampling conditional density of X2 given X1=x1 as an evaluable estimate."""
    if not np.isfinite(float(model.x1_marginal_log_density(theta, x1))):
        raise DomainError(
            f"{model.name}: marginal density of X1 vanishes at (theta={theta!r}, x1={x1!r})"
        )
    center, scale = model.x2_hint(theta, x1)
    return ConditionalDensityEstimate(
        evaluator=lambda t: true_conditional_density(model, theta, x1, t),
        support=model.x2_support,
        provenance={"source": source, "model": model.name, "theta": float(theta), "x1": float(x1)},
        center=float(center),
        scale=float(scale),
    )


def sample_joint(model: ModelSpec, n: int, seed: int) -> JointDraw:
    """Draw theta from the prior, then n i.i.d. pairs and one fresh pair given theta."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.default_rng(seed)
    theta = model.prior_sampler(rng)
    x1, x2 = model.joint_sampler(theta, rng, n)
    f1, f2 = model.joint_sampler(theta, rng, 1)
    return JointDraw(theta=theta, sample=PairedSample(x1, x2), fresh_pair=(float(f1[0]), float(f2[0])))
