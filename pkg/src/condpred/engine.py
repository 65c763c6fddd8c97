"""Grid posterior, posterior predictive conditional density and L1/TV losses.

The parameter axis is discretized once per model: nodes are uniform on a
transformed axis (log for a positive parameter, logit for one in (0, 1),
identity for a real one) between extreme prior quantiles, with trapezoid
weights carried back to the parameter scale. Every integrand that lands on
this grid decays smoothly at both ends of the transformed axis, which is where
the trapezoid rule converges geometrically.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.special import expit, logsumexp

from condpred.density import ConditionalDensityEstimate, Support
from condpred.errors import ConfigError, DegeneratePosteriorError, DomainError, SupportMismatchError
from condpred.models import ModelSpec, PairedSample
from condpred.quadrature import integrate

__all__ = [
    "ConditionalDensityEstimate",
    "EngineSettings",
    "PosteriorGrid",
    "Support",
    "ThetaGrid",
    "build_grid",
    "l1_distance",
    "mixture_conditional",
    "posterior_grid",
    "predictive_conditional",
    "tv_distance",
]

PRIOR_MASS_TOL = 1e-6


@dataclass(frozen=True)
class EngineSettings:
    """Numerical settings shared by every experiment.

    ``prune_log_mass``: nodes whose x1-reweighted posterior mass is below
    exp(-prune_log_mass) relative to the largest are skipped when evaluating
    the predictive numerator (None disables pruning).
    """

    resolution: int = 4096
    l1_abstol: float = 1e-7
    prune_log_mass: float | None = 60.0

    def validate(self):
        problems = []
        if not isinstance(self.resolution, int) or self.resolution < 16:
            problems.append("engine.resolution: must be an integer >= 16")
        if not (isinstance(self.l1_abstol, (int, float)) and self.l1_abstol > 0):
            problems.append("engine.l1_abstol: must be > 0")
        if self.prune_log_mass is not None and not self.prune_log_mass >= 30:
            problems.append("engine.prune_log_mass: must be >= 30 or null")
        return problems

    def fingerprint(self, model: ModelSpec | None = None) -> str:
        payload = {"engine": asdict(self)}
        if model is not None:
            payload["model"] = {"kind": model.name, "hyperparams": model.hyperparams}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class ThetaGrid:
    nodes: np.ndarray
    weights: np.ndarray
    transform: str

    def __len__(self):
        return int(self.nodes.size)


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    """Normalized posterior log-masses on a ThetaGrid, conditioning on n pairs."""

    grid: ThetaGrid
    log_weights: np.ndarray
    n: int

    @property
    def masses(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def mean(self) -> float:
        return float(np.sum(self.masses * self.grid.nodes))


def _logsumexp_columns(block):
    top = block.max(axis=0)
    safe = np.where(np.isfinite(top), top, 0.0)
    return np.log(np.exp(block - safe).sum(axis=0)) + safe


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def build_grid(model: ModelSpec, resolution: int = 4096) -> ThetaGrid:
    if not isinstance(resolution, (int, np.integer)) or resolution < 16:
        raise ConfigError(f"grid resolution must be an integer >= 16, got {resolution!r}")
    tail = model.grid_tail
    lo, hi = (float(v) for v in model.prior_quantile(np.array([tail, 1.0 - tail])))
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ConfigError(f"{model.name}: prior quantile range ({lo!r}, {hi!r}) is unusable")

    if model.theta_transform == "log":
        if lo <= 0:
            raise ConfigError(f"{model.name}: log grid needs a positive lower quantile, got {lo!r}")
        u = np.linspace(np.log(lo), np.log(hi), resolution)
        nodes = np.exp(u)
        dtheta = nodes
    elif model.theta_transform == "logit":
        if not (0 < lo and hi < 1):
            raise ConfigError(f"{model.name}: logit grid needs quantiles inside (0, 1)")
        u = np.linspace(np.log(lo) - np.log1p(-lo), np.log(hi) - np.log1p(-hi), resolution)
        nodes = expit(u)
        dtheta = nodes * expit(-u)
    elif model.theta_transform == "identity":
        u = np.linspace(lo, hi, resolution)
        nodes = u
        dtheta = np.ones_like(u)
    else:
        raise ConfigError(f"{model.name}: unknown theta transform {model.theta_transform!r}")

    h = u[1] - u[0]
    weights = h * dtheta
    weights[0] *= 0.5
    weights[-1] *= 0.5
    if np.any(np.diff(nodes) <= 0) or np.any(weights <= 0):
        raise ConfigError(f"{model.name}: grid nodes collapsed at resolution {resolution}")
    mass = float(np.sum(weights * np.exp(model.prior_log_density(nodes))))
    if abs(mass - 1.0) > PRIOR_MASS_TOL:
        raise ConfigError(f"{model.name}: grid captures prior mass {mass!r}, not 1 +/- {PRIOR_MASS_TOL:g}")
    return ThetaGrid(nodes=_frozen(nodes), weights=_frozen(weights), transform=model.theta_transform)


def posterior_grid(model: ModelSpec, grid: ThetaGrid, sample: PairedSample, chunk: int = 256) -> PosteriorGrid:
    """Posterior log-mass per node: log weight + log prior + log likelihood, normalized."""
    theta = grid.nodes[:, None]
    loglik = np.zeros(len(grid))
    for start in range(0, sample.n, chunk):
        x1 = sample.x1[None, start:start + chunk]
        x2 = sample.x2[None, start:start + chunk]
        loglik += model.joint_log_density(theta, x1, x2).sum(axis=1)
    log_mass = np.log(grid.weights) + model.prior_log_density(grid.nodes) + loglik
    with np.errstate(invalid="ignore"):
        total = logsumexp(log_mass)
    if not np.isfinite(total):
        raise DegeneratePosteriorError(
            f"{model.name}: every grid node has zero posterior mass for this sample (n={sample.n})"
        )
    return PosteriorGrid(grid=grid, log_weights=_frozen(log_mass - total), n=sample.n)


def _reweighted(model, posterior, x1):
    terms = posterior.log_weights + model.x1_marginal_log_density(posterior.grid.nodes, x1)
    with np.errstate(invalid="ignore"):
        log_den = logsumexp(terms)
    if not np.isfinite(log_den):
        raise DomainError(f"{model.name}: predictive marginal of X1 vanishes at x1={x1!r}")
    return terms - log_den, float(log_den)


def predictive_conditional(model: ModelSpec, posterior: PosteriorGrid, x1: float,
                           prune_log_mass: float | None = 60.0) -> ConditionalDensityEstimate:
    """Posterior predictive density of X2 given X1=x1.

    evaluator(t) = sum_j m_j f_j(x1, t) / sum_j m_j f_j,X1(x1), with both sums
    formed by log-sum-exp over the grid.
    """
    x1 = float(x1)
    log_rew, log_den = _reweighted(model, posterior, x1)
    theta = posterior.grid.nodes
    log_w = posterior.log_weights
    if prune_log_mass is not None:
        keep = log_rew >= log_rew.max() - prune_log_mass
        theta, log_w = theta[keep], log_w[keep]
    theta_col = theta[:, None]
    log_w_col = log_w[:, None]

    def evaluator(t):
        t = np.asarray(t, dtype=float).reshape(-1)
        out = np.empty(t.size)
        step = max(1, 2_000_000 // theta.size)
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            for s in range(0, t.size, step):
                block = log_w_col + model.joint_log_density(theta_col, x1, t[None, s:s + step])
                out[s:s + step] = np.exp(_logsumexp_columns(block) - log_den)
        return out

    if model.x2_support.is_discrete:
        evaluator = _normalized_on_points(evaluator, model.x2_support.points)

    theta_bar = float(np.sum(np.exp(log_rew) * posterior.grid.nodes))
    center, scale = model.x2_hint(theta_bar, x1)
    return ConditionalDensityEstimate(
        evaluator=evaluator,
        support=model.x2_support,
        provenance={"source": "numeric", "model": model.name, "n": posterior.n, "x1": x1},
        center=float(center),
        scale=float(scale),
    )


def _normalized_on_points(raw, points):
    """Tabulate a probability mass function once and rescale it to sum to 1.

    The numerator sums already add up to the denominator in exact arithmetic;
    the rescaling only removes rounding left over from separate log-sum-exp
    evaluations.
    """
    pts = np.asarray(points, dtype=float)
    probs = raw(pts)
    probs = probs / math.fsum(probs)
    # Move the exact residual onto the largest mass; what remains is below half
    # an ulp of 1, so the correctly rounded total is exactly 1.0.
    top = int(np.argmax(probs))
    probs[top] += float(1 - sum((Fraction(float(p)) for p in probs), Fraction(0)))

    def evaluator(t):
        t = np.asarray(t, dtype=float).reshape(-1)
        out = np.zeros(t.size)
        for p, value in zip(pts, probs):
            out[t == p] = value
        return out

    return evaluator


def reweighted_posterior(model: ModelSpec, posterior: PosteriorGrid, x1: float) -> np.ndarray:
    """Posterior masses reweighted by the X1 marginal at x1 and renormalized."""
    log_rew, _ = _reweighted(model, posterior, float(x1))
    return np.exp(log_rew)


def mixture_conditional(model: ModelSpec, posterior: PosteriorGrid, x1: float) -> ConditionalDensityEstimate:
    """The predictive conditional written as a mixture of the sampling conditionals
    f_theta(t | x1) under the x1-reweighted posterior. Algebraically equal to
    ``predictive_conditional``; evaluated by direct summation over every node."""
    x1 = float(x1)
    mix = reweighted_posterior(model, posterior, x1)
    theta = posterior.grid.nodes[:, None]

    def evaluator(t):
        t = np.asarray(t, dtype=float).reshape(1, -1)
        with np.errstate(invalid="ignore"):
            cond = np.exp(model.conditional_log_density(theta, x1, t))
        return mix @ np.nan_to_num(cond, nan=0.0)

    theta_bar = float(mix @ posterior.grid.nodes)
    center, scale = model.x2_hint(theta_bar, x1)
    return ConditionalDensityEstimate(
        evaluator=evaluator,
        support=model.x2_support,
        provenance={"source": "mixture", "model": model.name, "n": posterior.n, "x1": x1},
        center=float(center),
        scale=float(scale),
    )


def l1_distance(a: ConditionalDensityEstimate, b: ConditionalDensityEstimate, abstol: float = 1e-7) -> float:
    """Integral (or sum) of |a - b| over the shared support, in [0, 2]."""
    if a.support != b.support:
        raise SupportMismatchError(f"cannot compare densities on {a.support} and {b.support}")
    if a.support.is_discrete:
        return float(_exact_differences(a, b)[0])
    center = 0.5 * (a.center + b.center)
    scale = max(a.scale, b.scale, 0.5 * abs(a.center - b.center))
    value, _ = integrate(
        lambda t: np.abs(a.evaluator(t) - b.evaluator(t)),
        a.support.lower, a.support.upper, center=center, scale=scale, abstol=abstol,
    )
    return float(min(max(value, 0.0), 2.0))


def _exact_differences(a, b):
    """(sum |a-b|, sum (a-b)+, sum (a-b)-) over a finite support, exact in the float inputs."""
    pts = np.asarray(a.support.points)
    diffs = [Fraction(float(p)) - Fraction(float(q)) for p, q in zip(a(pts), b(pts))]
    pos = sum((d for d in diffs if d > 0), Fraction(0))
    neg = -sum((d for d in diffs if d < 0), Fraction(0))
    return pos + neg, pos, neg


def tv_distance(a: ConditionalDensityEstimate, b: ConditionalDensityEstimate, abstol: float = 1e-7) -> float:
    """Total variation distance sup_A |P(A) - Q(A)|.

    On a finite support the supremum is attained at A = {a > b} or its
    complement and is computed in exact rational arithmetic from the float
    probabilities; elsewhere it is half the L1 distance.
    """
    if a.support != b.support:
        raise SupportMismatchError(f"cannot compare densities on {a.support} and {b.support}")
    if a.support.is_discrete:
        _, pos, neg = _exact_differences(a, b)
        return float(max(pos, neg))
    return l1_distance(a, b, abstol) / 2.0
