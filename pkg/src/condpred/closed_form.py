"""Exact posterior predictive conditional densities for the three registered models.

Each model has two variants. "printed" is an alternative closed-form
expression, transcribed term by term and kept so its gap to the engine can be
measured; "derived" is the conjugate-prior computation worked out directly. For gamma-exp the two coincide. For two-coin and binormal they
differ, and the numeric grid engine decides which one is right
(see ``condpred.harness.crosscheck_report``).
"""

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from condpred.density import ConditionalDensityEstimate
from condpred.errors import ConfigError, FormulaInconsistencyError
from condpred.models import ModelSpec, PairedSample

FORMS = {
    "gamma-exp": ("derived", "printed"),
    "two-coin": ("derived", "printed"),
    "binormal": ("derived", "printed"),
}


@dataclass(frozen=True)
class SufficientStats:
    """Sample summaries that determine each model's posterior.

    gamma-exp: ``s`` = sum x1_i (1 + x2_i).  binormal: ``s`` = sum (x1_i + x2_i).
    two-coin: ``n_plus0`` = #{k2 = 0}, ``n01`` = #{(0, 1)}, ``n11`` = #{(1, 1)}.
    """

    kind: str
    n: int = 0
    s: float = 0.0
    n_plus0: int = 0
    n01: int = 0
    n11: int = 0

    def add(self, x1, x2) -> "SufficientStats":
        if self.kind == "gamma-exp":
            return replace(self, n=self.n + 1, s=self.s + x1 * (1.0 + x2))
        if self.kind == "binormal":
            return replace(self, n=self.n + 1, s=self.s + (x1 + x2))
        if x2 == 0:
            return replace(self, n=self.n + 1, n_plus0=self.n_plus0 + 1)
        if x1 == 0:
            return replace(self, n=self.n + 1, n01=self.n01 + 1)
        return replace(self, n=self.n + 1, n11=self.n11 + 1)

    @property
    def beta_params(self) -> tuple[int, int]:
        """(alpha, beta) of the two-coin Beta posterior under the uniform prior."""
        return self.n_plus0 + 2 * self.n11 + 1, self.n_plus0 + 2 * self.n01 + 1


def sufficient_stats(kind: str, sample: PairedSample) -> SufficientStats:
    x1, x2 = sample.x1, sample.x2
    if kind == "gamma-exp":
        return SufficientStats(kind, sample.n, s=float(np.sum(x1 * (1.0 + x2))))
    if kind == "binormal":
        return SufficientStats(kind, sample.n, s=float(np.sum(x1 + x2)))
    if kind == "two-coin":
        return SufficientStats(
            kind,
            sample.n,
            n_plus0=int(np.sum(x2 == 0)),
            n01=int(np.sum((x1 == 0) & (x2 == 1))),
            n11=int(np.sum((x1 == 1) & (x2 == 1))),
        )
    raise ConfigError(f"no sufficient statistics for model kind {kind!r}")


def gammaexp_estimate(lam, stats: SufficientStats, x1, x2):
    """(2n+2) x1 a^(2n+2) / (x1 x2 + a)^(2n+3) with a = lam + x1 + s, in log space."""
    n = stats.n
    a = lam + x1 + stats.s
    x2 = np.asarray(x2, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        log_val = (
            np.log(2 * n + 2) + np.log(x1)
            + (2 * n + 2) * np.log(a)
            - (2 * n + 3) * np.log(x1 * x2 + a)
        )
    out = np.where(x2 >= 0, np.exp(log_val), 0.0)
    return float(out) if out.ndim == 0 else out


def twocoin_estimate(stats: SufficientStats, k1: int, k2: int) -> float:
    """Predictive P(X2=k2 | X1=k1) under the Beta(alpha, beta) posterior.

    Since f(0,0) = f(1,0) = theta(1-theta):
    P(0 | 0) = E[theta(1-theta)] / E[1-theta] = alpha / (alpha+beta+1),
    P(0 | 1) = E[theta(1-theta)] / E[theta]   = beta  / (alpha+beta+1).
    """
    alpha, beta = stats.beta_params
    p0 = Fraction(alpha if k1 == 0 else beta, alpha + beta + 1)
    return float(p0 if k2 == 0 else 1 - p0)


def twocoin_printed_estimate(stats: SufficientStats, k1: int, k2: int) -> float:
    n, c = stats.n, stats.n_plus0 + 2 * stats.n01
    if k1 == 0:
        p = Fraction(2 * n + 2, 2 * n + c + 3) if k2 == 0 else Fraction(c + 1, 2 * n + c + 3)
    else:
        p = Fraction(2 * n + 3, 2 * n + c + 4) if k2 == 0 else Fraction(c + 1, 2 * n + c + 4)
    return float(p)


def binormal_printed_parameters(mu, tau, sigma, rho, stats: SufficientStats):
    """(rho1, sigma1^2, m1) exactly as printed for the bivariate normal example."""
    a_n = 2.0 * (stats.n + 1) * (1.0 + rho) + sigma**2 / tau**2
    c = (1.0 - rho) / (1.0 + rho)
    rho1 = -(a_n + c) / (a_n - c) * rho
    sigma1_sq = a_n / (a_n - c) * sigma**2
    m1 = (stats.s + (1.0 + rho) * sigma**2 / tau**2 * mu) / (
        2.0 * (1.0 - rho1) * (1.0 + rho) ** 2 * sigma**2 * a_n
    )
    return rho1, sigma1_sq, m1


def binormal_conjugate_parameters(mu, tau, sigma, rho, stats: SufficientStats, x1):
    """Mean and variance of X2 | X1=x1 under the normal posterior predictive.

    Each pair contributes x1+x2 ~ N(2 theta, 2 sigma^2 (1+rho)), so the posterior is
    N(m, v); the fresh pair is then bivariate normal with covariance
    sigma^2 [[1, rho], [rho, 1]] + v.
    """
    precision = 1.0 / tau**2 + 2.0 * stats.n / (sigma**2 * (1.0 + rho))
    v = 1.0 / precision
    m = v * (mu / tau**2 + stats.s / (sigma**2 * (1.0 + rho)))
    var1 = sigma**2 + v
    cov = rho * sigma**2 + v
    return m + cov / var1 * (x1 - m), var1 - cov * cov / var1


def _normal_pdf(x, mean, var):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)
    return float(out) if out.ndim == 0 else out


def binormal_estimate(mu, tau, sigma, rho, stats: SufficientStats, x1, x2):
    """Normal density with the printed mean (1-rho1) m1 + rho1 x1 and variance sigma1^2 (1-rho1^2)."""
    rho1, sigma1_sq, m1 = binormal_printed_parameters(mu, tau, sigma, rho, stats)
    var = sigma1_sq * (1.0 - rho1**2)
    if not var > 0:
        raise FormulaInconsistencyError(
            f"printed binormal formula gives variance {var!r} "
            f"(rho1={rho1!r}, sigma1^2={sigma1_sq!r}) at n={stats.n}, rho={rho!r}"
        )
    return _normal_pdf(x2, (1.0 - rho1) * m1 + rho1 * x1, var)


def binormal_conjugate_estimate(mu, tau, sigma, rho, stats: SufficientStats, x1, x2):
    mean, var = binormal_conjugate_parameters(mu, tau, sigma, rho, stats, x1)
    return _normal_pdf(x2, mean, var)


def closed_form_conditional(model: ModelSpec, sample: PairedSample, x1: float,
                            form: str = "derived") -> ConditionalDensityEstimate:
    """Closed-form predictive conditional of X2 given X1=x1 as an evaluable estimate."""
    kind = model.name
    if form not in FORMS.get(kind, ()):
        raise ConfigError(f"closed form {form!r} is not available for {kind}")
    stats = sufficient_stats(kind, sample)
    hp = model.hyperparams
    x1 = float(x1)
    provenance = {"source": f"closed-form:{form}", "model": kind, "n": sample.n, "x1": x1}

    if kind == "gamma-exp":
        lam = hp["lambda"]
        a = lam + x1 + stats.s
        return ConditionalDensityEstimate(
            evaluator=lambda t: gammaexp_estimate(lam, stats, x1, t),
            support=model.x2_support,
            provenance=provenance,
            center=0.0,
            scale=a / ((2 * stats.n + 2) * x1),
        )
    if kind == "two-coin":
        k1 = int(x1)
        single = twocoin_estimate if form == "derived" else twocoin_printed_estimate
        table = np.array([single(stats, k1, 0), single(stats, k1, 1)])

        def evaluator(t):
            t = np.asarray(t, dtype=float)
            return np.where(t == 0, table[0], np.where(t == 1, table[1], 0.0))

        return ConditionalDensityEstimate(evaluator, model.x2_support, provenance, 0.5, 1.0)

    args = (hp["mu"], hp["tau"], hp["sigma"], hp["rho"], stats)
    if form == "derived":
        mean, var = binormal_conjugate_parameters(*args, x1)
    else:
        rho1, sigma1_sq, m1 = binormal_printed_parameters(*args)
        mean, var = (1.0 - rho1) * m1 + rho1 * x1, sigma1_sq * (1.0 - rho1**2)
        if not var > 0:
            raise FormulaInconsistencyError(
                f"printed binormal formula gives variance {var!r} at n={stats.n}"
            )
    return ConditionalDensityEstimate(
        evaluator=lambda t: _normal_pdf(t, mean, var),
        support=model.x2_support,
        provenance=provenance,
        center=float(mean),
        scale=float(np.sqrt(var)),
    )
