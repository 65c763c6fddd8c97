"""Monte Carlo Bayes-risk curves, single-path consistency traces and closed-form cross-checks."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from condpred.closed_form import FORMS, closed_form_conditional
from condpred.engine import (
    EngineSettings,
    build_grid,
    l1_distance,
    posterior_grid,
    predictive_conditional,
)
from condpred.errors import DomainError, ExperimentError, FormulaInconsistencyError
from condpred.models import ModelSpec, PairedSample, make_model, sample_joint, true_conditional, true_conditional_density
from condpred.seeding import derive_seed, rng_for

ESTIMATORS = ("numeric", "closed-form", "plug-in-truth", "prior-predictive", "plug-in-mean")
MAX_FAILURE_FRACTION = 0.01
PATH_BLOCK = 256


@dataclass(frozen=True)
class RiskRecord:
    n: int
    mean_l1: float
    se_l1: float
    mean_l1_sq: float
    se_l1_sq: float
    mean_tv: float
    se_tv: float
    mean_tv_sq: float
    se_tv_sq: float
    replications: int
    failures: int


@dataclass(frozen=True, eq=False)
class RiskCurve:
    """Per-n Bayes-risk estimates.

    ``losses[n]`` keeps the per-replication L1 losses (NaN marks an excluded
    replication) so that curves built from the same master seed can be compared
    pairwise.
    """

    model: str
    estimator: str
    master_seed: int
    fingerprint: str
    records: tuple
    losses: dict = field(repr=False)

    @property
    def n_values(self) -> list:
        return [r.n for r in self.records]

    def record(self, n) -> RiskRecord:
        for r in self.records:
            if r.n == n:
                return r
        raise KeyError(n)


@dataclass(frozen=True)
class TraceRow:
    n: int
    t: float
    x1: float
    abs_error: float
    true_value: float
    estimate: float


@dataclass(frozen=True, eq=False)
class ConsistencyTrace:
    theta: float
    theta_drawn: bool
    probes: tuple
    checkpoints: tuple
    seed: int
    rows: tuple
    fingerprint: str = ""

    def errors(self, probe_index=0) -> list:
        k = len(self.probes)
        return [row.abs_error for row in self.rows[probe_index::k]]


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else math.nan
    return mean, se


def build_estimate(model, grid, settings, estimator, draw):
    """The estimator's guess of f(. | x1) for one joint draw, at x1 = fresh pair's first coordinate."""
    x1 = draw.fresh_pair[0]
    if estimator == "numeric":
        post = posterior_grid(model, grid, draw.sample)
        return predictive_conditional(model, post, x1, settings.prune_log_mass)
    if estimator == "prior-predictive":
        post = posterior_grid(model, grid, PairedSample())
        return predictive_conditional(model, post, x1, settings.prune_log_mass)
    if estimator == "plug-in-mean":
        theta_hat = posterior_grid(model, grid, draw.sample).mean
        return true_conditional(model, theta_hat, x1, source="plug-in-mean")
    if estimator == "closed-form":
        return closed_form_conditional(model, draw.sample, x1)
    if estimator == "plug-in-truth":
        return true_conditional(model, draw.theta, x1, source="plug-in-truth")
    raise ValueError(f"unknown estimator {estimator!r}; expected one of {', '.join(ESTIMATORS)}")


def _one_replication(model, grid, settings, estimator, n, seed):
    draw = sample_joint(model, n, seed)
    try:
        truth = true_conditional(model, draw.theta, draw.fresh_pair[0])
        estimate = build_estimate(model, grid, settings, estimator, draw)
        return l1_distance(estimate, truth, settings.l1_abstol)
    except DomainError:
        return math.nan


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def bayes_risk_curve(model: ModelSpec, settings: EngineSettings, n_values, replications: int,
                     master_seed: int, estimator: str = "numeric", threads: int = 1,
                     grid=None) -> RiskCurve:
    """Estimate L1, squared-L1, TV and squared-TV Bayes risks at each n.

    Replication r at sample size n draws (theta, sample, fresh pair) with seed
    derive_seed(master_seed, "risk", n, r), so estimators run with the same
    master seed see identical draws.
    """
    if replications < 2:
        raise ExperimentError("replications must be >= 2")
    n_values = [int(n) for n in n_values]
    if not n_values:
        raise ExperimentError("n_values must be nonempty")
    if estimator not in ESTIMATORS:
        raise ExperimentError(f"unknown estimator {estimator!r}")
    grid = grid if grid is not None else build_grid(model, settings.resolution)

    records, losses = [], {}
    for n in n_values:
        seeds = [derive_seed(master_seed, "risk", n, r) for r in range(replications)]
        l1 = np.array(_map(lambda s: _one_replication(model, grid, settings, estimator, n, s), seeds, threads))
        failures = int(np.sum(np.isnan(l1)))
        if failures > MAX_FAILURE_FRACTION * replications:
            raise ExperimentError(
                f"{model.name}, n={n}: {failures} of {replications} replications hit a domain error"
            )
        ok = l1[~np.isnan(l1)]
        tv = ok / 2.0
        mean_l1, se_l1 = _mean_se(ok)
        mean_l1_sq, se_l1_sq = _mean_se(ok * ok)
        mean_tv, se_tv = _mean_se(tv)
        mean_tv_sq, se_tv_sq = _mean_se(tv * tv)
        records.append(RiskRecord(
            n, mean_l1, se_l1, mean_l1_sq, se_l1_sq, mean_tv, se_tv, mean_tv_sq, se_tv_sq,
            replications, failures,
        ))
        l1.setflags(write=False)
        losses[n] = l1
    return RiskCurve(
        model=model.name,
        estimator=estimator,
        master_seed=int(master_seed),
        fingerprint=settings.fingerprint(model),
        records=tuple(records),
        losses=losses,
    )


def paired_difference(a: RiskCurve, b: RiskCurve, n: int, squared: bool = True):
    """Mean and standard error of (loss_a - loss_b) over replications both kept."""
    la, lb = a.losses[n], b.losses[n]
    if la.shape != lb.shape or a.master_seed != b.master_seed:
        raise ExperimentError("curves were not run on shared seeds")
    keep = ~(np.isnan(la) | np.isnan(lb))
    if squared:
        diff = la[keep] ** 2 - lb[keep] ** 2
    else:
        diff = la[keep] - lb[keep]
    return _mean_se(diff)


def loglog_slope(n_values, risks) -> float:
    """Least-squares slope of log(risk) against log(n)."""
    slope, _ = np.polyfit(np.log(np.asarray(n_values, dtype=float)), np.log(np.asarray(risks, dtype=float)), 1)
    return float(slope)


def sample_path(model: ModelSpec, theta: float, n: int, seed: int) -> PairedSample:
    """The first n pairs of one i.i.d. path from R_theta.

    Pairs are drawn in fixed blocks keyed by (seed, block index), so a shorter
    path is always an exact prefix of a longer one.
    """
    x1s, x2s = [], []
    for b in range(-(-n // PATH_BLOCK)):
        x1, x2 = model.joint_sampler(theta, rng_for(seed, "path", b), PATH_BLOCK)
        x1s.append(x1)
        x2s.append(x2)
    if not x1s:
        return PairedSample()
    return PairedSample(np.concatenate(x1s)[:n], np.concatenate(x2s)[:n])


def consistency_trace(model: ModelSpec, settings: EngineSettings, theta, probes, n_checkpoints,
                      seed: int, grid=None) -> ConsistencyTrace:
    """Follow one growing sample and record |estimate - truth| at each (checkpoint, probe)."""
    checkpoints = tuple(int(n) for n in n_checkpoints)
    if not checkpoints or any(b <= a for a, b in zip(checkpoints, checkpoints[1:])) or checkpoints[0] < 0:
        raise ExperimentError("checkpoints must be nonnegative and strictly increasing")
    probes = tuple((float(t), float(x1)) for t, x1 in probes)
    drawn = theta is None
    if drawn:
        theta = model.prior_sampler(rng_for(seed, "trace-theta"))
    theta = float(theta)
    grid = grid if grid is not None else build_grid(model, settings.resolution)
    path = sample_path(model, theta, checkpoints[-1], seed)

    rows = []
    for n in checkpoints:
        post = posterior_grid(model, grid, path.prefix(n))
        for t, x1 in probes:
            estimate = predictive_conditional(model, post, x1, settings.prune_log_mass)(t)
            truth = true_conditional_density(model, theta, x1, t)
            rows.append(TraceRow(n, t, x1, abs(estimate - truth), truth, estimate))
    return ConsistencyTrace(
        theta=theta,
        theta_drawn=drawn,
        probes=probes,
        checkpoints=checkpoints,
        seed=int(seed),
        rows=tuple(rows),
        fingerprint=settings.fingerprint(model),
    )


# gamma-exp printed and derived forms coincide; "derived" is its reference.
CROSSCHECK_TOLERANCE = {
    ("gamma-exp", "derived"): ("relative", 1e-6),
    ("gamma-exp", "printed"): ("relative", 1e-6),
    ("two-coin", "derived"): ("absolute", 1e-10),
    ("two-coin", "printed"): ("absolute", 1e-10),
    ("binormal", "derived"): ("relative", 1e-6),
    ("binormal", "printed"): ("relative", 1e-4),
}


def _probe_points(model, draw, probes_per_n, rng):
    if model.x2_support.is_discrete:
        return [(k1, k2) for k1 in model.x1_support.points for k2 in model.x2_support.points]
    x1, x2 = model.joint_sampler(draw.theta, rng, probes_per_n)
    return list(zip(x1.tolist(), x2.tolist()))


def crosscheck_report(kind: str, hyperparams, n_values, probes_per_n: int, seed: int,
                      settings: EngineSettings | None = None, samples_per_n: int = 10) -> dict:
    """Compare every closed form for ``kind`` against the numeric engine.

    Returns a JSON-ready dict. Entries beyond tolerance are listed under
    ``flagged`` with the seed and statistics needed to reproduce them; a
    disagreement is reported, never raised.
    """
    settings = settings or EngineSettings()
    model = make_model(kind, hyperparams)
    grid = build_grid(model, settings.resolution)
    forms = FORMS[kind]
    acc = {form: {"abs": [], "rel": [], "flagged": [], "errors": 0} for form in forms}

    for n in n_values:
        for i in range(samples_per_n):
            sample_seed = derive_seed(seed, "crosscheck", n, i)
            draw = sample_joint(model, n, sample_seed)
            post = posterior_grid(model, grid, draw.sample)
            pts = _probe_points(model, draw, probes_per_n, rng_for(seed, "crosscheck-probes", n, i))
            numeric_by_x1 = {}
            for x1, x2 in pts:
                if x1 not in numeric_by_x1:
                    numeric_by_x1[x1] = predictive_conditional(model, post, x1, settings.prune_log_mass)
                numeric = float(numeric_by_x1[x1](x2))
                for form in forms:
                    metric, tol = CROSSCHECK_TOLERANCE[(kind, form)]
                    entry = {
                        "n": n, "sample_index": i, "sample_seed": sample_seed,
                        "x1": x1, "x2": x2, "numeric": numeric,
                    }
                    try:
                        closed = float(closed_form_conditional(model, draw.sample, x1, form)(x2))
                    except FormulaInconsistencyError as exc:
                        acc[form]["errors"] += 1
                        acc[form]["flagged"].append({**entry, "closed_form": None, "error": str(exc)})
                        continue
                    abs_d = abs(closed - numeric)
                    rel_d = abs_d / abs(closed) if closed != 0 else (0.0 if abs_d == 0 else math.inf)
                    acc[form]["abs"].append(abs_d)
                    acc[form]["rel"].append(rel_d)
                    discrepancy = rel_d if metric == "relative" else abs_d
                    if discrepancy > tol:
                        acc[form]["flagged"].append({**entry, "closed_form": closed, "discrepancy": discrepancy})

    report = {
        "model": kind,
        "hyperparams": model.hyperparams,
        "seed": int(seed),
        "n_values": [int(n) for n in n_values],
        "samples_per_n": samples_per_n,
        "probes_per_n": probes_per_n,
        "fingerprint": settings.fingerprint(model),
        "forms": {},
    }
    for form in forms:
        metric, tol = CROSSCHECK_TOLERANCE[(kind, form)]
        a = acc[form]
        key = "rel" if metric == "relative" else "abs"
        values = a[key]
        report["forms"][form] = {
            "metric": metric,
            "tolerance": tol,
            "checked": len(values) + a["errors"],
            "formula_errors": a["errors"],
            "max_discrepancy": max(values) if values else None,
            "mean_discrepancy": float(np.mean(values)) if values else None,
            "max_abs": max(a["abs"]) if a["abs"] else None,
            "max_rel": max(a["rel"]) if a["rel"] else None,
            "n_flagged": len(a["flagged"]),
            "within_tolerance": not a["flagged"],
            "flagged": a["flagged"],
        }
    return report
