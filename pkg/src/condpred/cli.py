"""Command-line runner: ``condpred {estimate,risk-curve,trace,crosscheck,validate}``.

Every subcommand reads a JSON config (``--config``), applies ``--set key=value``
overrides plus ``--seed``/``--out``/``--threads``, and writes its outputs into
the output directory. The output directory falls back to ``$CONDPRED_OUT_DIR``
and then ``./condpred-out`` when neither the flag nor the config names one.
"""

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from condpred.closed_form import closed_form_conditional
from condpred.config import ExperimentConfig, apply_overrides, load_raw, parse_config
from condpred.engine import build_grid, posterior_grid, predictive_conditional
from condpred.errors import ConfigError, DomainError, ExperimentError, FormulaInconsistencyError
from condpred.harness import bayes_risk_curve, consistency_trace, crosscheck_report
from condpred.models import PairedSample, sample_joint
from condpred.seeding import derive_seed

OUT_DIR_ENV = "CONDPRED_OUT_DIR"
DEFAULT_OUT_DIR = "condpred-out"

RISK_COLUMNS = [
    "n", "mean_l1", "se_l1", "mean_l1_sq", "se_l1_sq",
    "mean_tv", "se_tv", "mean_tv_sq", "se_tv_sq", "replications", "failures",
]
TRACE_COLUMNS = ["n", "t", "x1", "abs_error", "true_value", "estimate"]

TRACE_NOTE = (
    "A single seeded path illustrates almost-sure convergence; it cannot certify "
    "a statement that holds for almost every path and almost every theta."
)


def fmt(value) -> str:
    """Locale-independent rendering: integers as-is, reals with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def write_csv(path: Path, header_lines, columns, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else fmt(v)
    return obj


def write_json(path: Path, payload):
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="ascii")


def _header(command, cfg: ExperimentConfig):
    return [
        f"condpred {command}",
        f"model={cfg.model.kind} hyperparams={json.dumps(cfg.model.hyperparams, sort_keys=True)}",
        f"seed={cfg.seed} fingerprint={cfg.fingerprint()}",
    ]


def _sidecar(command, cfg: ExperimentConfig, **extra):
    return {
        "command": command,
        "seed": cfg.seed,
        "fingerprint": cfg.fingerprint(),
        "config": cfg.content_dict(),
        **extra,
    }


def run_estimate(cfg: ExperimentConfig, out: Path):
    model = cfg.build_model()
    e = cfg.estimate
    if e.sample is not None:
        sample = PairedSample.from_pairs(e.sample)
        theta, fresh = None, None
    else:
        draw = sample_joint(model, e.n, derive_seed(cfg.seed, "estimate"))
        sample, theta, fresh = draw.sample, draw.theta, draw.fresh_pair
    x1 = e.x1 if e.x1 is not None else (fresh[0] if fresh is not None else None)
    if x1 is None:
        raise ConfigError("estimate.x1 is required when an explicit sample is given",
                          ["estimate.x1: required when estimate.sample is given"])
    if e.source == "numeric":
        grid = build_grid(model, cfg.engine.resolution)
        post = posterior_grid(model, grid, sample)
        est = predictive_conditional(model, post, x1, cfg.engine.prune_log_mass)
    else:
        form = "derived" if e.source == "closed-form" else "printed"
        est = closed_form_conditional(model, sample, x1, form)

    support = model.x2_support
    if support.is_discrete:
        t = np.asarray(support.points)
        t_min, t_max = float(t[0]), float(t[-1])
    else:
        t_min = e.t_min if e.t_min is not None else max(support.lower, est.center - 8.0 * est.scale)
        t_max = e.t_max if e.t_max is not None else min(support.upper, est.center + 8.0 * est.scale)
        t = np.linspace(t_min, t_max, e.t_points)
    density = est(t)
    write_csv(out / "estimate.csv", _header("estimate", cfg), ["t", "density"], zip(t.tolist(), density.tolist()))
    write_json(out / "estimate.json", _sidecar(
        "estimate", cfg,
        model=model.name,
        n=sample.n,
        x1=float(x1),
        source=e.source,
        theta_drawn=theta,
        t_range=[float(t_min), float(t_max)],
        sample_pairs=sample.pairs,
    ))
    return [out / "estimate.csv", out / "estimate.json"]


def run_risk_curve(cfg: ExperimentConfig, out: Path):
    model = cfg.build_model()
    r = cfg.risk_curve
    curve = bayes_risk_curve(model, cfg.engine, r.n_values, r.replications, cfg.seed, r.estimator, cfg.threads)
    rows = [[getattr(rec, c) for c in RISK_COLUMNS] for rec in curve.records]
    write_csv(out / "risk_curve.csv", _header("risk-curve", cfg), RISK_COLUMNS, rows)
    write_json(out / "risk_curve.json", _sidecar(
        "risk-curve", cfg, model=model.name, estimator=r.estimator, engine_fingerprint=curve.fingerprint,
    ))
    return [out / "risk_curve.csv", out / "risk_curve.json"]


def run_trace(cfg: ExperimentConfig, out: Path):
    model = cfg.build_model()
    t = cfg.trace
    trace = consistency_trace(model, cfg.engine, t.theta, t.probes, t.checkpoints, cfg.seed)
    rows = [[row.n, row.t, row.x1, row.abs_error, row.true_value, row.estimate] for row in trace.rows]
    header = _header("trace", cfg) + [f"theta={fmt(trace.theta)} theta_drawn={int(trace.theta_drawn)}"]
    write_csv(out / "trace.csv", header, TRACE_COLUMNS, rows)
    write_json(out / "trace.json", _sidecar(
        "trace", cfg, model=model.name, theta=trace.theta, theta_drawn=trace.theta_drawn, note=TRACE_NOTE,
    ))
    return [out / "trace.csv", out / "trace.json"]


def run_crosscheck(cfg: ExperimentConfig, out: Path):
    c = cfg.crosscheck
    report = crosscheck_report(
        cfg.model.kind, cfg.model.hyperparams, c.n_values, c.probes_per_n, cfg.seed,
        settings=cfg.engine, samples_per_n=c.samples_per_n,
    )
    write_json(out / "crosscheck.json", _sidecar("crosscheck", cfg, report=report))
    return [out / "crosscheck.json"]


COMMANDS = {
    "estimate": run_estimate,
    "risk-curve": run_risk_curve,
    "trace": run_trace,
    "crosscheck": run_crosscheck,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condpred", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*COMMANDS, "validate"]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file (or an output sidecar)")
        p.add_argument("--seed", type=int, help="master seed (u64)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. risk_curve.replications=100")
        p.add_argument("--threads", type=int, help="worker threads for replications")
    return parser


def load_config(args) -> ExperimentConfig:
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    if args.out is not None:
        overrides.append(f"out_dir={json.dumps(args.out)}")
    return parse_config(apply_overrides(load_raw(args.config), overrides))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"condpred: invalid configuration ({exc})", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(cfg.to_json())
        return 0

    out = Path(cfg.out_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    try:
        written = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"condpred: invalid configuration ({exc})", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return 2
    except (ExperimentError, DomainError, FormulaInconsistencyError) as exc:
        print(f"condpred {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
