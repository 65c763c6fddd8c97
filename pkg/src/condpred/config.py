"""Experiment configuration: JSON file <-> validated dataclasses.

Validation collects every violation before failing. Defaults are filled into
the parsed object, so ``to_dict`` always shows the complete configuration that
was run. Output sidecars embed that dictionary under ``"config"`` and are
accepted as config files themselves.
"""

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from condpred.engine import EngineSettings
from condpred.errors import ConfigError
from condpred.harness import ESTIMATORS
from condpred.models import DEFAULT_HYPERPARAMS, MODEL_KINDS, make_model

ESTIMATE_SOURCES = ("numeric", "closed-form", "closed-form-printed")
SEED_MAX = (1 << 64) - 1

GEOMETRIC_N = [1, 2, 4, 8, 16, 32, 64]
GEOMETRIC_CHECKPOINTS = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048]


@dataclass
class ModelConfig:
    kind: str = "gamma-exp"
    hyperparams: dict = field(default_factory=dict)


@dataclass
class EstimateConfig:
    n: int = 20
    x1: float | None = None
    sample: list | None = None
    source: str = "numeric"
    t_min: float | None = None
    t_max: float | None = None
    t_points: int = 201


@dataclass
class RiskCurveConfig:
    n_values: list = field(default_factory=lambda: list(GEOMETRIC_N))
    replications: int = 500
    estimator: str = "numeric"


@dataclass
class TraceConfig:
    theta: float | None = None
    probes: list = field(default_factory=lambda: [[1.0, 1.0]])
    checkpoints: list = field(default_factory=lambda: list(GEOMETRIC_CHECKPOINTS))


@dataclass
class CrosscheckConfig:
    n_values: list = field(default_factory=lambda: [0, 1, 5, 20])
    samples_per_n: int = 10
    probes_per_n: int = 20


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    engine: EngineSettings = field(default_factory=EngineSettings)
    seed: int = 20221019
    out_dir: str | None = None
    threads: int = 1
    estimate: EstimateConfig = field(default_factory=EstimateConfig)
    risk_curve: RiskCurveConfig = field(default_factory=RiskCurveConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    crosscheck: CrosscheckConfig = field(default_factory=CrosscheckConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def build_model(self):
        return make_model(self.model.kind, self.model.hyperparams)

    def content_dict(self) -> dict:
        """Everything that determines output content; out_dir and threads do not."""
        payload = self.to_dict()
        payload.pop("out_dir")
        payload.pop("threads")
        return payload

    def fingerprint(self) -> str:
        payload = self.content_dict()
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_SECTIONS = {
    "model": ModelConfig,
    "engine": EngineSettings,
    "estimate": EstimateConfig,
    "risk_curve": RiskCurveConfig,
    "trace": TraceConfig,
    "crosscheck": CrosscheckConfig,
}
_TOP_LEVEL = {"seed", "out_dir", "threads"}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_counts(values, name, problems, minimum=0, increasing=False):
    if not isinstance(values, list) or not values:
        problems.append(f"{name}: must be a nonempty list of integers")
        return
    if not all(_is_int(v) and v >= minimum for v in values):
        problems.append(f"{name}: every entry must be an integer >= {minimum}")
        return
    if increasing and any(b <= a for a, b in zip(values, values[1:])):
        problems.append(f"{name}: must be strictly increasing")


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config mapping and return the filled-in ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]
    problems = []
    for key in raw:
        if key not in _SECTIONS and key not in _TOP_LEVEL:
            problems.append(f"{key}: unknown config field")

    sections = {}
    for name, cls in _SECTIONS.items():
        given = raw.get(name, {})
        if not isinstance(given, dict):
            problems.append(f"{name}: must be an object")
            given = {}
        known = set(cls.__dataclass_fields__)
        for key in given:
            if key not in known:
                problems.append(f"{name}.{key}: unknown config field")
        try:
            sections[name] = cls(**{k: copy.deepcopy(v) for k, v in given.items() if k in known})
        except TypeError as exc:
            problems.append(f"{name}: {exc}")
            sections[name] = cls()

    cfg = ExperimentConfig(**sections)
    for key in _TOP_LEVEL:
        if key in raw:
            setattr(cfg, key, raw[key])

    m = cfg.model
    if not isinstance(m.kind, str) or m.kind not in MODEL_KINDS:
        problems.append(f"model.kind: unknown model kind {m.kind!r} (expected one of {', '.join(MODEL_KINDS)})")
    elif not isinstance(m.hyperparams, dict):
        problems.append("model.hyperparams: must be an object")
    else:
        try:
            make_model(m.kind, m.hyperparams)
            m.hyperparams = {**DEFAULT_HYPERPARAMS[m.kind], **{k: float(v) for k, v in m.hyperparams.items()}}
        except ConfigError as exc:
            problems.extend(exc.violations)

    problems.extend(cfg.engine.validate())
    if _is_int(cfg.engine.l1_abstol):
        cfg.engine = EngineSettings(cfg.engine.resolution, float(cfg.engine.l1_abstol), cfg.engine.prune_log_mass)

    if not (_is_int(cfg.seed) and 0 <= cfg.seed <= SEED_MAX):
        problems.append("seed: must be an integer in [0, 2**64 - 1]")
    if not (_is_int(cfg.threads) and cfg.threads >= 1):
        problems.append("threads: must be an integer >= 1")
    if cfg.out_dir is not None and not isinstance(cfg.out_dir, str):
        problems.append("out_dir: must be a string or null")

    e = cfg.estimate
    if not (_is_int(e.n) and e.n >= 0):
        problems.append("estimate.n: must be an integer >= 0")
    if e.x1 is not None and not _is_real(e.x1):
        problems.append("estimate.x1: must be a real number or null")
    if e.source not in ESTIMATE_SOURCES:
        problems.append(f"estimate.source: must be one of {', '.join(ESTIMATE_SOURCES)}")
    if e.sample is not None:
        if not (isinstance(e.sample, list)
                and all(isinstance(p, list) and len(p) == 2 and all(_is_real(v) for v in p) for p in e.sample)):
            problems.append("estimate.sample: must be a list of [x1, x2] pairs or null")
    for key in ("t_min", "t_max"):
        v = getattr(e, key)
        if v is not None and not _is_real(v):
            problems.append(f"estimate.{key}: must be a real number or null")
    if _is_real(e.t_min) and _is_real(e.t_max) and not e.t_min < e.t_max:
        problems.append("estimate.t_min: must be < estimate.t_max")
    if not (_is_int(e.t_points) and e.t_points >= 2):
        problems.append("estimate.t_points: must be an integer >= 2")

    r = cfg.risk_curve
    _check_counts(r.n_values, "risk_curve.n_values", problems)
    if not (_is_int(r.replications) and r.replications >= 2):
        problems.append("risk_curve.replications: replications >= 2 required")
    if r.estimator not in ESTIMATORS:
        problems.append(f"risk_curve.estimator: must be one of {', '.join(ESTIMATORS)}")

    t = cfg.trace
    if t.theta is not None and not _is_real(t.theta):
        problems.append("trace.theta: must be a real number or null (null draws theta from the prior)")
    if not (isinstance(t.probes, list) and t.probes
            and all(isinstance(p, list) and len(p) == 2 and all(_is_real(v) for v in p) for p in t.probes)):
        problems.append("trace.probes: must be a nonempty list of [t, x1] pairs")
    _check_counts(t.checkpoints, "trace.checkpoints", problems, increasing=True)

    c = cfg.crosscheck
    _check_counts(c.n_values, "crosscheck.n_values", problems)
    for key in ("samples_per_n", "probes_per_n"):
        if not (_is_int(getattr(c, key)) and getattr(c, key) >= 1):
            problems.append(f"crosscheck.{key}: must be an integer >= 1")

    if problems:
        raise ConfigError(f"{len(problems)} config violation(s)", problems)
    return cfg


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key=value`` overrides with dotted keys; values are parsed as JSON when possible."""
    raw = copy.deepcopy(raw)
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]
    problems = []
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            problems.append(f"--set {item!r}: expected key=value")
            continue
        parts = key.split(".")
        node = raw
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                problems.append(f"--set {item!r}: {part} is not an object")
                break
            node = child
        else:
            node[parts[-1]] = _parse_value(value)
    if problems:
        raise ConfigError(f"{len(problems)} override violation(s)", problems)
    return raw


def load_raw(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} does not exist", [f"config: no such file {str(path)!r}"])
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}", [f"config: invalid JSON ({exc})"]) from exc


def validate_config(path, overrides=None) -> ExperimentConfig:
    """Load, override and validate a config file; raises ConfigError listing all violations."""
    return parse_config(apply_overrides(load_raw(path), overrides))
