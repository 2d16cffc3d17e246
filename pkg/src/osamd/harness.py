"""Seeded experiment orchestration and result files.

A configuration is a nested mapping, usually loaded from YAML. Leaving any
key out falls back to the rotating-Gaussian protocol: 2000 rounds, 2000
pretraining draws, 10 repeats, and six learners (OSAMD, PAA, OMD with all
labels, OMD with uniformly sampled labels, and the two ablations).
"""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import os
import re
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .environments import (
    CsvStreamConfig,
    LabelFlipConfig,
    MulticlassRotatingConfig,
    RotatingGaussianConfig,
    StreamConfig,
    iter_stream,
    multiclass_sample,
    pretrain_samples,
)
from .geometry import BregmanGeometry
from .learners import (
    LabelOracle,
    MosamdState,
    OmdState,
    OsamdParams,
    OsamdState,
    PaaState,
    ablation_no_active_round,
    ablation_no_selfadapt_round,
    mosamd_round,
    omd_round,
    osamd_round,
    paa_round,
    pretrain,
)
from .losses import HingeSpec, multiclass_hinge_value_and_gradient
from .metrics import (
    ComparatorCache,
    RunRecord,
    aggregate_runs,
    comparator_series,
    expected_hinge_gaussian,
    expected_hinge_label_flip,
    label_flip_comparator,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "DEFAULT_CONFIG",
    "load_config",
    "run_experiment",
    "emit_results",
    "optimal_values",
    "comparator_table",
    "derive_seed",
    "label_flip_config",
    "label_flip_scenario",
]

log = logging.getLogger(__name__)

LEARNER_KINDS = ("osamd", "mosamd", "omd", "paa", "no_selfadapt", "no_active")

DEFAULT_LEARNERS = [
    {"name": "OSAMD", "kind": "osamd"},
    {"name": "PAA", "kind": "paa"},
    {"name": "OMD-all", "kind": "omd", "query": "always"},
    {"name": "OMD-partial", "kind": "omd", "query": "match"},
    {"name": "no-selfadapt", "kind": "no_selfadapt"},
    {"name": "no-active", "kind": "no_active", "query": "match"},
]

DEFAULT_CONFIG: dict = {
    "environment": {"kind": "rotating_gaussian"},
    "loss": {"margin_target": 1.0, "penalty_C": 0.2, "penalize_bias": False},
    "geometry": {"radius": None},
    "init": {"mode": "pretrain", "epochs": 200, "rate": 0.05, "batch_size": 50},
    "defaults": {"sigma": 0.35, "eta": 0.01, "tau_cap": 1.0, "tau_margin": 1.0,
                 "inner_iterations": 20, "inner_rate": None},
    "learners": DEFAULT_LEARNERS,
    "repeats": 10,
    "base_seed": 0,
    "metrics": {"compute_regret": True, "mc_fallback_n": 0, "confidence": 0.90,
                "comparator_file": None},
    "output": {"directory": "results", "formats": ["csv", "json"]},
}

_ENV_KINDS = {
    "rotating_gaussian": RotatingGaussianConfig,
    "rotating_gaussian_multiclass": MulticlassRotatingConfig,
    "label_flip": LabelFlipConfig,
    "csv": CsvStreamConfig,
}
_TUPLE_FIELDS = ("center_inner", "center_outer", "point_a", "point_b")
_PARAM_KEYS = ("sigma", "eta", "tau_cap", "tau_margin", "inner_iterations", "inner_rate",
               "separable_mode", "margin_R")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.problems))


def _merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class ExperimentConfig:
    environment: StreamConfig
    loss: HingeSpec
    geometry: BregmanGeometry
    init: dict
    learners: list
    repeats: int
    base_seed: int
    metrics: dict
    output: dict
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def horizon(self):
        return getattr(self.environment, "horizon", None)

    @property
    def multiclass(self) -> bool:
        env = self.environment
        return isinstance(env, MulticlassRotatingConfig) or (
            isinstance(env, CsvStreamConfig) and env.multiclass)


def _build_environment(spec: Mapping, problems: list):
    spec = dict(spec)
    kind = spec.pop("kind", "rotating_gaussian")
    cls = _ENV_KINDS.get(kind)
    if cls is None:
        problems.append(f"environment.kind: unknown kind {kind!r} "
                        f"(expected one of {sorted(_ENV_KINDS)})")
        return None
    for key in _TUPLE_FIELDS:
        if key in spec and spec[key] is not None:
            spec[key] = tuple(float(v) for v in spec[key])
    if "total_rotation_degrees" in spec:
        spec["total_rotation"] = math.radians(spec.pop("total_rotation_degrees"))
    try:
        return cls(**spec)
    except TypeError as exc:
        problems.append(f"environment: {exc}")
    except ValueError as exc:
        problems.append(f"environment: {exc}")
    return None


def _learner_params(entry: Mapping, defaults: Mapping) -> dict:
    merged = {k: defaults.get(k) for k in _PARAM_KEYS if k in defaults}
    merged.update({k: entry[k] for k in _PARAM_KEYS if k in entry})
    return merged


def _validate_learners(entries, defaults, multiclass, problems):
    names = set()
    out = []
    for i, entry in enumerate(entries):
        where = f"learners[{i}]"
        if not isinstance(entry, Mapping):
            problems.append(f"{where}: expected a mapping")
            continue
        entry = dict(entry)
        name = entry.get("name")
        kind = entry.get("kind")
        if not name:
            problems.append(f"{where}: missing name")
        elif name in names:
            problems.append(f"{where}: duplicate learner name {name!r}")
        names.add(name)
        if kind not in LEARNER_KINDS:
            problems.append(f"{where}: unknown kind {kind!r} (expected one of {list(LEARNER_KINDS)})")
            continue
        if multiclass and kind != "mosamd":
            problems.append(f"{where}: kind {kind!r} is binary-only; multiclass streams need 'mosamd'")
        if not multiclass and kind == "mosamd":
            problems.append(f"{where}: 'mosamd' needs a multiclass stream")
        params = _learner_params(entry, defaults)
        try:
            OsamdParams(**{k: v for k, v in params.items() if v is not None})
        except (TypeError, ValueError) as exc:
            problems.append(f"{where}: {exc}")
        entry["params"] = params
        if kind in ("omd", "no_active"):
            query = entry.get("query", "always" if kind == "omd" else "match")
            if query not in ("always", "match"):
                try:
                    q = float(query)
                except (TypeError, ValueError):
                    q = -1.0
                if not 0.0 <= q <= 1.0:
                    problems.append(f"{where}: query must be 'always', 'match' or a rate in [0, 1]")
            if query == "always" and kind == "no_active":
                query = 1.0
            entry["query"] = query
        out.append(entry)
    for entry in out:
        if entry.get("query") == "match":
            target = entry.get("match")
            candidates = [e["name"] for e in out if e["kind"] in ("osamd", "mosamd")]
            if target is None:
                if not candidates:
                    problems.append(f"learner {entry.get('name')!r}: query 'match' needs an OSAMD learner")
                else:
                    entry["match"] = candidates[0]
            elif target not in candidates:
                problems.append(f"learner {entry.get('name')!r}: match target {target!r} "
                                "is not an OSAMD learner")
    return out


def load_config(source: Any = None, overrides: Mapping | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a YAML path, a mapping, or nothing.

    Missing keys take their values from :data:`DEFAULT_CONFIG`. All problems are
    collected and raised together as a :class:`ConfigError`.
    """
    if source is None:
        data = {}
    elif isinstance(source, Mapping):
        data = dict(source)
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError([f"config file not found: {path}"])
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError([f"{path}: not valid YAML: {exc}"]) from None
        if not isinstance(data, Mapping):
            raise ConfigError([f"{path}: top level must be a mapping"])
    raw = _merge(DEFAULT_CONFIG, data)
    if overrides:
        raw = _merge(raw, overrides)
    if "learners" in data:
        raw["learners"] = copy.deepcopy(data["learners"])
    if overrides and "learners" in overrides:
        raw["learners"] = copy.deepcopy(overrides["learners"])

    known = set(DEFAULT_CONFIG)
    problems = [f"unknown top-level key {k!r}" for k in raw if k not in known]

    env = _build_environment(raw["environment"], problems)
    loss = None
    try:
        loss = HingeSpec(**raw["loss"])
    except (TypeError, ValueError) as exc:
        problems.append(f"loss: {exc}")
    geometry = None
    try:
        geometry = BregmanGeometry(radius=raw["geometry"].get("radius"))
    except (TypeError, ValueError) as exc:
        problems.append(f"geometry: {exc}")

    init = dict(raw["init"])
    if init.get("mode") not in ("pretrain", "fixed"):
        problems.append("init.mode must be 'pretrain' or 'fixed'")
    if init.get("mode") == "fixed" and init.get("vector") is None:
        problems.append("init.vector is required when init.mode is 'fixed'")

    repeats = raw["repeats"]
    if not isinstance(repeats, int) or repeats < 1:
        problems.append(f"repeats must be a positive integer, got {repeats!r}")
    if not isinstance(raw["base_seed"], int):
        problems.append("base_seed must be an integer")

    multiclass = isinstance(env, MulticlassRotatingConfig) or (
        isinstance(env, CsvStreamConfig) and env.multiclass)
    learners = []
    if not isinstance(raw["learners"], list) or not raw["learners"]:
        problems.append("learners must be a non-empty list")
    else:
        learners = _validate_learners(raw["learners"], raw.get("defaults") or {},
                                      multiclass, problems)

    conf = raw["metrics"].get("confidence", 0.9)
    if not 0 < conf < 1:
        problems.append("metrics.confidence must lie in (0, 1)")
    if isinstance(env, CsvStreamConfig) and not Path(env.path).is_file():
        problems.append(f"environment.path: file not found: {env.path}")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(environment=env, loss=loss, geometry=geometry, init=init,
                            learners=learners, repeats=repeats, base_seed=raw["base_seed"],
                            metrics=dict(raw["metrics"]), output=dict(raw["output"]), raw=raw)


def derive_seed(base_seed: int, repeat: int, name: str) -> int:
    """Stable 63-bit seed from ``(base_seed, repeat, name)``; independent of learner order."""
    tag = zlib.crc32(name.encode("utf-8"))
    ss = np.random.SeedSequence([base_seed & 0xFFFFFFFFFFFFFFFF, repeat, tag])
    return int(ss.generate_state(2, dtype=np.uint32) @ np.array([1 << 31, 1], dtype=np.uint64)
               ) & ((1 << 63) - 1)


STREAM_TAG = "__stream__"


def comparator_table(config: ExperimentConfig, cache: ComparatorCache | None = None) -> dict:
    """Per-round comparator of a rotating-Gaussian or label-flip config, as plain data."""
    env = config.environment
    if isinstance(env, RotatingGaussianConfig) and not config.geometry.bounded:
        series = comparator_series(config.loss, env, cache=cache)
        rows = [(np.asarray(w), float(v)) for w, v in
                zip(series.per_step_optimal, series.per_step_optimal_value)]
    elif isinstance(env, LabelFlipConfig):
        res = [label_flip_comparator(config.loss, env, t, config.geometry)
               for t in range(1, env.horizon + 1)]
        rows = [(r.w, r.value) for r in res]
    else:
        raise ValueError("no exact comparator for this environment")
    return {"fingerprint": _fingerprint(config),
            "weights": [[float(v) for v in w] for w, _ in rows],
            "values": [v for _, v in rows]}


def _fingerprint(config: ExperimentConfig) -> str:
    key = {k: config.raw[k] for k in ("environment", "loss", "geometry")}
    text = json.dumps(_jsonable(key), sort_keys=True)
    return f"{zlib.crc32(text.encode('utf-8')):08x}"


def optimal_values(config: ExperimentConfig, cache: ComparatorCache | None = None):
    """Per-round ``l_t(w_t*)`` when the stream has an exact oracle, else ``None``.

    If ``metrics.comparator_file`` names a table written by the ``oracle``
    command for the same environment, its values are reused.
    """
    env = config.environment
    if not config.metrics.get("compute_regret", True):
        return None
    path = config.metrics.get("comparator_file")
    if path and Path(path).is_file():
        table = json.loads(Path(path).read_text(encoding="utf-8"))
        if table.get("fingerprint") == _fingerprint(config):
            return np.asarray(table["values"], dtype=np.float64)
        log.warning("comparator file %s belongs to a different environment; recomputing", path)
    if isinstance(env, RotatingGaussianConfig) and not config.geometry.bounded:
        series = comparator_series(config.loss, env, cache=cache)
        return np.asarray(series.per_step_optimal_value)
    if isinstance(env, LabelFlipConfig):
        return np.array([label_flip_comparator(config.loss, env, t, config.geometry).value
                         for t in range(1, env.horizon + 1)])
    return None


def _expected_loss_fn(config: ExperimentConfig):
    env, spec = config.environment, config.loss
    if isinstance(env, RotatingGaussianConfig):
        return lambda w, t, rng: expected_hinge_gaussian(spec, w, env, t)
    if isinstance(env, LabelFlipConfig):
        return lambda w, t, rng: expected_hinge_label_flip(spec, w, env, t)
    n = int(config.metrics.get("mc_fallback_n") or 0)
    if isinstance(env, MulticlassRotatingConfig) and n >= 2:
        def mc(w, t, rng):
            total = 0.0
            for _ in range(n):
                x, y = multiclass_sample(env, t, rng)
                total += multiclass_hinge_value_and_gradient(spec, w, x, y)[0]
            return total / n
        return mc
    return None


def _initial_model(config: ExperimentConfig, samples, rng):
    init = config.init
    n_classes = getattr(config.environment, "n_classes", None) if config.multiclass else None
    if init["mode"] == "fixed":
        return pretrain(samples, config.loss, config.geometry, fixed_init=init["vector"])
    if not samples:
        raise ValueError("init.mode 'pretrain' but the stream provides no pretraining samples")
    return pretrain(samples, config.loss, config.geometry, epochs=int(init.get("epochs", 200)),
                    rate=float(init.get("rate", 0.05)), rng=rng,
                    batch_size=int(init.get("batch_size", 50)), n_classes=n_classes)


def _make_learner(entry: Mapping, w0: np.ndarray, config: ExperimentConfig, rate: float | None):
    kind = entry["kind"]
    p = {k: v for k, v in entry["params"].items() if v is not None}
    params = OsamdParams(**p)
    spec, geom = config.loss, config.geometry
    if kind == "osamd":
        return OsamdState(w0, w0, params, spec, geom), osamd_round
    if kind == "mosamd":
        return MosamdState(w0, w0, params, spec, geom), mosamd_round
    if kind == "no_selfadapt":
        pl = bool(entry.get("pseudolabel_updates", False))
        return (OsamdState(w0, w0, params, spec, geom),
                lambda s, x, o, r: ablation_no_selfadapt_round(s, x, o, r, pseudolabel_updates=pl))
    if kind == "no_active":
        return (OsamdState(w0, w0, params, spec, geom),
                lambda s, x, o, r: ablation_no_active_round(s, x, o, r, rate))
    if kind == "omd":
        policy = "always" if entry["query"] == "always" else rate
        return (OmdState(w0, params.eta, spec, geom),
                lambda s, x, o, r: omd_round(s, x, o, r, policy))
    if kind == "paa":
        state = PaaState(w0, delta=float(entry.get("delta", params.sigma)),
                         c_pa=float(entry.get("c_pa", params.tau_cap)), loss=spec, geometry=geom)
        return state, paa_round
    raise ValueError(f"unknown learner kind {kind!r}")


def _run_learner(entry, w0, stream, config, rate, seed, optimal, expected_fn, repeat):
    state, step = _make_learner(entry, w0, config, rate)
    rng = np.random.default_rng(seed)
    eval_rng = np.random.default_rng(seed ^ 0x5EED)
    T = len(stream)
    inst = np.empty(T)
    expected = np.full(T, np.nan)
    queried = np.zeros(T, dtype=bool)
    mistake = np.zeros(T, dtype=bool)
    correct = np.zeros(T, dtype=bool)
    for i, (t, x, y) in enumerate(stream):
        state, w, out = step(state, x, LabelOracle(y), rng)
        inst[i] = out.instantaneous_loss
        queried[i] = out.queried
        mistake[i] = out.mistake
        correct[i] = out.correct
        if expected_fn is not None:
            expected[i] = expected_fn(w, t, eval_rng)
    return RunRecord(instantaneous_loss=inst, expected_loss=expected, queried=queried,
                     mistake=mistake, correct=correct, seed=seed,
                     optimal_value=optimal, learner=entry["name"], repeat=repeat)


def _run_repeat(config: ExperimentConfig, repeat: int, optimal):
    stream_seed = derive_seed(config.base_seed, repeat, STREAM_TAG)
    stream_rng = np.random.default_rng(stream_seed)
    samples = pretrain_samples(config.environment, stream_rng)
    stream = list(iter_stream(config.environment, stream_rng))
    if optimal is not None and len(optimal) != len(stream):
        optimal = None
    expected_fn = _expected_loss_fn(config)
    records, errors = {}, {}
    try:
        w0 = _initial_model(config, samples,
                            np.random.default_rng(derive_seed(config.base_seed, repeat, "__pretrain__")))
    except Exception as exc:  # noqa: BLE001 - reported per cell
        msg = f"initialisation failed: {exc}"
        return repeat, {}, {e["name"]: msg for e in config.learners}
    # learners whose query rate is matched to an OSAMD run go last
    ordered = sorted(config.learners, key=lambda e: e.get("query") == "match")
    for entry in ordered:
        name = entry["name"]
        rate = None
        query = entry.get("query")
        if query == "match":
            ref = records.get(entry["match"])
            if ref is None:
                errors[name] = f"matched learner {entry['match']!r} has no result"
                continue
            rate = ref.query_fraction
        elif query not in (None, "always"):
            rate = float(query)
        seed = derive_seed(config.base_seed, repeat, name)
        try:
            records[name] = _run_learner(entry, w0, stream, config, rate, seed, optimal,
                                         expected_fn, repeat)
        except Exception as exc:  # noqa: BLE001 - sibling cells keep running
            log.exception("learner %s failed on repeat %d", name, repeat)
            errors[name] = f"{type(exc).__name__}: {exc}"
    return repeat, records, errors


def _run_repeat_star(args):
    return _run_repeat(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: dict
    errors: dict
    summary: dict


def run_experiment(config: ExperimentConfig | Mapping | str | None = None, jobs: int = 1,
                   cache: ComparatorCache | None = None) -> ExperimentResult:
    """Run every (learner, repeat) cell and aggregate the results.

    Within a repeat all learners consume the same stream and start from the
    same pretrained model. Learner randomness is seeded from
    ``(base_seed, repeat, learner name)``.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    optimal = optimal_values(config, cache)
    tasks = [(config, r, optimal) for r in range(config.repeats)]
    if jobs > 1 and config.repeats > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_repeat_star, tasks))
    else:
        results = [_run_repeat(*task) for task in tasks]
    results.sort(key=lambda item: item[0])
    records = {e["name"]: [] for e in config.learners}
    errors = {e["name"]: [] for e in config.learners}
    for repeat, recs, errs in results:
        for name, rec in recs.items():
            records[name].append(rec)
        for name, msg in errs.items():
            errors[name].append({"repeat": repeat, "error": msg})
    summary = summarize(records, errors, config.metrics.get("confidence", 0.90))
    return ExperimentResult(config=config, records=records, errors=errors, summary=summary)


def summarize(records: Mapping, errors: Mapping, confidence: float = 0.90) -> dict:
    out = {}
    for name, recs in records.items():
        entry = {"n_runs": len(recs), "seeds": [r.seed for r in recs], "errors": errors.get(name, [])}
        if len(recs) >= 2:
            agg = aggregate_runs(recs, confidence)
        else:
            agg = {k: {"mean": (None if not recs else recs[0].summary()[k]), "ci": None}
                   for k in ("accuracy", "query_fraction", "final_accumulated_loss",
                             "final_dynamic_regret", "mistakes")}
        for key, label in (("accuracy", "accuracy"), ("query_fraction", "label_fraction"),
                           ("final_dynamic_regret", "final_regret"),
                           ("final_accumulated_loss", "final_accumulated_loss"),
                           ("mistakes", "pseudolabel_mistakes")):
            entry[f"{label}_mean"] = agg[key]["mean"]
            entry[f"{label}_ci"] = agg[key]["ci"]
        out[name] = entry
    return out


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_") or "learner"


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def run_csv_text(record: RunRecord) -> str:
    """Per-round CSV for one run; missing metrics are empty cells."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "instantaneous_loss", "accumulated_loss", "expected_loss", "regret",
                     "queried", "mistake", "correct"])
    acc = record.accumulated_loss
    regret = record.regret
    for i in range(record.horizon):
        writer.writerow([i + 1, _fmt(record.instantaneous_loss[i]), _fmt(acc[i]),
                         _fmt(record.expected_loss[i]),
                         _fmt(None if regret is None else regret[i]),
                         _fmt(bool(record.queried[i])), _fmt(bool(record.mistake[i])),
                         _fmt(bool(record.correct[i]))])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def emit_results(result: ExperimentResult, out_dir: str | os.PathLike | None = None) -> Path:
    """Write per-run CSVs, ``summary.json`` and ``config.resolved.json``.

    Returns the output directory.
    """
    out = Path(out_dir if out_dir is not None else result.config.output.get("directory", "results"))
    formats = set(result.config.output.get("formats", ["csv", "json"]))
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            for name, recs in result.records.items():
                run_dir = out / "runs" / _slug(name)
                run_dir.mkdir(parents=True, exist_ok=True)
                for rec in recs:
                    (run_dir / f"repeat_{rec.repeat:03d}.csv").write_text(run_csv_text(rec),
                                                                          encoding="utf-8")
        if "json" in formats:
            (out / "summary.json").write_text(
                json.dumps(_jsonable(result.summary), indent=2, sort_keys=True) + "\n",
                encoding="utf-8")
        (out / "config.resolved.json").write_text(
            json.dumps(_jsonable(result.config.raw), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return out


def label_flip_config(horizon: int = 2000, repeats: int = 10, base_seed: int = 0,
                    sigma: float = 0.1, eta: float = 0.05) -> dict:
    """Label-flip stream in the unit ball, started from the phase-one optimum ``(-1, 0)``.

    Compares OSAMD against a self-trainer that never queries.
    """
    return {
        "environment": {"kind": "label_flip", "horizon": horizon},
        "loss": {"margin_target": 1.0, "penalty_C": 0.0, "penalize_bias": True},
        "geometry": {"radius": 1.0},
        "init": {"mode": "fixed", "vector": [-1.0, 0.0]},
        "defaults": {"sigma": sigma, "eta": eta, "tau_cap": 1.0, "tau_margin": 1.0,
                     "inner_iterations": 20, "inner_rate": None},
        "learners": [
            {"name": "OSAMD", "kind": "osamd"},
            {"name": "self-trainer", "kind": "no_active", "query": 0.0},
        ],
        "repeats": repeats,
        "base_seed": base_seed,
        "metrics": {"compute_regret": True, "mc_fallback_n": 0, "confidence": 0.90},
        "output": {"directory": "results/label_flip", "formats": ["csv", "json"]},
    }


def label_flip_scenario(horizon: int = 2000, repeats: int = 10, base_seed: int = 0,
                      jobs: int = 1, **kwargs) -> tuple[ExperimentResult, dict]:
    """Run the label-flip scenario and report second-half statistics per learner."""
    config = load_config(label_flip_config(horizon, repeats, base_seed, **kwargs))
    result = run_experiment(config, jobs=jobs)
    half = horizon // 2
    report = {}
    for name, recs in result.records.items():
        post_loss = [float(r.instantaneous_loss[half:].sum()) for r in recs]
        post_regret = [float((r.instantaneous_loss[half:] - r.optimal_value[half:]).sum())
                       for r in recs]
        report[name] = {
            "post_flip_loss_mean": float(np.mean(post_loss)),
            "post_flip_regret_mean": float(np.mean(post_regret)),
            "query_fraction_mean": float(np.mean([r.query_fraction for r in recs])),
            "horizon": horizon,
        }
    return result, report
