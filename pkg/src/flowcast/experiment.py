"""Experiment runner: repeat-seeded pipeline runs tracked in the run store.

One experiment = one base series (trace file, series CSV, or synthetic
generator) evaluated by the configured forecasters over ``repeats``
repeats. Repeat r uses seed ``master_seed + r`` for window sampling and
any model randomness. Every model is scored the same way: one-step-ahead
walk-forward predictions over the chronological test split, per channel,
so count-MAE and bytes-MAE are comparable across model kinds.

Artifacts per run: ``metrics.csv`` (one row per repeat/model/channel),
Scott-Knott rankings, a two-column Markdown report, and for tree models
the compiled ternary table with its equivalence verdict and capacity
report.
"""

from __future__ import annotations

import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import p4c
from .analysis import SmoothingParams, adf_test, smooth_hw, smooth_ma, smooth_ses
from .errors import FlowcastError
from .evaluation import MetricReport, point_metrics, scott_knott
from .models.bdt import BdtForecaster
from .models.holtwinters import HwForecaster
from .models.rrp import RrpForecaster
from .models.var import VarForecaster, one_step_predictions
from .rng import derive_seed
from .runstore import RunHandle, open_run
from .series import Stratum, StratumKind, TimeSeries, read_csv, stratified_sample
from .synthetic import seasonal_series
from .trace import iter_records
from .series import aggregate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ExperimentConfig", "run_experiment", "evaluate_model", "MODEL_KINDS"]

MODEL_KINDS = ("var", "hw", "rrp", "bdt")

_DEFAULT_MODELS = {
    "var": {"maxlags": 7, "ic": "hqic"},
    "hw": {"alpha": 0.5, "beta": 0.1, "gamma": 0.3, "phi": 1.0, "season_length": 24},
    "rrp": {"stop_depth": 4, "lags": 3},
    "bdt": {"max_depth": 8, "min_leaf": 1, "n_labels": 16, "lags": 3, "field_bits": 8},
}


@dataclass
class ExperimentConfig:
    """All knobs of one experiment; everything lands in the run manifest."""

    dataset: str
    repeats: int = 10
    master_seed: int = 0
    interval: int = 3600
    stratum: Optional[str] = None
    train_fraction: float = 0.8
    smoothing: str = "none"
    smoothing_params: dict = field(default_factory=dict)
    models: dict = field(default_factory=lambda: {k: dict(v) for k, v in _DEFAULT_MODELS.items()})
    capacity_bits: int = 65536
    label_bits: int = 8
    synthetic: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.repeats < 1:
            raise FlowcastError("bad-config", "repeats must be >= 1")
        if not (0.0 < self.train_fraction < 1.0):
            raise FlowcastError("bad-config", "train_fraction must be in (0,1)")
        if self.interval <= 0:
            raise FlowcastError("bad-config", "interval must be positive")
        if self.smoothing not in ("none", "ma", "ses"):
            raise FlowcastError("bad-config", f"unknown smoothing {self.smoothing!r}")
        if self.stratum is not None and self.stratum not in ("day", "week", "month"):
            raise FlowcastError("bad-config", f"unknown stratum {self.stratum!r}")
        for kind in self.models:
            if kind not in MODEL_KINDS:
                raise FlowcastError("bad-config", f"unknown model kind {kind!r}")
        if not self.models:
            raise FlowcastError("bad-config", "no models configured")
        # canonical model order keeps artifacts byte-stable across replays
        self.models = {k: self.models[k] for k in MODEL_KINDS if k in self.models}
        if not self.dataset.startswith("synthetic:") and not os.path.exists(self.dataset):
            raise FlowcastError("bad-config", f"dataset file not found: {self.dataset}")

    @classmethod
    def from_toml(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise FlowcastError("bad-config", f"cannot read config: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise FlowcastError("bad-config", f"bad TOML: {exc}") from exc

        exp = raw.get("experiment", {})
        dataset = raw.get("dataset", {})
        cfg = cls(
            dataset=str(dataset.get("source", "synthetic:seasonal")),
            repeats=int(exp.get("repeats", 10)),
            master_seed=int(exp.get("master_seed", 0)),
            interval=int(exp.get("interval", 3600)),
            stratum=exp.get("stratum") or None,
            train_fraction=float(exp.get("train_fraction", 0.8)),
            smoothing=str(exp.get("smoothing", "none")),
            smoothing_params=dict(raw.get("smoothing", {})),
            capacity_bits=int(exp.get("capacity_bits", 65536)),
            label_bits=int(exp.get("label_bits", 8)),
            synthetic={k: v for k, v in dataset.items() if k != "source"},
        )
        if "models" in raw:
            cfg.models = {}
            for kind, params in raw["models"].items():
                defaults = dict(_DEFAULT_MODELS.get(kind, {}))
                defaults.update(params)
                cfg.models[kind] = defaults
        cfg.validate()
        return cfg

    def apply_override(self, dotted: str, value: str) -> None:
        """CLI override ``section.key=value`` with TOML-style scalars."""
        parts = dotted.split(".")
        target: dict
        if parts[0] == "models" and len(parts) == 3:
            target = self.models.setdefault(parts[1], dict(_DEFAULT_MODELS.get(parts[1], {})))
            key = parts[2]
        elif parts[0] == "smoothing" and len(parts) == 2:
            target, key = self.smoothing_params, parts[1]
        elif parts[0] == "dataset" and len(parts) == 2 and parts[1] != "source":
            target, key = self.synthetic, parts[1]
        elif len(parts) == 1:
            key = parts[0]
            if not hasattr(self, key):
                raise FlowcastError("bad-config", f"unknown config key {dotted!r}")
            current = getattr(self, key)
            setattr(self, key, _coerce_like(current, value))
            return
        else:
            raise FlowcastError("bad-config", f"unknown config key {dotted!r}")
        target[key] = _parse_scalar(value)

    def to_params(self) -> Dict[str, str]:
        out = {
            "dataset": self.dataset,
            "repeats": str(self.repeats),
            "seed.master": str(self.master_seed),
            "interval": str(self.interval),
            "stratum": self.stratum or "none",
            "train_fraction": str(self.train_fraction),
            "smoothing": self.smoothing,
            "capacity_bits": str(self.capacity_bits),
            "label_bits": str(self.label_bits),
            "eval_protocol": "one-step-walk-forward",
        }
        for r in range(self.repeats):
            out[f"seed.repeat.{r}"] = str(derive_seed(self.master_seed, r))
        for key, val in self.smoothing_params.items():
            out[f"smoothing.{key}"] = str(val)
        for kind, params in self.models.items():
            for key, val in params.items():
                out[f"models.{kind}.{key}"] = str(val)
        for key, val in self.synthetic.items():
            out[f"dataset.{key}"] = str(val)
        return out

    @classmethod
    def from_params(cls, params: Dict[str, str]) -> "ExperimentConfig":
        """Rebuild a config from a run manifest's flat parameter map, so a
        finished run can be replayed bit-for-bit."""
        stratum = params.get("stratum", "none")
        cfg = cls(
            dataset=params["dataset"],
            repeats=int(params["repeats"]),
            master_seed=int(params["seed.master"]),
            interval=int(params["interval"]),
            stratum=None if stratum == "none" else stratum,
            train_fraction=float(params["train_fraction"]),
            smoothing=params.get("smoothing", "none"),
            capacity_bits=int(params.get("capacity_bits", 65536)),
            label_bits=int(params.get("label_bits", 8)),
        )
        cfg.models = {}
        cfg.synthetic = {}
        cfg.smoothing_params = {}
        for key, val in params.items():
            if key.startswith("models."):
                _, kind, name = key.split(".", 2)
                cfg.models.setdefault(kind, {})[name] = _parse_scalar(val)
            elif key.startswith("smoothing."):
                cfg.smoothing_params[key.split(".", 1)[1]] = _parse_scalar(val)
            elif key.startswith("dataset."):
                cfg.synthetic[key.split(".", 1)[1]] = _parse_scalar(val)
        if not cfg.models:
            cfg.models = {k: dict(v) for k, v in _DEFAULT_MODELS.items()}
        return cfg


def _parse_scalar(text: str):
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            continue
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _coerce_like(current, value: str):
    if isinstance(current, bool):
        return value.lower() == "true"
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


# ---------------------------------------------------------------------------
# data loading

def load_series(config: ExperimentConfig) -> TimeSeries:
    src = config.dataset
    if src.startswith("synthetic:"):
        kind = src.split(":", 1)[1]
        if kind != "seasonal":
            raise FlowcastError("bad-config", f"unknown synthetic dataset {kind!r}")
        knobs = dict(config.synthetic)
        knobs.setdefault("n_bins", 240)
        return seasonal_series(seed=config.master_seed, interval=config.interval,
                               **knobs)
    if src.endswith(".csv"):
        return read_csv(src)
    with open(src, "rb") as fh:
        return aggregate(iter_records(fh), config.interval)


# ---------------------------------------------------------------------------
# per-model one-step evaluators

def _lag_rows(x: np.ndarray, lags: int):
    """Rows [x_{t-lags} .. x_{t-1}, x_t] for t = lags..len(x)-1."""
    n = len(x)
    rows = np.empty((n - lags, lags + 1))
    for j in range(lags):
        rows[:, j] = x[j:n - lags + j]
    rows[:, lags] = x[lags:]
    return rows


def _quantizer(train_vals: np.ndarray, bits: int):
    lo = float(train_vals.min())
    hi = float(train_vals.max())
    top = (1 << bits) - 1
    scale = top / (hi - lo) if hi > lo else 0.0

    def quantize(v: float) -> int:
        q = int(round((v - lo) * scale))
        return min(max(q, 0), top)

    return quantize


def _eval_var(data: np.ndarray, cut: int, params: dict, seed: int):
    f = VarForecaster(maxlags=int(params["maxlags"]), ic=str(params["ic"]))
    f.fit(data[:cut])
    preds = one_step_predictions(f.model, data, start=cut)
    return preds, f.size_bytes()

def _eval_hw(data: np.ndarray, cut: int, params: dict, seed: int):
    sp = SmoothingParams(alpha=float(params["alpha"]), beta=float(params["beta"]),
                         gamma=float(params["gamma"]), phi=float(params.get("phi", 1.0)),
                         L=int(params["season_length"]), m=1)
    preds = np.empty((data.shape[0] - cut, data.shape[1]))
    size = 0
    for c in range(data.shape[1]):
        # The recursion is causal, so fitted values over the test range are
        # true one-step-ahead predictions.
        result = smooth_hw(data[:, c], sp)
        preds[:, c] = result.fitted[cut:]
        size += HwForecaster(sp).fit(data[:cut, c]).size_bytes()
    return preds, size


def _eval_rrp(data: np.ndarray, cut: int, params: dict, seed: int):
    lags = int(params["lags"])
    stop_depth = int(params["stop_depth"])
    if cut <= lags:
        raise FlowcastError("insufficient-data", "train split shorter than lag window")
    n = data.shape[0]
    preds = np.empty((n - cut, data.shape[1]))
    size = 0
    for c in range(data.shape[1]):
        x = data[:, c]
        f = RrpForecaster(stop_depth=stop_depth, target_index=lags, seed=seed)
        f.fit(_lag_rows(x[:cut], lags))
        for t in range(cut, n):
            # unknown target slot carries the naive previous value
            row = np.concatenate([x[t - lags:t], [x[t - 1]]])
            preds[t - cut, c] = f.predict(row)
        size += f.size_bytes()
    return preds, size


def _eval_bdt(data: np.ndarray, cut: int, params: dict, seed: int,
              keep_forecaster: Optional[list] = None):
    lags = int(params["lags"])
    bits = int(params["field_bits"])
    if cut <= lags:
        raise FlowcastError("insufficient-data", "train split shorter than lag window")
    width = lags * bits
    layout = p4c.KeyLayout(tuple(p4c.KeyField(f"lag{j}", bits) for j in range(lags)))
    n = data.shape[0]
    preds = np.empty((n - cut, data.shape[1]))
    size = 0
    for c in range(data.shape[1]):
        x = data[:, c]
        quantize = _quantizer(x[:cut], bits)

        def key_at(t: int) -> int:
            return layout.encode([quantize(v) for v in x[t - lags:t]])

        keys = [key_at(t) for t in range(lags, cut)]
        targets = x[lags:cut]
        f = BdtForecaster(max_depth=int(params["max_depth"]),
                          min_leaf=int(params["min_leaf"]),
                          n_labels=int(params["n_labels"]),
                          key_width=width)
        f.fit(keys, targets)
        for t in range(cut, n):
            preds[t - cut, c] = f.predict_value(key_at(t))
        size += f.size_bytes()
        if keep_forecaster is not None and c == 0:
            keep_forecaster.append(f)
    return preds, size


_EVALUATORS = {"var": _eval_var, "hw": _eval_hw, "rrp": _eval_rrp, "bdt": _eval_bdt}


def evaluate_model(kind: str, data: np.ndarray, cut: int, params: dict,
                   seed: int = 0):
    """One-step walk-forward evaluation of one model kind.

    ``data`` is a (T, channels) float matrix, ``cut`` the chronological
    train/test boundary. Missing hyperparameters fall back to the shipped
    defaults. Returns (predictions over the test rows, model size in bytes).
    """
    if kind not in _EVALUATORS:
        raise FlowcastError("bad-parameter", f"unknown model kind {kind!r}")
    merged = dict(_DEFAULT_MODELS[kind])
    merged.update(params or {})
    return _EVALUATORS[kind](np.asarray(data, dtype=float), cut, merged, seed)


# ---------------------------------------------------------------------------
# the runner

_METRIC_COLS = ("mae", "rmse", "mape", "smape", "mdape", "gmrae")
_CHANNELS = ("count", "bytes")


def _run_repeat(config: ExperimentConfig, base: TimeSeries, repeat: int,
                keep_bdt: Optional[list]):
    seed = derive_seed(config.master_seed, repeat)
    stage = "sample"
    try:
        if config.stratum is not None:
            window = stratified_sample(base, Stratum(StratumKind(config.stratum), seed))
        else:
            window = base

        stage = "smooth"
        data = np.column_stack([window.counts, window.bytes]).astype(float)
        if config.smoothing == "ma":
            k = int(config.smoothing_params.get("k", 3))
            data = np.column_stack([smooth_ma(data[:, c], k) for c in range(2)])
        elif config.smoothing == "ses":
            alpha = float(config.smoothing_params.get("alpha", 0.5))
            data = np.column_stack([smooth_ses(data[:, c], alpha) for c in range(2)])

        stage = "split"
        n = data.shape[0]
        cut = int(n * config.train_fraction)
        if cut < 1 or cut >= n:
            raise FlowcastError("degenerate-split", f"n={n}, fraction={config.train_fraction}")

        results = {}
        for kind, params in config.models.items():
            stage = f"fit.{kind}"
            if kind == "bdt":
                preds, size = _eval_bdt(data, cut, params, seed,
                                        keep_bdt if repeat == 0 else None)
            else:
                preds, size = _EVALUATORS[kind](data, cut, params, seed)
            stage = f"evaluate.{kind}"
            reports = {}
            nmae = {}
            for c, ch in enumerate(_CHANNELS):
                actual = data[cut:, c]
                rep = point_metrics(actual, preds[:, c])
                reports[ch] = rep
                # normalized MAE levels the two channels' scales: raw MAE
                # over the mean absolute test actual
                scale = float(np.mean(np.abs(actual)))
                nmae[ch] = rep.mae / scale if scale > 0 else float("nan")
            results[kind] = {"reports": reports, "nmae": nmae, "size_bytes": size}
        return results
    except FlowcastError as exc:
        raise _StageError(stage, exc) from exc


class _StageError(Exception):
    def __init__(self, stage: str, error: FlowcastError):
        self.stage = stage
        self.error = error
        super().__init__(f"stage {stage}: {error}")


def _metrics_csv(all_results: list) -> str:
    out = io.StringIO()
    out.write("repeat,model,channel," + ",".join(_METRIC_COLS) + ",nmae,size_bytes\n")
    for repeat, results in enumerate(all_results):
        for kind in results:
            size = results[kind]["size_bytes"]
            for ch in _CHANNELS:
                rep: MetricReport = results[kind]["reports"][ch]
                vals = ",".join(repr(getattr(rep, m)) for m in _METRIC_COLS)
                nmae = results[kind]["nmae"][ch]
                out.write(f"{repeat},{kind},{ch},{vals},{nmae!r},{size}\n")
    return out.getvalue()


def _ranking_csv(groups) -> str:
    out = io.StringIO()
    out.write("rank,model,mean_objective\n")
    for g in groups:
        for name in g.members:
            mean = float(np.mean(g.samples[name]))
            out.write(f"{g.rank},{name},{repr(mean)}\n")
    return out.getvalue()


def _report_md(config: ExperimentConfig, all_results: list,
               rank_lines: Dict[str, int]) -> str:
    kinds = list(config.models.keys())
    lines = [
        "# Forecast comparison",
        "",
        f"Dataset: `{config.dataset}`, repeats: {config.repeats}, "
        f"interval: {config.interval}s, stratum: {config.stratum or 'none'}.",
        "Values are mean absolute error over one-step-ahead test predictions, "
        "averaged across repeats.",
        "",
        "| Algorithm | Number of packets (MAE) | Sum of packet sizes (MAE) |",
        "|---|---|---|",
    ]
    for kind in kinds:
        maes = {
            ch: float(np.mean([r[kind]["reports"][ch].mae for r in all_results]))
            for ch in _CHANNELS
        }
        label = kind.upper()
        lines.append(f"| {label} | {maes['count']:.6g} | {maes['bytes']:.6g} |")
    if rank_lines:
        lines.append("")
        lines.append("Scott-Knott ranks (count-channel MAE): "
                     + ", ".join(f"{k}={v}" for k, v in rank_lines.items()))
    return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig, root: str = "runs",
                   jobs: int = 1) -> str:
    """Execute the configured pipeline; returns the run id.

    Any stage error aborts the run; the failing stage is recorded in the
    manifest before the error propagates.
    """
    config.validate()
    handle: RunHandle = open_run(root, config.to_params())
    try:
        base = load_series(config)
        keep_bdt: list = []

        # Stationarity record: the verdict is logged, never acted on
        # (no automatic differencing).
        for ch in _CHANNELS:
            try:
                verdict = adf_test(base.channel(ch).astype(float))
            except FlowcastError:
                handle.set_param(f"adf.{ch}", "degenerate")
                continue
            handle.log_metric(f"adf.statistic.{ch}", verdict.statistic)
            handle.log_metric(f"adf.p_value.{ch}", verdict.p_value)
            handle.set_param(f"adf.reject_at_5pct.{ch}",
                             "true" if verdict.reject_at[0.05] else "false")

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    pool.submit(_run_repeat, config, base, r, keep_bdt)
                    for r in range(config.repeats)
                ]
                all_results = [f.result() for f in futures]
        else:
            all_results = [
                _run_repeat(config, base, r, keep_bdt) for r in range(config.repeats)
            ]

        handle.log_artifact("metrics.csv", _metrics_csv(all_results))

        rank_of = {}
        if config.repeats >= 2 and len(config.models) >= 1:
            for ch in _CHANNELS:
                samples = {
                    kind: [r[kind]["reports"][ch].mae for r in all_results]
                    for kind in config.models
                }
                groups = scott_knott(samples)
                handle.log_artifact(f"ranking_{ch}.csv", _ranking_csv(groups))
                if ch == "count":
                    rank_of = {name: g.rank for g in groups for name in g.members}

        for kind in config.models:
            handle.log_metric(f"size_bytes.{kind}",
                              float(np.mean([r[kind]["size_bytes"] for r in all_results])))
            for ch in _CHANNELS:
                for m in ("mae", "rmse"):
                    vals = [getattr(r[kind]["reports"][ch], m) for r in all_results]
                    handle.log_metric(f"{m}.{ch}.{kind}", float(np.mean(vals)))
                handle.log_metric(f"nmae.{ch}.{kind}",
                                  float(np.mean([r[kind]["nmae"][ch] for r in all_results])))

        if keep_bdt:
            forecaster = keep_bdt[0]
            tree = forecaster.tree
            table = p4c.compile_tree(tree)
            buf = io.StringIO()
            p4c.write_table(table, buf)
            handle.log_artifact("bdt_count.tbl", buf.getvalue())

            exhaustive = tree.key_width <= p4c.EXHAUSTIVE_WIDTH_LIMIT
            verdict = p4c.verify_equivalence(tree, table, exhaustive=exhaustive,
                                             n_samples=20000, seed=config.master_seed)
            capacity = p4c.check_constraints(table, config.capacity_bits,
                                             config.label_bits)
            handle.log_metric("bdt.equivalent", 1.0 if verdict.equivalent else 0.0)
            handle.log_metric("bdt.rules", float(capacity.entries))
            handle.log_metric("bdt.total_bits", float(capacity.total_bits))
            handle.log_metric("bdt.fits", 1.0 if capacity.fits else 0.0)

        handle.log_artifact("report.md", _report_md(config, all_results, rank_of))
        manifest = handle.finalize()
        return manifest.run_id
    except _StageError as exc:
        handle.set_param("status", "failed")
        handle.set_param("failed_stage", exc.stage)
        handle.finalize()
        raise exc.error
    except FlowcastError:
        handle.set_param("status", "failed")
        handle.set_param("failed_stage", "load")
        handle.finalize()
        raise
