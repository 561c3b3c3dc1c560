"""flowcast command line: each pipeline stage standalone, plus the runner.

Exit codes: 0 success, 1 usage error (bad flags/knobs), 2 data error
(unreadable or contract-violating inputs), 3 internal invariant violation.
All stages are pure functions of their input files, flags, and seeds;
repeat invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from . import analysis, evaluation, p4c, series, trace, tuning
from .errors import USAGE_CODES, FlowcastError
from .experiment import ExperimentConfig, run_experiment
from .models import bdt as bdt_mod
from .models import BdtForecaster, HwForecaster, RrpForecaster, VarForecaster
from .runstore import code_fingerprint, list_runs, load_manifest


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_values(path: str, channel: str) -> np.ndarray:
    """Series CSV (selected channel) or a plain one-value-per-line file."""
    with open(path, "r", encoding="ascii") as fh:
        first = fh.readline().strip()
    if first == series.CSV_HEADER:
        return series.read_csv(path).channel(channel).astype(float)
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                try:
                    out.append(float(line))
                except ValueError:
                    raise FlowcastError("bad-structure", f"bad value line {line!r}") from None
    if not out:
        raise FlowcastError("empty-input", f"no values in {path}")
    return np.array(out)


def _load_channel(path: str, channel: str) -> np.ndarray:
    return series.read_csv(path).channel(channel).astype(float)


# ---------------------------------------------------------------------------
# subcommands

def cmd_ingest(args) -> int:
    records = []
    with open(args.file, "rb") as fh:
        report = trace.ingest_file(fh, records.append,
                                   max_reject_samples=args.max_reject_samples)
    print(f"lines_total: {report.lines_total}")
    print(f"lines_ok: {report.lines_ok}")
    print(f"lines_rejected: {report.lines_rejected}")
    if args.reject_report:
        with open(args.reject_report, "w", encoding="utf-8") as fh:
            fh.write(f"lines_total {report.lines_total}\n")
            fh.write(f"lines_ok {report.lines_ok}\n")
            fh.write(f"lines_rejected {report.lines_rejected}\n")
            for reason, line in report.reject_samples:
                fh.write(f"{reason}\t{line}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("host,timestamp,path,status,bytes\n")
            for r in records:
                fh.write(f"{r.host},{r.timestamp},{r.path},{r.status},{r.bytes}\n")
    return 0


def cmd_aggregate(args) -> int:
    with open(args.input, "rb") as fh:
        ts = series.aggregate(trace.iter_records(fh), args.interval)
    series.write_csv(ts, args.out)
    print(f"bins: {ts.n_bins} interval: {ts.interval}s "
          f"records: {int(ts.counts.sum())} bytes: {int(ts.bytes.sum())}")
    return 0


def cmd_sample(args) -> int:
    ts = series.read_csv(args.input)
    stratum = series.Stratum(series.StratumKind(args.stratum), args.seed)
    window = series.stratified_sample(ts, stratum)
    series.write_csv(window, args.out)
    print(f"window_start: {window.start} bins: {window.n_bins}")
    return 0


def cmd_decompose(args) -> int:
    x = _load_channel(args.input, args.channel)
    dec = analysis.decompose(x, args.period)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("index,observed,trend,seasonal,residual\n")
        for i in range(len(x)):
            fh.write(f"{i},{dec.observed[i]!r},{dec.trend[i]!r},"
                     f"{dec.seasonal[i]!r},{dec.residual[i]!r}\n")
    print(f"period: {args.period} rows: {len(x)}")
    return 0


def cmd_adf(args) -> int:
    x = _load_channel(args.input, args.channel)
    result = analysis.adf_test(x, max_lag=args.max_lag)
    print(f"statistic: {result.statistic:.6f}")
    print(f"p_value: {result.p_value:.6f}")
    print(f"lags_used: {result.lags_used}")
    for level in (0.01, 0.05, 0.10):
        pct = int(level * 100)
        print(f"reject@{pct}%: {'true' if result.reject_at[level] else 'false'}")
    return 0


def cmd_smooth(args) -> int:
    x = _load_channel(args.input, args.channel)
    if args.method == "diff":
        # plain differencing transform (the one non-smoothing method here)
        diffed = analysis.difference(x, args.k)
        if args.out:
            with open(args.out, "w", encoding="ascii") as fh:
                fh.write("index,value\n")
                for i, v in enumerate(diffed, start=args.k):
                    fh.write(f"{i},{v!r}\n")
        print(f"method: diff order: {args.k} rows: {len(diffed)}")
        return 0
    if args.method == "ma":
        smoothed = analysis.smooth_ma(x, args.k)
    elif args.method == "ses":
        smoothed = analysis.smooth_ses(x, args.alpha)
    elif args.method == "des":
        smoothed = analysis.smooth_des(x, args.alpha, args.beta).level
    else:
        params = analysis.SmoothingParams(
            alpha=args.alpha, beta=args.beta, gamma=args.gamma,
            phi=args.phi, L=args.season_length, m=args.horizon,
        )
        result = analysis.smooth_hw(x, params)
        smoothed = result.fitted
        if args.forecast_out:
            with open(args.forecast_out, "w", encoding="ascii") as fh:
                fh.write("step,forecast\n")
                for i, v in enumerate(result.forecast, start=1):
                    fh.write(f"{i},{v!r}\n")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write("index,observed,smoothed\n")
            for i in range(len(x)):
                fh.write(f"{i},{x[i]!r},{smoothed[i]!r}\n")
    print(f"method: {args.method} rows: {len(x)}")
    return 0


def cmd_fit(args) -> int:
    ts = series.read_csv(args.input)
    if args.model == "var":
        data = np.column_stack([ts.counts, ts.bytes]).astype(float)
        model = VarForecaster(maxlags=args.maxlags, ic=args.ic).fit(data)
        print(f"selected_p: {model.model.p}")
    elif args.model == "hw":
        params = analysis.SmoothingParams(
            alpha=args.alpha, beta=args.beta, gamma=args.gamma,
            phi=args.phi, L=args.season_length, m=args.horizon,
        )
        model = HwForecaster(params).fit(ts.channel(args.channel).astype(float))
    elif args.model == "rrp":
        x = ts.channel(args.channel).astype(float)
        from .experiment import _lag_rows
        model = RrpForecaster(stop_depth=args.stop_depth, target_index=args.lags,
                              seed=args.seed).fit(_lag_rows(x, args.lags))
    else:
        x = ts.channel(args.channel).astype(float)
        from .experiment import _lag_rows, _quantizer
        quantize = _quantizer(x, args.field_bits)
        layout = p4c.KeyLayout(tuple(
            p4c.KeyField(f"lag{j}", args.field_bits) for j in range(args.lags)
        ))
        rows = _lag_rows(x, args.lags)
        keys = [layout.encode([quantize(v) for v in row[:-1]]) for row in rows]
        model = BdtForecaster(max_depth=args.max_depth, min_leaf=args.min_leaf,
                              n_labels=args.n_labels,
                              key_width=args.lags * args.field_bits)
        model.fit(keys, rows[:, -1])
        if args.tree_out:
            with open(args.tree_out, "w", encoding="ascii") as fh:
                fh.write(bdt_mod.tree_to_text(model.tree))
    with open(args.out, "wb") as fh:
        fh.write(model.to_bytes())
    print(f"model: {args.model} size_bytes: {model.size_bytes()}")
    return 0


def _tuning_space(model: str, method: str) -> tuning.ParamSpace:
    if model == "hw":
        if method == "grid":
            grid = tuning.Categorical((0.1, 0.3, 0.5, 0.7, 0.9))
            return tuning.ParamSpace({"alpha": grid, "beta": grid, "gamma": grid})
        return tuning.ParamSpace({
            "alpha": tuning.RealRange(0.05, 0.95),
            "beta": tuning.RealRange(0.05, 0.95),
            "gamma": tuning.RealRange(0.05, 0.95),
        })
    if model == "var":
        return tuning.ParamSpace({
            "maxlags": tuning.IntRange(1, 8),
            "ic": tuning.Categorical(("aic", "bic", "hqic")),
        })
    if model == "rrp":
        return tuning.ParamSpace({"stop_depth": tuning.IntRange(2, 16)})
    if model == "bdt":
        return tuning.ParamSpace({
            "max_depth": tuning.IntRange(2, 10),
            "n_labels": tuning.Categorical((4, 8, 16, 32)),
        })
    raise FlowcastError("bad-parameter", f"unknown model {model!r}")


def cmd_tune(args) -> int:
    ts = series.read_csv(args.input)
    data = np.column_stack([ts.counts, ts.bytes]).astype(float)
    cut = int(data.shape[0] * 0.8)
    if cut < 2 or cut >= data.shape[0]:
        raise FlowcastError("insufficient-data", "series too short to tune on")
    channel_idx = 0 if args.channel == "count" else 1

    from .experiment import evaluate_model

    def objective(**params):
        model_params = dict(params)
        if args.model == "hw":
            model_params.setdefault("season_length", args.season_length)
        preds, _ = evaluate_model(args.model, data, cut, model_params, args.seed)
        return evaluation.point_metrics(data[cut:, channel_idx],
                                        preds[:, channel_idx]).mae

    space = _tuning_space(args.model, args.method)
    if args.method == "grid":
        best, trials = tuning.grid_search(space, objective)
    else:
        best, trials = tuning.random_search(space, args.budget, args.seed, objective)
    if args.trials_out:
        with open(args.trials_out, "w", encoding="ascii") as fh:
            tuning.write_trials_csv(trials, fh)
    print(f"trials: {len(trials)}")
    print(f"best_objective: {best.objective!r}")
    for key, val in best.params.items():
        print(f"best.{key}: {val}")
    return 0


def cmd_eval(args) -> int:
    actual = _read_values(args.actual, args.channel)
    predicted = _read_values(args.predicted, args.channel)
    report = evaluation.point_metrics(actual, predicted)
    for key, val in report.as_dict().items():
        print(f"{key}: {val!r}")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            items = report.as_dict()
            fh.write(",".join(items.keys()) + "\n")
            fh.write(",".join(repr(v) for v in items.values()) + "\n")
    return 0


def cmd_rank(args) -> int:
    samples: dict = {}
    with open(args.input, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "treatment,value":
            raise FlowcastError("bad-structure", "expected header 'treatment,value'")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            name, value = line.split(",")
            samples.setdefault(name, []).append(float(value))
    groups = evaluation.scott_knott(samples)
    for g in groups:
        members = " ".join(g.members)
        print(f"rank {g.rank}: {members}")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write("rank,treatment,mean\n")
            for g in groups:
                for name in g.members:
                    fh.write(f"{g.rank},{name},{repr(float(np.mean(g.samples[name])))}\n")
    return 0


def cmd_compile(args) -> int:
    with open(args.tree, "r", encoding="ascii") as fh:
        tree = bdt_mod.tree_from_text(fh.read())
    table = p4c.compile_tree(tree)
    with open(args.out, "w", encoding="ascii") as fh:
        p4c.write_table(table, fh)
    print(f"rules: {len(table.rules)} width: {table.key_width}")
    return 0


def cmd_verify(args) -> int:
    with open(args.tree, "r", encoding="ascii") as fh:
        tree = bdt_mod.tree_from_text(fh.read())
    with open(args.table, "r", encoding="ascii") as fh:
        table = p4c.read_table(fh)
    verdict = p4c.verify_equivalence(
        tree, table, exhaustive=args.exhaustive,
        n_samples=args.samples, seed=args.seed,
    )
    print(f"equivalent: {'true' if verdict.equivalent else 'false'}")
    print(f"keys_checked: {verdict.keys_checked}")
    if not verdict.equivalent:
        print(f"counterexample: {verdict.counterexample:#x} "
              f"tree={verdict.tree_label} table={verdict.table_label}")
    return 0


def cmd_lookup(args) -> int:
    with open(args.table, "r", encoding="ascii") as fh:
        table = p4c.read_table(fh)
    key = int(args.key, 0)
    print(f"label: {p4c.lookup(table, key)}")
    return 0


def cmd_capacity(args) -> int:
    with open(args.table, "r", encoding="ascii") as fh:
        table = p4c.read_table(fh)
    report = p4c.check_constraints(table, args.capacity_bits, args.label_bits)
    print(f"entries: {report.entries}")
    print(f"entry_bits: {report.entry_bits}")
    print(f"total_bits: {report.total_bits}")
    print(f"capacity_bits: {report.capacity_bits}")
    print(f"fits: {'true' if report.fits else 'false'}")
    return 0


def cmd_runs(args) -> int:
    if args.action == "list":
        for manifest in list_runs(args.root):
            status = manifest.params.get("status", "ok")
            print(f"{manifest.run_id} {status} dataset={manifest.params.get('dataset', '?')}")
        return 0
    manifest = load_manifest(args.root, args.run_id)
    print(manifest.to_json(), end="")
    return 0


def cmd_run(args) -> int:
    config = ExperimentConfig.from_toml(args.config)
    for override in args.set or []:
        if "=" not in override:
            raise FlowcastError("bad-config", f"override needs key=value: {override!r}")
        key, value = override.split("=", 1)
        config.apply_override(key, value)
    config.validate()
    run_id = run_experiment(config, root=args.root, jobs=args.jobs)
    print(run_id)
    return 0


# ---------------------------------------------------------------------------
# parser wiring

def build_parser() -> _Parser:
    parser = _Parser(prog="flowcast",
                     description="workload forecasting and match-table compilation")
    parser.add_argument("--version", action="version",
                        version=f"flowcast {__version__} ({code_fingerprint()})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an access log, report rejects")
    p.add_argument("file")
    p.add_argument("--reject-report")
    p.add_argument("--out", help="write accepted records as CSV")
    p.add_argument("--max-reject-samples", type=int, default=10)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("aggregate", help="log file -> binned series CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--interval", type=int, default=3600)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("sample", help="pick a seeded day/week/month window")
    p.add_argument("--input", required=True)
    p.add_argument("--stratum", choices=["day", "week", "month"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("decompose", help="trend/seasonal/residual split")
    p.add_argument("--input", required=True)
    p.add_argument("--channel", choices=["count", "bytes"], default="count")
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("adf", help="augmented Dickey-Fuller stationarity test")
    p.add_argument("--input", required=True)
    p.add_argument("--channel", choices=["count", "bytes"], default="count")
    p.add_argument("--max-lag", type=int, default=None)
    p.set_defaults(func=cmd_adf)

    p = sub.add_parser("smooth",
                       help="moving-average / exponential smoothing / differencing")
    p.add_argument("--input", required=True)
    p.add_argument("--channel", choices=["count", "bytes"], default="count")
    p.add_argument("--method", choices=["ma", "ses", "des", "hw", "diff"],
                   required=True)
    p.add_argument("--k", type=int, default=3,
                   help="window for ma, difference order for diff")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--phi", type=float, default=1.0)
    p.add_argument("--season-length", type=int, default=24)
    p.add_argument("--horizon", type=int, default=4)
    p.add_argument("--out")
    p.add_argument("--forecast-out")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("fit", help="fit one forecaster, save the model file")
    p.add_argument("--input", required=True)
    p.add_argument("--model", choices=["var", "hw", "rrp", "bdt"], required=True)
    p.add_argument("--channel", choices=["count", "bytes"], default="count")
    p.add_argument("--out", required=True)
    p.add_argument("--maxlags", type=int, default=7)
    p.add_argument("--ic", choices=["aic", "bic", "hqic"], default="hqic")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--phi", type=float, default=1.0)
    p.add_argument("--season-length", type=int, default=24)
    p.add_argument("--horizon", type=int, default=4)
    p.add_argument("--stop-depth", type=int, default=4)
    p.add_argument("--lags", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=8)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--n-labels", type=int, default=16)
    p.add_argument("--field-bits", type=int, default=8)
    p.add_argument("--tree-out", help="also export the BDT text tree")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tune", help="grid/random hyperparameter search")
    p.add_argument("--input", required=True)
    p.add_argument("--model", choices=["var", "hw", "rrp", "bdt"], required=True)
    p.add_argument("--channel", choices=["count", "bytes"], default="count")
    p.add_argument("--method", choices=["grid", "random"], default="random")
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--season-length", type=int, default=24)
    p.add_argument("--trials-out")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", help="point metrics for actual vs predicted")
    p.add_argument("--actual", required=True)
    p.add_argument("--predicted", required=True)
    p.add_argument("--channel", choices=["count", "bytes"], default="count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="Scott-Knott rank groups from samples CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("compile", help="BDT text tree -> ternary table")
    p.add_argument("--tree", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("verify", help="prove tree/table equivalence")
    p.add_argument("--tree", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lookup", help="simulate one table lookup")
    p.add_argument("--table", required=True)
    p.add_argument("--key", required=True, help="integer, 0x-prefixed ok")
    p.set_defaults(func=cmd_lookup)

    p = sub.add_parser("capacity", help="TCAM capacity check for a table")
    p.add_argument("--table", required=True)
    p.add_argument("--capacity-bits", type=int, required=True)
    p.add_argument("--label-bits", type=int, default=8)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("runs", help="list or show tracked runs")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("run_id", nargs="?")
    p.add_argument("--root", default="runs")
    p.set_defaults(func=cmd_runs)

    p = sub.add_parser("run", help="run a full experiment from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--root", default="runs")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "runs" and args.action == "show" and not args.run_id:
        parser.error("runs show needs a run id")
    try:
        return args.func(args)
    except FlowcastError as exc:
        print(f"flowcast: error: {exc}", file=sys.stderr)
        return 1 if exc.code in USAGE_CODES else 2
    except OSError as exc:
        print(f"flowcast: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - invariant violations
        print(f"flowcast: internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
