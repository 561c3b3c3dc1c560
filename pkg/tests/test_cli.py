"""Command-line surface: stage wiring, formats, exit codes."""

import os

import numpy as np
import pytest

from flowcast.cli import main
from flowcast.series import TimeSeries, write_csv
from flowcast.synthetic import sample_log_lines, seasonal_series


@pytest.fixture
def log_file(tmp_path):
    path = tmp_path / "access.log"
    path.write_text("\n".join(sample_log_lines(400, seed=3)) + "\n")
    return str(path)


@pytest.fixture
def series_csv(tmp_path):
    ts = seasonal_series(200, seed=4, interval=3600, level=800.0,
                         season_amplitude=150.0, period=24, noise=15.0)
    path = tmp_path / "series.csv"
    write_csv(ts, str(path))
    return str(path)


class TestIngestAggregate:
    def test_ingest_counts_and_reject_report(self, log_file, tmp_path, capsys):
        report_path = str(tmp_path / "rejects.txt")
        code = main(["ingest", log_file, "--reject-report", report_path])
        assert code == 0
        out = capsys.readouterr().out
        assert "lines_total: 400" in out
        assert "lines_rejected:" in out
        with open(report_path) as fh:
            text = fh.read()
        assert "bad-structure" in text

    def test_missing_file_is_data_error(self, capsys):
        assert main(["ingest", "/no/such/file.log"]) == 2

    def test_aggregate_writes_series(self, log_file, tmp_path, capsys):
        out_path = str(tmp_path / "s.csv")
        assert main(["aggregate", "--input", log_file, "--interval", "60",
                     "--out", out_path]) == 0
        with open(out_path) as fh:
            assert fh.readline().strip() == "bin_start,count,bytes"

    def test_repeat_invocation_byte_identical(self, log_file, tmp_path):
        a_path = str(tmp_path / "a.csv")
        b_path = str(tmp_path / "b.csv")
        main(["aggregate", "--input", log_file, "--interval", "60", "--out", a_path])
        main(["aggregate", "--input", log_file, "--interval", "60", "--out", b_path])
        assert open(a_path, "rb").read() == open(b_path, "rb").read()


class TestAnalysisCommands:
    def test_sample_day_window(self, series_csv, tmp_path, capsys):
        out_path = str(tmp_path / "day.csv")
        assert main(["sample", "--input", series_csv, "--stratum", "day",
                     "--seed", "3", "--out", out_path]) == 0
        from flowcast.series import read_csv
        assert read_csv(out_path).n_bins == 24

    def test_decompose_csv_columns(self, series_csv, tmp_path):
        out_path = str(tmp_path / "dec.csv")
        assert main(["decompose", "--input", series_csv, "--period", "24",
                     "--out", out_path]) == 0
        with open(out_path) as fh:
            assert fh.readline().strip() == "index,observed,trend,seasonal,residual"

    def test_adf_on_alternating_fixture(self, tmp_path, capsys):
        n = 200
        counts = np.array([600 + 400 * (-1) ** t for t in range(n)], dtype=np.int64)
        ts = TimeSeries(start=0, interval=3600, counts=counts,
                        bytes=counts * 100)
        path = str(tmp_path / "alt.csv")
        write_csv(ts, path)
        assert main(["adf", "--input", path]) == 0
        out = capsys.readouterr().out
        assert "reject@1%: true" in out
        assert "statistic: -" in out

    def test_smooth_bad_alpha_is_usage_error(self, series_csv, capsys):
        code = main(["smooth", "--input", series_csv, "--method", "hw",
                     "--alpha", "2.0"])
        assert code == 1
        err = capsys.readouterr().err
        assert "alpha" in err and "(0,1)" in err

    def test_smooth_ma_output(self, series_csv, tmp_path):
        out_path = str(tmp_path / "sm.csv")
        assert main(["smooth", "--input", series_csv, "--method", "ma",
                     "--k", "3", "--out", out_path]) == 0
        with open(out_path) as fh:
            assert fh.readline().strip() == "index,observed,smoothed"

    def test_difference_transform(self, series_csv, tmp_path, capsys):
        out_path = str(tmp_path / "d.csv")
        assert main(["smooth", "--input", series_csv, "--method", "diff",
                     "--k", "1", "--out", out_path]) == 0
        with open(out_path) as fh:
            assert fh.readline().strip() == "index,value"
            first = fh.readline().split(",")
        assert first[0] == "1"


class TestModelCommands:
    def test_fit_compile_verify_pipeline(self, series_csv, tmp_path, capsys):
        model_path = str(tmp_path / "m.bin")
        tree_path = str(tmp_path / "t.txt")
        table_path = str(tmp_path / "t.tbl")
        assert main(["fit", "--input", series_csv, "--model", "bdt",
                     "--lags", "2", "--field-bits", "6",
                     "--out", model_path, "--tree-out", tree_path]) == 0
        assert main(["compile", "--tree", tree_path, "--out", table_path]) == 0
        assert main(["verify", "--tree", tree_path, "--table", table_path,
                     "--exhaustive"]) == 0
        out = capsys.readouterr().out
        assert "equivalent: true" in out

    def test_verify_detects_corruption(self, series_csv, tmp_path, capsys):
        tree_path = str(tmp_path / "t.txt")
        table_path = str(tmp_path / "t.tbl")
        main(["fit", "--input", series_csv, "--model", "bdt", "--lags", "2",
              "--field-bits", "5", "--out", str(tmp_path / "m.bin"),
              "--tree-out", tree_path])
        main(["compile", "--tree", tree_path, "--out", table_path])
        lines = open(table_path).read().splitlines()
        # corrupt the first non-catch-all rule's label
        for i, line in enumerate(lines[1:], start=1):
            toks = line.split()
            if toks[5] != "0":
                toks[7] = str((int(toks[7]) + 1) % 4)
                lines[i] = " ".join(toks)
                break
        open(table_path, "w").write("\n".join(lines) + "\n")
        capsys.readouterr()
        assert main(["verify", "--tree", tree_path, "--table", table_path,
                     "--exhaustive"]) == 0
        out = capsys.readouterr().out
        assert "equivalent: false" in out
        assert "counterexample:" in out

    def test_fit_var_prints_order(self, series_csv, tmp_path, capsys):
        assert main(["fit", "--input", series_csv, "--model", "var",
                     "--maxlags", "3", "--out", str(tmp_path / "v.bin")]) == 0
        assert "selected_p:" in capsys.readouterr().out

    def test_tune_grid_hw(self, series_csv, tmp_path, capsys):
        trials_path = str(tmp_path / "trials.csv")
        code = main(["tune", "--input", series_csv, "--model", "rrp",
                     "--method", "random", "--budget", "5",
                     "--trials-out", trials_path])
        assert code == 0
        out = capsys.readouterr().out
        assert "best_objective:" in out
        with open(trials_path) as fh:
            assert fh.readline().startswith("trial_id,stop_depth,objective")

    def test_eval_identity(self, series_csv, capsys):
        assert main(["eval", "--actual", series_csv, "--predicted",
                     series_csv]) == 0
        out = capsys.readouterr().out
        assert "mae: 0.0" in out

    def test_lookup_and_capacity(self, series_csv, tmp_path, capsys):
        tree_path = str(tmp_path / "t.txt")
        table_path = str(tmp_path / "t.tbl")
        main(["fit", "--input", series_csv, "--model", "bdt", "--lags", "2",
              "--field-bits", "4", "--out", str(tmp_path / "m.bin"),
              "--tree-out", tree_path])
        main(["compile", "--tree", tree_path, "--out", table_path])
        capsys.readouterr()
        assert main(["lookup", "--table", table_path, "--key", "0x0"]) == 0
        assert "label:" in capsys.readouterr().out
        assert main(["capacity", "--table", table_path,
                     "--capacity-bits", "100000"]) == 0
        out = capsys.readouterr().out
        assert "fits: true" in out


class TestRank:
    def test_rank_groups(self, tmp_path, capsys):
        path = tmp_path / "samples.csv"
        rows = ["treatment,value"]
        rows += [f"fast,{v}" for v in (1.0, 1.1, 0.9, 1.2)]
        rows += [f"slow,{v}" for v in (9.0, 9.1, 8.9, 9.2)]
        path.write_text("\n".join(rows) + "\n")
        assert main(["rank", "--input", str(path)]) == 0
        out = capsys.readouterr().out
        assert "rank 1: fast" in out
        assert "rank 2: slow" in out


class TestRunAndRuns:
    def test_run_experiment_and_listing(self, tmp_path, capsys):
        config = tmp_path / "exp.toml"
        config.write_text(
            "[experiment]\n"
            "repeats = 2\n"
            "master_seed = 3\n"
            "interval = 3600\n"
            "[dataset]\n"
            'source = "synthetic:seasonal"\n'
            "n_bins = 120\n"
            "[models.var]\n"
            "maxlags = 2\n"
            "[models.hw]\n"
            "season_length = 24\n"
        )
        root = str(tmp_path / "runs")
        assert main(["run", "--config", str(config), "--root", root]) == 0
        run_id = capsys.readouterr().out.strip()
        assert run_id
        assert main(["runs", "list", "--root", root]) == 0
        assert run_id in capsys.readouterr().out
        assert main(["runs", "show", run_id, "--root", root]) == 0
        assert '"metrics"' in capsys.readouterr().out

    def test_run_with_override(self, tmp_path, capsys):
        config = tmp_path / "exp.toml"
        config.write_text(
            "[experiment]\nrepeats = 2\n[dataset]\n"
            'source = "synthetic:seasonal"\nn_bins = 120\n'
            "[models.var]\nmaxlags = 2\n"
        )
        root = str(tmp_path / "runs")
        assert main(["run", "--config", str(config), "--root", root,
                     "--set", "repeats=1", "--set", "models.var.maxlags=3"]) == 0

    def test_bad_config_is_usage_error(self, tmp_path, capsys):
        config = tmp_path / "exp.toml"
        config.write_text("[experiment]\nrepeats = 0\n[dataset]\n"
                          'source = "synthetic:seasonal"\n')
        assert main(["run", "--config", str(config)]) == 1


class TestUsage:
    def test_unknown_flag_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["adf", "--nonsense"])
        assert exc.value.code == 1

    def test_missing_required_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["aggregate"])
        assert exc.value.code == 1

    def test_version_prints_fingerprint(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert out.startswith("flowcast 0.")
