import json

import pandas as pd
import pytest

import config
from main import main


def _simulate(out, seed=3, design="single-nonnull"):
    return main([
        "simulate", "--design", design, "--error-law", "normal", "--quantile", "0.5",
        "--seed", str(seed), "--out", str(out),
    ])


def _fit(csv_path, out, *extra):
    return main([
        "fit", str(csv_path), "--response", "y", "--quantile", "0.5",
        "--iterations", "200", "--burnin", "100", "--seed", "4", "--out", str(out), *extra,
    ])


class TestSimulate:
    def test_writes_data_and_truth(self, tmp_path):
        assert _simulate(tmp_path) == 0
        frame = pd.read_csv(tmp_path / "data.csv")
        assert list(frame.columns) == ["y", "x1"]
        assert len(frame) == 300
        assert set(frame["y"]) == {1, 2, 3}
        truth = json.loads((tmp_path / "truth.json").read_text())
        assert truth["ratios"] == pytest.approx([0.375])
        assert (tmp_path / "manifest.json").exists()

    def test_multi_design_has_two_covariates(self, tmp_path):
        assert _simulate(tmp_path, design="multi-nonnull") == 0
        assert list(pd.read_csv(tmp_path / "data.csv").columns) == ["y", "x1", "x2"]

    def test_same_seed_same_bytes(self, tmp_path):
        _simulate(tmp_path / "a")
        _simulate(tmp_path / "b")
        assert (tmp_path / "a" / "data.csv").read_bytes() == (tmp_path / "b" / "data.csv").read_bytes()
        assert (tmp_path / "a" / "truth.json").read_bytes() == (tmp_path / "b" / "truth.json").read_bytes()

    def test_unknown_design_is_a_usage_error(self, tmp_path):
        assert _simulate(tmp_path, design="single-maybe") == 2


class TestFit:
    def test_writes_summary_and_coefficients(self, tmp_path, csv_dataset):
        out = tmp_path / "fit"
        assert _fit(csv_dataset, out) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["covariates"] == ["x1"]
        assert summary["category_labels"] == [1, 2, 3]
        entry = summary["quantiles"][0]
        assert entry["q"] == 0.5
        assert entry["retained_draws"] == 100
        coefficients = pd.read_csv(out / "coefficients.csv")
        assert list(coefficients["covariate"]) == ["x1"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "fit"
        assert "summary.json" in manifest["outputs"]

    def test_same_seed_same_summary(self, tmp_path, csv_dataset):
        _fit(csv_dataset, tmp_path / "a")
        _fit(csv_dataset, tmp_path / "b")
        assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()

    def test_emit_draws(self, tmp_path, csv_dataset):
        assert _fit(csv_dataset, tmp_path, "--emit-draws") == 0
        draws = pd.read_csv(tmp_path / "draws_q0.5.csv")
        assert list(draws.columns) == ["iteration", "beta_x1", "delta_1", "delta_2", "sigma"]
        assert len(draws) == 100

    def test_fixed_variant_needs_cutpoints(self, tmp_path, csv_dataset, capsys):
        assert _fit(csv_dataset, tmp_path, "--variant", "fixed") == 2
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error_type"] == "InputValidationError"
        assert "--fixed-cutpoints" in error["error"]

    def test_fixed_variant_with_cutpoints(self, tmp_path, csv_dataset):
        assert _fit(csv_dataset, tmp_path, "--variant", "fixed", "--fixed-cutpoints", "5,8") == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["quantiles"][0]["mean_cutpoints"] == [5.0, 8.0]

    def test_bootstrap_standardize_and_runs(self, tmp_path, csv_dataset):
        assert _fit(csv_dataset, tmp_path, "--bootstrap", "3", "--standardize", "--runs", "2") == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        standardization = summary["standardization"]
        assert len(standardization["means"]) == 1
        assert standardization["sds"][0] > 0
        entry = summary["quantiles"][0]
        assert len(entry["runs"]) == 2
        assert entry["retained_draws"] == 200
        interval = entry["bootstrap"]
        assert interval["replicates"] == 3
        assert interval["lower"][0] < interval["upper"][0]
        coefficients = pd.read_csv(tmp_path / "coefficients.csv")
        assert list(coefficients.columns) == ["q", "covariate", "ratio", "lower", "upper", "significant"]

    def test_non_numeric_cell_reports_row_and_column(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("y,x1\n1,0.5\n2,abc\n3,1.0\n", encoding="utf-8")
        assert _fit(path, tmp_path / "out") == 2
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert "row 1" in error["error"]
        assert "x1" in error["error"]

    def test_missing_response_column(self, tmp_path, csv_dataset):
        code = main([
            "fit", str(csv_dataset), "--response", "grade", "--iterations", "200", "--burnin", "100",
            "--out", str(tmp_path),
        ])
        assert code == 2

    def test_burnin_not_below_iterations(self, tmp_path, csv_dataset):
        code = main([
            "fit", str(csv_dataset), "--response", "y", "--iterations", "100", "--burnin", "100",
            "--out", str(tmp_path),
        ])
        assert code == 2

    @pytest.mark.slow
    def test_recovers_single_covariate_ratio(self, tmp_path, csv_dataset):
        assert main([
            "fit", str(csv_dataset), "--response", "y", "--quantile", "0.5", "--fast", "--out", str(tmp_path),
        ]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["quantiles"][0]["ratios"][0] == pytest.approx(0.375, abs=0.03)


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "fit" in capsys.readouterr().out


class TestReproduce:
    @pytest.fixture(autouse=True)
    def short_fast_chains(self, monkeypatch):
        monkeypatch.setattr(config, "FAST_ITERATIONS", 200)
        monkeypatch.setattr(config, "FAST_BURNIN", 100)

    def _reproduce(self, out, target, *extra):
        return main([
            "reproduce", target, "--fast", "--error-law", "normal", "--seed", "2", "--out", str(out), *extra,
        ])

    def test_table1_wide_and_long(self, tmp_path):
        assert self._reproduce(tmp_path, "table1", "--runs", "2") == 0
        wide = pd.read_csv(tmp_path / "table1.csv")
        assert list(wide["method"]) == ["borps", "qr"]
        assert len(wide.columns) == 1 + 2 * 3
        long = pd.read_csv(tmp_path / "table1_long.csv")
        assert list(long.columns) == [
            "design", "error_law", "q", "method", "covariate", "truth", "mean_estimate", "rmse", "runs",
        ]
        assert len(long) == 2 * 3 * 2
        assert set(long.loc[long["method"] == "qr", "runs"]) == {1}
        assert set(long.loc[long["method"] == "borps", "runs"]) == {2}
        report = json.loads((tmp_path / "table1.json").read_text())
        assert report["target"] == "table1"
        assert len(report["cells"]) == len(long)

    def test_fig5_reports_intervals(self, tmp_path):
        assert self._reproduce(tmp_path, "fig5", "--bootstrap", "3") == 0
        long = pd.read_csv(tmp_path / "fig5_long.csv")
        for column in ("covers_truth", "lower", "upper", "excludes_zero"):
            assert column in long.columns
        assert len(long) == 2 * 3 + 2 * 3 * 2
        assert (long["lower"] < long["upper"]).all()
        wide = pd.read_csv(tmp_path / "fig5.csv")
        assert list(wide["method"]) == ["borps"]

    @pytest.mark.parametrize("target, extra", [("table1", ("--runs", "2")), ("fig5", ("--bootstrap", "3"))])
    def test_same_seed_same_bytes(self, tmp_path, target, extra):
        assert self._reproduce(tmp_path / "a", target, *extra) == 0
        assert self._reproduce(tmp_path / "b", target, *extra) == 0
        for name in (f"{target}.csv", f"{target}_long.csv", f"{target}.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
