from __future__ import annotations

import json

import numpy as np
import pytest
from click.testing import CliRunner

from chainbalance.cli import main
from conftest import dataset_with_label_counts, make_dataset, write_dataset_files


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def dataset_files(tmp_path):
    ds = dataset_with_label_counts(60, [12, 24], seed=0)
    return write_dataset_files(ds, tmp_path)


def test_stats_output(runner, dataset_files, tmp_path):
    arff, xml = dataset_files
    json_path = tmp_path / "stats.json"
    result = runner.invoke(
        main, ["stats", "--arff", arff, "--xml", xml, "--json", str(json_path)]
    )
    assert result.exit_code == 0, result.output
    assert "n=60 d=5 q=2" in result.output
    assert "MeanImR=" in result.output
    payload = json.loads(json_path.read_text())
    assert payload["summary"]["n"] == 60
    assert len(payload["per_label"]) == 2
    # 12/48 -> ImR 4; 24/36 -> ImR 1.5.
    imrs = sorted(row["imr"] for row in payload["per_label"])
    assert imrs == pytest.approx([1.5, 4.0])


def test_stats_missing_file_exits_3(runner, tmp_path):
    result = runner.invoke(
        main,
        ["stats", "--arff", str(tmp_path / "nope.arff"), "--xml", str(tmp_path / "nope.xml")],
    )
    assert result.exit_code == 3
    record = json.loads(result.stderr.strip().splitlines()[-1])
    assert "error" in record and "message" in record


def test_stats_malformed_arff_exits_3(runner, tmp_path):
    arff = tmp_path / "bad.arff"
    arff.write_text("@relation x\n@attribute a numeric\n@data\n1,2,3\n")
    xml = tmp_path / "bad.xml"
    xml.write_text('<labels><label name="a"/></labels>')
    result = runner.invoke(main, ["stats", "--arff", str(arff), "--xml", str(xml)])
    assert result.exit_code == 3
    assert json.loads(result.stderr.strip().splitlines()[-1])["error"] == "MalformedArff"


def test_simulate_writes_csv(runner, tmp_path):
    out = tmp_path / "fig.csv"
    result = runner.invoke(
        main,
        ["simulate", "--n", "1000", "--c", "10", "--m-start", "20", "--m-end", "400",
         "--m-step", "20", "--runs", "500", "--seed", "3", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 21  # header + 20 rows


def test_simulate_stdout_and_validation(runner):
    result = runner.invoke(main, ["simulate", "--m-start", "50", "--m-end", "50",
                                  "--runs", "100"])
    assert result.exit_code == 0
    assert result.output.startswith("minority,majority")
    bad = runner.invoke(main, ["simulate", "--m-start", "0"])
    assert bad.exit_code == 2


def _run_cv(runner, arff, xml, out_dir, extra=()):
    args = [
        "cv", "--arff", arff, "--xml", xml, "--out-dir", str(out_dir),
        "--methods", "BR,ECCRU", "--c", "3", "--repeats", "2", "--folds", "2",
        "--seed", "11",
    ]
    args.extend(extra)
    return runner.invoke(main, args)


def test_cv_end_to_end(runner, dataset_files, tmp_path):
    arff, xml = dataset_files
    out_dir = tmp_path / "run1"
    result = _run_cv(runner, arff, xml, out_dir)
    assert result.exit_code == 0, result.output
    payload = json.loads((out_dir / "cv_results.json").read_text())
    assert payload["schema"] == "chainbalance.cv.v1"
    assert set(payload["methods"].keys()) == {"BR", "ECCRU"}
    for method in ("BR", "ECCRU"):
        folds = payload["methods"][method]["folds"]
        assert len(folds) == 4  # 2 repeats x 2 folds
        for rec in folds:
            macro = rec["report"]["macro"]
            assert set(macro) == {
                "f_measure", "g_mean", "balanced_accuracy", "auc_roc", "auc_pr"
            }
    assert (out_dir / "timings.json").exists()
    assert (out_dir / "per_label.csv").read_text().startswith(
        "method,repeat,fold,label_index,metric,value"
    )
    assert "BR:" in result.output and "ECCRU:" in result.output


def test_cv_rerun_byte_identical(runner, dataset_files, tmp_path):
    arff, xml = dataset_files
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert _run_cv(runner, arff, xml, a).exit_code == 0
    assert _run_cv(runner, arff, xml, b).exit_code == 0
    assert (a / "cv_results.json").read_bytes() == (b / "cv_results.json").read_bytes()


def test_cv_parallelism_does_not_change_results(runner, dataset_files, tmp_path):
    arff, xml = dataset_files
    serial = tmp_path / "serial"
    threaded = tmp_path / "threaded"
    assert _run_cv(runner, arff, xml, serial, ["--n-jobs", "1"]).exit_code == 0
    assert _run_cv(runner, arff, xml, threaded, ["--n-jobs", "3"]).exit_code == 0
    assert (serial / "cv_results.json").read_bytes() == (
        threaded / "cv_results.json"
    ).read_bytes()


def test_cv_bad_method_exits_2(runner, dataset_files, tmp_path):
    arff, xml = dataset_files
    result = runner.invoke(
        main,
        ["cv", "--arff", arff, "--xml", xml, "--out-dir", str(tmp_path / "x"),
         "--methods", "BR,COCOA"],
    )
    assert result.exit_code == 2
    assert json.loads(result.stderr.strip().splitlines()[-1])["error"] == "ConfigError"


def test_cv_missing_required_exits_2(runner):
    result = runner.invoke(main, ["cv", "--methods", "BR"])
    assert result.exit_code == 2


def test_cv_config_file_with_flag_override(runner, dataset_files, tmp_path):
    arff, xml = dataset_files
    config = {
        "arff": arff,
        "xml": xml,
        "out_dir": str(tmp_path / "from_file"),
        "methods": ["BR"],
        "repeats": 1,
        "folds": 2,
        "seed": 5,
        "c": 2,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    result = runner.invoke(main, ["cv", "--config", str(config_path)])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "from_file" / "cv_results.json").read_text())
    assert payload["config"]["seed"] == 5

    override_dir = tmp_path / "override"
    result = runner.invoke(
        main,
        ["cv", "--config", str(config_path), "--seed", "9", "--out-dir", str(override_dir)],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads((override_dir / "cv_results.json").read_text())
    assert payload["config"]["seed"] == 9


def test_cv_nested_config_sections(runner, dataset_files, tmp_path):
    arff, xml = dataset_files
    config = {
        "arff": arff,
        "xml": xml,
        "out_dir": str(tmp_path / "nested"),
        "methods": "BR",
        "repeats": 1,
        "ensemble": {"c": 4},
        "tree": {"max_depth": 2, "min_samples_leaf": 3},
    }
    config_path = tmp_path / "nested.json"
    config_path.write_text(json.dumps(config))
    result = runner.invoke(main, ["cv", "--config", str(config_path)])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "nested" / "cv_results.json").read_text())
    assert payload["config"]["c"] == 4
    assert payload["config"]["tree"] == {"max_depth": 2, "min_samples_leaf": 3}


def test_cv_default_out_dir(runner, dataset_files, tmp_path, monkeypatch):
    arff, xml = dataset_files
    monkeypatch.chdir(tmp_path)
    result = runner.invoke(
        main,
        ["cv", "--arff", arff, "--xml", xml, "--methods", "BR",
         "--repeats", "1", "--seed", "2"],
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "chainbalance-results" / "cv_results.json").exists()


def test_cv_theta_min_recorded_for_eccru3(runner, dataset_files, tmp_path):
    arff, xml = dataset_files
    out_dir = tmp_path / "eccru3"
    result = runner.invoke(
        main,
        ["cv", "--arff", arff, "--xml", xml, "--out-dir", str(out_dir),
         "--methods", "ECCRU3", "--theta-min", "0.5", "--theta-max", "10",
         "--c", "3", "--repeats", "1", "--folds", "2", "--seed", "1"],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads((out_dir / "cv_results.json").read_text())
    for rec in payload["methods"]["ECCRU3"]["folds"]:
        counts = rec["classifier_counts"]
        assert len(counts) == 2
        assert all(c >= 1 for c in counts)


def test_cv_accepts_nominal_features(runner, tmp_path):
    from conftest import SMALL_ARFF, SMALL_XML

    arff = tmp_path / "mixed.arff"
    xml = tmp_path / "mixed.xml"
    arff.write_text(SMALL_ARFF)
    xml.write_text(SMALL_XML)
    result = runner.invoke(
        main,
        ["cv", "--arff", str(arff), "--xml", str(xml), "--methods", "BR",
         "--repeats", "1", "--folds", "2", "--out-dir", str(tmp_path / "out"),
         "--tree-min-samples-leaf", "1"],
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "out" / "cv_results.json").exists()


def test_rank_over_two_datasets(runner, tmp_path):
    for name, seed in (("alpha", 1), ("beta", 2)):
        ds = make_dataset(50, [0.25, 0.5], seed=seed, relation=name)
        arff, xml = write_dataset_files(ds, tmp_path)
        result = _run_cv(runner, arff, xml, tmp_path / name)
        assert result.exit_code == 0, result.output
    out = tmp_path / "ranks.csv"
    result = runner.invoke(
        main,
        ["rank", "--input-dir", str(tmp_path), "--metric", "balanced_accuracy",
         "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "method,balanced_accuracy"
    entries = dict(line.split(",") for line in lines[1:])
    assert set(entries) == {"BR", "ECCRU"}
    ranks = sorted(float(v) for v in entries.values())
    assert sum(ranks) == pytest.approx(3.0)  # 1.5+1.5 or 1+2


def test_rank_no_inputs_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["rank", "--input-dir", str(tmp_path)])
    assert result.exit_code == 2
