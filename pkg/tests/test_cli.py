import json
import os

import numpy as np
import pytest

from odbsample.cli import build_parser, main


@pytest.fixture
def five_csv(tmp_path):
    path = tmp_path / "five.csv"
    path.write_text("x\n-1\n-0.8\n0\n0.7\n1\n")
    return str(path)


@pytest.fixture
def xy_csv(tmp_path):
    gen = np.random.default_rng(3)
    x = gen.uniform(-1, 1, size=(300, 2))
    y = 1 + x @ [2.0, -1.0] + gen.normal(size=300)
    path = tmp_path / "xy.csv"
    lines = ["y,a,b"] + [f"{float(v)!r},{float(r[0])!r},{float(r[1])!r}" for v, r in zip(y, x)]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def _json(path):
    with open(path) as fh:
        return json.load(fh)


def test_design_straight_line(tmp_path):
    assert main(["design", "--dim", "1", "--out", str(tmp_path)]) == 0
    d = _json(tmp_path / "design.json")
    assert np.allclose(sorted(x[0] for x in d["support"]), [-1, 1])
    assert np.allclose(d["weights"], [0.5, 0.5])
    assert d["certified"] is True


def test_design_tolerance_insensitive(tmp_path):
    assert main(["design", "--dim", "1", "--tolerance", "1e-2", "--out", str(tmp_path / "a")]) == 0
    assert main(["design", "--dim", "1", "--tolerance", "1e-6", "--out", str(tmp_path / "b")]) == 0
    assert _json(tmp_path / "a" / "design.json")["support"] == _json(tmp_path / "b" / "design.json")["support"]


def test_design_non_certified_exit_code(tmp_path):
    code = main(["design", "--dim", "2", "--basis", "quadratic", "--grid", "21", "--max-iterations", "2",
                 "--out", str(tmp_path)])
    assert code == 2


def test_missing_file_exit_one(tmp_path, capsys):
    assert main(["quality", "--data", str(tmp_path / "nope.csv")]) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_parse_error_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n3,oops\n")
    assert main(["quality", "--data", str(bad)]) == 1
    assert ":3:" in capsys.readouterr().err


def test_header_is_mandatory(tmp_path, capsys):
    bad = tmp_path / "noheader.csv"
    bad.write_text("1,2\n3,4\n")
    assert main(["quality", "--data", str(bad)]) == 1
    assert "header" in capsys.readouterr().err


def test_quality_of_replicated_optimal_design(tmp_path):
    path = tmp_path / "opt.csv"
    path.write_text("x\n-1\n1\n-1\n1\n")
    assert main(["quality", "--data", str(path), "--out", str(tmp_path)]) == 0
    assert _json(tmp_path / "quality.json")["dataset_efficiency"] == pytest.approx(1.0)


def test_quality_one_row_dataset(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("x\n0.3\n")
    assert main(["quality", "--data", str(path), "--out", str(tmp_path)]) == 0
    assert _json(tmp_path / "quality.json")["dataset_efficiency"] == 0.0


def test_sample_odb_five_points(five_csv, tmp_path):
    assert main(["sample", "--data", five_csv, "--n", "2", "--out", str(tmp_path)]) == 0
    sel = _json(tmp_path / "selection.json")
    assert sel["rows"] == [0, 4]
    assert (tmp_path / "selection.csv").read_text() == "row\n0\n4\n"
    assert (tmp_path / "subsample.csv").read_text().splitlines() == ["x", "-1.0", "1.0"]


def test_sample_srs_identity_and_seed(five_csv, tmp_path):
    assert main(["sample", "--data", five_csv, "--sampler", "SRS", "--n", "2", "--out", str(tmp_path)]) == 1
    assert main(["sample", "--data", five_csv, "--sampler", "SRS", "--n", "5", "--seed", "4",
                 "--out", str(tmp_path)]) == 0
    assert _json(tmp_path / "selection.json")["rows"] == [0, 1, 2, 3, 4]


def test_sample_unknown_sampler_and_n_too_big(five_csv, tmp_path):
    assert main(["sample", "--data", five_csv, "--sampler", "BEST", "--n", "2", "--out", str(tmp_path)]) == 1
    assert main(["sample", "--data", five_csv, "--n", "9", "--out", str(tmp_path)]) == 1


def test_sample_is_deterministic(xy_csv, tmp_path):
    for sub in ("a", "b"):
        assert main(["sample", "--data", xy_csv, "--response", "y", "--sampler", "PPS", "--n", "30",
                     "--seed", "77", "--fit", "--out", str(tmp_path / sub)]) == 0
    for name in ("selection.json", "selection.csv", "subsample.csv", "fit.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    head = (tmp_path / "a" / "subsample.csv").read_text().splitlines()[0]
    assert head == "y,a,b"


def test_model_flags_override_file(xy_csv, tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({"basis": {"kind": "quadratic", "p": 2}, "family": "linear"}))
    assert main(["design", "--data", xy_csv, "--response", "y", "--model", str(model), "--basis", "linear",
                 "--out", str(tmp_path)]) == 0
    assert len(_json(tmp_path / "design.json")["support"][0]) == 2
    assert main(["design", "--data", xy_csv, "--response", "y", "--theta", "1,2", "--out", str(tmp_path)]) == 1


def test_oracle_command(tmp_path):
    path = tmp_path / "three.csv"
    path.write_text("x\n-1\n0\n1\n")
    assert main(["oracle", "--data", str(path), "--n", "2", "--out", str(tmp_path)]) == 0
    assert _json(tmp_path / "oracle.json")["rows"] == [0, 2]


def test_simulate_smoke_and_schema_errors(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 1, "N": 100, "n": 10, "R": 1, "srs_pps_repeats": 2, "p": 1,
                               "theta": [0.0, 1.0]}))
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert sorted(os.listdir(out)) == ["boxplot.csv", "efficiencies.csv", "estimates.csv", "summary.json"]
    assert "replication 1/1" in capsys.readouterr().err
    cfg.write_text(json.dumps({"N": 5, "n": 10, "R": 0, "p": 1}))
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "seed" in err and "R must" in err


def test_every_subcommand_has_help():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        assert "--out" in text or name == "simulate"
        assert "default" in text
