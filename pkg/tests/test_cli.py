import csv
import json
import logging
import os

import pytest

from parkcast.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--stations", 1, "--weeks", 8, "--seed", 3, "--anomalies", 3, "--out", out) == 0
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_help_exits_zero(capsys):
    assert run("--help") == 0
    assert "simulate" in capsys.readouterr().out
    assert run("fit", "--help") == 0


@pytest.mark.parametrize(
    "argv",
    [("fit", "--bogus"), ("frobnicate",), ("fit", "--input", "missing.csv"), ("fit",),
     ("nowcast", "--input", "{csv}", "--start", "07:10"), ("simulate", "--saturate", "1.5"),
     ("eval", "--input", "{csv}", "--model", "lreg")],
)
def test_usage_errors_exit_one(argv, corpus, capsys):
    argv = [a.format(csv=corpus / "sim.csv") for a in argv]
    assert run(*argv) == 1
    assert "usage" in capsys.readouterr().err


def test_data_error_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("station,timestamp,occupancy\nA,2024-01-01T00:30,-4\n")
    assert run("ingest", "--input", bad, "--out", tmp_path / "o") == 2
    assert "bad.csv:2:" in capsys.readouterr().err


def test_ingest_honours_exclusions(corpus, tmp_path):
    out = tmp_path / "ing"
    assert run("ingest", "--input", corpus / "sim.csv", "--exclusions", corpus / "sim.exclusions.json", "--out", out) == 0
    reasons = sorted(r["reason"] for r in read_csv(out / "dropped.csv"))
    assert reasons == ["excluded: holiday", "excluded: stuck", "gap>2"]
    manifest = json.loads((out / "manifest.ingest.json").read_text())
    assert manifest["inputs"]["input"]["sha256"] and "profiles.csv" in manifest["outputs"]


@pytest.fixture(scope="module")
def fitted(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    args = ("--input", corpus / "sim.csv", "--exclusions", corpus / "sim.exclusions.json", "--out", out)
    assert run("fit", "--class", "weekday", *args) == 0
    return out, args


def test_fit_writes_params(fitted):
    out, _ = fitted
    names = sorted(os.listdir(out / "params"))
    assert names == ["S01_weekday_tn.json", "S01_weekday_tn.metrics.json", "S01_weekday_tnl.json", "S01_weekday_tnl.metrics.json"]
    rec = json.loads((out / "params" / "S01_weekday_tnl.json").read_text())
    assert rec["model"] == "TNL" and rec["n_days"] == 17  # 5 training weeks of Mon-Thu, less 3 faulty days


def test_eval_recovers_simulated_parameters(fitted):
    out, args = fitted
    assert run("eval", "--class", "weekday", "--model", "tn", *args) == 0
    rows = read_csv(out / "eval" / "recovery.csv")
    for r in rows:
        if r["param"].startswith("mu"):
            assert float(r["abs_err"]) < 0.01, r
        else:
            assert float(r["rel_err"]) < 0.1, r
    errs = read_csv(out / "eval" / "fit_errors.csv")
    assert len(errs) == 48 and {e["model"] for e in errs} == {"TN"}


def test_rerun_is_byte_identical(corpus, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / str(k)
        assert run("predict", "--input", corpus / "sim.csv", "--class", "weekday", "--model", "avg",
                   "--start", "08:00", "--out", out) == 0
        outs.append(out)
    a, b = ((o / "predictions_avg.csv").read_bytes() for o in outs)
    assert a == b
    ma, mb = (json.loads((o / "manifest.predict.json").read_text()) for o in outs)
    for m in (ma, mb):
        m.pop("created")
        m["config"].pop("out")
        m["outputs"].sort()
    ma.pop("config_sha256"), mb.pop("config_sha256")
    assert ma == mb


def test_config_file_and_flag_precedence(corpus, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(corpus / "sim.csv"), "class": "weekday", "model": "avg",
                               "start": "09:00", "out": str(tmp_path / "o")}))
    assert run("predict", "--config", cfg, "--start", "10:00") == 0
    manifest = json.loads((tmp_path / "o" / "manifest.predict.json").read_text())
    assert manifest["config"]["start"] == "10:00" and manifest["config"]["model"] == "avg"
    assert manifest["inputs"]["config"]["sha256"]
    rows = read_csv(tmp_path / "o" / "predictions_avg.csv")
    assert rows[0]["start_hh:mm"] == "10:00"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run("predict", "--config", cfg) == 1


def test_log_level_from_environment(corpus, tmp_path, monkeypatch):
    monkeypatch.setenv("PARKCAST_LOG", "info")
    run("ingest", "--input", corpus / "sim.csv", "--out", tmp_path)
    assert logging.getLogger("parkcast").level == logging.INFO
    monkeypatch.setenv("PARKCAST_LOG", "40")
    run("ingest", "--input", corpus / "sim.csv", "--out", tmp_path)
    assert logging.getLogger("parkcast").level == logging.ERROR
    monkeypatch.delenv("PARKCAST_LOG")
    run("ingest", "--input", corpus / "sim.csv", "--out", tmp_path)
    assert logging.getLogger("parkcast").level == logging.WARNING
