import json
import subprocess
import sys

import pytest

from veridict.cli import main

from conftest import FIXTURES


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--n-samples", "60", "--n-frames", "20", "--seed", "7", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def prevalence_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("prev")
    assert main(["synth", "--n-samples", "500", "--n-frames", "4", "--deception-fraction", "0.358",
                 "--seed", "1", "--out", str(out)]) == 0
    return out


def test_synth_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["synth", "--n-samples", "5", "--n-frames", "6", "--seed", "7", "--out", str(tmp_path / name)]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "manifest.jsonl" in files and "run.json" in files
    for f in files:
        a, b = (tmp_path / "a" / f).read_bytes(), (tmp_path / "b" / f).read_bytes()
        if f == "run.json":  # echoes the differing --out path
            a, b = a.replace(str(tmp_path / "a").encode(), b""), b.replace(str(tmp_path / "b").encode(), b"")
        assert a == b


def test_run_manifest(synth_dir):
    doc = json.loads((synth_dir / "run.json").read_text())
    assert doc["seed"] == 7 and doc["command"] == "synth"
    assert {"veridict", "numpy", "scipy", "python"} <= set(doc["versions"])


def test_trivial_evaluate_reports_prevalence(prevalence_dir, tmp_path, capsys):
    assert main(["evaluate", "--data", str(prevalence_dir), "--clf", "trivial", "--protocol", "resubstitution",
                 "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["aggregate"]["accuracy"]["mean"] == 0.642
    assert rep["pooled"]["f1"] == 0.0 and rep["pooled"]["mcc"] == 0.0


def test_svm_evaluate_50_repeats(synth_dir, tmp_path):
    assert main(["evaluate", "--data", str(synth_dir), "--clf", "svm", "--select", "0.3", "--repeats", "50",
                 "--train-frac", "0.7", "--epochs", "200", "--rank-repeats", "2", "--jobs", "2",
                 "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert len(rep["repeats"]) == 50
    assert all(r["n_features"] == 42 for r in rep["repeats"])
    assert len((tmp_path / "repeats.csv").read_text().splitlines()) == 51
    assert (tmp_path / "roc.csv").exists()


def test_evaluate_twice_identical(synth_dir, tmp_path):
    args = ["evaluate", "--data", str(synth_dir), "--clf", "rf", "--n-trees", "10", "--repeats", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for f in ("report.json", "repeats.csv", "roc.csv", "run.json"):
        a = (tmp_path / "a" / f).read_text().replace(str(tmp_path / "a"), "")
        assert a == (tmp_path / "b" / f).read_text().replace(str(tmp_path / "b"), "")


def test_featstats_rank_train_roc(synth_dir, tmp_path):
    assert main(["featstats", "--data", str(synth_dir), "--modalities", "pose,au", "--out", str(tmp_path / "f")]) == 0
    header = (tmp_path / "f" / "features.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 3 + 8 * 7
    fcsv = str(tmp_path / "f" / "features.csv")
    assert main(["rank", "--features", fcsv, "--clf", "both", "--repeats", "2", "--fraction", "0.25",
                 "--out", str(tmp_path / "r")]) == 0
    assert len((tmp_path / "r" / "top_features.txt").read_text().split()) == 14
    assert (tmp_path / "r" / "ranking_rf.csv").exists()
    assert main(["train", "--features", fcsv, "--clf", "svm", "--out", str(tmp_path / "t")]) == 0
    assert main(["roc", "--features", fcsv, "--model", str(tmp_path / "t" / "model.json"),
                 "--out", str(tmp_path / "roc")]) == 0
    metrics = json.loads((tmp_path / "roc" / "metrics.json").read_text())
    assert 0.5 < metrics["auc"] <= 1.0


def test_crosseval_and_studies(synth_dir, tmp_path, capsys):
    assert main(["crosseval", "--train", str(synth_dir), "--test", str(synth_dir), "--clf", "svm",
                 "--modalities", "pose", "--out", str(tmp_path / "x")]) == 0
    assert main(["distributions", "--data", str(synth_dir), "--out", str(tmp_path / "d")]) == 0
    assert len((tmp_path / "d" / "distributions.csv").read_text().splitlines()) == 1 + 20 * 2
    assert main(["timeline", "--data", str(synth_dir), "--sample", "s00", "--features-list", "AU12,head_yaw",
                 "--out", str(tmp_path / "tl")]) == 0
    assert len((tmp_path / "tl" / "timeline_s00.csv").read_text().splitlines()) == 21
    capsys.readouterr()
    assert main(["correlate", "--data", str(synth_dir)]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 60 * 20


def test_losscompare(synth_dir, tmp_path):
    assert main(["losscompare", "--data", str(synth_dir), "--seq-len", "8", "--hidden", "4", "--epochs", "3",
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "curves.csv").read_text().splitlines()
    assert lines[0] == "loss,epoch,train_loss,val_accuracy,val_ccc" and len(lines) == 10


def test_rde_commands(tmp_path, capsys):
    assert main(["rde", "ledger", "--records", str(FIXTURES / "rde_ledger_101.csv"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "truthful=59 overclaimed=27 underclaimed=6 no_roll=9 honest_fraction=58.4%" in out
    assert main(["rde", "simulate", "--rolls", "100", "--sims", "50", "--out", str(tmp_path / "s")]) == 0
    assert "±" in capsys.readouterr().out
    assert main(["rde", "blind", "--counts", "1,1,1,1,1,1"]) == 0


def test_selfchecks(capsys):
    assert main(["rotmath", "check", "--n", "50"]) == 0
    assert main(["gaze", "selfcheck", "--n", "5"]) == 0
    assert main(["selfcheck"]) == 0


@pytest.mark.parametrize("argv", [
    ["evaluate", "--data", "x", "--modalities", "all,au", "--out", "o"],
    ["evaluate", "--bogus"],
    ["synth"],
    ["rde"],
    ["frobnicate"],
])
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1


def test_data_errors_exit_2(tmp_path, synth_dir):
    assert main(["evaluate", "--data", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 2
    m = tmp_path / "bad"
    m.mkdir()
    (m / "manifest.jsonl").write_text('{"sample_id": "a", "label": "lie2"}\n')
    assert main(["featstats", "--data", str(m), "--out", str(tmp_path / "o2")]) == 2


def test_config_file_and_seed_env(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n-samples": 4, "n_frames": 3, "seed": 11}))
    assert main(["--config", str(cfg), "synth", "--out", str(tmp_path / "a")]) == 0
    doc = json.loads((tmp_path / "a" / "run.json").read_text())
    assert doc["seed"] == 11 and doc["config"]["n_samples"] == 4
    # command line beats the config file
    assert main(["--config", str(cfg), "synth", "--seed", "3", "--out", str(tmp_path / "b")]) == 0
    assert json.loads((tmp_path / "b" / "run.json").read_text())["seed"] == 3
    cfg.write_text(json.dumps({"n_samples": 4, "colour": "red"}))
    assert main(["--config", str(cfg), "synth", "--out", str(tmp_path / "c")]) == 1
    monkeypatch.setenv("VERIDICT_SEED", "5")
    assert main(["synth", "--n-samples", "2", "--n-frames", "2", "--out", str(tmp_path / "d")]) == 0
    assert json.loads((tmp_path / "d" / "run.json").read_text())["seed"] == 5
    monkeypatch.setenv("VERIDICT_SEED", "five")
    assert main(["synth", "--n-samples", "2", "--n-frames", "2", "--out", str(tmp_path / "e")]) == 1


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "veridict.cli", "rde", "simulate", "--rolls", "389"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "rolls=389" in r.stdout
