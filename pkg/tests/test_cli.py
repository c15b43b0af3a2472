import json
import subprocess
import sys

import numpy as np
import pytest

from wearable_eeg import __version__
from wearable_eeg.classifiers import LinearModel, save_model
from wearable_eeg.cli import main
from wearable_eeg.features import feature_names
from wearable_eeg.io import provenance_line, save_recording, write_manifest
from wearable_eeg.recording import EegRecording

PROVENANCE = f"# wearable_eeg {__version__} config_sha256="


def write_config(path, cfg):
    path.write_text(json.dumps(cfg))
    return str(path)


def synth_cfg(**overrides):
    cfg = {
        "seed": 3, "n_subjects": 4, "sessions": ["1", "2"], "duration_s": 30,
        "noise_amplitude_uv": 2.0, "artifact_rate_per_min": 2.0,
        "classes": {
            "Instructional": {"band_power_profile": {"FP1": {"Alpha": 10}}},
            "Recreational": {"band_power_profile": {"FP1": {"Alpha": 25}},
                             "coupling_profile": [[["FP1", "Alpha"], ["FP2", "Alpha"], 0.9]]},
        },
    }
    cfg.update(overrides)
    return cfg


def emitted(root):
    return sorted(p for p in root.rglob("*") if p.is_file())


def assert_provenance(root):
    for p in emitted(root):
        if p.suffix == ".json":
            prov = json.loads(p.read_text())["provenance"]
            line = "# " + (prov["line"] if isinstance(prov, dict) else prov)
        else:
            line = p.read_text()
        assert line.startswith(PROVENANCE), p


@pytest.fixture
def synth_dir(tmp_path):
    cfg = write_config(tmp_path / "synth.json", synth_cfg())
    out = tmp_path / "data"
    assert main(["synth", "--config", cfg, "--out", str(out)]) == 0
    return out


# -- synth -----------------------------------------------------------------------


def test_synth_writes_sixteen_recordings(synth_dir):
    csvs = sorted((synth_dir / "recordings").glob("*.csv"))
    assert len(csvs) == 16
    assert len(list((synth_dir / "recordings").glob("*.json"))) == 16
    manifest = json.loads((synth_dir / "manifest.json").read_text())
    assert len(manifest["recordings"]) == 16
    assert csvs[0].name == "S01_1_Instructional.csv"


def test_synth_rerun_is_byte_identical(tmp_path, synth_dir):
    cfg = write_config(tmp_path / "synth.json", synth_cfg())
    again = tmp_path / "again"
    assert main(["synth", "--config", cfg, "--out", str(again)]) == 0
    a, b = emitted(synth_dir), emitted(again)
    assert [p.relative_to(synth_dir) for p in a] == [p.relative_to(again) for p in b]
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_synth_zero_duration_writes_nothing(tmp_path, capsys):
    cfg = write_config(tmp_path / "bad.json", synth_cfg(duration_s=0))
    out = tmp_path / "out"
    assert main(["synth", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


def test_synth_nyquist_and_unknown_fields(tmp_path):
    cfg = synth_cfg(sample_rate_hz=100.0)
    cfg["classes"]["Instructional"]["band_power_profile"] = {"FP1": {"HH-Gamma": 5}}
    out = tmp_path / "out"
    assert main(["synth", "--config", write_config(tmp_path / "a.json", cfg),
                 "--out", str(out)]) == 2
    assert main(["synth", "--config", write_config(tmp_path / "b.json", synth_cfg(bogus=1)),
                 "--out", str(out)]) == 2
    assert not out.exists()


def test_synth_dry_run_and_seed_override(tmp_path, capsys):
    cfg = write_config(tmp_path / "synth.json", synth_cfg(n_subjects=1))
    out = tmp_path / "out"
    assert main(["synth", "--config", cfg, "--out", str(out), "--dry-run"]) == 0
    assert not out.exists() and "would write 4 recordings" in capsys.readouterr().out
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "s1"), "--seed", "1"]) == 0
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "s2"), "--seed", "2"]) == 0
    f1 = (tmp_path / "s1" / "recordings" / "S01_1_Instructional.csv").read_text()
    f2 = (tmp_path / "s2" / "recordings" / "S01_1_Instructional.csv").read_text()
    assert f1 != f2


# -- mask and features -----------------------------------------------------------


def test_mask_command(tmp_path, synth_dir):
    cfg = write_config(tmp_path / "mask.json",
                       {"manifest": str(synth_dir / "manifest.json"),
                        "mask": {"amplitude_threshold_uv": 200.0}})
    out = tmp_path / "m"
    assert main(["mask", "--config", cfg, "--out", str(out)]) == 0
    assert len(list((out / "masks").glob("*_mask.csv"))) == 16
    assert len(list((out / "masks").glob("*_mask_runs.csv"))) == 16
    log = json.loads((out / "masks" / "mask_log.json").read_text())
    assert all(0 <= v["valid_fraction"] <= 1 for v in log["recordings"].values())
    assert_provenance(out)


def _features_setup(tmp_path):
    t = np.arange(int(420 * 220)) / 220.0
    clean = EegRecording("S01", "1", "Instructional",
                         np.tile(10 * np.sin(2 * np.pi * 10 * t), (4, 1)))
    bad = EegRecording("S01", "1", "Recreational", np.full((4, int(420 * 220)), 1000.0))
    entries = []
    for rec, name in ((clean, "clean"), (bad, "bad")):
        p = tmp_path / "rec" / f"{name}.csv"
        save_recording(rec, p, p.with_suffix(".json"))
        entries.append((p, p.with_suffix(".json")))
    write_manifest(entries, tmp_path / "rec" / "manifest.json")
    return write_config(tmp_path / "features.json",
                        {"manifest": "rec/manifest.json", "window_sizes_s": [120]})


def test_features_rows_and_empty_warning(tmp_path, caplog):
    cfg = _features_setup(tmp_path)
    out = tmp_path / "f"
    assert main(["features", "--config", cfg, "--out", str(out)]) == 0
    clean = (out / "features" / "S01_1_Instructional_w120.csv").read_text().splitlines()
    assert clean[0].startswith(PROVENANCE) and len(clean) == 2 + 6
    assert clean[1].split(",")[448:] == ["subject", "session", "label", "window_start_s",
                                         "window_len_s"]
    bad = (out / "features" / "S01_1_Recreational_w120.csv").read_text().splitlines()
    assert len(bad) == 2
    log = json.loads((out / "features" / "run_log.json").read_text())
    by_rec = {e["recording"]: e for e in log["files"]}
    assert by_rec["S01/1/Recreational"]["warnings"]
    assert by_rec["S01/1/Recreational"]["n_rejected"] == 6
    assert by_rec["S01/1/Instructional"]["n_windows"] == 6
    assert "no valid 120 s windows" in caplog.text
    assert_provenance(out)


def test_features_rerun_is_idempotent(tmp_path):
    cfg = _features_setup(tmp_path)
    out = tmp_path / "f"
    assert main(["features", "--config", cfg, "--out", str(out)]) == 0
    first = {p: p.read_bytes() for p in emitted(out)}
    assert main(["features", "--config", cfg, "--out", str(out)]) == 0
    assert {p: p.read_bytes() for p in emitted(out)} == first


def test_missing_manifest_is_data_error(tmp_path, capsys):
    cfg = write_config(tmp_path / "f.json", {"manifest": "nowhere/manifest.json"})
    assert main(["features", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "data error" in capsys.readouterr().err


def test_unreadable_config_is_config_error(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    assert main(["mask", "--config", str(tmp_path / "c.json")]) == 2
    assert main(["mask", "--config", str(tmp_path / "missing.json")]) == 2


# -- eval ------------------------------------------------------------------------


def eval_cfg(manifest, **overrides):
    cfg = {"manifest": str(manifest), "protocol": "LeaveSubjectOut",
           "classifiers": [{"name": "l1_logreg", "grid": [{"C": 1.0}]}],
           "window_sizes_s": [10], "mask": {"amplitude_threshold_uv": 200.0}, "seed": 0}
    cfg.update(overrides)
    return cfg


@pytest.fixture
def small_data(tmp_path):
    cfg = write_config(tmp_path / "synth.json", synth_cfg(n_subjects=2))
    out = tmp_path / "small"
    assert main(["synth", "--config", cfg, "--out", str(out)]) == 0
    return out / "manifest.json"


def test_unknown_classifier_names_field(tmp_path, small_data, capsys):
    cfg = eval_cfg(small_data, classifiers=[{"name": "knn"}])
    out = tmp_path / "e"
    assert main(["eval", "--config", write_config(tmp_path / "e.json", cfg),
                 "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "classifiers[0].name" in err and "knn" in err
    assert not out.exists()


def test_eval_missing_mask_is_config_error(tmp_path, small_data):
    cfg = eval_cfg(small_data)
    del cfg["mask"]
    assert main(["eval", "--config", write_config(tmp_path / "e.json", cfg)]) == 2


def test_eval_writes_reports(tmp_path, small_data):
    cfg = write_config(tmp_path / "e.json", eval_cfg(small_data, save_models=True))
    out = tmp_path / "e"
    assert main(["eval", "--config", cfg, "--out", str(out)]) == 0
    report = (out / "report.csv").read_text().splitlines()
    assert report[1].startswith("protocol,classifier,window_len_s,fold")
    assert len(report) == 2 + 3  # two folds plus the aggregate row
    summary = (out / "summary.txt").read_text()
    assert "LeaveSubjectOut" in summary and "l1_logreg" in summary
    assert (out / "models" / "l1_logreg_w10.json").exists()
    pred = (out / "predictability.csv").read_text().splitlines()
    assert pred[1] == "protocol,classifier,window_len_s,subject,tpr,tnr,predictable"
    assert len(pred) == 2 + 2
    assert_provenance(out)


def test_eval_dry_run_prints_plan(tmp_path, small_data, capsys):
    cfg = write_config(tmp_path / "e.json", eval_cfg(small_data, protocol=["IntraSubject",
                                                                          "LeaveSubjectOut"]))
    out = tmp_path / "e"
    assert main(["eval", "--config", cfg, "--out", str(out), "--dry-run"]) == 0
    text = capsys.readouterr().out
    assert "IntraSubject: 4 folds" in text and "LeaveSubjectOut: 2 folds" in text
    assert not out.exists()


def test_eval_non_convergence_exits_4(tmp_path, small_data, capsys):
    cfg = eval_cfg(small_data, classifiers=[{"name": "svm_rbf",
                                             "grid": [{"C": 100.0, "gamma": 1.0}],
                                             "options": {"max_iter": 1}}])
    assert main(["eval", "--config", write_config(tmp_path / "e.json", cfg),
                 "--out", str(tmp_path / "e")]) == 4
    assert "numerical failure" in capsys.readouterr().err


# -- report ----------------------------------------------------------------------


def _report(tmp_path, weights, capsys=None):
    cols = feature_names()
    model = LinearModel(np.asarray(weights, dtype=float), 0.0, 1.0)
    save_model(model, tmp_path / "model.json", cols)
    cfg = write_config(tmp_path / "r.json", {"model": "model.json"})
    out = tmp_path / "r"
    assert main(["report", "--config", cfg, "--out", str(out)]) == 0
    return out


def test_report_zero_weights(tmp_path):
    out = _report(tmp_path, np.zeros(448))
    assert "X" not in (out / "correlation_grid.txt").read_text()
    lines = (out / "feature_selection.csv").read_text().splitlines()
    assert lines[-1] == "total nonzero,0"
    assert_provenance(out)


def test_report_single_correlation_weight(tmp_path):
    w = np.zeros(448)
    cols = feature_names()
    w[cols.index("corr/T9.Theta__T10.Theta")] = 0.7
    w[cols.index("varpow/FP2/Delta")] = -0.1
    w[cols.index("hemidiff/T9-T10/Beta")] = 0.2
    out = _report(tmp_path, w)
    assert (out / "correlation_grid.txt").read_text().count("X") == 1
    rows = dict(l.split(",") for l in
                (out / "feature_selection.csv").read_text().splitlines()[2:])
    total = int(rows.pop("total nonzero"))
    assert total == 3 == sum(int(v) for v in rows.values())
    assert rows["correlation"] == "1"


def test_report_rejects_non_linear_model(tmp_path):
    from wearable_eeg.classifiers import train_random_forest
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 448))
    model = train_random_forest(X, np.tile([1, -1], 5), 5)
    save_model(model, tmp_path / "forest.json", feature_names())
    cfg = write_config(tmp_path / "r.json", {"model": "forest.json"})
    assert main(["report", "--config", cfg, "--out", str(tmp_path / "r")]) == 2


def test_report_layout_mismatch_is_data_error(tmp_path):
    save_model(LinearModel(np.zeros(3), 0.0, 1.0), tmp_path / "m.json", ["a", "b", "c"])
    cfg = write_config(tmp_path / "r.json", {"model": "m.json"})
    assert main(["report", "--config", cfg, "--out", str(tmp_path / "r")]) == 3


# -- entry points ----------------------------------------------------------------


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "wearable_eeg", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout


def test_provenance_line_format():
    line = provenance_line({"a": 1})
    assert line.startswith(PROVENANCE) and len(line.split("=")[1]) == 16
    assert provenance_line({"a": 1}) == provenance_line({"a": 1})
    assert provenance_line({"a": 1}) != provenance_line({"a": 2})
