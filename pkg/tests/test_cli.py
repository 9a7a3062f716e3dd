import csv
import io
import json

import pytest

from multirep.cli import main
from multirep.experiments import CSV_COLUMNS


def write_config(tmp_path, body):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(body))
    return str(path)


BASE = {
    "hierarchy": {"k": 4, "l_max": 4, "n": 1024},
    "common": {"m": 320, "q": 0.03125, "zeta": 0.25, "r1": 0.5, "r2": 0.75},
}

SMALL = {
    "hierarchy": {"k": 2, "l_max": 1, "n": 4},
    "common": {"m": 2, "q": 0.0, "zeta": 0.25, "r1": 0.25, "r2": 0.75},
    "representation": {"kind": "high_ff"},
}


def run_cli(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bounds_reproduces_worked_numbers(capsys, tmp_path):
    cfg = write_config(tmp_path, BASE)
    code, out, err = run_cli(capsys, "--config", cfg, "bounds")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["delta"][4]["value"] == pytest.approx(0.0211, abs=2e-4)
    assert doc["version"].startswith("multirep")
    assert doc["config"]["common"]["m"] == 320

    code, out, err = run_cli(capsys, "--config", cfg, "bounds", "--paper-style")
    assert json.loads(out)["result"]["delta"][4]["value"] == pytest.approx(0.016, abs=1.5e-3)


def test_bounds_missing_zeta_is_schema_error(capsys, tmp_path):
    body = {"hierarchy": BASE["hierarchy"], "common": {"m": 320, "q": 0.03125, "r1": 0.5, "r2": 0.75}}
    code, out, err = run_cli(capsys, "--config", write_config(tmp_path, body), "bounds")
    assert code == 2
    assert "zeta" in err


def test_bounds_r1_gt_r2_names_invariant(capsys, tmp_path):
    body = dict(BASE, common=dict(BASE["common"], r1=0.8))
    code, out, err = run_cli(capsys, "--config", write_config(tmp_path, body), "bounds")
    assert code == 2
    assert "r1 <= r2" in err


def test_unknown_config_key_rejected(capsys, tmp_path):
    body = dict(SMALL, common=dict(SMALL["common"], typo=1))
    code, out, err = run_cli(capsys, "--config", write_config(tmp_path, body), "bounds")
    assert code == 2
    assert "typo" in err


def test_set_overrides(capsys, tmp_path):
    cfg = write_config(tmp_path, BASE)
    code, out, err = run_cli(capsys, "--config", cfg, "--set", "common.m=640", "bounds")
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["common"]["m"] == 640
    code, out, err = run_cli(capsys, "--config", cfg, "--set", "common.m", "bounds")
    assert code == 2


def test_build_and_check(capsys, tmp_path):
    cfg = write_config(tmp_path, SMALL)
    code, out, err = run_cli(capsys, "--config", cfg, "build")
    assert code == 0
    doc = json.loads(out)["result"]
    assert doc["network"]["kind"] == "high_ff"
    assert len(doc["hierarchy"]) == 6

    code, out, err = run_cli(capsys, "--config", cfg, "check")
    assert code == 0


def test_build_dump_bitmap(capsys, tmp_path):
    cfg = write_config(tmp_path, SMALL)
    bitmap = tmp_path / "inc.bin"
    code, out, err = run_cli(capsys, "--config", cfg, "build", "--dump-bitmap", str(bitmap))
    assert code == 0
    idx = json.loads((tmp_path / "inc.bin.index.json").read_text())
    assert idx["m"] == 2
    # 2 (concept,child) pairs x 2 rows x 1 byte
    assert bitmap.stat().st_size == len(idx["pairs"]) * 2 * idx["row_bytes"]


def test_check_lateral_build(capsys, tmp_path):
    body = {
        "hierarchy": {"k": 2, "l_max": 1, "n": 4},
        "common": {"m": 8, "q": 0.0, "zeta": 0.25, "r1": 0.25, "r2": 0.75},
        "connectivity": {"a": 0.75, "a1": 0.625, "a2": 0.25, "m1": 4, "m2": 4},
        "representation": {"kind": "lateral", "seed": 3},
    }
    code, out, err = run_cli(capsys, "--config", write_config(tmp_path, body), "check")
    assert code == 0
    assert json.loads(out)["result"]["class_assumption"]["ok"]


def test_recognize_q0_full_leaves(capsys, tmp_path):
    body = dict(SMALL, experiment={"b_generator": "full-leaves", "base_seed": 1})
    code, out, err = run_cli(capsys, "--config", write_config(tmp_path, body), "recognize")
    assert code == 0
    doc = json.loads(out)["result"]
    assert doc["recognized"] is True
    assert doc["verdict"] == "Recognized"
    assert doc["fired_counts"][1] == 2


def test_learn_roundtrip(capsys, tmp_path):
    body = {
        "hierarchy": {"k": 2, "l_max": 1, "n": 4},
        "common": {"m": 2, "q": 0.0, "zeta": 0.25, "r1": 0.25, "r2": 0.75},
        "learning": {"algorithm": "ff_high", "n_slots": 4},
    }
    dump = tmp_path / "net.json"
    code, out, err = run_cli(capsys, "--config", write_config(tmp_path, body), "learn", "--dump-network", str(dump))
    assert code == 0
    doc = json.loads(out)["result"]
    assert doc["success"] is True
    assert json.loads(dump.read_text())["kind"] == "high_ff"


def test_montecarlo_csv_and_exit_codes(capsys, tmp_path):
    body = {
        "hierarchy": {"k": 2, "l_max": 1, "n": 4},
        "common": {"m": 16, "q": 0.03125, "zeta": 0.25, "r1": 0.25, "r2": 0.75},
        "representation": {"kind": "high_ff"},
        "experiment": {"trials": 300, "base_seed": 3, "b_generator": "full-leaves"},
    }
    out_csv = tmp_path / "sweep.csv"
    code, out, err = run_cli(capsys, "--config", write_config(tmp_path, body), "montecarlo", "--csv", str(out_csv))
    doc = json.loads(out)["result"]
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert list(rows[0]) == CSV_COLUMNS
    assert (code == 0) == (doc["all_bounds_satisfied"] and doc["total_violations"] == 0)


def test_montecarlo_unsatisfied_bound_exits_1(capsys, tmp_path):
    # delta ~ 3e-7 but only 120 trials: the CI upper edge cannot get under it
    body = {
        "hierarchy": {"k": 2, "l_max": 1, "n": 4},
        "common": {"m": 512, "q": 0.03125, "zeta": 0.25, "r1": 0.25, "r2": 0.75},
        "representation": {"kind": "high_ff"},
        "experiment": {"trials": 120, "base_seed": 3, "b_generator": "full-leaves"},
    }
    code, out, err = run_cli(capsys, "--config", write_config(tmp_path, body), "montecarlo")
    doc = json.loads(out)["result"]
    assert not doc["all_bounds_satisfied"]
    assert code == 1


def test_missing_config_file(capsys):
    code, out, err = run_cli(capsys, "--config", "/nonexistent.json", "bounds")
    assert code == 2
