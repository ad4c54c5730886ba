import json
import os
import subprocess
import sys

import pytest

from spherecue.cli import main

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "default.json")
FAST_ARGS = ["--config", CONFIG]


@pytest.fixture()
def fast_config(tmp_path):
    # few-bin copy keeps CLI runs quick
    doc = json.load(open(CONFIG))
    doc["freqs"]["count"] = 5
    path = tmp_path / "fast.json"
    json.dump(doc, open(path, "w"))
    return str(path)


def test_cues_writes_csv(tmp_path, fast_config):
    out = tmp_path / "cues.csv"
    rc = main(["cues", "--config", fast_config, "--source", "90,45", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "f_hz,h_l_re,h_l_im,h_r_re,h_r_im,ild_db,itd_s"
    assert len(lines) == 6


def test_cues_golden_stability(tmp_path, fast_config):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    main(["cues", "--config", fast_config, "--source", "122,63", "--out", str(out1)])
    main(["cues", "--config", fast_config, "--source", "122,63", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_localize_json_document(tmp_path, fast_config):
    out = tmp_path / "loc.json"
    rc = main([
        "localize", "--config", fast_config, "--source", "122,63",
        "--init", "100,80", "--iters", "15", "--out", str(out),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert {"estimate_deg", "angular_error_deg", "final_loss",
            "iterations", "converged", "trajectory"} <= set(doc)
    assert len(doc["trajectory"]) == doc["iterations"] + 1


def test_sweep_csv_shape(tmp_path, fast_config):
    out = tmp_path / "sweep.csv"
    rc = main([
        "sweep", "--config", fast_config, "--snr", "20,10,0", "--trials", "1",
        "--out", str(out), "--seed", "3",
    ])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "snr_db,mean_err_deg,median_err_deg,frac_lt_5,frac_lt_10"
    assert len(lines) == 4


def test_beamform_csv(tmp_path, fast_config):
    out = tmp_path / "bf.csv"
    rc = main(["beamform", "--config", fast_config, "--look", "122,63",
               "--grid", "42", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "f_hz,wng_db,df,di_db"
    assert len(lines) == 6


def test_track_csv(tmp_path, fast_config):
    out = tmp_path / "track.csv"
    rc = main(["track", "--config", fast_config, "--steps", "8",
               "--sigma-ild", "0.5", "--sigma-itd", "10", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,theta_true,phi_true,theta_hat,phi_hat,err_deg,p_trace"
    assert len(lines) == 9


def test_track_seeded_determinism(tmp_path, fast_config):
    out1 = tmp_path / "t1.csv"
    out2 = tmp_path / "t2.csv"
    for out in (out1, out2):
        main(["track", "--config", fast_config, "--steps", "6", "--seed", "11",
              "--out", str(out)])
    assert out1.read_bytes() == out2.read_bytes()


def test_invalid_config_exit_code(tmp_path):
    doc = json.load(open(CONFIG))
    doc["geometry"]["offset3_z"] = 0.05
    bad = tmp_path / "bad.json"
    json.dump(doc, open(bad, "w"))
    rc = main(["cues", "--config", str(bad), "--out", str(tmp_path / "x.csv")])
    assert rc == 1


def test_usage_error_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "spherecue.cli", "frobnicate"],
        capture_output=True,
        cwd=os.path.dirname(CONFIG),
    )
    assert proc.returncode == 2


def test_validate_passes_on_default(capsys, fast_config):
    rc = main(["validate", "--config", fast_config])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS: boundary residuals" in out
    assert "PASS: translation addition theorem" in out


def test_out_flag_is_honored(tmp_path, fast_config):
    os.makedirs(tmp_path / "sub", exist_ok=True)
    out = tmp_path / "sub" / "target.csv"
    before = set(os.listdir(tmp_path))
    main(["cues", "--config", fast_config, "--out", str(out)])
    assert out.exists()
    after = set(os.listdir(tmp_path))
    assert before == after - set()  # nothing new at the top level
