import json
import subprocess
import sys

import numpy as np
import pytest

from tc3d import pipeline
from tc3d.cli import main
from tc3d.errors import ConfigError
from tc3d.manifest import RunManifest, load_config, load_series, save_series
from tc3d.mc import MCConfig, run_chain
from tc3d.models import build_model, sample_disorder
from tc3d.cells import build_complex


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip().startswith("{") else out


def test_lattice_info(capsys):
    code, payload = run_cli(
        ["lattice", "info", "--dim", "4", "--lengths", "2,2,2,2"], capsys
    )
    assert code == 0
    assert payload["cell_counts"] == [16, 64, 96, 64, 16]
    assert payload["betti_numbers"] == [1, 4, 6, 4, 1]


def test_lattice_info_open_axes(capsys):
    code, payload = run_cli(
        ["lattice", "info", "--dim", "3", "--lengths", "2,2,1", "--bc", "ppo"],
        capsys,
    )
    assert code == 0
    assert payload["cell_counts"] == [4, 8, 4, 0]


def test_code_sample_and_files(tmp_path, capsys):
    out = tmp_path / "sample"
    code, payload = run_cli(
        ["code", "sample", "--L", "2", "--p", "0.1", "--rounds", "3",
         "--seed", "5", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert (out / "error.chain").exists()
    assert (out / "syndrome.chain").exists()
    manifest = RunManifest.load(out / "manifest.json")
    assert manifest.command == "code sample"
    assert manifest.content_hash() == payload["content_hash"]


def test_code_map(capsys):
    code, payload = run_cli(
        ["code", "map", "--L", "2", "--sector", "X", "--p", "0.08",
         "--seed", "9"],
        capsys,
    )
    assert code == 0
    assert payload["model"] == "RBIM3"
    assert payload["n_terms"] == 24
    code, payload = run_cli(
        ["code", "map", "--L", "2", "--sector", "Z", "--p", "0.08",
         "--rounds", "3", "--seed", "9"],
        capsys,
    )
    assert code == 0
    assert payload["model"] == "RCGM4"


def test_mc_run_and_replay(tmp_path, capsys):
    config = {
        "model": "RPGM3",
        "lengths": [2, 2, 2],
        "p": 0.05,
        "nishimori": True,
        "seed": 21,
        "mc": {"therm_sweeps": 20, "sweeps": 100, "interval": 5, "samples": 1},
        "loops": [[1, 1]],
        "out": str(tmp_path / "run1"),
    }
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(config))
    code, payload1 = run_cli(["mc", "run", "--config", str(cfg_path)], capsys)
    assert code == 0
    # replay into a different directory: bit-identical content hash
    code, payload2 = run_cli(
        ["mc", "run", "--config", str(cfg_path), "--out", str(tmp_path / "run2")],
        capsys,
    )
    assert code == 0
    assert payload1["content_hash"] == payload2["content_hash"]
    m1 = RunManifest.load(tmp_path / "run1" / "manifest.json")
    m2 = RunManifest.load(tmp_path / "run2" / "manifest.json")
    assert m1.content_hash() == m2.content_hash()
    assert m1.created is not None  # timestamp excluded from the hash


def test_mc_run_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["mc", "run", "--config", str(bad)]) == 2
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"model": "RPGM3"}))
    assert main(["mc", "run", "--config", str(missing)]) == 2


def test_mc_sweep(tmp_path, capsys):
    config = {
        "model": "RBIM3",
        "sizes": [2, 3],
        "grid": {"mode": "beta", "values": [0.15, 0.2, 0.25, 0.3]},
        "mc": {"therm_sweeps": 30, "sweeps": 120, "interval": 6, "samples": 3},
        "seed": 17,
        "out": str(tmp_path / "sweep"),
    }
    cfg_path = tmp_path / "sweep.json"
    cfg_path.write_text(json.dumps(config))
    code, payload = run_cli(["mc", "sweep", "--config", str(cfg_path)], capsys)
    assert code == 0
    table = (tmp_path / "sweep" / "binder_curves.csv").read_text().splitlines()
    assert table[0].split(",")[0] == "L"
    assert len(table) == 1 + 2 * 4


def test_exact_check_partition(capsys):
    code, payload = run_cli(
        ["exact", "check", "--what", "partition", "--beta", "0.8"], capsys
    )
    assert code == 0 and payload["passed"]


def test_exact_check_kw(capsys):
    code, payload = run_cli(
        ["exact", "check", "--what", "kw", "--slab", "2,2,1", "--beta", "0.5"],
        capsys,
    )
    assert code == 0 and payload["passed"]


def test_duality_solve(capsys):
    code, payload = run_cli(
        ["duality", "solve", "--kind", "RCGM4", "--p-c", "0.28"], capsys
    )
    assert code == 0
    assert payload["dual_kind"] == "RBIM4"
    assert abs(payload["dual_p_c"] - 0.0206) < 5e-4


def test_threshold_inference_mode(tmp_path, capsys):
    config = {"model": "RBIM3", "p_c": 0.233, "out": str(tmp_path / "thr")}
    cfg_path = tmp_path / "thr.json"
    cfg_path.write_text(json.dumps(config))
    code, payload = run_cli(["threshold", "run", "--config", str(cfg_path)],
                            capsys)
    assert code == 0
    assert payload["mode"] == "inference"
    assert abs(payload["dual_p_c"] - 0.033) < 0.003
    report = json.loads((tmp_path / "thr" / "threshold_report.json").read_text())
    assert report["dual_model"] == "RPGM3"


def test_threshold_self_dual(tmp_path, capsys):
    cfg_path = tmp_path / "sd.json"
    cfg_path.write_text(json.dumps({"model": "RPGM4"}))
    code, payload = run_cli(["threshold", "run", "--config", str(cfg_path)],
                            capsys)
    assert code == 0
    assert payload["mode"] == "self-dual"
    assert abs(payload["p_c"] - 0.1100) < 5e-4
    assert "no simulation" in payload["note"]


def test_threshold_no_crossing_exit_code(tmp_path):
    # deep disordered window: small-L curves sit well above large-L ones,
    # so no crossing exists in range
    config = {
        "model": "RBIM3",
        "sizes": [2, 4],
        "p_grid": [0.42, 0.44, 0.46, 0.48],
        "mc": {"therm_sweeps": 100, "sweeps": 600, "interval": 3,
               "samples": 6, "start": "hot"},
        "seed": 3,
    }
    cfg_path = tmp_path / "nc.json"
    cfg_path.write_text(json.dumps(config))
    assert main(["threshold", "run", "--config", str(cfg_path)]) == 4


def test_config_missing_key_message(tmp_path):
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps({"model": "RBIM3", "sizes": [2]}))
    with pytest.raises(ConfigError, match="p_grid"):
        pipeline.threshold_pipeline(load_config(cfg_path))


def test_series_roundtrip(tmp_path, rng):
    model = build_model("RPGM3", build_complex(3, 2))
    dis = sample_disorder(model, 0.1, rng)
    cfg = MCConfig(therm_sweeps=10, sweeps=50, interval=5, seed=8)
    series = run_chain(model, dis, 0.9, cfg)
    path = save_series(series, tmp_path / "s.csv")
    back = load_series(path)
    assert back.kind == series.kind and back.shape == series.shape
    for k in series.keys():
        assert np.array_equal(back.records[k], series.records[k])


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "tc3d.cli", "lattice", "info", "--dim", "3",
         "--lengths", "2,2,2"],
        capture_output=True, text=True,
    )
    assert out.returncode == 0
    assert json.loads(out.stdout)["cell_counts"] == [8, 24, 24, 8]
