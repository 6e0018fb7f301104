"""CLI contract: schema validation, exit codes, artifacts, determinism."""

import json

import pytest

from nonlocal_cvp.cli import main, run


def _read(path):
    return path.read_bytes()


def test_gauss_green_defaults_pass(tmp_path):
    res = run(experiment="gauss-green", out=tmp_path / "gg")
    assert res.exit_code == 0
    assert res.summary["residual"] < 1e-9
    for name in ("summary.json", "manifest.json", "pairs.csv"):
        assert (tmp_path / "gg" / name).exists()
    summary = json.loads((tmp_path / "gg" / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["experiment"] == "gauss-green"


def test_manifest_records_provenance(tmp_path):
    run(experiment="gauss-green", out=tmp_path / "gg")
    manifest = json.loads((tmp_path / "gg" / "manifest.json").read_text())
    assert manifest["kernel"]["family"] == "fractional"
    assert "tolerances" in manifest
    assert "seed" in manifest
    for key in ("numpy", "scipy", "python", "nonlocal_cvp"):
        assert key in manifest["versions"]
    assert "h" in manifest["mesh"]


def test_malformed_config_exits_two(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"schema_version": 1, "experiment": "solve",
                               "mesh": {"h": -0.5}}))
    res = run(config=cfg, out=tmp_path / "out")
    assert res.exit_code == 2
    err = capsys.readouterr().err
    assert "mesh.h" in err
    assert not (tmp_path / "out" / "summary.json").exists()


def test_unknown_field_is_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"schema_version": 1, "experiment": "solve",
                               "mesch": {}}))
    assert run(config=cfg, out=tmp_path / "out").exit_code == 2
    assert "mesch" in capsys.readouterr().err


def test_experiment_mismatch_is_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "experiment": "solve"}))
    res = run(config=cfg, experiment="eig", out=tmp_path / "out")
    assert res.exit_code == 2
    assert "experiment" in capsys.readouterr().err


def test_custom_kernel_family_is_api_only(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "schema_version": 1, "experiment": "solve",
        "kernel": {"family": "custom", "d": 1, "params": {}},
    }))
    assert run(config=cfg, out=tmp_path / "out").exit_code == 2
    assert "library API" in capsys.readouterr().err


def test_numerical_failure_exits_three(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "schema_version": 1, "experiment": "solve",
        "params": {"variant": "robin", "beta": 0.0},
    }))
    res = run(config=cfg, out=tmp_path / "out")
    assert res.exit_code == 3
    assert "degenerate-robin" in capsys.readouterr().err


def test_artifacts_are_byte_identical_across_runs_and_threads(tmp_path):
    r1 = run(experiment="assemble-check", out=tmp_path / "a", threads=1)
    r2 = run(experiment="assemble-check", out=tmp_path / "b", threads=1)
    r3 = run(experiment="assemble-check", out=tmp_path / "c", threads=2)
    assert r1.exit_code == r2.exit_code == r3.exit_code == 0
    for name in ("summary.json", "checks.csv"):
        ref = _read(tmp_path / "a" / name)
        assert _read(tmp_path / "b" / name) == ref
        assert _read(tmp_path / "c" / name) == ref


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("NONLOCAL_CVP_THREADS", "2")
    res = run(experiment="gauss-green", out=tmp_path / "gg")
    assert res.exit_code == 0
    manifest = json.loads((tmp_path / "gg" / "manifest.json").read_text())
    assert manifest["threads"] == 2


def test_threads_env_invalid_exits_two(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NONLOCAL_CVP_THREADS", "zippy")
    res = run(experiment="gauss-green", out=tmp_path / "gg")
    assert res.exit_code == 2
    assert "NONLOCAL_CVP_THREADS" in capsys.readouterr().err


def test_solve_defaults_report_unit_defect(tmp_path):
    res = run(experiment="solve", out=tmp_path / "s")
    assert res.exit_code == 0
    assert res.summary["compatibility_defect"] == pytest.approx(1.0, abs=1e-12)
    assert (tmp_path / "s" / "solution.csv").exists()


def test_solution_csv_labels_regions(tmp_path):
    run(experiment="solve", out=tmp_path / "s")
    body = (tmp_path / "s" / "solution.csv").read_text().splitlines()
    assert body[0] == "x,u,region"
    regions = {line.split(",")[2] for line in body[1:]}
    assert regions == {"interior", "interface", "complement"}


def test_mesh_and_matrix_dumps(tmp_path):
    res = run(
        experiment="assemble-check",
        out=tmp_path / "a",
        mesh_dump=True,
        matrix_dump=True,
    )
    assert res.exit_code == 0
    mesh = json.loads((tmp_path / "a" / "mesh.json").read_text())
    assert {"vertices", "elements", "tags"} <= set(mesh)
    assert len(mesh["elements"]) == len(mesh["tags"])
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    n = manifest["mesh"]["n_dofs"]
    for name in ("A.txt", "M.txt", "M_tilde.txt", "N_op.txt"):
        lines = (tmp_path / "a" / name).read_text().splitlines()
        assert lines  # nonzero entries exist
        for line in lines[:50]:
            row, col, val = line.split()
            assert 0 <= int(row) < n and 0 <= int(col) < n
            float(val)  # parses


def test_nonexistence_probe_flags_divergence(tmp_path):
    # gamma above the admissible band: norms must blow up along the ladder
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "schema_version": 1, "experiment": "nonexistence-probe",
        "params": {"alpha": 1.0, "gamma": 0.8},
    }))
    res = run(config=cfg, out=tmp_path / "ne")
    assert res.exit_code == 0
    assert res.summary["flag"] == "divergent"
    assert all(r > 1.5 for r in res.summary["growth_ratios"])
    body = (tmp_path / "ne" / "ladder.csv").read_text().splitlines()
    assert len(body) == 5  # header plus one row per rung


def test_eig_config_file_roundtrip(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "schema_version": 1,
        "experiment": "eig",
        "kernel": {"family": "fractional", "d": 1, "params": {"alpha": 0.5}},
        "params": {"variant": "neumann", "count": 4},
    }))
    res = run(config=cfg, out=tmp_path / "e")
    assert res.exit_code == 0
    assert abs(res.summary["mu0"]) < 1e-10
    assert res.summary["mu1"] > 0.0
    body = (tmp_path / "e" / "spectrum.csv").read_text().splitlines()
    assert len(body) == 5


def test_main_entrypoint_prints_out_dir(tmp_path, capsys):
    code = main(["gauss-green", "--out", str(tmp_path / "gg")])
    assert code == 0
    out = capsys.readouterr().out
    assert str(tmp_path / "gg") in out


def test_main_rejects_unknown_experiment(tmp_path):
    with pytest.raises(SystemExit):
        main(["transmogrify", "--out", str(tmp_path / "x")])