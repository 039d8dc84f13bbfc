import json

import pytest

from rsgmfg.cli import main

from conftest import make_config


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_check_benchmark_ok(tmp_path, capsys):
    cfg = make_config(n_t=300, n_alpha=40)
    code, out = run(capsys, "check", write_config(tmp_path, cfg))
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["h4_min_eigenvalue"] - 0.09) < 1e-12
    assert payload["contraction"]["C_Xi"] > 1.0
    assert payload["monotonicity"]["case"] == "neither"
    assert payload["h3_ok"] is True


def test_check_config_error_exit_1(tmp_path, capsys):
    cfg = make_config(coefficients={"Qf": -1.0})
    code, _ = run(capsys, "check", write_config(tmp_path, cfg))
    assert code == 1


def test_check_malformed_json_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _ = run(capsys, "check", str(path))
    assert code == 1


def test_check_assumption_failure_exit_2(tmp_path, capsys):
    # gamma = 1: 0.24 - 2 * 1 * 0.25 = -0.26 < 0
    cfg = make_config(n_t=100, gamma=1.0)
    code, out = run(capsys, "check", write_config(tmp_path, cfg))
    assert code == 2
    assert json.loads(out)["h4_min_eigenvalue"] < 0


def test_solve_both_methods_and_cross_diff(tmp_path, capsys):
    cfg = make_config(n_t=400, n_alpha=30, coefficients={"D": 0.2})
    out_dir = tmp_path / "out"
    code, out = run(capsys, "solve", write_config(tmp_path, cfg),
                    "--method", "both", "--out", str(out_dir))
    assert code == 0
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["cross_method_sup_diff"] <= 1e-4
    assert (out_dir / "solution_fixed_point.csv").exists()
    assert (out_dir / "solution_spectral.csv").exists()
    assert (out_dir / "manifest.json").exists()
    assert summary["methods"]["fixed_point"]["consistency_residual"] < 1e-5


def test_solve_zero_kernel_writes_zero_columns(tmp_path, capsys):
    cfg = make_config(n_t=200, n_alpha=6,
                      graphon={"kind": "constant", "c": 0.0},
                      initial_law={"kind": "deterministic", "mean": 0.0})
    out_dir = tmp_path / "out"
    code, _ = run(capsys, "solve", write_config(tmp_path, cfg),
                  "--method", "spectral", "--out", str(out_dir))
    assert code == 0
    rows = (out_dir / "solution_spectral.csv").read_text().splitlines()
    header = rows[0].split(",")
    zi, si = header.index("z1"), header.index("S1")
    for row in rows[1:]:
        cells = row.split(",")
        assert float(cells[zi]) == 0.0
        assert float(cells[si]) == 0.0


def test_solve_nonconvergent_exit_3(tmp_path, capsys):
    cfg = make_config(n_t=200, n_alpha=10, coefficients={"D": 6.0})
    code, _ = run(capsys, "solve", write_config(tmp_path, cfg),
                  "--method", "fixed-point", "--out", str(tmp_path / "o"))
    assert code == 3


def test_simulate_zero_noise_zero_stderr(tmp_path, capsys):
    cfg = make_config(n_t=150, n_alpha=20, coefficients={"sigma": 0.0},
                      initial_law={"kind": "deterministic", "mean": 2.0},
                      simulation={"N": 4, "M": 3, "seed": 1})
    out_dir = tmp_path / "out"
    code, _ = run(capsys, "simulate", write_config(tmp_path, cfg),
                  "--out", str(out_dir))
    assert code == 0
    costs = json.loads((out_dir / "costs.json").read_text())
    assert all(c["estimate"]["std_error"] == 0.0 for c in costs["costs"])
    lines = (out_dir / "trajectories.csv").read_text().splitlines()
    assert lines[0].startswith("path,agent,t,x1,u1")
    assert len(lines) == 1 + 3 * 4 * 151


def test_nash_gap_command(tmp_path, capsys):
    cfg = make_config(n_t=150, n_alpha=40, coefficients={"D": 0.2},
                      simulation={"N": 4, "M": 300, "seed": 5})
    out_dir = tmp_path / "out"
    code, _ = run(capsys, "nash-gap", write_config(tmp_path, cfg),
                  "--N-list", "4,8", "--deviate", "0.5",
                  "--out", str(out_dir))
    assert code == 0
    payload = json.loads((out_dir / "nash_gap.json").read_text())
    assert {r["N"] for r in payload["rows"]} == {4, 8}
    dev_rows = [r for r in payload["rows"] if "deviation_cost" in r]
    assert dev_rows and dev_rows[0]["deviation_delta"] == 0.5
    csv_lines = (out_dir / "nash_gap.csv").read_text().splitlines()
    assert csv_lines[0].split(",")[:3] == ["N", "agent", "alpha"]


def test_reproduce_riccati_terminal_row(tmp_path, capsys):
    out_dir = tmp_path / "fig"
    code, _ = run(capsys, "reproduce", "--figure", "riccati",
                  "--out", str(out_dir))
    assert code == 0
    lines = (out_dir / "riccati.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[:3] == ["t", "Pi", "P_perp"]
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == 1.0
    assert last[1] == pytest.approx(0.8, abs=1e-12)
    for v in last[2:]:
        assert v == pytest.approx(0.64, abs=1e-12)
    meta = json.loads((out_dir / "riccati_meta.json").read_text())
    assert meta["rank"] == 3
    assert (out_dir / "manifest.json").exists()


def test_reproduce_is_byte_deterministic(tmp_path, capsys):
    outs = []
    for tag in ("a", "b"):
        out_dir = tmp_path / tag
        code, _ = run(capsys, "reproduce", "--figure", "riccati",
                      "--out", str(out_dir))
        assert code == 0
        outs.append((out_dir / "riccati.csv").read_bytes())
    assert outs[0] == outs[1]


def test_output_dir_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RSGMFG_OUTPUT_DIR", str(tmp_path / "envout"))
    code, _ = run(capsys, "reproduce", "--figure", "riccati")
    assert code == 0
    assert (tmp_path / "envout" / "reproduce" / "riccati.csv").exists()


def test_manifest_written_before_data(tmp_path, capsys):
    cfg = make_config(n_t=100, n_alpha=6, coefficients={"D": 6.0})
    out_dir = tmp_path / "out"
    code, _ = run(capsys, "solve", write_config(tmp_path, cfg),
                  "--method", "fixed-point", "--out", str(out_dir))
    # solver fails with exit 3, but the manifest marks the attempted run
    assert code == 3
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["command"] == "solve"
    assert "config_sha256" in manifest and "versions" in manifest
