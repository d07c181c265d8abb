import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cigarflow import cli, flow
from cigarflow.diagnostics import CSV_COLUMNS, emit_diagnostics, read_diagnostics
from cigarflow.scenarios import (
    ConfigError,
    build_scenario,
    load_config,
    parse_config,
    run_scenario,
    verify_scenario,
)
from cigarflow.snapshots import SnapshotError, load_snapshot, save_snapshot


def base_config(**overrides):
    data = {
        "name": "t",
        "grid": {"kind": "radial", "n": 65, "s_max": 8.0},
        "initial": {"type": "exact_cigar"},
        "stepping": {"safety": 0.9, "t_end": 0.2, "record_interval": 0.1},
    }
    data.update(overrides)
    return data


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def test_unknown_keys_are_errors():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(base_config(extra_key=1))
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(base_config(grid={"kind": "radial", "n": 65, "s_max": 8.0, "hmax": 1}))
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(base_config(stepping={"safety": 0.9, "t_end": 0.2,
                                           "record_interval": 0.1, "dt": 1e-3}))
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(base_config(initial={"type": "exact_cigar", "scale": 2.0}))


def test_grid_must_be_power_of_two_plus_one():
    with pytest.raises(ConfigError, match="power of two"):
        parse_config(base_config(grid={"kind": "radial", "n": 100, "s_max": 8.0}))
    for n in (17, 65, 129, 257):
        parse_config(base_config(grid={"kind": "radial", "n": n, "s_max": 8.0}))


def test_missing_and_invalid_sections():
    data = base_config()
    del data["stepping"]
    with pytest.raises(ConfigError, match="missing required key"):
        parse_config(data)
    with pytest.raises(ConfigError, match="initial.type"):
        parse_config(base_config(initial={"type": "rosenau"}))
    with pytest.raises(ConfigError, match="width"):
        parse_config(base_config(initial={"type": "perturbed_cigar", "amplitude": 0.1,
                                          "center": 2.0, "width": 0.0}))
    with pytest.raises(ConfigError, match="radial only"):
        parse_config(base_config(
            grid={"kind": "cartesian", "n": 17, "extent": 4.0},
            initial={"type": "custom_table", "log_u0": [0.0] * 17},
        ))


# ---------------------------------------------------------------------------
# scenario construction
# ---------------------------------------------------------------------------

def test_build_exact_cigar():
    state = build_scenario(parse_config(base_config()))
    np.testing.assert_array_equal(state.init.log_u0, np.zeros(65))
    f0 = np.log1p(np.sinh(state.grid.s) ** 2)
    assert np.max(np.abs(state.init.potential0 - f0)) <= 1e-10
    # w(.,0) = log u0 + f(0) - f0 vanishes up to the solve tolerance
    assert np.max(np.abs(state.init.w0)) <= 1e-10
    assert state.init.res_poisson0 <= 1e-10


def test_build_scaled_cigar_constant_w():
    cfg = parse_config(base_config(initial={"type": "scaled_cigar", "scale": 2.0}))
    state = build_scenario(cfg)
    np.testing.assert_allclose(state.init.w0, np.log(2.0), atol=1e-10)
    assert state.init.sup_log_u0 == pytest.approx(np.log(2.0), rel=1e-12)


def test_build_perturbed_cigar_hypothesis_values():
    cfg = parse_config(base_config(
        initial={"type": "perturbed_cigar", "amplitude": 0.3, "center": 2.0, "width": 0.5},
    ))
    state = build_scenario(cfg)
    assert state.init.sup_log_u0 == pytest.approx(0.3, rel=1e-6)
    assert np.isfinite(state.init.sup_grad_log_u0)
    assert np.isfinite(state.init.sup_potential_gap)
    assert state.init.res_poisson0 <= 1e-10


def test_build_custom_table_and_rejection():
    values = list(0.1 * np.exp(-np.linspace(0, 8, 65)))
    cfg = parse_config(base_config(initial={"type": "custom_table", "log_u0": values}))
    state = build_scenario(cfg)
    assert np.isfinite(state.init.sup_log_u0)
    bad = values.copy()
    bad[-1] = float("inf")
    with pytest.raises(ConfigError, match="non-finite"):
        build_scenario(parse_config(base_config(
            initial={"type": "custom_table", "log_u0": bad})))
    with pytest.raises(ConfigError, match="values"):
        build_scenario(parse_config(base_config(
            initial={"type": "custom_table", "log_u0": values[:-3]})))


def test_random_bumps_seed_determinism():
    def build(seed):
        return build_scenario(parse_config(base_config(
            initial={"type": "perturbed_cigar", "amplitude": 0.2, "center": 2.0,
                     "width": 0.5, "random_bumps": 3},
            seed=seed,
        )))
    a = build(7)
    b = build(7)
    c = build(8)
    np.testing.assert_array_equal(a.init.log_u0, b.init.log_u0)
    assert np.max(np.abs(a.init.log_u0 - c.init.log_u0)) > 1e-6


# ---------------------------------------------------------------------------
# diagnostics CSV
# ---------------------------------------------------------------------------

def test_csv_columns_and_round_trip(tmp_path):
    cfg = parse_config(base_config())
    result = run_scenario(cfg)
    buf = io.StringIO()
    emit_diagnostics(result.records, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    path = tmp_path / "diag.csv"
    path.write_text(text)
    back = read_diagnostics(path)
    assert len(back) == len(result.records)
    for a, b in zip(result.records, back):
        for name in CSV_COLUMNS:
            assert getattr(a, name) == getattr(b, name)


def test_csv_byte_identical_across_runs():
    cfg = parse_config(base_config())
    outputs = []
    for _ in range(2):
        result = run_scenario(cfg)
        buf = io.StringIO()
        emit_diagnostics(result.records, buf)
        outputs.append(buf.getvalue())
    assert outputs[0] == outputs[1]


def test_emit_empty_raises():
    with pytest.raises(ValueError):
        emit_diagnostics([], io.StringIO())


# ---------------------------------------------------------------------------
# snapshots and resume
# ---------------------------------------------------------------------------

def test_snapshot_round_trip_is_text_identical(tmp_path):
    state = build_scenario(parse_config(base_config()))
    p1 = tmp_path / "a.txt"
    p2 = tmp_path / "b.txt"
    save_snapshot(state, p1)
    loaded = load_snapshot(p1)
    save_snapshot(loaded, p2)
    assert p1.read_text() == p2.read_text()
    np.testing.assert_array_equal(loaded.conformal.log_factor, state.conformal.log_factor)
    np.testing.assert_array_equal(loaded.potential, state.potential)
    assert loaded.t == state.t
    assert loaded.frame == state.frame


def test_snapshot_checksum_rejects_corruption(tmp_path):
    state = build_scenario(parse_config(base_config()))
    path = tmp_path / "snap.txt"
    save_snapshot(state, path)
    lines = path.read_text().splitlines()
    # corrupt one array value
    for i, line in enumerate(lines):
        if line.startswith("array u_tilde"):
            lines[i + 3] = "0.123456"
            break
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SnapshotError, match="checksum"):
        load_snapshot(path)


def test_snapshot_version_check(tmp_path):
    path = tmp_path / "snap.txt"
    path.write_text("cigarflow-snapshot 99\n")
    with pytest.raises(SnapshotError, match="version"):
        load_snapshot(path)
    path.write_text("something else\n")
    with pytest.raises(SnapshotError):
        load_snapshot(path)


def test_resume_matches_unbroken_run(tmp_path):
    cfg = parse_config(base_config(stepping={"safety": 0.9, "t_end": 1.0,
                                             "record_interval": 0.1}))
    snap_path = tmp_path / "half.txt"

    def hook(state):
        save_snapshot(state, snap_path)

    unbroken = run_scenario(cfg, snapshot_times=(0.5,), snapshot_hook=hook)
    resumed_state = load_snapshot(snap_path)
    resumed = flow.run(resumed_state, 1.0, safety=0.9, record_interval=0.1)

    tail = [rec for rec in unbroken.records if rec.t >= 0.5 - 1e-12]
    assert len(tail) == len(resumed.records)
    for a, b in zip(tail, resumed.records):
        for name in CSV_COLUMNS:
            va, vb = getattr(a, name), getattr(b, name)
            assert va == pytest.approx(vb, rel=1e-12, abs=1e-300), (name, a.t)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_cli_run_and_report(tmp_path, capsys):
    cfg_path = write_config(tmp_path, base_config(
        output={"directory": str(tmp_path / "out"), "snapshot_interval": 0.1},
    ))
    assert cli.main(["run", str(cfg_path), "--quiet"]) == 0
    out_dir = tmp_path / "out"
    assert (out_dir / "diagnostics.csv").exists()
    assert (out_dir / "summary.json").exists()
    assert (out_dir / "snapshot_final.txt").exists()
    assert (out_dir / "snapshot_t0.000000.txt").exists()
    assert cli.main(["report", str(out_dir)]) == 0
    text = capsys.readouterr().out
    assert "max w drift" in text


def test_cli_run_instability_exit_code(tmp_path):
    cfg_path = write_config(tmp_path, base_config(
        stepping={"safety": 4.0, "t_end": 0.5, "record_interval": 0.1},
        output={"directory": str(tmp_path / "boom")},
    ))
    assert cli.main(["run", str(cfg_path), "--quiet"]) == 3
    # the partial diagnostics still carry the last good records and parse back
    records = read_diagnostics(tmp_path / "boom" / "diagnostics.csv")
    assert records and records[0].finite
    summary = json.loads((tmp_path / "boom" / "summary.json").read_text())
    assert summary["aborted"] and "unstable" in summary["abort_message"]


def test_cli_run_custom_table(tmp_path):
    values = list(0.05 * np.exp(-np.linspace(0.0, 8.0, 65)))
    cfg_path = write_config(tmp_path, base_config(
        initial={"type": "custom_table", "log_u0": values},
        output={"directory": str(tmp_path / "table")},
    ))
    assert cli.main(["run", str(cfg_path), "--quiet"]) == 0
    summary = json.loads((tmp_path / "table" / "summary.json").read_text())
    assert summary["hypothesis"]["sup_log_u0"] == pytest.approx(0.05, rel=1e-9)


def test_cli_verify_exit_codes(tmp_path, capsys):
    cfg_path = write_config(tmp_path, base_config())
    assert cli.main(["verify", str(cfg_path)]) == 0
    assert "PASS" in capsys.readouterr().out


def test_cli_oracle(capsys):
    assert cli.main(["oracle"]) == 0
    out = capsys.readouterr().out
    assert out.count("[ok]") == 5


def test_cli_converge(tmp_path, capsys):
    cfg_path = write_config(tmp_path, base_config(
        grid={"kind": "radial", "n": 65, "s_max": 8.0},
        stepping={"safety": 0.9, "t_end": 0.25, "record_interval": 0.25},
    ))
    assert cli.main(["converge", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "least-squares order" in out
    slope = float(out.rsplit("least-squares order:", 1)[1].strip())
    assert 1.8 <= slope <= 2.2


def test_cli_converge_requires_exact_family(tmp_path):
    cfg_path = write_config(tmp_path, base_config(
        initial={"type": "scaled_cigar", "scale": 2.0}))
    assert cli.main(["converge", str(cfg_path)]) == 2


def test_cli_usage_errors(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.json"), "--quiet"]) == 2
    bad = write_config(tmp_path, {"name": "x"})
    assert cli.main(["run", str(bad), "--quiet"]) == 2
    assert cli.main(["report", str(tmp_path / "nowhere")]) == 2
    assert cli.main(["frobnicate"]) == 2


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cigarflow", "oracle"],
        capture_output=True, text=True,
        cwd=Path(__file__).resolve().parent.parent,
    )
    assert proc.returncode == 0
    assert "[ok]" in proc.stdout


def test_shipped_configs_verify(shipped_reports):
    for name, report in shipped_reports.items():
        assert report.ok, f"{name}: " + "; ".join(
            f"{n}: {d}" for n, passed, d in report.checks if not passed
        )


def test_shipped_configs_initial_potential_residual(config_dir):
    # the discrete Poisson solve round-trips through the operator on every
    # shipped scenario
    for fname in ("soliton_radial_129.json", "scaled_cigar_129.json",
                  "perturbed_relax_129.json", "flat_cartesian_65.json"):
        state = build_scenario(load_config(config_dir / fname))
        assert state.init.res_poisson0 <= 1e-10, fname
