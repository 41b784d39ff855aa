from __future__ import annotations

import asyncio
import json
import math
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from alhierarchy import __version__
from alhierarchy.cli import main


def _run(*argv: str) -> int:
    return asyncio.run(main([*argv, "--quiet"]))


def _load_csv(path: Path) -> dict[str, np.ndarray]:
    header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def test_evolve_phase_flow_matches_closed_form(tmp_path: Path) -> None:
    out = tmp_path / "phase"
    code = _run(
        "evolve", "--r", "0", "0", "--c-plus", "2", "--c-minus", "2",
        "--window", "-20", "20", "--out", str(out),
    )

    assert code == 0
    table = _load_csv(out / "final_state.csv")
    alpha = table["alpha_re"] + 1j * table["alpha_im"]
    alpha0 = table["alpha0_re"] + 1j * table["alpha0_im"]
    assert_allclose(alpha, alpha0 * np.exp(2j), rtol=1e-10)
    assert table["n"].tolist() == list(range(-20, 21))

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["version"] == __version__
    assert manifest["exit_code"] == 0
    assert manifest["flow"]["label"] == "AL_(0,0)"
    assert manifest["config"]["numerics"]["h"] == 0.001
    assert manifest["config"]["experiment"]["p"] == "Infinity"
    assert manifest["lattice"] == {
        "n_min": -20, "n_max": 20, "boundary": "pad_zero", "edge_band": 1,
    }
    assert "final_state.csv" in manifest["artifacts"]
    assert manifest["wall_time_s"] >= 0


def test_identical_runs_write_identical_tables(tmp_path: Path) -> None:
    for name in ("a", "b"):
        code = _run(
            "evolve", "--window", "-16", "15", "--t1", "0.1", "--out", str(tmp_path / name)
        )
        assert code == 0

    for table in ("timeseries.csv", "final_state.csv"):
        assert (tmp_path / "a" / table).read_bytes() == (tmp_path / "b" / table).read_bytes()

    header = (tmp_path / "a" / "timeseries.csv").read_text().splitlines()[0]
    assert header == "time,sup_norm,l2_norm"


def test_config_file_with_flag_overrides(tmp_path: Path) -> None:
    config = tmp_path / "run.json"
    config.write_text(
        json.dumps({"window": {"n_min": -30, "n_max": 30}, "numerics": {"t1": 5.0}}),
        encoding="utf-8",
    )
    out = tmp_path / "out"

    code = _run("evolve", "--config", str(config), "--t1", "0.05", "--h", "0.01", "--out", str(out))

    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["numerics"]["t1"] == 0.05
    assert manifest["config"]["window"]["n_min"] == -30
    assert _load_csv(out / "timeseries.csv")["time"][-1] == pytest.approx(0.05)


def test_hierarchy_command_in_json_format(tmp_path: Path) -> None:
    out = tmp_path / "hier"

    code = _run("hierarchy", "--flow", "al_2_2", "--window", "-20", "20", "--format", "json",
                "--out", str(out))

    assert code == 0
    report = json.loads((out / "hierarchy.json").read_text(encoding="utf-8"))
    assert report["recursion_residual_plus"] <= 1e-13
    assert report["closed_form_difference"] <= 1e-12
    rhs = json.loads((out / "rhs.json").read_text(encoding="utf-8"))
    assert rhs["columns"] == ["n", "dalpha_re", "dalpha_im", "dbeta_re", "dbeta_im"]
    assert len(rhs["rows"]) == 41


def test_asymptotics_report_has_stability_ratio(tmp_path: Path) -> None:
    config = tmp_path / "asym.json"
    config.write_text(
        json.dumps(
            {
                "profile": {"kind": "power_tail", "a": 0.3, "b": 0.3, "delta": 1.0},
                "experiment": {"asymptotics_windows": [41, 81], "exclude_edges": 5},
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "asym"

    code = _run("asymptotics", "--config", str(config), "--t1", "0.1", "--h", "0.01",
                "--out", str(out))

    assert code == 0
    report = json.loads((out / "asymptotics.json").read_text(encoding="utf-8"))
    assert "stability_ratio" in report
    assert report["a"] == [0.3, 0.0]
    assert (out / "timeseries.csv").exists()


def test_support_and_closeness_commands(tmp_path: Path) -> None:
    support = tmp_path / "support"
    code = _run("support", "--profile", "compact", "--window", "-10", "10", "--out", str(support))
    assert code == 0
    assert json.loads((support / "support.json").read_text(encoding="utf-8"))["spread"] is True

    closeness = tmp_path / "closeness"
    code = _run("closeness", "--window", "-20", "20", "--t1", "0.1", "--h", "0.01",
                "--out", str(closeness))
    assert code == 0
    report = json.loads((closeness / "closeness.json").read_text(encoding="utf-8"))
    assert report["delta_norm"][0] == pytest.approx(2e-3)
    assert report["shift_bound"] >= 1.0


def test_steplike_closeness_holds_the_edge_band(tmp_path: Path) -> None:
    out = tmp_path / "steplike"

    code = _run("closeness", "--profile", "steplike", "--window", "-20", "20", "--t1", "0.1",
                "--h", "0.01", "--out", str(out))

    assert code == 0
    report = json.loads((out / "closeness.json").read_text(encoding="utf-8"))
    assert report["delta_norm"][0] == pytest.approx(2e-3)
    assert all(math.isfinite(value) for value in report["delta_norm"])


def test_spectrum_command_widens_odd_windows(tmp_path: Path) -> None:
    out = tmp_path / "spectrum"

    code = _run("spectrum", "--window", "-16", "16", "--t1", "0.1", "--h", "0.01",
                "--out", str(out))

    assert code == 0
    report = json.loads((out / "spectrum.json").read_text(encoding="utf-8"))
    assert report["window_size"] == 34
    assert _load_csv(out / "spectrum.csv")["index"].size == 34


def test_numerical_abort_writes_error_payload(tmp_path: Path) -> None:
    config = tmp_path / "singular.json"
    config.write_text(
        json.dumps(
            {
                "profile": {
                    "kind": "compact",
                    "support": [0, 0],
                    "value_alpha": 1.0,
                    "value_beta": 0.9999999999,
                }
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "abort"

    code = _run("spectrum", "--config", str(config), "--window", "-8", "7", "--out", str(out))

    assert code == 2
    error = json.loads((out / "error.json").read_text(encoding="utf-8"))
    assert error["type"] == "error"
    assert error["reason"] == "near_singular_transfer"
    assert json.loads((out / "manifest.json").read_text(encoding="utf-8"))["exit_code"] == 2


def test_invalid_step_is_a_validation_error(tmp_path: Path) -> None:
    out = tmp_path / "bad-step"

    assert _run("evolve", "--h", "0.3", "--out", str(out)) == 1
    assert json.loads((out / "error.json").read_text(encoding="utf-8"))["reason"] == (
        "invalid_parameter"
    )


def test_config_errors_exit_with_one(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    assert _run("evolve", "--r", "1", "1", "--c-plus", "1", "0", "--out", str(tmp_path)) == 1
    assert "c_minus" in capsys.readouterr().err
    assert _run("integrate", "--out", str(tmp_path)) == 1
    assert _run("evolve", "--flow", "al_system", "--r", "1", "1") == 1


def test_constants_without_orders_exit_with_one(
    capsys: pytest.CaptureFixture[str], tmp_path: Path
) -> None:
    assert _run("evolve", "--c-plus", "1", "--out", str(tmp_path / "constants")) == 1
    assert "explicit orders" in capsys.readouterr().err


def test_check_command_passes_with_defaults(tmp_path: Path) -> None:
    out = tmp_path / "check"

    assert _run("check", "--out", str(out)) == 0
    rows = (out / "checks.csv").read_text(encoding="utf-8").splitlines()
    assert rows[0] == "label,status,message"
    assert len(rows) == 15
    assert all(",PASS," in row for row in rows[1:])
