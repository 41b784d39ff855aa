from __future__ import annotations

import json
from pathlib import Path

import pytest

from alhierarchy.config import (
    OUTPUT_DIR_ENV_VAR,
    CommandName,
    FlowConfig,
    RunConfig,
    load_config,
    merge_overrides,
    read_config_file,
)
from alhierarchy.errors import ConfigError
from alhierarchy.lattice import BoundaryMode


def _write(tmp_path: Path, payload: object) -> Path:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_defaults_resolve_to_the_al_system() -> None:
    config = load_config()

    assert config.command is CommandName.EVOLVE
    assert config.flow_spec().label == "al_system"
    window = config.lattice_window()
    assert (window.n_min, window.n_max, window.edge_band) == (-100, 100, 2)
    assert window.boundary_mode is BoundaryMode.PAD_ZERO


def test_merge_overrides_skips_none_and_recurses() -> None:
    base = {"numerics": {"h": 0.1, "t1": 2.0}, "log_level": "INFO"}
    overrides = {"numerics": {"h": 0.01, "t1": None}, "window": {"n_min": None}}

    merged = merge_overrides(base, overrides)

    assert merged == {"numerics": {"h": 0.01, "t1": 2.0}, "log_level": "INFO", "window": {}}


def test_flags_override_file(tmp_path: Path) -> None:
    path = _write(tmp_path, {"command": "closeness", "numerics": {"h": 0.01, "t1": 3.0}})

    config = load_config(path, {"numerics": {"t1": 0.5}})

    assert config.command is CommandName.CLOSENESS
    assert config.numerics.h == 0.01
    assert config.numerics.t1 == 0.5


def test_replaced_section_drops_file_fields(tmp_path: Path) -> None:
    path = _write(tmp_path, {"flow": {"r": [0, 0], "c_plus": [1], "c_minus": [1]}})

    config = load_config(path, replace={"flow": {"preset": "schur"}})

    assert config.flow.r is None
    assert config.flow_spec().label == "schur"


def test_explicit_orders_with_complex_constants(tmp_path: Path) -> None:
    path = _write(
        tmp_path,
        {"flow": {"preset": None, "r": [1, 0], "c_plus": ["2j"], "c_minus": [[1, 0], "0.5"]}},
    )

    spec = load_config(path).flow_spec()

    assert spec.r == (1, 0)
    assert spec.c_plus == (2j,)
    assert spec.c_minus == (1, 0.5)


def test_phase_preset_uses_its_constant() -> None:
    spec = FlowConfig(preset="phase", phase_constant="2").to_spec()

    assert spec.c_r == 2


def test_orders_need_both_constant_lists() -> None:
    with pytest.raises(ConfigError) as excinfo:
        load_config(overrides={"flow": {"r": [1, 1], "c_plus": [1, -2]}})

    assert excinfo.value.exit_code == 1


def test_constants_without_orders_are_rejected() -> None:
    with pytest.raises(ConfigError) as excinfo:
        load_config(overrides={"flow": {"c_plus": [1]}})

    assert "explicit orders" in excinfo.value.message


def test_constant_count_mismatch_is_a_config_error() -> None:
    flow = FlowConfig(r=(1, 1), c_plus=[1], c_minus=[1, 0])

    with pytest.raises(ConfigError):
        flow.to_spec()


def test_unknown_field_reports_its_path() -> None:
    with pytest.raises(ConfigError) as excinfo:
        load_config(overrides={"window": {"n_mn": 3}})

    fields = [problem["field"] for problem in excinfo.value.details]
    assert "window.n_mn" in fields


def test_unknown_preset_is_rejected() -> None:
    with pytest.raises(ConfigError, match="unknown preset"):
        load_config(overrides={"flow": {"preset": "kdv"}})


def test_norm_exponent_below_one_is_rejected() -> None:
    with pytest.raises(ConfigError):
        load_config(overrides={"experiment": {"p": 0.5}})


def test_malformed_json_reports_line_and_column(tmp_path: Path) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{\n  "command": "evolve",\n  "numerics": {h: 1}\n}\n', encoding="utf-8")

    with pytest.raises(ConfigError) as excinfo:
        read_config_file(path)

    assert excinfo.value.details["line"] == 3


def test_missing_file_and_non_object_documents(tmp_path: Path) -> None:
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "absent.json")
    with pytest.raises(ConfigError):
        read_config_file(_write(tmp_path, [1, 2, 3]))


def test_output_dir_comes_from_the_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv(OUTPUT_DIR_ENV_VAR, "/tmp/al-runs")

    assert RunConfig().output.path == Path("/tmp/al-runs")
