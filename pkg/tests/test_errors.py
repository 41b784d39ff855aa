from __future__ import annotations

import json

import numpy as np

from alhierarchy.errors import (
    ALError,
    BlowupError,
    ConfigError,
    ErrorPayload,
    NearSingularTransferError,
    SingularOperatorError,
)
from alhierarchy.lattice import LatticeWindow, SequencePair


def test_validation_and_numerical_exit_codes() -> None:
    assert ConfigError("bad").exit_code == 1
    assert SingularOperatorError("singular").exit_code == 2
    assert NearSingularTransferError("rho").exit_code == 2
    assert issubclass(BlowupError, ALError)


def test_payload_round_trips_through_json() -> None:
    error = ConfigError("invalid configuration", details=[{"field": "h", "message": "> 0"}])

    payload = error.to_payload()
    decoded = json.loads(payload.as_json())

    assert decoded == {
        "type": "error",
        "reason": "invalid_config",
        "message": "invalid configuration",
        "details": [{"field": "h", "message": "> 0"}],
    }
    assert ErrorPayload.model_validate(decoded).as_dict() == payload.as_dict()


def test_payload_omits_missing_details() -> None:
    assert "details" not in SingularOperatorError("singular").to_payload().as_dict()


def test_blowup_payload_reports_time_and_norm() -> None:
    window = LatticeWindow(0, 9)
    state = SequencePair(window, np.full(10, 2.0), np.zeros(10))

    error = BlowupError("too large", time=0.25, last_state=state, details={"sup_norm": 3e6})

    assert error.to_payload().as_dict()["details"] == {
        "time": 0.25,
        "last_sup_norm": 2.0,
        "sup_norm": 3e6,
    }
