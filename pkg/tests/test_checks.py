from __future__ import annotations

from typing import Any

import numpy as np
import pytest

from alhierarchy.checks import (
    Check,
    SuiteSettings,
    close_check,
    run_checks,
    run_suite,
    wrap_check,
)
from alhierarchy.utils import ReporterEvent


def test_wrap_check_turns_exceptions_into_failures() -> None:
    def failing_assertion() -> None:
        raise AssertionError("residual too large")

    def crashing() -> None:
        raise ZeroDivisionError("boom")

    assert wrap_check(lambda: None)() == (True, "ok")
    assert wrap_check(lambda: (False, "drift=1"))() == (False, "drift=1")
    assert wrap_check(failing_assertion)() == (False, "residual too large")
    assert wrap_check(crashing)() == (False, "error=boom")


def test_close_check_scales_with_reference() -> None:
    ok, diff = close_check(np.array([1.0, 2.0]), np.array([1.0, 2.0 + 1e-9]), 0.0, 1e-9)
    too_far, _ = close_check(np.array([1.0]), np.array([1.1]), 1e-3, 1e-3)

    assert ok
    assert diff == pytest.approx(1e-9, rel=1e-6)
    assert not too_far


def test_run_checks_counts_failures_and_reports() -> None:
    events: list[tuple[ReporterEvent, dict[str, Any]]] = []
    checks = [
        Check("passes", wrap_check(lambda: (True, "fine"))),
        Check("fails", wrap_check(lambda: (False, "bad"))),
    ]

    results, failures = run_checks(checks, lambda event, payload: events.append((event, payload)))

    assert failures == 1
    assert [result.status for result in results] == ["PASS", "FAIL"]
    assert [payload["name"] for _, payload in events] == ["passes", "fails"]
    assert all(event is ReporterEvent.CHECK_RESULT for event, _ in events)


def test_default_suite_passes() -> None:
    report = run_suite(SuiteSettings())

    failed = [f"{r.label}: {r.message}" for r in report.results if not r.passed]
    assert failed == []
    assert report.passed
    assert len(report.results) == 14
    assert report.seed == 20240601
