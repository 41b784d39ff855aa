from __future__ import annotations

import json
import math
from typing import Any

import numpy as np
import pytest
from numpy.testing import assert_allclose

from alhierarchy.errors import InvalidParameterError
from alhierarchy.experiments import (
    asymptotics_run,
    asymptotics_weight_exponent,
    closeness_run,
    gronwall_envelope,
    gronwall_fit,
    isospectral_drift,
    support_spread_run,
)
from alhierarchy.hierarchy import FlowSpec
from alhierarchy.lattice import BoundaryMode, LatticeWindow, SequencePair, Weight, make_profile
from alhierarchy.utils import ReporterEvent


def test_envelope_is_continuous_at_zero_rate() -> None:
    t = np.linspace(0.0, 2.0, 5)

    assert_allclose(gronwall_envelope(t, 0.1, 0.0, 0.3), 0.1 + 0.3 * t)
    assert_allclose(gronwall_envelope(t, 0.1, 1e-14, 0.3), 0.1 + 0.3 * t, rtol=1e-10)
    assert_allclose(
        gronwall_envelope(t, 0.1, 0.5, 0.3), 0.1 * np.exp(0.5 * t) + 0.6 * np.expm1(0.5 * t)
    )


def test_fit_recovers_pure_exponential_growth() -> None:
    t = np.linspace(0.0, 1.0, 21)

    fit = gronwall_fit(t, 1e-3 * np.exp(0.5 * t))

    assert fit.C == pytest.approx(0.5, rel=1e-6)
    assert fit.D == 0.0
    assert fit.envelope_ok


def test_fit_of_zero_series() -> None:
    fit = gronwall_fit([0.0, 0.5, 1.0], [0.0, 0.0, 0.0])

    assert (fit.C, fit.D, fit.envelope_ok) == (0.0, 0.0, True)


def test_fit_from_zero_start_uses_the_forcing_term() -> None:
    t = np.linspace(0.0, 1.0, 11)

    fit = gronwall_fit(t, 0.2 * t)

    assert fit.envelope_ok
    assert fit.D == pytest.approx(0.2, rel=1e-2)
    assert fit.C == pytest.approx(0.0, abs=1e-2)


def test_fit_rejects_malformed_series() -> None:
    with pytest.raises(InvalidParameterError):
        gronwall_fit([0.0, 1.0], [1.0])
    with pytest.raises(InvalidParameterError):
        gronwall_fit([0.0, 1.0], [1.0, -1.0])


def _bumped(background: SequencePair, site: int, size: float) -> SequencePair:
    bump = np.zeros(background.window.size, dtype=complex)
    bump[background.window.index(site)] = size
    return background.replace(alpha=background.alpha + bump, beta=background.beta + bump)


def test_closeness_run_tracks_the_distance(padded_window: LatticeWindow) -> None:
    background = make_profile(padded_window, kind="gaussian", amplitude=0.3, width=4.0)
    perturbed = _bumped(background, 0, 1e-3)

    report = closeness_run(
        background,
        perturbed,
        Weight.polynomial(padded_window, 1.0),
        "inf",
        FlowSpec.al_system(),
        0.2,
        h=1e-2,
        stride=2,
    )

    assert len(report.times) == len(report.delta_norm) == 11
    assert report.delta_norm[0] == pytest.approx(2e-3)
    assert report.p == math.inf
    assert report.shift_bound == pytest.approx(2.0)
    assert report.fitted_C >= 0 and report.fitted_D >= 0
    assert json.loads(report.model_dump_json())["p"] == "Infinity"


def test_identical_solutions_stay_identical(padded_window: LatticeWindow) -> None:
    pair = make_profile(padded_window)

    report = closeness_run(
        pair, pair, Weight.uniform(padded_window), 2, FlowSpec.al_system(), 0.1, h=1e-2
    )

    assert report.delta_norm == [0.0, 0.0]
    assert (report.fitted_C, report.fitted_D, report.envelope_ok) == (0.0, 0.0, True)


@pytest.mark.parametrize("delta, expected", [(0.5, 0.5), (1.0, 1.0), (3.0, 2.0)])
def test_asymptotics_weight_exponent(delta: float, expected: float) -> None:
    assert asymptotics_weight_exponent(delta) == expected


def test_asymptotics_report_fields() -> None:
    report = asymptotics_run(
        0.3, 0.3, 1.0, FlowSpec.al_system(), 0.1, (41, 81), h=1e-2, exclude_edges=5
    )

    assert report.window_sizes == [41, 81]
    assert len(report.final_residuals) == 2
    assert len(report.times) == len(report.residual_norm_t)
    assert report.residual_norm_t[0] == 0.0
    assert math.isfinite(report.stability_ratio)
    assert report.constraint_satisfied
    assert report.weight_exponent == 1.0
    assert set(report.hypothesis_norms) == {"state", "difference"}


def test_asymptotics_finite_p_branch() -> None:
    report = asymptotics_run(0.2, 0.1j, 1.5, FlowSpec.al_system(), 0.1, (41,), p=2, h=1e-2)

    assert report.p == 2.0
    assert report.stability_ratio == 1.0
    assert report.b == 0.1j


def test_asymptotics_warns_on_violating_constants() -> None:
    events: list[tuple[ReporterEvent, dict[str, Any]]] = []
    spec = FlowSpec(r_minus=1, r_plus=1, c_plus=(1, 0), c_minus=(1, 0))

    def record(event: ReporterEvent, payload: dict[str, Any]) -> None:
        events.append((event, payload))

    report = asymptotics_run(0.3, 0.3, 1.0, spec, 0.05, (41,), h=1e-2, reporter=record)

    assert not report.constraint_satisfied
    assert [event for event, _ in events] == [ReporterEvent.WARNING]


def test_asymptotics_needs_a_window() -> None:
    with pytest.raises(InvalidParameterError):
        asymptotics_run(0.3, 0.3, 1.0, FlowSpec.al_system(), 0.1, ())


def test_support_spreads_after_one_step() -> None:
    window = LatticeWindow(-10, 10)
    pair = make_profile(window, kind="compact", support=(0, 0), value_alpha=0.5)

    report = support_spread_run(pair, FlowSpec.al_system(), 1e-3)

    assert report.support == (0, 0)
    assert (report.left_site, report.right_site) == (-1, 1)
    assert report.spread
    assert 1e-4 <= report.left_magnitude <= 1e-3
    assert report.right_magnitude == pytest.approx(report.left_magnitude)


def test_support_of_zero_data_is_empty() -> None:
    report = support_spread_run(SequencePair.zeros(LatticeWindow(-10, 10)), FlowSpec.al_system())

    assert report.support is None
    assert not report.spread


def test_support_touching_the_edge_is_rejected() -> None:
    window = LatticeWindow(-10, 10)
    pair = make_profile(window, kind="compact", support=(-10, -9), value_alpha=0.5)

    with pytest.raises(InvalidParameterError):
        support_spread_run(pair, FlowSpec.al_system())


def test_isospectral_drift_is_small() -> None:
    pair = make_profile(LatticeWindow.centered(32), kind="gaussian", amplitude=0.3, width=4.0)

    report = isospectral_drift(pair, FlowSpec.al_system(), 0.1, 1e-2, stride=5)

    assert report.window_size == 32
    assert report.drift[0] == 0.0
    assert len(report.drift) == 3
    assert report.max_drift <= 1e-4


def test_closeness_is_symmetric(padded_window: LatticeWindow) -> None:
    background = make_profile(padded_window, kind="gaussian", amplitude=0.3, width=4.0)
    perturbed = _bumped(background, 3, 1e-3)
    weight = Weight.polynomial(padded_window, 1.0)

    forward = closeness_run(background, perturbed, weight, 2, FlowSpec.al_system(), 0.2, h=1e-2)
    backward = closeness_run(perturbed, background, weight, 2, FlowSpec.al_system(), 0.2, h=1e-2)

    assert_allclose(forward.delta_norm, backward.delta_norm, rtol=1e-14)


def test_steplike_closeness_on_frozen_edges() -> None:
    window = LatticeWindow(-20, 20, BoundaryMode.FROZEN_EDGES, edge_band=2)
    background = make_profile(window, kind="steplike", left_alpha=0.1, right_alpha=0.2)
    perturbed = _bumped(background, 0, 1e-3)

    report = closeness_run(
        background,
        perturbed,
        Weight.polynomial(window, 1.0),
        "inf",
        FlowSpec.al_system(),
        0.5,
        h=1e-2,
        stride=5,
        exclude_edges=2,
    )

    assert report.delta_norm[0] == pytest.approx(2e-3)
    assert all(math.isfinite(value) for value in report.delta_norm)
    assert report.envelope_ok


def test_asymptotics_of_zero_data_is_exact() -> None:
    report = asymptotics_run(
        0, 0, 0.0, FlowSpec.al_system(), 0.1, (41, 81), h=1e-2, exclude_edges=5
    )

    assert report.residual_norm_t == [0.0] * len(report.times)
    assert report.final_residuals == [0.0, 0.0]
    assert report.stability_ratio == 1.0
