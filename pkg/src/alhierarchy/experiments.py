"""Numerical experiments around the decay and closeness statements for the hierarchy.

Each run evolves one or more solutions with the integrator and condenses the
result into a pydantic report that the CLI writes next to its time-series tables.
"""

from __future__ import annotations

import asyncio
import logging
import math
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import curve_fit

from .errors import InvalidParameterError
from .hierarchy import FlowSpec, constraint_holds
from .integrator import DEFAULT_H, DEFAULT_T1, evolve, evolve_many, step
from .lattice import (
    BoundaryMode,
    LatticeWindow,
    ProfileKind,
    ProfileSpec,
    SequencePair,
    Weight,
    difference_norm,
    make_profile,
    normalize_exponent,
    shift_operator_norm,
    weighted_norm,
)
from .lax_zc import build_L, paired_distance, spectrum
from .logging_utils import log_operation
from .serialization import ComplexValue
from .utils import Reporter, ReporterEvent, emit

logger = logging.getLogger(__name__)

ENVELOPE_SLACK = 1.1
STABILITY_THRESHOLD = 1.2
DEFAULT_ASYMPTOTICS_WINDOWS = (201, 401)
DEFAULT_EDGE_EXCLUSION = 20
SPREAD_FACTOR = 1e-2


class Report(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="strings")


class GronwallFit(Report):
    C: float
    D: float
    envelope_ok: bool


class ClosenessReport(Report):
    times: list[float]
    delta_norm: list[float]
    p: float
    fitted_C: float
    fitted_D: float
    envelope_ok: bool
    shift_bound: float


class AsymptoticsReport(Report):
    a: ComplexValue
    b: ComplexValue
    delta: float
    p: float
    weight_exponent: float
    times: list[float]
    residual_norm_t: list[float]
    window_sizes: list[int]
    final_residuals: list[float]
    stability_ratio: float
    hypothesis_norms: dict[str, float]
    in_hypothesis: bool
    constraint_satisfied: bool


class SupportSpreadReport(Report):
    support: tuple[int, int] | None
    h: float
    threshold: float
    left_site: int | None
    right_site: int | None
    left_magnitude: float
    right_magnitude: float
    spread: bool


class IsospectralReport(Report):
    window_size: int
    times: list[float]
    drift: list[float]
    max_drift: float


def _phi(x: np.ndarray) -> np.ndarray:
    """expm1(x)/x with phi(0) = 1."""

    x = np.asarray(x, dtype=float)
    safe = np.where(np.abs(x) < 1e-12, 1.0, x)
    return np.where(np.abs(x) < 1e-12, 1.0 + x / 2, np.expm1(safe) / safe)


def gronwall_envelope(times: np.ndarray, delta0: float, C: float, D: float) -> np.ndarray:
    """delta0 e^{Ct} + (D/C)(e^{Ct} - 1), continuous at C = 0."""

    t = np.asarray(times, dtype=float)
    return delta0 * np.exp(C * t) + D * t * _phi(C * t)


def _dominated(values: np.ndarray, envelope: np.ndarray) -> bool:
    return bool(np.all(values <= ENVELOPE_SLACK * envelope + 1e-300))


def gronwall_fit(times: Sequence[float], delta_norm: Sequence[float]) -> GronwallFit:
    """Fit the Gronwall envelope to a distance series.

    The fit targets the running maximum of the series, since the envelope is
    nondecreasing. With a positive start, the homogeneous rate C (D = 0) is the
    least-squares slope of log(max/delta0) through the origin; if that envelope
    misses the data by more than the slack, (C, D) are refit on the log scale.
    A series starting at zero fits D and C directly.
    """

    t = np.asarray(times, dtype=float)
    values = np.asarray(delta_norm, dtype=float)
    if t.shape != values.shape or t.size == 0:
        raise InvalidParameterError("times and delta_norm must be nonempty and of equal length")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InvalidParameterError("distance series must be finite and nonnegative")
    if np.all(values == 0):
        return GronwallFit(C=0.0, D=0.0, envelope_ok=True)

    t = t - t[0]
    upper = np.maximum.accumulate(values)
    delta0 = float(values[0])
    later = t > 0

    if delta0 > 0:
        denom = float(np.sum(t[later] ** 2))
        slope = float(np.sum(t[later] * np.log(upper[later] / delta0)) / denom) if denom else 0.0
        C = max(0.0, slope)
        if _dominated(values, gronwall_envelope(t, delta0, C, 0.0)):
            return GronwallFit(C=C, D=0.0, envelope_ok=True)
        p0 = (C, 0.0)
    else:
        positive = later & (upper > 0)
        p0 = (0.0, float(np.max(upper[positive] / t[positive])))

    mask = later & (upper > 0)

    def log_model(tt: np.ndarray, C: float, D: float) -> np.ndarray:
        return np.log(np.maximum(gronwall_envelope(tt, delta0, C, D), 1e-300))

    try:
        (C_fit, D_fit), _ = curve_fit(
            log_model,
            t[mask],
            np.log(upper[mask]),
            p0=p0,
            bounds=([0.0, 0.0], [np.inf, np.inf]),
        )
    except (RuntimeError, ValueError) as exc:
        logger.warning("Gronwall fit did not converge", extra={"error": str(exc)})
        C_fit, D_fit = p0
    C_fit, D_fit = float(C_fit), float(D_fit)
    ok = _dominated(values, gronwall_envelope(t, delta0, C_fit, D_fit))
    return GronwallFit(C=C_fit, D=D_fit, envelope_ok=ok)


async def closeness_run_async(
    pair_a: SequencePair,
    pair_b: SequencePair,
    weight: Weight,
    p: float | str,
    spec: FlowSpec,
    t1: float = DEFAULT_T1,
    *,
    h: float = DEFAULT_H,
    stride: int = 10,
    exclude_edges: int = 0,
    mode: BoundaryMode | None = None,
) -> ClosenessReport:
    """Evolve two solutions concurrently and track their weighted distance."""

    p_value = normalize_exponent(p)
    traj_a, traj_b = await evolve_many(
        [(pair_a, spec), (pair_b, spec)], t0=0.0, t1=t1, h=h, mode=mode, stride=stride
    )
    delta = [
        weighted_norm(a - b, weight, p_value, exclude_edges=exclude_edges)
        for a, b in zip(traj_a.states, traj_b.states)
    ]
    fit = gronwall_fit(traj_a.times, delta)
    logger.info(
        "Closeness run finished",
        extra={"flow": spec.label, "C": fit.C, "D": fit.D, "envelope_ok": fit.envelope_ok},
    )
    return ClosenessReport(
        times=list(traj_a.times),
        delta_norm=delta,
        p=p_value,
        fitted_C=fit.C,
        fitted_D=fit.D,
        envelope_ok=fit.envelope_ok,
        shift_bound=max(
            shift_operator_norm(weight, p_value, 1), shift_operator_norm(weight, p_value, -1)
        ),
    )


def closeness_run(
    pair_a: SequencePair,
    pair_b: SequencePair,
    weight: Weight,
    p: float | str,
    spec: FlowSpec,
    t1: float = DEFAULT_T1,
    **kwargs,
) -> ClosenessReport:
    return asyncio.run(closeness_run_async(pair_a, pair_b, weight, p, spec, t1, **kwargs))


def asymptotics_weight_exponent(delta: float) -> float:
    """min(delta, (delta + 1) / 2)."""

    return min(delta, (delta + 1.0) / 2.0)


def _hypothesis_norms(
    pair: SequencePair, weight: Weight, p: float, exclude_edges: int
) -> dict[str, float]:
    if math.isinf(p):
        state = weighted_norm(pair, weight, p, exclude_edges=exclude_edges)
        diff = difference_norm(pair, weight.squared(), p, exclude_edges=exclude_edges)
    else:
        state = weighted_norm(pair, weight, 2 * p, exclude_edges=exclude_edges)
        diff = difference_norm(pair, weight, p, exclude_edges=exclude_edges)
    return {"state": state, "difference": diff}


def _residual_norm(
    state: SequencePair,
    initial: SequencePair,
    weight: Weight,
    p: float,
    exclude_edges: int,
) -> float:
    conclusion_weight = weight.squared() if math.isinf(p) else weight
    return weighted_norm(state - initial, conclusion_weight, p, exclude_edges=exclude_edges)


async def asymptotics_run_async(
    a: complex,
    b: complex,
    delta: float,
    spec: FlowSpec,
    t1: float = DEFAULT_T1,
    windows: Sequence[int] = DEFAULT_ASYMPTOTICS_WINDOWS,
    *,
    p: float | str = math.inf,
    h: float = DEFAULT_H,
    stride: int = 10,
    exclude_edges: int = DEFAULT_EDGE_EXCLUSION,
    mode: BoundaryMode = BoundaryMode.FROZEN_EDGES,
    reporter: Reporter | None = None,
) -> AsymptoticsReport:
    """Evolve power-tail data a/n^delta, b/n^delta and measure how far it leaves them.

    The residual is ||(alpha(t) - alpha0, beta(t) - beta0)|| in the w^2-weighted
    sup norm for p = inf and the (w, p) norm otherwise, with
    w(n) = (1 + n)^min(delta, (delta + 1)/2) for n > 0 and 1 elsewhere.
    """

    if not windows:
        raise InvalidParameterError("asymptotics needs at least one window size")
    p_value = normalize_exponent(p)
    exponent = asymptotics_weight_exponent(delta)
    satisfied = constraint_holds(spec)
    if not satisfied:
        message = f"{spec.label} violates the summation-constant constraint"
        logger.warning(message, extra={"flow": spec.label})
        emit(reporter, ReporterEvent.WARNING, message=message)

    profile = ProfileSpec(kind=ProfileKind.POWER_TAIL, a=a, b=b, delta=delta)
    band = spec.reach + 1
    initials = [
        make_profile(LatticeWindow.centered(size, mode, edge_band=band), profile)
        for size in windows
    ]
    trajectories = await evolve_many(
        [(pair, spec) for pair in initials], t0=0.0, t1=t1, h=h, stride=stride
    )

    finals: list[float] = []
    series: list[float] = []
    hypotheses: list[dict[str, float]] = []
    for index, (initial, trajectory) in enumerate(zip(initials, trajectories)):
        weight = Weight.one_sided_power(initial.window, exponent)
        hypotheses.append(_hypothesis_norms(initial, weight, p_value, exclude_edges))
        values = [
            _residual_norm(state, initial, weight, p_value, exclude_edges)
            for state in trajectory.states
        ]
        if index == 0:
            series = values
        finals.append(values[-1])

    first, last = finals[0], finals[-1]
    stability = 1.0 if first == 0 and last == 0 else (last / first if first else math.inf)
    in_hypothesis = all(math.isfinite(v) for norms in hypotheses for v in norms.values())
    if len(hypotheses) > 1:
        for key in hypotheses[0]:
            base, wide = hypotheses[0][key], hypotheses[-1][key]
            if base > 0 and wide / base > STABILITY_THRESHOLD:
                in_hypothesis = False

    return AsymptoticsReport(
        a=complex(a),
        b=complex(b),
        delta=delta,
        p=p_value,
        weight_exponent=exponent,
        times=list(trajectories[0].times),
        residual_norm_t=series,
        window_sizes=list(windows),
        final_residuals=finals,
        stability_ratio=stability,
        hypothesis_norms=hypotheses[0],
        in_hypothesis=in_hypothesis,
        constraint_satisfied=satisfied,
    )


def asymptotics_run(
    a: complex,
    b: complex,
    delta: float,
    spec: FlowSpec,
    t1: float = DEFAULT_T1,
    windows: Sequence[int] = DEFAULT_ASYMPTOTICS_WINDOWS,
    **kwargs,
) -> AsymptoticsReport:
    return asyncio.run(asymptotics_run_async(a, b, delta, spec, t1, windows, **kwargs))


def support_spread_run(
    pair: SequencePair, spec: FlowSpec, h: float = DEFAULT_H
) -> SupportSpreadReport:
    """One step from compactly supported data; magnitudes just outside the support."""

    magnitude = np.abs(pair.alpha) + np.abs(pair.beta)
    occupied = pair.window.sites[magnitude > 0]
    threshold = SPREAD_FACTOR * h * pair.sup_bound
    if occupied.size == 0:
        return SupportSpreadReport(
            support=None,
            h=h,
            threshold=threshold,
            left_site=None,
            right_site=None,
            left_magnitude=0.0,
            right_magnitude=0.0,
            spread=False,
        )
    lo, hi = int(occupied.min()), int(occupied.max())
    if lo <= pair.window.n_min or hi >= pair.window.n_max:
        raise InvalidParameterError(
            "support must lie strictly inside the window",
            details={"support": [lo, hi], "window": [pair.window.n_min, pair.window.n_max]},
        )
    after = step(pair, spec, h)
    moved = np.abs(after.alpha) + np.abs(after.beta)
    left = float(moved[pair.window.index(lo - 1)])
    right = float(moved[pair.window.index(hi + 1)])
    return SupportSpreadReport(
        support=(lo, hi),
        h=h,
        threshold=threshold,
        left_site=lo - 1,
        right_site=hi + 1,
        left_magnitude=left,
        right_magnitude=right,
        spread=left > threshold and right > threshold,
    )


def isospectral_drift(
    pair: SequencePair,
    spec: FlowSpec,
    t1: float = DEFAULT_T1,
    h: float = DEFAULT_H,
    *,
    stride: int = 100,
) -> IsospectralReport:
    """Optimally paired eigenvalue distance between L(t) and L(0) along a trajectory.

    Runs on the periodic version of the window.
    """

    periodic = pair.with_window(pair.window.with_mode(BoundaryMode.PERIODIC))
    with log_operation(
        logger=logger,
        start_message="Isospectral drift run started",
        success_message="Isospectral drift run finished",
        failure_message="Isospectral drift run failed",
        base_extra={"flow": spec.label, "size": pair.window.size, "t1": t1},
        summarize=lambda report: {"max_drift": report.max_drift},
    ) as context:
        trajectory = evolve(periodic, spec, 0.0, t1, h, stride=stride)
        reference = spectrum(build_L(trajectory.initial))
        drift = [paired_distance(reference, spectrum(build_L(s))) for s in trajectory.states]
        report = IsospectralReport(
            window_size=pair.window.size,
            times=list(trajectory.times),
            drift=drift,
            max_drift=max(drift),
        )
        context.record_result(report)
    return report


__all__ = [
    "AsymptoticsReport",
    "ClosenessReport",
    "GronwallFit",
    "IsospectralReport",
    "SupportSpreadReport",
    "asymptotics_run",
    "asymptotics_run_async",
    "asymptotics_weight_exponent",
    "closeness_run",
    "closeness_run_async",
    "gronwall_envelope",
    "gronwall_fit",
    "isospectral_drift",
    "support_spread_run",
]
