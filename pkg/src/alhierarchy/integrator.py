"""Fixed-step classical Runge-Kutta evolution of sequence pairs under any hierarchy member."""

from __future__ import annotations

import asyncio
import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from pydantic import BaseModel

from .errors import BlowupError, InvalidParameterError
from .flows import FlowDerivative, al_system_rhs
from .hierarchy import FlowSpec, al_r_rhs
from .lattice import BoundaryMode, SequencePair
from .logging_utils import log_operation
from .utils import Reporter, ReporterEvent, emit, run

logger = logging.getLogger(__name__)

DEFAULT_H = 1e-3
DEFAULT_T1 = 1.0
BLOWUP_THRESHOLD = 1e6
_GRID_RTOL = 1e-9

RightHandSide = Callable[[SequencePair], FlowDerivative]
Observer = Callable[[float, SequencePair], Any]


def resolve_rhs(spec: FlowSpec, mode: BoundaryMode | None = None) -> RightHandSide:
    """The hand-coded AL system for its preset, the hierarchy engine otherwise."""

    if spec.name == "al_system":
        return partial(al_system_rhs, mode=mode)
    return partial(al_r_rhs, spec=spec, mode=mode)


def _advance(state: SequencePair, scale: float, slope: FlowDerivative) -> SequencePair:
    return state.replace(
        alpha=state.alpha + scale * slope.dalpha,
        beta=state.beta + scale * slope.dbeta,
    )


def _restricted(slope: FlowDerivative) -> FlowDerivative:
    """Zero the slope outside the sites whose stencil stays inside the window."""

    part = slope.interior_slice
    if part == slice(0, slope.window.size):
        return slope
    dalpha = np.zeros_like(slope.dalpha)
    dbeta = np.zeros_like(slope.dbeta)
    dalpha[part], dbeta[part] = slope.dalpha[part], slope.dbeta[part]
    return FlowDerivative(slope.window, dalpha, dbeta, slope.valid_interior)


def step(
    pair: SequencePair,
    spec: FlowSpec,
    h: float,
    mode: BoundaryMode | None = None,
    *,
    rhs: RightHandSide | None = None,
    t: float = 0.0,
) -> SequencePair:
    """One classical fourth-order Runge-Kutta step of size ``h``.

    In pad_zero mode only the valid interior of each stage is updated; in
    frozen_edges mode the edge band of the window keeps its pre-step values.
    """

    if not h > 0:
        raise InvalidParameterError(f"time step must be positive, got {h}")
    effective = pair.window.boundary_mode if mode is None else BoundaryMode(mode)
    stage = rhs or resolve_rhs(spec, mode)
    restrict = effective is BoundaryMode.PAD_ZERO

    def evaluate(state: SequencePair) -> FlowDerivative:
        slope = stage(state)
        return _restricted(slope) if restrict else slope

    k1 = evaluate(pair)
    k2 = evaluate(_advance(pair, h / 2, k1))
    k3 = evaluate(_advance(pair, h / 2, k2))
    k4 = evaluate(_advance(pair, h, k3))
    alpha = pair.alpha + h / 6 * (k1.dalpha + 2 * k2.dalpha + 2 * k3.dalpha + k4.dalpha)
    beta = pair.beta + h / 6 * (k1.dbeta + 2 * k2.dbeta + 2 * k3.dbeta + k4.dbeta)

    if effective is BoundaryMode.FROZEN_EDGES:
        band = pair.window.edge_band
        alpha[:band], alpha[-band:] = pair.alpha[:band], pair.alpha[-band:]
        beta[:band], beta[-band:] = pair.beta[:band], pair.beta[-band:]

    if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
        raise BlowupError(
            f"nonfinite state at t = {t + h:.6g}", time=t + h, last_state=pair
        )
    return pair.replace(alpha=alpha, beta=beta)


@dataclass
class Trajectory:
    """Sampled integral curve; ``sup_norms`` has one entry per step including t0."""

    spec: FlowSpec
    h: float
    times: list[float] = field(default_factory=list)
    states: list[SequencePair] = field(default_factory=list)
    observables: dict[str, list[Any]] = field(default_factory=dict)
    step_times: list[float] = field(default_factory=list)
    sup_norms: list[float] = field(default_factory=list)

    @property
    def initial(self) -> SequencePair:
        return self.states[0]

    @property
    def final(self) -> SequencePair:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return self.times[-1]

    def _record(
        self, t: float, state: SequencePair, observers: Mapping[str, Observer]
    ) -> None:
        self.times.append(t)
        self.states.append(state)
        for name, observer in observers.items():
            self.observables.setdefault(name, []).append(observer(t, state))


def step_count(t0: float, t1: float, h: float) -> int:
    """Number of steps of size h covering [t0, t1]; h must divide the interval."""

    if not t1 > t0:
        raise InvalidParameterError(f"need t1 > t0, got t0={t0}, t1={t1}")
    if not h > 0:
        raise InvalidParameterError(f"time step must be positive, got {h}")
    span = t1 - t0
    steps = int(round(span / h))
    if steps < 1 or abs(steps * h - span) > _GRID_RTOL * max(1.0, abs(span)):
        raise InvalidParameterError(
            f"h = {h} does not divide the interval [{t0}, {t1}]",
            details={"h": h, "t0": t0, "t1": t1},
        )
    return steps


def evolve(
    pair: SequencePair,
    spec: FlowSpec,
    t0: float = 0.0,
    t1: float = DEFAULT_T1,
    h: float = DEFAULT_H,
    observers: Mapping[str, Observer] | None = None,
    mode: BoundaryMode | None = None,
    *,
    stride: int = 1,
    rhs: RightHandSide | None = None,
    reporter: Reporter | None = None,
) -> Trajectory:
    """Integrate from t0 to t1, sampling states and observers every ``stride`` steps.

    The final time is always sampled. A sup norm above ``BLOWUP_THRESHOLD`` or a
    nonfinite value aborts with ``BlowupError`` carrying the last finite state.
    """

    if stride < 1:
        raise InvalidParameterError(f"observer stride must be >= 1, got {stride}")
    steps = step_count(t0, t1, h)
    if mode is not None:
        pair = pair.with_window(pair.window.with_mode(mode))
    rhs = rhs or resolve_rhs(spec)
    observers = dict(observers or {})
    trajectory = Trajectory(spec=spec, h=h)
    progress_every = max(steps // 10, 1)

    with log_operation(
        logger=logger,
        start_message="Evolution started",
        success_message="Evolution finished",
        failure_message="Evolution aborted",
        base_extra={"flow": spec.label, "h": h, "t0": t0, "t1": t1, "steps": steps},
        summarize=lambda traj: {"final_sup_norm": traj.sup_norms[-1]},
    ) as context:
        state = pair
        trajectory._record(t0, state, observers)
        trajectory.step_times.append(t0)
        trajectory.sup_norms.append(state.sup_bound)
        for k in range(1, steps + 1):
            t_prev = t0 + (k - 1) * h
            t = t0 + k * h
            new_state = step(state, spec, h, rhs=rhs, t=t_prev)
            sup = new_state.sup_bound
            if not math.isfinite(sup) or sup > BLOWUP_THRESHOLD:
                raise BlowupError(
                    f"sup norm {sup:.3g} exceeded {BLOWUP_THRESHOLD:g} at t = {t:.6g}",
                    time=t,
                    last_state=state,
                    details={"sup_norm": sup},
                )
            state = new_state
            trajectory.step_times.append(t)
            trajectory.sup_norms.append(sup)
            if k % stride == 0 or k == steps:
                trajectory._record(t, state, observers)
            if k % progress_every == 0:
                emit(reporter, ReporterEvent.PROGRESS, time=t, sup_norm=sup)
        context.record_result(trajectory)
    return trajectory


async def evolve_many(
    tasks: Sequence[tuple[SequencePair, FlowSpec]], **kwargs: Any
) -> list[Trajectory]:
    """Evolve independent initial data concurrently; results keep the order of ``tasks``."""

    return list(
        await asyncio.gather(*(run(evolve, pair, spec, **kwargs) for pair, spec in tasks))
    )


def state_distance(first: SequencePair, second: SequencePair) -> float:
    """sup_n max(|alpha_1 - alpha_2|, |beta_1 - beta_2|)."""

    diff = first - second
    return float(max(np.max(np.abs(diff.alpha)), np.max(np.abs(diff.beta))))


class ConvergenceRow(BaseModel):
    h: float
    error: float
    observed_order: float | None = None


class ConvergenceReport(BaseModel):
    reference: str
    rows: list[ConvergenceRow]
    observed_order: float | None = None


ExactSolution = Callable[[float], SequencePair]


def convergence_report(
    pair: SequencePair,
    spec: FlowSpec,
    t1: float,
    h_list: Sequence[float],
    *,
    exact: ExactSolution | None = None,
    t0: float = 0.0,
    mode: BoundaryMode | None = None,
) -> ConvergenceReport:
    """Errors of the final state against the finest run (or ``exact``) with observed orders.

    Row i carries log(e_i / e_{i+1}) / log(h_i / h_{i+1}); the overall order is the
    median of the row orders.
    """

    h_values = [float(h) for h in h_list]
    if any(b >= a for a, b in zip(h_values, h_values[1:])):
        raise InvalidParameterError("h_list must be strictly decreasing", details={"h": h_values})
    reference_name = "exact" if exact is not None else "finest"
    if len(h_values) < 2 and exact is None:
        return ConvergenceReport(reference=reference_name, rows=[])

    finals = [evolve(pair, spec, t0, t1, h, mode=mode).final for h in h_values]
    if exact is not None:
        reference = exact(t1)
        measured = list(zip(h_values, finals))
    else:
        reference = finals[-1]
        measured = list(zip(h_values[:-1], finals[:-1]))

    errors = [state_distance(state, reference) for _, state in measured]
    rows: list[ConvergenceRow] = []
    for i, (h, _) in enumerate(measured):
        order = None
        if i + 1 < len(measured) and errors[i] > 0 and errors[i + 1] > 0:
            h_next = measured[i + 1][0]
            order = math.log(errors[i] / errors[i + 1]) / math.log(h / h_next)
        rows.append(ConvergenceRow(h=h, error=errors[i], observed_order=order))
    orders = [row.observed_order for row in rows if row.observed_order is not None]
    overall = float(np.median(orders)) if orders else None
    logger.info(
        "Convergence study finished",
        extra={"reference": reference_name, "observed_order": overall, "runs": len(h_values)},
    )
    return ConvergenceReport(reference=reference_name, rows=rows, observed_order=overall)


__all__ = [
    "BLOWUP_THRESHOLD",
    "DEFAULT_H",
    "DEFAULT_T1",
    "ConvergenceReport",
    "ConvergenceRow",
    "Trajectory",
    "convergence_report",
    "evolve",
    "evolve_many",
    "resolve_rhs",
    "state_distance",
    "step",
    "step_count",
]
