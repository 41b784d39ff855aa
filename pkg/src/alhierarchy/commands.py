"""Command registry behind the ``al`` CLI: one async handler per experiment."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Awaitable, Protocol

import numpy as np
from pydantic import BaseModel

from .checks import SuiteSettings, run_suite
from .config import CommandName, RunConfig
from .errors import InvalidParameterError
from .experiments import (
    asymptotics_run_async,
    closeness_run_async,
    isospectral_drift,
    support_spread_run,
)
from .flows import al_explicit_rhs
from .hierarchy import (
    LadderSign,
    al_r_rhs,
    check_constraint,
    coefficients_for,
    homogeneous_coeffs,
    recursion_residual,
)
from .integrator import evolve
from .lattice import (
    BoundaryMode,
    LatticeWindow,
    ProfileKind,
    SequencePair,
    Weight,
    make_profile,
    weighted_norm,
)
from .lax_zc import build_L, spectrum
from .serialization import Table
from .utils import Reporter, ReporterEvent, emit, run

_CLOSED_FORMS = {(0, 0), (1, 1), (2, 2)}


@dataclass
class CommandOutcome:
    """Artifacts of one command; the CLI decides file names and formats."""

    tables: list[Table] = field(default_factory=list)
    reports: dict[str, BaseModel] = field(default_factory=dict)
    records: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    exit_code: int = 0


class CommandHandler(Protocol):
    def __call__(
        self, config: RunConfig, reporter: Reporter | None
    ) -> Awaitable[CommandOutcome]: ...


@dataclass(frozen=True)
class Command:
    """Bind a command name to its handler and help text."""

    name: CommandName
    description: str
    handler: CommandHandler


def _initial_pair(config: RunConfig) -> SequencePair:
    return make_profile(config.lattice_window(), config.profile)


class HierarchyReport(BaseModel):
    flow: str
    r: tuple[int, int]
    valid_interior: tuple[int, int]
    recursion_residual_plus: float
    recursion_residual_minus: float
    closed_form_difference: float | None
    constraint_satisfied: bool
    constraint_with_c_r_satisfied: bool


async def evolve_command(config: RunConfig, reporter: Reporter | None) -> CommandOutcome:
    spec = config.flow_spec()
    pair = _initial_pair(config)
    uniform = Weight.uniform(pair.window)
    observers = {
        "sup_norm": lambda t, state: state.sup_bound,
        "l2_norm": lambda t, state: weighted_norm(state, uniform, 2.0),
    }
    numerics = config.numerics
    trajectory = await run(
        evolve,
        pair,
        spec,
        numerics.t0,
        numerics.t1,
        numerics.h,
        observers,
        stride=numerics.stride,
        reporter=reporter,
    )
    timeseries = Table.from_columns(
        "timeseries",
        {
            "time": trajectory.times,
            "sup_norm": trajectory.observables["sup_norm"],
            "l2_norm": trajectory.observables["l2_norm"],
        },
    )
    final_state = Table.from_columns(
        "final_state",
        {
            "n": pair.window.sites,
            "alpha": trajectory.final.alpha,
            "beta": trajectory.final.beta,
            "alpha0": pair.alpha,
            "beta0": pair.beta,
        },
    )
    return CommandOutcome(tables=[timeseries, final_state])


def _hierarchy_tables(
    pair: SequencePair, config: RunConfig
) -> tuple[list[Table], HierarchyReport]:
    spec = config.flow_spec()
    coeffs = coefficients_for(pair, spec)
    deriv = al_r_rhs(pair, spec)
    plus_residual = recursion_residual(homogeneous_coeffs(pair, spec.r_plus, LadderSign.PLUS))
    minus_residual = recursion_residual(homogeneous_coeffs(pair, spec.r_minus, LadderSign.MINUS))

    closed_form: float | None = None
    if spec.r in _CLOSED_FORMS:
        closed_form = deriv.max_abs_difference(al_explicit_rhs(pair, spec))

    plus, minus = coeffs.plus, coeffs.minus
    tables = [
        Table.from_columns(
            "rhs", {"n": pair.window.sites, "dalpha": deriv.dalpha, "dbeta": deriv.dbeta}
        ),
        Table.from_columns(
            "coefficients",
            {
                "n": pair.window.sites,
                "f_plus": plus.f_at(spec.r_plus),
                "g_plus": plus.g_at(spec.r_plus),
                "h_plus": plus.h_at(spec.r_plus),
                "f_minus": minus.f_at(spec.r_minus),
                "g_minus": minus.g_at(spec.r_minus),
                "h_minus": minus.h_at(spec.r_minus),
            },
        ),
    ]
    report = HierarchyReport(
        flow=spec.label,
        r=spec.r,
        valid_interior=deriv.valid_interior,
        recursion_residual_plus=plus_residual,
        recursion_residual_minus=minus_residual,
        closed_form_difference=closed_form,
        constraint_satisfied=check_constraint(spec).satisfied,
        constraint_with_c_r_satisfied=check_constraint(spec, include_c_r=True).satisfied,
    )
    return tables, report


async def hierarchy_command(config: RunConfig, reporter: Reporter | None) -> CommandOutcome:
    pair = _initial_pair(config)
    tables, report = await run(_hierarchy_tables, pair, config)
    residuals = {"plus": report.recursion_residual_plus, "minus": report.recursion_residual_minus}
    emit(reporter, ReporterEvent.OBSERVATION, name="recursion residual", value=residuals)
    return CommandOutcome(tables=tables, reports={"hierarchy": report})


async def check_command(config: RunConfig, reporter: Reporter | None) -> CommandOutcome:
    settings = SuiteSettings(
        seed=config.numerics.seed,
        size=config.experiment.check_size,
        samples=config.experiment.check_samples,
    )
    report = await run(run_suite, settings, reporter)
    records = [result.model_dump() for result in report.results]
    return CommandOutcome(
        reports={"checks": report},
        records={"checks": records},
        exit_code=0 if report.passed else 3,
    )


async def closeness_command(config: RunConfig, reporter: Reporter | None) -> CommandOutcome:
    spec = config.flow_spec()
    experiment = config.experiment
    window = config.lattice_window()
    exclude = 0
    if config.profile.kind is ProfileKind.STEPLIKE:
        # distinct far-field limits: hold the edge band and leave it out of the norm
        window = window.with_mode(BoundaryMode.FROZEN_EDGES)
        exclude = window.edge_band
    background = make_profile(window, config.profile)
    site = experiment.perturbation_site
    if not window.n_min <= site <= window.n_max:
        raise InvalidParameterError(
            f"perturbation site {site} lies outside the window",
            details={"site": site, "window": [window.n_min, window.n_max]},
        )
    bump = np.zeros(window.size, dtype=np.complex128)
    bump[window.index(site)] = experiment.perturbation
    perturbed = background.replace(alpha=background.alpha + bump, beta=background.beta + bump)
    report = await closeness_run_async(
        background,
        perturbed,
        Weight.polynomial(window, experiment.weight_exponent),
        experiment.p,
        spec,
        config.numerics.t1,
        h=config.numerics.h,
        stride=config.numerics.stride,
        exclude_edges=exclude,
        mode=window.boundary_mode,
    )
    if not report.envelope_ok:
        emit(reporter, ReporterEvent.WARNING, message="distance leaves the fitted envelope")
    table = Table.from_columns(
        "timeseries", {"time": report.times, "delta_norm": report.delta_norm}
    )
    return CommandOutcome(tables=[table], reports={"closeness": report})


async def asymptotics_command(config: RunConfig, reporter: Reporter | None) -> CommandOutcome:
    profile = config.profile
    report = await asymptotics_run_async(
        profile.a,
        profile.b,
        profile.delta,
        config.flow_spec(),
        config.numerics.t1,
        config.experiment.asymptotics_windows,
        p=config.experiment.p,
        h=config.numerics.h,
        stride=config.numerics.stride,
        exclude_edges=config.experiment.exclude_edges,
        reporter=reporter,
    )
    table = Table.from_columns(
        "timeseries", {"time": report.times, "residual_norm": report.residual_norm_t}
    )
    return CommandOutcome(tables=[table], reports={"asymptotics": report})


def _periodic_window(config: RunConfig) -> LatticeWindow:
    """Periodic copy of the configured window, widened by one site when its size is odd."""

    window = config.lattice_window()
    n_max = window.n_max + window.size % 2
    return LatticeWindow(window.n_min, n_max, BoundaryMode.PERIODIC, window.edge_band)


def _spectrum_tables(config: RunConfig) -> tuple[list[Table], BaseModel]:
    window = _periodic_window(config)
    pair = make_profile(window, config.profile)
    eigenvalues = spectrum(build_L(pair))
    report = isospectral_drift(
        pair,
        config.flow_spec(),
        config.numerics.t1,
        config.numerics.h,
        stride=config.numerics.stride,
    )
    tables = [
        Table.from_columns("drift", {"time": report.times, "drift": report.drift}),
        Table.from_columns(
            "spectrum", {"index": np.arange(eigenvalues.size), "eigenvalue": eigenvalues}
        ),
    ]
    return tables, report


async def spectrum_command(config: RunConfig, reporter: Reporter | None) -> CommandOutcome:
    tables, report = await run(_spectrum_tables, config)
    return CommandOutcome(tables=tables, reports={"spectrum": report})


async def support_command(config: RunConfig, reporter: Reporter | None) -> CommandOutcome:
    report = await run(
        support_spread_run, _initial_pair(config), config.flow_spec(), config.numerics.h
    )
    if not report.spread:
        emit(reporter, ReporterEvent.WARNING, message="support did not spread in one step")
    return CommandOutcome(reports={"support": report})


EVOLVE_COMMAND = Command(
    name=CommandName.EVOLVE,
    description="Integrate the selected flow and write sampled norms and the final state.",
    handler=evolve_command,
)

HIERARCHY_COMMAND = Command(
    name=CommandName.HIERARCHY,
    description="Evaluate the coefficient ladders and the AL_r right-hand side on the profile.",
    handler=hierarchy_command,
)

CHECK_COMMAND = Command(
    name=CommandName.CHECK,
    description="Run the seeded invariant suite; exit code 3 on any failure.",
    handler=check_command,
)

CLOSENESS_COMMAND = Command(
    name=CommandName.CLOSENESS,
    description="Track the weighted distance of a perturbed solution and fit a Gronwall envelope.",
    handler=closeness_command,
)

ASYMPTOTICS_COMMAND = Command(
    name=CommandName.ASYMPTOTICS,
    description="Measure how far power-tail data moves in the weighted conclusion norm.",
    handler=asymptotics_command,
)

SPECTRUM_COMMAND = Command(
    name=CommandName.SPECTRUM,
    description="Spectrum of the periodic Lax operator and its drift along the flow.",
    handler=spectrum_command,
)

SUPPORT_COMMAND = Command(
    name=CommandName.SUPPORT,
    description="One step from compactly supported data; report spreading past the support.",
    handler=support_command,
)

ALL_COMMANDS: tuple[Command, ...] = (
    EVOLVE_COMMAND,
    HIERARCHY_COMMAND,
    CHECK_COMMAND,
    CLOSENESS_COMMAND,
    ASYMPTOTICS_COMMAND,
    SPECTRUM_COMMAND,
    SUPPORT_COMMAND,
)

COMMANDS: dict[CommandName, Command] = {command.name: command for command in ALL_COMMANDS}


__all__ = [
    "ALL_COMMANDS",
    "COMMANDS",
    "Command",
    "CommandHandler",
    "CommandOutcome",
    "HierarchyReport",
]
