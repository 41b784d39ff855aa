"""Invariant suite behind ``al check``: seeded oracle and property checks over every module."""

from __future__ import annotations

import asyncio
import cmath
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from pydantic import BaseModel

from .experiments import (
    asymptotics_run_async,
    closeness_run_async,
    isospectral_drift,
    support_spread_run,
)
from .flows import (
    FlowDerivative,
    al_explicit_rhs,
    al_system_rhs,
    scaling_transform,
    tilde_rhs,
)
from .hierarchy import (
    FlowSpec,
    LadderSign,
    al_r_rhs,
    check_constraint,
    homogeneous_coeffs,
    recursion_residual,
)
from .integrator import convergence_report, evolve, state_distance
from .lattice import (
    BoundaryMode,
    LatticeWindow,
    ProfileKind,
    SequencePair,
    Weight,
    make_profile,
    random_pair,
)
from .lax_zc import build_L, lax_residual, zc_residual
from .logging_utils import log_operation
from .utils import Reporter, ReporterEvent, emit

logger = logging.getLogger(__name__)

CheckFn = Callable[[], tuple[bool, str]]

LAX_WINDOW = 128
GAUSSIAN = {"kind": ProfileKind.GAUSSIAN, "amplitude": 0.3, "width": 10.0}


@dataclass
class Check:
    label: str
    fn: CheckFn


class CheckResult(BaseModel):
    label: str
    status: str
    message: str

    @property
    def passed(self) -> bool:
        return self.status == "PASS"


class SuiteReport(BaseModel):
    seed: int
    results: list[CheckResult]
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass(frozen=True)
class SuiteSettings:
    seed: int = 20240601
    size: int = 64
    samples: int = 10


def wrap_check(fn: Callable[[], object]) -> CheckFn:
    def _run() -> tuple[bool, str]:
        try:
            result = fn()
        except AssertionError as exc:
            return False, str(exc)
        except Exception as exc:
            return False, f"error={exc}"
        if isinstance(result, tuple) and len(result) == 2:
            ok, msg = result
            return bool(ok), str(msg)
        return True, "ok"

    return _run


def close_check(lhs: np.ndarray, rhs: np.ndarray, atol: float, rtol: float) -> tuple[bool, float]:
    diff = float(np.max(np.abs(lhs - rhs)))
    scale = atol + rtol * float(np.max(np.abs(rhs)))
    return diff <= scale, diff


def _random_pairs(settings: SuiteSettings, mode: BoundaryMode) -> list[SequencePair]:
    rng = np.random.default_rng(settings.seed)
    window = LatticeWindow.centered(settings.size, mode)
    return [random_pair(window, rng, 0.5) for _ in range(settings.samples)]


def _derivatives_match(
    first: Callable[[SequencePair], FlowDerivative],
    second: Callable[[SequencePair], FlowDerivative],
    pairs: list[SequencePair],
) -> tuple[bool, str]:
    worst = 0.0
    ok = True
    for pair in pairs:
        a, b = first(pair), second(pair)
        for lhs, rhs in ((a.dalpha, b.dalpha), (a.dbeta, b.dbeta)):
            good, diff = close_check(lhs, rhs, atol=1e-14, rtol=1e-12)
            ok &= good
            worst = max(worst, diff)
    return ok, f"max_diff={worst:.3e}"


def build_checks(settings: SuiteSettings) -> list[Check]:
    pairs = _random_pairs(settings, BoundaryMode.PERIODIC)
    al_system = FlowSpec.al_system()
    al_2_2 = FlowSpec.al_2_2()

    def hierarchy_matches_al_system() -> tuple[bool, str]:
        return _derivatives_match(al_system_rhs, lambda x: al_r_rhs(x, al_system), pairs)

    def hierarchy_matches_al_2_2() -> tuple[bool, str]:
        return _derivatives_match(
            lambda x: al_explicit_rhs(x, al_2_2), lambda x: al_r_rhs(x, al_2_2), pairs
        )

    def recursion_consistency() -> tuple[bool, str]:
        worst = max(
            recursion_residual(homogeneous_coeffs(pair, 4, sign))
            for pair in pairs
            for sign in LadderSign
        )
        return worst <= 1e-13, f"max_residual={worst:.3e}"

    def zero_curvature() -> tuple[bool, str]:
        rng = np.random.default_rng(settings.seed + 1)
        worst = 0.0
        for pair in pairs:
            deriv = al_system_rhs(pair)
            for theta in rng.uniform(0.0, 2.0 * np.pi, 10):
                z = cmath.exp(1j * theta)
                for n in pair.window.sites:
                    worst = max(worst, zc_residual(pair, deriv, z, int(n)))
        return worst <= 1e-12, f"max_residual={worst:.3e}"

    def lax_certificate() -> tuple[bool, str]:
        window = LatticeWindow.centered(LAX_WINDOW, BoundaryMode.PERIODIC)
        pair = make_profile(window, **GAUSSIAN)
        deriv = al_system_rhs(pair)
        bundle = build_L(pair)
        residual = lax_residual(pair, deriv, bundle)
        flipped = FlowDerivative(deriv.window, -deriv.dalpha, deriv.dbeta, deriv.valid_interior)
        corrupted = lax_residual(pair, flipped, bundle)
        ok = residual <= 1e-8 and corrupted >= 1e-2
        return ok, f"residual={residual:.3e} corrupted={corrupted:.3e}"

    def integrator_exact_phase() -> tuple[bool, str]:
        window = LatticeWindow.centered(settings.size)
        pair = make_profile(window, **GAUSSIAN)
        final = evolve(pair, FlowSpec.phase(2.0), 0.0, 1.0, 1e-3).final
        expected = pair.alpha * np.exp(2j)
        ok, diff = close_check(final.alpha, expected, atol=0.0, rtol=1e-10)
        return ok, f"max_diff={diff:.3e}"

    def integrator_order() -> tuple[bool, str]:
        window = LatticeWindow.centered(settings.size)
        pair = make_profile(window, **GAUSSIAN)
        report = convergence_report(pair, al_system, 1.0, [0.1, 0.05, 0.025, 0.0125])
        order = report.observed_order
        return order is not None and abs(order - 4.0) <= 0.3, f"observed_order={order}"

    def isospectrality() -> tuple[bool, str]:
        window = LatticeWindow.centered(LAX_WINDOW, BoundaryMode.PERIODIC)
        small = isospectral_drift(make_profile(window, **GAUSSIAN), al_system)
        large = isospectral_drift(make_profile(window.doubled(), **GAUSSIAN), al_system)
        ok = small.max_drift <= 1e-6 and large.max_drift <= max(small.max_drift, 1e-10)
        return ok, f"drift={small.max_drift:.3e} doubled={large.max_drift:.3e}"

    def leading_asymptotics() -> tuple[bool, str]:
        report = asyncio.run(asymptotics_run_async(0.3, 0.3, 1.0, al_system, 1.0, (201, 401)))
        residual = report.final_residuals[0]
        ok = np.isfinite(residual) and report.stability_ratio <= 1.2
        return bool(ok), f"residual={residual:.3e} stability_ratio={report.stability_ratio:.4f}"

    def closeness_envelope() -> tuple[bool, str]:
        window = LatticeWindow.centered(201)
        background = make_profile(window, **GAUSSIAN)
        site = window.index(0)
        bump = np.zeros(window.size, dtype=complex)
        bump[site] = 1e-3
        perturbed = background.replace(alpha=background.alpha + bump, beta=background.beta + bump)
        weight = Weight.polynomial(window, 1.0)

        async def both() -> tuple:
            return await asyncio.gather(
                closeness_run_async(background, perturbed, weight, "inf", al_system, 1.0),
                closeness_run_async(
                    background, perturbed, weight, "inf", al_system, 1.0, h=5e-4, stride=20
                ),
            )

        coarse, fine = asyncio.run(both())
        ok = (
            coarse.envelope_ok
            and coarse.fitted_D <= 0.1 * coarse.delta_norm[0]
            and fine.envelope_ok == coarse.envelope_ok
        )
        return ok, f"C={coarse.fitted_C:.4f} D={coarse.fitted_D:.3e} ok={coarse.envelope_ok}"

    def scaling_equivariance() -> tuple[bool, str]:
        window = LatticeWindow.centered(settings.size)
        pair = make_profile(window, **GAUSSIAN)
        direct = evolve(pair, al_system).final
        scaled = evolve(scaling_transform(pair, 2.0), al_system).final
        diff = state_distance(scaling_transform(scaled, 0.5), direct)
        return diff <= 1e-10, f"max_diff={diff:.3e}"

    def support_spreading() -> tuple[bool, str]:
        window = LatticeWindow.centered(settings.size)
        pair = make_profile(window, kind=ProfileKind.COMPACT, support=(0, 0), value_alpha=0.5)
        report = support_spread_run(pair, al_system, 1e-3)
        in_band = all(
            1e-4 <= m <= 1e-3 for m in (report.left_magnitude, report.right_magnitude)
        )
        return report.spread and in_band, (
            f"left={report.left_magnitude:.3e} right={report.right_magnitude:.3e}"
        )

    def perturbation_equation() -> tuple[bool, str]:
        rng = np.random.default_rng(settings.seed + 2)
        worst = 0.0
        ok = True
        for background in pairs:
            tilde = random_pair(background.window, rng, 0.1)
            split = tilde_rhs(background, tilde)
            whole = al_system_rhs(background + tilde)
            for lhs, rhs in ((split.dalpha, whole.dalpha), (split.dbeta, whole.dbeta)):
                good, diff = close_check(lhs, rhs, atol=1e-13, rtol=1e-12)
                ok &= good
                worst = max(worst, diff)
        return ok, f"max_diff={worst:.3e}"

    def constraint_examples() -> tuple[bool, str]:
        passing = [
            FlowSpec(r_minus=0, r_plus=1, c_plus=(0, 1), c_minus=(1,)),
            FlowSpec(r_minus=1, r_plus=1, c_plus=(1, 0), c_minus=(-1, 0)),
        ]
        failing = check_constraint(FlowSpec(r_minus=1, r_plus=1, c_plus=(1, 0), c_minus=(1, 0)))
        ok = all(check_constraint(spec).satisfied for spec in passing)
        ok = ok and not failing.satisfied and abs(failing.residual - 2) <= 1e-14
        return ok, f"violating residual={failing.residual}"

    return [
        Check("hierarchy matches AL system", wrap_check(hierarchy_matches_al_system)),
        Check("hierarchy matches AL_(2,2)", wrap_check(hierarchy_matches_al_2_2)),
        Check("recursion consistency", wrap_check(recursion_consistency)),
        Check("zero-curvature identity", wrap_check(zero_curvature)),
        Check("Lax identity", wrap_check(lax_certificate)),
        Check("phase flow exact solution", wrap_check(integrator_exact_phase)),
        Check("integrator order", wrap_check(integrator_order)),
        Check("isospectral drift", wrap_check(isospectrality)),
        Check("leading asymptotics", wrap_check(leading_asymptotics)),
        Check("closeness envelope", wrap_check(closeness_envelope)),
        Check("perturbation equation", wrap_check(perturbation_equation)),
        Check("scaling equivariance", wrap_check(scaling_equivariance)),
        Check("support spreading", wrap_check(support_spreading)),
        Check("constraint examples", wrap_check(constraint_examples)),
    ]


def run_checks(
    checks: list[Check], reporter: Reporter | None = None
) -> tuple[list[CheckResult], int]:
    results: list[CheckResult] = []
    failures = 0
    for check in checks:
        try:
            ok, msg = check.fn()
        except Exception as exc:
            ok, msg = False, f"error={exc}"
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
            logger.warning("Check failed", extra={"check": check.label, "detail": msg})
        results.append(CheckResult(label=check.label, status=status, message=msg))
        emit(reporter, ReporterEvent.CHECK_RESULT, name=check.label, passed=ok, detail=msg)
    return results, failures


def run_suite(
    settings: SuiteSettings | None = None, reporter: Reporter | None = None
) -> SuiteReport:
    settings = settings or SuiteSettings()
    with log_operation(
        logger=logger,
        start_message="Invariant suite started",
        success_message="Invariant suite finished",
        failure_message="Invariant suite crashed",
        base_extra={"seed": settings.seed, "size": settings.size, "samples": settings.samples},
        summarize=lambda report: {"failures": report.failures},
    ) as context:
        results, failures = run_checks(build_checks(settings), reporter)
        report = context.record_result(
            SuiteReport(seed=settings.seed, results=results, failures=failures)
        )
    return report


__all__ = [
    "Check",
    "CheckResult",
    "SuiteReport",
    "SuiteSettings",
    "build_checks",
    "close_check",
    "run_checks",
    "run_suite",
    "wrap_check",
]
