from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from alhierarchy.errors import ConfigError, InsufficientOrderError, InsufficientWindowError
from alhierarchy.flows import al_explicit_rhs, al_system_rhs, scaling_transform
from alhierarchy.hierarchy import (
    PRESETS,
    FlowSpec,
    HierarchyCoeffs,
    LadderSign,
    al_r_rhs,
    check_constraint,
    coefficients_for,
    constraint_holds,
    general_coeffs,
    homogeneous_coeffs,
    recursion_residual,
)
from alhierarchy.lattice import LatticeWindow, SequencePair, make_profile


def test_flow_spec_needs_matching_constants() -> None:
    with pytest.raises(ValidationError):
        FlowSpec(r_minus=1, r_plus=1, c_plus=(1,), c_minus=(1, 0))


def test_flow_spec_properties() -> None:
    spec = FlowSpec.al_system()

    assert spec.r == (1, 1)
    assert spec.c_r == -2
    assert spec.reach == 1
    assert spec.label == "al_system"
    assert FlowSpec(r_minus=0, r_plus=2, c_plus=(1, 0, 0), c_minus=(1,)).label == "AL_(0,2)"


def test_presets_resolve_and_unknown_names_fail() -> None:
    for name in PRESETS:
        assert FlowSpec.preset(name).label == name

    with pytest.raises(ConfigError):
        FlowSpec.preset("kdv")


def test_flow_spec_accepts_complex_strings() -> None:
    spec = FlowSpec.model_validate(
        {"r_minus": 0, "r_plus": 0, "c_plus": ["1+2j"], "c_minus": [[0.5, -1.0]]}
    )

    assert spec.c_plus == (1 + 2j,)
    assert spec.c_minus == (0.5 - 1j,)


def test_first_levels_of_both_ladders(periodic_pair: SequencePair) -> None:
    alpha, beta = periodic_pair.alpha, periodic_pair.beta
    plus = homogeneous_coeffs(periodic_pair, 1, LadderSign.PLUS)
    minus = homogeneous_coeffs(periodic_pair, 1, "-")

    assert_allclose(plus.f_at(0), -np.roll(alpha, -1))
    assert_allclose(plus.h_at(0), beta)
    assert_allclose(plus.g_at(0), 0.5)
    assert_allclose(plus.g_at(1), -np.roll(alpha, -1) * beta)
    assert_allclose(minus.f_at(0), alpha)
    assert_allclose(minus.h_at(0), -np.roll(beta, -1))
    assert_allclose(minus.g_at(1), -alpha * np.roll(beta, -1))


@pytest.mark.parametrize("sign", list(LadderSign))
def test_recursion_relations_hold(periodic_pair: SequencePair, sign: LadderSign) -> None:
    ladder = homogeneous_coeffs(periodic_pair, 5, sign)

    assert ladder.order == 5
    assert recursion_residual(ladder) <= 1e-13


def test_recursion_relations_hold_on_padded_interior(padded_window: LatticeWindow) -> None:
    pair = make_profile(padded_window, kind="gaussian", amplitude=0.4, width=4.0)

    for sign in LadderSign:
        assert recursion_residual(homogeneous_coeffs(pair, 3, sign)) <= 1e-13


def test_hierarchy_reproduces_al_system(periodic_pair: SequencePair) -> None:
    engine = al_r_rhs(periodic_pair, FlowSpec.al_system())
    direct = al_system_rhs(periodic_pair)

    assert engine.max_abs_difference(direct) <= 1e-13


def test_hierarchy_reproduces_closed_form_al_2_2(periodic_pair: SequencePair) -> None:
    spec = FlowSpec(r_minus=2, r_plus=2, c_plus=(1, 0.3, 0), c_minus=(1, -0.2j, 0.5))

    engine = al_r_rhs(periodic_pair, spec)
    explicit = al_explicit_rhs(periodic_pair, spec)

    assert engine.max_abs_difference(explicit) <= 1e-12


def test_hierarchy_phase_flow(periodic_pair: SequencePair) -> None:
    deriv = al_r_rhs(periodic_pair, FlowSpec.phase(0.7))

    assert_allclose(deriv.dalpha, 0.7j * periodic_pair.alpha, atol=1e-15)
    assert_allclose(deriv.dbeta, -0.7j * periodic_pair.beta, atol=1e-15)


def test_valid_interior_shrinks_with_order(padded_window: LatticeWindow) -> None:
    pair = make_profile(padded_window)
    coeffs = coefficients_for(pair, FlowSpec.al_2_2())

    assert coeffs.valid_interior == (-17, 17)
    assert al_r_rhs(pair, FlowSpec.al_2_2()).valid_interior == (-18, 18)


def test_order_too_large_for_window() -> None:
    pair = SequencePair.zeros(LatticeWindow(0, 7))

    with pytest.raises(InsufficientWindowError):
        homogeneous_coeffs(pair, 4, LadderSign.PLUS)


def test_constants_beyond_ladder_order(periodic_pair: SequencePair) -> None:
    ladder = homogeneous_coeffs(periodic_pair, 1, LadderSign.PLUS)

    with pytest.raises(InsufficientOrderError):
        ladder.convolve((1, 0, 0))


def test_constraint_examples() -> None:
    assert check_constraint(FlowSpec(r_minus=0, r_plus=1, c_plus=(0, 1), c_minus=(1,))).satisfied
    assert check_constraint(
        FlowSpec(r_minus=1, r_plus=1, c_plus=(1, 0), c_minus=(-1, 0))
    ).satisfied

    violating = check_constraint(FlowSpec(r_minus=1, r_plus=1, c_plus=(1, 0), c_minus=(1, 0)))
    assert not violating.satisfied
    assert violating.residual == 2


def test_al_system_satisfies_the_constraint_with_c_r() -> None:
    spec = FlowSpec.al_system()

    assert not check_constraint(spec).satisfied
    assert check_constraint(spec, include_c_r=True).satisfied
    assert constraint_holds(spec)


def _levels(coeffs: HierarchyCoeffs, attribute: str) -> list[np.ndarray]:
    return [
        getattr(ladder, attribute)[level]
        for ladder in (coeffs.plus, coeffs.minus)
        for level in range(ladder.order + 1)
    ]


def test_general_coefficients_are_linear_in_the_constants(periodic_pair: SequencePair) -> None:
    plus = homogeneous_coeffs(periodic_pair, 2, LadderSign.PLUS)
    minus = homogeneous_coeffs(periodic_pair, 2, LadderSign.MINUS)
    first = FlowSpec(r_minus=2, r_plus=2, c_plus=(1, 0.3, -0.5j), c_minus=(0.7, 0.2, 1))
    second = FlowSpec(r_minus=2, r_plus=2, c_plus=(0.4j, 1, 0), c_minus=(-1, 0, 0.25))
    doubled = FlowSpec(
        r_minus=2,
        r_plus=2,
        c_plus=tuple(2 * c for c in first.c_plus),
        c_minus=tuple(2 * c for c in first.c_minus),
    )
    summed = FlowSpec(
        r_minus=2,
        r_plus=2,
        c_plus=tuple(a + b for a, b in zip(first.c_plus, second.c_plus)),
        c_minus=tuple(a + b for a, b in zip(first.c_minus, second.c_minus)),
    )

    base = general_coeffs(plus, minus, first)
    other = general_coeffs(plus, minus, second)
    for attribute in ("f", "g", "h"):
        for lhs, rhs in zip(
            _levels(general_coeffs(plus, minus, doubled), attribute), _levels(base, attribute)
        ):
            assert_allclose(lhs, 2 * rhs, atol=1e-14)
        for total, a, b in zip(
            _levels(general_coeffs(plus, minus, summed), attribute),
            _levels(base, attribute),
            _levels(other, attribute),
        ):
            assert_allclose(total, a + b, atol=1e-14)


def test_recursion_relations_hold_with_general_constants(periodic_pair: SequencePair) -> None:
    spec = FlowSpec(r_minus=3, r_plus=2, c_plus=(1, 0.3, -0.5j), c_minus=(0.7, 0.2, 1, -2))
    coeffs = coefficients_for(periodic_pair, spec)

    assert_allclose(coeffs.plus.g_at(0), 0.5)
    assert recursion_residual(coeffs.plus) <= 1e-13
    assert recursion_residual(coeffs.minus) <= 1e-13


@pytest.mark.parametrize("name", ["al_system", "al_2_2"])
def test_hierarchy_is_scaling_equivariant(periodic_pair: SequencePair, name: str) -> None:
    spec = FlowSpec.preset(name)
    c = 1.7 - 0.6j

    direct = al_r_rhs(periodic_pair, spec)
    scaled = al_r_rhs(scaling_transform(periodic_pair, c), spec)

    assert_allclose(scaled.dalpha, c * direct.dalpha, atol=1e-13)
    assert_allclose(scaled.dbeta, direct.dbeta / c, atol=1e-13)


def test_g_levels_are_scaling_invariant(periodic_pair: SequencePair) -> None:
    scaled = scaling_transform(periodic_pair, 0.4 + 1.1j)

    for sign in LadderSign:
        original = homogeneous_coeffs(periodic_pair, 4, sign)
        transformed = homogeneous_coeffs(scaled, 4, sign)
        for level in range(5):
            assert_allclose(transformed.g_at(level), original.g_at(level), atol=1e-13)
