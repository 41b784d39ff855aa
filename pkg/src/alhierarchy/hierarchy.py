"""AL_r right-hand sides for arbitrary r = (r_-, r_+) from the coefficient ladders.

The homogeneous ladders (c_0 = 1, higher constants zero) are computed by the
local product recursion

    g_{l+1} = sum_{k=0}^{l} f_{l-k} h_k - sum_{k=1}^{l} g_{l+1-k} g_k

followed by the first-order updates for f and h. General summation constants
enter by convolution with the homogeneous levels. All levels are computed on
the window padded by the boundary rule, then cropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ConfigError, InsufficientOrderError, InsufficientWindowError
from .flows import FlowDerivative, interior_for
from .lattice import BoundaryMode, LatticeWindow, SequencePair
from .serialization import ComplexValue

CONSTRAINT_TOL = 1e-14
_EXTRA_MARGIN = 4


class FlowSpec(BaseModel):
    """Member AL_r of the hierarchy: orders r_-, r_+ and summation constants c_{j,+-}."""

    model_config = ConfigDict(frozen=True)

    r_minus: int = Field(ge=0)
    r_plus: int = Field(ge=0)
    c_plus: tuple[ComplexValue, ...]
    c_minus: tuple[ComplexValue, ...]
    name: str | None = None

    @model_validator(mode="after")
    def _check_lengths(self) -> "FlowSpec":
        if len(self.c_plus) != self.r_plus + 1:
            raise ValueError(f"c_plus needs r_plus + 1 = {self.r_plus + 1} constants")
        if len(self.c_minus) != self.r_minus + 1:
            raise ValueError(f"c_minus needs r_minus + 1 = {self.r_minus + 1} constants")
        return self

    @property
    def r(self) -> tuple[int, int]:
        return self.r_minus, self.r_plus

    @property
    def c_r(self) -> complex:
        """(c_{r_-,-} + c_{r_+,+}) / 2."""

        return (self.c_minus[-1] + self.c_plus[-1]) / 2

    @property
    def reach(self) -> int:
        return max(self.r_minus, self.r_plus)

    @property
    def label(self) -> str:
        return self.name or f"AL_({self.r_minus},{self.r_plus})"

    @classmethod
    def al_system(cls) -> "FlowSpec":
        return cls(r_minus=1, r_plus=1, c_plus=(1, -2), c_minus=(1, -2), name="al_system")

    @classmethod
    def dnls(cls) -> "FlowSpec":
        return cls(r_minus=1, r_plus=1, c_plus=(1, -2), c_minus=(1, -2), name="dnls")

    @classmethod
    def schur(cls) -> "FlowSpec":
        return cls(r_minus=1, r_plus=1, c_plus=(-1j, 0), c_minus=(1j, 0), name="schur")

    @classmethod
    def phase(cls, c: complex = 1.0) -> "FlowSpec":
        return cls(r_minus=0, r_plus=0, c_plus=(c,), c_minus=(c,), name="phase")

    @classmethod
    def al_2_2(cls) -> "FlowSpec":
        return cls(r_minus=2, r_plus=2, c_plus=(1, 0, 0), c_minus=(1, 0, 0), name="al_2_2")

    @classmethod
    def preset(cls, name: str) -> "FlowSpec":
        try:
            factory = PRESETS[name]
        except KeyError as exc:
            raise ConfigError(
                f"unknown flow preset {name!r}", details={"available": sorted(PRESETS)}
            ) from exc
        return factory()


PRESETS: dict[str, Callable[[], FlowSpec]] = {
    "al_system": FlowSpec.al_system,
    "dnls": FlowSpec.dnls,
    "schur": FlowSpec.schur,
    "phase": FlowSpec.phase,
    "al_2_2": FlowSpec.al_2_2,
}


class LadderSign(str, Enum):
    PLUS = "+"
    MINUS = "-"


def _down(values: np.ndarray) -> np.ndarray:
    """X^-(n) = X(n - 1)."""

    return np.roll(values, 1)


def _up(values: np.ndarray) -> np.ndarray:
    """X^+(n) = X(n + 1)."""

    return np.roll(values, -1)


@dataclass(frozen=True, eq=False)
class Ladder:
    """Levels 0..order of f, g, h for one sign, stored on the padded grid."""

    sign: LadderSign
    window: LatticeWindow
    margin: int
    alpha_ext: np.ndarray
    beta_ext: np.ndarray
    f: tuple[np.ndarray, ...]
    g: tuple[np.ndarray, ...]
    h: tuple[np.ndarray, ...]

    @property
    def order(self) -> int:
        return len(self.g) - 1

    @property
    def valid_interior(self) -> tuple[int, int]:
        return interior_for(self.window, self.order + 1)

    def _crop(self, values: np.ndarray, shift: int) -> np.ndarray:
        start = self.margin + shift
        return values[start : start + self.window.size]

    def f_at(self, level: int, shift: int = 0) -> np.ndarray:
        return self._crop(self.f[level], shift)

    def g_at(self, level: int, shift: int = 0) -> np.ndarray:
        return self._crop(self.g[level], shift)

    def h_at(self, level: int, shift: int = 0) -> np.ndarray:
        return self._crop(self.h[level], shift)

    def alpha_at(self, shift: int = 0) -> np.ndarray:
        return self._crop(self.alpha_ext, shift)

    def beta_at(self, shift: int = 0) -> np.ndarray:
        return self._crop(self.beta_ext, shift)

    def convolve(self, constants: tuple[complex, ...]) -> "Ladder":
        """Level l of the result is sum_{k<=l} c_{l-k} * (homogeneous level k)."""

        if len(constants) - 1 > self.order:
            raise InsufficientOrderError(
                f"ladder has order {self.order}, constants need {len(constants) - 1}",
                details={"order": self.order, "needed": len(constants) - 1},
            )
        levels = len(constants)

        def combine(source: tuple[np.ndarray, ...]) -> tuple[np.ndarray, ...]:
            zero = np.zeros_like(source[0])
            return tuple(
                sum((constants[level - k] * source[k] for k in range(level + 1)), zero)
                for level in range(levels)
            )

        return Ladder(
            self.sign,
            self.window,
            self.margin,
            self.alpha_ext,
            self.beta_ext,
            combine(self.f),
            combine(self.g),
            combine(self.h),
        )


@dataclass(frozen=True, eq=False)
class HierarchyCoeffs:
    plus: Ladder
    minus: Ladder

    @property
    def valid_interior(self) -> tuple[int, int]:
        lo = max(self.plus.valid_interior[0], self.minus.valid_interior[0])
        hi = min(self.plus.valid_interior[1], self.minus.valid_interior[1])
        return lo, hi


def homogeneous_coeffs(
    pair: SequencePair,
    order: int,
    sign: LadderSign | Literal["+", "-"],
    mode: BoundaryMode | None = None,
) -> Ladder:
    """Homogeneous ladder with c_0 = 1 and all higher constants zero, levels 0..order."""

    sign = LadderSign(sign)
    window = pair.window if mode is None else pair.window.with_mode(mode)
    if order < 0:
        raise InsufficientOrderError(f"ladder order must be >= 0, got {order}")
    reach = order + 1
    if window.boundary_mode is not BoundaryMode.PERIODIC and 2 * reach >= window.size:
        raise InsufficientWindowError(
            f"order {order} leaves no valid interior on a window of {window.size} sites",
            details={"order": order, "size": window.size},
        )
    margin = order + _EXTRA_MARGIN
    alpha, beta = pair.extended(margin, window.boundary_mode)

    g = [np.full(alpha.shape, 0.5 + 0j)]
    if sign is LadderSign.PLUS:
        f = [-_up(alpha)]
        h = [beta.copy()]
    else:
        f = [alpha.copy()]
        h = [-_up(beta)]

    for level in range(order):
        g_next = sum((f[level - k] * h[k] for k in range(level + 1)), np.zeros_like(alpha))
        g_next = g_next - sum(
            (g[level + 1 - k] * g[k] for k in range(1, level + 1)), np.zeros_like(alpha)
        )
        g_pair = g_next + _down(g_next)
        if sign is LadderSign.PLUS:
            f_next = _up(f[level] - alpha * g_pair)
            h_next = _down(h[level]) + beta * g_pair
        else:
            f_next = _down(f[level]) + alpha * g_pair
            h_next = _up(h[level] - beta * g_pair)
        g.append(g_next)
        f.append(f_next)
        h.append(h_next)

    return Ladder(sign, window, margin, alpha, beta, tuple(f), tuple(g), tuple(h))


def general_coeffs(plus: Ladder, minus: Ladder, spec: FlowSpec) -> HierarchyCoeffs:
    """Apply the summation constants of ``spec`` to the two homogeneous ladders."""

    return HierarchyCoeffs(plus=plus.convolve(spec.c_plus), minus=minus.convolve(spec.c_minus))


def coefficients_for(
    pair: SequencePair, spec: FlowSpec, mode: BoundaryMode | None = None
) -> HierarchyCoeffs:
    plus = homogeneous_coeffs(pair, spec.r_plus, LadderSign.PLUS, mode)
    minus = homogeneous_coeffs(pair, spec.r_minus, LadderSign.MINUS, mode)
    return general_coeffs(plus, minus, spec)


def al_r_rhs(
    pair: SequencePair, spec: FlowSpec, mode: BoundaryMode | None = None
) -> FlowDerivative:
    """Right-hand side of AL_r solved for the time derivatives.

    alpha_t = i(alpha (g_{r+,+} + g^-_{r-,-}) - f_{r+-1,+} + f^-_{r--1,-})
    beta_t  = i(h_{r--1,-} - h^-_{r+-1,+} - beta (g^-_{r+,+} + g_{r-,-}))

    f and h terms with a level of -1 are absent.
    """

    coeffs = coefficients_for(pair, spec, mode)
    plus, minus = coeffs.plus, coeffs.minus
    rp, rm = spec.r_plus, spec.r_minus
    alpha, beta = plus.alpha_at(), plus.beta_at()

    g_alpha = plus.g_at(rp) + minus.g_at(rm, -1)
    g_beta = plus.g_at(rp, -1) + minus.g_at(rm)
    f_term = np.zeros_like(alpha)
    h_term = np.zeros_like(beta)
    if rp > 0:
        f_term = f_term + plus.f_at(rp - 1)
        h_term = h_term - plus.h_at(rp - 1, -1)
    if rm > 0:
        f_term = f_term - minus.f_at(rm - 1, -1)
        h_term = h_term + minus.h_at(rm - 1)

    dalpha = 1j * (alpha * g_alpha - f_term)
    dbeta = 1j * (h_term - beta * g_beta)
    window = plus.window
    return FlowDerivative(pair.window, dalpha, dbeta, interior_for(window, spec.reach))


def recursion_residual(ladder: Ladder) -> float:
    """Largest violation of the first-order difference relations between consecutive levels.

    Plus ladder:
        g_{l+1} - g^-_{l+1} = alpha h^-_l + beta f_l
        f^-_{l+1} = f_l - alpha (g_{l+1} + g^-_{l+1})
        h_{l+1} = h^-_l + beta (g_{l+1} + g^-_{l+1})
    Minus ladder:
        g_{l+1} - g^-_{l+1} = alpha h_l + beta f^-_l
        f_{l+1} = f^-_l + alpha (g_{l+1} + g^-_{l+1})
        h^-_{l+1} = h_l - beta (g_{l+1} + g^-_{l+1})
    Evaluated on the valid interior of the ladder.
    """

    lo, hi = ladder.valid_interior
    inner = slice(lo - ladder.window.n_min, hi - ladder.window.n_min + 1)
    alpha, beta = ladder.alpha_at(), ladder.beta_at()
    worst = 0.0
    for level in range(ladder.order):
        g1, g1m = ladder.g_at(level + 1), ladder.g_at(level + 1, -1)
        g_pair = g1 + g1m
        if ladder.sign is LadderSign.PLUS:
            residuals = (
                g1 - g1m - alpha * ladder.h_at(level, -1) - beta * ladder.f_at(level),
                ladder.f_at(level + 1, -1) - ladder.f_at(level) + alpha * g_pair,
                ladder.h_at(level + 1) - ladder.h_at(level, -1) - beta * g_pair,
            )
        else:
            residuals = (
                g1 - g1m - alpha * ladder.h_at(level) - beta * ladder.f_at(level, -1),
                ladder.f_at(level + 1) - ladder.f_at(level, -1) - alpha * g_pair,
                ladder.h_at(level + 1, -1) - ladder.h_at(level) + beta * g_pair,
            )
        for values in residuals:
            worst = max(worst, float(np.max(np.abs(values[inner]))))
    return worst


@dataclass(frozen=True)
class ConstraintCheck:
    satisfied: bool
    residual: complex
    includes_c_r: bool


def check_constraint(spec: FlowSpec, *, include_c_r: bool = False) -> ConstraintCheck:
    """sum_{j<r+} c_{j,+} + sum_{j<r-} c_{j,-} (optionally + c_r) must vanish."""

    residual = complex(sum(spec.c_plus[: spec.r_plus]) + sum(spec.c_minus[: spec.r_minus]))
    if include_c_r:
        residual += spec.c_r
    return ConstraintCheck(abs(residual) <= CONSTRAINT_TOL, residual, include_c_r)


def constraint_holds(spec: FlowSpec) -> bool:
    """True if either form of the constraint holds."""

    return check_constraint(spec).satisfied or check_constraint(spec, include_c_r=True).satisfied


__all__ = [
    "PRESETS",
    "ConstraintCheck",
    "FlowSpec",
    "HierarchyCoeffs",
    "Ladder",
    "LadderSign",
    "al_r_rhs",
    "check_constraint",
    "coefficients_for",
    "constraint_holds",
    "general_coeffs",
    "homogeneous_coeffs",
    "recursion_residual",
]
