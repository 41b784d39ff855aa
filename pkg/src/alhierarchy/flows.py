"""Hand-coded right-hand sides: the AL system, the explicit low hierarchy members and scaling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionError, InvalidScaleError, UnsupportedFlowError
from .lattice import BoundaryMode, LatticeWindow, SequencePair

if TYPE_CHECKING:
    from .hierarchy import FlowSpec


@dataclass(frozen=True, eq=False)
class FlowDerivative:
    """Time derivative (alpha_t, beta_t) on the window of the state it was computed from.

    ``valid_interior`` is the inclusive site range whose values do not depend on
    the boundary extension.
    """

    window: LatticeWindow
    dalpha: np.ndarray
    dbeta: np.ndarray
    valid_interior: tuple[int, int]

    def __post_init__(self) -> None:
        for name in ("dalpha", "dbeta"):
            values = np.asarray(getattr(self, name), dtype=np.complex128)
            if values.shape != (self.window.size,):
                raise DimensionError(f"{name} does not match the window size {self.window.size}")
            object.__setattr__(self, name, values)

    @property
    def interior_slice(self) -> slice:
        lo, hi = self.valid_interior
        return slice(lo - self.window.n_min, hi - self.window.n_min + 1)

    def max_abs_difference(self, other: "FlowDerivative", *, interior: bool = True) -> float:
        part = self.interior_slice if interior else slice(None)
        return float(
            max(
                np.max(np.abs(self.dalpha[part] - other.dalpha[part])),
                np.max(np.abs(self.dbeta[part] - other.dbeta[part])),
            )
        )


def interior_for(window: LatticeWindow, reach: int) -> tuple[int, int]:
    """Sites whose stencil of half-width ``reach`` stays inside the window."""

    if window.boundary_mode is BoundaryMode.PERIODIC or reach == 0:
        return window.n_min, window.n_max
    return window.n_min + reach, window.n_max - reach


class _Stencil:
    """Shifted views of a state extended by ``margin`` sites with its boundary rule."""

    def __init__(self, pair: SequencePair, margin: int, mode: BoundaryMode | None) -> None:
        self.size = pair.window.size
        self.margin = margin
        self.alpha_ext, self.beta_ext = pair.extended(margin, mode)

    def alpha(self, j: int = 0) -> np.ndarray:
        start = self.margin + j
        return self.alpha_ext[start : start + self.size]

    def beta(self, j: int = 0) -> np.ndarray:
        start = self.margin + j
        return self.beta_ext[start : start + self.size]

    def gamma(self, j: int = 0) -> np.ndarray:
        return 1.0 - self.alpha(j) * self.beta(j)


def al_system_rhs(pair: SequencePair, mode: BoundaryMode | None = None) -> FlowDerivative:
    """The AL system with gamma = 1 - alpha beta:

    alpha_t = i(gamma(alpha^- + alpha^+) - 2 alpha)
    beta_t = -i(gamma(beta^- + beta^+) - 2 beta)
    """

    s = _Stencil(pair, 1, mode)
    gamma = s.gamma()
    dalpha = 1j * (gamma * (s.alpha(-1) + s.alpha(1)) - 2.0 * s.alpha())
    dbeta = -1j * (gamma * (s.beta(-1) + s.beta(1)) - 2.0 * s.beta())
    window = pair.window if mode is None else pair.window.with_mode(mode)
    return FlowDerivative(pair.window, dalpha, dbeta, interior_for(window, 1))


def _coefficient(values: tuple[complex, ...], index: int) -> complex:
    return values[index] if index < len(values) else 0j


def al_explicit_rhs(
    pair: SequencePair, spec: FlowSpec, mode: BoundaryMode | None = None
) -> FlowDerivative:
    """Closed-form AL_(0,0), AL_(1,1) and AL_(2,2) with the constants carried by ``spec``."""

    order = (spec.r_minus, spec.r_plus)
    if order not in {(0, 0), (1, 1), (2, 2)}:
        raise UnsupportedFlowError(
            f"no closed form for r={order}; use the hierarchy engine",
            details={"r": list(order)},
        )
    c_r = spec.c_r
    window = pair.window if mode is None else pair.window.with_mode(mode)
    reach = order[0]
    s = _Stencil(pair, max(reach, 1) + 1, mode)
    a, b, gamma = s.alpha(), s.beta(), s.gamma()

    if reach == 0:
        dalpha = 1j * c_r * a
        dbeta = -1j * c_r * b
    elif reach == 1:
        cp, cm = spec.c_plus[0], spec.c_minus[0]
        dalpha = 1j * (gamma * (cm * s.alpha(-1) + cp * s.alpha(1)) + c_r * a)
        dbeta = -1j * (gamma * (cp * s.beta(-1) + cm * s.beta(1)) + c_r * b)
    else:
        cp, cm = spec.c_plus[0], spec.c_minus[0]
        c1p = _coefficient(spec.c_plus, 1)
        c1m = _coefficient(spec.c_minus, 1)
        am, ap, amm, app = s.alpha(-1), s.alpha(1), s.alpha(-2), s.alpha(2)
        bm, bp, bmm, bpp = s.beta(-1), s.beta(1), s.beta(-2), s.beta(2)
        gm, gp = s.gamma(-1), s.gamma(1)
        mixed = cp * ap * bm + cm * am * bp
        dalpha = 1j * (
            gamma
            * (
                cp * app * gp
                + cm * amm * gm
                - a * mixed
                - b * (cm * am**2 + cp * ap**2)
            )
            + gamma * (c1m * am + c1p * ap)
            + c_r * a
        )
        dbeta = -1j * (
            gamma
            * (
                cm * bpp * gp
                + cp * bmm * gm
                - b * mixed
                - a * (cp * bm**2 + cm * bp**2)
            )
            + gamma * (c1p * bm + c1m * bp)
            + c_r * b
        )
    return FlowDerivative(pair.window, dalpha, dbeta, interior_for(window, reach))


def scaling_transform(pair: SequencePair, c: complex) -> SequencePair:
    """(alpha, beta) -> (c alpha, beta / c)."""

    if c == 0:
        raise InvalidScaleError("scaling constant must be nonzero")
    return pair.replace(alpha=c * pair.alpha, beta=pair.beta / c)


def scale_derivative(deriv: FlowDerivative, c: complex) -> FlowDerivative:
    if c == 0:
        raise InvalidScaleError("scaling constant must be nonzero")
    return FlowDerivative(deriv.window, c * deriv.dalpha, deriv.dbeta / c, deriv.valid_interior)


def tilde_rhs(
    background: SequencePair, tilde: SequencePair, mode: BoundaryMode | None = None
) -> FlowDerivative:
    """Derivative of the perturbation of a time-independent background under the AL system.

    With alpha = alpha0 + alpha~ and gamma = 1 - alpha*beta the perturbation obeys
    alpha~_t = i(gamma(alpha~^- + alpha~^+) - 2 alpha~) + i(gamma(alpha0^- + alpha0^+) - 2 alpha0),
    the last group being the forcing by the background; beta~ likewise.
    """

    full = background + tilde
    s_full = _Stencil(full, 1, mode)
    s_bg = _Stencil(background, 1, mode)
    s_tl = _Stencil(tilde, 1, mode)
    gamma = s_full.gamma()

    def part(stencil: _Stencil, which: str) -> np.ndarray:
        values = stencil.alpha if which == "alpha" else stencil.beta
        return gamma * (values(-1) + values(1)) - 2.0 * values()

    dalpha = 1j * (part(s_tl, "alpha") + part(s_bg, "alpha"))
    dbeta = -1j * (part(s_tl, "beta") + part(s_bg, "beta"))
    window = full.window if mode is None else full.window.with_mode(mode)
    return FlowDerivative(full.window, dalpha, dbeta, interior_for(window, 1))


__all__ = [
    "FlowDerivative",
    "al_explicit_rhs",
    "al_system_rhs",
    "interior_for",
    "scale_derivative",
    "scaling_transform",
    "tilde_rhs",
]
