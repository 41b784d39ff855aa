"""Sequence pairs on finite lattice windows: boundary handling, shifts and weighted norms.

A finite window ``[n_min, n_max]`` stands in for the doubly infinite lattice.
Values outside the window are supplied by the boundary mode: zero padding,
periodic wraparound, or the nearest stored edge value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from .errors import DimensionError, InvalidParameterError, NearSingularTransferError, ProfileError
from .serialization import ComplexValue

MIN_WINDOW_SIZE = 8
DEFAULT_RHO_TOL = 1e-8


class BoundaryMode(str, Enum):
    PAD_ZERO = "pad_zero"
    PERIODIC = "periodic"
    FROZEN_EDGES = "frozen_edges"


_NP_PAD_MODE = {
    BoundaryMode.PAD_ZERO: "constant",
    BoundaryMode.PERIODIC: "wrap",
    BoundaryMode.FROZEN_EDGES: "edge",
}


@dataclass(frozen=True)
class LatticeWindow:
    """Sites ``n_min..n_max`` (inclusive) with the rule used beyond them."""

    n_min: int
    n_max: int
    boundary_mode: BoundaryMode = BoundaryMode.PAD_ZERO
    edge_band: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundary_mode", BoundaryMode(self.boundary_mode))
        if self.n_min >= self.n_max:
            raise DimensionError(
                f"window needs n_min < n_max, got [{self.n_min}, {self.n_max}]",
                details={"n_min": self.n_min, "n_max": self.n_max},
            )
        if self.size < MIN_WINDOW_SIZE:
            raise DimensionError(
                f"window has {self.size} sites, at least {MIN_WINDOW_SIZE} are required",
                details={"size": self.size},
            )
        if self.edge_band < 1 or 2 * self.edge_band >= self.size:
            raise DimensionError(
                f"edge band {self.edge_band} does not fit a window of {self.size} sites",
                details={"edge_band": self.edge_band, "size": self.size},
            )

    @classmethod
    def centered(
        cls,
        size: int,
        boundary_mode: BoundaryMode | str = BoundaryMode.PAD_ZERO,
        edge_band: int = 1,
    ) -> "LatticeWindow":
        n_min = -(size // 2)
        return cls(n_min, n_min + size - 1, BoundaryMode(boundary_mode), edge_band)

    @property
    def size(self) -> int:
        return self.n_max - self.n_min + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def index(self, n: int) -> int:
        if not self.n_min <= n <= self.n_max:
            raise DimensionError(f"site {n} outside window [{self.n_min}, {self.n_max}]")
        return n - self.n_min

    def same_sites(self, other: "LatticeWindow") -> bool:
        return self.n_min == other.n_min and self.n_max == other.n_max

    def with_mode(
        self, boundary_mode: BoundaryMode | str, edge_band: int | None = None
    ) -> "LatticeWindow":
        return LatticeWindow(
            self.n_min,
            self.n_max,
            BoundaryMode(boundary_mode),
            self.edge_band if edge_band is None else edge_band,
        )

    def doubled(self) -> "LatticeWindow":
        """Window of twice the size around the same centre."""

        n_min = self.n_min - self.size // 2
        return LatticeWindow(n_min, n_min + 2 * self.size - 1, self.boundary_mode, self.edge_band)


def extend(values: np.ndarray, margin: int, mode: BoundaryMode) -> np.ndarray:
    """Pad ``values`` by ``margin`` sites on each side following ``mode``."""

    if margin == 0:
        return np.array(values, copy=True)
    return np.pad(values, margin, mode=_NP_PAD_MODE[BoundaryMode(mode)])


@dataclass(frozen=True, eq=False)
class SequencePair:
    """The state (alpha, beta) of the lattice on one window. Arrays are read-only."""

    window: LatticeWindow
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            values = np.array(getattr(self, name), dtype=np.complex128)
            if values.shape != (self.window.size,):
                raise DimensionError(
                    f"{name} has shape {values.shape}, window expects ({self.window.size},)",
                    details={"field": name, "shape": list(values.shape)},
                )
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def zeros(cls, window: LatticeWindow) -> "SequencePair":
        return cls(window, np.zeros(window.size), np.zeros(window.size))

    def replace(
        self, *, alpha: np.ndarray | None = None, beta: np.ndarray | None = None
    ) -> "SequencePair":
        return SequencePair(
            self.window,
            self.alpha if alpha is None else alpha,
            self.beta if beta is None else beta,
        )

    def with_window(self, window: LatticeWindow) -> "SequencePair":
        if not window.same_sites(self.window):
            raise DimensionError("with_window only changes the boundary rule, not the sites")
        return SequencePair(window, self.alpha, self.beta)

    def _check_same(self, other: "SequencePair") -> None:
        if not self.window.same_sites(other.window):
            raise DimensionError(
                "sequence pairs live on different windows",
                details={
                    "left": [self.window.n_min, self.window.n_max],
                    "right": [other.window.n_min, other.window.n_max],
                },
            )

    def __add__(self, other: "SequencePair") -> "SequencePair":
        self._check_same(other)
        return self.replace(alpha=self.alpha + other.alpha, beta=self.beta + other.beta)

    def __sub__(self, other: "SequencePair") -> "SequencePair":
        self._check_same(other)
        return self.replace(alpha=self.alpha - other.alpha, beta=self.beta - other.beta)

    @property
    def sup_bound(self) -> float:
        """B = sup_n(|alpha(n)| + |beta(n)|)."""

        return float(np.max(np.abs(self.alpha) + np.abs(self.beta)))

    @property
    def product(self) -> np.ndarray:
        return self.alpha * self.beta

    @property
    def zero_product_sites(self) -> np.ndarray:
        """Sites with alpha*beta == 0, recorded but never rejected."""

        return self.window.sites[self.product == 0]

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.alpha)) and np.all(np.isfinite(self.beta)))

    def transfer_margin(self) -> float:
        """min_n |1 - alpha(n) beta(n)|."""

        return float(np.min(np.abs(1.0 - self.product)))

    def require_transfer(self, rho_tol: float = DEFAULT_RHO_TOL) -> None:
        margin = self.transfer_margin()
        if margin <= rho_tol:
            bad = self.window.sites[np.abs(1.0 - self.product) <= rho_tol]
            raise NearSingularTransferError(
                f"|1 - alpha*beta| <= {rho_tol:g} at {bad.size} site(s)",
                details={"sites": bad.tolist(), "margin": margin},
            )

    def extended(
        self, margin: int, mode: BoundaryMode | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        mode = self.window.boundary_mode if mode is None else BoundaryMode(mode)
        return extend(self.alpha, margin, mode), extend(self.beta, margin, mode)

    def value_at(self, n: int, mode: BoundaryMode | None = None) -> tuple[complex, complex]:
        """(alpha(n), beta(n)) for any site, using the boundary rule outside the window."""

        mode = self.window.boundary_mode if mode is None else BoundaryMode(mode)
        size = self.window.size
        k = n - self.window.n_min
        if 0 <= k < size:
            return complex(self.alpha[k]), complex(self.beta[k])
        if mode is BoundaryMode.PERIODIC:
            k %= size
        elif mode is BoundaryMode.FROZEN_EDGES:
            k = min(max(k, 0), size - 1)
        else:
            return 0j, 0j
        return complex(self.alpha[k]), complex(self.beta[k])


def shift(pair: SequencePair, j: int, mode: BoundaryMode | None = None) -> SequencePair:
    """Return n -> (alpha(n+j), beta(n+j)) with out-of-window values from ``mode``."""

    size = pair.window.size
    if abs(j) >= size:
        raise InvalidParameterError(
            f"shift {j} is not smaller than the window size {size}", details={"j": j}
        )
    if j == 0:
        return pair
    margin = abs(j)
    alpha, beta = pair.extended(margin, mode)
    start = margin + j
    return pair.replace(alpha=alpha[start : start + size], beta=beta[start : start + size])


WeightRule = Callable[[np.ndarray], np.ndarray]


def _uniform_rule(n: np.ndarray) -> np.ndarray:
    return np.ones(np.shape(n), dtype=float)


@dataclass(frozen=True)
class _PowerRule:
    exponent: float
    one_sided: bool

    def __call__(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.one_sided:
            return np.where(n > 0, (1.0 + np.maximum(n, 0.0)) ** self.exponent, 1.0)
        return (1.0 + np.abs(n)) ** self.exponent


@dataclass(frozen=True)
class _SquaredRule:
    base: WeightRule

    def __call__(self, n: np.ndarray) -> np.ndarray:
        return self.base(n) ** 2


@dataclass(frozen=True, eq=False)
class Weight:
    """Weight w(n) >= 1 over a window with bounded shift ratios.

    ``rule`` is the closed-form extension used to evaluate the same weight on
    another window.
    """

    window: LatticeWindow
    w: np.ndarray
    rule: WeightRule | None = None
    shift_ratio_bound: float = field(init=False)

    def __post_init__(self) -> None:
        values = np.array(self.w, dtype=float)
        if values.shape != (self.window.size,):
            raise DimensionError(
                f"weight has shape {values.shape}, window expects ({self.window.size},)"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 1.0):
            raise InvalidParameterError(
                "weights must be finite and >= 1",
                details={"min": float(np.min(values))},
            )
        values.setflags(write=False)
        object.__setattr__(self, "w", values)
        ratio = values[1:] / values[:-1]
        object.__setattr__(self, "shift_ratio_bound", float(np.max(ratio + 1.0 / ratio)))

    @classmethod
    def from_rule(cls, window: LatticeWindow, rule: WeightRule) -> "Weight":
        return cls(window, rule(window.sites), rule)

    @classmethod
    def uniform(cls, window: LatticeWindow) -> "Weight":
        return cls.from_rule(window, _uniform_rule)

    @classmethod
    def polynomial(cls, window: LatticeWindow, exponent: float = 1.0) -> "Weight":
        """w(n) = (1 + |n|)^exponent."""

        return cls.from_rule(window, _PowerRule(exponent, one_sided=False))

    @classmethod
    def one_sided_power(cls, window: LatticeWindow, exponent: float) -> "Weight":
        """w(n) = (1 + n)^exponent for n > 0 and 1 otherwise."""

        return cls.from_rule(window, _PowerRule(exponent, one_sided=True))

    def on(self, window: LatticeWindow) -> "Weight":
        if self.rule is None:
            raise InvalidParameterError("weight has no extension rule; cannot change window")
        return Weight.from_rule(window, self.rule)

    def squared(self) -> "Weight":
        rule = None if self.rule is None else _SquaredRule(self.rule)
        return Weight(self.window, self.w**2, rule)


def normalize_exponent(p: float | str) -> float:
    """Validate a norm exponent; ``"inf"`` and ``"∞"`` map to ``math.inf``."""

    if isinstance(p, str):
        text = p.strip().lower()
        value = math.inf if text in {"inf", "infinity", "∞"} else float(text)
    else:
        value = float(p)
    if math.isnan(value) or value < 1.0:
        raise InvalidParameterError(f"norm exponent must be >= 1, got {p!r}")
    return value


def _check_weight(pair: SequencePair, weight: Weight) -> None:
    if not pair.window.same_sites(weight.window):
        raise DimensionError(
            "pair and weight live on different windows",
            details={
                "pair": [pair.window.n_min, pair.window.n_max],
                "weight": [weight.window.n_min, weight.window.n_max],
            },
        )


def weighted_norm(
    pair: SequencePair,
    weight: Weight,
    p: float | str = 2.0,
    *,
    exclude_edges: int = 0,
) -> float:
    """||(alpha, beta)||_{w,p}; ``exclude_edges`` drops that many sites at each end."""

    _check_weight(pair, weight)
    p = normalize_exponent(p)
    inner = slice(exclude_edges, pair.window.size - exclude_edges)
    w = weight.w[inner]
    abs_alpha = np.abs(pair.alpha[inner])
    abs_beta = np.abs(pair.beta[inner])
    if w.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(w * (abs_alpha + abs_beta)))
    total = np.sum(w * (abs_alpha**p + abs_beta**p))
    return float(total ** (1.0 / p))


def difference_norm(
    pair: SequencePair,
    weight: Weight,
    p: float | str = 2.0,
    mode: BoundaryMode | None = None,
    *,
    exclude_edges: int = 0,
) -> float:
    """||(alpha - alpha^+, beta - beta^+)||_{w,p}."""

    return weighted_norm(pair - shift(pair, 1, mode), weight, p, exclude_edges=exclude_edges)


def shift_operator_norm(weight: Weight, p: float | str, direction: Literal[1, -1] = 1) -> float:
    """sup_n |w(n) / w(n + direction)|^(1/p), exponent 1 for p = inf."""

    p = normalize_exponent(p)
    w = weight.w
    ratio = w[:-1] / w[1:] if direction == 1 else w[1:] / w[:-1]
    sup = float(np.max(ratio))
    return sup if math.isinf(p) else sup ** (1.0 / p)


class ProfileKind(str, Enum):
    POWER_TAIL = "power_tail"
    STEPLIKE = "steplike"
    COMPACT = "compact"
    GAUSSIAN = "gaussian"


class ProfileSpec(BaseModel):
    """Parameters of an initial profile; only the fields of ``kind`` are read."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ProfileKind = ProfileKind.GAUSSIAN
    # gaussian
    amplitude: float = 0.3
    width: float = 10.0
    center: float = 0.0
    wavenumber: float = 0.0
    symmetry: Literal["defocusing", "focusing", "alpha_only"] = "defocusing"
    # power_tail
    a: ComplexValue = 0.3
    b: ComplexValue = 0.3
    delta: float = 1.0
    # steplike; a missing beta side defaults to conj(alpha)
    left_alpha: ComplexValue = 0.0
    right_alpha: ComplexValue = 0.2
    left_beta: ComplexValue | None = None
    right_beta: ComplexValue | None = None
    # compact
    support: tuple[int, int] = (0, 0)
    value_alpha: ComplexValue = 0.5
    value_beta: ComplexValue = 0.0


def _gaussian(window: LatticeWindow, spec: ProfileSpec) -> tuple[np.ndarray, np.ndarray]:
    if spec.width <= 0:
        raise ProfileError(f"gaussian width must be positive, got {spec.width}")
    n = window.sites.astype(float)
    alpha = (
        spec.amplitude
        * np.exp(-(((n - spec.center) / spec.width) ** 2))
        * np.exp(1j * spec.wavenumber * n)
    )
    if spec.symmetry == "defocusing":
        beta = np.conj(alpha)
    elif spec.symmetry == "focusing":
        beta = -np.conj(alpha)
    else:
        beta = np.zeros_like(alpha)
    return alpha, beta


def _power_tail(window: LatticeWindow, spec: ProfileSpec) -> tuple[np.ndarray, np.ndarray]:
    if spec.delta < 0:
        raise ProfileError(f"power tail needs delta >= 0, got {spec.delta}")
    n = window.sites.astype(float)
    positive = n > 0
    decay = np.zeros_like(n)
    decay[positive] = n[positive] ** (-spec.delta)
    return spec.a * decay, spec.b * decay


def _steplike(window: LatticeWindow, spec: ProfileSpec) -> tuple[np.ndarray, np.ndarray]:
    left_beta = np.conj(spec.left_alpha) if spec.left_beta is None else spec.left_beta
    right_beta = np.conj(spec.right_alpha) if spec.right_beta is None else spec.right_beta

    def constant(alpha: complex, beta: complex) -> SequencePair:
        return SequencePair(
            window,
            np.full(window.size, alpha, dtype=np.complex128),
            np.full(window.size, beta, dtype=np.complex128),
        )

    glued = steplike_tilde(
        constant(spec.left_alpha, left_beta), constant(spec.right_alpha, right_beta)
    )
    return glued.alpha, glued.beta


def _compact(window: LatticeWindow, spec: ProfileSpec) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = spec.support
    if lo > hi or lo < window.n_min or hi > window.n_max:
        raise ProfileError(
            f"support [{lo}, {hi}] must be a non-empty interval inside the window",
            details={"support": [lo, hi], "window": [window.n_min, window.n_max]},
        )
    inside = (window.sites >= lo) & (window.sites <= hi)
    alpha = np.where(inside, spec.value_alpha, 0.0)
    beta = np.where(inside, spec.value_beta, 0.0)
    return alpha, beta


_PROFILE_BUILDERS = {
    ProfileKind.GAUSSIAN: _gaussian,
    ProfileKind.POWER_TAIL: _power_tail,
    ProfileKind.STEPLIKE: _steplike,
    ProfileKind.COMPACT: _compact,
}


def make_profile(
    window: LatticeWindow, spec: ProfileSpec | None = None, **params: Any
) -> SequencePair:
    """Build initial data of the requested kind on ``window``.

    Keyword arguments are merged into ``spec`` (``make_profile(w, kind="compact",
    support=(0, 0))``). Data with alpha*beta = 1 anywhere is rejected.
    """

    spec = spec or ProfileSpec()
    if params:
        spec = ProfileSpec.model_validate({**spec.model_dump(), **params})
    alpha, beta = _PROFILE_BUILDERS[spec.kind](window, spec)
    pair = SequencePair(window, alpha, beta)
    if pair.transfer_margin() < 1e-12:
        raise ProfileError(
            "profile has alpha*beta = 1 at some site",
            details={"kind": spec.kind.value},
        )
    return pair


def steplike_tilde(left: SequencePair, right: SequencePair) -> SequencePair:
    """Glue two backgrounds at n = 0: ``right`` for n >= 0, ``left`` for n < 0."""

    left._check_same(right)
    right_side = left.window.sites >= 0
    return right.replace(
        alpha=np.where(right_side, right.alpha, left.alpha),
        beta=np.where(right_side, right.beta, left.beta),
    )


def random_pair(
    window: LatticeWindow, rng: np.random.Generator, bound: float = 0.5
) -> SequencePair:
    """Random data with |alpha|, |beta| <= bound and uniform phases."""

    def draw() -> np.ndarray:
        radius = bound * rng.random(window.size)
        return radius * np.exp(2j * np.pi * rng.random(window.size))

    return SequencePair(window, draw(), draw())


__all__ = [
    "BoundaryMode",
    "LatticeWindow",
    "ProfileKind",
    "ProfileSpec",
    "SequencePair",
    "Weight",
    "difference_norm",
    "extend",
    "make_profile",
    "normalize_exponent",
    "random_pair",
    "shift",
    "shift_operator_norm",
    "steplike_tilde",
    "weighted_norm",
]
