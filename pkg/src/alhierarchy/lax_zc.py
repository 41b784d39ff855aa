"""Zero-curvature pair (U, V), the five-diagonal Lax operator L and its companion P.

Matrix rows and columns are indexed by lattice sites (index = n - n_min). Even
sites carry the rows

    L(n, n-1) = -alpha(n) rho(n-1),  L(n, n) = -beta(n-1) alpha(n),
    L(n, n+1) = -alpha(n+1) rho(n),  L(n, n+2) = rho(n) rho(n+1),

odd sites the rows

    L(n, n-2) = rho(n-2) rho(n-1),   L(n, n-1) = beta(n-2) rho(n-1),
    L(n, n) = -beta(n-1) alpha(n),   L(n, n+1) = beta(n-1) rho(n),

with rho = (1 - alpha beta)^(1/2) on the principal branch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import (
    DimensionError,
    InvalidParameterError,
    NumericalError,
    SingularOperatorError,
)
from .flows import FlowDerivative
from .lattice import DEFAULT_RHO_TOL, BoundaryMode, LatticeWindow, SequencePair, extend

logger = logging.getLogger(__name__)

DEFAULT_LAX_MARGIN = 8
_SINGULAR_PIVOT = 1e-13


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray
    site: int
    z: complex

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))


def _require_z(z: complex) -> complex:
    if z == 0:
        raise InvalidParameterError("spectral parameter z must be nonzero")
    return complex(z)


def build_U(pair: SequencePair, n: int, z: complex) -> TransferMatrix:
    """U(z) = ((z, alpha), (beta z, 1)) at site n."""

    z = _require_z(z)
    a, b = pair.value_at(n)
    return TransferMatrix(np.array([[z, a], [b * z, 1.0]], dtype=np.complex128), n, z)


def build_V(pair: SequencePair, n: int, z: complex) -> TransferMatrix:
    """V(z) at site n:

    i((z - 1 - alpha beta^-, alpha - alpha^-/z), (beta^- z - beta, 1 + alpha^- beta - 1/z))
    """

    z = _require_z(z)
    a, b = pair.value_at(n)
    am, bm = pair.value_at(n - 1)
    entries = 1j * np.array(
        [
            [z - 1.0 - a * bm, a - am / z],
            [bm * z - b, 1.0 + am * b - 1.0 / z],
        ],
        dtype=np.complex128,
    )
    return TransferMatrix(entries, n, z)


def zc_residual(pair: SequencePair, deriv: FlowDerivative, z: complex, n: int) -> float:
    """||U_t + U V - V^+ U||_F at site n."""

    k = pair.window.index(n)
    U = build_U(pair, n, z).entries
    V = build_V(pair, n, z).entries
    V_next = build_V(pair, n + 1, z).entries
    U_t = np.array([[0.0, deriv.dalpha[k]], [deriv.dbeta[k] * z, 0.0]], dtype=np.complex128)
    return float(np.linalg.norm(U_t + U @ V - V_next @ U, ord="fro"))


class _SiteFields(NamedTuple):
    """alpha, beta and rho on the window padded by two sites."""

    alpha: np.ndarray
    beta: np.ndarray
    rho: np.ndarray


_PAD = 2

# (row parity, column offset, sign, first factor, its site offset, second factor, its offset)
_STENCIL: tuple[tuple[int, int, int, str, int, str, int], ...] = (
    (0, -1, -1, "alpha", 0, "rho", -1),
    (0, 0, -1, "beta", -1, "alpha", 0),
    (0, 1, -1, "alpha", 1, "rho", 0),
    (0, 2, 1, "rho", 0, "rho", 1),
    (1, -2, 1, "rho", -2, "rho", -1),
    (1, -1, 1, "beta", -2, "rho", -1),
    (1, 0, -1, "beta", -1, "alpha", 0),
    (1, 1, 1, "beta", -1, "rho", 0),
)


def _assemble(window: LatticeWindow, first: _SiteFields, second: _SiteFields) -> np.ndarray:
    """Matrix whose stencil entries are sign * first.x(n + i) * second.y(n + j)."""

    size = window.size
    periodic = window.boundary_mode is BoundaryMode.PERIODIC
    matrix = np.zeros((size, size), dtype=np.complex128)
    for row, n in enumerate(window.sites):
        parity = int(n) % 2
        for row_parity, offset, sign, x, i, y, j in _STENCIL:
            if parity != row_parity:
                continue
            col = row + offset
            if periodic:
                col %= size
            elif not 0 <= col < size:
                continue
            value = getattr(first, x)[row + _PAD + i] * getattr(second, y)[row + _PAD + j]
            matrix[row, col] += sign * value
    return matrix


def _fields(pair: SequencePair) -> _SiteFields:
    alpha, beta = pair.extended(_PAD)
    return _SiteFields(alpha, beta, np.sqrt(1.0 - alpha * beta))


def _derivative_fields(
    pair: SequencePair, deriv: FlowDerivative, fields: _SiteFields
) -> _SiteFields:
    mode = pair.window.boundary_mode
    dalpha = extend(deriv.dalpha, _PAD, mode)
    dbeta = extend(deriv.dbeta, _PAD, mode)
    drho = -(dalpha * fields.beta + fields.alpha * dbeta) / (2.0 * fields.rho)
    return _SiteFields(dalpha, dbeta, drho)


@dataclass(frozen=True, eq=False)
class LaxBundle:
    window: LatticeWindow
    L: np.ndarray
    Qd: np.ndarray
    Lplus: np.ndarray
    Lminus: np.ndarray
    rho: np.ndarray
    branch_cut_sites: tuple[int, ...]

    @cached_property
    def Linv(self) -> np.ndarray:
        """Dense inverse of the truncation; zero-padded windows leave it singular."""

        return _invert(self.L)

    @property
    def inverse_error(self) -> float:
        """max |L L^-1 - I|, reported because it depends on the conditioning of L."""

        return float(np.max(np.abs(self.L @ self.Linv - np.eye(self.window.size))))


def _require_lax_window(window: LatticeWindow) -> None:
    if window.boundary_mode is BoundaryMode.PERIODIC and window.size % 2:
        raise DimensionError(
            "a periodic Lax operator needs an even number of sites",
            details={"size": window.size},
        )


def _invert(L: np.ndarray) -> np.ndarray:
    lu, piv = scipy.linalg.lu_factor(L, check_finite=True)
    pivots = np.abs(np.diag(lu))
    scale = max(float(np.max(np.abs(L))), 1.0)
    if float(np.min(pivots)) <= _SINGULAR_PIVOT * scale:
        raise SingularOperatorError(
            "Lax operator truncation is numerically singular",
            details={"min_pivot": float(np.min(pivots))},
        )
    return scipy.linalg.lu_solve((lu, piv), np.eye(L.shape[0], dtype=L.dtype))


def build_L(pair: SequencePair, rho_tol: float = DEFAULT_RHO_TOL) -> LaxBundle:
    """Dense truncation of L on the window of ``pair`` with its triangular split.

    The inverse is formed on first use by ``build_P``, so a singular truncation
    only fails there.
    """

    window = pair.window
    _require_lax_window(window)
    pair.require_transfer(rho_tol)
    fields = _fields(pair)
    L = _assemble(window, fields, fields)
    gamma = 1.0 - pair.product
    on_cut = (np.abs(gamma.imag) == 0.0) & (gamma.real < 0.0)
    parity = window.sites % 2
    Qd = np.diag(np.where(parity == 0, -1.0, 1.0)).astype(np.complex128)
    return LaxBundle(
        window=window,
        L=L,
        Qd=Qd,
        Lplus=np.triu(L, 1),
        Lminus=np.tril(L, -1),
        rho=fields.rho[_PAD:-_PAD],
        branch_cut_sites=tuple(int(n) for n in window.sites[on_cut]),
    )


def build_P(bundle: LaxBundle) -> np.ndarray:
    """P = (i/2)(L_+ - L_- + (L^-1)_- - (L^-1)_+ + 2 Q_d) for the AL system."""

    inv_plus = np.triu(bundle.Linv, 1)
    inv_minus = np.tril(bundle.Linv, -1)
    return 0.5j * (bundle.Lplus - bundle.Lminus + inv_minus - inv_plus + 2.0 * bundle.Qd)


def lax_derivative(pair: SequencePair, deriv: FlowDerivative) -> np.ndarray:
    """dL/dt by the product rule on each two-factor entry."""

    fields = _fields(pair)
    dfields = _derivative_fields(pair, deriv, fields)
    return _assemble(pair.window, dfields, fields) + _assemble(pair.window, fields, dfields)


def lax_residual(
    pair: SequencePair,
    deriv: FlowDerivative,
    bundle: LaxBundle | None = None,
    margin: int = DEFAULT_LAX_MARGIN,
) -> float:
    """max |dL/dt - (P L - L P)| over entries at least ``margin`` rows and columns from the ends.

    Rows and columns of branch-cut sites are left out.
    """

    if margin < 4 or 2 * margin >= pair.window.size:
        raise InvalidParameterError(
            f"interior margin {margin} must be >= 4 and leave interior rows",
            details={"margin": margin, "size": pair.window.size},
        )
    bundle = build_L(pair) if bundle is None else bundle
    P = build_P(bundle)
    residual = lax_derivative(pair, deriv) - (P @ bundle.L - bundle.L @ P)
    inner = np.arange(margin, pair.window.size - margin)
    cut = [pair.window.index(n) for n in bundle.branch_cut_sites]
    inner = inner[~np.isin(inner, cut)]
    if inner.size == 0:
        return 0.0
    value = float(np.max(np.abs(residual[np.ix_(inner, inner)])))
    logger.debug("Lax residual evaluated", extra={"margin": margin, "residual": value})
    return value


def spectrum(bundle: LaxBundle) -> np.ndarray:
    """Eigenvalues of the truncated L sorted by (real, imag)."""

    try:
        values = scipy.linalg.eigvals(bundle.L)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    order = np.lexsort((values.imag, values.real))
    return values[order]


def paired_distance(first: Iterable[complex], second: Iterable[complex]) -> float:
    """Largest distance between eigenvalues under the optimal one-to-one pairing."""

    a = np.asarray(list(first), dtype=np.complex128)
    b = np.asarray(list(second), dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError("spectra have different sizes", details={"sizes": [a.size, b.size]})
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


__all__ = [
    "DEFAULT_LAX_MARGIN",
    "LaxBundle",
    "TransferMatrix",
    "build_L",
    "build_P",
    "build_U",
    "build_V",
    "lax_derivative",
    "lax_residual",
    "paired_distance",
    "spectrum",
    "zc_residual",
]
