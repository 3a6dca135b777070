"""Sieve bases on [0, 1]: evaluation, design matrices and weighted Gram matrices.

Three families are supported:

* ``cosine``   -- phi_j(x) = sqrt(2) cos(pi j x), j = 1..J (no constant term)
* ``bspline``  -- unnormalized B-splines of a given order on uniform knots
* ``legendre`` -- orthonormal shifted Legendre polynomials of degree 0..J-1
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import BSpline

from .errors import ConditioningError, DomainError, InvalidInputError

GL_NODES_PER_PANEL = 10
MIN_PANELS = 32


class Family(str, enum.Enum):
    COSINE = "cosine"
    BSPLINE = "bspline"
    LEGENDRE = "legendre"


@dataclass(frozen=True)
class BasisSpec:
    """A basis family together with its dimension.

    ``order`` is only read for B-splines (4 = cubic).
    """

    family: Family
    dim: int
    order: int = 4

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidInputError(f"basis dimension must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.family is Family.BSPLINE:
            if self.order < 2:
                raise InvalidInputError(f"B-spline order must be >= 2, got {self.order}")
            if self.dim < self.order:
                raise InvalidInputError(
                    f"B-spline basis of order {self.order} needs dim >= {self.order}, got {self.dim}"
                )

    def with_dim(self, dim: int) -> "BasisSpec":
        return BasisSpec(self.family, dim, self.order)

    @property
    def knots(self) -> np.ndarray:
        """Full knot vector (B-splines only): boundary knots repeated ``order`` times."""
        if self.family is not Family.BSPLINE:
            raise InvalidInputError(f"{self.family.value} basis has no knots")
        m = self.order
        interior = np.linspace(0.0, 1.0, self.dim - m + 2)[1:-1]
        return np.concatenate([np.zeros(m), interior, np.ones(m)])


@dataclass(frozen=True)
class WeightFn:
    """Weighting function mu on [0, 1].

    With ``grid`` and ``values`` left empty the weight is uniform (mu = 1).
    Otherwise it is the piecewise-linear interpolant of the tabulated values,
    which must be strictly positive and cover the whole interval.
    """

    grid: tuple = field(default=())
    values: tuple = field(default=())

    def __post_init__(self):
        if len(self.grid) != len(self.values):
            raise InvalidInputError("weight grid and values differ in length")
        if not self.grid:
            return
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(g) < 2 or np.any(np.diff(g) <= 0):
            raise InvalidInputError("weight grid must be strictly increasing with >= 2 points")
        if g[0] > 0.0 or g[-1] < 1.0:
            raise InvalidInputError("weight grid must cover [0, 1]")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise InvalidInputError("weight values must be finite and strictly positive")
        object.__setattr__(self, "grid", tuple(float(a) for a in g))
        object.__setattr__(self, "values", tuple(float(a) for a in v))

    @property
    def is_uniform(self) -> bool:
        return not self.grid

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_uniform:
            return np.ones_like(x)
        return np.interp(x, self.grid, self.values)

    def breakpoints(self) -> np.ndarray:
        if self.is_uniform:
            return np.array([0.0, 1.0])
        g = np.asarray(self.grid)
        return np.unique(np.clip(g, 0.0, 1.0))

    def describe(self) -> str:
        return "uniform" if self.is_uniform else f"tabulated({len(self.grid)} points)"

    @classmethod
    def from_csv(cls, path) -> "WeightFn":
        """Read a two-column ``x,mu`` table (header required)."""
        try:
            data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise InvalidInputError(f"cannot read weight table {path}: {exc}") from None
        if data.shape[1] != 2:
            raise InvalidInputError(f"{path}: expected two columns x,mu")
        return cls(tuple(data[:, 0]), tuple(data[:, 1]))


UNIFORM = WeightFn()


def _check_domain(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError("basis evaluation points must be finite")
    if np.any((x < 0.0) | (x > 1.0)):
        bad = x[(x < 0.0) | (x > 1.0)][0]
        raise DomainError(f"point {bad!r} lies outside [0, 1]")


def _evaluate(spec: BasisSpec, x: np.ndarray) -> np.ndarray:
    if spec.family is Family.COSINE:
        j = np.arange(1, spec.dim + 1)
        return np.sqrt(2.0) * np.cos(np.pi * np.outer(x, j))
    if spec.family is Family.LEGENDRE:
        V = np.polynomial.legendre.legvander(2.0 * x - 1.0, spec.dim - 1)
        return V * np.sqrt(2.0 * np.arange(spec.dim) + 1.0)
    return BSpline.design_matrix(x, spec.knots, spec.order - 1).toarray()


def eval_basis(spec: BasisSpec, x: float) -> np.ndarray:
    """Basis vector (phi_1(x), ..., phi_J(x))."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.shape != (1,):
        raise InvalidInputError("eval_basis takes a single point; use design_matrix for arrays")
    _check_domain(arr)
    return _evaluate(spec, arr)[0]


def design_matrix(spec: BasisSpec, points) -> np.ndarray:
    """n x J matrix whose i-th row is the basis evaluated at ``points[i]``."""
    x = np.asarray(points, dtype=float).ravel()
    if x.size == 0:
        raise InvalidInputError("design_matrix needs at least one point")
    _check_domain(x)
    return _evaluate(spec, x)


def quadrature_rule(breakpoints, nodes_per_panel: int = GL_NODES_PER_PANEL):
    """Composite Gauss-Legendre nodes and weights over consecutive breakpoints."""
    b = np.unique(np.asarray(breakpoints, dtype=float))
    t, wt = np.polynomial.legendre.leggauss(nodes_per_panel)
    lo, hi = b[:-1, None], b[1:, None]
    half = 0.5 * (hi - lo)
    x = (lo + hi) / 2 + half * t
    w = half * wt
    return x.ravel(), w.ravel()


def panel_breakpoints(spec: BasisSpec, mu: WeightFn = UNIFORM, n_panels: int | None = None) -> np.ndarray:
    """Uniform panels, refined so that spline knots and weight-table nodes are panel edges.

    Both the spline pieces and the interpolated weight are then polynomial on
    every panel, so 10-point Gauss-Legendre integrates their products exactly.
    """
    if n_panels is None:
        n_panels = max(2 * spec.dim, MIN_PANELS)
    pts = [np.linspace(0.0, 1.0, n_panels + 1), mu.breakpoints()]
    if spec.family is Family.BSPLINE:
        pts.append(spec.knots)
    return np.unique(np.concatenate(pts))


def gram_matrix(spec: BasisSpec, mu: WeightFn = UNIFORM, n_panels: int | None = None) -> np.ndarray:
    """G_mu = int psi(x) psi(x)' mu(x) dx by composite Gauss-Legendre quadrature.

    ``n_panels`` defaults to max(2J, 32); smaller values than 2J are refused
    since they cannot resolve the oscillation of the J-th cosine.
    """
    if n_panels is not None and n_panels < 2 * spec.dim:
        raise InvalidInputError(f"n_panels={n_panels} is below the resolution guard 2J={2 * spec.dim}")
    x, w = quadrature_rule(panel_breakpoints(spec, mu, n_panels))
    P = _evaluate(spec, x)
    G = (P * (w * mu(x))[:, None]).T @ P
    G = 0.5 * (G + G.T)
    eig = np.linalg.eigvalsh(G)
    if eig[0] < 1e-12 * eig[-1]:
        raise ConditioningError(
            f"Gram matrix of {spec.family.value}(J={spec.dim}) is numerically singular "
            f"(eigenvalue ratio {eig[0] / eig[-1]:.3e})"
        )
    return G


def zeta_growth(spec: BasisSpec) -> float:
    """Sup-norm growth bound: sqrt(J) for cosine and splines, J for polynomials."""
    if spec.family is Family.LEGENDRE:
        return float(spec.dim)
    return float(np.sqrt(spec.dim))
