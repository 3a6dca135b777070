"""Sieve 2SLS regression and estimators of the quadratic functional int h^2 mu.

The production estimator is the leave-one-out U-statistic

    f_J = 2 / (n (n-1)) * sum_{i < i'} Y_i Y_i' b(W_i)' A' G A b(W_i')

evaluated in O(n) through ||sum_i t_i||^2 - sum_i ||t_i||^2 with
t_i = G^{1/2} A b(W_i) Y_i.  ``quad_loo_bruteforce`` keeps the literal
pairwise sum as a test oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import UNIFORM, BasisSpec, WeightFn, design_matrix, gram_matrix
from .errors import InvalidInputError, ResourceError
from .linalg import DEFAULT_TOL, TolerancePolicy, svd_pinv

log = logging.getLogger(__name__)

BRUTEFORCE_MAX_N = 5000


def _frozen(a, name):
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Sample:
    """Observed triples (Y_i, X_i, W_i); x and w must already lie in [0, 1]."""

    y: np.ndarray
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        y, x, w = (_frozen(getattr(self, k), k) for k in ("y", "x", "w"))
        if not len(y) == len(x) == len(w):
            raise InvalidInputError(f"sample columns differ in length: {len(y)}, {len(x)}, {len(w)}")
        if len(y) < 4:
            raise InvalidInputError(f"need at least 4 observations, got {len(y)}")
        for name, a in (("y", y), ("x", x), ("w", w)):
            if not np.all(np.isfinite(a)):
                raise InvalidInputError(f"{name} contains NaN or Inf")
        for name, a in (("x", x), ("w", w)):
            if a.min() < 0.0 or a.max() > 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1]")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return len(self.y)

    def permuted(self, perm) -> "Sample":
        perm = np.asarray(perm)
        return Sample(self.y[perm], self.x[perm], self.w[perm])

    def with_y(self, y) -> "Sample":
        return Sample(y, self.x, self.w)


@dataclass(frozen=True, eq=False)
class SieveDesign:
    psi_spec: BasisSpec
    b_spec: BasisSpec
    mu: WeightFn
    Psi: np.ndarray
    B: np.ndarray
    G_mu: np.ndarray

    @property
    def n(self) -> int:
        return self.Psi.shape[0]

    @property
    def J(self) -> int:
        return self.psi_spec.dim

    @property
    def K(self) -> int:
        return self.b_spec.dim


@dataclass(frozen=True, eq=False)
class SieveFit:
    coefficients: np.ndarray
    a_hat: np.ndarray
    design: SieveDesign
    rank_deficient: bool = field(default=False)

    def __call__(self, x):
        return design_matrix(self.design.psi_spec, x) @ self.coefficients


def build_design(sample: Sample, psi_spec: BasisSpec, b_spec: BasisSpec | None = None,
                 mu: WeightFn = UNIFORM) -> SieveDesign:
    """Evaluate both bases on the sample; ``b_spec`` defaults to ``psi_spec`` (K = J)."""
    if b_spec is None:
        b_spec = psi_spec
    if b_spec.dim < psi_spec.dim:
        raise InvalidInputError(f"instrument dimension K={b_spec.dim} is below J={psi_spec.dim}")
    if b_spec.dim > sample.n:
        raise InvalidInputError(f"sieve dimensions J={psi_spec.dim}, K={b_spec.dim} exceed n={sample.n}")
    return SieveDesign(
        psi_spec=psi_spec,
        b_spec=b_spec,
        mu=mu,
        Psi=design_matrix(psi_spec, sample.x),
        B=design_matrix(b_spec, sample.w),
        G_mu=gram_matrix(psi_spec, mu),
    )


def _ahat(design: SieveDesign, tol: TolerancePolicy):
    n, J = design.n, design.J
    if n < J:
        raise InvalidInputError(f"need n >= J, got n={n}, J={J}")
    Psi, B = design.Psi, design.B
    BtB_inv, _ = svd_pinv(B.T @ B, tol)
    PtB = Psi.T @ B
    middle = PtB @ BtB_inv @ PtB.T
    middle_inv, rank = svd_pinv(0.5 * (middle + middle.T), tol)
    deficient = rank < J
    if deficient:
        log.warning("2SLS normal matrix has rank %d < J=%d; using the minimum-norm solution", rank, J)
    return n * middle_inv @ PtB @ BtB_inv, deficient


def ahat_matrix(design: SieveDesign, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """A_hat = n [Psi'B (B'B)^- B'Psi]^- Psi'B (B'B)^-  (J x K)."""
    return _ahat(design, tol)[0]


def fit_npiv(sample: Sample, design: SieveDesign, tol: TolerancePolicy = DEFAULT_TOL) -> SieveFit:
    """Series 2SLS fit; coefficients = A_hat B'Y / n."""
    A, deficient = _ahat(design, tol)
    coef = A @ (design.B.T @ sample.y) / design.n
    return SieveFit(coefficients=coef, a_hat=A, design=design, rank_deficient=deficient)


def quad_plugin(fit: SieveFit) -> float:
    """Plug-in estimate f(h_hat) = c' G_mu c."""
    c = fit.coefficients
    return float(c @ fit.design.G_mu @ c)


def quad_loo(sample: Sample, design: SieveDesign, a_hat: np.ndarray | None = None,
             tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """Leave-one-out U-statistic estimate of int h0^2 mu."""
    n = design.n
    if n < 4:
        raise InvalidInputError(f"need n >= 4, got {n}")
    if a_hat is None:
        a_hat = ahat_matrix(design, tol)
    # rows a_i = A b(W_i) Y_i; t_i = G^{1/2} a_i, so ||t_i||^2 = a_i' G a_i
    a = (design.B * sample.y[:, None]) @ a_hat.T
    G = design.G_mu
    s = a.sum(axis=0)
    total = s @ G @ s
    diag = np.einsum("ij,jk,ik->", a, G, a)
    return float((total - diag) / (n * (n - 1)))


def quad_loo_bruteforce(sample: Sample, design: SieveDesign, a_hat: np.ndarray | None = None,
                        tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """Literal pairwise sum over i < i' (O(n^2)); a test oracle for ``quad_loo``."""
    n = design.n
    if n > BRUTEFORCE_MAX_N:
        raise ResourceError(f"bruteforce U-statistic refuses n={n} > {BRUTEFORCE_MAX_N}")
    if a_hat is None:
        a_hat = ahat_matrix(design, tol)
    kernel = a_hat.T @ design.G_mu @ a_hat
    z = design.B * sample.y[:, None]
    total = 0.0
    for i in range(n - 1):
        total += float(np.sum((z[i + 1:] @ kernel) @ z[i]))
    return 2.0 * total / (n * (n - 1))
