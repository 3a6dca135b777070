"""Sieve measure of ill-posedness: data-driven tau_hat, the variance proxy V_hat,
and population counterparts for the synthetic designs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .basis import UNIFORM, BasisSpec, Family, WeightFn, _evaluate, gram_matrix, quadrature_rule
from .errors import IllposednessOverflow, InvalidInputError
from .estimators import SieveDesign
from .linalg import DEFAULT_TOL, TolerancePolicy, min_singular_value, sym_inv_sqrt

S_HAT_CUTOFF = 1e-12


@dataclass(frozen=True)
class IllposednessReport:
    J: int
    n: int
    s_hat: float
    tau_hat: float
    v_hat: float

    def as_dict(self):
        return {"J": self.J, "n": self.n, "s_hat": self.s_hat, "tau_hat": self.tau_hat, "v_hat": self.v_hat}


def v_hat(tau: float, J: int, n: float) -> float:
    """V_hat(J) = tau^2 sqrt(J log n) / n with the natural logarithm."""
    if not tau > 0 or J < 1:
        raise InvalidInputError(f"need tau > 0 and J >= 1, got tau={tau}, J={J}")
    if not math.log(n) >= 1.0 - 1e-12:
        raise InvalidInputError(f"need log n >= 1, got n={n}")
    return tau ** 2 * math.sqrt(J * math.log(n)) / n


def tau_hat(design: SieveDesign, tol: TolerancePolicy = DEFAULT_TOL) -> IllposednessReport:
    """tau_hat = 1 / s_min((B'B/n)^{-1/2} (B'Psi/n) G_mu^{-1/2}).

    G_mu comes from quadrature, not from the data. Raises
    ``IllposednessOverflow`` when s_min falls below 1e-12.
    """
    n, J, K = design.n, design.J, design.K
    if J > n or n <= K:
        raise InvalidInputError(f"tau_hat needs J <= n and n > K (n={n}, J={J}, K={K})")
    B, Psi = design.B, design.Psi
    M = sym_inv_sqrt(B.T @ B / n, tol) @ (B.T @ Psi / n) @ sym_inv_sqrt(design.G_mu, tol)
    s = min_singular_value(M)
    if s < S_HAT_CUTOFF:
        raise IllposednessOverflow(f"s_min = {s:.3e} at J={J}: dimension too large for n={n}")
    tau = 1.0 / s
    return IllposednessReport(J=J, n=n, s_hat=s, tau_hat=tau, v_hat=v_hat(tau, J, n))


class PopulationIllposedness(NamedTuple):
    s_J: float
    tau_J: float


def _population_moments(dgp, spec: BasisSpec):
    """Integrals of a basis against 1 and against cos(pi m x), m = 1..j_op."""
    n_panels = max(2 * spec.dim, 2 * dgp.j_op, 32)
    bp = np.linspace(0.0, 1.0, n_panels + 1)
    if spec.family is Family.BSPLINE:
        bp = np.unique(np.concatenate([bp, spec.knots]))
    x, w = quadrature_rule(bp)
    P = _evaluate(spec, x)
    m = np.arange(1, dgp.j_op + 1)
    C = (P * w[:, None]).T @ np.cos(np.pi * np.outer(x, m))
    return P.T @ w, C, (P * w[:, None]).T @ P


def population_s_and_tau(dgp, J: int, psi_spec: BasisSpec | None = None, b_spec: BasisSpec | None = None,
                         mu: WeightFn = UNIFORM) -> PopulationIllposedness:
    """Population s_J = s_min(G_b^{-1/2} S G_mu^{-1/2}) and the sieve ill-posedness tau_J.

    S = E[b(W) psi(X)'] and G_b = E[b(W) b(W)'] are integrated term by term
    against the conditional density of ``dgp``. tau_J is computed from the
    operator Gram E[(T psi)(T psi)'], which for the cosine sieve reduces to
    diag(nu^2) and hence tau_J = 1/nu_J.
    """
    if psi_spec is None:
        psi_spec = BasisSpec(Family.COSINE, J)
    if b_spec is None:
        b_spec = psi_spec
    if psi_spec.dim != J or b_spec.dim < J:
        raise InvalidInputError("psi_spec must have dimension J and b_spec at least J")
    if J > dgp.j_op:
        raise InvalidInputError(f"J={J} exceeds the operator truncation j_op={dgp.j_op}")
    two_nu = 2.0 * dgp.nu
    p_psi, C_psi, _ = _population_moments(dgp, psi_spec)
    p_b, C_b, G_b = _population_moments(dgp, b_spec)
    S = np.outer(p_b, p_psi) + (C_b * two_nu) @ C_psi.T
    G_mu = gram_matrix(psi_spec, mu)
    G_mu_is = sym_inv_sqrt(G_mu)
    s_J = min_singular_value(sym_inv_sqrt(G_b) @ S @ G_mu_is)
    # ||T h||^2 = c' [p p' + C diag(2 nu^2) C'] c  for h = psi' c
    G_T = np.outer(p_psi, p_psi) + (C_psi * (two_nu * dgp.nu)) @ C_psi.T
    lam = np.linalg.eigvalsh(G_mu_is @ G_T @ G_mu_is)[0]
    return PopulationIllposedness(s_J=s_J, tau_J=float(1.0 / np.sqrt(lam)))
