"""Synthetic NPIV models whose conditional-expectation operator is diagonal.

The conditional density of X given W on [0, 1]^2 is

    f(x | w) = 1 + sum_j 2 nu_j cos(pi j x) cos(pi j w),

so that E[phi_j(X) | W] = nu_j phi_j(W) for the cosine system
phi_j = sqrt(2) cos(pi j .).  Both marginals are uniform.  The structural
function is h0 = sum_j c_j phi_j and the error

    U = rho (phi_1(X) - nu_1 phi_1(W)) + sigma * eta,   eta ~ N(0, 1),

has E[U | W] = 0 exactly while being correlated with X.

Random streams come from numpy's Philox counter-based generator keyed by a
``SeedSequence`` built from the integers passed as ``seed``; the experiment
runner uses (master_seed, n, rep).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import UNIFORM, WeightFn, quadrature_rule
from .errors import DgpError, InvalidInputError, NpivError
from .estimators import Sample
from .rates import RateSpec, Regime

SQRT2 = np.sqrt(2.0)
CDF_TOL = 1e-10


@dataclass(frozen=True)
class DgpSpec:
    regime: Regime
    zeta: float
    p: float
    c_nu: float
    c_h: float = 1.0
    sigma_eta: float = 0.5
    rho_endog: float = 0.5
    j_op: int = 200
    j_h: int = 200
    L: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not self.zeta > 0 or not self.p > 0:
            raise DgpError("zeta and p must be positive")
        if not 0.0 < self.c_nu <= 0.5:
            raise DgpError(f"c_nu must lie in (0, 0.5], got {self.c_nu}")
        if self.c_h < 0 or self.sigma_eta < 0:
            raise DgpError("c_h and sigma_eta must be nonnegative")
        if int(self.j_op) != self.j_op or int(self.j_h) != self.j_h or self.j_op < 1 or self.j_h < 1:
            raise DgpError("truncations j_op and j_h must be positive integers")
        if self.j_h > self.j_op:
            raise DgpError(f"j_h={self.j_h} exceeds j_op={self.j_op}: h0 would not be identified")
        nu = self.nu
        if np.any(nu <= 0) or np.any(nu >= 1) or np.any(np.diff(nu) >= 0):
            raise DgpError("nu must be strictly decreasing inside (0, 1)")
        total = 2.0 * nu.sum()
        if total > 1.0:
            raise DgpError(f"density positivity check failed: sum_j 2 nu_j = {total:.6f} > 1")
        radius = float(np.sum(self.h_coeffs ** 2 * np.arange(1, self.j_h + 1) ** (2 * self.p)))
        if radius > self.L:
            raise DgpError(f"h0 lies outside the Sobolev ellipsoid: {radius:.4f} > L={self.L}")

    @cached_property
    def nu(self) -> np.ndarray:
        j = np.arange(1, self.j_op + 1, dtype=float)
        if self.regime is Regime.MILD:
            nu = self.c_nu * j ** (-self.zeta)
        else:
            nu = self.c_nu * np.exp(-0.5 * j ** self.zeta)
        nu.setflags(write=False)
        return nu

    @cached_property
    def h_coeffs(self) -> np.ndarray:
        c = self.c_h * np.arange(1, self.j_h + 1, dtype=float) ** (-(self.p + 0.55))
        c.setflags(write=False)
        return c

    @property
    def rate_spec(self) -> RateSpec:
        return RateSpec(self.regime, self.p, self.zeta)

    def h0(self, x):
        x = np.asarray(x, dtype=float)
        return _cos_series(x, self.h_coeffs * SQRT2)


def make_dgp(regime, zeta, p, c_nu, c_h=1.0, sigma_eta=0.5, rho_endog=0.5, j_op=200, j_h=200,
             L=10.0) -> DgpSpec:
    return DgpSpec(Regime(regime), zeta, p, c_nu, c_h, sigma_eta, rho_endog, j_op, j_h, L)


def _exp_powers(t, m):
    """Matrix of exp(i pi j t) for j = 1..m via a running product (error ~1e-13)."""
    z = np.exp(1j * np.pi * np.asarray(t, dtype=float))
    return np.cumprod(np.broadcast_to(z[:, None], (z.size, m)), axis=1)


def _cos_series(x, coef, chunk=4096):
    # sum_j coef[j-1] cos(pi j x), chunked to bound memory
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty_like(flat)
    for s in range(0, flat.size, chunk):
        out[s:s + chunk] = _exp_powers(flat[s:s + chunk], len(coef)).real @ coef
    return out.reshape(x.shape)


def conditional_density(dgp: DgpSpec, x, w):
    x, w = np.broadcast_arrays(np.asarray(x, float), np.asarray(w, float))
    j = np.arange(1, dgp.j_op + 1)
    terms = np.cos(np.pi * x[..., None] * j) * np.cos(np.pi * w[..., None] * j)
    return 1.0 + terms @ (2.0 * dgp.nu)


def conditional_cdf(dgp: DgpSpec, x, w):
    """F(x | w) = x + sum_j 2 nu_j / (pi j) cos(pi j w) sin(pi j x)."""
    x, w = np.broadcast_arrays(np.asarray(x, float), np.asarray(w, float))
    _check_unit(x, "x")
    _check_unit(w, "w")
    j = np.arange(1, dgp.j_op + 1)
    terms = np.sin(np.pi * x[..., None] * j) * np.cos(np.pi * w[..., None] * j)
    return x + terms @ (2.0 * dgp.nu / (np.pi * j))


def _check_unit(a, name):
    if np.any((a < 0) | (a > 1)):
        raise InvalidInputError(f"{name} must lie in [0, 1]")


def make_rng(seed) -> np.random.Generator:
    """Philox stream keyed by an int or a tuple of nonnegative ints."""
    entropy = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(e) for e in entropy])))


def _invert_cdf(dgp: DgpSpec, v, w, max_iter=200):
    """Solve F(x | w) = v by Newton steps safeguarded with a bisection bracket."""
    amp = 2.0 * dgp.nu
    j = np.arange(1, dgp.j_op + 1)
    # nu is decreasing, so negligible terms form a tail
    m = max(1, int(np.sum(amp / (np.pi * j) > 1e-18)))
    j, amp = j[:m], amp[:m]
    cw = amp * _exp_powers(w, m).real
    sin_coef = cw / (np.pi * j)
    x = v.copy()
    lo = np.zeros_like(v)
    hi = np.ones_like(v)
    todo = np.arange(len(v))
    for _ in range(max_iter):
        xs = x[todo]
        E = _exp_powers(xs, m)
        r = xs + np.einsum("ij,ij->i", E.imag, sin_coef[todo]) - v[todo]
        dens = 1.0 + np.einsum("ij,ij->i", E.real, cw[todo])
        done = np.abs(r) < CDF_TOL
        if np.any(dens[~done] <= 0):
            raise NpivError("conditional density is not positive; cannot invert the CDF")
        keep = ~done
        todo, xs, r, dens = todo[keep], xs[keep], r[keep], dens[keep]
        if todo.size == 0:
            return x
        hi[todo] = np.where(r > 0, xs, hi[todo])
        lo[todo] = np.where(r < 0, xs, lo[todo])
        step = xs - r / dens
        inside = (step > lo[todo]) & (step < hi[todo])
        x[todo] = np.where(inside, step, 0.5 * (lo[todo] + hi[todo]))
    raise NpivError(f"CDF inversion did not converge for {todo.size} points")


def draw_sample(dgp: DgpSpec, n: int, seed) -> Sample:
    """Draw n observations; identical seeds give bitwise-identical samples."""
    if n < 4:
        raise InvalidInputError(f"need n >= 4, got {n}")
    rng = make_rng(seed)
    w = rng.random(n)
    v = rng.random(n)
    eta = rng.standard_normal(n)
    x = _invert_cdf(dgp, v, w)
    u = structural_error(dgp, x, w, eta)
    return Sample(dgp.h0(x) + u, x, w)


def structural_error(dgp: DgpSpec, x, w, eta):
    phi1 = lambda t: SQRT2 * np.cos(np.pi * t)  # noqa: E731
    return dgp.rho_endog * (phi1(x) - dgp.nu[0] * phi1(w)) + dgp.sigma_eta * eta


def true_functional(dgp: DgpSpec, mu: WeightFn = UNIFORM, method: str = "auto") -> float:
    """f(h0) = int h0^2 mu: Parseval sum for uniform mu, quadrature otherwise."""
    if method == "auto":
        method = "analytic" if mu.is_uniform else "quadrature"
    if method == "analytic":
        if not mu.is_uniform:
            raise InvalidInputError("the analytic path needs a uniform weight")
        return float(np.sum(dgp.h_coeffs ** 2))
    if method != "quadrature":
        raise InvalidInputError(f"unknown method {method!r}")
    n_panels = max(2 * dgp.j_h, 32)
    bp = np.unique(np.concatenate([np.linspace(0, 1, n_panels + 1), mu.breakpoints()]))
    x, wt = quadrature_rule(bp)
    return float(np.sum(wt * mu(x) * dgp.h0(x) ** 2))


def true_tau(dgp: DgpSpec, J: int) -> float:
    """Sieve ill-posedness 1/nu_J of the cosine sieve under the diagonal design."""
    if not 1 <= J <= dgp.j_op:
        raise InvalidInputError(f"J must lie in [1, {dgp.j_op}], got {J}")
    return float(1.0 / dgp.nu[J - 1])


def true_tau_sequence(dgp: DgpSpec, J_max: int | None = None) -> np.ndarray:
    J_max = dgp.j_op if J_max is None else J_max
    return 1.0 / dgp.nu[:J_max]


@dataclass(frozen=True)
class ExogeneityReport:
    coefficients: np.ndarray
    std_errors: np.ndarray
    max_abs_t: float
    corr_u_phi1: float
    corr_se: float

    @property
    def exogenous(self) -> bool:
        return self.max_abs_t <= 3.0

    @property
    def endogenous(self) -> bool:
        return abs(self.corr_u_phi1) > 3.0 * self.corr_se


def check_exogeneity(dgp: DgpSpec, n: int, seed, n_basis: int = 4) -> ExogeneityReport:
    """Regress U on (1, phi_1(W), ..., phi_k(W)) with HC0 standard errors.

    Also reports corr(U, phi_1(X)), which is nonzero when the design is
    endogenous.
    """
    s = draw_sample(dgp, n, seed)
    u = s.y - dgp.h0(s.x)
    k = np.arange(1, n_basis + 1)
    Z = np.column_stack([np.ones(n), SQRT2 * np.cos(np.pi * np.outer(s.w, k))])
    ZtZ_inv = np.linalg.inv(Z.T @ Z)
    beta = ZtZ_inv @ Z.T @ u
    resid = u - Z @ beta
    meat = (Z * resid[:, None] ** 2).T @ Z
    se = np.sqrt(np.diag(ZtZ_inv @ meat @ ZtZ_inv))
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(se > 0, np.abs(beta) / se, 0.0)
    phi1 = SQRT2 * np.cos(np.pi * s.x)
    if np.std(u) == 0:
        corr = 0.0
    else:
        corr = float(np.corrcoef(u, phi1)[0, 1])
    return ExogeneityReport(beta, se, float(np.max(t)), corr, float(1.0 / np.sqrt(n)))
