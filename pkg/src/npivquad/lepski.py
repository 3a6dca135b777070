"""Lepski-type data-driven choice of the sieve dimension.

Candidates run from J_min = floor(log log n) to J_max_hat, the first J at
which tau_hat_J zeta_J^2 sqrt(l(J) log n / n) reaches 1, with
l(J) = 0.1 log log J and zeta_J the larger sup-norm growth of the two bases.
Among the candidates the selected J is the smallest one whose estimate
agrees with every larger candidate up to c0 (V_hat(J) + V_hat(J')).
Instrument dimensions follow K = J + k_offset.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import UNIFORM, BasisSpec, Family, WeightFn, zeta_growth
from .errors import IllposednessOverflow, InvalidInputError
from .estimators import Sample, build_design, quad_loo
from .illposed import IllposednessReport, tau_hat

log = logging.getLogger(__name__)

ELL_FLOOR = 0.01
CAP_EXPONENT = 1 / 2.1
MIN_ADAPT_N = 16


def j_min(n: int) -> int:
    if n <= math.e:
        raise InvalidInputError(f"J_min needs n > e, got {n}")
    return max(1, int(math.floor(math.log(math.log(n)))))


def ell(J: int) -> float:
    """0.1 log log J, floored at 0.01 (the raw value is undefined or negative for J <= 2)."""
    if J <= 2:
        return ELL_FLOOR
    return max(0.1 * math.log(math.log(J)), ELL_FLOOR)


def j_cap(n: int) -> int:
    return int(math.floor(n ** CAP_EXPONENT))


@dataclass
class _DimensionCache:
    """Per-J designs and tau_hat reports shared by the J_max scan and the candidate pass."""

    sample: Sample
    family: Family
    order: int
    mu: WeightFn
    k_offset: int = 0
    designs: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)

    def spec(self, J):
        return BasisSpec(self.family, J, self.order)

    def instrument_spec(self, J):
        return BasisSpec(self.family, J + self.k_offset, self.order)

    def zeta(self, J):
        return max(zeta_growth(self.spec(J)), zeta_growth(self.instrument_spec(J)))

    def design(self, J):
        if J not in self.designs:
            self.designs[J] = build_design(self.sample, self.spec(J), self.instrument_spec(J), mu=self.mu)
        return self.designs[J]

    def report(self, J) -> IllposednessReport:
        if J not in self.reports:
            self.reports[J] = tau_hat(self.design(J))
        return self.reports[J]


def _lowest_dimension(family: Family, order: int, n: int) -> int:
    jm = j_min(n)
    if family is Family.BSPLINE:
        jm = max(jm, order)
    return jm


def _scan_j_max(cache: _DimensionCache, n: int):
    """Return (J_max_hat, overflow flag)."""
    lo = _lowest_dimension(cache.family, cache.order, n)
    start = max(lo + 1, 3)
    cap = min(j_cap(n), n - 1 - cache.k_offset)
    if cap < start:
        return max(cap, lo), False
    log_n = math.log(n)
    for J in range(start, cap + 1):
        try:
            tau = cache.report(J).tau_hat
        except IllposednessOverflow:
            log.info("tau_hat overflow at J=%d ends the J_max scan", J)
            return J, True
        z = cache.zeta(J)
        if tau * z ** 2 * math.sqrt(ell(J) * log_n / n) >= 1.0:
            return J, False
    return cap, False


def _check_offset(k_offset):
    if int(k_offset) != k_offset or k_offset < 0:
        raise InvalidInputError(f"k_offset must be a nonnegative integer, got {k_offset}")
    return int(k_offset)


def j_max_hat(sample: Sample, family=Family.COSINE, mu: WeightFn = UNIFORM, order: int = 4,
              k_offset: int = 0) -> int:
    cache = _DimensionCache(sample, Family(family), order, mu, _check_offset(k_offset))
    return _scan_j_max(cache, sample.n)[0]


@dataclass
class CandidateSet:
    j_min: int
    j_max_hat: int
    candidates: list
    reports: dict
    estimates: dict
    n: int
    overflow: bool = False
    k_offset: int = 0

    def __post_init__(self):
        if not self.candidates:
            raise InvalidInputError("candidate set is empty")
        self.candidates = sorted(self.candidates)
        missing = [J for J in self.candidates if J not in self.reports or J not in self.estimates]
        if missing:
            raise InvalidInputError(f"candidates {missing} lack a report or an estimate")


@dataclass
class AdaptiveResult:
    j_hat: int
    f_hat: float
    c0: float
    candidate_set: CandidateSet
    accepted: dict
    differences: np.ndarray
    thresholds: np.ndarray

    def as_dict(self):
        cs = self.candidate_set
        rows = []
        for J in cs.candidates:
            r = cs.reports[J]
            rows.append({"J": J, "f_hat": cs.estimates[J], "tau_hat": r.tau_hat, "s_hat": r.s_hat,
                         "v_hat": r.v_hat, "accepted": self.accepted[J]})
        return {
            "j_hat": self.j_hat,
            "f_hat": self.f_hat,
            "c0": self.c0,
            "n": cs.n,
            "j_min": cs.j_min,
            "j_max_hat": cs.j_max_hat,
            "j_max_overflow": cs.overflow,
            "k_offset": cs.k_offset,
            "candidates": rows,
            "pairwise": {
                "J": list(cs.candidates),
                "abs_difference": self.differences.tolist(),
                "threshold": self.thresholds.tolist(),
            },
        }


def select_j(candidate_set: CandidateSet, c0: float) -> AdaptiveResult:
    """Smallest candidate passing |f_J - f_J'| <= c0 (V(J) + V(J')) for every J' >= J."""
    if c0 < 0:
        raise InvalidInputError(f"c0 must be nonnegative, got {c0}")
    Js = sorted(candidate_set.candidates)
    f = np.array([candidate_set.estimates[J] for J in Js])
    v = np.array([candidate_set.reports[J].v_hat for J in Js])
    diff = np.abs(f[:, None] - f[None, :])
    thr = c0 * (v[:, None] + v[None, :])
    upper = np.triu(np.ones_like(diff, dtype=bool))
    ok = np.all((diff <= thr) | ~upper, axis=1)
    accepted = {J: bool(a) for J, a in zip(Js, ok)}
    j_hat = Js[int(np.argmax(ok))]
    return AdaptiveResult(j_hat=j_hat, f_hat=float(candidate_set.estimates[j_hat]), c0=c0,
                          candidate_set=candidate_set, accepted=accepted, differences=diff, thresholds=thr)


def adaptive_estimate(sample: Sample, family=Family.COSINE, mu: WeightFn = UNIFORM, c0: float = 0.5,
                      order: int = 4, k_offset: int = 0) -> AdaptiveResult:
    """Build the candidate set from the data, estimate at every candidate, then select."""
    n = sample.n
    if n < MIN_ADAPT_N:
        raise InvalidInputError(f"adaptive selection needs n >= {MIN_ADAPT_N}, got {n}")
    cache = _DimensionCache(sample, Family(family), order, mu, _check_offset(k_offset))
    jmax, overflow = _scan_j_max(cache, n)
    lo = _lowest_dimension(cache.family, order, n)
    reports, estimates = {}, {}
    for J in range(lo, jmax + 1):
        try:
            reports[J] = cache.report(J)
        except IllposednessOverflow:
            # an infeasible dimension and everything above it leaves the index set
            break
        estimates[J] = quad_loo(sample, cache.design(J))
    if not reports:
        raise IllposednessOverflow(f"tau_hat overflows already at J={lo}")
    cs = CandidateSet(j_min=lo, j_max_hat=jmax, candidates=list(reports), reports=reports,
                      estimates=estimates, n=n, overflow=overflow, k_offset=cache.k_offset)
    return select_j(cs, c0)
