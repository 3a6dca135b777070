"""Theoretical rate calculator: minimax rates, rate-optimal and oracle sieve dimensions."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, RangeExhaustedError


class Regime(str, enum.Enum):
    MILD = "mild"
    SEVERE = "severe"


@dataclass(frozen=True)
class RateSpec:
    """Smoothness p of h0 and ill-posedness exponent zeta; d is fixed to 1."""

    regime: Regime
    p: float
    zeta: float
    d: int = 1
    L: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not (self.p > 0 and self.zeta > 0 and self.L > 0):
            raise InvalidInputError("p, zeta and L must be positive")
        if self.d != 1:
            raise InvalidInputError("only d = 1 is implemented")

    @property
    def irregular(self) -> bool:
        """Mild case below the elbow p <= zeta + d/4 (nonparametric rate)."""
        return self.regime is Regime.MILD and self.p <= self.zeta + self.d / 4


def rate_exponent(rate: RateSpec) -> float:
    """Exponent a in the lower bound.

    Mild: r_n = n^{-a}. Severe: r_n = (log n)^{-a}.
    """
    p, z, d = rate.p, rate.zeta, rate.d
    if rate.regime is Regime.SEVERE:
        return 2 * p / z
    if p <= z + d / 4:
        return 4 * p / (4 * (p + z) + d)
    return 0.5


def minimax_rate(rate: RateSpec, n: float) -> float:
    if n < 3:
        raise InvalidInputError(f"need n >= 3, got {n}")
    a = rate_exponent(rate)
    if rate.regime is Regime.SEVERE:
        return math.log(n) ** (-a)
    return n ** (-a)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def optimal_j(rate: RateSpec, n: float, scale: float = 1.0) -> int:
    """Rate-optimal sieve dimension, scaled and rounded, at least 1."""
    p, z, d = rate.p, rate.zeta, rate.d
    if rate.regime is Regime.MILD:
        base = n ** (2 * d / (4 * (p + z) + d))
    else:
        core = math.log(n) - (4 * p + d) / (2 * z) * math.log(math.log(n))
        if core <= 0:
            raise InvalidInputError(
                f"severe case needs log n > ((4p+d)/(2 zeta)) log log n; n={n} is too small"
            )
        base = core ** (d / z)
    return max(1, _round_half_up(scale * base))


def variance_proxy(tau, J, n):
    """V(J) = tau_J^2 sqrt(J log n) / n."""
    return np.asarray(tau) ** 2 * np.sqrt(np.asarray(J) * math.log(n)) / n


def oracle_j0(rate: RateSpec, tau_seq, n: float, C0: float = 1.0) -> int:
    """Smallest J with J^{-2p/d} <= C0 V(J), searching J = 1..len(tau_seq)."""
    tau = np.asarray(tau_seq, dtype=float)
    if tau.ndim != 1 or tau.size == 0 or np.any(tau <= 0):
        raise InvalidInputError("tau_seq must be a nonempty positive vector")
    if np.any(np.diff(tau) < 0):
        raise InvalidInputError("tau_seq must be nondecreasing")
    if not C0 > 0:
        raise InvalidInputError("C0 must be positive")
    J = np.arange(1, tau.size + 1)
    ok = J ** (-2 * rate.p / rate.d) <= C0 * variance_proxy(tau, J, n)
    if not ok.any():
        raise RangeExhaustedError(f"no J <= {tau.size} satisfies the oracle inequality; extend tau_seq")
    return int(J[np.argmax(ok)])
