"""Monte Carlo replication engine, RMSE tables and empirical rate slopes.

Every (n, rep) cell draws its sample from the Philox stream keyed by
(master_seed, n, rep), so cells are reproducible individually and the raw
table does not depend on how cells are scheduled across worker processes.
"""
from __future__ import annotations

import csv
import io
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .basis import UNIFORM, BasisSpec, Family
from .dgp import DgpSpec, draw_sample, true_functional, true_tau_sequence
from .errors import ConfigError, InvalidInputError, NpivError
from .estimators import build_design, fit_npiv, quad_loo, quad_plugin
from .illposed import tau_hat
from .lepski import adaptive_estimate
from .rates import Regime, oracle_j0, optimal_j, rate_exponent, variance_proxy

ESTIMATORS = ("loo_oracle_j", "loo_optimal_j", "plugin", "adaptive")
CSV_COLUMNS = ("n", "rep", "estimator", "estimate", "j_used", "tau_hat", "wall_ms", "status")


@dataclass(frozen=True)
class ExperimentConfig:
    dgp: DgpSpec
    sample_sizes: tuple
    replications: int
    master_seed: int
    estimators: tuple = ("loo_optimal_j",)
    c0: float = 0.5
    C0: float = 1.0
    scale: float = 1.0
    family: Family = Family.COSINE
    order: int = 4
    k_offset: int = 0
    timing: bool = False
    name: str = "experiment"

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        try:
            object.__setattr__(self, "family", Family(self.family))
        except ValueError:
            raise ConfigError("experiment.family", f"unknown basis family {self.family!r}") from None
        if self.replications < 2:
            raise ConfigError("experiment.replications", f"need R >= 2, got {self.replications}")
        ns = self.sample_sizes
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("experiment.sample_sizes", "sample sizes must be nonempty and strictly ascending")
        if ns[0] < 16:
            raise ConfigError("experiment.sample_sizes", "sample sizes must be >= 16")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators or len(set(self.estimators)) != len(self.estimators):
            raise ConfigError("experiment.estimators", f"estimators must be distinct names from {ESTIMATORS}")
        if self.master_seed < 0:
            raise ConfigError("experiment.master_seed", "seed must be a nonnegative integer")
        if int(self.k_offset) != self.k_offset or self.k_offset < 0:
            raise ConfigError("experiment.k_offset", "must be a nonnegative integer")
        for key in ("c0", "C0", "scale"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"experiment.{key}", "must be positive")

    @property
    def truth(self) -> float:
        return true_functional(self.dgp)


@dataclass(frozen=True)
class ResultRow:
    n: int
    rep: int
    estimator: str
    estimate: float
    j_used: int | None
    tau_hat: float
    wall_ms: float | None
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _safe_tau(design):
    try:
        return tau_hat(design).tau_hat
    except (NpivError, ArithmeticError):
        return math.nan


def _run_cell(config: ExperimentConfig, n: int, rep: int):
    sample = draw_sample(config.dgp, n, (config.master_seed, n, rep))
    rate = config.dgp.rate_spec
    designs = {}

    def design(J):
        if J not in designs:
            designs[J] = build_design(sample, BasisSpec(config.family, J, config.order),
                                      BasisSpec(config.family, J + config.k_offset, config.order))
        return designs[J]

    def one(name):
        if name == "adaptive":
            res = adaptive_estimate(sample, config.family, UNIFORM, config.c0, config.order, config.k_offset)
            return res.f_hat, res.j_hat, res.candidate_set.reports[res.j_hat].tau_hat
        if name == "loo_oracle_j":
            J = oracle_j0(rate, true_tau_sequence(config.dgp), n, config.C0)
        else:
            J = optimal_j(rate, n, config.scale)
        if config.family is Family.BSPLINE:
            J = max(J, config.order)
        d = design(J)
        est = quad_plugin(fit_npiv(sample, d)) if name == "plugin" else quad_loo(sample, d)
        return est, J, _safe_tau(d)

    rows = []
    for name in config.estimators:
        t0 = time.perf_counter()
        try:
            est, J, tau = one(name)
            status = "ok"
        except (NpivError, ArithmeticError, np.linalg.LinAlgError) as exc:
            est, J, tau, status = math.nan, None, math.nan, f"error:{type(exc).__name__}"
        wall = (time.perf_counter() - t0) * 1e3 if config.timing else None
        rows.append(ResultRow(n, rep, name, float(est), J, float(tau), wall, status))
    return rows


def _run_cells(args):
    config, cells = args
    return [row for n, rep in cells for row in _run_cell(config, n, rep)]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list:
    """Run every (n, rep) cell; rows come back sorted by (n, rep, estimator order)."""
    cells = [(n, r) for n in config.sample_sizes for r in range(config.replications)]
    if workers <= 1:
        rows = _run_cells((config, cells))
    else:
        chunks = [cells[i::workers * 4] for i in range(workers * 4)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [row for part in pool.map(_run_cells, [(config, c) for c in chunks]) for row in part]
    order = {name: i for i, name in enumerate(config.estimators)}
    return sorted(rows, key=lambda r: (r.n, r.rep, order[r.estimator]))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append(ResultRow(
            n=int(rec["n"]), rep=int(rec["rep"]), estimator=rec["estimator"],
            estimate=float(rec["estimate"]), j_used=int(rec["j_used"]) if rec["j_used"] else None,
            tau_hat=float(rec["tau_hat"]), wall_ms=float(rec["wall_ms"]) if rec["wall_ms"] else None,
            status=rec["status"],
        ))
    return out


def rate_slope(sample_sizes, rmse):
    """OLS slope of log RMSE on log n and its standard error; nonpositive RMSEs are dropped."""
    n = np.asarray(sample_sizes, dtype=float)
    r = np.asarray(rmse, dtype=float)
    keep = np.isfinite(r) & (r > 0)
    if keep.sum() < 3:
        raise InvalidInputError(f"need >= 3 sample sizes with positive RMSE, got {int(keep.sum())}")
    x, y = np.log(n[keep]), np.log(r[keep])
    if np.ptp(y) == 0:
        return 0.0, 0.0
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


@dataclass
class CellSummary:
    n: int
    estimator: str
    rmse: float
    bias: float
    variance: float
    mean: float
    n_ok: int
    n_fail: int

    def as_dict(self):
        return dict(self.__dict__)


def summarize_cells(rows, truth: float) -> list:
    groups = defaultdict(list)
    fails = defaultdict(int)
    for r in rows:
        if r.ok:
            groups[(r.n, r.estimator)].append(r.estimate)
        else:
            fails[(r.n, r.estimator)] += 1
    out = []
    for key in sorted(set(groups) | set(fails)):
        est = np.asarray(groups.get(key, []), dtype=float)
        if est.size:
            err = est - truth
            mean = float(est.mean())
            rmse, bias, var = float(np.sqrt(np.mean(err ** 2))), mean - truth, float(np.mean((est - mean) ** 2))
        else:
            mean = rmse = bias = var = math.nan
        out.append(CellSummary(key[0], key[1], rmse, bias, var, mean, int(est.size), fails[key]))
    return out


def oracle_inequality_check(rows, dgp: DgpSpec, C0: float, c0: float) -> float:
    """Fraction of replications with |f_adapt - f| <= 3 c0 V(J0) + |f_J0 - f|.

    V uses the population tau of the design; a replication where either
    estimator failed counts as a miss.
    """
    truth = true_functional(dgp)
    taus = true_tau_sequence(dgp)
    by_cell = defaultdict(dict)
    for r in rows:
        if r.estimator in ("adaptive", "loo_oracle_j"):
            by_cell[(r.n, r.rep)][r.estimator] = r
    if not by_cell:
        raise InvalidInputError("oracle_inequality_check needs adaptive and loo_oracle_j rows")
    hits = 0
    for (n, _), cell in by_cell.items():
        a, o = cell.get("adaptive"), cell.get("loo_oracle_j")
        if a is None or o is None or not (a.ok and o.ok):
            continue
        J0 = oracle_j0(dgp.rate_spec, taus, n, C0)
        bound = 3 * c0 * float(variance_proxy(taus[J0 - 1], J0, n)) + abs(o.estimate - truth)
        hits += abs(a.estimate - truth) <= bound
    return hits / len(by_cell)


def compare_loo_plugin(rows, truth: float, first: str = "loo_optimal_j", second: str = "plugin") -> list:
    """Per-n RMSE ratio first/second and the mean paired difference of absolute errors."""
    pairs = defaultdict(dict)
    for r in rows:
        if r.estimator in (first, second) and r.ok:
            pairs[(r.n, r.rep)][r.estimator] = r.estimate
    by_n = defaultdict(list)
    for (n, _), cell in pairs.items():
        if first in cell and second in cell:
            by_n[n].append((cell[first], cell[second]))
    out = []
    for n in sorted(by_n):
        a, b = np.array(by_n[n]).T
        rmse_a, rmse_b = np.sqrt(np.mean((a - truth) ** 2)), np.sqrt(np.mean((b - truth) ** 2))
        out.append({
            "n": n,
            f"rmse_{first}": float(rmse_a),
            f"rmse_{second}": float(rmse_b),
            "rmse_ratio": float(rmse_a / rmse_b) if rmse_b > 0 else (1.0 if rmse_a == 0 else math.inf),
            "mean_abs_error_difference": float(np.mean(np.abs(a - truth) - np.abs(b - truth))),
        })
    return out


@dataclass
class RateReport:
    truth: float
    cells: list
    slopes: dict
    theoretical_exponent: float
    regime: Regime
    oracle_pass_rate: float | None
    failure_rate: float
    comparison: list = field(default_factory=list)

    def slope_of(self, estimator):
        return self.slopes.get(estimator)

    def as_dict(self):
        return {
            "truth": self.truth,
            "regime": self.regime.value,
            "theoretical_exponent": self.theoretical_exponent,
            "oracle_pass_rate": self.oracle_pass_rate,
            "failure_rate": self.failure_rate,
            "slopes": {k: (None if v is None else {"slope": v[0], "stderr": v[1]}) for k, v in self.slopes.items()},
            "cells": [c.as_dict() for c in self.cells],
            "loo_vs_plugin": self.comparison,
        }


def summarize(config: ExperimentConfig, rows) -> RateReport:
    truth = config.truth
    cells = summarize_cells(rows, truth)
    slopes = {}
    for est in config.estimators:
        mine = [c for c in cells if c.estimator == est]
        try:
            slopes[est] = rate_slope([c.n for c in mine], [c.rmse for c in mine])
        except InvalidInputError:
            slopes[est] = None
    t31 = None
    if {"adaptive", "loo_oracle_j"} <= set(config.estimators):
        t31 = oracle_inequality_check(rows, config.dgp, config.C0, config.c0)
    comparison = []
    if {"loo_optimal_j", "plugin"} <= set(config.estimators):
        comparison = compare_loo_plugin(rows, truth)
    failure_rate = sum(not r.ok for r in rows) / max(len(rows), 1)
    return RateReport(truth, cells, slopes, rate_exponent(config.dgp.rate_spec), config.dgp.regime,
                      t31, failure_rate, comparison)


__all__ = [
    "ESTIMATORS", "CSV_COLUMNS", "ExperimentConfig", "ResultRow", "RateReport", "CellSummary",
    "run_experiment", "rows_to_csv", "rows_from_csv", "rate_slope", "summarize_cells", "summarize",
    "oracle_inequality_check", "compare_loo_plugin",
]
