"""Acceptance suite.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion.  Criteria 6 to 10 share full-scale Monte Carlo
runs of the shipped configs, executed once per session (about five minutes
on one core).
"""
import math
import time

import numpy as np
import pytest

from npivquad.basis import BasisSpec, Family, design_matrix
from npivquad.config import load_config, shipped_config_path
from npivquad.dgp import conditional_density, draw_sample, make_dgp, true_tau
from npivquad.estimators import Sample, ahat_matrix, build_design, fit_npiv, quad_loo, quad_loo_bruteforce
from npivquad.experiments import ExperimentConfig, rows_to_csv, run_experiment, summarize
from npivquad.illposed import population_s_and_tau, tau_hat
from npivquad.lepski import adaptive_estimate, j_cap, j_min
from npivquad.rates import rate_exponent

from conftest import random_sample

SHIPPED = ("mild_irregular", "mild_regular", "severe", "oracle_inequality")
SEED = 20240601


def _shipped_dgps():
    out = {}
    for name in SHIPPED:
        d = load_config(shipped_config_path(name)).dgp
        out.setdefault((d.regime, d.zeta, d.p, d.c_nu, d.j_op, d.j_h), (name, d))
    return [v for v in out.values()]


SHIPPED_DGPS = _shipped_dgps()


# ---------------------------------------------------------------- criterion 1

@pytest.mark.criterion(1, "U-statistic matches the pairwise oracle")
def test_loo_matches_bruteforce():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    for _ in range(50):
        n, J = int(rng.integers(50, 501)), int(rng.integers(2, 9))
        s = random_sample(rng, n)
        d = build_design(s, BasisSpec("cosine", J))
        A = ahat_matrix(d)
        fast, slow = quad_loo(s, d, A), quad_loo_bruteforce(s, d, A)
        assert fast == pytest.approx(slow, rel=1e-10, abs=1e-300)
    assert time.perf_counter() - t0 < 10


# ---------------------------------------------------------------- criterion 2

@pytest.mark.criterion(2, "2SLS reduces to least squares when Psi = B")
def test_algebraic_reductions():
    rng = np.random.default_rng(SEED + 1)
    t0 = time.perf_counter()
    for case in range(20):
        n, J = int(rng.integers(30, 400)), int(rng.integers(1, 9))
        family = (Family.COSINE, Family.LEGENDRE)[case % 2]
        x = rng.random(n)
        s = Sample(rng.standard_normal(n), x, x)
        spec = BasisSpec(family, J)
        d = build_design(s, spec)
        Psi = design_matrix(spec, x)
        np.testing.assert_allclose(ahat_matrix(d), n * np.linalg.inv(Psi.T @ Psi), rtol=1e-8, atol=1e-8)
        ls = np.linalg.lstsq(Psi, s.y, rcond=None)[0]
        np.testing.assert_allclose(fit_npiv(s, d).coefficients, ls, rtol=1e-8, atol=1e-8)
    assert time.perf_counter() - t0 < 5


# ---------------------------------------------------------------- criterion 3

def _midpoints(m):
    # the m-point midpoint rule integrates cos(pi a x) cos(pi b x) exactly for a + b < 2m
    return (np.arange(m) + 0.5) / m


@pytest.mark.criterion(3, "shipped designs are valid densities with diagonal moments")
@pytest.mark.parametrize("name,dgp", SHIPPED_DGPS, ids=[n for n, _ in SHIPPED_DGPS])
def test_dgp_validity(name, dgp):
    t0 = time.perf_counter()
    g = np.linspace(0, 1, 200)
    X, W = np.meshgrid(g, g, indexing="ij")
    assert conditional_density(dgp, X.ravel(), W.ravel()).min() >= -1e-12

    m = 2 * dgp.j_op + 16
    x = _midpoints(m)
    for w in g:
        assert np.mean(conditional_density(dgp, x, np.full(m, w))) == pytest.approx(1.0, abs=1e-8)

    J = min(12, dgp.j_op)
    X, W = np.meshgrid(x, x, indexing="ij")
    F = conditional_density(dgp, X.ravel(), W.ravel()).reshape(m, m)
    Phi = design_matrix(BasisSpec("cosine", J), x)
    S = Phi.T @ F @ Phi / m ** 2
    np.testing.assert_allclose(S, np.diag(dgp.nu[:J]), atol=1e-6)

    n = 10 ** 5
    s = draw_sample(dgp, n, (SEED, n, 0))
    k = min(4, dgp.j_op)
    Px = design_matrix(BasisSpec("cosine", k), s.x)
    Pw = design_matrix(BasisSpec("cosine", k), s.w)
    prod = Px[:, :, None] * Pw[:, None, :]
    mean, se = prod.mean(0), prod.std(0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(mean - np.diag(dgp.nu[:k])) <= 3 * se)
    assert time.perf_counter() - t0 < 60


# ---------------------------------------------------------------- criterion 4

@pytest.mark.criterion(4, "population s_J^-1 equals tau_J on diagonal designs and bounds it otherwise")
def test_population_illposedness():
    t0 = time.perf_counter()
    for _, dgp in SHIPPED_DGPS:
        for J in range(1, min(12, dgp.j_op) + 1):
            pop = population_s_and_tau(dgp, J)
            assert 1 / pop.s_J == pytest.approx(true_tau(dgp, J), abs=1e-6 * max(1.0, true_tau(dgp, J)))
            for b in (BasisSpec("legendre", J + 2), BasisSpec("cosine", J + 3)):
                other = population_s_and_tau(dgp, J, b_spec=b)
                assert 1 / other.s_J >= other.tau_J - 1e-6
        for J in range(4, 9):
            pop = population_s_and_tau(dgp, J, psi_spec=BasisSpec("bspline", J), b_spec=BasisSpec("cosine", J + 4))
            assert 1 / pop.s_J >= pop.tau_J - 1e-6
    assert time.perf_counter() - t0 < 30


# ---------------------------------------------------------------- criterion 5

@pytest.mark.criterion(5, "tau_hat consistency at J = 4")
def test_tau_hat_consistency():
    dgp = make_dgp("mild", 2, 1, 0.2)
    assert true_tau(dgp, 4) == pytest.approx(80.0)
    t0 = time.perf_counter()
    med = []
    for n in (2000, 8000, 32000):
        dev = []
        for r in range(50):
            s = draw_sample(dgp, n, (SEED, n, r))
            dev.append(abs(tau_hat(build_design(s, BasisSpec("cosine", 4))).tau_hat / 80 - 1))
        med.append(float(np.median(dev)))
    print(f"median |tau_hat/80 - 1| at n = 2000, 8000, 32000: {med}")
    assert time.perf_counter() - t0 < 300
    assert med[1] <= med[0] and med[2] <= med[1]
    assert med[2] <= 0.15


# ---------------------------------------------------------- criteria 6 to 10

@pytest.fixture(scope="module")
def full_runs():
    out = {}
    for name in SHIPPED:
        cfg = load_config(shipped_config_path(name))
        t0 = time.perf_counter()
        rows = run_experiment(cfg)
        out[name] = (cfg, rows, summarize(cfg, rows), time.perf_counter() - t0)
    return out


def _rmse(report, estimator):
    cells = sorted((c for c in report.cells if c.estimator == estimator), key=lambda c: c.n)
    return [c.n for c in cells], np.array([c.rmse for c in cells])


@pytest.mark.criterion(6, "mild irregular slope within 0.15 of -4/13")
def test_mild_irregular_rate(full_runs):
    cfg, _, rep, secs = full_runs["mild_irregular"]
    assert rate_exponent(cfg.dgp.rate_spec) == pytest.approx(4 / 13)
    slope = rep.slope_of("loo_optimal_j")[0]
    print(f"mild irregular slope {slope:.4f}, RMSE {_rmse(rep, 'loo_optimal_j')[1]}")
    assert abs(slope + 4 / 13) <= 0.15
    assert secs <= 30 * 60


@pytest.mark.criterion(7, "mild regular slope within 0.15 of -1/2")
def test_mild_regular_rate(full_runs):
    cfg, _, rep, secs = full_runs["mild_regular"]
    assert rate_exponent(cfg.dgp.rate_spec) == pytest.approx(0.5)
    slope = rep.slope_of("loo_optimal_j")[0]
    print(f"mild regular slope {slope:.4f}, RMSE {_rmse(rep, 'loo_optimal_j')[1]}")
    assert abs(slope + 0.5) <= 0.15
    assert secs <= 30 * 60


@pytest.mark.criterion(8, "severe design: decreasing RMSE, log-rate ratio, |slope| <= 0.25")
def test_severe_rmse_decreasing(full_runs):
    cfg, _, rep, secs = full_runs["severe"]
    ns, rmse = _rmse(rep, "loo_optimal_j")
    assert ns == [1000, 4000, 16000]
    print(f"severe RMSE {rmse}")
    assert np.all(np.diff(rmse) < 0)
    assert secs <= 20 * 60


@pytest.mark.criterion(8, "severe design: decreasing RMSE, log-rate ratio, |slope| <= 0.25")
def test_severe_ratio(full_runs):
    _, _, rep, _ = full_runs["severe"]
    _, rmse = _rmse(rep, "loo_optimal_j")
    bound = (math.log(16000) / math.log(1000)) ** -2 * 0.5
    print(f"severe ratio {rmse[-1] / rmse[0]:.4f} vs bound {bound:.4f}")
    assert rmse[-1] / rmse[0] >= bound


@pytest.mark.criterion(8, "severe design: decreasing RMSE, log-rate ratio, |slope| <= 0.25")
def test_severe_slope_shallow(full_runs):
    _, _, rep, _ = full_runs["severe"]
    slope = rep.slope_of("loo_optimal_j")[0]
    print(f"severe slope {slope:.4f}")
    assert abs(slope) <= 0.25


@pytest.mark.criterion(9, "oracle inequality pass fraction >= 0.90")
def test_oracle_inequality(full_runs):
    cfg, _, rep, secs = full_runs["oracle_inequality"]
    assert cfg.sample_sizes == (5000,) and cfg.replications == 500 and cfg.c0 == 0.5 and cfg.C0 == 1.0
    print(f"pass fraction {rep.oracle_pass_rate:.3f}")
    assert rep.oracle_pass_rate >= 0.90
    assert secs <= 20 * 60


@pytest.mark.criterion(10, "Lepski sanity")
def test_lepski_range_and_monotonicity():
    for dgp, n in ((make_dgp("severe", 1, 1, 0.3), 5000), (make_dgp("mild", 2, 1, 0.3), 2000)):
        for r in range(20):
            s = draw_sample(dgp, n, (SEED, n, r))
            js = []
            for c0 in (0.1, 0.5, 2.0):
                res = adaptive_estimate(s, "cosine", c0=c0, k_offset=4)
                cs = res.candidate_set
                assert cs.j_min <= res.j_hat <= cs.j_max_hat
                js.append(res.j_hat)
            assert js[0] >= js[1] >= js[2]


@pytest.mark.criterion(10, "Lepski sanity")
def test_lepski_in_experiments(full_runs):
    _, rows, _, _ = full_runs["oracle_inequality"]
    adaptive = [r for r in rows if r.estimator == "adaptive" and r.ok]
    assert len(adaptive) == 500
    assert all(j_min(r.n) <= r.j_used <= j_cap(r.n) for r in adaptive)


@pytest.mark.criterion(10, "Lepski sanity")
def test_failure_rate(full_runs):
    rows = [r for _, rs, _, _ in full_runs.values() for r in rs]
    rate = sum(not r.ok for r in rows) / len(rows)
    print(f"failure rate {rate:.5f} over {len(rows)} rows")
    assert rate < 0.01


# --------------------------------------------------------------- criterion 11

@pytest.mark.criterion(11, "permutation, bilinearity and bitwise determinism")
def test_invariances():
    rng = np.random.default_rng(SEED + 11)
    for _ in range(20):
        n, J = int(rng.integers(50, 400)), int(rng.integers(2, 9))
        s = random_sample(rng, n)
        d = build_design(s, BasisSpec("cosine", J), BasisSpec("cosine", J + int(rng.integers(0, 3))))
        base = quad_loo(s, d)
        perm = rng.permutation(n)
        ps = s.permuted(perm)
        pd = build_design(ps, d.psi_spec, d.b_spec)
        assert quad_loo(ps, pd) == pytest.approx(base, rel=1e-10)
        a = float(rng.uniform(-3, 3))
        assert quad_loo(s.with_y(a * s.y), d) == pytest.approx(a * a * base, rel=1e-10)


@pytest.mark.criterion(11, "permutation, bilinearity and bitwise determinism")
def test_experiment_determinism():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(dgp=make_dgp("mild", 2, 1, 0.3), sample_sizes=(200, 400), replications=6,
                           master_seed=SEED, estimators=("loo_optimal_j", "loo_oracle_j", "plugin", "adaptive"),
                           scale=0.69, k_offset=4)
    first = rows_to_csv(run_experiment(cfg))
    assert rows_to_csv(run_experiment(cfg)) == first
    assert rows_to_csv(run_experiment(cfg, workers=2)) == first
    assert rows_to_csv(run_experiment(cfg, workers=3)) == first
    assert time.perf_counter() - t0 < 300
