"""Minimax and adaptive estimation of int h0^2 mu in nonparametric IV models."""

__version__ = "0.1.0"

from .basis import UNIFORM, BasisSpec, Family, WeightFn, design_matrix, gram_matrix  # noqa: E402
from .dgp import DgpSpec, draw_sample, make_dgp, true_functional, true_tau  # noqa: E402
from .estimators import Sample, build_design, fit_npiv, quad_loo, quad_plugin  # noqa: E402
from .illposed import tau_hat  # noqa: E402
from .lepski import adaptive_estimate  # noqa: E402
from .rates import RateSpec, Regime, minimax_rate, optimal_j, oracle_j0  # noqa: E402

__all__ = [
    "__version__", "UNIFORM", "BasisSpec", "Family", "WeightFn", "design_matrix", "gram_matrix",
    "DgpSpec", "draw_sample", "make_dgp", "true_functional", "true_tau", "Sample", "build_design",
    "fit_npiv", "quad_loo", "quad_plugin", "tau_hat", "adaptive_estimate", "RateSpec", "Regime",
    "minimax_rate", "optimal_j", "oracle_j0",
]
