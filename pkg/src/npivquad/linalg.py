"""Dense linear-algebra helpers with explicit rank cutoffs."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TolerancePolicy:
    """Singular values (or eigenvalues) below ``rel_rank_tol * max`` count as zero."""

    rel_rank_tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.rel_rank_tol < 1.0:
            raise InvalidInputError(f"rel_rank_tol must lie in (0, 1), got {self.rel_rank_tol}")


DEFAULT_TOL = TolerancePolicy()


def sym_inv_sqrt(M, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Inverse square root of a symmetric PSD matrix.

    Eigenvalues under the cutoff are clamped up to the cutoff rather than
    dropped, so the result stays full rank. A warning is logged when that
    happens.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"sym_inv_sqrt needs a square matrix, got shape {M.shape}")
    scale = np.max(np.abs(M))
    if scale == 0.0 or not np.isfinite(scale):
        raise InvalidInputError("sym_inv_sqrt needs a nonzero finite matrix")
    if np.max(np.abs(M - M.T)) > 1e-8 * scale:
        raise InvalidInputError("sym_inv_sqrt: matrix is not symmetric")
    lam, Q = np.linalg.eigh(0.5 * (M + M.T))
    cutoff = tol.rel_rank_tol * lam[-1]
    if lam[0] < -cutoff:
        raise InvalidInputError(f"sym_inv_sqrt: matrix is indefinite (eigenvalue {lam[0]:.3e})")
    if lam[0] < cutoff:
        log.warning("sym_inv_sqrt: clamping %d eigenvalue(s) to %.3e", int(np.sum(lam < cutoff)), cutoff)
        lam = np.maximum(lam, cutoff)
    R = (Q / np.sqrt(lam)) @ Q.T
    return 0.5 * (R + R.T)


def min_singular_value(M) -> float:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def svd_pinv(M, tol: TolerancePolicy = DEFAULT_TOL):
    """Moore-Penrose inverse with a relative cutoff; also returns the numerical rank."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(M.T.shape), 0
    keep = s > tol.rel_rank_tol * s[0]
    inv = (Vt[keep].T / s[keep]) @ U[:, keep].T
    return inv, int(keep.sum())


def pinv_left(M, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Left pseudoinverse (M'M)^- M' of a tall matrix, computed via SVD."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] < M.shape[1]:
        raise InvalidInputError(f"pinv_left needs rows >= columns, got shape {M.shape}")
    return svd_pinv(M, tol)[0]
