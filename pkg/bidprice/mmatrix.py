# bidprice/mmatrix.py
"""
Sampling and checking of nonsingular M-matrices.
"""
import logging
from enum import Enum

import numpy as np
from scipy import linalg

from config.settings import masking_settings

logger = logging.getLogger(__name__)


class MMatrixMode(str, Enum):
    DIAGONAL = "diagonal"
    GENERAL = "general"


def sample_m_matrix(dim: int, rng: np.random.Generator, mode: MMatrixMode = MMatrixMode.DIAGONAL) -> np.ndarray:
    """
    Sample a dim x dim nonsingular M-matrix.

    DIAGONAL draws a positive diagonal from [0.5, 2.0]. GENERAL draws a
    nonnegative N and returns s*I - N with s = (1 + u) * max row sum of N,
    u in (0, 1], which puts s above the spectral radius of N.
    """
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    mode = MMatrixMode(mode)
    if mode == MMatrixMode.DIAGONAL:
        return np.diag(rng.uniform(0.5, 2.0, size=dim))

    nonneg = rng.uniform(0.0, 1.0, size=(dim, dim))
    row_sum = float(nonneg.sum(axis=1).max())
    # 1 - U[0, 1) lies in (0, 1]
    u = 1.0 - rng.random()
    scale = (1.0 + u) * row_sum if row_sum > 0 else 1.0
    matrix = scale * np.eye(dim) - nonneg
    if not is_m_matrix(matrix):
        logger.warning(f"Sampled {dim}x{dim} matrix failed the inverse-nonnegativity check")
    return matrix


def is_m_matrix(matrix: np.ndarray, tol: float = masking_settings.mmatrix_check_tol) -> bool:
    """True when the matrix is a Z-matrix whose inverse is entrywise >= -tol."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[0] != matrix.shape[1]:
        return False
    off_diagonal = matrix - np.diag(np.diag(matrix))
    if np.any(off_diagonal > tol):
        return False
    try:
        inverse = linalg.inv(matrix)
    except linalg.LinAlgError:
        return False
    return bool(inverse.min() >= -tol)


def min_inverse_entry(matrix: np.ndarray) -> float:
    return float(linalg.inv(np.atleast_2d(matrix)).min())
