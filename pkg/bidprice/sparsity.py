# bidprice/sparsity.py
"""
Sparsity-preserving keys: a covering LP picks the nonzero pattern of D and a
Hadamard product with positive random entries fills it in.
"""
import logging
from typing import Mapping, Optional

import numpy as np
import pandas as pd
from scipy import sparse

from config.settings import masking_settings
from .config import SPARSITY_COL, SPARSITY_ROW
from .exceptions import SparsityError
from .lp import LinearProgram, LpBuilder, Relation, solve
from .masking import MaskingKeys, Source, full_column_rank, party_blocks_of

logger = logging.getLogger(__name__)

INTEGRALITY_TOL = 1e-6
NNZ_TOL = 1e-12


def sparsity_weights(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Cost of a nonzero in row i of U: one for U itself plus the fill it causes in A U and B U."""
    return 1.0 + np.count_nonzero(A, axis=0) + np.count_nonzero(B, axis=0)


def build_sparsity_lp(A: np.ndarray, B: np.ndarray, s: int) -> LinearProgram:
    """
    min sum_ij w_i U_ij  s.t.  every row and every column of U covered once,
    as a maximisation over the row-major flattening of the n x s matrix U.

    U <= 1 is implied at any optimum since all weights are positive.
    """
    n = A.shape[1]
    if B.shape[1] != n:
        raise SparsityError(f"A has {n} columns but B has {B.shape[1]}")
    if s < n:
        raise SparsityError(f"s_k must be at least n_k, got s_k={s}, n_k={n}")

    weights = sparsity_weights(A, B)
    builder = LpBuilder("sparsity")
    builder.add_variables("U", -np.repeat(weights, s))
    row_cover = sparse.kron(sparse.identity(n), np.ones((1, s)), format="csr")
    col_cover = sparse.kron(np.ones((1, n)), sparse.identity(s), format="csr")
    builder.add_rows(SPARSITY_ROW, Relation.GE, np.ones(n), {"U": row_cover})
    builder.add_rows(SPARSITY_COL, Relation.GE, np.ones(s), {"U": col_cover})
    return builder.build(use_sparse=True)


def solve_sparsity(A: np.ndarray, B: np.ndarray, s: int, backend: Optional[str] = None) -> np.ndarray:
    """
    Binary covering pattern U* (n x s) of minimum fill.

    The covering matrix is totally unimodular, so the LP vertex must be
    integral; anything else is reported as an error.
    """
    lp = build_sparsity_lp(A, B, s)
    solution = solve(lp, backend=backend)
    if not solution.optimal:
        raise SparsityError(f"Sparsity LP ended {solution.status.value}")

    pattern = solution.x.reshape(A.shape[1], s)
    rounded = np.round(pattern)
    fractional = np.argwhere(np.abs(pattern - rounded) > INTEGRALITY_TOL)
    if fractional.size:
        dump = ", ".join(f"U[{i},{j}]={pattern[i, j]:.6f}" for i, j in fractional[:10])
        logger.error(f"Sparsity LP vertex is not integral: {dump}")
        raise SparsityError(f"Sparsity LP vertex is not integral ({len(fractional)} entries): {dump}")
    return np.clip(rounded, 0.0, 1.0)


def randomize(pattern: np.ndarray, rng: np.random.Generator,
              attempts: int = masking_settings.max_resamples) -> np.ndarray:
    """D with D' = U* (Hadamard) R, R uniform on [0.5, 2.0], rank-checked."""
    for attempt in range(attempts + 1):
        D = (pattern * rng.uniform(0.5, 2.0, size=pattern.shape)).T
        if full_column_rank(D):
            return D
        logger.debug(f"Sparse key is rank deficient, resampling (attempt {attempt + 1})")
    raise SparsityError(f"Sparse key pattern {pattern.shape} stays rank deficient after {attempts} resamples")


def sparse_key(A: np.ndarray, B: np.ndarray, s: int, rng: np.random.Generator,
               attempts: int = masking_settings.max_resamples) -> np.ndarray:
    if A.shape[1] == 0:
        return np.zeros((s, 0))
    return randomize(solve_sparsity(A, B, s), rng, attempts)


def _nnz(matrix: np.ndarray) -> int:
    return int(np.sum(np.abs(matrix) > NNZ_TOL))


def sparsity_report(
    source: Source,
    keys_sparse: Mapping[str, MaskingKeys],
    keys_dense: Mapping[str, MaskingKeys],
    keys_identity: Optional[Mapping[str, MaskingKeys]] = None,
) -> pd.DataFrame:
    """
    Nonzero counts and densities of A D' and B D' per party and key mode.

    Columns: party, mode, nnz_A, nnz_B, density, rank_ok.
    """
    keysets = {"sparse": keys_sparse, "dense": keys_dense}
    if keys_identity is not None:
        keysets["identity"] = keys_identity

    rows = []
    for mode, keyset in keysets.items():
        for party, keys in keyset.items():
            pb = party_blocks_of(source, party)
            A = keys.permuted(pb.A, axis=1) @ keys.D.T
            B = keys.permuted(pb.B, axis=1) @ keys.D.T
            size = A.size + B.size
            rows.append({
                "party": party,
                "mode": mode,
                "nnz_A": _nnz(A),
                "nnz_B": _nnz(B),
                "density": (_nnz(A) + _nnz(B)) / size if size else 0.0,
                "rank_ok": full_column_rank(keys.D),
            })
    report = pd.DataFrame(rows, columns=["party", "mode", "nnz_A", "nnz_B", "density", "rank_ok"])
    logger.info(f"Sparsity report covers {len(report)} party/mode pairs")
    return report
