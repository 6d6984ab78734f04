# bidprice/highs.py
"""
HiGHS adapter behind the same contract as the in-house simplex.
"""
import logging

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from config.settings import SolverSettings, solver_settings
from .exceptions import SolverError
from .lp import LinearProgram, LpStatus, RawSolution, Relation

logger = logging.getLogger(__name__)

_STATUS = {
    0: LpStatus.OPTIMAL,
    1: LpStatus.ITERATION_LIMIT,
    2: LpStatus.INFEASIBLE,
    3: LpStatus.UNBOUNDED,
}


class HighsSolver:
    """Solve LinearPrograms with scipy's HiGHS interface."""

    def __init__(self, settings: SolverSettings = solver_settings):
        self.method = settings.highs_method
        self.max_iterations = settings.max_iterations

    def solve(self, lp: LinearProgram) -> RawSolution:
        """
        Solve a maximisation program.

        linprog minimises -cost with >= rows negated into <= rows. Its
        marginals are sensitivities of the minimum, so the duals in our
        dZ/db convention are -marginal on <= and = rows, and +marginal on the
        negated >= rows.

        Returns:
            RawSolution with primal point and row duals when optimal
        """
        relations = np.array([r.value for r in lp.relations])
        le = np.flatnonzero(relations == Relation.LE.value)
        ge = np.flatnonzero(relations == Relation.GE.value)
        eq = np.flatnonzero(relations == Relation.EQ.value)
        ub_rows = np.concatenate([le, ge])
        ub_sign = np.concatenate([np.ones(le.shape[0]), -np.ones(ge.shape[0])])

        matrix = sparse.csr_matrix(lp.matrix) if lp.is_sparse else lp.dense_matrix()
        A_ub = b_ub = A_eq = b_eq = None
        if ub_rows.shape[0]:
            scale = sparse.diags(ub_sign) if lp.is_sparse else ub_sign[:, None]
            A_ub = scale @ matrix[ub_rows] if lp.is_sparse else scale * matrix[ub_rows]
            b_ub = ub_sign * lp.rhs[ub_rows]
        if eq.shape[0]:
            A_eq = matrix[eq]
            b_eq = lp.rhs[eq]
        bounds = [(None, None) if free else (0, None) for free in lp.free]

        try:
            result = linprog(
                -lp.cost,
                A_ub=A_ub,
                b_ub=b_ub,
                A_eq=A_eq,
                b_eq=b_eq,
                bounds=bounds,
                method=self.method,
                options={"maxiter": self.max_iterations},
            )
        except ValueError as e:
            logger.error(f"HiGHS rejected {lp.name}: {e}")
            raise SolverError(f"HiGHS rejected {lp.name}: {e}") from e

        status = _STATUS.get(result.status)
        if status is None:
            logger.error(f"HiGHS failed on {lp.name}: {result.message}")
            raise SolverError(f"HiGHS failed on {lp.name}: {result.message}")
        if status != LpStatus.OPTIMAL:
            return RawSolution(status, None, None, int(getattr(result, "nit", 0)))

        y = np.zeros(lp.n_rows)
        if ub_rows.shape[0]:
            y[ub_rows] = -ub_sign * result.ineqlin.marginals
        if eq.shape[0]:
            y[eq] = -result.eqlin.marginals
        return RawSolution(LpStatus.OPTIMAL, np.asarray(result.x, dtype=float), y, int(result.nit))
