# bidprice/simplex.py
"""
Dense two-phase revised simplex with explicit basis inverse.

Free variables are split into a difference of nonnegative parts, rows with a
negative right-hand side are negated, and every row receives a slack, a
surplus plus artificial, or an artificial. Pricing is Dantzig's rule until a
run of degenerate pivots switches the phase to Bland's rule.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from config.settings import SolverSettings, solver_settings
from .exceptions import SolverError
from .lp import LinearProgram, LpStatus, RawSolution, Relation

logger = logging.getLogger(__name__)


@dataclass
class _StandardForm:
    """max c'x, Ax = b, x >= 0, b >= 0 with bookkeeping back to the source LP."""
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    n_structural: int
    artificial: np.ndarray
    basis: np.ndarray
    row_sign: np.ndarray
    free_index: np.ndarray


class DenseSimplex:
    """Revised simplex backend for small and medium dense programs."""

    def __init__(self, settings: SolverSettings = solver_settings):
        self.settings = settings
        self.tol = settings.pivot_tol

    def solve(self, lp: LinearProgram) -> RawSolution:
        form = self._standard_form(lp)
        m = form.b.shape[0]
        iterations = 0

        basis = form.basis.copy()
        binv = np.eye(m)

        if form.artificial.any():
            phase_one_cost = np.where(form.artificial, -1.0, 0.0)
            status, basis, binv, used = self._iterate(form, phase_one_cost, basis, binv, allow=np.ones_like(form.artificial))
            iterations += used
            if status == LpStatus.ITERATION_LIMIT:
                return RawSolution(LpStatus.ITERATION_LIMIT, None, None, iterations)
            x_b = binv @ form.b
            infeasibility = float(np.sum(x_b[form.artificial[basis]]))
            if infeasibility > self.settings.eps_feas * (1.0 + float(np.max(np.abs(form.b), initial=0.0))):
                logger.debug(f"{lp.name}: phase one ends with infeasibility {infeasibility:.3e}")
                return RawSolution(LpStatus.INFEASIBLE, None, None, iterations)
            basis, binv = self._drive_out_artificials(form, basis, binv)

        allow = ~form.artificial
        status, basis, binv, used = self._iterate(form, form.c, basis, binv, allow=allow)
        iterations += used
        if status != LpStatus.OPTIMAL:
            return RawSolution(status, None, None, iterations)

        binv = self._refactor(form.A, basis)
        x_full = np.zeros(form.A.shape[1])
        x_full[basis] = binv @ form.b
        y_std = form.c[basis] @ binv

        n = lp.n_vars
        x = x_full[:n].copy()
        x[form.free_index] -= x_full[n:n + form.free_index.shape[0]]
        y = form.row_sign * y_std
        logger.debug(f"{lp.name}: optimal after {iterations} iterations")
        return RawSolution(LpStatus.OPTIMAL, x, y, iterations)

    def _standard_form(self, lp: LinearProgram) -> _StandardForm:
        A = lp.dense_matrix()
        b = lp.rhs.astype(float).copy()
        c = lp.cost.astype(float).copy()
        m = A.shape[0]

        free_index = np.flatnonzero(lp.free)
        A = np.hstack([A, -A[:, free_index]])
        c = np.concatenate([c, -c[free_index]])
        n_structural = A.shape[1]

        relations = list(lp.relations)
        row_sign = np.ones(m)
        for i in range(m):
            if b[i] < 0:
                row_sign[i] = -1.0
                A[i] = -A[i]
                b[i] = -b[i]
                if relations[i] == Relation.LE:
                    relations[i] = Relation.GE
                elif relations[i] == Relation.GE:
                    relations[i] = Relation.LE

        slack_rows = [i for i in range(m) if relations[i] != Relation.EQ]
        artificial_rows = [i for i in range(m) if relations[i] != Relation.LE]

        slack = np.zeros((m, len(slack_rows)))
        for col, i in enumerate(slack_rows):
            slack[i, col] = 1.0 if relations[i] == Relation.LE else -1.0
        artificial_cols = np.zeros((m, len(artificial_rows)))
        for col, i in enumerate(artificial_rows):
            artificial_cols[i, col] = 1.0

        A_std = np.hstack([A, slack, artificial_cols])
        c_std = np.concatenate([c, np.zeros(len(slack_rows) + len(artificial_rows))])
        artificial = np.zeros(A_std.shape[1], dtype=bool)
        artificial[n_structural + len(slack_rows):] = True

        basis = np.empty(m, dtype=int)
        slack_of = {i: n_structural + col for col, i in enumerate(slack_rows)}
        artificial_of = {i: n_structural + len(slack_rows) + col for col, i in enumerate(artificial_rows)}
        for i in range(m):
            basis[i] = slack_of[i] if relations[i] == Relation.LE else artificial_of[i]

        return _StandardForm(A_std, b, c_std, n_structural, artificial, basis, row_sign, free_index)

    def _refactor(self, A: np.ndarray, basis: np.ndarray) -> np.ndarray:
        if basis.shape[0] == 0:
            return np.zeros((0, 0))
        try:
            return linalg.inv(A[:, basis])
        except linalg.LinAlgError as e:
            logger.error(f"Basis refactorization failed: {e}")
            raise SolverError(f"Singular basis during refactorization: {e}") from e

    def _iterate(self, form: _StandardForm, cost: np.ndarray, basis: np.ndarray,
                 binv: np.ndarray, allow: np.ndarray):
        """Run simplex pivots on a fixed cost vector until optimal or unbounded."""
        A, b = form.A, form.b
        in_basis = np.zeros(A.shape[1], dtype=bool)
        in_basis[basis] = True
        bland = False
        degenerate_run = 0

        for iteration in range(self.settings.max_iterations):
            if iteration and iteration % self.settings.refactor_every == 0:
                binv = self._refactor(A, basis)
            x_b = binv @ b
            y = cost[basis] @ binv
            reduced = cost - y @ A
            eligible = allow & ~in_basis & (reduced > self.tol)
            if not eligible.any():
                return LpStatus.OPTIMAL, basis, binv, iteration

            if bland:
                entering = int(np.flatnonzero(eligible)[0])
            else:
                entering = int(np.argmax(np.where(eligible, reduced, -np.inf)))

            direction = binv @ A[:, entering]
            positive = direction > self.tol
            if not positive.any():
                return LpStatus.UNBOUNDED, basis, binv, iteration

            ratios = np.full(direction.shape[0], np.inf)
            ratios[positive] = x_b[positive] / direction[positive]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + self.tol)
            if bland:
                leaving = int(ties[np.argmin(basis[ties])])
            else:
                leaving = int(ties[np.argmax(direction[ties])])

            if best <= self.tol:
                degenerate_run += 1
                if not bland and degenerate_run >= self.settings.bland_threshold:
                    logger.debug(f"Switching to Bland's rule after {degenerate_run} degenerate pivots")
                    bland = True
            else:
                degenerate_run = 0

            binv = self._pivot(binv, direction, leaving)
            in_basis[basis[leaving]] = False
            in_basis[entering] = True
            basis[leaving] = entering

        logger.warning(f"Simplex iteration limit {self.settings.max_iterations} reached")
        return LpStatus.ITERATION_LIMIT, basis, binv, self.settings.max_iterations

    @staticmethod
    def _pivot(binv: np.ndarray, direction: np.ndarray, leaving: int) -> np.ndarray:
        """Eta update of the basis inverse."""
        binv = binv.copy()
        binv[leaving] /= direction[leaving]
        for i in range(binv.shape[0]):
            if i != leaving and direction[i] != 0.0:
                binv[i] -= direction[i] * binv[leaving]
        return binv

    def _drive_out_artificials(self, form: _StandardForm, basis: np.ndarray, binv: np.ndarray):
        """Pivot basic artificials out at zero level; those on redundant rows stay."""
        A = form.A
        for position in range(basis.shape[0]):
            if not form.artificial[basis[position]]:
                continue
            row = binv[position] @ A
            row[form.artificial] = 0.0
            row[basis] = 0.0
            candidates = np.flatnonzero(np.abs(row) > self.tol)
            if candidates.shape[0] == 0:
                logger.debug(f"Row {position} is redundant; artificial stays basic at zero")
                continue
            entering = int(candidates[np.argmax(np.abs(row[candidates]))])
            direction = binv @ A[:, entering]
            binv = self._pivot(binv, direction, position)
            basis[position] = entering
        return basis, binv


def solve_dense(lp: LinearProgram, settings: Optional[SolverSettings] = None) -> RawSolution:
    return DenseSimplex(settings or solver_settings).solve(lp)
