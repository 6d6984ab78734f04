# bidprice/lp.py
"""
Linear programs with labelled row groups, solutions with grouped duals,
optimality certificates and the collective/individual capacity models.

Every program is a maximisation. Variables are either nonnegative or free;
all other restrictions (including 0 <= x <= 1 boxes) are rows that carry a
group label, so their duals can be read back per group.
"""
import logging
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path as FilePath
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from config.settings import SolverSettings, solver_settings
from .config import PARTY_CAP, SHARED_CAP, UPPER_BOUND, group_label, var_label
from .exceptions import LinearProgramError, SolverError

logger = logging.getLogger(__name__)

Matrix = Union[np.ndarray, sparse.spmatrix]


class Relation(str, Enum):
    """Row relation."""
    LE = "<="
    GE = ">="
    EQ = "="


class LpStatus(str, Enum):
    """Solver termination status."""
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"
    ITERATION_LIMIT = "ITERATION_LIMIT"


@dataclass(frozen=True)
class Block:
    """A labelled contiguous range of rows or variables."""
    label: str
    start: int
    stop: int

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class LinearProgram:
    """max cost'x subject to grouped rows and nonnegative or free variables."""
    cost: np.ndarray
    matrix: Matrix
    rhs: np.ndarray
    relations: Tuple[Relation, ...]
    row_groups: Tuple[Block, ...]
    free: np.ndarray
    var_groups: Tuple[Block, ...]
    name: str = "lp"

    def __post_init__(self) -> None:
        n_rows, n_vars = self.matrix.shape
        if self.cost.shape != (n_vars,):
            raise LinearProgramError(f"{self.name}: cost has shape {self.cost.shape}, expected ({n_vars},)")
        if self.rhs.shape != (n_rows,):
            raise LinearProgramError(f"{self.name}: rhs has shape {self.rhs.shape}, expected ({n_rows},)")
        if len(self.relations) != n_rows:
            raise LinearProgramError(f"{self.name}: {len(self.relations)} relations for {n_rows} rows")
        if self.free.shape != (n_vars,):
            raise LinearProgramError(f"{self.name}: free mask has shape {self.free.shape}, expected ({n_vars},)")
        _check_cover(self.row_groups, n_rows, f"{self.name}: row groups")
        _check_cover(self.var_groups, n_vars, f"{self.name}: variable groups")

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_vars(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.matrix)

    def dense_matrix(self) -> np.ndarray:
        if self.is_sparse:
            return self.matrix.toarray()
        return np.asarray(self.matrix, dtype=float)

    def rows(self, label: str) -> slice:
        return _find(self.row_groups, label).slice

    def columns(self, label: str) -> slice:
        return _find(self.var_groups, label).slice

    def nnz(self) -> int:
        """Nonzero count of the constraint matrix."""
        if self.is_sparse:
            return int(self.matrix.count_nonzero())
        return int(np.count_nonzero(self.matrix))


def _check_cover(blocks: Sequence[Block], size: int, what: str) -> None:
    position = 0
    labels = set()
    for block in blocks:
        if block.start != position or block.stop < block.start:
            raise LinearProgramError(f"{what} are not contiguous at '{block.label}'")
        if block.label in labels:
            raise LinearProgramError(f"{what} repeat label '{block.label}'")
        labels.add(block.label)
        position = block.stop
    if position != size:
        raise LinearProgramError(f"{what} cover {position} of {size} entries")


def _find(blocks: Sequence[Block], label: str) -> Block:
    for block in blocks:
        if block.label == label:
            return block
    raise KeyError(label)


class LpBuilder:
    """Incremental construction of a LinearProgram from named blocks."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self._var_blocks: List[Block] = []
        self._costs: List[np.ndarray] = []
        self._free: List[np.ndarray] = []
        self._row_groups: List[Tuple[str, Relation, np.ndarray, Dict[str, Matrix]]] = []

    @property
    def n_vars(self) -> int:
        return self._var_blocks[-1].stop if self._var_blocks else 0

    def add_variables(self, label: str, cost: np.ndarray, free: bool = False) -> slice:
        """Append a block of variables and return its column range."""
        cost = np.asarray(cost, dtype=float).ravel()
        block = Block(label, self.n_vars, self.n_vars + cost.shape[0])
        self._var_blocks.append(block)
        self._costs.append(cost)
        self._free.append(np.full(cost.shape[0], free, dtype=bool))
        return block.slice

    def add_rows(
        self,
        label: str,
        relation: Relation,
        rhs: np.ndarray,
        coefficients: Mapping[str, Matrix],
    ) -> None:
        """
        Append a row group.

        Args:
            label: Group label, unique within the program
            relation: Relation shared by every row of the group
            rhs: Right-hand sides, one per row
            coefficients: Coefficient blocks keyed by variable block label
        """
        rhs = np.asarray(rhs, dtype=float).ravel()
        known = {block.label: block for block in self._var_blocks}
        for var, coeff in coefficients.items():
            if var not in known:
                raise LinearProgramError(f"{self.name}: row group '{label}' uses unknown variables '{var}'")
            if coeff.shape != (rhs.shape[0], len(known[var])):
                raise LinearProgramError(
                    f"{self.name}: block ({label}, {var}) has shape {coeff.shape}, "
                    f"expected ({rhs.shape[0]}, {len(known[var])})"
                )
        self._row_groups.append((label, relation, rhs, dict(coefficients)))

    def build(self, use_sparse: bool = False) -> LinearProgram:
        n_rows = sum(rhs.shape[0] for _, _, rhs, _ in self._row_groups)
        columns = {block.label: block for block in self._var_blocks}

        if use_sparse:
            rows, cols, data = [], [], []
            row = 0
            for _, _, rhs, coefficients in self._row_groups:
                for var, coeff in coefficients.items():
                    coo = sparse.coo_matrix(coeff)
                    rows.append(coo.row + row)
                    cols.append(coo.col + columns[var].start)
                    data.append(coo.data)
                row += rhs.shape[0]
            matrix: Matrix = sparse.csr_matrix(
                (
                    np.concatenate(data) if data else np.zeros(0),
                    (np.concatenate(rows) if rows else np.zeros(0, dtype=int),
                     np.concatenate(cols) if cols else np.zeros(0, dtype=int)),
                ),
                shape=(n_rows, self.n_vars),
            )
            matrix.eliminate_zeros()
        else:
            matrix = np.zeros((n_rows, self.n_vars))
            row = 0
            for _, _, rhs, coefficients in self._row_groups:
                for var, coeff in coefficients.items():
                    block = columns[var]
                    dense = coeff.toarray() if sparse.issparse(coeff) else coeff
                    matrix[row:row + rhs.shape[0], block.start:block.stop] = dense
                row += rhs.shape[0]

        row_groups: List[Block] = []
        relations: List[Relation] = []
        row = 0
        for label, relation, rhs, _ in self._row_groups:
            row_groups.append(Block(label, row, row + rhs.shape[0]))
            relations.extend([relation] * rhs.shape[0])
            row += rhs.shape[0]

        return LinearProgram(
            cost=np.concatenate(self._costs) if self._costs else np.zeros(0),
            matrix=matrix,
            rhs=(np.concatenate([rhs for _, _, rhs, _ in self._row_groups])
                 if self._row_groups else np.zeros(0)),
            relations=tuple(relations),
            row_groups=tuple(row_groups),
            free=np.concatenate(self._free) if self._free else np.zeros(0, dtype=bool),
            var_groups=tuple(self._var_blocks),
            name=self.name,
        )


@dataclass(frozen=True)
class RawSolution:
    """What a backend returns: status, primal point and row duals."""
    status: LpStatus
    x: Optional[np.ndarray]
    y: Optional[np.ndarray]
    iterations: int = 0


@dataclass(frozen=True)
class Certificate:
    """Scaled optimality residuals of a primal/dual pair."""
    primal_residual: float
    dual_residual: float
    gap: float
    cs_residual: float
    passed: bool


@dataclass(frozen=True)
class LpSolution:
    """Primal and dual optimal solutions with per-group access."""
    status: LpStatus
    x: np.ndarray
    objective: float
    y: np.ndarray
    reduced_costs: np.ndarray
    row_groups: Tuple[Block, ...] = ()
    var_groups: Tuple[Block, ...] = ()
    backend: str = ""
    iterations: int = 0
    solve_seconds: float = 0.0
    certificate: Optional[Certificate] = None

    @property
    def optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL

    def dual(self, label: str) -> np.ndarray:
        """Row duals of one group (dZ/db)."""
        return self.y[_find(self.row_groups, label).slice]

    def variables(self, label: str) -> np.ndarray:
        """Primal values of one variable block."""
        return self.x[_find(self.var_groups, label).slice]

    def duals_by_group(self) -> Dict[str, np.ndarray]:
        return {block.label: self.y[block.slice] for block in self.row_groups}


def row_activity(lp: LinearProgram, x: np.ndarray) -> np.ndarray:
    return np.asarray(lp.matrix @ x).ravel()


def certify(lp: LinearProgram, x: np.ndarray, y: np.ndarray,
            settings: SolverSettings = solver_settings) -> Certificate:
    """
    Check primal feasibility, dual feasibility, duality gap and complementary
    slackness of (x, y) under the dual sign convention y = dZ/db.
    """
    relations = np.array([r.value for r in lp.relations])
    le, ge, eq = relations == Relation.LE.value, relations == Relation.GE.value, relations == Relation.EQ.value
    activity = row_activity(lp, x)
    slack = lp.rhs - activity

    rhs_scale = 1.0 + (np.max(np.abs(lp.rhs)) if lp.n_rows else 0.0)
    cost_scale = 1.0 + (np.max(np.abs(lp.cost)) if lp.n_vars else 0.0)

    violations = np.concatenate([
        np.maximum(0.0, -slack[le]),
        np.maximum(0.0, slack[ge]),
        np.abs(slack[eq]),
        np.maximum(0.0, -x[~lp.free]),
    ])
    primal_residual = float(violations.max() / rhs_scale) if violations.size else 0.0

    reduced = lp.cost - np.asarray(lp.matrix.T @ y).ravel()
    dual_violations = np.concatenate([
        np.maximum(0.0, -y[le]),
        np.maximum(0.0, y[ge]),
        np.maximum(0.0, reduced[~lp.free]),
        np.abs(reduced[lp.free]),
    ])
    dual_residual = float(dual_violations.max() / cost_scale) if dual_violations.size else 0.0

    primal_obj = float(lp.cost @ x)
    dual_obj = float(lp.rhs @ y)
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj))

    cs_terms = np.concatenate([np.abs(y * slack), np.abs(reduced * x)])
    cs_residual = float(cs_terms.max() / (1.0 + abs(primal_obj))) if cs_terms.size else 0.0

    passed = (
        primal_residual <= settings.eps_feas
        and dual_residual <= settings.eps_feas
        and gap <= settings.eps_gap
        and cs_residual <= settings.eps_cs
    )
    return Certificate(primal_residual, dual_residual, gap, cs_residual, passed)


def choose_backend(lp: LinearProgram, backend: Optional[str] = None,
                   settings: SolverSettings = solver_settings) -> str:
    backend = (backend or settings.backend).lower()
    if backend == "auto":
        return "simplex" if lp.n_rows + lp.n_vars <= settings.simplex_max_size else "highs"
    if backend not in ("simplex", "highs"):
        raise SolverError(f"Unknown solver backend '{backend}'. Valid backends are: auto, simplex, highs")
    return backend


def solve(
    lp: LinearProgram,
    backend: Optional[str] = None,
    strict: bool = False,
    settings: SolverSettings = solver_settings,
) -> LpSolution:
    """
    Solve a linear program and return primal and dual solutions.

    INFEASIBLE and UNBOUNDED are reported through the status; a failed
    optimality certificate is logged, and raised only when ``strict`` is set.
    """
    from .highs import HighsSolver
    from .simplex import DenseSimplex

    chosen = choose_backend(lp, backend, settings)
    started = time.perf_counter()
    if chosen == "simplex":
        raw = DenseSimplex(settings).solve(lp)
    else:
        raw = HighsSolver(settings).solve(lp)
    elapsed = time.perf_counter() - started
    logger.debug(f"Solved {lp.name} ({lp.n_rows}x{lp.n_vars}) with {chosen}: {raw.status.value} in {elapsed:.4f}s")

    if raw.status != LpStatus.OPTIMAL or raw.x is None or raw.y is None:
        return LpSolution(
            status=raw.status,
            x=np.full(lp.n_vars, np.nan),
            objective=float("nan"),
            y=np.full(lp.n_rows, np.nan),
            reduced_costs=np.full(lp.n_vars, np.nan),
            row_groups=lp.row_groups,
            var_groups=lp.var_groups,
            backend=chosen,
            iterations=raw.iterations,
            solve_seconds=elapsed,
        )

    certificate = None
    if settings.check_certificates:
        certificate = certify(lp, raw.x, raw.y, settings)
        if not certificate.passed:
            message = (
                f"Optimality certificate of {lp.name} exceeds tolerance: "
                f"primal={certificate.primal_residual:.2e}, dual={certificate.dual_residual:.2e}, "
                f"gap={certificate.gap:.2e}, cs={certificate.cs_residual:.2e}"
            )
            if strict:
                logger.error(message)
                raise SolverError(message)
            logger.warning(message)

    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=raw.x,
        objective=float(lp.cost @ raw.x),
        y=raw.y,
        reduced_costs=lp.cost - np.asarray(lp.matrix.T @ raw.y).ravel(),
        row_groups=lp.row_groups,
        var_groups=lp.var_groups,
        backend=chosen,
        iterations=raw.iterations,
        solve_seconds=elapsed,
        certificate=certificate,
    )


def _blocks_of(source):
    from .models import AllianceInstance
    from .network import assemble_blocks

    if isinstance(source, AllianceInstance):
        return assemble_blocks(source)
    return source


def build_collective(source, use_sparse: bool = False) -> LinearProgram:
    """
    The capacity sharing model.

    max sum_k r_k'x_k  s.t.  sum_k A_k x_k <= c (SHARED_CAP),
    B_k x_k <= c_k (PARTY_CAP(k)), x_k <= 1 (UPPER_BOUND(k)), x_k >= 0.

    Args:
        source: An AllianceInstance or already assembled AllianceBlocks
        use_sparse: Store the constraint matrix in CSR format
    """
    blocks = _blocks_of(source)
    builder = LpBuilder("collective")
    for party in blocks.parties:
        builder.add_variables(var_label("x", party), blocks[party].r)

    builder.add_rows(
        SHARED_CAP, Relation.LE, blocks.c,
        {var_label("x", party): blocks[party].A for party in blocks.parties},
    )
    for party in blocks.parties:
        pb = blocks[party]
        builder.add_rows(group_label(PARTY_CAP, party), Relation.LE, pb.c_k, {var_label("x", party): pb.B})
    for party in blocks.parties:
        pb = blocks[party]
        builder.add_rows(group_label(UPPER_BOUND, party), Relation.LE, np.ones(pb.n),
                         {var_label("x", party): np.eye(pb.n)})
    return builder.build(use_sparse)


def build_individual(source, party: str, share: np.ndarray, use_sparse: bool = False) -> LinearProgram:
    """
    A party's hard-block model with share s_k of the shared capacities.

    max r_k'x_k  s.t.  A_k x_k <= s_k (SHARED_CAP), B_k x_k <= c_k,
    x_k <= 1, x_k >= 0.
    """
    blocks = _blocks_of(source)
    if party not in blocks.party_blocks:
        raise LinearProgramError(f"Unknown party '{party}'")
    share = np.asarray(share, dtype=float)
    if share.shape != (blocks.m,):
        raise LinearProgramError(f"share has shape {share.shape}, expected ({blocks.m},)")
    if np.any(share < 0):
        raise LinearProgramError("share must be nonnegative")

    pb = blocks[party]
    x = var_label("x", party)
    builder = LpBuilder(f"individual({party})")
    builder.add_variables(x, pb.r)
    builder.add_rows(SHARED_CAP, Relation.LE, share, {x: pb.A})
    builder.add_rows(group_label(PARTY_CAP, party), Relation.LE, pb.c_k, {x: pb.B})
    builder.add_rows(group_label(UPPER_BOUND, party), Relation.LE, np.ones(pb.n), {x: np.eye(pb.n)})
    return builder.build(use_sparse)


def write_coefficients(lp: LinearProgram, path: FilePath) -> None:
    """
    Dump an LP as a coefficient list: one line per nonzero ``row col value``,
    plus ``OBJ col cost`` lines, ``row RHS relation value`` lines and a
    ``FREE col`` line per free variable.
    """
    coo = sparse.coo_matrix(lp.matrix)
    lines = [f"# {lp.name} maximize rows={lp.n_rows} cols={lp.n_vars}"]
    lines += [f"OBJ C{j} {float(value)!r}" for j, value in enumerate(lp.cost) if value != 0]
    order = np.lexsort((coo.col, coo.row))
    lines += [f"R{coo.row[i]} C{coo.col[i]} {float(coo.data[i])!r}" for i in order if coo.data[i] != 0]
    lines += [f"R{i} RHS {lp.relations[i].value} {float(value)!r}" for i, value in enumerate(lp.rhs)]
    lines += [f"FREE C{j}" for j in np.flatnonzero(lp.free)]
    FilePath(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_coefficients(path: FilePath) -> Dict[str, object]:
    """Parse a coefficient list back into cost, matrix, rhs, relations and free mask."""
    text = FilePath(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split()
    n_rows = int(header[3].split("=")[1])
    n_vars = int(header[4].split("=")[1])
    cost = np.zeros(n_vars)
    matrix = np.zeros((n_rows, n_vars))
    rhs = np.zeros(n_rows)
    relations: List[Relation] = [Relation.LE] * n_rows
    free = np.zeros(n_vars, dtype=bool)
    for line in text[1:]:
        parts = line.split()
        if parts[0] == "OBJ":
            cost[int(parts[1][1:])] = float(parts[2])
        elif parts[0] == "FREE":
            free[int(parts[1][1:])] = True
        elif parts[1] == "RHS":
            i = int(parts[0][1:])
            relations[i] = Relation(parts[2])
            rhs[i] = float(parts[3])
        else:
            matrix[int(parts[0][1:]), int(parts[1][1:])] = float(parts[2])
    return {"cost": cost, "matrix": matrix, "rhs": rhs, "relations": relations, "free": free}
