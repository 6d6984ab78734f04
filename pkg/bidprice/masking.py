# bidprice/masking.py
"""
Masking of a party's private LP blocks and recovery of its original solution.

The chain has three stages: shift the variables (z = x + eta) and slacks
(cost xi), change variables (z = D'u, v = E'w), then left-multiply the
private rows with M-matrices F, G, H, L. The published payload only holds
the transformed blocks, the shift term A eta and a scalar objective offset.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from config.settings import MaskingSettings, SolverSettings, masking_settings, solver_settings
from .config import (
    ADVISORY_IDENTITY_INCIDENCE,
    ADVISORY_SMALL_PARTY,
    ADVISORY_SPARSE_KEYS,
    LOWER_BOUND,
    NONNEG,
    PARTY_CAP,
    SHARED_CAP,
    UPPER_BOUND,
    group_label,
    var_label,
)
from .exceptions import KeyGenerationError, MaskingError, RecoveryError
from .lp import LinearProgram, LpBuilder, LpSolution, Relation
from .mmatrix import MMatrixMode, is_m_matrix, sample_m_matrix
from .models import AllianceInstance
from .network import AllianceBlocks, PartyBlocks, assemble_blocks

logger = logging.getLogger(__name__)


class KeyKind(str, Enum):
    DENSE = "dense"
    SPARSE = "sparse"
    IDENTITY = "identity"


@dataclass(frozen=True)
class KeyPolicy:
    """How a party draws its masking keys."""
    kind: KeyKind = KeyKind.DENSE
    mmatrix_mode: MMatrixMode = MMatrixMode.DIAGONAL
    extra_rows_d: int = 0
    extra_rows_e: int = 0
    permute: bool = False
    signed_xi: bool = False
    key_scale: float = 1.0
    eta_scale: float = 1.0
    max_resamples: int = 5

    @classmethod
    def from_settings(cls, settings: MaskingSettings = masking_settings, **overrides) -> "KeyPolicy":
        values = dict(
            kind=KeyKind(settings.key_kind),
            mmatrix_mode=MMatrixMode(settings.mmatrix_mode),
            extra_rows_d=settings.extra_rows_d,
            extra_rows_e=settings.extra_rows_e,
            permute=settings.permute,
            signed_xi=settings.signed_xi,
            key_scale=settings.key_scale,
            eta_scale=settings.eta_scale,
            max_resamples=settings.max_resamples,
        )
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class MaskingKeys:
    """One party's private randomness. Never serialized into a payload."""
    party: str
    eta: np.ndarray
    xi: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    L: np.ndarray
    perm: Optional[np.ndarray] = None

    @property
    def s(self) -> int:
        return int(self.D.shape[0])

    @property
    def t(self) -> int:
        return int(self.E.shape[0])

    @classmethod
    def identity(cls, party: str, n: int, m_k: int) -> "MaskingKeys":
        return cls(
            party=party,
            eta=np.zeros(n),
            xi=np.zeros(m_k),
            D=np.eye(n),
            E=np.eye(m_k),
            F=np.eye(m_k),
            G=np.eye(n),
            H=np.eye(n),
            L=np.eye(m_k),
        )

    def permuted(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        """Reorder columns (axis=1) or entries (axis=0) into the masked order."""
        if self.perm is None:
            return values
        return np.take(values, self.perm, axis=axis)

    def unpermuted(self, values: np.ndarray) -> np.ndarray:
        if self.perm is None:
            return values
        restored = np.empty_like(values)
        restored[self.perm] = values
        return restored


@dataclass(frozen=True)
class MaskedPartyData:
    """The blocks a party publishes."""
    party: str
    r_bar: np.ndarray
    xi_bar: np.ndarray
    A_bar: np.ndarray
    B_bar: np.ndarray
    F_bar: np.ndarray
    c_bar: np.ndarray
    G_bar: np.ndarray
    one_bar: np.ndarray
    H_bar: np.ndarray
    eta_bar: np.ndarray
    L_bar: np.ndarray
    A_eta: np.ndarray
    offset: float
    permuted: bool = False
    advisories: Tuple[str, ...] = ()

    @property
    def s(self) -> int:
        return int(self.r_bar.shape[0])

    @property
    def t(self) -> int:
        return int(self.xi_bar.shape[0])

    @property
    def n(self) -> int:
        return int(self.G_bar.shape[0])

    @property
    def m(self) -> int:
        return int(self.A_eta.shape[0])

    @property
    def m_k(self) -> int:
        return int(self.c_bar.shape[0])

    @property
    def is_plain(self) -> bool:
        """True when the payload carries the party's blocks untransformed (identity keys)."""
        n, m_k = self.n, self.m_k
        return (
            self.s == n
            and self.t == m_k
            and np.array_equal(self.G_bar, np.eye(n))
            and np.array_equal(self.H_bar, np.eye(n))
            and np.array_equal(self.F_bar, np.eye(m_k))
            and np.array_equal(self.L_bar, np.eye(m_k))
            and not np.any(self.eta_bar)
            and not np.any(self.xi_bar)
            and not np.any(self.A_eta)
            and self.offset == 0.0
        )


@dataclass(frozen=True)
class MaskedModel:
    """The public LP every party assembles from the payloads."""
    parties: Tuple[str, ...]
    payloads: Dict[str, MaskedPartyData]
    c: np.ndarray
    c_bar: np.ndarray
    lp: LinearProgram

    @property
    def total_offset(self) -> float:
        return float(sum(self.payloads[p].offset for p in self.parties))


@dataclass(frozen=True)
class Recovery:
    """One party's recovered primal and dual solution."""
    party: str
    x: np.ndarray
    alpha_k: np.ndarray
    alpha: np.ndarray
    Z: float
    Z_bar: float
    upper_dual: Optional[np.ndarray] = None


@dataclass(frozen=True)
class LocalVerdict:
    """A party's pass/fail result on its share of the optimality conditions."""
    party: str
    passed: bool
    residuals: Dict[str, float] = field(default_factory=dict)


Source = Union[AllianceInstance, AllianceBlocks]


def party_blocks_of(source: Source, party: str) -> PartyBlocks:
    blocks = assemble_blocks(source) if isinstance(source, AllianceInstance) else source
    if party not in blocks.party_blocks:
        raise MaskingError(f"Unknown party '{party}'")
    return blocks[party]


def full_column_rank(matrix: np.ndarray, tol: float = masking_settings.rank_tol) -> bool:
    """Rank test by pivoted QR with threshold tol * max |R_ii|."""
    rows, cols = matrix.shape
    if cols == 0:
        return True
    if rows < cols:
        return False
    _, R, _ = linalg.qr(matrix, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(R))
    if diagonal.size == 0 or diagonal[0] == 0:
        return False
    return int(np.sum(diagonal > tol * diagonal[0])) == cols


def _sample_full_rank(rows: int, cols: int, rng: np.random.Generator, scale: float,
                      attempts: int, what: str) -> np.ndarray:
    for attempt in range(attempts + 1):
        matrix = scale * rng.uniform(-1.0, 1.0, size=(rows, cols))
        if full_column_rank(matrix):
            return matrix
        logger.debug(f"{what} is rank deficient, resampling (attempt {attempt + 1})")
    logger.error(f"Could not sample a full-rank {what} after {attempts} resamples")
    raise KeyGenerationError(f"Could not sample a full-rank {what} after {attempts} resamples")


def _sample_m(dim: int, rng: np.random.Generator, mode: MMatrixMode, attempts: int, what: str) -> np.ndarray:
    if dim == 0:
        return np.zeros((0, 0))
    for _ in range(attempts + 1):
        matrix = sample_m_matrix(dim, rng, mode)
        if is_m_matrix(matrix):
            return matrix
    raise KeyGenerationError(f"Could not sample an M-matrix {what} of size {dim}")


def generate_keys(source: Source, party: str, rng: np.random.Generator,
                  policy: Optional[KeyPolicy] = None) -> MaskingKeys:
    """
    Draw a party's masking keys.

    D (s x n) and E (t x m_k) are continuous random and rank-checked, or D
    comes from the sparsity model for sparse keys; eta is uniform on
    [0, eta_scale], xi uniform on [0, 1] times the party's fare scale
    (signed on [-1, 1] when policy.signed_xi is set).
    """
    from .sparsity import sparse_key

    policy = policy or KeyPolicy.from_settings()
    pb = party_blocks_of(source, party)
    n, m_k = pb.n, pb.m_k

    perm = rng.permutation(n) if policy.permute else None

    if policy.kind == KeyKind.IDENTITY:
        keys = MaskingKeys.identity(party, n, m_k)
        return keys if perm is None else replace(keys, perm=perm)

    s = n + policy.extra_rows_d
    t = m_k + policy.extra_rows_e
    fare_scale = float(np.max(np.abs(pb.r))) if pb.n else 1.0
    fare_scale = fare_scale if fare_scale > 0 else 1.0

    eta = policy.eta_scale * rng.uniform(0.0, 1.0, size=n)
    low = -1.0 if policy.signed_xi else 0.0
    xi = fare_scale * rng.uniform(low, 1.0, size=m_k)

    if policy.kind == KeyKind.SPARSE:
        A = pb.A if perm is None else pb.A[:, perm]
        B = pb.B if perm is None else pb.B[:, perm]
        D = sparse_key(A, B, s, rng, attempts=policy.max_resamples)
    else:
        D = _sample_full_rank(s, n, rng, policy.key_scale, policy.max_resamples, f"D of party {party}")
    E = _sample_full_rank(t, m_k, rng, policy.key_scale, policy.max_resamples, f"E of party {party}")

    mode = MMatrixMode(policy.mmatrix_mode)
    F = _sample_m(m_k, rng, mode, policy.max_resamples, "F")
    G = _sample_m(n, rng, mode, policy.max_resamples, "G")
    H = _sample_m(n, rng, mode, policy.max_resamples, "H")
    L = _sample_m(m_k, rng, mode, policy.max_resamples, "L")

    logger.debug(f"Party {party}: keys D {D.shape}, E {E.shape}, mode {mode.value}, permuted={perm is not None}")
    return MaskingKeys(party=party, eta=eta, xi=xi, D=D, E=E, F=F, G=G, H=H, L=L, perm=perm)


def privacy_findings(pb: PartyBlocks, keys: MaskingKeys, kind: KeyKind = KeyKind.DENSE,
                     settings: MaskingSettings = masking_settings) -> List[str]:
    """Advisories for configurations known to weaken the masking."""
    findings = []
    if pb.n <= settings.privacy_threshold:
        findings.append(ADVISORY_SMALL_PARTY)
    if keys.perm is None and pb.A.shape[0] == pb.A.shape[1] and pb.n > 0 and np.array_equal(pb.A, np.eye(pb.n)):
        findings.append(ADVISORY_IDENTITY_INCIDENCE)
    if KeyKind(kind) == KeyKind.SPARSE:
        findings.append(ADVISORY_SPARSE_KEYS)
    return findings


def objective_offset(pb: PartyBlocks, keys: MaskingKeys) -> float:
    """o_k = r'eta + (c_k + B eta)'xi, the party's share of the objective shift."""
    return float(pb.r @ keys.eta + (pb.c_k + pb.B @ keys.eta) @ keys.xi)


def _check_dims(pb: PartyBlocks, keys: MaskingKeys) -> None:
    n, m_k = pb.n, pb.m_k
    expected = {
        "eta": (keys.eta.shape, (n,)),
        "xi": (keys.xi.shape, (m_k,)),
        "D": (keys.D.shape[1:], (n,)),
        "E": (keys.E.shape[1:], (m_k,)),
        "F": (keys.F.shape, (m_k, m_k)),
        "G": (keys.G.shape, (n, n)),
        "H": (keys.H.shape, (n, n)),
        "L": (keys.L.shape, (m_k, m_k)),
    }
    for name, (actual, wanted) in expected.items():
        if tuple(actual) != tuple(wanted):
            raise MaskingError(f"Key {name} of party {pb.party} has shape {actual}, expected {wanted}")
    if keys.D.shape[0] < n or keys.E.shape[0] < m_k:
        raise MaskingError(f"Keys of party {pb.party} have fewer rows than n_k or m_k")
    if keys.perm is not None and sorted(keys.perm.tolist()) != list(range(n)):
        raise MaskingError(f"Permutation of party {pb.party} is not a permutation of {n} columns")


def mask(source: Source, party: str, keys: MaskingKeys, kind: KeyKind = KeyKind.DENSE,
         settings: MaskingSettings = masking_settings) -> MaskedPartyData:
    """
    Compute a party's published payload.

    With a permutation, the columns of A and B and the entries of r and eta
    are reordered before D is applied.
    """
    pb = party_blocks_of(source, party)
    _check_dims(pb, keys)

    r = keys.permuted(pb.r)
    A = keys.permuted(pb.A, axis=1)
    B = keys.permuted(pb.B, axis=1)
    eta = keys.permuted(keys.eta)
    D, E, F, G, H, L, xi = keys.D, keys.E, keys.F, keys.G, keys.H, keys.L, keys.xi

    advisories = privacy_findings(pb, keys, kind, settings)
    for advisory in advisories:
        logger.warning(f"Party {party}: {advisory}")

    return MaskedPartyData(
        party=party,
        r_bar=D @ (r + B.T @ xi),
        xi_bar=E @ xi,
        A_bar=A @ D.T,
        B_bar=F @ B @ D.T,
        F_bar=F @ E.T,
        c_bar=F @ (pb.c_k + B @ eta),
        G_bar=G @ D.T,
        one_bar=G @ (1.0 + eta),
        H_bar=H @ D.T,
        eta_bar=H @ eta,
        L_bar=L @ E.T,
        A_eta=A @ eta,
        offset=objective_offset(pb, keys),
        permuted=keys.perm is not None,
        advisories=tuple(advisories),
    )


def assemble_masked_model(payloads: Union[Mapping[str, MaskedPartyData], Sequence[MaskedPartyData]],
                          c: np.ndarray, parties: Optional[Sequence[str]] = None,
                          use_sparse: bool = False) -> MaskedModel:
    """
    Build the masked LP.

    max sum r_bar'u + xi_bar'w  s.t.  sum A_bar u <= c + sum A eta,
    B_bar u + F_bar w = c_bar_k, G_bar u <= 1_bar, H_bar u >= eta_bar,
    L_bar w >= 0, with u and w free.

    When every payload is plain (identity keys) the model is laid out exactly
    like the collective model: u >= 0, no w, no lower-bound rows.
    """
    if not isinstance(payloads, Mapping):
        payloads = {p.party: p for p in payloads}
    parties = tuple(parties) if parties is not None else tuple(payloads)
    missing = [p for p in parties if p not in payloads]
    if missing:
        raise MaskingError(f"Missing payloads from parties {missing}")
    c = np.asarray(c, dtype=float)
    for party in parties:
        if payloads[party].m != c.shape[0]:
            raise MaskingError(
                f"Payload of party {party} has {payloads[party].m} shared rows, expected {c.shape[0]}"
            )

    c_bar = c + sum((payloads[p].A_eta for p in parties), np.zeros_like(c))

    if all(payloads[p].is_plain for p in parties):
        lp = _plain_program(payloads, parties, c_bar, use_sparse)
    else:
        lp = _masked_program(payloads, parties, c_bar, use_sparse)

    return MaskedModel(
        parties=parties,
        payloads=dict(payloads),
        c=c,
        c_bar=c_bar,
        lp=lp,
    )


def _plain_program(payloads: Mapping[str, MaskedPartyData], parties: Tuple[str, ...],
                   c_bar: np.ndarray, use_sparse: bool) -> LinearProgram:
    # Row for row and column for column the collective model.
    builder = LpBuilder("masked")
    for party in parties:
        builder.add_variables(var_label("u", party), payloads[party].r_bar)

    builder.add_rows(SHARED_CAP, Relation.LE, c_bar,
                     {var_label("u", p): payloads[p].A_bar for p in parties})
    for party in parties:
        data = payloads[party]
        builder.add_rows(group_label(PARTY_CAP, party), Relation.LE, data.c_bar,
                         {var_label("u", party): data.B_bar})
    for party in parties:
        data = payloads[party]
        builder.add_rows(group_label(UPPER_BOUND, party), Relation.LE, data.one_bar,
                         {var_label("u", party): data.G_bar})
    return builder.build(use_sparse)


def _masked_program(payloads: Mapping[str, MaskedPartyData], parties: Tuple[str, ...],
                    c_bar: np.ndarray, use_sparse: bool) -> LinearProgram:
    builder = LpBuilder("masked")
    for party in parties:
        builder.add_variables(var_label("u", party), payloads[party].r_bar, free=True)
        builder.add_variables(var_label("w", party), payloads[party].xi_bar, free=True)

    builder.add_rows(SHARED_CAP, Relation.LE, c_bar,
                     {var_label("u", p): payloads[p].A_bar for p in parties})
    for party in parties:
        data = payloads[party]
        u, w = var_label("u", party), var_label("w", party)
        builder.add_rows(group_label(PARTY_CAP, party), Relation.EQ, data.c_bar,
                         {u: data.B_bar, w: data.F_bar})
        builder.add_rows(group_label(UPPER_BOUND, party), Relation.LE, data.one_bar, {u: data.G_bar})
        builder.add_rows(group_label(LOWER_BOUND, party), Relation.GE, data.eta_bar, {u: data.H_bar})
        builder.add_rows(group_label(NONNEG, party), Relation.GE, np.zeros(data.m_k), {w: data.L_bar})
    return builder.build(use_sparse)


def recover(party: str, keys: MaskingKeys, solution: LpSolution,
            offsets: Union[float, Sequence[float]]) -> Recovery:
    """
    Map the masked optimum back to the party's original solution.

    x_k = D'u - eta (un-permuted), alpha = gamma, alpha_k = F'gamma_k - xi,
    Z = Z_bar - sum of all parties' offsets.
    """
    if not solution.optimal:
        raise RecoveryError(f"Cannot recover from a {solution.status.value} masked solution")
    u = solution.variables(var_label("u", party))
    if u.shape[0] != keys.s:
        raise RecoveryError(f"Masked solution has {u.shape[0]} u-variables for party {party}, keys expect {keys.s}")

    x = keys.unpermuted(keys.D.T @ u - keys.permuted(keys.eta))
    gamma_k = solution.dual(group_label(PARTY_CAP, party))
    alpha_k = keys.F.T @ gamma_k - keys.xi
    upper = keys.unpermuted(keys.G.T @ solution.dual(group_label(UPPER_BOUND, party)))
    total_offset = float(offsets) if np.isscalar(offsets) else float(np.sum(offsets))

    return Recovery(
        party=party,
        x=x,
        alpha_k=alpha_k,
        alpha=solution.dual(SHARED_CAP).copy(),
        Z=solution.objective - total_offset,
        Z_bar=solution.objective,
        upper_dual=upper,
    )


def build_shifted_model(blocks: AllianceBlocks, keys: Mapping[str, MaskingKeys]) -> LinearProgram:
    """
    The shifted model before any matrix transformation.

    max sum (r + B'xi)'z + xi'v  s.t.  sum A z <= c + sum A eta,
    B z + v = c_k + B eta, z <= 1 + eta, z >= eta, v >= 0, z and v free.
    """
    builder = LpBuilder("shifted")
    for party in blocks.parties:
        pb, k = blocks[party], keys[party]
        builder.add_variables(var_label("z", party), pb.r + pb.B.T @ k.xi, free=True)
        builder.add_variables(var_label("v", party), k.xi, free=True)

    shifted_c = blocks.c + sum((blocks[p].A @ keys[p].eta for p in blocks.parties), np.zeros(blocks.m))
    builder.add_rows(SHARED_CAP, Relation.LE, shifted_c,
                     {var_label("z", p): blocks[p].A for p in blocks.parties})
    for party in blocks.parties:
        pb, k = blocks[party], keys[party]
        z, v = var_label("z", party), var_label("v", party)
        builder.add_rows(group_label(PARTY_CAP, party), Relation.EQ, pb.c_k + pb.B @ k.eta,
                         {z: pb.B, v: np.eye(pb.m_k)})
        builder.add_rows(group_label(UPPER_BOUND, party), Relation.LE, 1.0 + k.eta, {z: np.eye(pb.n)})
        builder.add_rows(group_label(LOWER_BOUND, party), Relation.GE, k.eta, {z: np.eye(pb.n)})
        builder.add_rows(group_label(NONNEG, party), Relation.GE, np.zeros(pb.m_k), {v: np.eye(pb.m_k)})
    return builder.build()


def recover_shifted(blocks: AllianceBlocks, keys: Mapping[str, MaskingKeys],
                    solution: LpSolution) -> Dict[str, Recovery]:
    """x_k = z_k - eta_k, alpha = beta, alpha_k = beta_k - xi_k."""
    if not solution.optimal:
        raise RecoveryError(f"Cannot recover from a {solution.status.value} shifted solution")
    total_offset = sum(objective_offset(blocks[p], keys[p]) for p in blocks.parties)
    recoveries = {}
    for party in blocks.parties:
        k = keys[party]
        recoveries[party] = Recovery(
            party=party,
            x=solution.variables(var_label("z", party)) - k.eta,
            alpha_k=solution.dual(group_label(PARTY_CAP, party)) - k.xi,
            alpha=solution.dual(SHARED_CAP).copy(),
            Z=solution.objective - total_offset,
            Z_bar=solution.objective,
            upper_dual=solution.dual(group_label(UPPER_BOUND, party)).copy(),
        )
    return recoveries


def build_change_of_variables_model(blocks: AllianceBlocks, keys: Mapping[str, MaskingKeys]) -> LinearProgram:
    """
    The shifted model after z = D'u and v = E'w, before the M-matrix rows.

    Permutations are not applied at this stage.
    """
    builder = LpBuilder("change-of-variables")
    for party in blocks.parties:
        pb, k = blocks[party], keys[party]
        builder.add_variables(var_label("u", party), k.D @ (pb.r + pb.B.T @ k.xi), free=True)
        builder.add_variables(var_label("w", party), k.E @ k.xi, free=True)

    shifted_c = blocks.c + sum((blocks[p].A @ keys[p].eta for p in blocks.parties), np.zeros(blocks.m))
    builder.add_rows(SHARED_CAP, Relation.LE, shifted_c,
                     {var_label("u", p): blocks[p].A @ keys[p].D.T for p in blocks.parties})
    for party in blocks.parties:
        pb, k = blocks[party], keys[party]
        u, w = var_label("u", party), var_label("w", party)
        builder.add_rows(group_label(PARTY_CAP, party), Relation.EQ, pb.c_k + pb.B @ k.eta,
                         {u: pb.B @ k.D.T, w: k.E.T})
        builder.add_rows(group_label(UPPER_BOUND, party), Relation.LE, 1.0 + k.eta, {u: k.D.T})
        builder.add_rows(group_label(LOWER_BOUND, party), Relation.GE, k.eta, {u: k.D.T})
        builder.add_rows(group_label(NONNEG, party), Relation.GE, np.zeros(pb.m_k), {w: k.E.T})
    return builder.build()


def to_shifted_point(keys: MaskingKeys, u: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Image (z, v) of a masked point, in masked column order."""
    return keys.D.T @ u, keys.E.T @ w


def from_shifted_point(keys: MaskingKeys, z: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """A masked preimage (u, w) of a shifted point through the pseudo-inverses of D' and E'."""
    u = keys.D @ linalg.solve(keys.D.T @ keys.D, z) if z.size else np.zeros(keys.s)
    w = keys.E @ linalg.solve(keys.E.T @ keys.E, v) if v.size else np.zeros(keys.t)
    return u, w


def public_shared_slack(model: MaskedModel, solution: LpSolution) -> np.ndarray:
    """c_bar - sum A_bar u, equal to the original shared slack c - sum A x."""
    used = sum(
        (model.payloads[p].A_bar @ solution.variables(var_label("u", p)) for p in model.parties),
        np.zeros_like(model.c),
    )
    return model.c_bar - used


def local_certificate(pb: PartyBlocks, keys: MaskingKeys, model: MaskedModel, solution: LpSolution,
                      settings: SolverSettings = solver_settings) -> LocalVerdict:
    """
    Check the party's share of the original optimality conditions.

    Uses only the party's private data and the public masked solution: box
    and private-row feasibility of x_k, sign of alpha_k and the upper-bound
    duals, reduced-cost signs of the party's own columns and complementary
    slackness on its private rows, plus the public shared-row conditions.
    """
    if not solution.optimal:
        return LocalVerdict(pb.party, False, {"status": 1.0})

    offsets = [model.payloads[p].offset for p in model.parties]
    rec = recover(pb.party, keys, solution, offsets)
    x, alpha, alpha_k, upper = rec.x, rec.alpha, rec.alpha_k, rec.upper_dual
    slack_k = pb.c_k - pb.B @ x
    shared_slack = public_shared_slack(model, solution)
    reduced = pb.r - pb.A.T @ alpha - pb.B.T @ alpha_k - upper

    def worst(values: np.ndarray) -> float:
        return float(np.max(values, initial=0.0))

    residuals = {
        "box": worst(np.concatenate([-x, x - 1.0])),
        "private_rows": worst(-slack_k),
        "shared_rows": worst(-shared_slack),
        "dual_signs": worst(np.concatenate([-alpha_k, -upper, -alpha])),
        "reduced_costs": worst(reduced),
        "complementarity": worst(np.abs(np.concatenate([
            alpha_k * slack_k, upper * (1.0 - x), reduced * x, alpha * shared_slack,
        ]))),
    }
    scale = 1.0 + float(np.max(np.abs(pb.r), initial=0.0))
    passed = (
        residuals["box"] <= 1e-6
        and residuals["private_rows"] <= 1e-6
        and residuals["shared_rows"] <= 1e-6
        and residuals["dual_signs"] <= 1e-6 * scale
        and residuals["reduced_costs"] <= 1e-6 * scale
        and residuals["complementarity"] <= settings.eps_cs * scale
    )
    if not passed:
        logger.info(f"Party {pb.party}: local certificate failed {residuals}")
    return LocalVerdict(pb.party, passed, residuals)
