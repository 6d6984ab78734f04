# bidprice/protocol.py
"""
Multi-party bid-price protocol.

Each party runs as an isolated actor: it draws its keys, publishes its framed
masked payload, waits for everyone else's, assembles the identical masked
LP, solves it itself and recovers its own allocation and bid-prices. Only
payload frames (and, with general M-matrices, certificate verdicts) ever
cross the channel.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config.settings import MaskingSettings, masking_settings
from .channel import Channel
from .config import (
    ADVISORY_IDENTITY_INCIDENCE,
    ADVISORY_SMALL_PARTY,
    ADVISORY_SPARSE_KEYS,
    MSG_PAYLOAD,
    MSG_VERDICT,
    SHARED_CAP,
)
from .exceptions import ProtocolError, WireFormatError
from .lp import LpSolution, solve
from .masking import (
    KeyPolicy,
    MaskedModel,
    MaskingKeys,
    assemble_masked_model,
    generate_keys,
    local_certificate,
    mask,
    recover,
)
from .mmatrix import MMatrixMode
from .models import AllianceInstance
from .network import AllianceBlocks, PartyBlocks, assemble_blocks
from .seeding import make_rng
from .wire import decode_payload, decode_verdict, digest, encode_payload, encode_verdict, frame, read_header, unframe

logger = logging.getLogger(__name__)


def topic(message_type: str, round_index: int) -> str:
    return f"{message_type}/{round_index}"


@dataclass(frozen=True)
class TranscriptEntry:
    """One message as seen on the channel."""
    round: int
    sender: str
    message_type: str
    digest: str
    length: int


@dataclass(frozen=True)
class PartyOutcome:
    """What a party learns at the end of the protocol."""
    party: str
    x: np.ndarray
    alpha_k: np.ndarray
    alpha: np.ndarray
    Z: float
    Z_bar: float
    rounds: int
    seconds: float


@dataclass
class ProtocolTranscript:
    """Audit log of a protocol run plus every party's recovered outputs."""
    parties: Tuple[str, ...]
    c: np.ndarray
    entries: List[TranscriptEntry] = field(default_factory=list)
    frames: Dict[str, Dict[str, bytes]] = field(default_factory=dict)
    outcomes: Dict[str, PartyOutcome] = field(default_factory=dict)
    rounds: int = 1
    use_sparse: bool = False
    backend: Optional[str] = None

    @property
    def alpha(self) -> np.ndarray:
        return self.outcomes[self.parties[0]].alpha

    @property
    def Z(self) -> float:
        return self.outcomes[self.parties[0]].Z

    def payload_frames(self, round_index: Optional[int] = None) -> Dict[str, bytes]:
        """Payload frames of one round, the final one by default."""
        round_index = self.rounds - 1 if round_index is None else round_index
        return self.frames.get(topic(MSG_PAYLOAD, round_index), {})

    def all_bytes(self) -> List[bytes]:
        return [body for bodies in self.frames.values() for body in bodies.values()]


class PartyActor:
    """One party of the protocol, holding its private blocks and keys."""

    def __init__(
        self,
        party_blocks: PartyBlocks,
        parties: Sequence[str],
        c: np.ndarray,
        channel: Channel,
        policy: KeyPolicy,
        seed: int,
        use_sparse: bool = False,
        backend: Optional[str] = None,
        settings: MaskingSettings = masking_settings,
    ):
        """
        Initialize a party actor.

        Args:
            party_blocks: The party's private (r_k, A_k, B_k, c_k)
            parties: Every party id, in the agreed order
            c: Public shared capacities
            channel: Transport to the other parties
            policy: Key sampling policy
            seed: Master seed; the party's key streams are derived from it
            use_sparse: Assemble the masked LP in sparse storage
            backend: LP backend passed to the solver
        """
        self.party = party_blocks.party
        self._blocks = party_blocks
        self.parties = tuple(parties)
        self.c = np.asarray(c, dtype=float)
        self.channel = channel
        self.policy = policy
        self.seed = seed
        self.use_sparse = use_sparse
        self.backend = backend
        self.settings = settings
        self.received: Dict[str, Dict[str, bytes]] = {}
        self._source = AllianceBlocks(
            parties=self.parties, shared_legs=(), c=self.c, party_blocks={self.party: party_blocks}
        )
        self._keys: Optional[MaskingKeys] = None

    @property
    def keys(self) -> Optional[MaskingKeys]:
        """The keys of the final round (private to this party)."""
        return self._keys

    def _exchange(self, message_type: str, round_index: int, body: bytes) -> Dict[str, bytes]:
        name = topic(message_type, round_index)
        self.channel.publish(self.party, name, body)
        received = self.channel.collect(name, self.parties)
        self.received[name] = received
        return received

    def _masked_round(self, round_index: int) -> Tuple[MaskedModel, LpSolution]:
        rng = make_rng(self.seed, "keys", self.party, round_index)
        self._keys = generate_keys(self._source, self.party, rng, self.policy)
        payload = mask(self._source, self.party, self._keys, self.policy.kind, self.settings)
        frames = self._exchange(MSG_PAYLOAD, round_index, frame(encode_payload(payload)))

        try:
            payloads = {p: decode_payload(unframe(frames[p])) for p in self.parties}
        except WireFormatError as e:
            raise ProtocolError(f"Party {self.party} received a malformed payload: {e}") from e
        model = assemble_masked_model(payloads, self.c, self.parties, self.use_sparse)
        solution = solve(model.lp, backend=self.backend)
        logger.debug(f"Party {self.party} round {round_index}: masked solve {solution.status.value}")
        return model, solution

    def run(self) -> PartyOutcome:
        """Run every protocol step for this party."""
        started = time.perf_counter()
        general = MMatrixMode(self.policy.mmatrix_mode) == MMatrixMode.GENERAL
        attempts = self.settings.general_mode_attempts if general else 1

        for round_index in range(attempts):
            model, solution = self._masked_round(round_index)
            if not general:
                if not solution.optimal:
                    raise ProtocolError(f"Masked model ended {solution.status.value} at party {self.party}")
                break

            verdict = local_certificate(self._blocks, self._keys, model, solution)
            verdicts = self._exchange(MSG_VERDICT, round_index, encode_verdict(verdict, round_index))
            if all(decode_verdict(body)[0].passed for body in verdicts.values()):
                break
            logger.info(f"Party {self.party}: certificate round {round_index} failed, resampling keys")
        else:
            raise ProtocolError(f"No certified masked solution after {attempts} key rounds")

        offsets = [model.payloads[p].offset for p in self.parties]
        rec = recover(self.party, self._keys, solution, offsets)
        outcome = PartyOutcome(
            party=self.party,
            x=rec.x,
            alpha_k=rec.alpha_k,
            alpha=rec.alpha,
            Z=rec.Z,
            Z_bar=rec.Z_bar,
            rounds=round_index + 1,
            seconds=time.perf_counter() - started,
        )
        logger.info(f"Party {self.party}: recovered Z={outcome.Z:.6f} after {outcome.rounds} round(s)")
        return outcome


def build_actors(
    source,
    channel: Channel,
    policy: Optional[KeyPolicy] = None,
    seed: int = 0,
    use_sparse: bool = False,
    backend: Optional[str] = None,
) -> List[PartyActor]:
    blocks = assemble_blocks(source) if isinstance(source, AllianceInstance) else source
    if len(blocks.parties) < 2:
        raise ProtocolError(f"The protocol needs at least two parties, got {len(blocks.parties)}")
    policy = policy or KeyPolicy.from_settings()
    return [
        PartyActor(blocks[p], blocks.parties, blocks.c, channel, policy, seed, use_sparse, backend)
        for p in blocks.parties
    ]


def run_actors(actors: Sequence[PartyActor], c: np.ndarray) -> ProtocolTranscript:
    """Run actors concurrently, check agreement and build the transcript."""
    parties = tuple(actor.party for actor in actors)
    outcomes: Dict[str, PartyOutcome] = {}
    errors: List[str] = []
    with ThreadPoolExecutor(max_workers=len(actors), thread_name_prefix="party") as pool:
        futures = {actor.party: pool.submit(actor.run) for actor in actors}
        for party, future in futures.items():
            try:
                outcomes[party] = future.result()
            except Exception as e:
                errors.append(f"party {party}: {e}")

    if errors:
        message = "; ".join(errors)
        logger.error(f"Protocol aborted: {message}")
        raise ProtocolError(f"Protocol aborted: {message}")

    reference = outcomes[parties[0]]
    for party in parties[1:]:
        other = outcomes[party]
        if not np.array_equal(other.alpha, reference.alpha) or other.Z != reference.Z:
            raise ProtocolError(f"Parties {parties[0]} and {party} disagree on the shared bid-prices or Z")

    views = [actor.received for actor in actors]
    for actor, view in zip(actors[1:], views[1:]):
        if view != views[0]:
            raise ProtocolError(f"Party {actor.party} received different messages than party {parties[0]}")

    transcript = ProtocolTranscript(
        parties=parties,
        c=np.asarray(c, dtype=float),
        frames=views[0],
        outcomes=outcomes,
        rounds=reference.rounds,
        use_sparse=actors[0].use_sparse,
        backend=actors[0].backend,
    )
    for name in sorted(views[0], key=lambda t: (int(t.rsplit("/", 1)[1]), t)):
        message_type, round_index = name.rsplit("/", 1)
        for party in parties:
            body = views[0][name][party]
            transcript.entries.append(TranscriptEntry(
                round=int(round_index),
                sender=party,
                message_type=message_type,
                digest=digest(body).hex(),
                length=len(body),
            ))
    return transcript


def run_protocol(
    source,
    channel: Channel,
    policy: Optional[KeyPolicy] = None,
    seed: int = 0,
    use_sparse: bool = False,
    backend: Optional[str] = None,
) -> ProtocolTranscript:
    """
    Run the protocol for every party of an instance.

    Returns:
        The transcript, holding every party's (x_k, alpha_k, alpha, Z)
    """
    blocks = assemble_blocks(source) if isinstance(source, AllianceInstance) else source
    actors = build_actors(blocks, channel, policy, seed, use_sparse, backend)
    started = time.perf_counter()
    try:
        transcript = run_actors(actors, blocks.c)
    finally:
        channel.close()
    logger.info(
        f"Protocol finished for {len(actors)} parties in {time.perf_counter() - started:.3f}s, "
        f"Z={transcript.Z:.6f}"
    )
    return transcript


def replay(transcript: ProtocolTranscript,
           keys: Optional[Mapping[str, MaskingKeys]] = None) -> Dict[str, PartyOutcome]:
    """
    Re-solve the final round from the recorded payload frames.

    Without keys only the public outputs (alpha, Z) are reproduced and the
    private fields of each outcome are left empty.
    """
    frames = transcript.payload_frames()
    payloads = {p: decode_payload(unframe(frames[p])) for p in transcript.parties}
    model = assemble_masked_model(payloads, transcript.c, transcript.parties, transcript.use_sparse)
    solution = solve(model.lp, backend=transcript.backend)
    offsets = [payloads[p].offset for p in transcript.parties]

    outcomes = {}
    for party in transcript.parties:
        if keys is not None and party in keys:
            rec = recover(party, keys[party], solution, offsets)
            x, alpha_k = rec.x, rec.alpha_k
        else:
            x, alpha_k = np.zeros(0), np.zeros(0)
        outcomes[party] = PartyOutcome(
            party=party,
            x=x,
            alpha_k=alpha_k,
            alpha=solution.dual(SHARED_CAP).copy(),
            Z=solution.objective - float(np.sum(offsets)),
            Z_bar=solution.objective,
            rounds=transcript.rounds,
            seconds=0.0,
        )
    return outcomes


@dataclass(frozen=True)
class Finding:
    party: str
    kind: str
    message: str


@dataclass
class AuditReport:
    """Result of a semi-honest audit of a transcript."""
    findings: List[Finding] = field(default_factory=list)
    notes: List[Finding] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.findings


def _scaled_permutation(matrix: np.ndarray) -> bool:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        return False
    nonzero = np.abs(matrix) > 1e-12
    return bool(np.all(nonzero.sum(axis=0) == 1) and np.all(nonzero.sum(axis=1) == 1))


def verify_semi_honest(transcript: ProtocolTranscript,
                       settings: MaskingSettings = masking_settings) -> AuditReport:
    """
    Audit a transcript from the point of view of a semi-honest party.

    Flags malformed messages, undersized parties, identity-like incidence
    blocks that were not permuted and structured keys. Square key shapes,
    which the leaked-key reconstruction needs, are recorded as notes.
    """
    report = AuditReport()
    known_types = {MSG_PAYLOAD, MSG_VERDICT}
    for entry in transcript.entries:
        if entry.message_type not in known_types:
            report.findings.append(Finding(entry.sender, "schema", f"unknown message type '{entry.message_type}'"))

    for name, bodies in transcript.frames.items():
        message_type = name.rsplit("/", 1)[0]
        if message_type != MSG_PAYLOAD:
            continue
        for party, body in bodies.items():
            try:
                payload_bytes = unframe(body)
                header, _ = read_header(payload_bytes)
                payload = decode_payload(payload_bytes)
            except WireFormatError as e:
                report.findings.append(Finding(party, "schema", str(e)))
                continue

            if header.party != party:
                report.findings.append(Finding(party, "schema", f"payload claims sender '{header.party}'"))
            if header.n <= settings.privacy_threshold or ADVISORY_SMALL_PARTY in header.advisories:
                report.findings.append(Finding(
                    party, "size", f"n_k={header.n}: {ADVISORY_SMALL_PARTY}"
                ))
            if not header.permuted and (
                ADVISORY_IDENTITY_INCIDENCE in header.advisories or _scaled_permutation(payload.A_bar)
            ):
                report.findings.append(Finding(
                    party, "incidence", f"unpermuted identity-like A_bar: {ADVISORY_IDENTITY_INCIDENCE}"
                ))
            if ADVISORY_SPARSE_KEYS in header.advisories:
                report.findings.append(Finding(party, "keys", ADVISORY_SPARSE_KEYS))
            if header.s == header.n and header.t == header.m_k:
                report.notes.append(Finding(
                    party, "square-keys", "square keys allow full reconstruction if G_k and F_k leak"
                ))

    # one finding per (party, kind) across rounds
    seen = set()
    unique = []
    for finding in report.findings:
        if (finding.party, finding.kind, finding.message) not in seen:
            seen.add((finding.party, finding.kind, finding.message))
            unique.append(finding)
    report.findings = unique
    for finding in report.findings:
        logger.warning(f"Audit finding for party {finding.party}: {finding.message}")
    return report


def transcript_document(transcript: ProtocolTranscript) -> Dict[str, object]:
    """JSON-ready public part of a transcript: message log, alpha and Z."""
    return {
        "parties": list(transcript.parties),
        "rounds": transcript.rounds,
        "c": transcript.c.tolist(),
        "alpha": transcript.alpha.tolist(),
        "Z": transcript.Z,
        "messages": [
            {
                "round": entry.round,
                "sender": entry.sender,
                "message_type": entry.message_type,
                "digest": entry.digest,
                "length": entry.length,
            }
            for entry in transcript.entries
        ],
    }


def outcome_document(outcome: PartyOutcome) -> Dict[str, object]:
    """JSON-ready private outcome of one party."""
    return {
        "party": outcome.party,
        "x": outcome.x.tolist(),
        "alpha_k": outcome.alpha_k.tolist(),
        "alpha": outcome.alpha.tolist(),
        "Z": outcome.Z,
        "Z_bar": outcome.Z_bar,
        "rounds": outcome.rounds,
    }
