# bidprice/network.py
"""
Alliance networks: breakpoint expansion, partitioned LP blocks and synthetic instances.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Dict, List, Optional, Tuple

import numpy as np

from config.settings import NetworkSettings, network_settings
from .config import SHARED
from .exceptions import NetworkModelError
from .models import AllianceInstance, InstanceConfig, Leg, Path, Product, SimConfig
from .seeding import make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartyBlocks:
    """One party's slice of the capacity-sharing LP."""
    party: str
    r: np.ndarray
    A: np.ndarray
    B: np.ndarray
    c_k: np.ndarray
    private_legs: Tuple[str, ...]
    columns: Tuple[Tuple[str, int], ...]
    breakpoints: Dict[str, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.r.shape[0])

    @property
    def m_k(self) -> int:
        return int(self.c_k.shape[0])

    def path_slices(self) -> Dict[str, slice]:
        """Column range of every path's breakpoint variables."""
        slices: Dict[str, slice] = {}
        start = 0
        for path_id, count in self.breakpoints.items():
            slices[path_id] = slice(start, start + count)
            start += count
        return slices


@dataclass(frozen=True)
class AllianceBlocks:
    """Shared capacities plus every party's blocks."""
    parties: Tuple[str, ...]
    shared_legs: Tuple[str, ...]
    c: np.ndarray
    party_blocks: Dict[str, PartyBlocks]

    @property
    def m(self) -> int:
        return int(self.c.shape[0])

    def __getitem__(self, party: str) -> PartyBlocks:
        return self.party_blocks[party]


def _rounded(value: float) -> int:
    return int(math.floor(value + 0.5))


def expand_concave_to_breakpoints(path: Path, cap_bound: int) -> np.ndarray:
    """
    Marginal revenues of the greedy single-path DLP.

    The b-th entry is phi(b) - phi(b-1), where phi(x) allocates x units to the
    path's fare classes highest fare first, each class capped at its rounded
    mean demand.
    """
    if not path.products:
        raise NetworkModelError(f"path has no products: '{path.id}'")
    if cap_bound < 0:
        raise NetworkModelError(f"cap_bound must be nonnegative, got {cap_bound}")

    revenues = np.zeros(cap_bound)
    position = 0
    for product in sorted(path.products, key=lambda p: p.fare, reverse=True):
        units = min(_rounded(product.mean_demand), cap_bound - position)
        if units <= 0:
            continue
        revenues[position:position + units] = product.fare
        position += units
        if position >= cap_bound:
            break
    return revenues


def breakpoint_count(path: Path, legs: Dict[str, Leg], max_breakpoints: int) -> int:
    """Number of unit intervals used for a path's revenue function; 0 when a leg is closed."""
    min_capacity = min(legs[leg_id].capacity for leg_id in path.legs)
    total_demand = sum(_rounded(p.mean_demand) for p in path.products)
    if min_capacity <= 0:
        return 0
    return max(1, min(min_capacity, total_demand + 1, max_breakpoints))


def assemble_blocks(instance: AllianceInstance, max_breakpoints: Optional[int] = None) -> AllianceBlocks:
    """Expand an instance into (r_k, A_k, B_k, c, c_k) for every party."""
    max_breakpoints = max_breakpoints or instance.config.max_breakpoints
    legs = instance.leg_map()
    users = instance.leg_users()

    for leg in instance.legs:
        if leg.shared and len(users[leg.id]) < 2:
            raise NetworkModelError(
                f"shared leg '{leg.id}' is used by {len(users[leg.id])} party; shared legs need at least two"
            )

    shared_legs = tuple(leg.id for leg in instance.legs if leg.shared)
    shared_row = {leg_id: i for i, leg_id in enumerate(shared_legs)}
    c = np.array([legs[leg_id].capacity for leg_id in shared_legs], dtype=float)

    party_blocks: Dict[str, PartyBlocks] = {}
    for party in instance.parties:
        private_legs = tuple(leg.id for leg in instance.legs if leg.owner == party)
        private_row = {leg_id: i for i, leg_id in enumerate(private_legs)}
        paths = instance.paths_of(party)

        counts: Dict[str, int] = {}
        revenues: List[np.ndarray] = []
        for path in paths:
            for leg_id in path.legs:
                owner = legs[leg_id].owner
                if owner != SHARED and owner != party:
                    raise NetworkModelError(
                        f"cross-party private leg: path '{path.id}' of party '{party}' uses leg "
                        f"'{leg_id}' owned by party '{owner}'"
                    )
            count = breakpoint_count(path, legs, max_breakpoints)
            counts[path.id] = count
            revenues.append(expand_concave_to_breakpoints(path, count))

        n_k = sum(counts.values())
        A = np.zeros((len(shared_legs), n_k))
        B = np.zeros((len(private_legs), n_k))
        columns: List[Tuple[str, int]] = []
        start = 0
        for path in paths:
            count = counts[path.id]
            for leg_id in path.legs:
                if leg_id in shared_row:
                    A[shared_row[leg_id], start:start + count] = 1.0
                else:
                    B[private_row[leg_id], start:start + count] = 1.0
            columns.extend((path.id, b) for b in range(1, count + 1))
            start += count

        party_blocks[party] = PartyBlocks(
            party=party,
            r=np.concatenate(revenues) if revenues else np.zeros(0),
            A=A,
            B=B,
            c_k=np.array([legs[leg_id].capacity for leg_id in private_legs], dtype=float),
            private_legs=private_legs,
            columns=tuple(columns),
            breakpoints=counts,
        )
        logger.debug(f"Party {party}: n_k={n_k}, m_k={len(private_legs)}")

    return AllianceBlocks(
        parties=tuple(instance.parties),
        shared_legs=shared_legs,
        c=c,
        party_blocks=party_blocks,
    )


def arrival_rates(instance: AllianceInstance, load_factor: float, horizon: int) -> Dict[str, float]:
    """
    Path request rates from leg loads.

    mu_j = rho * c_j / (T * N_j) with N_j the number of paths on leg j, and
    lambda_s is the mean of mu_j over the legs of s.
    """
    legs = instance.leg_map()
    path_count = {leg_id: 0 for leg_id in legs}
    for path in instance.paths:
        for leg_id in path.legs:
            path_count[leg_id] += 1

    mu = {
        leg_id: (load_factor * legs[leg_id].capacity / (horizon * count) if count else 0.0)
        for leg_id, count in path_count.items()
    }
    return {path.id: float(np.mean([mu[leg_id] for leg_id in path.legs])) for path in instance.paths}


def choice_probabilities(path: Path) -> np.ndarray:
    """Product choice probabilities of a path, falling back to demand shares."""
    probs = np.array([p.probability for p in path.products], dtype=float)
    if probs.sum() <= 0:
        probs = np.array([p.mean_demand for p in path.products], dtype=float)
    if probs.sum() <= 0:
        probs = np.ones(len(path.products))
    return probs / probs.sum()


def random_partition(c: np.ndarray, n_parties: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Random integer split of every shared capacity among the parties."""
    shares = np.zeros((n_parties, c.shape[0]))
    for j, capacity in enumerate(c):
        weights = rng.dirichlet(np.ones(n_parties))
        shares[:, j] = rng.multinomial(int(capacity), weights)
    return [shares[k] for k in range(n_parties)]


def _candidate_paths(
    spoke_hub: List[int], spoke_home: List[str]
) -> List[Tuple[Tuple[str, ...], Tuple[str, ...]]]:
    """All 1-leg and 2-leg hub-and-spoke paths as (legs, leg home parties)."""
    candidates: List[Tuple[Tuple[str, ...], Tuple[str, ...]]] = []
    for s, hub in enumerate(spoke_hub):
        candidates.append(((f"S{s}-H{hub}",), (spoke_home[s],)))
        candidates.append(((f"H{hub}-S{s}",), (spoke_home[s],)))
    for s, hub in enumerate(spoke_hub):
        for t, other_hub in enumerate(spoke_hub):
            if s != t and hub == other_hub:
                candidates.append(
                    ((f"S{s}-H{hub}", f"H{hub}-S{t}"), (spoke_home[s], spoke_home[t]))
                )
    return candidates


def generate_instance(
    seed: int,
    n_paths: int,
    n_parties: int,
    hub_count: int = 2,
    load_factor: float = 1.2,
    horizon: int = 1000,
    settings: NetworkSettings = network_settings,
) -> Tuple[AllianceInstance, SimConfig]:
    """
    Generate a synthetic hub-and-spoke alliance.

    Spokes are homed at parties; most paths run over a single party's legs and
    an ``interline_fraction`` of them cross into another party's legs. Legs
    used by paths of two or more parties become shared.
    """
    if n_parties < 2 or n_paths < n_parties:
        raise NetworkModelError(
            f"need n_paths >= n_parties >= 2, got n_paths={n_paths}, n_parties={n_parties}"
        )
    if hub_count < 1:
        raise NetworkModelError(f"hub_count must be positive, got {hub_count}")

    rng = make_rng(seed, "generate")
    parties = [str(k + 1) for k in range(n_parties)]

    n_spokes = max(2 * n_parties, math.ceil(n_paths / 4))
    while True:
        order = rng.permutation(n_spokes)
        spoke_home = [parties[int(i) % n_parties] for i in order]
        spoke_hub = [int(h) for h in rng.integers(0, hub_count, size=n_spokes)]
        candidates = _candidate_paths(spoke_hub, spoke_home)
        if len(candidates) >= n_paths:
            break
        n_spokes += 1

    online = [i for i, (_, homes) in enumerate(candidates) if len(set(homes)) == 1]
    interline = [i for i, (_, homes) in enumerate(candidates) if len(set(homes)) > 1]

    chosen: List[int] = []
    # one single-leg path per party first so nobody ends up empty
    for party in parties:
        own = [i for i in online if len(candidates[i][0]) == 1 and candidates[i][1][0] == party]
        chosen.append(int(rng.choice(own)))
    n_interline = min(len(interline), int(round(settings.interline_fraction * n_paths)))
    if n_interline:
        chosen.extend(int(i) for i in rng.choice(interline, size=n_interline, replace=False))
    remaining_pool = [i for i in online if i not in set(chosen)]
    n_rest = n_paths - len(chosen)
    if n_rest > len(remaining_pool):
        remaining_pool += [i for i in interline if i not in set(chosen)]
    chosen.extend(int(i) for i in rng.choice(remaining_pool, size=n_rest, replace=False))

    path_specs: List[Tuple[str, Tuple[str, ...]]] = []
    for i in chosen:
        leg_ids, homes = candidates[i]
        party = homes[0] if len(set(homes)) == 1 else str(rng.choice(sorted(set(homes))))
        path_specs.append((party, leg_ids))

    used_by: Dict[str, List[str]] = {}
    for party, leg_ids in path_specs:
        for leg_id in leg_ids:
            users = used_by.setdefault(leg_id, [])
            if party not in users:
                users.append(party)

    legs = [
        Leg(
            id=leg_id,
            capacity=int(rng.integers(settings.capacity_low, settings.capacity_high + 1)),
            owner=SHARED if len(users) >= 2 else users[0],
        )
        for leg_id, users in sorted(used_by.items())
    ]
    leg_caps = {leg.id: leg.capacity for leg in legs}
    path_count = {leg.id: len([1 for _, ids in path_specs if leg.id in ids]) for leg in legs}
    mu = {
        leg_id: load_factor * leg_caps[leg_id] / (horizon * path_count[leg_id]) for leg_id in leg_caps
    }

    paths: List[Path] = []
    for index, (party, leg_ids) in enumerate(path_specs):
        rate = float(np.mean([mu[leg_id] for leg_id in leg_ids]))
        n_products = int(rng.integers(settings.products_low, settings.products_high + 1))
        base = float(rng.uniform(settings.fare_low, settings.fare_high)) * (1.0 + 0.6 * (len(leg_ids) - 1))
        multipliers = np.sort(rng.uniform(0.35, 1.0, size=n_products))[::-1]
        multipliers[0] = 1.0
        probs = rng.dirichlet(np.full(n_products, settings.dirichlet_alpha))
        products = [
            Product(
                fare=round(base * float(mult), 2),
                mean_demand=rate * horizon * float(p),
                probability=float(p),
            )
            for mult, p in zip(multipliers, probs)
        ]
        paths.append(
            Path(id=f"P{index:04d}", party=party, legs=list(leg_ids), products=products)
        )

    instance = AllianceInstance(
        parties=parties,
        legs=legs,
        paths=paths,
        config=InstanceConfig(
            seed=seed,
            horizon=horizon,
            load_factor=load_factor,
            max_breakpoints=settings.max_breakpoints,
            hub_count=hub_count,
        ),
    )
    shared = sum(1 for leg in legs if leg.shared)
    logger.info(
        f"Generated instance: {len(paths)} paths, {len(legs)} legs ({shared} shared), {n_parties} parties"
    )
    return instance, SimConfig(horizon=horizon, load_factor=load_factor, seed=seed)


def demo_instance(max_breakpoints: int = 20, horizon: int = 100) -> AllianceInstance:
    """
    Two parties on a four-leg network.

    Party 1 operates leg 1-3, party 2 operates legs 2-3 and 2-4, and leg 3-4
    is shared by both parties.
    """
    legs = [
        Leg(id="1-3", capacity=4, owner="1"),
        Leg(id="3-4", capacity=5, owner=SHARED),
        Leg(id="2-3", capacity=3, owner="2"),
        Leg(id="2-4", capacity=4, owner="2"),
    ]
    routes = [
        ("1>3", "1", ["1-3"], [(120.0, 2.0), (70.0, 3.0)]),
        ("1>3>4", "1", ["1-3", "3-4"], [(200.0, 2.0), (140.0, 2.0)]),
        ("3>4", "1", ["3-4"], [(90.0, 3.0)]),
        ("2>3>4", "2", ["2-3", "3-4"], [(180.0, 2.0), (110.0, 2.0)]),
        ("2>4", "2", ["2-4"], [(100.0, 3.0), (60.0, 2.0)]),
        ("2>3", "2", ["2-3"], [(80.0, 2.0)]),
    ]
    paths = []
    for path_id, party, leg_ids, classes in routes:
        total = sum(d for _, d in classes)
        paths.append(
            Path(
                id=path_id,
                party=party,
                legs=leg_ids,
                products=[Product(fare=f, mean_demand=d, probability=d / total) for f, d in classes],
            )
        )
    return AllianceInstance(
        parties=["1", "2"],
        legs=legs,
        paths=paths,
        config=InstanceConfig(horizon=horizon, load_factor=1.0, max_breakpoints=max_breakpoints),
    )


def instance_to_json(instance: AllianceInstance) -> str:
    """Serialize an instance as an indented, key-ordered JSON document."""
    return json.dumps(instance.model_dump(mode="json"), indent=2) + "\n"


def save_instance(instance: AllianceInstance, path: FilePath) -> None:
    """Write an instance file."""
    FilePath(path).write_text(instance_to_json(instance), encoding="utf-8")


def load_instance(path: FilePath) -> AllianceInstance:
    """Read an instance file."""
    try:
        return AllianceInstance.model_validate_json(FilePath(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise NetworkModelError(f"Malformed instance file '{path}': {e}") from e


def shared_leg_count(instance: AllianceInstance) -> int:
    return sum(1 for leg in instance.legs if leg.shared)


def party_path_counts(instance: AllianceInstance) -> Dict[str, int]:
    return {party: len(instance.paths_of(party)) for party in instance.parties}


def check_breakpoint_ordering(blocks: AllianceBlocks) -> bool:
    """True when every path's partial revenues are nonincreasing."""
    for party_blocks in blocks.party_blocks.values():
        for sl in party_blocks.path_slices().values():
            if np.any(np.diff(party_blocks.r[sl]) > 0):
                return False
    return True


def incidence_columns_repeat(blocks: AllianceBlocks) -> bool:
    """True when every path's B_s columns in A_k and B_k are identical copies."""
    for party_blocks in blocks.party_blocks.values():
        stacked = np.vstack([party_blocks.A, party_blocks.B])
        for sl in party_blocks.path_slices().values():
            group = stacked[:, sl]
            if group.shape[1] and not np.all(group == group[:, :1]):
                return False
    return True


