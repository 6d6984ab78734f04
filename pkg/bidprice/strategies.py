# bidprice/strategies.py
"""
Booking control strategies and the replication driver.

CP solves the collective model with full information, CCS runs the masked
protocol and books against the recovered bid-prices and allocations, IC
splits every shared leg up front and lets each party solve alone. All three
reoptimize at the start of every segment with the remaining capacities and
the remaining-horizon expected demand.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from config.settings import simulation_settings
from .channel import InProcessChannel
from .config import PARTY_CAP, SHARED_CAP, group_label
from .exceptions import SimulationError
from .lp import build_collective, build_individual, solve
from .masking import KeyKind, KeyPolicy
from .models import AllianceInstance, SimConfig
from .network import AllianceBlocks, assemble_blocks
from .protocol import run_protocol
from .seeding import derive_seed, make_rng
from .simulation import ArrivalStream, BookingRequest, BookingState, generate_arrivals, segment_starts, split_by_segment

logger = logging.getLogger(__name__)

# fares within this of the bid-price sum count as covering it
ACCEPT_TOL = 1e-7
ALLOCATION_GUARD = 1e-6


class Strategy(str, Enum):
    CP = "cp"
    CCS = "ccs"
    IC = "ic"


@dataclass
class SegmentPlan:
    """Bid-prices per party and leg, plus CCS booking limits when enabled."""
    prices: Dict[str, Dict[str, float]]
    allocations: Optional[Dict[str, Dict[str, int]]] = None
    solve_ms: float = 0.0


@dataclass
class ReplicationResult:
    strategy: str
    replication: int
    revenue: float
    accepts: int
    requests: int
    solve_ms: List[float] = field(default_factory=list)
    decisions: List[bool] = field(default_factory=list)


@dataclass
class SimResult:
    """Every replication of every strategy in one simulation run."""
    config: SimConfig
    replications: List[ReplicationResult] = field(default_factory=list)

    def of(self, strategy: str) -> List[ReplicationResult]:
        return [r for r in self.replications if r.strategy == strategy]

    def mean_revenue(self, strategy: str) -> float:
        revenues = [r.revenue for r in self.of(strategy)]
        return float(np.mean(revenues)) if revenues else float("nan")


def leg_prices(blocks: AllianceBlocks, alpha: np.ndarray,
               alpha_k: Mapping[str, np.ndarray]) -> Dict[str, float]:
    """Map shared and private row duals onto leg ids."""
    prices = {leg_id: float(alpha[j]) for j, leg_id in enumerate(blocks.shared_legs)}
    for party in blocks.parties:
        for i, leg_id in enumerate(blocks[party].private_legs):
            prices[leg_id] = float(alpha_k[party][i])
    return prices


def largest_remainder(total: int, weights: Sequence[float]) -> np.ndarray:
    """Integer split of ``total`` proportional to ``weights`` that sums exactly to ``total``."""
    weights = np.asarray(weights, dtype=float)
    if weights.sum() <= 0:
        weights = np.ones_like(weights)
    exact = total * weights / weights.sum()
    shares = np.floor(exact).astype(int)
    order = np.argsort(-(exact - shares), kind="stable")
    shares[order[:total - int(shares.sum())]] += 1
    return shares


def individual_shares(instance: AllianceInstance, stream: ArrivalStream,
                      horizon: int) -> Dict[str, Dict[str, int]]:
    """
    Hard-block split of every shared leg proportional to each party's
    expected demand on it over the whole horizon.
    """
    demand = {party: {} for party in instance.parties}
    shared = [leg for leg in instance.legs if leg.shared]
    for leg in shared:
        for party in instance.parties:
            demand[party][leg.id] = sum(
                stream.rates[path.id] * horizon for path in instance.paths_of(party) if leg.id in path.legs
            )

    shares: Dict[str, Dict[str, int]] = {party: {} for party in instance.parties}
    for leg in shared:
        split = largest_remainder(leg.capacity, [demand[p][leg.id] for p in instance.parties])
        for party, units in zip(instance.parties, split):
            shares[party][leg.id] = int(units)
    return shares


def tighten(capacities: np.ndarray, offset: float) -> np.ndarray:
    """Lower every open capacity by ``offset`` seats; closed ones stay at zero."""
    capacities = np.asarray(capacities, dtype=float)
    if not offset:
        return capacities
    return np.where(capacities > 0, capacities - offset, capacities)


def pricing_blocks(instance: AllianceInstance, capacity_offset: float = 0.0) -> AllianceBlocks:
    """
    Blocks of the pricing model.

    With integral capacities and unit breakpoints every binding row is dual
    degenerate and each solver may return a different bid-price. Taking a
    fraction of a seat off every open capacity leaves the marginal unit
    basic, which pins the duals.
    """
    blocks = assemble_blocks(instance)
    if not capacity_offset:
        return blocks
    return replace(
        blocks,
        c=tighten(blocks.c, capacity_offset),
        party_blocks={
            party: replace(pb, c_k=tighten(pb.c_k, capacity_offset))
            for party, pb in blocks.party_blocks.items()
        },
    )


def plan_cp(instance: AllianceInstance, backend: Optional[str] = None,
            capacity_offset: float = 0.0) -> SegmentPlan:
    """Bid-prices of the collective model."""
    blocks = pricing_blocks(instance, capacity_offset)
    started = time.perf_counter()
    solution = solve(build_collective(blocks), backend=backend)
    elapsed = (time.perf_counter() - started) * 1000.0
    if not solution.optimal:
        raise SimulationError(f"Collective model ended {solution.status.value}")
    alpha_k = {p: solution.dual(group_label(PARTY_CAP, p)) for p in blocks.parties}
    prices = leg_prices(blocks, solution.dual(SHARED_CAP), alpha_k)
    return SegmentPlan(prices={p: prices for p in blocks.parties}, solve_ms=elapsed)


def plan_ccs(instance: AllianceInstance, policy: KeyPolicy, seed: int, booking_limits: bool = True,
             backend: Optional[str] = None, capacity_offset: float = 0.0) -> SegmentPlan:
    """Run the masked protocol and book against what each party recovers."""
    blocks = pricing_blocks(instance, capacity_offset)
    started = time.perf_counter()
    transcript = run_protocol(blocks, InProcessChannel(), policy, seed=seed, backend=backend)
    elapsed = (time.perf_counter() - started) * 1000.0

    outcomes = transcript.outcomes
    alpha_k = {p: outcomes[p].alpha_k for p in blocks.parties}
    prices = {p: leg_prices(blocks, outcomes[p].alpha, alpha_k) for p in blocks.parties}

    allocations = None
    if booking_limits:
        allocations = {}
        for party in blocks.parties:
            used = blocks[party].A @ outcomes[party].x
            allocations[party] = {
                leg_id: int(math.floor(used[j] + ALLOCATION_GUARD)) for j, leg_id in enumerate(blocks.shared_legs)
            }
    return SegmentPlan(prices=prices, allocations=allocations, solve_ms=elapsed)


def plan_ic(instance: AllianceInstance, remaining_shares: Mapping[str, Mapping[str, int]],
            backend: Optional[str] = None, capacity_offset: float = 0.0) -> SegmentPlan:
    """Every party solves its individual model on its remaining hard block."""
    blocks = pricing_blocks(instance, capacity_offset)
    prices: Dict[str, Dict[str, float]] = {}
    elapsed = 0.0
    for party in blocks.parties:
        share = np.array([remaining_shares[party][leg_id] for leg_id in blocks.shared_legs], dtype=float)
        share = tighten(share, capacity_offset)
        started = time.perf_counter()
        solution = solve(build_individual(blocks, party, share), backend=backend)
        elapsed += (time.perf_counter() - started) * 1000.0
        if not solution.optimal:
            raise SimulationError(f"Individual model of party {party} ended {solution.status.value}")
        own = {leg_id: float(v) for leg_id, v in zip(blocks.shared_legs, solution.dual(SHARED_CAP))}
        own.update(zip(blocks[party].private_legs, map(float, solution.dual(group_label(PARTY_CAP, party)))))
        prices[party] = own
    return SegmentPlan(prices=prices, solve_ms=elapsed)


def run_strategy(
    strategy: Strategy,
    instance: AllianceInstance,
    events: Sequence[BookingRequest],
    config: SimConfig,
    replication: int = 0,
    key_policy: Optional[KeyPolicy] = None,
    backend: Optional[str] = None,
) -> ReplicationResult:
    """
    Replay one request stream under a strategy.

    A request is accepted iff its fare covers the bid-prices of the legs it
    uses, every leg has a unit left and, where allocations apply, the
    party's allocation on every shared leg has a unit left.
    """
    strategy = Strategy(strategy)
    stream = ArrivalStream.from_instance(instance, config)
    state = BookingState.from_instance(instance)
    paths = {path.id: path for path in instance.paths}
    if strategy == Strategy.IC:
        state.allocations = individual_shares(instance, stream, config.horizon)
    if strategy == Strategy.CCS and key_policy is None:
        key_policy = KeyPolicy.from_settings(kind=KeyKind(config.key_kind))

    result = ReplicationResult(strategy=strategy.value, replication=replication, revenue=0.0, accepts=0,
                               requests=len(events))
    starts = segment_starts(config.horizon, config.segments)
    for segment, bucket in enumerate(split_by_segment(events, config.horizon, config.segments)):
        current = instance.with_state(
            capacities=dict(state.capacities),
            demands=stream.expected_demands(config.horizon - starts[segment]),
        )
        if strategy == Strategy.CP:
            plan = plan_cp(current, backend, config.capacity_offset)
        elif strategy == Strategy.CCS:
            seed = derive_seed(config.seed, "protocol", replication, segment)
            plan = plan_ccs(current, key_policy, seed, config.booking_limits, backend, config.capacity_offset)
            state.allocations = plan.allocations
        else:
            plan = plan_ic(current, state.allocations, backend, config.capacity_offset)
        result.solve_ms.append(plan.solve_ms)

        for request in bucket:
            path = paths[request.path_id]
            price = sum(plan.prices[path.party][leg_id] for leg_id in path.legs)
            accepted = (
                request.fare >= price - ACCEPT_TOL
                and state.has_capacity(path)
                and state.has_allocation(path)
            )
            if accepted:
                state.accept(request, path)
            result.decisions.append(accepted)
        logger.debug(
            f"{strategy.value} replication {replication} segment {segment}: "
            f"{len(bucket)} requests, revenue so far {state.revenue:.2f}"
        )

    result.revenue = state.revenue
    result.accepts = state.accepts
    return result


def run_cp(instance: AllianceInstance, events: Sequence[BookingRequest], config: SimConfig,
           replication: int = 0, backend: Optional[str] = None) -> ReplicationResult:
    return run_strategy(Strategy.CP, instance, events, config, replication, backend=backend)


def run_ccs(instance: AllianceInstance, events: Sequence[BookingRequest], config: SimConfig,
            key_policy: Optional[KeyPolicy] = None, replication: int = 0,
            backend: Optional[str] = None) -> ReplicationResult:
    return run_strategy(Strategy.CCS, instance, events, config, replication, key_policy, backend)


def run_ic(instance: AllianceInstance, events: Sequence[BookingRequest], config: SimConfig,
           replication: int = 0, backend: Optional[str] = None) -> ReplicationResult:
    return run_strategy(Strategy.IC, instance, events, config, replication, backend=backend)


def simulate(
    instance: AllianceInstance,
    config: SimConfig,
    key_policy: Optional[KeyPolicy] = None,
    workers: Optional[int] = None,
    backend: Optional[str] = None,
) -> SimResult:
    """
    Run every configured strategy on the same request stream per replication.

    Replications run on a thread pool; each one draws its stream from a
    sub-seed derived from the master seed and the replication index.
    """
    workers = workers or simulation_settings.workers

    def replicate(replication: int) -> List[ReplicationResult]:
        events = generate_arrivals(instance, config, make_rng(config.seed, "replication", replication))
        return [
            run_strategy(Strategy(name), instance, events, config, replication, key_policy, backend)
            for name in config.strategies
        ]

    started = time.perf_counter()
    result = SimResult(config=config)
    with ThreadPoolExecutor(max_workers=max(1, workers), thread_name_prefix="replication") as pool:
        for batch in pool.map(replicate, range(config.replications)):
            result.replications.extend(batch)

    summary = ", ".join(f"{s}={result.mean_revenue(s):.2f}" for s in config.strategies)
    logger.info(
        f"Simulated {config.replications} replications in {time.perf_counter() - started:.1f}s: "
        f"mean revenue {summary}"
    )
    return result
