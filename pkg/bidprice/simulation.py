# bidprice/simulation.py
"""
Booking request streams and the capacity ledger used by the strategies.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from .exceptions import SimulationError
from .models import AllianceInstance, Path, SimConfig
from .network import arrival_rates, choice_probabilities

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BookingRequest:
    """One arrival: a request for product ``product`` on path ``path_id``."""
    time: float
    path_id: str
    party: str
    product: int
    fare: float


@dataclass(frozen=True)
class ArrivalStream:
    """Per-path Poisson rates and product choice probabilities."""
    rates: Dict[str, float]
    probabilities: Dict[str, np.ndarray]

    @classmethod
    def from_instance(cls, instance: AllianceInstance, config: SimConfig) -> "ArrivalStream":
        rates = arrival_rates(instance, config.load_factor, config.horizon)
        probabilities = {path.id: choice_probabilities(path) for path in instance.paths}
        return cls(rates=rates, probabilities=probabilities)

    def expected_demands(self, remaining: float) -> Dict[str, List[float]]:
        """lambda_s * remaining * p_is for every path and product."""
        return {
            path_id: [float(v) for v in self.rates[path_id] * remaining * probs]
            for path_id, probs in self.probabilities.items()
        }


def generate_arrivals(instance: AllianceInstance, config: SimConfig,
                      rng: np.random.Generator) -> List[BookingRequest]:
    """
    Draw a homogeneous Poisson request stream for every path.

    Each path gets Poisson(lambda_s T) arrivals at uniform times on [0, T);
    every arrival picks its product from p_s. Events come back sorted by time.
    """
    stream = ArrivalStream.from_instance(instance, config)
    events: List[BookingRequest] = []
    for path in instance.paths:
        rate = stream.rates[path.id]
        if rate <= 0:
            continue
        count = int(rng.poisson(rate * config.horizon))
        times = rng.uniform(0.0, config.horizon, size=count)
        products = rng.choice(len(path.products), size=count, p=stream.probabilities[path.id])
        events.extend(
            BookingRequest(float(t), path.id, path.party, int(i), path.products[int(i)].fare)
            for t, i in zip(times, products)
        )
    events.sort(key=lambda e: (e.time, e.path_id))
    logger.debug(f"Generated {len(events)} booking requests over T={config.horizon}")
    return events


def segment_starts(horizon: int, segments: int) -> List[float]:
    """Reoptimization times: the horizon cut into equal segments."""
    if segments < 1:
        raise SimulationError(f"segments must be at least 1, got {segments}")
    return [horizon * i / segments for i in range(segments)]


def split_by_segment(events: Iterable[BookingRequest], horizon: int,
                     segments: int) -> List[List[BookingRequest]]:
    starts = segment_starts(horizon, segments)
    buckets: List[List[BookingRequest]] = [[] for _ in starts]
    for event in events:
        index = min(int(event.time * segments // horizon), segments - 1)
        buckets[index].append(event)
    return buckets


@dataclass
class BookingState:
    """
    Remaining capacities, optional per-party allocations on shared legs and
    the accepted-request ledger.
    """
    capacities: Dict[str, int]
    allocations: Optional[Dict[str, Dict[str, int]]] = None
    ledger: List[BookingRequest] = field(default_factory=list)

    @classmethod
    def from_instance(cls, instance: AllianceInstance) -> "BookingState":
        return cls(capacities={leg.id: leg.capacity for leg in instance.legs})

    @property
    def revenue(self) -> float:
        return float(sum(request.fare for request in self.ledger))

    @property
    def accepts(self) -> int:
        return len(self.ledger)

    def has_capacity(self, path: Path) -> bool:
        return all(self.capacities[leg_id] >= 1 for leg_id in path.legs)

    def has_allocation(self, path: Path) -> bool:
        """True when the path's party still holds allocated units on its allocated legs."""
        if self.allocations is None:
            return True
        own = self.allocations.get(path.party, {})
        return all(own[leg_id] >= 1 for leg_id in path.legs if leg_id in own)

    def accept(self, request: BookingRequest, path: Path) -> None:
        for leg_id in path.legs:
            self.capacities[leg_id] -= 1
            if self.capacities[leg_id] < 0:
                raise SimulationError(f"Capacity of leg '{leg_id}' went negative accepting {request}")
        if self.allocations is not None:
            own = self.allocations.get(path.party, {})
            for leg_id in path.legs:
                if leg_id in own:
                    own[leg_id] -= 1
                    if own[leg_id] < 0:
                        raise SimulationError(
                            f"Allocation of party {path.party} on leg '{leg_id}' went negative"
                        )
        self.ledger.append(request)

