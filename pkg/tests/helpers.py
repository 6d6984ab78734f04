"""
Hand-built instances and checks shared by the tests.
"""
from typing import Dict, List, Tuple

import numpy as np

from bidprice.config import SHARED
from bidprice.models import AllianceInstance, InstanceConfig, Leg, Path, Product
from bidprice.network import AllianceBlocks

# Optimum of the demonstration network worked out by hand
DEMO_Z = 1530.0
DEMO_SHARED_PRICE = 90.0


def star_instance(n_parties: int = 2, hub_capacity: int = 6) -> AllianceInstance:
    """Every party owns one spoke leg and all parties share the hub leg H."""
    parties = [str(k + 1) for k in range(n_parties)]
    legs = [Leg(id="H", capacity=hub_capacity, owner=SHARED)]
    paths: List[Path] = []
    for k, party in enumerate(parties):
        legs.append(Leg(id=f"L{party}", capacity=4, owner=party))
        bump = 5.0 * k
        paths += [
            Path(id=f"{party}-local", party=party, legs=[f"L{party}"],
                 products=[Product(fare=100.0 + bump, mean_demand=2.0, probability=0.4),
                           Product(fare=60.0 + bump, mean_demand=3.0, probability=0.6)]),
            Path(id=f"{party}-hub", party=party, legs=[f"L{party}", "H"],
                 products=[Product(fare=180.0 + bump, mean_demand=2.0, probability=0.5),
                           Product(fare=120.0 + bump, mean_demand=2.0, probability=0.5)]),
            Path(id=f"{party}-direct", party=party, legs=["H"],
                 products=[Product(fare=90.0 + bump, mean_demand=2.0, probability=1.0)]),
        ]
    return AllianceInstance(parties=parties, legs=legs, paths=paths,
                            config=InstanceConfig(horizon=100, load_factor=1.0))


def single_leg_instance() -> AllianceInstance:
    """One party, one leg of capacity 3 and three single-fare paths on it."""
    legs = [Leg(id="L", capacity=3, owner="1")]
    paths = [
        Path(id="high", party="1", legs=["L"], products=[Product(fare=100.0, probability=1.0)]),
        Path(id="mid", party="1", legs=["L"], products=[Product(fare=60.0, probability=1.0)]),
        Path(id="low", party="1", legs=["L"], products=[Product(fare=40.0, probability=1.0)]),
    ]
    return AllianceInstance(parties=["1"], legs=legs, paths=paths, config=InstanceConfig(horizon=10))


def collective_dual_check(blocks: AllianceBlocks, alpha: np.ndarray, alpha_k: Dict[str, np.ndarray],
                          upper: Dict[str, np.ndarray]) -> Tuple[float, float]:
    """Worst dual infeasibility and the dual objective of (alpha, alpha_k, lambda)."""
    worst = float(np.max(-alpha, initial=0.0))
    objective = float(blocks.c @ alpha)
    for party in blocks.parties:
        pb = blocks[party]
        reduced = pb.r - pb.A.T @ alpha - pb.B.T @ alpha_k[party] - upper[party]
        worst = max(worst, float(np.max(reduced, initial=0.0)),
                    float(np.max(-alpha_k[party], initial=0.0)), float(np.max(-upper[party], initial=0.0)))
        objective += float(pb.c_k @ alpha_k[party]) + float(np.sum(upper[party]))
    return worst, objective


