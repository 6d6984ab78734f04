"""
Tests for the CP, CCS and IC booking strategies and the replication driver.
"""
import numpy as np
import pytest

from bidprice.masking import KeyPolicy
from bidprice.models import SimConfig
from bidprice.network import generate_instance
from bidprice.seeding import make_rng
from bidprice.simulation import ArrivalStream, BookingRequest, generate_arrivals
from bidprice.strategies import (
    Strategy,
    individual_shares,
    largest_remainder,
    plan_ccs,
    plan_cp,
    plan_ic,
    run_ccs,
    run_cp,
    run_ic,
    run_strategy,
    simulate,
    tighten,
)
from tests.helpers import DEMO_SHARED_PRICE, single_leg_instance, star_instance

pytestmark = pytest.mark.unit


def _single_leg_stream():
    """A cheap request first, then more top-fare requests than seats."""
    requests = [BookingRequest(1.0, "low", "1", 0, 40.0)]
    requests += [BookingRequest(float(t), "high", "1", 0, 100.0) for t in (2, 3, 4, 5)]
    return requests


class TestLargestRemainder:
    def test_even_split_favours_first(self):
        assert largest_remainder(5, [1, 1]).tolist() == [3, 2]

    def test_sums_to_total(self):
        for total in range(0, 12):
            assert largest_remainder(total, [0.2, 1.3, 2.9]).sum() == total

    def test_proportional(self):
        assert largest_remainder(10, [1.0, 3.0]).tolist() == [3, 7]

    def test_zero_weights_split_evenly(self):
        assert largest_remainder(4, [0.0, 0.0]).tolist() == [2, 2]


class TestPlans:
    def test_individual_shares_on_symmetric_star(self):
        instance = star_instance(2)
        stream = ArrivalStream.from_instance(instance, SimConfig(horizon=100))
        assert individual_shares(instance, stream, 100) == {"1": {"H": 3}, "2": {"H": 3}}

    def test_shares_cover_hub(self, star):
        stream = ArrivalStream.from_instance(star, SimConfig(horizon=100))
        shares = individual_shares(star, stream, 100)
        assert sum(shares[p]["H"] for p in star.parties) == 6

    def test_cp_prices_match_collective_duals(self, demo):
        plan = plan_cp(demo)
        assert plan.prices["1"]["3-4"] == pytest.approx(DEMO_SHARED_PRICE)
        assert plan.prices["2"]["2-3"] == pytest.approx(80.0)
        assert plan.allocations is None

    def test_ccs_prices_match_cp_on_demo(self, demo):
        plan = plan_ccs(demo, KeyPolicy(), seed=3)
        for party in demo.parties:
            assert plan.prices[party]["3-4"] == pytest.approx(DEMO_SHARED_PRICE, abs=1e-6)
        assert plan.prices["2"]["2-3"] == pytest.approx(80.0, abs=1e-6)
        # five shared seats, all planned
        assert sum(plan.allocations[p]["3-4"] for p in demo.parties) == 5

    def test_offset_capacities_pin_the_bid_prices(self, demo):
        expected = {"3-4": 90.0, "1-3": 110.0, "2-3": 80.0, "2-4": 60.0}
        cp = plan_cp(demo, capacity_offset=0.5)
        ccs = plan_ccs(demo, KeyPolicy(), seed=3, capacity_offset=0.5)
        for party in demo.parties:
            for leg_id, price in cp.prices[party].items():
                assert price == pytest.approx(expected[leg_id], abs=1e-6)
                assert ccs.prices[party][leg_id] == pytest.approx(price, abs=1e-6)

    def test_tighten_leaves_closed_capacity(self):
        assert tighten(np.array([0.0, 3.0]), 0.5).tolist() == [0.0, 2.5]
        assert tighten(np.array([2.0]), 0.0).tolist() == [2.0]

    def test_ccs_without_limits(self, demo):
        assert plan_ccs(demo, KeyPolicy(), seed=3, booking_limits=False).allocations is None

    def test_ic_prices_per_party(self, demo):
        plan = plan_ic(demo, {"1": {"3-4": 5}, "2": {"3-4": 0}})
        assert set(plan.prices) == {"1", "2"}
        assert set(plan.prices["1"]) == {"3-4", "1-3"}
        assert set(plan.prices["2"]) == {"3-4", "2-3", "2-4"}


class TestRunStrategy:
    def test_cp_hand_trace(self):
        instance = single_leg_instance()
        config = SimConfig(horizon=10, load_factor=3.0, segments=1)
        result = run_cp(instance, _single_leg_stream(), config)
        assert result.decisions == [False, True, True, True, False]
        assert result.revenue == 300.0
        assert result.accepts == 3
        assert result.requests == 5
        assert len(result.solve_ms) == 1

    def test_ic_equals_cp_for_a_single_party(self):
        instance = single_leg_instance()
        config = SimConfig(horizon=10, load_factor=3.0, segments=2)
        events = generate_arrivals(instance, config, make_rng(21))
        cp = run_cp(instance, events, config)
        ic = run_ic(instance, events, config)
        assert ic.decisions == cp.decisions
        assert ic.revenue == cp.revenue

    def test_slack_capacity_accepts_everything(self):
        instance = star_instance(2).with_state(capacities={"H": 1000, "L1": 1000, "L2": 1000})
        config = SimConfig(horizon=100, load_factor=0.01, segments=2, booking_limits=False)
        events = generate_arrivals(instance, config, make_rng(8))
        for strategy in Strategy:
            result = run_strategy(strategy, instance, events, config)
            assert all(result.decisions), strategy
            assert result.revenue == pytest.approx(sum(e.fare for e in events))

    def test_ccs_respects_capacities_and_allocations(self):
        instance = star_instance(2)
        config = SimConfig(horizon=100, load_factor=2.0, segments=3)
        events = generate_arrivals(instance, config, make_rng(13))
        result = run_ccs(instance, events, config, KeyPolicy(permute=True), replication=4)
        assert len(result.decisions) == len(events)
        assert result.accepts == sum(result.decisions)
        assert result.revenue == pytest.approx(sum(e.fare for e, ok in zip(events, result.decisions) if ok))
        accepted_on_hub = sum(ok for e, ok in zip(events, result.decisions) if e.path_id.endswith(("hub", "direct")))
        assert accepted_on_hub <= 6
        assert len(result.solve_ms) == 3

    def test_identity_keys_reproduce_cp_decisions(self):
        instance, _ = generate_instance(4, n_paths=30, n_parties=2, horizon=200)
        config = SimConfig(horizon=200, load_factor=1.2, segments=5, key_kind="identity", booking_limits=False)
        for replication in range(10):
            events = generate_arrivals(instance, config, make_rng(config.seed, "replication", replication))
            cp = run_cp(instance, events, config, replication)
            ccs = run_strategy(Strategy.CCS, instance, events, config, replication)
            assert ccs.decisions == cp.decisions, replication
            assert ccs.revenue == cp.revenue

    def test_unknown_strategy(self, demo):
        with pytest.raises(ValueError):
            run_strategy("fcfs", demo, [], SimConfig())


class TestSimulate:
    def test_every_strategy_sees_the_same_stream(self):
        config = SimConfig(horizon=50, load_factor=1.2, segments=2, replications=2, seed=5)
        result = simulate(star_instance(2), config, workers=2)
        assert len(result.replications) == 6
        for replication in range(2):
            requests = {r.requests for r in result.replications if r.replication == replication}
            assert len(requests) == 1

    def test_deterministic_in_seed(self):
        config = SimConfig(horizon=50, segments=2, replications=2, seed=9, strategies=["cp", "ic"])
        first = simulate(star_instance(2), config)
        second = simulate(star_instance(2), config, workers=2)
        assert [r.revenue for r in first.replications] == [r.revenue for r in second.replications]
        assert first.mean_revenue("cp") == pytest.approx(np.mean([r.revenue for r in first.of("cp")]))
        assert np.isnan(first.mean_revenue("ccs"))


@pytest.mark.slow
def test_revenue_ordering_at_desk_scale():
    """CP >= CCS > IC in mean revenue on a 100-path two-party network under medium load."""
    instance, _ = generate_instance(0, n_paths=100, n_parties=2, load_factor=1.2, horizon=1000)
    # the recovered optimum does not depend on the keys
    config = SimConfig(horizon=1000, load_factor=1.2, segments=5, replications=100, seed=0, key_kind="identity")
    result = simulate(instance, config)
    cp, ccs, ic = (result.mean_revenue(s) for s in ("cp", "ccs", "ic"))
    assert cp >= ccs
    assert ccs >= 0.97 * cp
    assert ic <= 0.98 * ccs
