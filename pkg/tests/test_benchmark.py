"""
Tests for the solve-time benchmark.
"""
import numpy as np
import pytest

from bidprice.benchmark import (
    MODELS,
    benchmark_instance,
    benchmark_models,
    general_mode_benchmark,
    general_mode_trials,
    masked_program,
    pass_rate,
)
from bidprice.config import SHARED
from bidprice.lp import build_collective, solve
from bidprice.masking import KeyKind, KeyPolicy, generate_keys, mask
from bidprice.models import AllianceInstance, InstanceConfig, Leg, Path, Product
from bidprice.report import GENERAL_MODE_COLUMNS, TIMING_COLUMNS
from bidprice.seeding import make_rng
from tests.helpers import DEMO_Z

pytestmark = pytest.mark.unit


def test_masked_programs_share_the_collective_optimum(demo_blocks):
    collective = solve(build_collective(demo_blocks)).objective
    for kind in (KeyKind.DENSE, KeyKind.SPARSE):
        lp = masked_program(demo_blocks, kind, seed=2)
        assert lp.is_sparse
        solution = solve(lp)
        assert solution.optimal
        offsets = sum(
            mask(demo_blocks, p, generate_keys(demo_blocks, p, make_rng(2, "benchmark", kind.value, p),
                                               KeyPolicy.from_settings(kind=kind)), kind).offset
            for p in demo_blocks.parties
        )
        assert solution.objective - offsets == pytest.approx(collective, rel=1e-7)


def test_sparse_keys_fill_less(demo_blocks):
    dense = masked_program(demo_blocks, KeyKind.DENSE, seed=2)
    sparse = masked_program(demo_blocks, KeyKind.SPARSE, seed=2)
    assert sparse.nnz() < dense.nnz()


def test_benchmark_instance_rows(demo):
    rows = benchmark_instance(demo, runs=2, seed=1, backend="simplex")
    assert [row["model"] for row in rows] == list(MODELS)
    assert all(row["runs"] == 2 and row["mean_ms"] > 0 for row in rows)
    assert rows[0]["nnz"] == build_collective(demo).nnz()


def test_benchmark_models_frame():
    frame = benchmark_models([(6, 2)], runs=1, seed=4)
    assert list(frame.columns) == TIMING_COLUMNS
    assert frame["model"].tolist() == list(MODELS)
    assert (frame["std_ms"] == 0.0).all()
    assert (frame["n_paths"] == 6).all()


def _scalar_alliance() -> AllianceInstance:
    """Two parties with one single-seat path each on a one-seat shared leg."""
    legs = [Leg(id="H", capacity=1, owner=SHARED)]
    paths = [
        Path(id="a", party="1", legs=["H"], products=[Product(fare=100.0, mean_demand=1.0, probability=1.0)]),
        Path(id="b", party="2", legs=["H"], products=[Product(fare=80.0, mean_demand=1.0, probability=1.0)]),
    ]
    return AllianceInstance(parties=["1", "2"], legs=legs, paths=paths, config=InstanceConfig(horizon=10))


class TestGeneralMode:
    def test_masked_optimum_never_beats_the_collective(self, demo_blocks):
        trials = general_mode_trials(demo_blocks, trials=6, seed=1)
        assert trials["trial"].tolist() == list(range(6))
        assert 0.0 <= pass_rate(trials) <= 1.0
        assert trials["Z_collective"].tolist() == pytest.approx([DEMO_Z] * 6)
        solved = trials[trials["status"] == "OPTIMAL"]
        assert (solved["Z"] <= DEMO_Z + 1e-6 * (1.0 + DEMO_Z)).all()
        certified = trials[trials["certified"]]
        assert (certified["gap"].abs() <= 1e-5).all()

    def test_scalar_keys_always_certify(self):
        trials = general_mode_trials(_scalar_alliance(), trials=5, seed=2)
        assert pass_rate(trials) == 1.0
        assert trials["Z"].tolist() == pytest.approx([100.0] * 5, rel=1e-7)

    def test_benchmark_frame_has_size_columns(self):
        frame = general_mode_benchmark([(6, 2)], trials=2, seed=3)
        assert list(frame.columns) == GENERAL_MODE_COLUMNS
        assert (frame["n_paths"] == 6).all()
        assert len(frame) == 2

    def test_pass_rate_of_no_trials(self):
        assert np.isnan(pass_rate(general_mode_benchmark([], trials=2)))
