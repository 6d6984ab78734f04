"""
Tests for key generation, masking, the masked model and recovery.
"""
import logging
from dataclasses import replace

import numpy as np
import pytest

from bidprice.config import (
    ADVISORY_IDENTITY_INCIDENCE,
    ADVISORY_SMALL_PARTY,
    ADVISORY_SPARSE_KEYS,
    PARTY_CAP,
    SHARED_CAP,
    UPPER_BOUND,
    group_label,
)
from bidprice.exceptions import MaskingError, RecoveryError
from bidprice.lp import LpStatus, build_collective, solve
from bidprice.masking import (
    KeyKind,
    KeyPolicy,
    MaskingKeys,
    assemble_masked_model,
    build_change_of_variables_model,
    build_shifted_model,
    from_shifted_point,
    full_column_rank,
    generate_keys,
    local_certificate,
    mask,
    objective_offset,
    privacy_findings,
    public_shared_slack,
    recover,
    recover_shifted,
    to_shifted_point,
)
from bidprice.mmatrix import MMatrixMode
from bidprice.network import AllianceBlocks, PartyBlocks, assemble_blocks
from bidprice.seeding import make_rng
from tests.helpers import DEMO_SHARED_PRICE, DEMO_Z, collective_dual_check, star_instance

pytestmark = pytest.mark.unit


def _keys(blocks, policy, seed=7):
    return {p: generate_keys(blocks, p, make_rng(seed, "keys", p), policy) for p in blocks.parties}


def _masked_run(blocks, policy, seed=7):
    keys = _keys(blocks, policy, seed)
    payloads = {p: mask(blocks, p, keys[p], policy.kind) for p in blocks.parties}
    model = assemble_masked_model(payloads, blocks.c, blocks.parties)
    solution = solve(model.lp)
    offsets = [payloads[p].offset for p in blocks.parties]
    recoveries = {p: recover(p, keys[p], solution, offsets) for p in blocks.parties}
    return keys, model, solution, recoveries


def _assert_feasible(blocks: AllianceBlocks, recoveries, tol=1e-6):
    scale = 1.0 + float(np.max(blocks.c, initial=0.0))
    used = sum((blocks[p].A @ recoveries[p].x for p in blocks.parties), np.zeros(blocks.m))
    assert np.all(used <= blocks.c + tol * scale)
    for party in blocks.parties:
        pb, x = blocks[party], recoveries[party].x
        assert np.all(x >= -tol) and np.all(x <= 1.0 + tol)
        assert np.all(pb.B @ x <= pb.c_k + tol * scale)


def _assert_dual_optimal(blocks: AllianceBlocks, recoveries, z):
    alpha = recoveries[blocks.parties[0]].alpha
    worst, dual_objective = collective_dual_check(
        blocks,
        alpha,
        {p: recoveries[p].alpha_k for p in blocks.parties},
        {p: recoveries[p].upper_dual for p in blocks.parties},
    )
    r_scale = 1.0 + max(float(np.max(np.abs(blocks[p].r), initial=0.0)) for p in blocks.parties)
    assert worst <= 1e-5 * r_scale
    assert dual_objective == pytest.approx(z, rel=1e-6, abs=1e-6)


class TestRecovery:
    def test_demo_dense_keys(self, demo_blocks):
        _, _, solution, recoveries = _masked_run(demo_blocks, KeyPolicy())
        assert solution.optimal
        for rec in recoveries.values():
            assert rec.Z == pytest.approx(DEMO_Z, rel=1e-6)
            assert rec.alpha == pytest.approx([DEMO_SHARED_PRICE], rel=1e-6)
        # leg 2-3 price is unique at the optimum
        assert recoveries["2"].alpha_k[0] == pytest.approx(80.0, rel=1e-6)
        _assert_feasible(demo_blocks, recoveries)
        _assert_dual_optimal(demo_blocks, recoveries, DEMO_Z)

    @pytest.mark.parametrize("policy", [
        KeyPolicy(),
        KeyPolicy(permute=True),
        KeyPolicy(extra_rows_d=2, extra_rows_e=1),
        KeyPolicy(signed_xi=True),
        KeyPolicy(kind=KeyKind.SPARSE),
    ], ids=["dense", "permuted", "rectangular", "signed-xi", "sparse"])
    def test_generated_instances(self, generated_blocks, policy):
        direct = solve(build_collective(generated_blocks))
        _, _, solution, recoveries = _masked_run(generated_blocks, policy)
        assert solution.optimal
        for rec in recoveries.values():
            assert rec.Z == pytest.approx(direct.objective, rel=1e-6, abs=1e-6)
        _assert_feasible(generated_blocks, recoveries)
        _assert_dual_optimal(generated_blocks, recoveries, direct.objective)

    def test_three_parties(self, star):
        blocks = assemble_blocks(star)
        direct = solve(build_collective(blocks))
        _, _, _, recoveries = _masked_run(blocks, KeyPolicy(permute=True))
        assert set(recoveries) == {"1", "2", "3"}
        assert recoveries["3"].Z == pytest.approx(direct.objective, rel=1e-6)
        _assert_feasible(blocks, recoveries)
        _assert_dual_optimal(blocks, recoveries, direct.objective)

    def test_party_with_every_path_closed(self):
        closed = star_instance(2).with_state(capacities={"L1": 0, "H": 0})
        blocks = assemble_blocks(closed)
        assert blocks["1"].n == 0
        _, _, solution, recoveries = _masked_run(blocks, KeyPolicy())
        assert solution.optimal
        assert recoveries["1"].x.shape == (0,)
        # only party 2's local path is open: 2 x 105 + 2 x 65
        assert recoveries["2"].Z == pytest.approx(340.0, rel=1e-6)
        _assert_feasible(blocks, recoveries)

    def test_objective_offset_accounts_for_shift(self, demo_blocks):
        keys, model, solution, recoveries = _masked_run(demo_blocks, KeyPolicy())
        total = sum(objective_offset(demo_blocks[p], keys[p]) for p in demo_blocks.parties)
        assert model.total_offset == pytest.approx(total)
        assert recoveries["1"].Z_bar - recoveries["1"].Z == pytest.approx(total)

    def test_public_slack_matches_original(self, demo_blocks):
        _, model, solution, recoveries = _masked_run(demo_blocks, KeyPolicy())
        used = sum(demo_blocks[p].A @ recoveries[p].x for p in demo_blocks.parties)
        assert public_shared_slack(model, solution) == pytest.approx(demo_blocks.c - used, abs=1e-7)

    def test_recover_needs_optimal_solution(self, demo_blocks):
        keys, _, solution, _ = _masked_run(demo_blocks, KeyPolicy())
        failed = replace(solution, status=LpStatus.INFEASIBLE)
        with pytest.raises(RecoveryError):
            recover("1", keys["1"], failed, 0.0)


class TestIntermediateModels:
    def test_shifted_model_recovers_collective(self, demo_blocks):
        keys = _keys(demo_blocks, KeyPolicy())
        solution = solve(build_shifted_model(demo_blocks, keys))
        recoveries = recover_shifted(demo_blocks, keys, solution)
        assert recoveries["1"].Z == pytest.approx(DEMO_Z, rel=1e-9)
        assert recoveries["2"].alpha == pytest.approx([DEMO_SHARED_PRICE])
        _assert_feasible(demo_blocks, recoveries)

    def test_change_of_variables_keeps_objective(self, generated_blocks):
        keys = _keys(generated_blocks, KeyPolicy())
        shifted = solve(build_shifted_model(generated_blocks, keys))
        changed = solve(build_change_of_variables_model(generated_blocks, keys))
        assert changed.objective == pytest.approx(shifted.objective, rel=1e-7)

    def test_masked_objective_equals_shifted(self, demo_blocks):
        keys, _, solution, _ = _masked_run(demo_blocks, KeyPolicy())
        shifted = solve(build_shifted_model(demo_blocks, keys))
        assert solution.objective == pytest.approx(shifted.objective, rel=1e-7)

    def test_point_maps_are_inverse(self, demo_blocks, rng):
        keys = _keys(demo_blocks, KeyPolicy(extra_rows_d=3, extra_rows_e=2))["2"]
        z = rng.uniform(size=demo_blocks["2"].n)
        v = rng.uniform(size=demo_blocks["2"].m_k)
        u, w = from_shifted_point(keys, z, v)
        z_back, v_back = to_shifted_point(keys, u, w)
        assert z_back == pytest.approx(z)
        assert v_back == pytest.approx(v)


class TestKeys:
    def test_same_stream_same_keys(self, demo_blocks):
        first = generate_keys(demo_blocks, "1", make_rng(3, "k"), KeyPolicy())
        second = generate_keys(demo_blocks, "1", make_rng(3, "k"), KeyPolicy())
        assert np.array_equal(first.D, second.D)
        assert np.array_equal(first.eta, second.eta)

    def test_shapes_with_extra_rows(self, demo_blocks, rng):
        keys = generate_keys(demo_blocks, "2", rng, KeyPolicy(extra_rows_d=4, extra_rows_e=1))
        assert keys.D.shape == (14, 10)
        assert keys.E.shape == (3, 2)
        assert keys.G.shape == (10, 10)
        assert keys.F.shape == (2, 2)
        assert full_column_rank(keys.D) and full_column_rank(keys.E)

    def test_shift_ranges(self, demo_blocks, rng):
        keys = generate_keys(demo_blocks, "1", rng, KeyPolicy())
        assert np.all((keys.eta >= 0.0) & (keys.eta <= 1.0))
        assert np.all(keys.xi >= 0.0)

    def test_general_mode_keys(self, demo_blocks, rng):
        keys = generate_keys(demo_blocks, "1", rng, KeyPolicy(mmatrix_mode=MMatrixMode.GENERAL))
        assert np.any(keys.G - np.diag(np.diag(keys.G)) < 0)

    def test_identity_keys_publish_plain_blocks(self, demo_blocks, rng):
        pb = demo_blocks["1"]
        keys = generate_keys(demo_blocks, "1", rng, KeyPolicy(kind=KeyKind.IDENTITY))
        payload = mask(demo_blocks, "1", keys, KeyKind.IDENTITY)
        assert np.array_equal(payload.r_bar, pb.r)
        assert np.array_equal(payload.A_bar, pb.A)
        assert payload.offset == 0.0

    def test_rank_test(self):
        assert full_column_rank(np.eye(3))
        assert not full_column_rank(np.ones((3, 2)))
        assert not full_column_rank(np.ones((1, 2)))

    def test_wrong_key_dimensions(self, demo_blocks):
        keys = MaskingKeys.identity("1", 3, 1)
        with pytest.raises(MaskingError, match="has shape"):
            mask(demo_blocks, "1", keys)

    def test_unknown_party(self, demo_blocks, rng):
        with pytest.raises(MaskingError, match="Unknown party"):
            generate_keys(demo_blocks, "7", rng)


class TestAdvisories:
    def test_clean_party(self, demo_blocks, rng):
        keys = generate_keys(demo_blocks, "1", rng, KeyPolicy())
        assert privacy_findings(demo_blocks["1"], keys) == []

    def test_small_party_and_identity_incidence(self):
        pb = PartyBlocks(party="1", r=np.array([5.0, 4.0]), A=np.eye(2), B=np.zeros((0, 2)), c_k=np.zeros(0),
                         private_legs=(), columns=(("p", 1), ("q", 1)), breakpoints={"p": 1, "q": 1})
        keys = MaskingKeys.identity("1", 2, 0)
        findings = privacy_findings(pb, keys)
        assert ADVISORY_SMALL_PARTY in findings
        assert ADVISORY_IDENTITY_INCIDENCE in findings
        permuted = replace(keys, perm=np.array([1, 0]))
        assert ADVISORY_IDENTITY_INCIDENCE not in privacy_findings(pb, permuted)

    def test_sparse_keys(self, demo_blocks, rng):
        keys = generate_keys(demo_blocks, "1", rng, KeyPolicy(kind=KeyKind.SPARSE))
        payload = mask(demo_blocks, "1", keys, KeyKind.SPARSE)
        assert ADVISORY_SPARSE_KEYS in payload.advisories

    def test_advisories_are_logged(self, demo_blocks, rng, caplog):
        keys = generate_keys(demo_blocks, "1", rng, KeyPolicy(kind=KeyKind.SPARSE))
        with caplog.at_level(logging.WARNING, logger="bidprice.masking"):
            mask(demo_blocks, "1", keys, KeyKind.SPARSE)
        assert f"Party 1: {ADVISORY_SPARSE_KEYS}" in caplog.text


class TestMaskedModel:
    def test_missing_payload(self, demo_blocks, rng):
        keys = generate_keys(demo_blocks, "1", rng)
        payload = mask(demo_blocks, "1", keys)
        with pytest.raises(MaskingError, match="Missing payloads"):
            assemble_masked_model({"1": payload}, demo_blocks.c, demo_blocks.parties)

    def test_shared_row_mismatch(self, demo_blocks, rng):
        payloads = {p: mask(demo_blocks, p, generate_keys(demo_blocks, p, rng)) for p in demo_blocks.parties}
        with pytest.raises(MaskingError, match="shared rows"):
            assemble_masked_model(payloads, np.array([5.0, 1.0]))

    def test_row_groups(self, demo_blocks):
        _, model, _, _ = _masked_run(demo_blocks, KeyPolicy())
        labels = [block.label for block in model.lp.row_groups]
        assert labels[0] == SHARED_CAP
        assert group_label(PARTY_CAP, "2") in labels
        assert group_label(UPPER_BOUND, "1") in labels
        assert model.lp.free.all()

    def test_local_certificate_passes_at_optimum(self, demo_blocks):
        keys, model, solution, _ = _masked_run(demo_blocks, KeyPolicy())
        for party in demo_blocks.parties:
            verdict = local_certificate(demo_blocks[party], keys[party], model, solution)
            assert verdict.passed, verdict.residuals

    def test_local_certificate_fails_without_optimum(self, demo_blocks):
        keys, model, solution, _ = _masked_run(demo_blocks, KeyPolicy())
        verdict = local_certificate(demo_blocks["1"], keys["1"], model, replace(solution, status=LpStatus.INFEASIBLE))
        assert not verdict.passed

    def test_identity_keys_give_the_collective_layout(self, demo_blocks):
        _, model, _, recoveries = _masked_run(demo_blocks, KeyPolicy(kind=KeyKind.IDENTITY))
        direct = build_collective(demo_blocks)
        assert all(payload.is_plain for payload in model.payloads.values())
        assert np.array_equal(model.lp.cost, direct.cost)
        assert np.array_equal(model.lp.matrix, direct.matrix)
        assert np.array_equal(model.lp.rhs, direct.rhs)
        assert model.lp.relations == direct.relations
        assert [b.label for b in model.lp.row_groups] == [b.label for b in direct.row_groups]
        assert not model.lp.free.any()
        assert recoveries["1"].Z == pytest.approx(DEMO_Z, rel=1e-9)
        assert recoveries["1"].alpha == pytest.approx([DEMO_SHARED_PRICE], rel=1e-9)

    def test_masked_keys_are_not_plain(self, demo_blocks):
        _, model, _, _ = _masked_run(demo_blocks, KeyPolicy())
        assert not any(payload.is_plain for payload in model.payloads.values())
