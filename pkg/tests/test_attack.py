"""
Tests for the reconstruction audits: what leaks once key material is known.
"""
import numpy as np
import pytest

from bidprice.attack import (
    audit_attack,
    audit_small_party,
    derive_f_scalar,
    derive_g_scalar,
    identity_incidence_exposure,
)
from bidprice.exceptions import AttackError
from bidprice.masking import KeyPolicy, generate_keys, mask
from bidprice.network import AllianceBlocks, PartyBlocks
from bidprice.seeding import make_rng

pytestmark = pytest.mark.unit

TOL = dict(rel=1e-6, abs=1e-6)


def _one_party(r, A, B, c_k, c):
    n = len(r)
    pb = PartyBlocks(
        party="1", r=np.asarray(r, dtype=float), A=np.asarray(A, dtype=float), B=np.asarray(B, dtype=float),
        c_k=np.asarray(c_k, dtype=float), private_legs=tuple(f"P{i}" for i in range(len(c_k))),
        columns=tuple((f"p{j}", 1) for j in range(n)), breakpoints={f"p{j}": 1 for j in range(n)},
    )
    return AllianceBlocks(parties=("1",), shared_legs=tuple(f"S{i}" for i in range(len(c))),
                          c=np.asarray(c, dtype=float), party_blocks={"1": pb})


class TestLeakedKeys:
    @pytest.mark.parametrize("policy", [
        KeyPolicy(),
        KeyPolicy(extra_rows_d=3, extra_rows_e=1),
        KeyPolicy(permute=True),
    ], ids=["square", "rectangular", "permuted"])
    def test_rebuilds_private_blocks(self, demo_blocks, policy):
        pb = demo_blocks["2"]
        keys = generate_keys(demo_blocks, "2", make_rng(8, "attack"), policy)
        payload = mask(demo_blocks, "2", keys)

        stolen = audit_attack(payload, keys.G, keys.F)

        assert stolen.D == pytest.approx(keys.D, **TOL)
        assert stolen.A == pytest.approx(keys.permuted(pb.A, axis=1), **TOL)
        assert stolen.B == pytest.approx(keys.permuted(pb.B, axis=1), **TOL)
        assert stolen.r == pytest.approx(keys.permuted(pb.r), **TOL)
        assert stolen.c_k == pytest.approx(pb.c_k, **TOL)
        assert stolen.eta == pytest.approx(keys.permuted(keys.eta), **TOL)
        assert stolen.xi == pytest.approx(keys.xi, **TOL)
        assert max(stolen.residuals.values()) < 1e-6

    def test_singular_leak(self, demo_blocks):
        keys = generate_keys(demo_blocks, "1", make_rng(8, "singular"), KeyPolicy())
        payload = mask(demo_blocks, "1", keys)
        with pytest.raises(AttackError, match="singular"):
            audit_attack(payload, np.ones_like(keys.G), keys.F)


class TestSmallParty:
    def test_single_variable_party_is_fully_exposed(self):
        blocks = _one_party(r=[50.0], A=[[1.0]], B=[[1.0]], c_k=[2.0], c=[3.0])
        keys = generate_keys(blocks, "1", make_rng(3, "small"), KeyPolicy())
        payload = mask(blocks, "1", keys)

        assert derive_g_scalar(payload) == pytest.approx(keys.G, **TOL)
        stolen = audit_small_party(payload, c_k=2.0)

        assert stolen.r == pytest.approx([50.0], **TOL)
        assert stolen.c_k == pytest.approx([2.0], **TOL)
        assert stolen.A == pytest.approx([[1.0]], **TOL)
        assert stolen.xi == pytest.approx(keys.xi, **TOL)

    def test_scalar_derivations_need_scalar_parties(self, demo_blocks):
        keys = generate_keys(demo_blocks, "2", make_rng(3, "big"), KeyPolicy())
        payload = mask(demo_blocks, "2", keys)
        with pytest.raises(AttackError, match="n_k = s_k = 1"):
            derive_g_scalar(payload)
        with pytest.raises(AttackError, match="m_k = 1"):
            derive_f_scalar(payload, keys.D, keys.eta, 1.0)


class TestIdentityIncidence:
    def test_identity_incidence_reveals_d(self):
        blocks = _one_party(r=[5.0, 4.0], A=np.eye(2), B=np.zeros((0, 2)), c_k=[], c=[1.0, 1.0])
        keys = generate_keys(blocks, "1", make_rng(5, "identity"), KeyPolicy())
        payload = mask(blocks, "1", keys)
        assert identity_incidence_exposure(payload) == pytest.approx(keys.D)

    def test_needs_square_incidence(self, demo_blocks):
        keys = generate_keys(demo_blocks, "2", make_rng(5, "shape"), KeyPolicy())
        with pytest.raises(AttackError, match="identity needs"):
            identity_incidence_exposure(mask(demo_blocks, "2", keys))
