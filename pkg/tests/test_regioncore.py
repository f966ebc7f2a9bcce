import math

import numpy as np
import pytest

from cribmac import probcore as pc
from cribmac import regioncore as rc


def random_channel(rng, n1=2, n2=2, ny=2, g1=None, g2=None):
    w = rng.dirichlet(np.ones(ny), size=(n1, n2))
    return rc.ChannelSpec(transition=w,
                          g1=g1 if g1 is not None else rng.integers(0, 2, n1),
                          g2=g2 if g2 is not None else rng.integers(0, 2, n2))


def random_factorization(rng, ch, case="A", k=3):
    p_u = rng.dirichlet(np.ones(k))
    a1 = rng.dirichlet(np.ones(ch.x1_size), size=k)
    if case == "A":
        a2 = rng.dirichlet(np.ones(ch.x2_size), size=k)
    else:
        a2 = rng.dirichlet(np.ones(ch.x2_size), size=(k, ch.z1_size))
    return rc.factorization_from_inputs(case, p_u, a1, a2, ch)


class TestChannelSpec:
    def test_rejects_nonstochastic_rows(self):
        w = np.full((2, 2, 2), 0.4)
        with pytest.raises(ValueError):
            rc.ChannelSpec(transition=w, g1=[0, 0], g2=[0, 0])

    def test_canonical_relabeling_drops_dead_symbols(self):
        ch = rc.with_cribbing(rc.xor_channel(), g1=[3, 7])
        assert ch.z1_size == 2
        np.testing.assert_array_equal(ch.g1, [0, 1])

    def test_xor_channel_matrix(self):
        ch = rc.xor_channel()
        for x1 in range(2):
            for x2 in range(2):
                assert ch.transition[x1, x2, x1 ^ x2] == 1.0


class TestAssembleJoint:
    def test_xor_product_has_eight_equiprobable_cells(self):
        ch = rc.xor_channel()
        f = rc.constant_crib_factorization(
            "A", [1.0], [[0.5, 0.5]], [[0.5, 0.5]], ch)
        j = rc.assemble_joint(f, ch)
        nonzero = j.mass[j.mass > 0]
        assert nonzero.size == 4  # y determined by (x1, x2)
        np.testing.assert_allclose(nonzero, 0.25)
        # conditional law reproduces the channel on the support
        p_x1x2y = j.marginal_array(("X1", "X2", "Y"))
        cond = p_x1x2y / p_x1x2y.sum(axis=2, keepdims=True)
        np.testing.assert_allclose(cond, ch.transition, atol=1e-12)

    def test_support_violation_rejected(self):
        ch = rc.with_cribbing(rc.xor_channel(), g1=[0, 1])
        k1 = np.zeros((1, 2, 2))
        k1[0, :, 0] = 0.5  # claims z1 = 0 for x1 = 1 as well
        k2 = np.zeros((1, 2, 1))
        k2[0, :, 0] = 0.5
        f = rc.CribFactorization(case="A", p_u=[1.0], k1=k1, k2=k2)
        with pytest.raises(ValueError, match="z1"):
            rc.assemble_joint(f, ch)

    def test_case_b_conditional_independence_structure(self):
        ch = rc.with_cribbing(rc.xor_channel(), g1=[0, 1])
        a2 = np.array([[[0.9, 0.1], [0.2, 0.8]]])
        f = rc.factorization_from_inputs("B", [1.0], [[0.5, 0.5]], a2, ch)
        j = rc.assemble_joint(f, ch)
        # direct factorization check on the conditional table
        p = j.marginal_array(("U", "X1", "Z1", "X2"))
        for z in range(2):
            block = p[0, :, z, :]
            total = block.sum()
            joint = block / total
            outer = np.outer(block.sum(1), block.sum(0)) / total ** 2
            np.testing.assert_allclose(joint, outer, atol=1e-12)
        assert pc.mutual_information(j, "X1", "X2", ("U", "Z1")) <= 1e-12
        assert pc.mutual_information(j, "X1", "X2", "U") > 0.05


class TestEvalBounds:
    def test_xor_uniform_constant_cribbing(self):
        # oracle: evaluate the four formulas by hand on the 8-cell joint,
        # where Y = X1 xor X2 is uniform and Z axes are constant
        ch = rc.xor_channel()
        f = rc.constant_crib_factorization(
            "A", [1.0], [[0.5, 0.5]], [[0.5, 0.5]], ch)
        b = rc.eval_bounds(f, ch)
        assert b.b1 == pytest.approx(1.0, abs=1e-12)
        assert b.b2 == pytest.approx(1.0, abs=1e-12)
        assert b.b_sum_cond == pytest.approx(1.0, abs=1e-12)
        assert b.b_sum_total == pytest.approx(1.0, abs=1e-12)

    def test_perfect_cribbing_splits_b1(self):
        rng = np.random.default_rng(3)
        ch = random_channel(rng, g1=np.arange(2), g2=[0, 0])
        for _ in range(25):
            f = random_factorization(rng, ch)
            comp = rc.bound_components(f, ch)
            a1 = f.k1.sum(axis=2)
            h_x1_u = float(np.dot(f.p_u, [pc.entropy_bits(row) for row in a1]))
            assert comp["h_z1_given_u"] == pytest.approx(h_x1_u, abs=1e-12)
            assert comp["mi_x1"] <= 1e-12

    def test_zero_capacity_channel_degenerates(self):
        w = np.full((2, 2, 2), 0.5)
        ch = rc.ChannelSpec(transition=w, g1=[0, 1], g2=[0, 0])
        rng = np.random.default_rng(4)
        f = random_factorization(rng, ch)
        b = rc.eval_bounds(f, ch)
        comp = rc.bound_components(f, ch)
        assert b.b_sum_total == pytest.approx(0.0, abs=1e-12)
        assert b.b1 == pytest.approx(comp["h_z1_given_u"], abs=1e-12)
        assert b.b_sum_cond == pytest.approx(comp["h_z1z2_given_u"], abs=1e-12)

    def test_case_a_retag_is_bit_identical(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            ch = random_channel(rng)
            fa = random_factorization(rng, ch, case="A")
            fb = rc.retag_as_case_b(fa, ch)
            assert fb.case == "B"
            ba, bb = rc.eval_bounds(fa, ch), rc.eval_bounds(fb, ch)
            assert (ba.b1, ba.b2, ba.b_sum_cond, ba.b_sum_total) == \
                   (bb.b1, bb.b2, bb.b_sum_cond, bb.b_sum_total)

    def test_deterministic_cribbing_identity(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            ch = random_channel(rng)
            f = random_factorization(rng, ch, case="A")
            j = rc.assemble_joint(f, ch)
            h = pc.conditional_entropy(j, "Z1", "U")
            mi = pc.mutual_information(j, "X1", "Z1", "U")
            assert abs(h - mi) <= 1e-12


class TestCommonMessage:
    def test_zero_common_rate_slice_matches(self):
        rng = np.random.default_rng(11)
        ch = random_channel(rng)
        f = random_factorization(rng, ch)
        plain = rc.eval_bounds(f, ch)
        common = rc.eval_bounds_common(f, ch)
        assert common.includes_common
        assert (plain.b1, plain.b2, plain.b_sum_cond, plain.b_sum_total) == \
               (common.b1, common.b2, common.b_sum_cond, common.b_sum_total)

    def test_constant_cribbing_reduces_to_common_message_mac(self):
        # with Z constant the sum bound is I(X1,X2;Y) of the assembled law
        ch = rc.xor_channel()
        f = rc.constant_crib_factorization(
            "A", [0.5, 0.5], [[0.9, 0.1], [0.2, 0.8]],
            [[0.9, 0.1], [0.2, 0.8]], ch)
        j = rc.assemble_joint(f, ch)
        b = rc.eval_bounds_common(f, ch)
        assert b.b_sum_total == pytest.approx(
            pc.mutual_information(j, ("X1", "X2"), "Y"), abs=1e-12)
        assert b.b1 == pytest.approx(
            pc.mutual_information(j, "X1", "Y", ("X2", "U")), abs=1e-12)


class TestCardinalityCap:
    @pytest.mark.parametrize("sizes,expected", [
        ((2, 2, 2), 5),
        ((16, 2, 2), 6),
        ((1, 1, 1), 3),
    ])
    def test_values(self, sizes, expected):
        y, x1, x2 = sizes
        assert rc.cardinality_cap(y, x1, x2) == expected

    def test_rejects_empty_alphabets(self):
        with pytest.raises(ValueError):
            rc.cardinality_cap(0, 2, 2)
