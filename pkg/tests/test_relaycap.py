import math

import numpy as np
import pytest

from cribmac import regioncore as rc
from cribmac import relaycap as rl
from cribmac.errors import BudgetError
from cribmac.probcore import binary_entropy
from cribmac.regionsearch import SearchBudget

BUDGET = SearchBudget(restarts=6, iters=50, master_seed=3)


def selector_delay_oracle():
    """Grid plus local refinement of max min(H_b((1+a)/2)+a-1, a)."""
    grid = np.linspace(0.0, 1.0, 20001)
    vals = np.array([min(binary_entropy((1 + a) / 2) + a - 1, a) for a in grid])
    return float(vals.max())


class TestDelayForm:
    def test_direct_link_ignores_relay(self):
        w = np.zeros((2, 2, 2))
        for x1 in range(2):
            w[x1, :, x1] = 1.0
        ch = rc.ChannelSpec(transition=w, g1=[0, 0], g2=[0, 0])
        inst = rl.RelayInstance(channel=ch, case="delay")
        assert rl.relay_delay_capacity(inst, BUDGET) == pytest.approx(
            1.0, abs=1e-4)

    def test_zero_capacity_channel(self):
        w = np.full((2, 2, 2), 0.5)
        ch = rc.ChannelSpec(transition=w, g1=[0, 0], g2=[0, 0])
        inst = rl.RelayInstance(channel=ch, case="delay")
        assert rl.relay_delay_capacity(inst, BUDGET) == pytest.approx(
            0.0, abs=1e-9)

    def test_selector_channel_matches_grid_oracle(self):
        inst = rl.RelayInstance(channel=rc.selector_channel(), case="delay")
        value = rl.relay_delay_capacity(inst, BUDGET)
        oracle = selector_delay_oracle()
        assert oracle == pytest.approx(binary_entropy(0.2) - 0.4, abs=1e-8)
        assert value == pytest.approx(oracle, abs=1e-4)

    def test_case_tag_checked(self):
        inst = rl.RelayInstance(channel=rc.selector_channel(), case="no_delay")
        with pytest.raises(ValueError):
            rl.relay_delay_capacity(inst, BUDGET)

    def test_nonconstant_g2_rejected(self):
        ch = rc.with_cribbing(rc.selector_channel(), g2=[0, 1])
        with pytest.raises(ValueError):
            rl.RelayInstance(channel=ch, case="delay")


class TestNoDelayForms:
    def test_constant_crib_collapses(self):
        # g1 constant: both no-delay forms equal the delay form's value
        w = np.full((2, 2, 2), 0.5)
        w[:, :, 0] = 0.8
        w[:, :, 1] = 0.2
        ch = rc.ChannelSpec(transition=w, g1=[0, 0], g2=[0, 0])
        inst = rl.RelayInstance(channel=ch, case="no_delay")
        assert rl.relay_nodelay_region_form(inst, BUDGET) == pytest.approx(
            0.0, abs=1e-9)
        assert rl.relay_nodelay_elgamal_form(inst, BUDGET) == pytest.approx(
            0.0, abs=1e-9)

    def test_identity_crib_noiseless_forward_channel(self):
        # Y = X2 noiselessly and the relay sees x1 instantly: one bit flows
        w = np.zeros((2, 2, 2))
        for x2 in range(2):
            w[:, x2, x2] = 1.0
        ch = rc.ChannelSpec(transition=w, g1=[0, 1], g2=[0, 0])
        inst = rl.RelayInstance(channel=ch, case="no_delay")
        assert rl.relay_nodelay_region_form(inst, BUDGET) == pytest.approx(
            1.0, abs=1e-3)
        assert rl.relay_nodelay_elgamal_form(inst, BUDGET) == pytest.approx(
            1.0, abs=1e-3)

    def test_forms_agree_on_random_channels(self):
        for i in range(3):
            rng = np.random.default_rng(400 + i)
            w = rng.dirichlet(np.ones(2), size=(2, 2))
            g1 = [[0, 0], [0, 1], [1, 0]][i]
            ch = rc.ChannelSpec(transition=w, g1=g1, g2=[0, 0])
            inst = rl.RelayInstance(channel=ch, case="no_delay")
            v1 = rl.relay_nodelay_region_form(inst, BUDGET)
            v2 = rl.relay_nodelay_elgamal_form(inst, BUDGET)
            assert abs(v1 - v2) <= 5e-3

    def test_function_space_guard(self):
        ch = rc.with_cribbing(rc.selector_channel(), g1=[0, 1])
        inst = rl.RelayInstance(channel=ch, case="no_delay")
        big = SearchBudget(restarts=2, iters=10, u_size=12, master_seed=0)
        with pytest.raises(BudgetError):
            rl.relay_nodelay_elgamal_form(inst, big)


class TestOrderings:
    def test_delay_below_no_delay_and_sum_capacity(self):
        for i in range(3):
            rng = np.random.default_rng(500 + i)
            w = rng.dirichlet(np.ones(2), size=(2, 2))
            ch = rc.ChannelSpec(transition=w, g1=[0, 1], g2=[0, 0])
            delay = rl.relay_delay_capacity(
                rl.RelayInstance(channel=ch, case="delay"), BUDGET)
            nodelay = rl.relay_nodelay_region_form(
                rl.RelayInstance(channel=ch, case="no_delay"), BUDGET)
            cap = rl.sum_capacity(ch)
            assert delay <= nodelay + 5e-3
            assert delay <= cap + 1e-9
            assert nodelay <= cap + 1e-9


class TestSumCapacity:
    def test_xor_channel(self):
        assert rl.sum_capacity(rc.xor_channel()) == pytest.approx(1.0, abs=1e-9)

    def test_noiseless_four_output(self):
        w = np.zeros((2, 2, 4))
        for x1 in range(2):
            for x2 in range(2):
                w[x1, x2, 2 * x1 + x2] = 1.0
        ch = rc.ChannelSpec(transition=w, g1=[0, 0], g2=[0, 0])
        assert rl.sum_capacity(ch) == pytest.approx(2.0, abs=1e-9)

    def test_selector_channel_value(self):
        # fully correlated inputs make the selector noiseless: placing mass
        # 1/2 on (0,0) and (1,1) gives I(X1,X2;Y) = H(Y) = 1 = log2|Y|,
        # which is also an upper bound, so the joint-input capacity is 1
        assert rl.sum_capacity(rc.selector_channel()) == pytest.approx(
            1.0, abs=1e-9)
