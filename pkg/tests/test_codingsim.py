import numpy as np
import pytest

from cribmac import codingsim as cs
from cribmac import regioncore as rc
from cribmac.errors import BudgetError
from cribmac.probcore import Alphabet, JointPMF


def identity_channel():
    w = np.zeros((2, 2, 4))
    for x1 in range(2):
        for x2 in range(2):
            w[x1, x2, 2 * x1 + x2] = 1.0
    return rc.ChannelSpec(transition=w, g1=[0, 0], g2=[0, 0])


def uniform_factorization(ch, p1=0.5):
    return rc.constant_crib_factorization(
        "A", [1.0], [[p1, 1.0 - p1]], [[0.5, 0.5]], ch)


def xor_config(rates, n, trials=500, seed=77, epsilon=0.49, p1=0.7):
    ch = rc.xor_channel()
    return cs.SimConfig(channel=ch, factorization=uniform_factorization(ch, p1),
                        n=n, blocks=2, rates=rates, epsilon=epsilon,
                        trials=trials, seed=seed)


class TestTypicalCheck:
    def pmf(self):
        return JointPMF([Alphabet("X", 2), Alphabet("Y", 2)],
                        [[0.25, 0.25], [0.25, 0.25]])

    def test_exact_type_sequence(self):
        x = np.array([0, 0, 1, 1])
        y = np.array([0, 1, 0, 1])
        assert cs.typical_check((x, y), self.pmf(), 0.01)

    def test_zero_probability_symbol_breaks_typicality(self):
        j = JointPMF([Alphabet("X", 2), Alphabet("Y", 2)],
                     [[0.5, 0.0], [0.0, 0.5]])
        x = np.array([0, 1, 0, 1])
        y = np.array([0, 1, 1, 0])   # (0,1) has probability zero
        assert not cs.typical_check((x, y), j, 0.4)

    def test_long_iid_sample_typical_with_high_probability(self):
        # with n = 10^4 the relative window is about 5.8 sigma per cell
        rng = np.random.default_rng(0)
        hits = 0
        for _ in range(200):
            x = rng.integers(0, 2, 10000)
            y = rng.integers(0, 2, 10000)
            hits += cs.typical_check((x, y), self.pmf(), 0.1)
        assert hits >= 198

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cs.typical_check((np.zeros(3, int), np.zeros(4, int)),
                             self.pmf(), 0.1)


class TestConfigGuards:
    def test_rate_exponent_guard(self):
        ch = rc.xor_channel()
        with pytest.raises(ValueError, match="exhaustive"):
            cs.SimConfig(channel=ch, factorization=uniform_factorization(ch),
                         n=40, blocks=2, rates=(0.0, 0.4, 0.0, 0.4),
                         epsilon=0.2, trials=1)

    def test_codeword_memory_guard(self):
        ch = rc.with_cribbing(rc.xor_channel(), g1=[0, 1], g2=[0, 1])
        f = rc.factorization_from_inputs(
            "A", [1.0], [[0.5, 0.5]], [[0.5, 0.5]], ch)
        with pytest.raises(BudgetError):
            cs.SimConfig(channel=ch, factorization=f, n=20, blocks=2,
                         rates=(0.5, 0.25, 0.25, 0.0), epsilon=0.2,
                         trials=1)

    def test_case_b_rejected(self):
        ch = rc.with_cribbing(rc.xor_channel(), g1=[0, 1])
        f = rc.factorization_from_inputs(
            "B", [1.0], [[0.5, 0.5]],
            np.full((1, 2, 2), 0.5), ch)
        with pytest.raises(ValueError, match="Case A"):
            cs.SimConfig(channel=ch, factorization=f, n=6, blocks=2,
                         rates=(0.0, 0.3, 0.0, 0.3), epsilon=0.2, trials=1)

    def test_epsilon_range(self):
        ch = rc.xor_channel()
        for eps in (0.0, 0.5, 0.7):
            with pytest.raises(ValueError):
                cs.SimConfig(channel=ch,
                             factorization=uniform_factorization(ch),
                             n=6, blocks=2, rates=(0.0, 0.3, 0.0, 0.3),
                             epsilon=eps, trials=1)


class TestCodebooks:
    def test_layer_counts(self):
        cfg = xor_config((0.3, 0.4, 0.2, 0.1), n=10, trials=1)
        counts = cfg.message_counts
        assert counts["m1p"] == 2 ** 3       # ceil(10 * 0.3)
        assert counts["m1pp"] == 2 ** 4
        assert counts["m2p"] == 2 ** 2
        assert counts["m2pp"] == 2 ** 1
        assert counts["u"] == counts["m1p"] * counts["m2p"]
        cb = cs.build_codebooks(cfg, np.random.default_rng(0))
        assert cb.u.shape == (32, 10)
        assert cb.z1.shape == (32, 8, 10)
        assert cb.x1.shape == (32, 8, 16, 10)

    def test_zero_rates_single_codewords(self):
        cfg = xor_config((0.0, 0.0, 0.0, 0.0), n=8, trials=1)
        cb = cs.build_codebooks(cfg, np.random.default_rng(0))
        assert cb.u.shape == (1, 8)
        assert cb.x1.shape == (1, 1, 1, 8)

    def test_codeword_symbol_frequencies(self):
        # empirical u-symbol frequency within 3 sigma of P(u)
        ch = rc.xor_channel()
        f = rc.constant_crib_factorization(
            "A", [0.3, 0.7], [[0.5, 0.5], [0.5, 0.5]],
            [[0.5, 0.5], [0.5, 0.5]], ch)
        cfg = cs.SimConfig(channel=ch, factorization=f, n=50, blocks=2,
                           rates=(0.0, 0.2, 0.0, 0.2), epsilon=0.3,
                           trials=1, seed=0)
        cb = cs.build_codebooks(cfg, np.random.default_rng(3))
        total = cb.u.size
        freq = (cb.u == 1).mean()
        sigma = np.sqrt(0.3 * 0.7 / total)
        assert abs(freq - 0.7) <= 3 * sigma

    def test_x_codewords_respect_crib_map(self):
        ch = rc.with_cribbing(rc.xor_channel(), g1=[0, 1])
        f = rc.factorization_from_inputs(
            "A", [1.0], [[0.5, 0.5]], [[0.5, 0.5]], ch)
        cfg = cs.SimConfig(channel=ch, factorization=f, n=12, blocks=2,
                           rates=(0.3, 0.2, 0.0, 0.2), epsilon=0.3,
                           trials=1, seed=0)
        cb = cs.build_codebooks(cfg, np.random.default_rng(1))
        # g1 identity: the x1 codeword must equal its z1 parent
        for i in range(cb.u.shape[0]):
            for m in range(cb.z1.shape[1]):
                for j in range(cb.x1.shape[2]):
                    np.testing.assert_array_equal(ch.g1[cb.x1[i, m, j]],
                                                  cb.z1[i, m])


class TestRunSuperblock:
    def test_noiseless_channel_tiny_rates_zero_errors(self):
        ch = identity_channel()
        cfg = cs.SimConfig(channel=ch, factorization=uniform_factorization(ch),
                           n=1000, blocks=2,
                           rates=(0.0, 1e-3, 0.0, 1e-3), epsilon=0.49,
                           trials=100, seed=5)
        result = cs.simulate(cfg)
        assert result.errors == 0

    def test_outside_point_fails_often(self):
        cfg = xor_config((0.0, 0.7, 0.0, 0.7), n=10, trials=200, seed=3)
        result = cs.simulate(cfg)
        assert result.error_rate >= 0.5

    def test_error_rate_drops_with_blocklength(self):
        errors = {}
        for n in (6, 9, 12):
            cfg = xor_config((0.0, 0.4, 0.0, 0.4), n=n, trials=500, seed=77)
            errors[n] = cs.simulate(cfg).errors
        assert errors[6] > errors[9] > errors[12]

    def test_final_block_pinning_enforced(self):
        cfg = xor_config((0.3, 0.2, 0.0, 0.2), n=10, trials=1)
        messages = cs.draw_messages(cfg, np.random.default_rng(0))
        messages["m1p"][-1] = 1
        with pytest.raises(ValueError, match="pinned"):
            cs.run_superblock(cfg, messages)


class TestSimulate:
    def test_single_trial_equals_run_superblock(self):
        cfg = xor_config((0.0, 0.4, 0.0, 0.4), n=8, trials=1, seed=12)
        result = cs.simulate(cfg)
        ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0,))
        messages = cs.draw_messages(cfg, np.random.default_rng(ss))
        outcome = cs.run_superblock(cfg, messages,
                                    seed=int(ss.generate_state(1)[0]))
        assert result.errors == int(outcome.error)

    def test_seed_determinism(self):
        cfg = xor_config((0.0, 0.4, 0.0, 0.4), n=8, trials=40, seed=9)
        a, b = cs.simulate(cfg), cs.simulate(cfg)
        assert a.errors == b.errors and a.class_counts == b.class_counts

    def test_interval_narrows_with_trials(self):
        small = cs.simulate(xor_config((0.0, 0.4, 0.0, 0.4), n=8, trials=50))
        big = cs.simulate(xor_config((0.0, 0.4, 0.0, 0.4), n=8, trials=200))
        width = lambda r: r.wilson_interval[1] - r.wilson_interval[0]
        assert width(big) < width(small)

    def test_error_classes_partition_errors(self):
        # identity cribbing with a nonzero split rate exercises the
        # encoder-side crib decoder as well
        ch = rc.with_cribbing(rc.xor_channel(), g1=[0, 1])
        f = rc.factorization_from_inputs(
            "A", [1.0], [[0.5, 0.5]], [[0.5, 0.5]], ch)
        cfg = cs.SimConfig(channel=ch, factorization=f, n=10, blocks=2,
                           rates=(0.5, 0.2, 0.0, 0.3), epsilon=0.49,
                           trials=200, seed=4)
        result = cs.simulate(cfg)
        assert sum(result.class_counts.values()) == result.errors
        assert set(result.class_counts) <= set(cs.ERROR_CLASSES)
        assert result.class_counts.get("crib_decode", 0) > 0

    def test_effective_rates_reported(self):
        cfg = xor_config((0.2, 0.2, 0.2, 0.2), n=10, trials=1)
        r1, r2 = cfg.effective_rates
        assert r1 == pytest.approx(0.2 + 0.2 * 0.5)
        result = cs.simulate(cfg)
        assert result.metadata["effective_rates"] == cfg.effective_rates


class TestWilson:
    def test_bounds_in_unit_interval(self):
        lo, hi = cs.wilson_interval(0, 100)
        assert lo == 0.0 and 0.0 < hi < 0.06
        lo, hi = cs.wilson_interval(100, 100)
        assert hi == pytest.approx(1.0, abs=1e-12) and 0.94 < lo < 1.0

    def test_halving_width_scaling(self):
        w200 = np.diff(cs.wilson_interval(80, 200))[0]
        w800 = np.diff(cs.wilson_interval(320, 800))[0]
        assert w800 == pytest.approx(w200 / 2, rel=0.08)
