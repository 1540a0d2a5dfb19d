import numpy as np
import pytest

from lpm.baselines import (AmaConfig, AmaExplorer, EnsembleConfig, EnsembleExplorer, PeCuriosity, RndConfig,
                           RndExplorer)
from lpm.envs import PairedTransitionEnv, synthetic_digit_bank
from lpm.explorer import NullExplorer, TrainConfig
from lpm.nn import Mlp, make_rng
from lpm.registry import EXPLORERS, make_explorer


def zero_model(model: Mlp, bias=0.0):
    for p in model.params:
        p[...] = 0.0
    model.params[-1][...] = bias


class TestPe:
    def test_perfect_prediction_gives_zero(self):
        pe = PeCuriosity(2, 1)
        zero_model(pe.dynamics, np.array([0.3, 0.7]))
        assert pe.observe(np.zeros(2), 0, np.array([0.3, 0.7])) == 0.0

    def test_zero_model_arithmetic(self):
        pe = PeCuriosity(2, 1)
        zero_model(pe.dynamics)
        assert pe.observe(np.zeros(2), 0, np.array([1.0, 0.0])) == 0.5

    def test_reward_non_negative(self):
        pe = PeCuriosity(4, 2, seed=1)
        rng = make_rng(0)
        for _ in range(50):
            assert pe.observe(rng.uniform(size=4), int(rng.integers(2)), rng.uniform(size=4)) >= 0.0
            pe.step_done()

    def test_noisy_tv_failure(self):
        bank = synthetic_digit_bank(0)
        env = PairedTransitionEnv(bank, seed=0)
        pe = PeCuriosity(bank.dim, 2, TrainConfig(input_offset=0.5), seed=0)
        det, stoch = [], []
        for _ in range(400):
            o, o2, _ = env.transition(0)
            det.append(pe.observe(o, 0, o2))
            o, o2, _ = env.transition(1)
            stoch.append(pe.observe(o, 1, o2))
            pe.step_done()
        assert np.mean(stoch[-100:]) > 10 * np.mean(det[-100:])


class TestRnd:
    def test_copied_predictor_gives_zero(self):
        rnd = RndExplorer(5, 2)
        rnd.predictor = rnd.target.copy()
        assert rnd.observe(np.zeros(5), 1, make_rng(0).uniform(size=5)) == 0.0

    def test_embedding_dimension(self):
        rnd = RndExplorer(5, 2)
        assert rnd.target.out_dim == 64 and rnd.target.layer_sizes == (5, 64, 64, 64)

    def test_target_frozen_over_updates(self):
        rnd = RndExplorer(6, 2, RndConfig(hidden=(8,)), seed=3)
        before = [p.copy() for p in rnd.target.params]
        rng = make_rng(1)
        for _ in range(1000):
            rnd.observe(rng.uniform(size=6), 0, rng.uniform(size=6))
            rnd.step_done()
        for a, b in zip(before, rnd.target.params):
            np.testing.assert_array_equal(a, b)
            assert not b.flags.writeable

    def test_repeated_observation_decays_below_one_percent(self):
        rnd = RndExplorer(10, 1, seed=0)
        obs = make_rng(5).uniform(size=10)
        first = rnd.observe(obs, 0, obs)
        rnd.step_done()
        for _ in range(499):
            rnd.observe(obs, 0, obs)
            rnd.step_done()
        assert rnd.updates == 500
        assert rnd.observe(obs, 0, obs) < 0.01 * first


class TestEnsemble:
    def test_identical_members_give_zero(self):
        ens = EnsembleExplorer(3, 2, EnsembleConfig(members=3))
        for m in ens.models[1:]:
            m.params = [p.copy() for p in ens.models[0].params]
        assert ens.observe(np.ones(3), 0, np.zeros(3)) == 0.0

    def test_two_members_one_dimension(self):
        ens = EnsembleExplorer(1, 1, EnsembleConfig(members=2))
        zero_model(ens.models[0], 0.0)
        zero_model(ens.models[1], 2.0)
        assert ens.observe(np.zeros(1), 0, np.zeros(1)) == 1.0

    def test_matches_brute_force_variance(self):
        ens = EnsembleExplorer(4, 3, EnsembleConfig(members=5), seed=2)
        rng = make_rng(3)
        for _ in range(20):
            o, a = rng.uniform(size=4), int(rng.integers(3))
            x = np.concatenate([o, np.eye(3)[a]])
            preds = [m.forward(x) for m in ens.models]
            total = 0.0
            for d in range(4):
                vals = [p[d] for p in preds]
                mean = sum(vals) / len(vals)
                total += sum((v - mean) ** 2 for v in vals) / len(vals)
            assert ens.observe(o, a, rng.uniform(size=4)) == pytest.approx(total / 4, abs=1e-12)

    def test_members_start_distinct(self):
        ens = EnsembleExplorer(3, 2)
        assert not np.array_equal(ens.models[0].params[0], ens.models[1].params[0])

    def test_needs_two_members(self):
        with pytest.raises(ValueError):
            EnsembleConfig(members=1)


class TestAma:
    def test_lambda_zero_reduces_to_pe(self):
        rng = make_rng(0)
        ama = AmaExplorer(5, 2, AmaConfig(ama_lambda=0.0), seed=1)
        pe = PeCuriosity(5, 2, seed=1)
        w = [p.copy() for p in ama.model.params]
        pe.dynamics.params = [w[0], w[1], w[2][:, :5].copy(), w[3][:5].copy()]
        for _ in range(20):
            o, a, o2 = rng.uniform(size=5), int(rng.integers(2)), rng.uniform(size=5)
            assert ama.observe(o, a, o2) == pytest.approx(pe.observe(o, a, o2), abs=1e-15)

    def test_perfect_mean_minus_variance(self):
        ama = AmaExplorer(2, 1)
        zero_model(ama.model, np.array([0.2, 0.4, np.log(0.3)]))
        assert ama.observe(np.zeros(2), 0, np.array([0.2, 0.4])) == pytest.approx(-0.3, abs=1e-12)

    def test_variance_positive_and_learns_noise_level(self):
        ama = AmaExplorer(20, 1, AmaConfig(hidden=(16,), learning_rate=1e-2), seed=0)
        rng = make_rng(1)
        o = np.zeros(20)
        for _ in range(1500):
            ama.observe(o, 0, rng.normal(0.5, 0.2, size=20))
            ama.step_done()
        _, var = ama.mean_and_variance(o, 0)
        assert var > 0
        assert var == pytest.approx(0.04, rel=0.25)

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            AmaConfig(ama_lambda=-1.0)


@pytest.mark.parametrize("name", sorted(EXPLORERS))
class TestInterfaceBattery:
    def run(self, name, seed):
        ex = make_explorer(name, 6, 3, {"hidden": (8,), "queue_size": 5, "rnd_hidden": (8,)}, seed=seed)
        rng = make_rng(7)
        rewards = []
        for _ in range(30):
            rewards.append(ex.observe(rng.uniform(size=6), int(rng.integers(3)), rng.uniform(size=6)))
            ex.step_done()
        return ex, rewards

    def test_rewards_finite(self, name):
        _, rewards = self.run(name, 0)
        assert np.all(np.isfinite(rewards))

    def test_deterministic_under_seed(self, name):
        assert self.run(name, 4)[1] == self.run(name, 4)[1]

    def test_warmup_rewards_are_zero(self, name):
        ex, rewards = self.run(name, 1)
        assert all(r == 0.0 for r in rewards[:ex.warmup])

    def test_rejects_bad_dimensions(self, name):
        ex = make_explorer(name, 6, 3)
        if isinstance(ex, NullExplorer):
            assert ex.observe(np.zeros(5), 0, np.zeros(6)) == 0.0  # ignores its inputs
            return
        with pytest.raises(ValueError):
            ex.observe(np.zeros(5), 0, np.zeros(6))
        with pytest.raises(ValueError):
            ex.observe(np.zeros(6), 0, np.zeros(5))


def test_unknown_explorer():
    with pytest.raises(ValueError, match="unknown explorer"):
        make_explorer("icm", 2, 2)
