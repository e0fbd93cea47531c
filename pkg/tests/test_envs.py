import csv
import math

import numpy as np
import pytest

from missing_bandits.core import OutcomeAlphabet, RngStream
from missing_bandits.envs import (
    BootstrapEnv,
    IngestError,
    MarEnv,
    McarEnv,
    MissingMedEnv,
    MnarEnv,
    build_ignoremed_instance,
    build_minimax_family,
    ingest_pbc,
    sample_mar_config,
    sample_mcar_config,
    sample_mnar_config,
)

CAL_ROUNDS = 100_000


def empirical_rates(env, arm, rounds, gen):
    """Observation frequencies from repeated pulls of one arm."""
    o_y = o_m = 0
    for _ in range(rounds):
        r = env.step(arm, gen)
        o_y += r.o_y
        o_m += r.o_m
    return o_m / rounds, o_y / rounds


class TestMcarEnv:
    def test_true_mean_is_mu(self):
        env = McarEnv([0.1, 0.8], 0.5)
        assert env.true_mean(0) == 0.1
        assert env.true_mean(1) == 0.8
        assert env.n == 2 and env.kind == "mcar"

    def test_observation_rate_calibrates(self):
        env = McarEnv([0.5], 0.3, noise_std=1.0)
        gen = RngStream(11).generator()
        _, rate = empirical_rates(env, 0, CAL_ROUNDS, gen)
        se = math.sqrt(0.3 * 0.7 / CAL_ROUNDS)
        assert abs(rate - 0.3) < 3 * se

    def test_reward_mean_calibrates(self):
        env = McarEnv([0.4], 1.0, noise_std=1.0)
        gen = RngStream(12).generator()
        ys = [env.step(0, gen).y for _ in range(CAL_ROUNDS)]
        assert abs(np.mean(ys) - 0.4) < 3 / math.sqrt(CAL_ROUNDS)

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            McarEnv([0.5], 0.0)
        with pytest.raises(ValueError):
            McarEnv([0.5], 1.2)


class TestMarEnv:
    def test_true_mean_weights_cells(self):
        env = MarEnv([[0.2, 0.7]], [[0.9, 0.9]], [[0.6, 0.4]])
        assert env.true_mean(0) == pytest.approx(0.6 * 0.2 + 0.4 * 0.7)

    def test_mediator_frequencies_calibrate(self):
        env = MarEnv([[0.0, 1.0]], [[1.0, 1.0]], [[0.25, 0.75]])
        gen = RngStream(3).generator()
        hits = sum(env.step(0, gen).m for _ in range(CAL_ROUNDS))
        se = math.sqrt(0.75 * 0.25 / CAL_ROUNDS)
        assert abs(hits / CAL_ROUNDS - 0.75) < 3 * se

    def test_observation_follows_mediator_cell(self):
        # gamma differs per cell, so P(o_y) = sum_m p_m gamma_m
        env = MarEnv([[0.0, 0.0]], [[0.2, 0.9]], [[0.5, 0.5]])
        gen = RngStream(4).generator()
        _, rate = empirical_rates(env, 0, CAL_ROUNDS, gen)
        want = 0.5 * 0.2 + 0.5 * 0.9
        se = math.sqrt(want * (1 - want) / CAL_ROUNDS)
        assert abs(rate - want) < 3 * se

    def test_mediator_always_observed(self):
        env = MarEnv([[0.1]], [[0.5]], [[1.0]])
        gen = RngStream(5).generator()
        assert all(env.step(0, gen).o_m for _ in range(50))

    def test_row_validation(self):
        with pytest.raises(ValueError):
            MarEnv([[0.1, 0.2]], [[0.9, 0.9]], [[0.7, 0.7]])  # p row not stochastic


class TestMnarEnv:
    def setup_method(self):
        self.ab = OutcomeAlphabet((0.0, 1.0))
        self.env = MnarEnv(
            self.ab,
            p=[[0.5, 0.5]],
            q=[[[0.8, 0.2], [0.4, 0.6]]],
            gamma_y=[[0.9, 0.5]],
        )

    def test_true_mean_marginalizes_mediator(self):
        # P(Y=1) = 0.5*0.2 + 0.5*0.6
        assert self.env.true_mean(0) == pytest.approx(0.4)
        assert self.env.outcome_marginal(0) == pytest.approx([0.6, 0.4])

    def test_theta_matrix_cells(self):
        th = self.env.theta_matrix(0)
        # theta[m][y] = p_m q_{y|m} gamma_y
        assert th[0, 0] == pytest.approx(0.5 * 0.8 * 0.9)
        assert th[1, 1] == pytest.approx(0.5 * 0.6 * 0.5)

    def test_observation_depends_on_outcome(self):
        gen = RngStream(6).generator()
        seen = {0.0: [0, 0], 1.0: [0, 0]}
        for _ in range(CAL_ROUNDS):
            r = self.env.step(0, gen)
            if r.o_y:
                seen[r.y][0] += 1
        # observed-y composition should overweight y=0 (gamma 0.9 vs 0.5)
        frac0 = seen[0.0][0] / (seen[0.0][0] + seen[1.0][0])
        want = 0.6 * 0.9 / (0.6 * 0.9 + 0.4 * 0.5)
        assert abs(frac0 - want) < 0.01

    def test_rewards_come_from_alphabet(self):
        gen = RngStream(7).generator()
        vals = set(self.ab.values)
        for _ in range(200):
            r = self.env.step(0, gen)
            if r.o_y:
                assert r.y in vals


class TestMissingMedEnv:
    def test_mar_variant_masks_mediator(self):
        base = MarEnv([[0.1, 0.9]], [[1.0, 1.0]], [[0.5, 0.5]])
        env = MissingMedEnv(base, [0.3])
        assert env.kind == "missing_med_mar" and env.variant == "mar"
        gen = RngStream(8).generator()
        rate, _ = empirical_rates(env, 0, CAL_ROUNDS, gen)
        se = math.sqrt(0.3 * 0.7 / CAL_ROUNDS)
        assert abs(rate - 0.3) < 3 * se

    def test_mnar_variant_lambda_depends_on_mediator(self):
        ab = OutcomeAlphabet((0.0, 1.0))
        base = MnarEnv(ab, [[0.5, 0.5]], [[[1.0, 0.0], [0.0, 1.0]]], [[1.0, 1.0]])
        env = MissingMedEnv(base, [[1.0, 0.2]])
        assert env.variant == "mnar"
        gen = RngStream(9).generator()
        shown = {0: 0, 1: 0}
        total = {0: 0, 1: 0}
        for _ in range(CAL_ROUNDS):
            r = env.step(0, gen)
            # mediator equals outcome index here, so recover it from y
            m = int(r.y)
            total[m] += 1
            shown[m] += r.o_m
        assert shown[0] == total[0]  # lambda = 1
        rate1 = shown[1] / total[1]
        se = math.sqrt(0.2 * 0.8 / total[1])
        assert abs(rate1 - 0.2) < 3 * se

    def test_true_mean_delegates_to_base(self):
        base = MarEnv([[0.25, 0.5]], [[0.9, 0.9]], [[0.5, 0.5]])
        env = MissingMedEnv(base, [0.7])
        assert env.true_mean(0) == base.true_mean(0)


class TestSamplers:
    def test_mcar_ranges(self):
        env = sample_mcar_config(20, RngStream(0))
        assert env.n == 20
        assert all(0.0 <= env.mu[a] <= 1.0 for a in range(20))
        assert 0.5 <= env.gamma <= 1.0

    def test_mar_arm0_is_best_by_construction(self):
        for seed in range(5):
            env = sample_mar_config(6, 4, False, RngStream(seed))
            means = [env.true_mean(a) for a in range(6)]
            assert means[0] == max(means)
            assert means[0] >= 0.6
            assert all(m <= 0.4 + 1e-12 for m in means[1:])
            assert env.gamma.min() >= 0.8 and env.gamma.max() <= 1.0
            np.testing.assert_allclose(env.p.sum(axis=1), 1.0, atol=1e-12)

    def test_mar_peaked_concentrates_on_smallest_gamma(self):
        env = sample_mar_config(10, 5, True, RngStream(2))
        hits = sum(
            int(np.argmax(env.p[a]) == np.argmin(env.gamma[a])) for a in range(10)
        )
        # Dirichlet concentration 5 vs 1 makes the designated cell the mode
        # most of the time but not always
        assert hits >= 7

    def test_mnar_sampler_shapes_and_best_arm(self):
        env = sample_mnar_config(5, 3, 4, RngStream(1))
        assert env.p.shape == (5, 3)
        assert env.q.shape == (5, 3, 4)
        assert env.gamma_y.shape == (5, 4)
        assert env.alphabet.is_normalized
        assert env.gamma_y.min() >= 0.5
        means = [env.true_mean(a) for a in range(5)]
        assert int(np.argmax(means)) == 0

    def test_mnar_single_outcome_alphabet(self):
        env = sample_mnar_config(2, 2, 1, RngStream(0))
        assert env.alphabet.values == (1.0,)


class TestIgnoremedInstance:
    def test_hand_values(self):
        env = build_ignoremed_instance(5, 0.1)
        assert env.n == 2 and env.K == 5
        assert env.true_mean(0) == pytest.approx(0.9)
        assert env.true_mean(1) == pytest.approx(0.025)
        np.testing.assert_allclose(
            env.gamma[0],
            [0.00689655172413793, 0.2482758620689655, 0.2482758620689655,
             0.2482758620689655, 0.2482758620689655],
            rtol=1e-12,
        )

    def test_observed_cell_masses_identical_across_arms(self):
        """The two arms are indistinguishable to any mediator-ignoring
        observer: each (m, observed) cell carries identical probability."""
        env = build_ignoremed_instance(5, 0.1)
        cell0 = env.p[0] * env.gamma[0]
        cell1 = env.p[1] * env.gamma[1]
        assert (np.sort(cell0) == np.sort(cell1)).all()
        assert cell0.sum() == cell1.sum()  # float-exact by permutation

    def test_rows_are_permutations(self):
        env = build_ignoremed_instance(4, 0.2)
        assert sorted(env.p[0]) == sorted(env.p[1])
        assert sorted(env.mu[0]) == sorted(env.mu[1])

    def test_epsilon_bounds(self):
        with pytest.raises(ValueError):
            build_ignoremed_instance(3, 0.0)
        with pytest.raises(ValueError):
            build_ignoremed_instance(3, 1.0)


class TestMinimaxFamily:
    def test_mcar_instance_places_delta(self):
        # family = all-zero baseline plus one raised instance per arm
        envs = build_minimax_family("mcar", 3, 0.1, gamma=0.5)
        assert len(envs) == 4
        assert all(envs[0].true_mean(a) == 0.0 for a in range(3))
        for k in range(1, 4):
            mu = [envs[k].true_mean(a) for a in range(3)]
            assert mu[k - 1] == pytest.approx(0.1)
            assert sum(mu) == pytest.approx(0.1)

    def test_mar_raised_instance_recovers_delta_mean(self):
        p = [[0.5, 0.5]] * 2
        g = [[0.5, 1.0]] * 2
        envs = build_minimax_family("mar", 2, 0.3, p=p, gamma_mat=g)
        # cell means delta/(P_a gamma) wash back out to exactly delta
        assert envs[1].true_mean(0) == pytest.approx(0.3)
        assert envs[1].true_mean(1) == 0.0
        assert envs[2].true_mean(1) == pytest.approx(0.3)

    def test_mar_rejects_cell_above_one(self):
        p = [[0.5, 0.5]]
        g = [[0.1, 1.0]]
        # smallest cell would need mean 0.8/0.55 > 1
        with pytest.raises(ValueError):
            build_minimax_family("mar", 1, 0.8, p=p, gamma_mat=g)


def write_csv(path, rows, header=("Z1", "X", "D")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


class TestIngestPbc:
    def test_happy_path_two_arms(self, tmp_path):
        f = tmp_path / "trial.csv"
        rows = [(1, 10.0, 0), (1, 20.0, 0), (1, 40.0, 1), (2, 5.0, 1), (2, 40.0, 0)]
        write_csv(f, rows)
        env = ingest_pbc(f, synthetic_gamma=0.9, rng=RngStream(0))
        assert isinstance(env, BootstrapEnv)
        assert env.n == 2
        # X normalized by the pool-wide max (40)
        assert env.true_mean(0) == pytest.approx((10 / 40 + 20 / 40 + 40 / 40) / 3)

    def test_header_case_insensitive_extra_columns_ignored(self, tmp_path):
        f = tmp_path / "trial.csv"
        write_csv(f, [(1, 1.0, 0, "x"), (2, 2.0, 1, "y")], header=("z1", "x", "d", "junk"))
        env = ingest_pbc(f, synthetic_gamma=1.0, rng=RngStream(0))
        assert env.n == 2

    def test_missing_column_named(self, tmp_path):
        f = tmp_path / "trial.csv"
        write_csv(f, [(1, 1.0)], header=("Z1", "X"))
        with pytest.raises(IngestError, match="D"):
            ingest_pbc(f, synthetic_gamma=1.0, rng=RngStream(0))

    def test_bad_value_names_row_and_column(self, tmp_path):
        f = tmp_path / "trial.csv"
        write_csv(f, [(1, 1.0, 0), (1, "oops", 1)])
        with pytest.raises(IngestError, match=r"row 3.*X"):
            ingest_pbc(f, synthetic_gamma=1.0, rng=RngStream(0))

    def test_sampling_reproducible(self, tmp_path):
        f = tmp_path / "trial.csv"
        write_csv(f, [(1, 1.0, 0), (2, 3.0, 0), (1, 2.0, 1), (2, 4.0, 1)])
        env = ingest_pbc(f, synthetic_gamma=0.5, rng=RngStream(3))
        a = [env.step(0, RngStream(1).generator()).o_y for _ in range(20)]
        b = [env.step(0, RngStream(1).generator()).o_y for _ in range(20)]
        assert a == b
