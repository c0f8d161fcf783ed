import numpy as np
import pytest

from caromarkov.errors import ValidationError
from caromarkov.ingest import empirical_survival, mean_score
from caromarkov.models import MarkovModel, eigen2, markov_mean, markov_survival
from caromarkov.simulate import (
    SHARD_SIZE,
    check_surface_eigen,
    opponent_surface,
    shard_rng,
    simulate_histogram,
    simulate_inning,
    simulate_scores,
    surface_matrices,
)

from conftest import CENTER, random_substochastic

BERNOULLI_08 = [[0.8, 0.4], [0.0, 0.4]]


def survival_at(h, n):
    mu = empirical_survival(h).values
    return mu[n] if n < mu.size else 0.0


def binomial_se(p, innings):
    return np.sqrt(max(p * (1 - p), 1.0 / innings) / innings)


class TestSampling:
    def test_zero_matrix_always_misses(self, rng):
        mm = MarkovModel.two_type(np.zeros((2, 2)), 0.5)
        assert all(simulate_inning(mm, rng) == 0 for _ in range(100))
        assert simulate_histogram(mm, 1).as_dict() == {0: 1}
        assert simulate_histogram(mm, 1000, seed=5).as_dict() == {0: 1000}

    def test_scalar_and_lockstep_agree_in_distribution(self, rng):
        mm = MarkovModel.two_type(CENTER, 0.5)
        a = np.array([simulate_inning(mm, rng) for _ in range(20_000)])
        b = simulate_scores(mm, 20_000, rng)
        se = np.sqrt(a.var() / a.size + b.var() / b.size)
        assert abs(a.mean() - b.mean()) < 4 * se

    def test_rejects_empty_run(self):
        with pytest.raises(ValidationError):
            simulate_histogram(MarkovModel.two_type(CENTER, 0.5), 0)

    def test_shard_streams_are_distinct(self):
        assert shard_rng(0, 0).random() != shard_rng(0, 1).random()
        assert shard_rng(7, 3).random() == shard_rng(7, 3).random()


class TestDeterminism:
    def test_same_seed_same_histogram(self):
        mm = MarkovModel.two_type(CENTER, 0.5)
        assert simulate_histogram(mm, 50_000, seed=3) == simulate_histogram(mm, 50_000, seed=3)
        assert simulate_histogram(mm, 50_000, seed=3) != simulate_histogram(mm, 50_000, seed=4)

    def test_worker_count_does_not_matter(self, monkeypatch):
        mm = MarkovModel.two_type(CENTER, 0.5)
        n = 3 * SHARD_SIZE + 17
        single = simulate_histogram(mm, n, seed=11, workers=1)
        assert simulate_histogram(mm, n, seed=11, workers=4) == single
        monkeypatch.setenv("CAROMARKOV_THREADS", "3")
        assert simulate_histogram(mm, n, seed=11) == single

    def test_shards_compose(self):
        # the first shard of a longer run is the whole of a one-shard run
        mm = MarkovModel.two_type(CENTER, 0.5)
        one = simulate_scores(mm, SHARD_SIZE, shard_rng(2, 0))
        h = simulate_histogram(mm, SHARD_SIZE, seed=2)
        assert h.as_dict() == {int(s): int(c) for s, c in enumerate(np.bincount(one)) if c}


@pytest.mark.slow
class TestMonteCarlo:
    def test_bernoulli_equivalent_mean(self):
        h = simulate_histogram(MarkovModel.two_type(BERNOULLI_08, 0.5), 10**6, seed=1)
        assert mean_score(h) == pytest.approx(4.0, abs=0.01)

    def test_bernoulli_half(self):
        h = simulate_histogram(MarkovModel.two_type(np.diag([0.5, 0.5]), 0.3), 10**6, seed=2)
        assert mean_score(h) == pytest.approx(1.0, abs=0.004)

    def test_center_matrix_survival(self):
        mm = MarkovModel.two_type(CENTER, 0.5)
        innings = 10**6
        h = simulate_histogram(mm, innings, seed=0)
        for n in (1, 5, 20, 100):
            p = markov_survival(mm, n)
            assert abs(survival_at(h, n) - p) <= 3 * binomial_se(p, innings)

    def test_oracle_agreement_random_models(self):
        rng = np.random.default_rng(99)
        innings = 10**5
        for i in range(20):
            k = random_substochastic(rng, min_gap=0.0, positive_det=False)
            mm = MarkovModel.two_type(k, rng.uniform())
            h = simulate_histogram(mm, innings, seed=i)
            for n in (1, 2, 5, 10, 20):
                p = markov_survival(mm, n)
                assert abs(survival_at(h, n) - p) <= 4 * binomial_se(p, innings)
            scores = np.repeat(list(h.entries), list(h.entries.values()))
            assert abs(scores.mean() - markov_mean(mm)) <= 4 * scores.std() / np.sqrt(innings)


class TestSurface:
    @pytest.mark.parametrize("p0", [0.0, 0.5, 1.0])
    def test_opponent_independent_anchor(self, p0):
        s = opponent_surface(0.4, 0.8, p0, grid=11)
        m, k = s.cell(-0.8, 0.0)
        np.testing.assert_allclose(k, BERNOULLI_08, atol=1e-15)
        assert m == pytest.approx(4.0, abs=1e-9)

    @pytest.mark.parametrize("p0, expected", [(0.0, 4.0), (0.5, 7 / 3), (1.0, 2 / 3)])
    def test_diagonal_anchor(self, p0, expected):
        s = opponent_surface(0.4, 0.8, p0, grid=11)
        m, k = s.cell(-0.4, 0.8)
        np.testing.assert_allclose(k, np.diag([0.4, 0.8]), atol=1e-15)
        assert m == pytest.approx(expected, abs=1e-9)

    def test_negative_k12_is_infeasible(self):
        # (s - dk2) dk2 - d < 0 with a positive denominator gives k12 < 0
        k, ok = surface_matrices(0.4, 0.8, 0.5, 0.1)
        assert k[0, 1] < 0 and not ok

    def test_undetermined_k12_is_infeasible(self):
        k, ok = surface_matrices(0.4, 0.8, 0.3, -0.3)
        assert not ok

    def test_eigen_consistency(self):
        s = opponent_surface(0.4, 0.8, 0.5)
        assert s.feasible.any() and not s.feasible.all()
        assert check_surface_eigen(s)
        for kk in s.k[s.feasible][::97]:
            e = eigen2(np.clip(kk, 0, None))
            assert (e.rho1, e.rho2) == pytest.approx((0.4, 0.8), abs=1e-10)

    def test_csv(self):
        s = opponent_surface(0.4, 0.8, 0.5, grid=11)
        lines = s.to_csv().splitlines()
        assert lines[0] == "dk1,dk2,m,feasible"
        assert len(lines) == 1 + 11 * 11
        row = next(r for r in lines if r.startswith("-0.8,0,"))
        assert float(row.split(",")[2]) == pytest.approx(4.0)
        assert any(r.endswith(",0") for r in lines[1:])

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValidationError):
            opponent_surface(0.8, 0.4, 0.5)
        with pytest.raises(ValidationError):
            opponent_surface(0.4, 0.8, 1.5)
