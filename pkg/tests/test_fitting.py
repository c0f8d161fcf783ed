import itertools

import numpy as np
import pytest

from caromarkov.errors import DegenerateFitError
from caromarkov.fitting import bernoulli_sse, fit_bernoulli, fit_histogram, fit_markov2
from caromarkov.ingest import ScoreHistogram, composite, empirical_survival, parse_histogram
from caromarkov.models import BernoulliModel, MarkovModel, SpectralFit, exact_curve, spectral_mean
from caromarkov.simulate import simulate_histogram

from conftest import CENTER


def spectral_curve(rho1, rho2, y):
    f = SpectralFit(rho1, rho2, y, spectral_mean(rho1, rho2, y))
    return exact_curve(f, cutoff=1e-15), f.m


@pytest.mark.parametrize("m, lam", [(1.0, 0.5), (0.0, 0.0), (30.4, 30.4 / 31.4)])
def test_fit_bernoulli(m, lam):
    # integer histogram with the required mean: m * 10 points over 10 innings
    h = ScoreHistogram({int(round(m * 10)): 1, 0: 9}) if m else ScoreHistogram({0: 3})
    assert fit_bernoulli(h).lam == pytest.approx(lam, rel=1e-14)


def test_fit_bernoulli_composite_player_average():
    assert BernoulliModel.from_mean(30.4).lam == pytest.approx(0.9682, abs=5e-5)


def test_zero_residual_recovery():
    curve, m = spectral_curve(0.4, 0.8, 0.5)
    assert m == pytest.approx(7 / 3)
    fit = fit_markov2(curve, m)
    assert fit.rho1 == pytest.approx(0.4, abs=1e-6)
    assert fit.rho2 == pytest.approx(0.8, abs=1e-6)
    assert fit.y == pytest.approx(0.5, abs=1e-6)
    assert fit.sse < 1e-20


def test_bernoulli_curve_is_flagged():
    curve = exact_curve(BernoulliModel(0.7), cutoff=1e-15)
    m = 0.7 / 0.3
    fit = fit_markov2(curve, m)
    assert fit.sse < 1e-20
    assert fit.rho2 == pytest.approx(0.7, abs=1e-6)
    assert fit.y == pytest.approx(1.0, abs=1e-4)
    h_curve_report = fit_histogram(_bernoulli_histogram(0.7))
    assert h_curve_report.effectively_bernoullian


def _bernoulli_histogram(lam, innings=10**6):
    """Deterministic histogram whose counts follow the geometric law."""
    counts = {}
    remaining = innings
    n = 0
    while remaining > 0:
        c = int(round(innings * lam**n * (1 - lam)))
        c = min(max(c, 1), remaining)
        counts[n] = c
        remaining -= c
        n += 1
    return ScoreHistogram(counts)


@pytest.mark.parametrize(
    "rho1, rho2, y",
    [
        (r1, r2, y)
        for (r1, r2), y in itertools.product(
            [(0.1, 0.5), (0.3, 0.9), (0.4, 0.8), (0.6, 0.95), (0.05, 0.99), (0.5, 0.6)],
            [0.1, 0.5, 0.9],
        )
    ],
)
def test_zero_residual_grid(rho1, rho2, y):
    curve, m = spectral_curve(rho1, rho2, y)
    fit = fit_markov2(curve, m)
    assert fit.rho1 == pytest.approx(rho1, abs=1e-5)
    assert fit.rho2 == pytest.approx(rho2, abs=1e-5)


def test_degenerate_inputs_carry_fallback():
    with pytest.raises(DegenerateFitError) as info:
        fit_markov2(empirical_survival(ScoreHistogram({0: 4})), 0.0)
    assert info.value.fallback == BernoulliModel(0.0)
    with pytest.raises(DegenerateFitError) as info:
        fit_markov2(empirical_survival(ScoreHistogram({0: 4, 1: 2})), 1 / 3)
    assert info.value.fallback.lam == pytest.approx(0.25)


def test_monotone_sse_dominance_and_scale(rng):
    for _ in range(15):
        h = ScoreHistogram({int(s): int(c) for s, c in zip(rng.integers(0, 60, 12), rng.integers(1, 40, 12))})
        if len(h.entries) < 3:
            continue
        rep = fit_histogram(h)
        assert rep.markov.sse <= rep.bernoulli_sse + 1e-12
        assert rep.markov.sse >= 0 and rep.bernoulli_sse >= 0
        n = np.arange(rep.n_used + 1)
        mu = rep.markov.survival(n)
        assert np.all((mu >= -1e-12) & (mu <= 1 + 1e-12))
        assert np.all(np.diff(mu) <= 1e-12)
        doubled = fit_histogram(composite([h, h]))
        assert (doubled.markov.rho1, doubled.markov.rho2) == (rep.markov.rho1, rep.markov.rho2)


def test_report_fields():
    h = parse_histogram("0 44\n1 10\n2 15\n5 3\n9 1")
    rep = fit_histogram(h)
    d = rep.to_dict()
    assert set(d) >= {"m", "lambda", "sse_bernoulli", "rho1", "rho2", "y", "sse_markov",
                      "effectively_bernoullian", "degenerate", "n_used"}
    assert rep.n_used == 10 and rep.restarts == 25 and rep.converged
    assert d["sse_bernoulli"] == pytest.approx(bernoulli_sse(empirical_survival(h), rep.bernoulli))


@pytest.mark.slow
def test_simulated_villiers_recovers_eigenvalues():
    h = simulate_histogram(MarkovModel.two_type(CENTER, 0.5), 10**6, seed=0)
    rep = fit_histogram(h)
    assert rep.markov.rho1 == pytest.approx(0.4067, abs=0.02)
    assert rep.markov.rho2 == pytest.approx(0.9803, abs=0.005)
    assert not rep.effectively_bernoullian


def test_collapsed_rates_stay_finite():
    # optimum sits where the two rates merge
    h = ScoreHistogram({3: 15, 4: 25, 12: 30, 19: 17, 24: 27, 29: 31, 30: 13, 32: 21, 34: 15, 51: 19, 55: 7, 59: 17})
    rep = fit_histogram(h)
    mu = rep.markov.survival(np.arange(rep.n_used + 1))
    assert np.isfinite(rep.markov.y)
    assert np.all(np.diff(mu) <= 1e-12) and mu[0] == pytest.approx(1.0)
    assert rep.markov.sse <= rep.bernoulli_sse
    assert rep.effectively_bernoullian
