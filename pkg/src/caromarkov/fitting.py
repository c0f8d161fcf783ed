"""Least-squares estimation of the Bernoulli and two-type Markov curves.

The average ``m`` is taken from the score sheet, which pins ``y`` once
``rho1`` and ``rho2`` are chosen. The Markov fit therefore searches a
two-dimensional space. It is parameterised so that every point is admissible:

    rho1 = lam * a                    (y >= 0  <=>  rho1 <= lam = m / (m + 1))
    rho2 = low + (1 - low) * b        low = max(rho1, 1 - 1 / (m - r1))

with ``(a, b)`` in the unit box and ``r1 = rho1 / (1 - rho1)``. The second
bound is the upper limit on ``y`` that keeps the curve non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import ConvergenceError, DegenerateFitError
from .ingest import ScoreHistogram, SurvivalCurve, empirical_survival, mean_score
from .models import BernoulliModel, SpectralFit, power_gap

__all__ = [
    "FitReport",
    "fit_bernoulli",
    "bernoulli_sse",
    "fit_markov2",
    "fit_histogram",
    "START_LADDER",
]

# Multi-start seeds, applied to both box coordinates (5 x 5 grid).
START_LADDER = (0.1, 0.3, 0.5, 0.7, 0.9)
FTOL = 1e-12
XTOL = 1e-9
MAX_NFEV = 10_000
BERNOULLIAN_Y = 0.995
BERNOULLIAN_GAP = 0.01
# keeps y finite; below this the two rates are numerically one
MIN_GAP = 1e-6
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class FitReport:
    bernoulli: BernoulliModel
    bernoulli_sse: float
    markov: SpectralFit
    n_used: int
    converged: bool
    restarts: int

    @property
    def effectively_bernoullian(self) -> bool:
        # y near 0 is the same degeneracy with the labels swapped
        y = self.markov.y
        return (
            y > BERNOULLIAN_Y
            or y < 1.0 - BERNOULLIAN_Y
            or self.markov.rho2 - self.markov.rho1 < BERNOULLIAN_GAP
        )

    def to_dict(self) -> dict:
        return {
            "m": self.markov.m,
            "lambda": self.bernoulli.lam,
            "sse_bernoulli": self.bernoulli_sse,
            "rho1": self.markov.rho1,
            "rho2": self.markov.rho2,
            "y": self.markov.y,
            "sse_markov": self.markov.sse,
            "effectively_bernoullian": self.effectively_bernoullian,
            "degenerate": False,
            "converged": self.converged,
            "restarts": self.restarts,
            "n_used": self.n_used,
        }


def fit_bernoulli(h: ScoreHistogram) -> BernoulliModel:
    return BernoulliModel.from_mean(mean_score(h))


def bernoulli_sse(curve: SurvivalCurve, b: BernoulliModel) -> float:
    n = np.arange(1, curve.max + 1)
    r = curve.values[1:] - b.lam ** n
    return float(r @ r)


class _Objective:
    def __init__(self, curve: SurvivalCurve, m: float):
        self.mu = np.asarray(curve.values[1:], dtype=float)
        self.n = np.arange(1, curve.max + 1, dtype=float)
        self.m = m
        self.lam = m / (m + 1.0)

    def _low(self, rho1):
        """Smallest admissible rho2 and its derivative in rho1."""
        r1 = rho1 / (1.0 - rho1)
        if self.m > r1 and 1.0 - 1.0 / (self.m - r1) > rho1 + MIN_GAP:
            low = 1.0 - 1.0 / (self.m - r1)
            return low, -1.0 / ((self.m - r1) ** 2 * (1.0 - rho1) ** 2)
        return rho1 + MIN_GAP, 1.0

    def rhos(self, x):
        rho1 = self.lam * float(x[0])
        low = min(self._low(rho1)[0], _BELOW_ONE)
        rho2 = low + (1.0 - low) * float(x[1])
        return rho1, min(rho2, _BELOW_ONE)

    def y(self, rho1, rho2):
        r1 = rho1 / (1.0 - rho1)
        return (self.m - r1) * (1.0 - rho1) * (1.0 - rho2) / (rho2 - rho1)

    def residuals(self, x):
        rho1, rho2 = self.rhos(x)
        y = self.y(rho1, rho2)
        return self.mu - (rho1 ** self.n + y * power_gap(rho1, rho2, self.n))

    def jacobian(self, x):
        b = float(x[1])
        rho1, rho2 = self.rhos(x)
        y = self.y(rho1, rho2)
        gap = rho2 - rho1
        dy1 = (y - 1.0) * (1.0 - rho2) / (gap * (1.0 - rho1))
        dy2 = -y * (1.0 - rho1) / (gap * (1.0 - rho2))
        n = self.n
        g = power_gap(rho1, rho2, n)
        # d(model)/d(rho1), d(model)/d(rho2) with y following the average
        g1 = (1.0 - y) * n * rho1 ** (n - 1.0) + g * dy1
        g2 = y * n * rho2 ** (n - 1.0) + g * dy2
        low, dlow = self._low(rho1)
        d_rho1_da = self.lam
        d_rho2_da = (1.0 - b) * dlow * d_rho1_da
        d_rho2_db = 1.0 - low
        ja = -(g1 * d_rho1_da + g2 * d_rho2_da)
        jb = -(g2 * d_rho2_db)
        return np.column_stack([ja, jb])

    def sse(self, x):
        r = self.residuals(x)
        return float(r @ r)


def _nonzero_points(curve: SurvivalCurve) -> int:
    return int(np.count_nonzero(curve.values))


def fit_markov2(curve: SurvivalCurve, m: float, *, return_report=False):
    """Fit ``(rho1, rho2)`` of the two-type curve to ``curve`` at fixed average ``m``.

    Minimises the unweighted sum of squared differences in linear space over
    ``n = 1 .. curve.max``, from a 5 x 5 grid of starts, keeping the lowest
    SSE (ties go to the lexicographically smaller ``(rho1, rho2)``).

    Raises
    ------
    DegenerateFitError
        ``m <= 0`` or fewer than three nonzero curve points; the Bernoulli
        model is attached as ``fallback``.
    ConvergenceError
        No start converged; ``best`` carries the best iterate.
    """
    fallback = BernoulliModel.from_mean(max(m, 0.0))
    if m <= 0.0 or _nonzero_points(curve) < 3:
        raise DegenerateFitError(
            "curve too short or average zero: no interior Markov fit", fallback=fallback
        )
    obj = _Objective(curve, m)

    candidates = []
    converged = False
    for a0 in START_LADDER:
        for b0 in START_LADDER:
            res = least_squares(
                obj.residuals,
                x0=[a0, b0],
                jac=obj.jacobian,
                bounds=([0.0, 0.0], [1.0, 1.0]),
                method="trf",
                ftol=FTOL,
                xtol=XTOL,
                gtol=1e-15,
                max_nfev=MAX_NFEV,
            )
            converged |= res.status > 0
            rho1, rho2 = obj.rhos(res.x)
            candidates.append((obj.sse(res.x), rho1, rho2))
    # rho2 = lam, y = 1 is the Bernoulli curve; keeping it as a candidate means
    # the Markov SSE never exceeds the Bernoulli one.
    sse_b = bernoulli_sse(curve, fallback)
    candidates.append((sse_b, 0.5 * obj.lam, obj.lam))

    sse, rho1, rho2 = min(candidates)
    y = 1.0 if (sse, rho1, rho2) == candidates[-1] else obj.y(rho1, rho2)
    fit = SpectralFit(rho1, rho2, y, m, sse)
    if not converged:
        raise ConvergenceError("no multi-start run converged", best=fit)
    if return_report:
        return fit, converged, len(START_LADDER) ** 2
    return fit


def fit_histogram(h: ScoreHistogram) -> FitReport:
    """Fit both models to a score sheet."""
    curve = empirical_survival(h)
    bern = fit_bernoulli(h)
    fit, converged, restarts = fit_markov2(curve, mean_score(h), return_report=True)
    return FitReport(
        bernoulli=bern,
        bernoulli_sse=bernoulli_sse(curve, bern),
        markov=fit,
        n_used=curve.max,
        converged=converged,
        restarts=restarts,
    )
