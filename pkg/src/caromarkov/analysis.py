"""Comparing players with different averages.

Rescaling run length by ``nu = -ln(lam) n`` maps every Bernoulli player onto
``exp(-nu)``; departures from that line are what position play adds.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError, ValidationError
from .ingest import SurvivalCurve
from .models import MarkovModel, SpectralFit, markov_mean

__all__ = [
    "DedimCurve",
    "EasyStart",
    "dedimensionalize",
    "asymptote_slope",
    "check_rho2_lambda",
    "easy_start_mean",
    "start_contributions",
    "EMPIRICAL_EXPONENT",
]

# Observed ln(rho2)/ln(lam) for balkline composites; used only for comparison
# and in the labelled approximation of the easy-start contribution.
EMPIRICAL_EXPONENT = 0.6


def _check_lam(lam):
    if not 0.0 < lam < 1.0:
        raise ValidationError(f"lambda must lie strictly in (0, 1), got {lam}")


@dataclass(frozen=True)
class DedimCurve:
    nu: np.ndarray
    mu: np.ndarray

    @property
    def points(self):
        return list(zip(self.nu.tolist(), self.mu.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["nu", "mu"])
        for x, y in zip(self.nu, self.mu):
            w.writerow([repr(float(x)), repr(float(y))])
        return buf.getvalue()


def dedimensionalize(curve: SurvivalCurve, lam: float) -> DedimCurve:
    """Points ``(-ln(lam) n, mu_n)`` for every ``n`` with ``mu_n > 0``."""
    _check_lam(lam)
    mu = np.asarray(curve.values)
    n = np.flatnonzero(mu > 0.0)
    return DedimCurve(-math.log(lam) * n, mu[n].copy())


def check_rho2_lambda(fit: SpectralFit, lam: float) -> float:
    """Exponent ``ln(rho2) / ln(lam)``; 0.6 for the players studied so far."""
    _check_lam(lam)
    if not 0.0 < fit.rho2 < 1.0:
        raise ValidationError(f"rho2 must lie strictly in (0, 1), got {fit.rho2}")
    return math.log(fit.rho2) / math.log(lam)


def asymptote_slope(fit: SpectralFit, lam: float) -> float:
    """Slope of ``ln mu`` against ``nu`` at large ``nu``: ``-ln(rho2) / ln(lam)``."""
    if lam >= 1.0:
        raise DivergenceError("lambda -> 1 sends nu to zero; slope undefined")
    return -check_rho2_lambda(fit, lam)


class EasyStart(NamedTuple):
    exact: float
    approx: float


def start_contributions(mm: MarkovModel) -> np.ndarray:
    """Share of the average from runs beginning on each shot type.

    Entry ``j`` is ``p_start[j] * 1' K (I - K)^-1 e_j``; the entries add up to
    the average.
    """
    n = mm.n_types
    try:
        g = np.linalg.solve(np.eye(n) - mm.k, np.eye(n))
    except np.linalg.LinAlgError:
        raise DivergenceError("I - K is singular") from None
    per_type = (mm.k @ g).sum(axis=0)
    return mm.p_start * per_type


def easy_start_mean(mm: MarkovModel) -> EasyStart:
    """Contribution ``m2`` of runs starting on an easy (type 2) shot.

    ``exact`` comes from the linear solve. ``approx`` is the empirical
    ``(1 - p0) lam^0.6 / (1 - lam^0.6)`` with ``lam = m / (m + 1)``.
    """
    if mm.n_types != 2:
        raise ValidationError("easy_start_mean needs a two-type model")
    exact = float(start_contributions(mm)[1])
    m = markov_mean(mm)
    lam = m / (m + 1.0)
    r = lam ** EMPIRICAL_EXPONENT
    approx = (1.0 - mm.p0) * r / (1.0 - r)
    return EasyStart(exact, approx)
