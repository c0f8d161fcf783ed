"""Bernoulli and Markov models of a run, with their exact closed forms.

In the Markov model each shot has a type (1 = difficult, 2 = easy for two
types). ``k[i, j]`` is the probability to score on a type ``j`` shot and leave a
type ``i`` shot, so column ``j`` sums to the scoring probability on type ``j``.
The run-length survival function is ``mu_n = 1' K^n p_start``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateError, DivergenceError, ValidationError
from .ingest import SurvivalCurve

__all__ = [
    "BernoulliModel",
    "MarkovModel",
    "SpectralFit",
    "Eigen2",
    "bernoulli_survival",
    "bernoulli_mean",
    "markov_survival",
    "survival_values",
    "markov_mean",
    "mean_batch",
    "eigen2",
    "spectral_form",
    "power_gap",
    "spectral_survival",
    "spectral_mean",
    "y_from",
    "y_bounds",
    "exact_curve",
]

# Slack admitted on probability constraints for matrices transcribed with exact zeros.
PROB_TOL = 1e-12


@dataclass(frozen=True)
class BernoulliModel:
    """Independent shots, each scored with probability ``lam``."""

    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ValidationError(f"lambda must lie in [0, 1), got {self.lam}")

    @classmethod
    def from_mean(cls, m: float) -> "BernoulliModel":
        if m < 0:
            raise ValidationError(f"average must be non-negative, got {m}")
        return cls(m / (m + 1.0))


def bernoulli_survival(b: BernoulliModel, n: int) -> float:
    return b.lam ** n


def bernoulli_mean(b: BernoulliModel) -> float:
    if b.lam >= 1.0:
        raise DivergenceError("lambda = 1 gives an infinite average")
    return b.lam / (1.0 - b.lam)


@dataclass(frozen=True)
class MarkovModel:
    """Sub-stochastic scoring matrix ``k`` and initial shot-type distribution.

    For two types use :meth:`two_type`, where ``p0`` is the probability that
    the first shot (the one left by the opponent) is difficult.
    """

    k: np.ndarray = field(repr=True)
    p_start: np.ndarray = field(repr=True)

    def __post_init__(self):
        k = np.array(self.k, dtype=float)
        p = np.array(self.p_start, dtype=float).reshape(-1)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] < 1:
            raise ValidationError(f"k must be a square matrix, got shape {k.shape}")
        if p.size != k.shape[0]:
            raise ValidationError("p_start length must match the matrix size")
        if np.any(k < -PROB_TOL) or np.any(k.sum(axis=0) > 1.0 + PROB_TOL):
            raise ValidationError("k needs non-negative entries and column sums <= 1")
        if np.any(p < -PROB_TOL) or abs(p.sum() - 1.0) > 1e-9:
            raise ValidationError("p_start must be a probability vector")
        k = np.clip(k, 0.0, None)
        p = np.clip(p, 0.0, None)
        if _spectral_radius(k) >= 1.0 - 1e-15:
            raise DivergenceError("spectral radius of k must be < 1 for a finite average")
        k.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "p_start", p)

    @classmethod
    def two_type(cls, k, p0: float) -> "MarkovModel":
        if not 0.0 <= p0 <= 1.0:
            raise ValidationError(f"p0 must lie in [0, 1], got {p0}")
        return cls(k, [p0, 1.0 - p0])

    @property
    def n_types(self) -> int:
        return self.k.shape[0]

    @property
    def p0(self) -> float:
        return float(self.p_start[0])

    @property
    def kappa(self) -> np.ndarray:
        """Scoring probability on each shot type (column sums)."""
        return self.k.sum(axis=0)


def _spectral_radius(k):
    if k.shape == (2, 2):
        return eigen2(k).rho2
    return float(np.max(np.abs(np.linalg.eigvals(k))))


def _survival_iter(mm: MarkovModel):
    """Yield mu_0, mu_1, ... by iterating the row vector ``w_n = 1' K^n``.

    ``w_n[j]`` is the survival probability for a run starting on type ``j``.
    The weighting is anchored on ``w_n[0]`` (valid because ``p_start`` sums to
    1), so a matrix whose rows of survival agree, such as ``lam * I``, gives
    exactly the repeated products ``lam * lam * ...``.
    """
    w = np.ones(mm.n_types)
    p = mm.p_start
    while True:
        yield float(w[0] + (w - w[0]) @ p)
        w = w @ mm.k


def markov_survival(mm: MarkovModel, n: int) -> float:
    """Probability of a run of at least ``n`` points, by iterated products."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    it = _survival_iter(mm)
    for _ in range(n):
        next(it)
    return next(it)


def survival_values(mm: MarkovModel, n_max: int) -> np.ndarray:
    """``mu_0 .. mu_{n_max}`` in one pass."""
    it = _survival_iter(mm)
    return np.array([next(it) for _ in range(n_max + 1)])


def markov_mean(mm: MarkovModel) -> float:
    """Average run length ``1' K (I - K)^-1 p_start``."""
    return float(mean_batch(mm.k, mm.p_start))


def mean_batch(k, p_start):
    """Vectorised :func:`markov_mean` over stacks of matrices ``(..., N, N)``."""
    k = np.asarray(k, dtype=float)
    p = np.broadcast_to(np.asarray(p_start, dtype=float), k.shape[:-1])
    eye = np.eye(k.shape[-1])
    try:
        x = np.linalg.solve(eye - k, p[..., None])[..., 0]
    except np.linalg.LinAlgError:
        raise DivergenceError("I - K is singular") from None
    # 1'K(I-K)^-1 p = 1'(I-K)^-1 p - 1'p
    return x.sum(axis=-1) - p.sum(axis=-1)


class Eigen2(NamedTuple):
    rho1: float
    rho2: float
    v1: np.ndarray
    v2: np.ndarray
    degenerate: bool


def _eigvec(k, rho):
    a = np.array([k[0, 1], rho - k[0, 0]])
    b = np.array([rho - k[1, 1], k[1, 0]])
    v = a if np.abs(a).max() >= np.abs(b).max() else b
    big = np.abs(v).max()
    if big == 0.0:
        return None
    return v / v[np.argmax(np.abs(v))]


def eigen2(k) -> Eigen2:
    """Eigenvalues ``rho1 <= rho2`` and eigenvectors of a non-negative 2x2 matrix.

    Eigenvectors are scaled so that their largest-magnitude component is +1.
    For a repeated eigenvalue ``degenerate`` is set; a scalar matrix gets the
    standard basis and a defective one repeats its single eigenvector.
    """
    k = np.asarray(k, dtype=float)
    if k.shape != (2, 2):
        raise ValidationError(f"eigen2 needs a 2x2 matrix, got {k.shape}")
    if np.any(k < 0):
        raise ValidationError("eigen2 needs non-negative entries")
    s = k[0, 0] + k[1, 1]
    d = k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]
    disc = math.sqrt((k[0, 0] - k[1, 1]) ** 2 + 4.0 * k[0, 1] * k[1, 0])
    rho2 = 0.5 * (s + disc)
    # avoid cancellation in (s - disc) when rho1 << rho2
    rho1 = d / rho2 if rho2 > 0.0 else 0.5 * (s - disc)
    degenerate = disc == 0.0
    if degenerate:
        rho1 = rho2
        v = _eigvec(k, rho1)
        if v is None:
            v1, v2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        else:
            v1 = v2 = v
    else:
        v1, v2 = _eigvec(k, rho1), _eigvec(k, rho2)
    return Eigen2(float(rho1), float(rho2), v1, v2, degenerate)


@dataclass(frozen=True)
class SpectralFit:
    """``mu_n = (1 - y) rho1**n + y rho2**n`` with average ``m``.

    ``sse`` is the least-squares residual when the parameters come from a fit,
    and 0 for an exact decomposition. Fits always have ``rho1 >= 0``; a
    negative ``rho1`` only comes from decomposing a matrix whose shot types
    alternate (``k12 k21 > k11 k22``).
    """

    rho1: float
    rho2: float
    y: float
    m: float
    sse: float = 0.0

    def __post_init__(self):
        if not -self.rho2 <= self.rho1 <= self.rho2 < 1.0 or self.rho2 < 0.0:
            raise ValidationError(
                f"need |rho1| <= rho2 < 1, got rho1={self.rho1}, rho2={self.rho2}"
            )

    def survival(self, n):
        return spectral_survival(self, n)


def power_gap(rho1: float, rho2: float, n):
    """``rho2^n - rho1^n`` without cancellation when the two are close."""
    n = np.asarray(n, dtype=float)
    if 0.0 < rho1 < rho2 and rho2 - rho1 < 0.5 * rho1:
        return -(rho2 ** n) * np.expm1(-n * np.log1p((rho2 - rho1) / rho1))
    return rho2 ** n - rho1 ** n


def spectral_survival(f: SpectralFit, n):
    n = np.asarray(n)
    out = f.rho1 ** n + f.y * power_gap(f.rho1, f.rho2, n)
    return float(out) if out.ndim == 0 else out


def spectral_mean(rho1: float, rho2: float, y: float) -> float:
    return (1.0 - y) * rho1 / (1.0 - rho1) + y * rho2 / (1.0 - rho2)


def y_bounds(rho1: float, rho2: float) -> tuple[float, float]:
    """Range of ``y`` keeping the curve in [0, 1] and non-increasing.

    The decrement ``mu_n - mu_{n+1}`` is tightest at n = 0 for ``y > 1``,
    and ``y < 0`` turns negative once ``rho2**n`` dominates.
    """
    if rho2 <= rho1:
        raise DegenerateError("rho1 == rho2: y is undefined")
    return 0.0, (1.0 - rho1) / (rho2 - rho1)


def y_from(rho1: float, rho2: float, m: float, tol: float = 1e-9) -> float:
    """Mixing scalar ``y`` reproducing the average ``m``.

    The admissible range check applies to ``rho1 >= 0``, the fitted family.
    """
    if rho2 <= rho1:
        raise DegenerateError("rho1 == rho2: fall back to the Bernoulli model")
    r1 = rho1 / (1.0 - rho1)
    # r2 - r1 = (rho2 - rho1) / ((1 - rho1)(1 - rho2)), free of cancellation
    y = (m - r1) * (1.0 - rho1) * (1.0 - rho2) / (rho2 - rho1)
    if rho1 < 0.0:
        return y
    lo, hi = y_bounds(rho1, rho2)
    if not lo - tol <= y <= hi + tol:
        raise ValidationError(
            f"y = {y:.6g} outside admissible [{lo:.6g}, {hi:.6g}] for m = {m}"
        )
    return y


def spectral_form(mm: MarkovModel) -> SpectralFit:
    """Exact ``(rho1, rho2, y, m)`` of a two-type model via its eigenbasis."""
    if mm.n_types != 2:
        raise ValidationError("spectral_form is defined for two shot types")
    e = eigen2(mm.k)
    if e.degenerate:
        raise DegenerateError("repeated eigenvalue: curve is a single geometric sequence")
    basis = np.column_stack([e.v1, e.v2])
    c = np.linalg.solve(basis, mm.p_start)
    y = float(c[1] * e.v2.sum())
    return SpectralFit(e.rho1, e.rho2, y, markov_mean(mm))


def exact_curve(f, cutoff: float = 1e-14, n_cap: int = 1_000_000) -> SurvivalCurve:
    """Closed-form curve truncated once values fall below ``cutoff``.

    ``f`` is a :class:`SpectralFit`, :class:`MarkovModel` or
    :class:`BernoulliModel`. The entry after the last kept value is set to 0
    so the result is a valid :class:`SurvivalCurve`.
    """
    if isinstance(f, BernoulliModel):
        f = SpectralFit(0.0, f.lam, 1.0, bernoulli_mean(f)) if f.lam > 0 else None
        if f is None:
            return SurvivalCurve([1.0, 0.0])
    if isinstance(f, MarkovModel):
        it = _survival_iter(f)
        vals = [next(it)]
        while vals[-1] >= cutoff and len(vals) < n_cap:
            vals.append(next(it))
    else:
        top = max(f.rho2, 1e-300)
        n_end = int(math.ceil(math.log(cutoff) / math.log(top))) + 2 if top > 0 else 1
        vals = list(spectral_survival(f, np.arange(min(n_end, n_cap) + 1)))
        vals[0] = 1.0
    vals = np.minimum.accumulate(np.clip(vals, 0.0, 1.0))
    keep = int(np.flatnonzero(vals >= cutoff)[-1]) + 1
    return SurvivalCurve(np.append(vals[:keep], 0.0))
