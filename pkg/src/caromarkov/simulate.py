"""Monte Carlo innings and the opponent-strategy average surface.

Sampling order, per inning: one uniform draw picks the first shot type from
``p_start``; then each shot takes one uniform draw ``u`` against the
cumulative column of ``k`` for the current type. ``u < k[0, j]`` scores and
leaves type 1, ``u < k[0, j] + k[1, j]`` scores and leaves type 2, and so on;
anything else is a miss that ends the inning.

:func:`simulate_histogram` advances a whole shard of innings in lockstep
(every live inning draws once per round, in inning order). Shard ``i`` of a
run with seed ``s`` uses ``numpy.random.default_rng(SeedSequence(s,
spawn_key=(i,)))``, so the result is independent of how many workers run.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import ScoreHistogram
from .models import MarkovModel, eigen2, mean_batch
from .recovery import validate_k_batch

__all__ = [
    "OpponentSurface",
    "simulate_inning",
    "simulate_scores",
    "simulate_histogram",
    "shard_rng",
    "opponent_surface",
    "surface_matrices",
    "check_surface_eigen",
    "SHARD_SIZE",
]

SHARD_SIZE = 1 << 16
DEFAULT_SURFACE_GRID = 161


def shard_rng(seed: int, shard: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard,)))


def _draw_type(cum, u):
    # first index whose cumulative probability exceeds u
    return np.minimum(np.searchsorted(cum, u, side="right"), cum.size - 1)


def simulate_inning(mm: MarkovModel, rng: np.random.Generator) -> int:
    """Run length of one inning."""
    cum_start = np.cumsum(mm.p_start)
    cum_k = np.cumsum(mm.k, axis=0)
    state = int(_draw_type(cum_start, rng.random()))
    score = 0
    while True:
        u = rng.random()
        nxt = int(np.searchsorted(cum_k[:, state], u, side="right"))
        if nxt >= mm.n_types:
            return score
        score += 1
        state = nxt


def simulate_scores(mm: MarkovModel, innings: int, rng: np.random.Generator) -> np.ndarray:
    """Run lengths of ``innings`` innings advanced in lockstep."""
    n = mm.n_types
    cum_start = np.cumsum(mm.p_start)
    cum_k = np.cumsum(mm.k, axis=0)
    state = _draw_type(cum_start, rng.random(innings))
    scores = np.zeros(innings, dtype=np.int64)
    live = np.arange(innings)
    while live.size:
        u = rng.random(live.size)
        col = cum_k[:, state]  # (n, live)
        nxt = (u[None, :] >= col).sum(axis=0)
        hit = nxt < n
        live, state = live[hit], nxt[hit]
        scores[live] += 1
    return scores


def _thread_count(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CAROMARKOV_THREADS")
    return max(1, int(env)) if env else 1


def simulate_histogram(
    mm: MarkovModel, innings: int, seed: int = 0, workers: int | None = None
) -> ScoreHistogram:
    """Histogram of ``innings`` simulated innings; deterministic for a given seed.

    ``workers`` (default: ``$CAROMARKOV_THREADS`` or 1) only changes speed.
    """
    if innings < 1:
        raise ValidationError("innings must be >= 1")
    sizes = [SHARD_SIZE] * (innings // SHARD_SIZE)
    if innings % SHARD_SIZE:
        sizes.append(innings % SHARD_SIZE)

    def run(i):
        return np.bincount(simulate_scores(mm, sizes[i], shard_rng(seed, i)))

    nworkers = _thread_count(workers)
    if nworkers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(nworkers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    total = np.zeros(max(p.size for p in parts), dtype=np.int64)
    for p in parts:
        total[: p.size] += p
    return ScoreHistogram({int(s): int(c) for s, c in enumerate(total) if c})


@dataclass(frozen=True)
class OpponentSurface:
    """Average ``m`` over a grid of ``(dk1, dk2) = (k21 - k11, k22 - k12)``.

    ``m[i, j]`` belongs to ``(dk1[i], dk2[j])`` and is NaN where the
    reconstructed matrix is infeasible.
    """

    rho1: float
    rho2: float
    p0: float
    dk1: np.ndarray
    dk2: np.ndarray
    m: np.ndarray
    k: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return ~np.isnan(self.m)

    def cell(self, dk1: float, dk2: float):
        """``(m, K)`` at the grid node nearest to ``(dk1, dk2)``; ``m`` is None if infeasible."""
        i = int(np.argmin(np.abs(self.dk1 - dk1)))
        j = int(np.argmin(np.abs(self.dk2 - dk2)))
        m = self.m[i, j]
        return (None if np.isnan(m) else float(m)), self.k[i, j]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dk1", "dk2", "m", "feasible"])
        for i, a in enumerate(self.dk1):
            for j, b in enumerate(self.dk2):
                m = self.m[i, j]
                ok = not np.isnan(m)
                w.writerow([_fmt(a), _fmt(b), repr(float(m)) if ok else "", int(ok)])
        return buf.getvalue()


def _fmt(x):
    return f"{x:.10g}"


def surface_matrices(rho1: float, rho2: float, dk1, dk2, tol: float = 1e-12):
    """Matrices with eigenvalues ``rho1, rho2`` for each ``(dk1, dk2)`` pair.

    Returns ``(k, ok)`` where ``k`` has shape ``dk1.shape + (2, 2)``. Cells where
    ``dk1 + dk2 = 0`` leave ``k12`` undetermined (a whole line of matrices, or
    none) and are reported as not ok, like cells failing the constraints.
    """
    dk1, dk2 = np.broadcast_arrays(np.asarray(dk1, float), np.asarray(dk2, float))
    s, d = rho1 + rho2, rho1 * rho2
    denom = dk1 + dk2
    single = np.abs(denom) > tol
    with np.errstate(divide="ignore", invalid="ignore"):
        k12 = np.where(single, ((s - dk2) * dk2 - d) / np.where(single, denom, 1.0), np.nan)
    k11 = s - dk2 - k12
    k21 = k11 + dk1
    k22 = k12 + dk2
    k = np.stack([np.stack([k11, k12], -1), np.stack([k21, k22], -1)], -2)
    ok = single & validate_k_batch(np.nan_to_num(k, nan=-1.0))
    return k, ok


def opponent_surface(
    rho1: float,
    rho2: float,
    p0: float,
    dk1_range=(-1.0, 1.0),
    dk2_range=(-1.0, 1.0),
    grid: int = DEFAULT_SURFACE_GRID,
) -> OpponentSurface:
    """Average run length over the ``(dk1, dk2)`` plane at fixed eigenvalues."""
    if not 0.0 < rho1 < rho2 < 1.0:
        raise ValidationError("need 0 < rho1 < rho2 < 1")
    if not 0.0 <= p0 <= 1.0:
        raise ValidationError("p0 must lie in [0, 1]")
    if grid < 2:
        raise ValidationError("grid needs at least 2 points per axis")
    a = np.linspace(*dk1_range, grid)
    b = np.linspace(*dk2_range, grid)
    k, ok = surface_matrices(rho1, rho2, a[:, None], b[None, :])
    m = np.full(ok.shape, np.nan)
    if ok.any():
        m[ok] = mean_batch(k[ok], [p0, 1.0 - p0])
    return OpponentSurface(rho1, rho2, p0, a, b, m, k)


def check_surface_eigen(surface: OpponentSurface, tol: float = 1e-10) -> bool:
    """True when every feasible cell's matrix has the surface's eigenvalues."""
    for kk in surface.k[surface.feasible]:
        e = eigen2(np.clip(kk, 0.0, None))
        if abs(e.rho1 - surface.rho1) > tol or abs(e.rho2 - surface.rho2) > tol:
            return False
    return True
