"""Reconstruct transition matrices from the observable triple (rho1, rho2, m).

Five unknowns (four entries of K and p0) face three observables, so K is only
known up to two free parameters, here ``k12`` and ``p0``. With trace
``s = rho1 + rho2``, determinant ``d = rho1 rho2`` and
``D = det(I - K) = (1 - rho1)(1 - rho2)``, the average fixes

    (m + 1) D = p0 (1 - k22 + k21) + (1 - p0) (1 + k12 - k11)

Substituting ``k22 = s - k11`` and ``k21 = (k11 k22 - d) / k12`` leaves a
quadratic in ``k11``:

    -p0 k11^2 + [p0 (k12 + s) - (1 - p0) k12] k11
        + p0 k12 (1 - s) - p0 d + (1 - p0) k12 (1 + k12) - (m + 1) D k12 = 0
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InfeasibleError, ValidationError
from .models import PROB_TOL, y_from

__all__ = [
    "IntervalMatrix",
    "validate_k",
    "validate_k_batch",
    "recover_k",
    "recover_batch",
    "feasible_region",
    "parameter_count",
    "DEFAULT_GRID",
]

DEFAULT_GRID = 512
BISECT_STEPS = 50


def validate_k_batch(k, tol: float = PROB_TOL) -> np.ndarray:
    """Vectorised :func:`validate_k` over stacks ``(..., 2, 2)``; NaN entries fail."""
    k = np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore"):
        entries = (k > -tol) & (k < 1.0 + tol)
        cols = k.sum(axis=-2) < 1.0 + tol
    return entries.all(axis=(-2, -1)) & cols.all(axis=-1)


def validate_k(k, tol: float = PROB_TOL) -> bool:
    """``0 < k_ij < 1`` and ``k_1j + k_2j < 1``, closed by ``tol``.

    The closure lets transcribed matrices with exact zeros through.
    """
    k = np.asarray(k, dtype=float)
    if k.shape != (2, 2):
        return False
    return bool(validate_k_batch(k, tol))


def _triple_check(rho1, rho2, m):
    if not 0.0 < rho1 < rho2 < 1.0:
        raise ValidationError(f"need 0 < rho1 < rho2 < 1, got {rho1}, {rho2}")
    if m <= 0.0:
        raise ValidationError(f"average must be positive, got {m}")
    y_from(rho1, rho2, m)


def recover_batch(rho1, rho2, m, k12, p0):
    """Both candidate matrices for every ``(k12, p0)`` pair.

    Returns an array of shape ``broadcast(k12, p0).shape + (2, 2, 2)``: axis -3
    holds the smaller and larger ``k11`` root. Missing roots are NaN. No
    constraint filtering is applied.

    At ``k12 = 0`` the matrix is triangular, ``{k11, k22} = {rho1, rho2}`` and
    ``k21`` follows from the average. If also ``p0 = 0``, ``k21`` is free when
    ``m = k22 / (1 - k22)``; that family is represented by ``k21 = 0``.
    """
    k12, p0 = np.broadcast_arrays(np.asarray(k12, float), np.asarray(p0, float))
    s, d = rho1 + rho2, rho1 * rho2
    big_d = (1.0 - rho1) * (1.0 - rho2)
    mD = (m + 1.0) * big_d

    a = -p0
    b = p0 * (k12 + s) - (1.0 - p0) * k12
    c = p0 * k12 * (1.0 - s) - p0 * d + (1.0 - p0) * k12 * (1.0 + k12) - mD * k12
    with np.errstate(invalid="ignore", divide="ignore"):
        sq = np.sqrt(b * b - 4.0 * a * c)  # NaN when the roots are complex
        q = -0.5 * (b + np.copysign(sq, b))
        r_a = q / np.where(a != 0.0, a, np.nan)
        # q == 0 only for the double root 0 (a != 0) or a degenerate line (a == 0)
        r_b = np.where(q != 0.0, c / np.where(q != 0.0, q, 1.0), np.where(a != 0.0, 0.0, np.nan))
    both = ~np.isnan(r_a) & ~np.isnan(r_b)
    # a lone root (p0 = 0 makes the equation linear) goes in the first slot
    roots = np.stack([np.fmin(r_a, r_b), np.where(both, np.fmax(r_a, r_b), np.nan)], axis=-1)

    k11 = roots
    k22 = s - k11
    kk12 = k12[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        k21 = (k11 * k22 - d) / kk12

    tri = k12 == 0.0
    if np.any(tri):
        t11 = np.array([rho1, rho2])
        t22 = np.array([rho2, rho1])
        pp = p0[tri][:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            t21 = (mD - (1.0 - pp) * (1.0 - t11)) / pp - (1.0 - t22)
        consistent = np.abs(m - t22 / (1.0 - t22)) <= 1e-9 * (1.0 + m)
        t21 = np.where(pp > 0.0, t21, np.where(consistent, 0.0, np.nan))
        k11[tri] = t11
        k22[tri] = t22
        k21[tri] = t21

    k12_b = np.broadcast_to(kk12, k11.shape)
    return np.stack([np.stack([k11, k12_b], -1), np.stack([k21, k22], -1)], -2)


def recover_k(rho1, rho2, m, k12, p0, tol: float = PROB_TOL) -> list[np.ndarray]:
    """Feasible matrices with eigenvalues ``rho1, rho2`` and average ``m``.

    Both roots of the ``k11`` quadratic are tried; every one passing
    :func:`validate_k` is returned. An empty list means infeasible.
    """
    _triple_check(rho1, rho2, m)
    if not 0.0 <= k12 < 1.0:
        raise ValidationError(f"k12 must lie in [0, 1), got {k12}")
    if not 0.0 <= p0 <= 1.0:
        raise ValidationError(f"p0 must lie in [0, 1], got {p0}")
    cands = recover_batch(rho1, rho2, m, k12, p0)
    out = []
    for k in cands:
        if validate_k(k, tol) and not any(np.allclose(k, o, rtol=0, atol=1e-15) for o in out):
            out.append(k.copy())
    return out


@dataclass(frozen=True)
class IntervalMatrix:
    """Entry-wise bounds of K over the feasible ``(k12, p0)`` region."""

    lo: np.ndarray
    hi: np.ndarray
    n_feasible: int
    p0_policy: Union[float, str]
    triple: tuple = ()

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def halfwidth(self):
        return 0.5 * (self.hi - self.lo)

    def percent(self) -> list[list[str]]:
        """Entries as ``'40.9% ± 0.2%'`` (one decimal)."""
        c, h = 100.0 * self.center, 100.0 * self.halfwidth
        return [[f"{c[i, j]:.1f}% ± {h[i, j]:.1f}%" for j in range(2)] for i in range(2)]

    def text(self) -> str:
        rows = self.percent()
        width = max(len(x) for r in rows for x in r)
        return "\n".join("  ".join(x.rjust(width) for x in r) for r in rows) + "\n"

    def contains(self, k, tol: float = 0.0) -> bool:
        k = np.asarray(k, dtype=float)
        return bool(np.all(k >= self.lo - tol) and np.all(k <= self.hi + tol))

    def to_dict(self) -> dict:
        return {
            "rho1": self.triple[0] if self.triple else None,
            "rho2": self.triple[1] if self.triple else None,
            "m": self.triple[2] if self.triple else None,
            "p0_policy": self.p0_policy,
            "n_feasible": self.n_feasible,
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "percent": self.percent(),
        }


def _feasible(cands, difficult_first, tol):
    ok = validate_k_batch(cands, tol)
    if difficult_first:
        col = cands.sum(axis=-2)
        with np.errstate(invalid="ignore"):
            ok &= col[..., 0] <= col[..., 1] + tol
    return ok


def feasible_region(
    rho1: float,
    rho2: float,
    m: float,
    p0: float | None = 0.5,
    grid: int = DEFAULT_GRID,
    difficult_first: bool = True,
    tol: float = PROB_TOL,
) -> IntervalMatrix:
    """Sweep ``k12`` (and ``p0`` when ``p0`` is None) and bound every entry of K.

    ``k12`` runs over ``i / grid`` for ``i = 0 .. grid - 1``; a swept ``p0``
    over ``j / grid`` for ``j = 0 .. grid``. Doubling ``grid`` therefore only
    adds nodes. Each feasible/infeasible transition along ``k12`` is then
    bisected once to pull the bounds onto the region's edge.

    ``difficult_first`` keeps type 1 as the harder shot (``kappa1 <= kappa2``);
    without it every matrix also appears with its types relabelled.
    """
    _triple_check(rho1, rho2, m)
    if grid < 100:
        raise ValidationError("grid needs at least 100 points per swept axis")
    if p0 is not None and not 0.0 <= p0 <= 1.0:
        raise ValidationError(f"p0 must lie in [0, 1], got {p0}")
    k12 = np.arange(grid) / grid
    p0s = np.array([p0]) if p0 is not None else np.arange(grid + 1) / grid

    cands = recover_batch(rho1, rho2, m, k12[None, :], p0s[:, None])  # (P, G, 2, 2, 2)
    ok = _feasible(cands, difficult_first, tol)  # (P, G, 2)
    found = [cands[ok]]

    # bisect each feasible/infeasible change along k12, per p0 row and root slot
    pi, gi, si = np.nonzero(ok[:, :-1, :] != ok[:, 1:, :])
    if pi.size:
        left_ok = ok[pi, gi, si]
        good = np.where(left_ok, k12[gi], k12[gi + 1])
        bad = np.where(left_ok, k12[gi + 1], k12[gi])
        pp = p0s[pi]
        for _ in range(BISECT_STEPS):
            mid = 0.5 * (good + bad)
            c = recover_batch(rho1, rho2, m, mid, pp)[np.arange(mid.size), si]
            mid_ok = _feasible(c, difficult_first, tol)
            good = np.where(mid_ok, mid, good)
            bad = np.where(mid_ok, bad, mid)
        edge = recover_batch(rho1, rho2, m, good, pp)[np.arange(good.size), si]
        found.append(edge[_feasible(edge, difficult_first, tol)])

    pts = np.concatenate(found)
    n_feasible = int(ok.sum())
    triple = (rho1, rho2, m)
    if pts.shape[0] == 0:
        raise InfeasibleError(f"no feasible matrix for rho1={rho1}, rho2={rho2}, m={m}", triple=triple)
    return IntervalMatrix(
        lo=pts.min(axis=0),
        hi=pts.max(axis=0),
        n_feasible=n_feasible,
        p0_policy=float(p0) if p0 is not None else "swept",
        triple=triple,
    )


def parameter_count(n_types: int) -> tuple[int, int, int]:
    """(unknowns, relations, free parameters) for ``n_types`` shot types.

    Unknowns are the N^2 matrix entries plus N - 1 start probabilities; the
    relations are the N eigenvalues and the average. N = 1 returns -1 free
    parameters: the Bernoulli case is overdetermined.
    """
    if int(n_types) != n_types or n_types < 1:
        raise ValidationError(f"number of shot types must be a positive integer, got {n_types}")
    n = int(n_types)
    return n * n + n - 1, n + 1, n * n - 2
