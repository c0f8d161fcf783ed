"""Score sheet ingestion: histograms of innings scores and their survival curves.

A score sheet is UTF-8 text with one ``score count`` pair per line. Fields are
separated by whitespace or a comma, ``#`` starts a comment line and blank lines
are skipped. Only complete innings belong in the file; innings cut short by the
end of a match must be removed beforehand.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyInputError, ParseError, ValidationError

__all__ = [
    "ScoreHistogram",
    "SurvivalCurve",
    "parse_histogram",
    "read_histogram",
    "format_histogram",
    "empirical_survival",
    "mean_score",
    "composite",
]

_SPLIT = re.compile(r"[,\s]+")


@dataclass(frozen=True)
class ScoreHistogram:
    """Number of innings for each score (points per inning).

    ``entries`` maps score to count and is stored sorted by score and
    read-only.
    """

    entries: Mapping[int, int]

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("histogram needs at least one inning")
        clean = {}
        for score, count in sorted(self.entries.items()):
            if int(score) != score or int(count) != count:
                raise ValidationError(f"score {score!r} and count {count!r} must be integers")
            if score < 0:
                raise ValidationError(f"negative score {score}")
            if count < 1:
                raise ValidationError(f"score {score} has non-positive count {count}")
            clean[int(score)] = int(count)
        object.__setattr__(self, "entries", MappingProxyType(clean))

    @property
    def total_innings(self) -> int:
        return sum(self.entries.values())

    @property
    def max_score(self) -> int:
        return max(self.entries)

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    def __eq__(self, other):
        if not isinstance(other, ScoreHistogram):
            return NotImplemented
        return dict(self.entries) == dict(other.entries)

    def __hash__(self):
        return hash(tuple(self.entries.items()))


@dataclass(frozen=True)
class SurvivalCurve:
    """Probabilities ``values[n]`` to score at least ``n`` points.

    ``values[0]`` is exactly 1, the sequence never increases and the last
    entry is 0.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValidationError("survival curve needs at least two points")
        if v[0] != 1.0:
            raise ValidationError(f"mu_0 must be exactly 1, got {v[0]!r}")
        if v[-1] != 0.0:
            raise ValidationError("last entry of a survival curve must be 0")
        if np.any(v < 0.0) or np.any(np.diff(v) > 0.0):
            raise ValidationError("survival curve must be non-negative and non-increasing")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def max(self) -> int:
        """Index of the terminal zero (largest index with a positive value, plus one)."""
        return self.values.size - 1

    def __len__(self):
        return self.values.size

    def __getitem__(self, n):
        return self.values[n]


def parse_histogram(text: str) -> ScoreHistogram:
    """Parse a score sheet into a :class:`ScoreHistogram`.

    Duplicate scores are merged by summing their counts.
    """
    counts: Counter[int] = Counter()
    seen = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in _SPLIT.split(line) if f]
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields (score, count), found {len(fields)}", line=lineno)
        try:
            score, count = (int(f.replace("−", "-")) for f in fields)
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", line=lineno) from None
        if score < 0:
            raise ValidationError(f"line {lineno}: negative score {score}")
        if count < 1:
            raise ValidationError(f"line {lineno}: non-positive count {count}")
        counts[score] += count
        seen += 1
    if not seen:
        raise EmptyInputError("no data lines in score sheet")
    return ScoreHistogram(dict(counts))


def read_histogram(path) -> ScoreHistogram:
    return parse_histogram(Path(path).read_text(encoding="utf-8"))


def format_histogram(h: ScoreHistogram) -> str:
    """Render ``h`` in the score sheet format accepted by :func:`parse_histogram`."""
    return "".join(f"{score} {count}\n" for score, count in h.entries.items())


def empirical_survival(h: ScoreHistogram) -> SurvivalCurve:
    """Fraction of innings reaching at least ``n`` points, for n = 0..max_score+1."""
    counts = np.zeros(h.max_score + 2, dtype=np.int64)
    for score, count in h.entries.items():
        counts[score] = count
    # reverse cumulative sum gives innings with score >= n
    at_least = np.cumsum(counts[::-1])[::-1]
    return SurvivalCurve(at_least / h.total_innings)


def mean_score(h: ScoreHistogram) -> float:
    """Average points per inning."""
    return sum(s * c for s, c in h.entries.items()) / h.total_innings


def composite(hs: Iterable[ScoreHistogram]) -> ScoreHistogram:
    """Pool several players' innings into one composite player."""
    hs = list(hs)
    if not hs:
        raise ValidationError("composite needs at least one histogram")
    pooled: Counter[int] = Counter()
    for h in hs:
        pooled.update(h.entries)
    return ScoreHistogram(dict(pooled))
