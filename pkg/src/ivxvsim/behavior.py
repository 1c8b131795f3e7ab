"""Voter action patterns and the distributions they are sampled from.

A pattern is a non-empty string over {V, C}: V casts a ballot, C checks
the latest one against the voter's intent.  Patterns must start with V,
since a check needs a ballot to look at.

The shipped default table (data/estonia_aggregate.csv) encodes observed
aggregate voter behavior: 94% vote once and do nothing else, 1.5% vote
twice, and checking is rare (4% of voters end with a check).  Any other
table can be loaded from CSV with header `pattern,probability`.
"""

from __future__ import annotations

import csv
import io
from importlib import resources

PATTERN_ALPHABET = frozenset("VC")
DEFAULT_DISTRIBUTION_RESOURCE = "data/estonia_aggregate.csv"

# Tolerance on the probability-mass total.
_SUM_TOL = 1e-9


class BadDistribution(ValueError):
    """Distribution table fails validation."""


def validate_pattern(pattern: str) -> str:
    if not isinstance(pattern, str) or not pattern:
        raise BadDistribution("pattern must be a non-empty string")
    if set(pattern) - PATTERN_ALPHABET:
        raise BadDistribution(f"pattern {pattern!r} has characters outside V/C")
    if pattern[0] != "V":
        raise BadDistribution(f"pattern {pattern!r} must start with V")
    return pattern


class BehaviorDistribution:
    """Immutable probability table over voter action patterns.

    Iteration and sampling follow the table's insertion order, so a
    fixed seed reproduces the same sample sequence.
    """

    def __init__(self, entries):
        pairs = list(entries.items()) if hasattr(entries, "items") else list(entries)
        table: dict[str, float] = {}
        for pattern, prob in pairs:
            validate_pattern(pattern)
            if pattern in table:
                raise BadDistribution(f"duplicate pattern {pattern!r}")
            prob = float(prob)
            if not 0.0 <= prob <= 1.0:
                raise BadDistribution(f"probability {prob!r} for {pattern!r} out of [0, 1]")
            table[pattern] = prob
        if not table:
            raise BadDistribution("empty distribution")
        total = sum(table.values())
        if abs(total - 1.0) > _SUM_TOL:
            raise BadDistribution(f"probabilities sum to {total!r}, not 1")
        self._table = table

    def __getitem__(self, pattern: str) -> float:
        return self._table[pattern]

    def __contains__(self, pattern: str) -> bool:
        return pattern in self._table

    def __len__(self) -> int:
        return len(self._table)

    def items(self):
        return self._table.items()

    def support(self) -> tuple[str, ...]:
        return tuple(self._table)

    def max_len(self) -> int:
        return max(len(p) for p in self._table)

    def sample(self, rng) -> str:
        x = rng.random()
        acc = 0.0
        last = None
        for pattern, prob in self._table.items():
            acc += prob
            last = pattern
            if x < acc:
                return pattern
        return last  # rounding fallthrough lands on the final entry

    def __repr__(self):
        return f"BehaviorDistribution({self._table!r})"


def _parse_rows(rows, origin: str) -> BehaviorDistribution:
    pairs = []
    for lineno, row in enumerate(rows, start=2):
        if row.get("pattern") is None or row.get("probability") is None:
            raise BadDistribution(f"{origin}:{lineno}: need columns pattern,probability")
        try:
            prob = float(row["probability"])
        except ValueError:
            raise BadDistribution(
                f"{origin}:{lineno}: probability {row['probability']!r} is not a number"
            ) from None
        pairs.append((row["pattern"].strip(), prob))
    return BehaviorDistribution(pairs)


def parse_distribution_csv(text: str, origin: str = "<csv>") -> BehaviorDistribution:
    return _parse_rows(csv.DictReader(io.StringIO(text)), origin)


def load_distribution(source) -> BehaviorDistribution:
    """Build a distribution from a mapping, an iterable of pairs, or a
    CSV file path (header `pattern,probability`)."""
    if isinstance(source, BehaviorDistribution):
        return source
    if hasattr(source, "items") or isinstance(source, (list, tuple)):
        return BehaviorDistribution(source)
    with open(source, newline="") as fh:
        return _parse_rows(csv.DictReader(fh), str(source))


def default_distribution() -> BehaviorDistribution:
    text = resources.files(__package__).joinpath(DEFAULT_DISTRIBUTION_RESOURCE).read_text()
    return parse_distribution_csv(text, DEFAULT_DISTRIBUTION_RESOURCE)
