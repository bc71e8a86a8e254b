"""String similarity helpers used by heuristic scoring and baselines."""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit costs for insert, delete, and substitute."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def name_similarity(a: str, b: str) -> float:
    """Normalized edit similarity between two identifiers, in [0, 1].

    Comparison is case-insensitive: identifiers that differ only in case
    score 1.0.
    """
    a = a.lower()
    b = b.lower()
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest
