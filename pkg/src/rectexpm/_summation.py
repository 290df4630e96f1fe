"""Deterministic pairwise reduction.

The reduction tree depends only on the number of terms, never on the order in
which they were produced, so any parallel schedule gives bitwise-identical
sums.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

T = TypeVar("T")


def pairwise_sum(terms: Sequence[T]) -> T:
    if not terms:
        raise ValueError("cannot sum an empty sequence")
    level = list(terms)
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]
