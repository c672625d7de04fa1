# src/setsys/colex.py
"""
Colexicographic ranking of k-subsets.

Internally sets are sorted tuples of 0-based elements; the colex rank of
c_0 < c_1 < ... < c_{k-1} is sum_i C(c_i, i+1). The first sets in colex
order for k=2 are {0,1},{0,2},{1,2},{0,3},...
"""
from math import comb
from typing import Iterator, Sequence, Tuple


class RankOutOfRange(IndexError):
    pass


def rank_colex(kset: Sequence[int]) -> int:
    """Rank of a sorted 0-based k-set."""
    return sum(comb(c, i + 1) for i, c in enumerate(kset))


def unrank_colex(r: int, n: int, k: int) -> Tuple[int, ...]:
    """Inverse of rank_colex over {0, ..., C(n,k)-1}."""
    total = comb(n, k)
    if not 0 <= r < total:
        raise RankOutOfRange(f"rank {r} outside 0..{total - 1} for n={n}, k={k}")
    out = []
    c = n - 1
    for i in range(k, 0, -1):
        # largest c with C(c, i) <= r
        while comb(c, i) > r:
            c -= 1
        out.append(c)
        r -= comb(c, i)
        c -= 1
    return tuple(reversed(out))


def iter_colex(n: int, k: int) -> Iterator[Tuple[int, ...]]:
    """All k-subsets of range(n) in colex order."""
    if k == 0:
        yield ()
        return
    # colex: grouped by the largest element, smaller groups first
    for top in range(k - 1, n):
        for head in iter_colex(top, k - 1):
            yield head + (top,)


def to_one_based(kset: Sequence[int]) -> list:
    return [c + 1 for c in kset]


def from_one_based(kset: Sequence[int]) -> Tuple[int, ...]:
    return tuple(c - 1 for c in kset)
