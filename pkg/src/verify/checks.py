# src/verify/checks.py
"""
Verification of designs, large sets and uniform subsets, plus the side
conditions of the framework (constants in V, symmetries of V).

Failures are report contents, never exceptions. A report carries only the
first counterexample found, in colex order.
"""
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.lattice.lattices import rational_rank
from src.setsys.colex import iter_colex, rank_colex, to_one_based, unrank_colex
from src.setsys.divisibility import lambda_of
from src.setsys.incidence import IncidenceSystem, ParameterError
from src.verify.design_files import Block, Design, LargeSetPartition, check_block


@dataclass(frozen=True)
class VerificationReport:
    kind: str
    passed: bool
    counterexample: Optional[dict] = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed != (self.counterexample is None):
            raise ValueError("a report passes exactly when it has no counterexample")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "pass": self.passed}
        d.update(self.details)
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        return d


def coverage_counts(blocks: Sequence[Block], n: int, k: int, t: int) -> Dict[Block, int]:
    """Count of blocks containing each t-set, every t-set present, keys in colex order."""
    counts = np.zeros(comb(n, t), dtype=np.int64)
    for b in blocks:
        check_block(b, n, k)
        for a in combinations(b, t):
            counts[rank_colex(a)] += 1
    return {a: int(c) for a, c in zip(iter_colex(n, t), counts)}


def _first_duplicate(blocks: Sequence[Block]) -> Optional[Block]:
    seen = set()
    for b in blocks:
        if b in seen:
            return b
        seen.add(b)
    return None


def _design_counterexample(design: Design) -> Optional[dict]:
    dup = _first_duplicate(design.blocks)
    if dup is not None:
        return {"type": "duplicate_block", "block": to_one_based(dup)}
    counts = coverage_counts(design.blocks, design.n, design.k, design.t)
    for a, c in counts.items():
        if c != design.lam:
            return {"type": "wrong_count", "tset": to_one_based(a), "count": c, "expected": design.lam}
    return None


def verify_design(design: Design) -> VerificationReport:
    cx = _design_counterexample(design)
    details = {
        "params": {"n": design.n, "k": design.k, "t": design.t, "lambda": design.lam},
        "num_blocks": len(design.blocks),
    }
    return VerificationReport("design", cx is None, cx, details)


def verify_large_set(ls: LargeSetPartition) -> VerificationReport:
    p = ls.params
    lam = lambda_of(p)
    details = {"params": p.to_dict(), "lambda": lam, "num_parts": len(ls.parts)}

    def fail(cx: dict) -> VerificationReport:
        return VerificationReport("largeset", False, cx, details)

    if len(ls.parts) != p.l:
        return fail({"type": "wrong_part_count", "parts": len(ls.parts), "expected": p.l})

    owner: Dict[Block, int] = {}
    for i, part in enumerate(ls.parts):
        for b in part:
            if b in owner:
                kind = "duplicate_block" if owner[b] == i else "overlap"
                return fail({"type": kind, "block": to_one_based(b), "parts": [owner[b] + 1, i + 1]})
            owner[b] = i

    for b in iter_colex(p.n, p.k):
        if b not in owner:
            return fail({"type": "missing_block", "block": to_one_based(b)})

    for i, part in enumerate(ls.parts):
        cx = _design_counterexample(Design(p.n, p.k, p.t, lam, tuple(part)))
        if cx is not None:
            return fail({"type": "part_not_design", "part": i + 1, "detail": cx})

    return VerificationReport("largeset", True, None, details)


def design_rows(blocks: Sequence[Block]) -> List[int]:
    """Row indices of blocks in a design incidence system."""
    return [rank_colex(b) for b in blocks]


def verify_uniform_subset(rows: Sequence[int], sys: IncidenceSystem) -> VerificationReport:
    """|B| * sum_{b in T} phi(b) == |T| * sum_{b in B} phi(b), in Python ints."""
    rows = list(rows)
    if not rows:
        raise ValueError("uniform check needs a non-empty subset")
    if len(set(rows)) != len(rows):
        raise ValueError("subset rows must be distinct")
    bad = [r for r in rows if not 0 <= r < sys.num_blocks]
    if bad:
        raise ValueError(f"row {bad[0]} outside 0..{sys.num_blocks - 1}")

    M = sys.matrix
    subset_sum = M[rows].astype(object).sum(axis=0)
    total = sys.column_sums().astype(object)
    lhs = subset_sum * sys.num_blocks
    rhs = total * len(rows)
    details = {"system": sys.describe(), "subset_size": len(rows)}
    for c in range(sys.num_columns):
        if lhs[c] != rhs[c]:
            cx = {
                "type": "nonuniform_column",
                "column": sys.column_label(c),
                "subset_sum": int(subset_sum[c]),
                "total_sum": int(total[c]),
            }
            return VerificationReport("uniform", False, cx, details)
    return VerificationReport("uniform", True, None, details)


def check_constants_in_V(sys: IncidenceSystem) -> bool:
    """All-ones over B lies in the column span of the system (over Q)."""
    ones = np.ones((sys.num_blocks, 1), dtype=np.int64)
    return rational_rank(np.hstack([sys.matrix, ones])) == rational_rank(sys.matrix)


def _check_point_permutation(perm: Sequence[int], n: int):
    if sorted(perm) != list(range(n)):
        raise ParameterError(f"{list(perm)} is not a permutation of 0..{n - 1}")


def induced_permutation(perm: Sequence[int], n: int, size: int) -> np.ndarray:
    """Index map r -> rank(perm(unrank(r))) on the size-subsets of range(n)."""
    _check_point_permutation(perm, n)
    out = np.empty(comb(n, size), dtype=np.int64)
    for r in range(len(out)):
        image = sorted(perm[x] for x in unrank_colex(r, n, size))
        out[r] = rank_colex(image)
    return out


def check_symmetry_action(perm: Sequence[int], sys: IncidenceSystem) -> bool:
    """True iff the induced permutation of B sends each column phi_a to phi_{perm(a)}."""
    if not sys.is_design:
        raise ParameterError("point permutations act only on design systems; use check_block_permutation")
    bperm = induced_permutation(perm, sys.n, sys.k)
    aperm = induced_permutation(perm, sys.n, sys.t)
    return bool(np.array_equal(sys.matrix[np.ix_(bperm, aperm)], sys.matrix))


def check_block_permutation(block_perm: Sequence[int], sys: IncidenceSystem) -> bool:
    """True iff permuting B maps V = span(columns) onto itself (rank test over Q)."""
    block_perm = list(block_perm)
    if sorted(block_perm) != list(range(sys.num_blocks)):
        raise ParameterError(f"not a permutation of the {sys.num_blocks} rows")
    moved = sys.matrix[block_perm]
    return rational_rank(np.hstack([sys.matrix, moved])) == rational_rank(sys.matrix)


def transitivity_witness(b1: Sequence[int], b2: Sequence[int], n: int) -> Tuple[int, ...]:
    """A permutation of range(n) sending the sorted set b1 onto b2 (same size)."""
    b1, b2 = sorted(b1), sorted(b2)
    if len(b1) != len(b2):
        raise ParameterError("blocks have different sizes")
    rest1 = [x for x in range(n) if x not in set(b1)]
    rest2 = [x for x in range(n) if x not in set(b2)]
    perm = [0] * n
    for src, dst in zip(b1 + rest1, b2 + rest2):
        perm[src] = dst
    return tuple(perm)
