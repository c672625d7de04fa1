# src/lattice/lattices.py
"""
Integer lattices spanned by incidence rows.

A lattice is stored as its canonical Hermite basis, so two lattices are equal
iff their bases are equal. Everything here is exact: Python ints and Fractions.

- lattice_from_generators / coordinates / membership
- lattice_determinant, product_lattice_determinant, dual_basis, product_dual_point
- divisibility_parameter (c1), check_main_divisibility, minimal_uniform_size_bruteforce
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import List, Optional, Sequence

import numpy as np

from src.lattice.normal_forms import (
    as_object_matrix,
    hermite_normal_form,
    rational_inverse,
    rational_rank,
    solve_rational,
)
from src.setsys.incidence import IncidenceSystem, build_incidence


class NotFullRank(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    rows: np.ndarray   # Hermite rows, object dtype
    dim: int

    @property
    def rank(self) -> int:
        return self.rows.shape[0]

    @property
    def is_full_rank(self) -> bool:
        return self.rank == self.dim

    def pivots(self) -> List[int]:
        return [next(c for c in range(self.dim) if row[c] != 0) for row in self.rows]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatticeBasis):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.rows, other.rows)

    __hash__ = None

    def to_dict(self) -> dict:
        return {"dim": self.dim, "rank": self.rank, "basis": self.rows.tolist()}


def lattice_from_generators(G, dim: Optional[int] = None) -> LatticeBasis:
    M = as_object_matrix(G)
    if dim is None:
        dim = M.shape[1]
    elif M.size and M.shape[1] != dim:
        raise DimensionMismatch(f"generators have {M.shape[1]} columns, expected {dim}")
    H = hermite_normal_form(M) if M.size else np.zeros((0, dim), dtype=object)
    return LatticeBasis(H, dim)


def coordinates(L: LatticeBasis, v: Sequence) -> Optional[List[Fraction]]:
    """Rational x with x . rows == v, or None when v is outside the rational span."""
    if len(v) != L.dim:
        raise DimensionMismatch(f"vector has length {len(v)}, lattice lives in dimension {L.dim}")
    return solve_rational(L.rows.T, v)


def membership(L: LatticeBasis, v: Sequence) -> bool:
    x = coordinates(L, v)
    return x is not None and all(c.denominator == 1 for c in x)


def require_full_rank(L: LatticeBasis):
    if not L.is_full_rank:
        raise NotFullRank(f"lattice has rank {L.rank} in dimension {L.dim}")


def lattice_determinant(L: LatticeBasis) -> int:
    require_full_rank(L)
    det = 1
    for i, p in enumerate(L.pivots()):
        det *= L.rows[i, p]
    return abs(det)


def product_lattice_determinant(L: LatticeBasis, l: int) -> int:
    """det of the (l-1)-fold product lattice."""
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    return lattice_determinant(L) ** (l - 1)


def dual_basis(L: LatticeBasis) -> np.ndarray:
    """Rows (B^-1)^T: <dual_i, primal_j> = [i == j]."""
    require_full_rank(L)
    return rational_inverse(L.rows).T.copy()


def dual_determinant(L: LatticeBasis) -> Fraction:
    return Fraction(1, lattice_determinant(L))


def product_dual_point(L: LatticeBasis, coeffs) -> List[Fraction]:
    """Point of the product dual lattice, one integer coefficient row per bin (bin-major)."""
    D = dual_basis(L)
    C = as_object_matrix(coeffs)
    if C.shape[1] != L.dim:
        raise DimensionMismatch(f"coefficient rows have length {C.shape[1]}, expected {L.dim}")
    out: List[Fraction] = []
    for row in C:
        out.extend(Fraction(x) for x in row.dot(D))
    return out


@lru_cache(maxsize=64)
def design_lattice(n: int, k: int, t: int) -> LatticeBasis:
    sys = build_incidence(n, k, t)
    return lattice_from_generators(sys.matrix)


def system_lattice(sys: IncidenceSystem) -> LatticeBasis:
    if sys.is_design:
        return design_lattice(sys.n, sys.k, sys.t)
    return lattice_from_generators(sys.matrix)


def sum_vector(sys: IncidenceSystem) -> List[int]:
    return [int(x) for x in sys.column_sums()]


@lru_cache(maxsize=64)
def _design_sum_coordinates(n: int, k: int, t: int) -> tuple:
    sys = build_incidence(n, k, t)
    return tuple(_sum_coordinates_uncached(sys, design_lattice(n, k, t)))


def _sum_coordinates_uncached(sys: IncidenceSystem, L: LatticeBasis) -> List[Fraction]:
    require_full_rank(L)
    x = coordinates(L, sum_vector(sys))
    # the sum of the generators is always in their lattice
    assert x is not None and all(c.denominator == 1 for c in x)
    return x


def sum_coordinates(sys: IncidenceSystem) -> List[Fraction]:
    """Integer coordinates of sum_b phi(b) in the lattice basis; NotFullRank otherwise."""
    if sys.is_design:
        return list(_design_sum_coordinates(sys.n, sys.k, sys.t))
    return _sum_coordinates_uncached(sys, system_lattice(sys))


def divisibility_parameter(sys: IncidenceSystem) -> int:
    """Minimal c1 >= 1 with (c1/|B|) sum_b phi(b) in L(phi)."""
    y = sum_coordinates(sys)
    B = sys.num_blocks
    return lcm(*(Fraction(c, B).denominator for c in y)) if y else 1


def check_main_divisibility(sys: IncidenceSystem, l: int) -> bool:
    """(1/l) sum_b phi(b) in L(phi)."""
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    return all((c / l).denominator == 1 for c in sum_coordinates(sys))


def minimal_uniform_size_bruteforce(sys: IncidenceSystem) -> int:
    """Smallest N in 1..|B| with (N/|B|) sum_b phi(b) in L(phi), by direct membership tests."""
    L = system_lattice(sys)
    require_full_rank(L)
    total = sum_vector(sys)
    B = sys.num_blocks
    for N in range(1, B + 1):
        if membership(L, [Fraction(N * s, B) for s in total]):
            return N
    return B
