# src/lattice/normal_forms.py
"""
Exact integer matrix normal forms on numpy object arrays (Python ints inside).

- smith_normal_form: S = U @ A @ W, S diagonal with d1 | d2 | ..., U and W unimodular
- hermite_normal_form: canonical row-style Hermite form of the lattice spanned by the rows
- integer_determinant, rational_inverse, rational_determinant, rational_rank, solve_rational

Everything except the Smith pivot loop goes through sympy DomainMatrix over ZZ or QQ.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError
from sympy.polys.matrices.normalforms import hermite_normal_form as zz_hermite_normal_form


def as_object_matrix(A) -> np.ndarray:
    """Copy A into a 2-D object array of Python ints."""
    arr = np.array(A, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ValueError("expected a matrix")
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        if isinstance(x, Fraction):
            if x.denominator != 1:
                raise ValueError(f"non-integer entry {x}")
            x = x.numerator
        out[idx] = int(x)
    return out


def _as_fraction_matrix(A) -> np.ndarray:
    arr = np.array(A, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ValueError("expected a matrix")
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        out[idx] = Fraction(x)
    return out


def to_domain_matrix(A, domain=ZZ) -> DomainMatrix:
    """DomainMatrix over ZZ (integer entries) or QQ (anything Fraction accepts)."""
    if domain == ZZ:
        M = as_object_matrix(A)
        rows = [[ZZ(int(x)) for x in row] for row in M]
    else:
        M = _as_fraction_matrix(A)
        rows = [[QQ(int(x.numerator), int(x.denominator)) for x in row] for row in M]
    return DomainMatrix(rows, M.shape, domain)


def _from_domain(x, domain):
    if domain == ZZ:
        return int(x)
    return Fraction(int(x.numerator), int(x.denominator))


def from_domain_matrix(dM: DomainMatrix) -> np.ndarray:
    m, n = dM.shape
    out = np.empty((m, n), dtype=object)
    for i, row in enumerate(dM.to_list()):
        for j, x in enumerate(row):
            out[i, j] = _from_domain(x, dM.domain)
    return out


def identity(n: int) -> np.ndarray:
    eye = np.zeros((n, n), dtype=object)
    for i in range(n):
        eye[i, i] = 1
    return eye


@dataclass(frozen=True, eq=False)
class SmithDecomposition:
    U: np.ndarray
    S: np.ndarray
    W: np.ndarray

    def diagonal(self) -> List[int]:
        return [self.S[i, i] for i in range(min(self.S.shape))]

    def invariant_factors(self) -> List[int]:
        return [d for d in self.diagonal() if d != 0]

    def rank(self) -> int:
        return len(self.invariant_factors())

    def is_valid(self, A) -> bool:
        """Reconstruction, diagonal shape, divisibility chain and unimodularity, all exact."""
        A = as_object_matrix(A)
        if not np.array_equal(self.U.dot(A).dot(self.W), self.S):
            return False
        m, n = self.S.shape
        for i in range(m):
            for j in range(n):
                if i != j and self.S[i, j] != 0:
                    return False
        diag = self.diagonal()
        for a, b in zip(diag, diag[1:]):
            if a < 0 or (a == 0 and b != 0) or (a != 0 and b % a):
                return False
        return abs(integer_determinant(self.U)) == 1 and abs(integer_determinant(self.W)) == 1


def _smallest_entry(S: np.ndarray, p: int) -> Optional[Tuple[int, int]]:
    # smallest nonzero magnitude, ties to the lowest row then lowest column
    best = None
    m, n = S.shape
    for i in range(p, m):
        for j in range(p, n):
            x = S[i, j]
            if x != 0 and (best is None or abs(x) < best[0]):
                best = (abs(x), i, j)
    return None if best is None else (best[1], best[2])


def smith_normal_form(A) -> SmithDecomposition:
    S = as_object_matrix(A)
    m, n = S.shape
    U, W = identity(m), identity(n)

    for p in range(min(m, n)):
        while True:
            pos = _smallest_entry(S, p)
            if pos is None:
                return SmithDecomposition(U, S, W)
            i, j = pos
            if i != p:
                S[[p, i]] = S[[i, p]]
                U[[p, i]] = U[[i, p]]
            if j != p:
                S[:, [p, j]] = S[:, [j, p]]
                W[:, [p, j]] = W[:, [j, p]]
            piv = S[p, p]

            clean = True
            for i in range(p + 1, m):
                if S[i, p] != 0:
                    q = S[i, p] // piv
                    S[i] -= q * S[p]
                    U[i] -= q * U[p]
                    clean = clean and S[i, p] == 0
            for j in range(p + 1, n):
                if S[p, j] != 0:
                    q = S[p, j] // piv
                    S[:, j] -= q * S[:, p]
                    W[:, j] -= q * W[:, p]
                    clean = clean and S[p, j] == 0
            if not clean:
                continue

            # divisibility chain: fold an offending row into the pivot row and go again
            bad = next(
                (i for i in range(p + 1, m) for j in range(p + 1, n) if S[i, j] % piv),
                None,
            )
            if bad is None:
                break
            S[p] += S[bad]
            U[p] += U[bad]

        if S[p, p] < 0:
            S[p] = -S[p]
            U[p] = -U[p]
    return SmithDecomposition(U, S, W)


def hermite_normal_form(G) -> np.ndarray:
    """Row-style Hermite form: the nonzero rows, pivots positive and strictly to the right,
    entries above each pivot reduced into [0, pivot). Two generator sets span the same
    lattice iff their Hermite forms are equal."""
    M = as_object_matrix(G)
    d = M.shape[1]
    if not any(M.flat):
        return np.zeros((0, d), dtype=object)
    # sympy returns the column-style form with pivots in the bottom-right corner;
    # reversing both axes of its transpose gives the row-style form
    H = zz_hermite_normal_form(to_domain_matrix(M[:, ::-1].T))
    return from_domain_matrix(H).T[::-1, ::-1].copy()


def _square(A, what: str, domain) -> DomainMatrix:
    dM = to_domain_matrix(A, domain)
    m, n = dM.shape
    if m != n:
        raise ValueError(f"{what} needs a square matrix, got {m}x{n}")
    return dM


def integer_determinant(A) -> int:
    """Exact determinant of a square integer matrix."""
    dM = _square(A, "determinant", ZZ)
    return 1 if dM.shape[0] == 0 else int(dM.det())


def rational_determinant(A) -> Fraction:
    dM = _square(A, "determinant", QQ)
    return Fraction(1) if dM.shape[0] == 0 else _from_domain(dM.det(), QQ)


def rational_inverse(A) -> np.ndarray:
    """Exact inverse over Q (object array of Fractions); ValueError when singular."""
    dM = _square(A, "inverse", QQ)
    try:
        return from_domain_matrix(dM.inv())
    except (DMNonInvertibleMatrixError, ZeroDivisionError) as e:
        raise ValueError("matrix is singular") from e


def rational_rank(A) -> int:
    """Rank over Q of an integer or rational matrix."""
    dM = to_domain_matrix(A, QQ)
    return 0 if 0 in dM.shape else dM.rank()


def solve_rational(A, b: Sequence) -> Optional[List[Fraction]]:
    """The x with A x = b when A has independent columns, None when b is outside their span."""
    A = _as_fraction_matrix(A)
    m, n = A.shape
    if len(b) != m:
        raise ValueError(f"right-hand side has length {len(b)}, expected {m}")
    b = [Fraction(x) for x in b]
    if n == 0:
        return [] if not any(b) else None
    aug = to_domain_matrix(np.hstack([A, np.array(b, dtype=object).reshape(-1, 1)]), QQ)
    R, pivots = aug.rref()
    if n in pivots:
        return None
    if list(pivots) != list(range(n)):
        raise ValueError("columns are not independent")
    rows = R.to_list()
    return [_from_domain(rows[i][n], QQ) for i in range(n)]
