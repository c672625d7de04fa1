# src/setsys/incidence.py
"""
Incidence systems phi: B -> Z^A.

Rows are indexed by B, columns by A. The design instantiation takes B = k-sets
and A = t-sets of [n] (both in colex order) with phi(b)_a = 1 iff a is inside b.
A general system is just an integer matrix read from a JSON file.
"""
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Optional, Tuple

import numpy as np

from src.common import config
from src.common.jsonio import load_json
from src.setsys.colex import rank_colex, unrank_colex, to_one_based

INT64_MIN, INT64_MAX = -(2 ** 63), 2 ** 63 - 1


class ParameterError(ValueError):
    pass


class SizeCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class InstanceParams:
    n: int
    k: int
    t: int
    l: int = 1

    def __post_init__(self):
        validate_nkt(self.n, self.k, self.t)
        if self.l < 1:
            raise ParameterError(f"l must be >= 1, got {self.l}")

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "t": self.t, "l": self.l}


def validate_nkt(n: int, k: int, t: int):
    if not (1 <= t < k <= n):
        raise ParameterError(f"need 1 <= t < k <= n, got n={n}, k={k}, t={t}")


@dataclass(frozen=True, eq=False)
class IncidenceSystem:
    """An immutable integer matrix with row/column semantics.

    For design systems n, k, t are set and row r is the k-set unrank_colex(r, n, k),
    column c the t-set unrank_colex(c, n, t). General systems leave them None.
    """
    matrix: np.ndarray
    n: Optional[int] = None
    k: Optional[int] = None
    t: Optional[int] = None
    source: str = "design"
    _column_sums: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.int64)
        if m.ndim != 2:
            raise ParameterError("incidence matrix must be two-dimensional")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        sums = m.sum(axis=0)
        sums.flags.writeable = False
        object.__setattr__(self, "_column_sums", sums)

    @property
    def num_blocks(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_columns(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_design(self) -> bool:
        return self.n is not None

    def column_sums(self) -> np.ndarray:
        """sum over b in B of phi(b)."""
        return self._column_sums

    def block(self, r: int) -> Tuple[int, ...]:
        self._require_design()
        return unrank_colex(r, self.n, self.k)

    def tset(self, c: int) -> Tuple[int, ...]:
        self._require_design()
        return unrank_colex(c, self.n, self.t)

    def column_label(self, c: int):
        """1-based t-set for design systems, plain column index otherwise."""
        return to_one_based(self.tset(c)) if self.is_design else c

    def _require_design(self):
        if not self.is_design:
            raise ParameterError("operation needs a design system (n, k, t)")

    def describe(self) -> dict:
        d = {"source": self.source, "num_blocks": self.num_blocks, "num_columns": self.num_columns}
        if self.is_design:
            d.update({"n": self.n, "k": self.k, "t": self.t})
        return d


def build_incidence(n: int, k: int, t: int, cap: Optional[int] = None) -> IncidenceSystem:
    """C(n,k) x C(n,t) inclusion matrix, rows and columns in colex order."""
    validate_nkt(n, k, t)
    cap = config.INCIDENCE_CAP if cap is None else cap
    rows = comb(n, k)
    if rows > cap:
        raise SizeCapExceeded(f"C({n},{k}) = {rows} exceeds the incidence cap {cap}")
    m = np.zeros((rows, comb(n, t)), dtype=np.int64)
    for r in range(rows):
        b = unrank_colex(r, n, k)
        for a in combinations(b, t):
            m[r, rank_colex(a)] = 1
    return IncidenceSystem(m, n=n, k=k, t=t, source="design")


def load_matrix_system(path) -> IncidenceSystem:
    """General system from a JSON array of integer arrays (rows = B, columns = A)."""
    raw = load_json(path)
    if not isinstance(raw, list) or not raw:
        raise ParameterError(f"{path}: expected a non-empty JSON array of rows")
    width = None
    for i, row in enumerate(raw):
        if not isinstance(row, list):
            raise ParameterError(f"{path}: row [{i}] is not an array")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParameterError(f"{path}: row [{i}] has {len(row)} entries, expected {width}")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, int):
                raise ParameterError(f"{path}: entry [{i}][{j}] is not an integer: {x!r}")
            if not INT64_MIN <= x <= INT64_MAX:
                raise ParameterError(f"{path}: entry [{i}][{j}] does not fit in 64 bits: {x}")
    if not width:
        raise ParameterError(f"{path}: rows are empty")
    return IncidenceSystem(np.array(raw, dtype=np.int64), source=str(path))


def c2_bound(sys: IncidenceSystem) -> int:
    """A valid l_inf bound for an integer basis of V: the columns themselves."""
    if sys.is_design:
        return 1
    return max(1, int(np.abs(sys.matrix).max()))
