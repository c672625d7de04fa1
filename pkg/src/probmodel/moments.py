# src/probmodel/moments.py
"""
First and second moments of X.

The covariance is the Kronecker product of the bin factor Mfac
((l-1)/l^2 on the diagonal, -1/l^2 off it) with R = phi^T phi, stored
bin-major. Its determinant is kept exact:
    det Sigma = det(R)^(l-1) * det(Mfac)^|A|,   det(Mfac) = l^(-l)
and only its logarithm ever becomes a float.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import log
from typing import List

import numpy as np

from src.lattice.normal_forms import integer_determinant
from src.probmodel.process import mean_X
from src.setsys.incidence import IncidenceSystem


class SingularCovariance(ArithmeticError):
    pass


def covariance_factor(l: int) -> np.ndarray:
    """The (l-1) x (l-1) bin covariance of one uniform block, exact."""
    m = l - 1
    out = np.empty((m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            out[i, j] = Fraction(l - 1, l * l) if i == j else Fraction(-1, l * l)
    return out


def second_moment_matrix(sys: IncidenceSystem) -> np.ndarray:
    """R[a, a'] = sum_b phi(b)_a phi(b)_a'."""
    M = sys.matrix.astype(object)
    return M.T.dot(M)


@dataclass(frozen=True, eq=False)
class MomentData:
    l: int
    mean: List[Fraction]
    R: np.ndarray        # object dtype, exact
    Mfac: np.ndarray     # object dtype, Fractions
    det_R: int

    @property
    def num_columns(self) -> int:
        return self.R.shape[0]

    @property
    def dim(self) -> int:
        return (self.l - 1) * self.num_columns

    def sigma(self) -> np.ndarray:
        """Float covariance, bin-major (index j*|A| + a)."""
        return np.kron(self.Mfac.astype(float), self.R.astype(float))

    def sigma_exact(self) -> np.ndarray:
        A, m = self.num_columns, self.l - 1
        out = np.empty((self.dim, self.dim), dtype=object)
        for j in range(m):
            for jj in range(m):
                out[j * A:(j + 1) * A, jj * A:(jj + 1) * A] = self.R * self.Mfac[j, jj]
        return out

    def det_sigma(self) -> Fraction:
        return Fraction(self.det_R) ** (self.l - 1) * Fraction(1, self.l ** self.l) ** self.num_columns

    def log_det_sigma(self) -> float:
        if self.dim == 0:
            return 0.0
        if self.det_R <= 0:
            raise SingularCovariance(f"det R = {self.det_R}; phi does not have full column rank")
        return (self.l - 1) * log(self.det_R) - self.num_columns * self.l * log(self.l)

    def mean_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.mean], dtype=float)

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "dim": self.dim,
            "det_R": self.det_R,
            "det_sigma": self.det_sigma(),
            "log_det_sigma": self.log_det_sigma() if self.det_R > 0 or self.dim == 0 else None,
        }


def covariance(sys: IncidenceSystem, l: int) -> MomentData:
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    R = second_moment_matrix(sys)
    return MomentData(l, mean_X(sys, l), R, covariance_factor(l), integer_determinant(R))
