# src/probmodel/norms.py
"""
Norms of a Fourier variable Theta = (theta_1, ..., theta_{l-1}) against the rows phi(b).

    ii_inf  = max_{b,j} |<phi(b), theta_j>|
    ii_2    = max_j ( (1/|B|) sum_b <phi(b), theta_j>^2 )^(1/2)     (the R-norm)
    iii_*   = the same on fractional parts r_b = p_b - n_b, n_b in Z, r_b in [-1/2, 1/2)

Theta is a flat float vector, bin-major: block j holds theta_{j+1}.
"""
from dataclasses import dataclass
from math import log, sqrt
from typing import Optional

import numpy as np

from src.setsys.incidence import IncidenceSystem


@dataclass(frozen=True)
class NormReport:
    ii_inf: float
    ii_2: float
    iii_inf: float
    iii_2: float

    @property
    def r_norm(self) -> float:
        return self.ii_2

    def to_dict(self) -> dict:
        return {"ii_inf": self.ii_inf, "ii_2": self.ii_2, "iii_inf": self.iii_inf, "iii_2": self.iii_2}


def split_bins(theta, num_columns: int) -> np.ndarray:
    """Flat Theta -> (l-1, |A|) array."""
    theta = np.asarray(theta, dtype=float)
    if theta.size % num_columns:
        raise ValueError(f"Theta has length {theta.size}, not a multiple of |A| = {num_columns}")
    return theta.reshape(-1, num_columns)


def pairings(theta, sys: IncidenceSystem) -> np.ndarray:
    """|B| x (l-1) matrix of <phi(b), theta_j>."""
    return sys.matrix.astype(float) @ split_bins(theta, sys.num_columns).T


def fractional_parts(p: np.ndarray) -> np.ndarray:
    return p - np.floor(p + 0.5)


def _max_quadratic_mean(p: np.ndarray) -> float:
    if p.size == 0:
        return 0.0
    return float(np.sqrt((p ** 2).mean(axis=0)).max())


def norms(theta, sys: IncidenceSystem) -> NormReport:
    p = pairings(theta, sys)
    if p.size == 0:
        return NormReport(0.0, 0.0, 0.0, 0.0)
    r = fractional_parts(p)
    return NormReport(
        ii_inf=float(np.abs(p).max()),
        ii_2=_max_quadratic_mean(p),
        iii_inf=float(np.abs(r).max()),
        iii_2=_max_quadratic_mean(r),
    )


def norm_constant_M(num_columns: int, c2: int, const: float) -> float:
    """C_M * (|A| log(2 c2 |A|))^(3/2)."""
    if const <= 0:
        raise ValueError(f"norm constant must be positive, got {const}")
    return const * (num_columns * log(2 * c2 * num_columns)) ** 1.5


def _leverages(sys: IncidenceSystem) -> np.ndarray:
    # squared row norms of an orthonormal basis of the column space of phi
    M = sys.matrix.astype(float)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    tol = s.max(initial=0.0) * max(M.shape) * np.finfo(float).eps
    r = int((s > tol).sum())
    return (U[:, :r] ** 2).sum(axis=1)


def max_norm_ratio(sys: IncidenceSystem) -> float:
    """sup over theta of ii_inf / ii_2, which is sqrt(|B| * max leverage of a row)."""
    return sqrt(sys.num_blocks * float(_leverages(sys).max(initial=0.0)))


def norm_ratio_witness(sys: IncidenceSystem) -> np.ndarray:
    """One theta (a single bin) attaining max_norm_ratio: phi theta is the projection of e_b
    onto the column space, b the row of largest leverage."""
    h = _leverages(sys)
    target = np.zeros(sys.num_blocks)
    target[int(np.argmax(h))] = 1.0
    theta, *_ = np.linalg.lstsq(sys.matrix.astype(float), target, rcond=None)
    return theta


def calibrate_norm_constant(sys: IncidenceSystem, c2: int) -> float:
    """Smallest C_M with ii_inf <= M * ii_2 for every Theta; below it norm_ratio_witness fails."""
    return max_norm_ratio(sys) / norm_constant_M(sys.num_columns, c2, 1.0)


def ball_in_voronoi_radius(m_const: float) -> float:
    return 1.0 / (2.0 * m_const)


def dual_shift(theta, sys: IncidenceSystem, tol: float = 1e-7) -> Optional[np.ndarray]:
    """theta' with <phi(b), theta'> = round(<phi(b), theta>) for every b, or None.

    When it exists theta' is in the dual lattice and ii_2(theta - theta') = iii_2(theta).
    """
    theta = np.asarray(theta, dtype=float)
    M = sys.matrix.astype(float)
    target = np.floor(M @ theta + 0.5)
    shift, *_ = np.linalg.lstsq(M, target, rcond=None)
    if np.abs(M @ shift - target).max(initial=0.0) > tol:
        return None
    return shift


def dual_shift_product(theta, sys: IncidenceSystem, tol: float = 1e-7) -> Optional[np.ndarray]:
    out = []
    for block in split_bins(theta, sys.num_columns):
        shifted = dual_shift(block, sys, tol)
        if shifted is None:
            return None
        out.append(shifted)
    return np.concatenate(out) if out else np.zeros(0)
