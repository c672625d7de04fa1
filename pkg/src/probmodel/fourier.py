# src/probmodel/fourier.py
"""
Characteristic function of X and its Gaussian approximation.

    X^(Theta) = prod_b f(2 pi <phi(b), theta_1>, ..., 2 pi <phi(b), theta_{l-1}>)
    f(x) = (1/l) (1 + sum_j e^{i x_j})

The Gaussian Y with the moments of X has
    Y^(Theta) = exp(2 pi i <E[X], Theta> - 2 pi^2 Theta^T Sigma Theta)
and density at its mean f_Y(E[X]) = (2 pi)^(-d/2) det(Sigma)^(-1/2).
"""
from math import log, pi
from typing import Sequence

import numpy as np

from src.probmodel.moments import MomentData, SingularCovariance
from src.probmodel.norms import norms, pairings
from src.setsys.incidence import IncidenceSystem

# |f(x)| <= exp(-|x|^2 / 8l) is tight at x = 0 up to float rounding
F_BOUND_RTOL = 1e-12


def f_multiplier(x: Sequence[float], l: int) -> complex:
    x = np.asarray(x, dtype=float)
    if x.shape != (l - 1,):
        raise ValueError(f"expected {l - 1} coordinates, got {x.shape}")
    return complex((1 + np.exp(1j * x).sum()) / l)


def _block_factors(theta, sys: IncidenceSystem, l: int) -> np.ndarray:
    x = 2 * pi * pairings(theta, sys)
    if x.shape[1] != l - 1:
        raise ValueError(f"Theta has {x.shape[1]} bins, expected {l - 1}")
    return (1 + np.exp(1j * x).sum(axis=1)) / l


def char_fn_X(theta, sys: IncidenceSystem, l: int) -> complex:
    """E[exp(2 pi i <X, Theta>)] as a product over blocks."""
    if l == 1:
        return 1 + 0j
    return complex(np.prod(_block_factors(theta, sys, l)))


def quadratic_form(theta, moments: MomentData) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(theta @ moments.sigma() @ theta)


def gaussian_char(theta, moments: MomentData) -> complex:
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0:
        return 1 + 0j
    phase = 2 * pi * float(moments.mean_float() @ theta)
    return complex(np.exp(1j * phase - 2 * pi ** 2 * quadratic_form(theta, moments)))


def log_gaussian_density_at_mean(moments: MomentData) -> float:
    """-(d/2) log 2 pi - (1/2) log det Sigma, from the exact determinant."""
    if moments.dim and moments.det_R == 0:
        raise SingularCovariance("covariance is singular; the Gaussian has no density")
    return -0.5 * moments.dim * log(2 * pi) - 0.5 * moments.log_det_sigma()


def fourier_log_error(theta, sys: IncidenceSystem, moments: MomentData) -> complex:
    """delta(Theta) = log X^(Theta) - (2 pi i <E[X], Theta> - 2 pi^2 Theta^T Sigma Theta).

    log X^ is taken as the sum of principal logs of the block factors, which
    is the continuous branch near Theta = 0.
    """
    l = moments.l
    if l == 1:
        return 0j
    factors = _block_factors(theta, sys, l)
    if np.any(factors == 0):
        raise ValueError("characteristic function vanishes at Theta")
    log_x = complex(np.log(factors).sum())
    theta = np.asarray(theta, dtype=float)
    gauss = 2j * pi * float(moments.mean_float() @ theta) - 2 * pi ** 2 * quadratic_form(theta, moments)
    return log_x - gauss


def delta_bound(theta, sys: IncidenceSystem) -> float:
    """||Theta||_inf * |B| * ||Theta||_2^2, the shape of the cubic error term."""
    rep = norms(theta, sys)
    return rep.ii_inf * sys.num_blocks * rep.ii_2 ** 2


def check_f_bound(x: Sequence[float], l: int) -> bool:
    """|f(x)| <= exp(-|x|^2 / 8l) for max |x_j| <= pi."""
    x = np.asarray(x, dtype=float)
    norm = float(np.abs(x).max(initial=0.0))
    if norm > pi:
        raise ValueError(f"bound applies only for max |x_j| <= pi, got {norm}")
    bound = np.exp(-norm ** 2 / (8 * l))
    return abs(f_multiplier(x, l)) <= bound * (1 + F_BOUND_RTOL)


def check_f_approx(x: Sequence[float], l: int) -> float:
    """|log f(x) - quadratic approximation| for max |x_j| <= 1; it is O(|x|^3)."""
    x = np.asarray(x, dtype=float)
    if float(np.abs(x).max(initial=0.0)) > 1:
        raise ValueError("approximation applies only for max |x_j| <= 1")
    s1 = x.sum()
    s2 = (x ** 2).sum()
    cross = s1 ** 2 - s2    # sum over ordered pairs j != j'
    approx = 1j * s1 / l - (1 - 1 / l) * s2 / (2 * l) + cross / (2 * l * l)
    return abs(np.log(f_multiplier(x, l)) - approx)
