# src/probmodel/estimate.py
"""
Gaussian point estimate of Pr[X = E[X]] and the error bounds around it.

    Pr[X = E[X]] = det(L(Phi)) f_Y(E[X]) (1 + alpha1 + alpha3) + alpha2

with eps = (C1 M |B|)^(-1/3) (clamped to 1/(c3 M) when c3 >= 2) and

    I1 <= C l^3 M |A|^(3/2) / |B|^(1/2) * f_Y        needs eps <= (C M |B|)^(-1/3)
    I2 <= exp(-|B| eps^2 / l^2) / det(L(Phi))        needs c3 >= 2, eps <= 1/(c3 M)
    I3 <= (l-1) 2^(|A|/2) exp(-pi^2 |B| eps^2 / l^2) * f_Y

Everything that can be huge or tiny is carried as a logarithm. Each verdict
depends on the configured absolute constants, which every report echoes.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import exp, inf, log, pi
from typing import List, Optional

from src.common import config
from src.common.config import Constants
from src.lattice.lattices import (
    check_main_divisibility,
    divisibility_parameter,
    lattice_determinant,
    system_lattice,
)
from src.probmodel.fourier import log_gaussian_density_at_mean
from src.probmodel.moments import MomentData, covariance
from src.probmodel.norms import ball_in_voronoi_radius, norm_constant_M
from src.setsys.divisibility import c3_design_bound
from src.setsys.incidence import IncidenceSystem, ParameterError, c2_bound

# slack when comparing eps against its limits, which it may equal exactly
EPS_RTOL = 1e-12


class NotApplicable(ValueError):
    pass


class PreconditionViolated(ValueError):
    def __init__(self, lemma: str, condition: str, message: str = ""):
        self.lemma = lemma
        self.condition = condition
        super().__init__(message or f"{lemma}: {condition} does not hold")


def _exp(x: float) -> float:
    return inf if x > 709 else exp(x)


@dataclass(frozen=True)
class IBounds:
    eps: float
    i1: float
    i2: float
    i3: float
    log_i1: float
    log_i3: float
    violations: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "I1": self.i1,
            "I2": self.i2,
            "I3": self.i3,
            "log_I1": self.log_i1,
            "log_I3": self.log_i3,
            "violations": self.violations,
        }


def epsilon_choice(m_const: float, num_blocks: int, c3: int, const_i1: float):
    """(eps, clamped): (C1 M |B|)^(-1/3), lowered to 1/(c3 M) when c3 >= 2 requires it."""
    eps = (const_i1 * m_const * num_blocks) ** (-1.0 / 3.0)
    if c3 >= 2 and eps > 1.0 / (c3 * m_const):
        return 1.0 / (c3 * m_const), True
    return eps, False


def bounds_I(eps: float, sys: IncidenceSystem, l: int, c3: int, moments: MomentData,
             constants: Optional[Constants] = None, c2: Optional[int] = None,
             det_product: Optional[int] = None, strict: bool = False) -> IBounds:
    """The three integral bounds; unmet preconditions are listed, or raised when strict."""
    constants = constants or Constants()
    c2 = c2_bound(sys) if c2 is None else c2
    A, B = sys.num_columns, sys.num_blocks
    m_const = norm_constant_M(A, c2, constants.norm)
    if det_product is None:
        det_product = lattice_determinant(system_lattice(sys)) ** (l - 1)

    violations = []
    i1_limit = (constants.i1 * m_const * B) ** (-1.0 / 3.0)
    if eps > i1_limit * (1 + EPS_RTOL):
        violations.append({"bound": "I1", "condition": "eps <= (C M |B|)^(-1/3)", "limit": i1_limit})
    if c3 < 2:
        violations.append({"bound": "I2", "condition": "c3 >= 2", "limit": 2})
    i2_limit = 1.0 / (c3 * m_const)
    if eps > i2_limit * (1 + EPS_RTOL):
        violations.append({"bound": "I2", "condition": "eps <= 1/(c3 M)", "limit": i2_limit})
    if strict and violations:
        v = violations[0]
        raise PreconditionViolated(v["bound"], v["condition"])

    log_fy = log_gaussian_density_at_mean(moments)
    log_i1 = log(constants.i1) + 3 * log(l) + log(m_const) + 1.5 * log(A) - 0.5 * log(B) + log_fy
    i2 = exp(-B * eps ** 2 / l ** 2) / det_product
    if l == 1:
        log_i3 = -inf
    else:
        log_i3 = log(l - 1) + 0.5 * A * log(2) - pi ** 2 * B * eps ** 2 / l ** 2 + log_fy
    return IBounds(eps, _exp(log_i1), i2, _exp(log_i3), log_i1, log_i3, violations)


@dataclass(frozen=True)
class ThresholdVerdict:
    name: str
    lhs: int
    log_rhs: float

    @property
    def satisfied(self) -> bool:
        return self.lhs > 0 and log(self.lhs) >= self.log_rhs

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": _exp(self.log_rhs),
            "log_rhs": self.log_rhs,
            "verdict": self.satisfied,
        }


def _log_power_of_log(x: float, power: int) -> float:
    inner = log(x)
    return power * log(inner) if inner > 0 else -inf


def theorem_main_threshold(num_blocks: int, dim: int, l: int, c2: int, c3: int,
                           const: float) -> ThresholdVerdict:
    """|B| >= C dim^6 l^6 c3^3 log^3(dim c2 c3 l)."""
    log_rhs = (log(const) + 6 * log(dim) + 6 * log(l) + 3 * log(c3)
               + _log_power_of_log(dim * c2 * c3 * l, 3))
    return ThresholdVerdict("large_set", num_blocks, log_rhs)


def theorem_klp_threshold(N: int, num_blocks: int, dim: int, c2: int, c3: int,
                          const: float) -> ThresholdVerdict:
    """min(N, |B| - N) >= C c2 c3^2 dim^6 log^6(2 c3 dim)."""
    log_rhs = (log(const) + log(c2) + 2 * log(c3) + 6 * log(dim)
               + _log_power_of_log(2 * c3 * dim, 6))
    return ThresholdVerdict("single_design", min(N, num_blocks - N), log_rhs)


@dataclass(frozen=True)
class EstimateReport:
    system: dict
    l: int
    c1: int
    design_size: Fraction
    c1_divides_design_size: bool
    c2: int
    c2_source: str
    c3: int
    c3_source: str
    log_gaussian_density_at_mean: float
    det_L_phi: int
    det_L_Phi_product: int
    log_point_estimate: float
    m_const: float
    ball_radius: float
    eps: float
    eps_clamped: bool
    bounds: IBounds
    alpha1: float
    alpha2: float
    alpha3: float
    lower_bound: Optional[float]
    thresholds: List[ThresholdVerdict]
    constants: Constants

    @property
    def point_estimate(self) -> float:
        return _exp(self.log_point_estimate)

    @property
    def alpha_sum(self) -> float:
        return self.point_estimate * (1 + self.alpha1 + self.alpha3) + self.alpha2

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "l": self.l,
            "c1": self.c1,
            "design_size": self.design_size,
            "c1_divides_design_size": self.c1_divides_design_size,
            "c2": self.c2,
            "c2_source": self.c2_source,
            "c3": self.c3,
            "c3_source": self.c3_source,
            "logGaussianDensityAtMean": self.log_gaussian_density_at_mean,
            "detLphi": self.det_L_phi,
            "detLPhiProduct": self.det_L_Phi_product,
            "pointEstimate": self.point_estimate,
            "logPointEstimate": self.log_point_estimate,
            "Mconst": self.m_const,
            "ballRadius": self.ball_radius,
            "eps": self.eps,
            "epsClamped": self.eps_clamped,
            "boundI1": self.bounds.i1,
            "boundI2": self.bounds.i2,
            "boundI3": self.bounds.i3,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "alpha3": self.alpha3,
            "alphaSum": self.alpha_sum,
            "lowerBound": self.lower_bound,
            "violations": self.bounds.violations,
            "thresholdVerdicts": [v.to_dict() for v in self.thresholds],
            "constants": self.constants.to_dict(),
        }


def _resolve_c2_c3(sys: IncidenceSystem, c2: Optional[int], c3: Optional[int]):
    if c2 is None:
        c2, c2_source = c2_bound(sys), "design" if sys.is_design else "max entry"
    else:
        c2_source = "user"
    if c3 is None:
        if not sys.is_design:
            raise ParameterError("c3 must be supplied for a general system")
        c3, c3_source = c3_design_bound(sys.n, sys.t), "design bound"
    else:
        c3_source = "user"
    if c2 < 1 or c3 < 1:
        raise ParameterError(f"c2 and c3 must be >= 1, got c2={c2}, c3={c3}")
    return c2, c2_source, c3, c3_source


def estimate_success_probability(sys: IncidenceSystem, l: int, c3: Optional[int] = None,
                                 constants: Optional[Constants] = None, c2: Optional[int] = None,
                                 strict: bool = False, eps: Optional[float] = None) -> EstimateReport:
    """Point estimate, bounds and threshold verdicts; eps, when given, replaces the default choice."""
    if l < 1:
        raise ParameterError(f"l must be >= 1, got {l}")
    constants = constants or Constants()
    if not check_main_divisibility(sys, l):
        raise NotApplicable(f"(1/{l}) sum_b phi(b) is not in the lattice; no uniform {l}-partition exists")
    c2, c2_source, c3, c3_source = _resolve_c2_c3(sys, c2, c3)

    A, B = sys.num_columns, sys.num_blocks
    moments = covariance(sys, l)
    log_fy = log_gaussian_density_at_mean(moments)
    det_l = lattice_determinant(system_lattice(sys))
    det_product = det_l ** (l - 1)

    m_const = norm_constant_M(A, c2, constants.norm)
    if eps is None:
        eps, clamped = epsilon_choice(m_const, B, c3, constants.i1)
    elif eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    else:
        clamped = False
    bounds = bounds_I(eps, sys, l, c3, moments, constants, c2=c2, det_product=det_product, strict=strict)

    log_pe = (l - 1) * log(det_l) + log_fy
    alpha1 = _exp(bounds.log_i1 - log_fy)
    alpha2 = exp(-B * eps ** 2 / l ** 2)
    alpha3 = _exp(bounds.log_i3 - log_fy) if l > 1 else 0.0
    fy = _exp(log_fy)
    holds = not bounds.violations and alpha1 <= 0.25 and alpha3 <= 0.25 and alpha2 <= 0.25 * fy
    lower = 0.25 * _exp(log_pe) if holds else None

    c1 = divisibility_parameter(sys)
    N = Fraction(B, l)
    thresholds = [
        theorem_main_threshold(B, A, l, c2, c3, constants.main),
        theorem_klp_threshold(int(N), B, A, c2, c3, constants.klp),
    ]
    report = EstimateReport(
        system=sys.describe(), l=l, c1=c1, design_size=N,
        c1_divides_design_size=N.denominator == 1 and int(N) % c1 == 0,
        c2=c2, c2_source=c2_source, c3=c3, c3_source=c3_source,
        log_gaussian_density_at_mean=log_fy, det_L_phi=det_l, det_L_Phi_product=det_product,
        log_point_estimate=log_pe, m_const=m_const, ball_radius=ball_in_voronoi_radius(m_const),
        eps=eps, eps_clamped=clamped, bounds=bounds,
        alpha1=alpha1, alpha2=alpha2, alpha3=alpha3, lower_bound=lower,
        thresholds=thresholds, constants=constants,
    )
    config.log(
        f"estimate l={l} |B|={B} |A|={A}: point estimate {report.point_estimate:.6g}, "
        f"eps={eps:.4g}{' (clamped)' if clamped else ''}, {len(bounds.violations)} violation(s)"
    )
    return report
