# src/setsys/divisibility.py
"""
Closed-form parameter arithmetic: lambda, the design and large-set
divisibility conditions, block counts and the c3 bound of design systems.
All binomials are Python ints, so nothing overflows.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List

from src.setsys.incidence import InstanceParams, ParameterError, validate_nkt


class NonIntegralLambda(ValueError):
    pass


# e rounded up at 50 decimal digits; c3 only ever needs an upper bound
E_UPPER = Fraction("2.71828182845904523536028747135266249775724709369996")


@dataclass(frozen=True)
class DivisibilityCheck:
    s: int
    divisor: int
    dividend: int

    @property
    def passed(self) -> bool:
        return self.dividend % self.divisor == 0

    def to_dict(self) -> dict:
        return {"s": self.s, "divisor": self.divisor, "dividend": self.dividend, "pass": self.passed}


@dataclass(frozen=True)
class DivisibilityReport:
    kind: str                     # "design" or "largeset"
    params: dict
    checks: List[DivisibilityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self):
        return next((c for c in self.checks if not c.passed), None)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def lambda_of(params: InstanceParams) -> int:
    """lambda = C(n-t, k-t) / l for the designs of a large set."""
    total = comb(params.n - params.t, params.k - params.t)
    if total % params.l:
        raise NonIntegralLambda(
            f"l={params.l} does not divide C({params.n - params.t},{params.k - params.t}) = {total}"
        )
    return total // params.l


def check_design_divisibility(n: int, k: int, t: int, lam: int) -> DivisibilityReport:
    """C(k-s, t-s) | lam * C(n-s, t-s) for s = 0..t-1."""
    validate_nkt(n, k, t)
    if lam < 1:
        raise ParameterError(f"lambda must be >= 1, got {lam}")
    checks = [
        DivisibilityCheck(s, comb(k - s, t - s), lam * comb(n - s, t - s))
        for s in range(t)
    ]
    return DivisibilityReport("design", {"n": n, "k": k, "t": t, "lambda": lam}, checks)


def check_largeset_divisibility(params: InstanceParams) -> DivisibilityReport:
    """l * C(k-s, t-s) | C(n-t, k-t) * C(n-s, t-s) for s = 0..t."""
    n, k, t, l = params.n, params.k, params.t, params.l
    top = comb(n - t, k - t)
    checks = [
        DivisibilityCheck(s, l * comb(k - s, t - s), top * comb(n - s, t - s))
        for s in range(t + 1)
    ]
    return DivisibilityReport("largeset", params.to_dict(), checks)


def design_size(n: int, k: int, t: int, lam: int) -> int:
    """Number of blocks N of a t-(n,k,lam) design, from N*C(k,t) = lam*C(n,t)."""
    validate_nkt(n, k, t)
    num = lam * comb(n, t)
    if num % comb(k, t):
        raise ParameterError(f"C({k},{t}) does not divide {lam}*C({n},{t}); no design has these parameters")
    return num // comb(k, t)


def largeset_part_size(params: InstanceParams) -> int:
    total = comb(params.n, params.k)
    if total % params.l:
        raise NonIntegralLambda(f"l={params.l} does not divide C({params.n},{params.k}) = {total}")
    return total // params.l


def c3_design_bound(n: int, t: int) -> int:
    """ceil((4 e n / t)^t) with e rounded up, an integer upper bound on c3."""
    if not (n >= t >= 1):
        raise ParameterError(f"need n >= t >= 1, got n={n}, t={t}")
    value = (4 * E_UPPER * n / t) ** t
    return -(-value.numerator // value.denominator)
