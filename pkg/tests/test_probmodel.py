# tests/test_probmodel.py
from fractions import Fraction
from math import exp, log, pi, sqrt

import numpy as np
import pytest

from src.common.config import Constants
from src.lattice.lattices import design_lattice, product_dual_point
from src.probmodel.estimate import (
    NotApplicable,
    PreconditionViolated,
    bounds_I,
    epsilon_choice,
    estimate_success_probability,
    theorem_klp_threshold,
    theorem_main_threshold,
)
from src.probmodel.fourier import (
    char_fn_X,
    check_f_approx,
    check_f_bound,
    delta_bound,
    f_multiplier,
    fourier_log_error,
    gaussian_char,
    log_gaussian_density_at_mean,
)
from src.probmodel.moments import MomentData, SingularCovariance, covariance, covariance_factor
from src.probmodel.norms import (
    ball_in_voronoi_radius,
    calibrate_norm_constant,
    dual_shift_product,
    max_norm_ratio,
    norm_constant_M,
    norm_ratio_witness,
    norms,
)
from src.probmodel.process import (
    Assignment,
    CapExceeded,
    exact_hit_count,
    exact_hit_probability,
    mean_X,
    monte_carlo_hit_probability,
    sample_assignment,
    sample_statistics,
    statistic_X,
)
from src.setsys.incidence import IncidenceSystem, ParameterError, build_incidence

K4_L3_EXACT = Fraction(6, 729)


def _random_dual_points(sys_, l, rng, count):
    L = design_lattice(sys_.n, sys_.k, sys_.t)
    for _ in range(count):
        coeffs = rng.integers(-2, 3, size=(l - 1, sys_.num_columns))
        if not coeffs.any():
            coeffs[0, 0] = 1
        yield np.array([float(x) for x in product_dual_point(L, coeffs)])


# --- the process ---

def test_sample_assignment_deterministic():
    a, b = sample_assignment(7, 50, 4), sample_assignment(7, 50, 4)
    assert np.array_equal(a.tau, b.tau)
    assert a.tau.min() >= 1 and a.tau.max() <= 4
    assert (sample_assignment(1, 10, 1).tau == 1).all()


def test_sample_assignment_frequencies():
    l, size = 5, 100_000
    tau = sample_assignment(3, size, l).tau
    sigma = sqrt(size * (1 / l) * (1 - 1 / l))
    for j in range(1, l + 1):
        assert abs((tau == j).sum() - size / l) <= 5 * sigma


def test_assignment_rejects_bad_bins():
    with pytest.raises(ValueError):
        Assignment(np.array([1, 4]), 3)


def test_statistic_X(k4):
    zero = statistic_X(Assignment(np.full(6, 3), 3), k4)
    assert zero.shape == (8,) and not zero.any()
    ones = statistic_X(Assignment(np.ones(6, dtype=int), 2), k4)
    assert np.array_equal(ones, k4.column_sums())

    tau = sample_assignment(9, 6, 3)
    X = statistic_X(tau, k4).reshape(2, 4)
    last = k4.matrix[tau.tau == 3].sum(axis=0)
    assert np.array_equal(X.sum(axis=0) + last, k4.column_sums())


def test_mean_X(sys932, k4):
    assert mean_X(sys932, 7) == [Fraction(1)] * (6 * 36)
    assert mean_X(k4, 1) == []
    assert mean_X(k4, 2) == [Fraction(3, 2)] * 4


def test_empirical_mean(k4):
    samples = sample_statistics(k4, 3, 100_000, seed=5)
    assert samples.shape == (100_000, 8)
    sigma = np.sqrt(np.diag(covariance(k4, 3).sigma()))
    err = np.abs(samples.mean(axis=0) - 1.0)
    assert (err <= 5 * sigma / sqrt(len(samples))).all()


# --- moments ---

def test_covariance_factor():
    assert covariance_factor(2).tolist() == [[Fraction(1, 4)]]
    assert covariance_factor(3).tolist() == [[Fraction(2, 9), Fraction(-1, 9)],
                                            [Fraction(-1, 9), Fraction(2, 9)]]


def test_covariance_k4_l2(k4):
    m = covariance(k4, 2)
    # R = 2I + J for K4
    assert m.R.tolist() == (2 * np.eye(4, dtype=int) + np.ones((4, 4), dtype=int)).tolist()
    assert m.det_R == 48
    assert m.det_sigma() == Fraction(3, 16)
    assert np.allclose(m.sigma(), m.R.astype(float) / 4)


def test_covariance_exact_matches_float(k4):
    m = covariance(k4, 3)
    exact = m.sigma_exact()
    assert np.allclose(exact.astype(float), m.sigma())
    assert (exact == exact.T).all()
    assert m.det_sigma() == Fraction(48 ** 2, 3 ** 12)


def test_empirical_covariance(k4):
    N = 100_000
    samples = sample_statistics(k4, 3, N, seed=11).astype(float)
    emp = np.cov(samples, rowvar=False)
    sigma = covariance(k4, 3).sigma()
    d = np.sqrt(np.diag(sigma))
    tol = 6 * np.sqrt((np.outer(d, d) ** 2 + sigma ** 2) / N)
    assert (np.abs(emp - sigma) <= tol).all()


def test_sample_statistics_independent_of_chunking(k4):
    a = sample_statistics(k4, 3, 1000, seed=2, chunk_trials=100)
    b = sample_statistics(k4, 3, 1000, seed=2, chunk_trials=100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_statistics(k4, 3, 1000, seed=3, chunk_trials=100))


# --- characteristic functions ---

@pytest.mark.parametrize("n,k,t", [(4, 2, 1), (5, 2, 1)])
def test_char_fn_on_dual_points(n, k, t):
    sys_, l = build_incidence(n, k, t), 3
    size = (l - 1) * sys_.num_columns
    assert char_fn_X(np.zeros(size), sys_, l) == pytest.approx(1)
    rng = np.random.default_rng(n)
    for theta in _random_dual_points(sys_, l, rng, 100):
        assert abs(char_fn_X(theta, sys_, l) - 1) < 1e-9
        base = rng.normal(scale=0.3, size=size)
        assert abs(char_fn_X(base + theta, sys_, l) - char_fn_X(base, sys_, l)) < 1e-9


def test_char_fn_periodic_and_bounded(fano_system):
    rng = np.random.default_rng(1)
    shifts = list(_random_dual_points(fano_system, 2, rng, 20))
    for shift in shifts:
        theta = rng.normal(scale=0.3, size=21)
        value = char_fn_X(theta, fano_system, 2)
        assert abs(value) <= 1 + 1e-12
        assert abs(char_fn_X(theta + shift, fano_system, 2) - value) < 1e-9


def test_char_fn_matches_samples(k4):
    N = 100_000
    samples = sample_statistics(k4, 3, N, seed=13).astype(float)
    rng = np.random.default_rng(4)
    for _ in range(3):
        theta = rng.normal(scale=0.1, size=8)
        emp = np.exp(2j * pi * samples @ theta).mean()
        assert abs(emp - char_fn_X(theta, k4, 3)) <= 5 * sqrt(2 / N)


def test_gaussian_char_and_density(k4):
    m = covariance(k4, 3)
    assert gaussian_char(np.zeros(8), m) == pytest.approx(1)
    expected = -4 * log(2 * pi) - 0.5 * log(2304 / 531441)
    assert log_gaussian_density_at_mean(m) == pytest.approx(expected, rel=1e-12)


def test_density_identity_covariance():
    d = 5
    R = np.empty((d, d), dtype=object)
    for i in range(d):
        for j in range(d):
            R[i, j] = 4 if i == j else 0
    m = MomentData(2, [Fraction(0)] * d, R, covariance_factor(2), 4 ** d)
    assert np.allclose(m.sigma(), np.eye(d))
    assert log_gaussian_density_at_mean(m) == pytest.approx(-(d / 2) * log(2 * pi))


def test_singular_covariance():
    sys_ = IncidenceSystem(np.array([[1, 1], [1, 1]]), source="test")
    with pytest.raises(SingularCovariance):
        log_gaussian_density_at_mean(covariance(sys_, 2))


def test_fourier_error_is_small_near_zero(sys932):
    m = covariance(sys932, 7)
    theta = np.full(6 * 36, 1e-3)
    assert abs(fourier_log_error(theta, sys932, m)) < 1e-3


def test_fourier_error_shrinks_with_delta_bound(sys932):
    m = covariance(sys932, 7)
    theta = np.random.default_rng(11).uniform(-1, 1, 6 * 36)
    big, small = 1e-2 * theta, 5e-3 * theta
    assert delta_bound(big, sys932) == pytest.approx(8 * delta_bound(small, sys932))
    ratio = abs(fourier_log_error(big, sys932, m)) / abs(fourier_log_error(small, sys932, m))
    assert 4 < ratio < 20


# --- norms ---

def test_norms_zero_and_dual(k4):
    rep = norms(np.zeros(8), k4)
    assert rep.to_dict() == {"ii_inf": 0.0, "ii_2": 0.0, "iii_inf": 0.0, "iii_2": 0.0}
    rng = np.random.default_rng(5)
    for theta in _random_dual_points(k4, 3, rng, 10):
        rep = norms(theta, k4)
        assert rep.iii_inf == pytest.approx(0, abs=1e-9)
        assert rep.iii_2 == pytest.approx(0, abs=1e-9)


def test_norm_orderings(fano_system):
    rng = np.random.default_rng(6)
    for _ in range(1000):
        theta = rng.normal(scale=rng.uniform(0.01, 2), size=2 * 21)
        rep = norms(theta, fano_system)
        assert rep.iii_2 <= rep.iii_inf + 1e-12
        assert rep.iii_inf <= 0.5 + 1e-12
        assert rep.ii_2 <= rep.ii_inf + 1e-12
        assert rep.r_norm == rep.ii_2


def test_norm_constant_M(sys932):
    assert norm_constant_M(1, 1, 1.0) == pytest.approx(log(2) ** 1.5, rel=1e-12)
    assert norm_constant_M(36, 1, 1.0) == pytest.approx((36 * log(72)) ** 1.5, rel=1e-12)
    assert norm_constant_M(5, 2, 1.0) > norm_constant_M(4, 2, 1.0)
    assert norm_constant_M(4, 3, 1.0) > norm_constant_M(4, 2, 1.0)
    with pytest.raises(ValueError):
        norm_constant_M(4, 1, 0.0)


@pytest.mark.parametrize("n,k,t,l", [(4, 2, 1, 3), (6, 3, 1, 2), (7, 3, 2, 2)])
def test_norm_chain_at_calibrated_constant(n, k, t, l):
    sys_ = build_incidence(n, k, t)
    c_m = calibrate_norm_constant(sys_, 1)
    M = norm_constant_M(sys_.num_columns, 1, c_m)
    # rows of a design system all have leverage |A|/|B|
    assert M == pytest.approx(sqrt(sys_.num_columns))
    rng = np.random.default_rng(7)
    for _ in range(1000):
        theta = rng.normal(scale=rng.uniform(0.01, 2), size=(l - 1) * sys_.num_columns)
        rep = norms(theta, sys_)
        assert rep.ii_inf <= M * rep.ii_2 * (1 + 1e-9)
    # nonzero dual points have some integer pairing of size >= 1
    for theta in _random_dual_points(sys_, l, rng, 50):
        assert norms(theta, sys_).r_norm >= 1 / M - 1e-9
    assert ball_in_voronoi_radius(M) == pytest.approx(1 / (2 * M))


@pytest.mark.parametrize("n,k,t", [(4, 2, 1), (7, 3, 2)])
def test_norm_chain_fails_below_calibrated_constant(n, k, t):
    sys_ = build_incidence(n, k, t)
    M = norm_constant_M(sys_.num_columns, 1, 0.9 * calibrate_norm_constant(sys_, 1))
    witness = norm_ratio_witness(sys_)
    rep = norms(witness, sys_)
    assert rep.ii_inf > M * rep.ii_2
    # small enough that every pairing is its own fractional part
    small = norms(0.4 * witness, sys_)
    assert small.iii_inf > M * small.iii_2


def test_fractional_norm_chain_at_default_constant(fano_system):
    M = norm_constant_M(fano_system.num_columns, 1, Constants().norm)
    assert M >= sqrt(fano_system.num_blocks)
    rng = np.random.default_rng(12)
    for _ in range(1000):
        rep = norms(rng.normal(scale=rng.uniform(0.01, 2), size=2 * 21), fano_system)
        assert rep.iii_inf <= M * rep.iii_2 * (1 + 1e-9)


def test_max_norm_ratio_values(k4, fano_system):
    assert max_norm_ratio(k4) == pytest.approx(2.0)
    assert max_norm_ratio(fano_system) == pytest.approx(sqrt(21))
    general = IncidenceSystem(np.array([[1, 0], [0, 1], [0, 1], [0, 1]]), source="test")
    # the first row is the only one carrying column 0
    assert max_norm_ratio(general) == pytest.approx(2.0)


def test_dual_shift_recovers_lattice_point(k4):
    rng = np.random.default_rng(8)
    for point in _random_dual_points(k4, 3, rng, 10):
        theta = point + rng.normal(scale=0.01, size=8)
        shifted = dual_shift_product(theta, k4)
        assert shifted is not None
        assert np.allclose(shifted, point, atol=1e-7)
        assert norms(theta - shifted, k4).ii_2 == pytest.approx(norms(theta, k4).iii_2, abs=1e-9)


# --- f multiplier ---

def test_f_multiplier():
    assert f_multiplier([0.0, 0.0], 3) == pytest.approx(1)
    assert abs(f_multiplier([pi], 2)) < 1e-15
    assert check_f_bound([pi], 2)
    with pytest.raises(ValueError):
        f_multiplier([0.0], 3)


def test_f_bound_random():
    rng = np.random.default_rng(9)
    for l in (2, 3, 5, 8):
        for _ in range(10_000):
            assert check_f_bound(rng.uniform(-pi, pi, size=l - 1), l)
    with pytest.raises(ValueError):
        check_f_bound([4.0], 2)


def test_f_approx_is_cubic():
    rng = np.random.default_rng(10)
    for l in (2, 3, 4, 7):
        for _ in range(50):
            direction = rng.normal(size=l - 1)
            x = direction / np.abs(direction).max() * rng.uniform(0.05, 0.2)
            assert check_f_approx(x / 2, l) <= check_f_approx(x, l) / 6
    with pytest.raises(ValueError):
        check_f_approx([1.5], 2)


# --- bounds and the estimate ---

def test_epsilon_choice_clamps():
    eps, clamped = epsilon_choice(2.0, 10, 2, 1.0)
    assert clamped and eps == pytest.approx(0.25)
    eps, clamped = epsilon_choice(2.0, 10 ** 6, 1, 1.0)
    assert not clamped and eps == pytest.approx((2.0 * 10 ** 6) ** (-1 / 3))


def test_bounds_small_eps_limit(k4):
    m = covariance(k4, 3)
    b = bounds_I(1e-12, k4, 3, 2, m)
    fy = exp(log_gaussian_density_at_mean(m))
    assert b.i2 == pytest.approx(1 / 4)
    assert b.i3 == pytest.approx(2 * 2 ** 2 * fy)
    assert not b.violations


def test_bounds_golden_k4_l2(k4):
    m = covariance(k4, 2)
    M = norm_constant_M(4, 1, 1.0)
    eps = (M * 6) ** (-1 / 3)
    b = bounds_I(eps, k4, 2, 2, m, Constants())
    log_fy = -2 * log(2 * pi) - 0.5 * log(3 / 16)
    assert b.i1 == pytest.approx(exp(3 * log(2) + log(M) + 1.5 * log(4) - 0.5 * log(6) + log_fy))
    assert b.i2 == pytest.approx(exp(-6 * eps ** 2 / 4) / 2)
    assert b.i3 == pytest.approx(4 * exp(-pi ** 2 * 6 * eps ** 2 / 4) * exp(log_fy))
    # frozen values
    assert M == pytest.approx(23.98888, rel=1e-5)
    assert b.eps == pytest.approx(0.1908152, rel=1e-5)
    assert b.i1 == pytest.approx(36.665, rel=2e-3)
    assert b.i2 == pytest.approx(0.4734245, rel=1e-4)
    assert b.i3 == pytest.approx(0.136490, rel=1e-3)
    assert [v["condition"] for v in b.violations] == ["eps <= 1/(c3 M)"]


def test_bounds_violations_and_strict(k4):
    m = covariance(k4, 3)
    b = bounds_I(10.0, k4, 3, 1, m)
    assert {v["bound"] for v in b.violations} == {"I1", "I2"}
    with pytest.raises(PreconditionViolated) as info:
        bounds_I(10.0, k4, 3, 1, m, strict=True)
    assert info.value.lemma == "I1"


def test_estimate_k4_l3(k4):
    report = estimate_success_probability(k4, 3)
    expected = 4 * (2 * pi) ** -4 * sqrt(531441 / 2304)
    assert report.point_estimate == pytest.approx(expected, rel=1e-12)
    assert report.det_L_Phi_product == 4
    ratio = report.point_estimate / float(K4_L3_EXACT)
    assert 1 / 100 <= ratio <= 100
    assert ratio == pytest.approx(4.7359, rel=1e-4)
    assert report.c1 == 2 and report.c3_source == "design bound"
    assert not any(v.satisfied for v in report.thresholds)
    d = report.to_dict()
    assert d["pointEstimate"] > 0
    assert d["constants"] == Constants().to_dict()
    assert d["boundI1"] >= 0 and d["boundI2"] >= 0 and d["boundI3"] >= 0


def test_estimate_desk_scale_thresholds_fail(sys932):
    report = estimate_success_probability(sys932, 7)
    assert report.point_estimate > 0
    assert [v.name for v in report.thresholds] == ["large_set", "single_design"]
    assert not any(v.satisfied for v in report.thresholds)


def test_estimate_not_applicable(k4, sys932):
    with pytest.raises(NotApplicable):
        estimate_success_probability(k4, 2)
    with pytest.raises(NotApplicable):
        estimate_success_probability(sys932, 6)


def test_estimate_general_system_needs_c3():
    sys_ = IncidenceSystem(np.array([[1, 0], [0, 1], [1, 1], [2, 1]]), source="test")
    with pytest.raises(ParameterError):
        estimate_success_probability(sys_, 1)
    report = estimate_success_probability(sys_, 1, c3=3)
    assert report.c2 == 2 and report.c3_source == "user"


# --- Monte Carlo and exact oracles ---

def test_large_set_threshold_boundary():
    rhs = 2 ** 6 * 2 ** 6 * 2 ** 3 * log(2 * 1 * 2 * 2) ** 3
    at = theorem_main_threshold(1, 2, 2, 1, 2, 1.0)
    assert exp(at.log_rhs) == pytest.approx(rhs)
    above = theorem_main_threshold(int(rhs) + 2, 2, 2, 1, 2, 1.0)
    below = theorem_main_threshold(int(rhs) - 2, 2, 2, 1, 2, 1.0)
    assert above.satisfied and above.to_dict()["verdict"] is True
    assert not below.satisfied and below.to_dict()["verdict"] is False


def test_thresholds_with_huge_c3_stay_finite():
    v = theorem_main_threshold(10 ** 9, 36, 7, 1, 10 ** 300, 1.0)
    assert v.log_rhs > 2000 and not v.satisfied
    w = theorem_klp_threshold(12, 84, 36, 1, 10 ** 300, 1.0)
    assert w.lhs == 12 and not w.satisfied


def test_exact_hit_probability(k4):
    assert exact_hit_probability(k4, 3) == K4_L3_EXACT
    assert exact_hit_probability(k4, 2) == 0
    assert exact_hit_probability(k4, 1) == 1
    assert exact_hit_count(build_incidence(5, 2, 1), 2) == (12, 2 ** 10)


def test_exact_hit_cap(fano_system):
    with pytest.raises(CapExceeded):
        exact_hit_count(fano_system, 2, cap=1000)


def test_monte_carlo_k4(k4):
    result = monte_carlo_hit_probability(k4, 3, 100_000, seed=1)
    assert result.trials == 100_000
    assert abs(result.phat - float(K4_L3_EXACT)) <= 5 * result.stderr
    again = monte_carlo_hit_probability(k4, 3, 100_000, seed=1)
    assert again.hits == result.hits
    assert sum(r["hits"] for r in result.chunk_records()) == result.hits


def test_monte_carlo_trivial_cases(k4):
    one = monte_carlo_hit_probability(k4, 1, 50)
    assert one.phat == 1.0
    short = monte_carlo_hit_probability(k4, 2, 1000)
    assert short.short_circuit and short.trials == 0 and short.phat == 0.0


def test_monte_carlo_workers_do_not_change_counts(k4):
    serial = monte_carlo_hit_probability(k4, 3, 20_000, seed=4, chunk_trials=2_000)
    pooled = monte_carlo_hit_probability(k4, 3, 20_000, seed=4, chunk_trials=2_000, workers=2)
    assert serial.hits == pooled.hits
    assert serial.chunk_records() == pooled.chunk_records()
