# tests/test_setsys.py
import json
import math
from math import comb

import numpy as np
import pytest

from src.setsys.colex import RankOutOfRange, iter_colex, rank_colex, unrank_colex
from src.setsys.divisibility import (
    NonIntegralLambda,
    c3_design_bound,
    check_design_divisibility,
    check_largeset_divisibility,
    design_size,
    lambda_of,
    largeset_part_size,
)
from src.setsys.incidence import (
    InstanceParams,
    ParameterError,
    SizeCapExceeded,
    build_incidence,
    c2_bound,
    load_matrix_system,
)


def test_colex_order_starts_with_small_top_elements():
    assert list(iter_colex(5, 2))[:4] == [(0, 1), (0, 2), (1, 2), (0, 3)]


def test_rank_unrank_are_inverse_and_follow_iteration_order():
    for r, kset in enumerate(iter_colex(8, 3)):
        assert rank_colex(kset) == r
        assert unrank_colex(r, 8, 3) == kset
    assert r == comb(8, 3) - 1


def test_unrank_out_of_range():
    with pytest.raises(RankOutOfRange):
        unrank_colex(comb(6, 2), 6, 2)
    with pytest.raises(RankOutOfRange):
        unrank_colex(-1, 6, 2)


def test_build_incidence_k4(k4):
    assert k4.matrix.shape == (6, 4)
    assert (k4.matrix.sum(axis=1) == 2).all()
    assert (k4.column_sums() == 3).all()
    assert k4.block(0) == (0, 1)
    assert k4.column_label(3) == [4]


def test_build_incidence_column_sums_932(sys932):
    assert sys932.matrix.shape == (84, 36)
    assert (sys932.column_sums() == 7).all()
    assert (sys932.matrix.sum(axis=1) == comb(3, 2)).all()


def test_incidence_is_read_only(k4):
    with pytest.raises(ValueError):
        k4.matrix[0, 0] = 5


def test_incidence_cap():
    with pytest.raises(SizeCapExceeded):
        build_incidence(20, 10, 2, cap=1000)


@pytest.mark.parametrize("n,k,t", [(5, 2, 2), (4, 5, 1), (5, 3, 0)])
def test_bad_parameters(n, k, t):
    with pytest.raises(ParameterError):
        build_incidence(n, k, t)


def test_largeset_divisibility_932():
    ok = check_largeset_divisibility(InstanceParams(9, 3, 2, 7))
    assert [c.s for c in ok.checks] == [0, 1, 2]
    assert ok.passed

    bad = check_largeset_divisibility(InstanceParams(9, 3, 2, 6))
    assert not bad.passed
    assert not bad.checks[2].passed
    assert bad.checks[2].divisor == 6 and bad.checks[2].dividend == 7


def test_design_divisibility():
    assert check_design_divisibility(7, 3, 2, 1).passed
    bad = check_design_divisibility(8, 3, 2, 1)
    assert not bad.passed
    # 2 does not divide 7 at s = 1 (s = 0 fails as well: 3 does not divide 28)
    assert not bad.checks[1].passed
    assert (bad.checks[1].divisor, bad.checks[1].dividend) == (2, 7)
    assert bad.first_failure().s == 0


def test_sizes_and_lambda():
    assert design_size(7, 3, 2, 1) == 7
    assert design_size(9, 3, 2, 1) == 12
    assert largeset_part_size(InstanceParams(9, 3, 2, 7)) == 12
    assert lambda_of(InstanceParams(9, 3, 2, 7)) == 1
    assert lambda_of(InstanceParams(4, 2, 1, 3)) == 1
    with pytest.raises(NonIntegralLambda):
        lambda_of(InstanceParams(9, 3, 2, 6))
    with pytest.raises(ParameterError):
        design_size(8, 3, 2, 1)


def test_c3_design_bound():
    # (4 e n / t)^t rounded up
    assert c3_design_bound(9, 2) == math.ceil((4 * math.e * 9 / 2) ** 2) == 2395
    assert c3_design_bound(4, 1) == math.ceil(16 * math.e)


def test_c2_bound(k4, tmp_path):
    assert c2_bound(k4) == 1
    path = tmp_path / "m.json"
    path.write_text(json.dumps([[1, -3], [2, 0]]))
    assert c2_bound(load_matrix_system(path)) == 3


def test_load_matrix_system(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps([[1, 0, 1], [0, 1, 1]]))
    sys_ = load_matrix_system(path)
    assert not sys_.is_design
    assert sys_.num_blocks == 2 and sys_.num_columns == 3
    assert np.array_equal(sys_.column_sums(), [1, 1, 2])


@pytest.mark.parametrize("payload,where", [
    ([[1, 0], [1]], "row [1]"),
    ([[1, 0], [1, 0.5]], "entry [1][1]"),
    ([[1, 0], [0, 2 ** 70]], "entry [1][1] does not fit"),
    ([[1, True]], "entry [0][1]"),
    ([], "non-empty"),
])
def test_load_matrix_system_rejects(tmp_path, payload, where):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ParameterError, match=where.replace("[", r"\[").replace("]", r"\]")):
        load_matrix_system(path)
