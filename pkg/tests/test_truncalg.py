from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcentral import truncalg as ta
from pcentral.words import commutator, gen, parse_word, power, reduce

P, N, M = 3, 2, 4
letters = st.lists(st.sampled_from([1, 2, -1, -2]), max_size=10).map(lambda ls: reduce(ls, N))


def units(p=P, n=N, m=M, w=1):
    return st.integers(0, 2**32 - 1).map(lambda s: ta.unit_samples(p, n, m, w, np.random.default_rng(s)))


def test_witt_numbers_rank_two():
    assert ta.witt_numbers(2, 5) == [2, 1, 2, 3, 6]
    assert ta.witt_numbers(3, 4) == [3, 3, 8, 18]


@pytest.mark.parametrize(
    "p,n,k,dims",
    [(2, 2, 4, [2, 3, 2, 6]), (3, 2, 3, [2, 1, 4]), (2, 3, 3, [3, 6, 8]), (5, 2, 5, [2, 1, 2, 3, 8])],
)
def test_jennings_dims_frozen(p, n, k, dims):
    d, orders = ta.jennings_dims(p, n, k)
    assert d == dims
    assert orders[-1] == p ** sum(dims)


def test_generator_and_commutator_images():
    g = ta.eval_word(gen(1, 2), 2, 2, 3)
    assert ta.format_series(g) == "1 + X1"
    c = ta.eval_word(commutator(gen(1, 2), gen(2, 2)), 2, 2, 3)
    assert ta.zweight(c) == 2
    assert ta.format_series(ta.eval_word(parse_word("x1^2", 2), 2, 2, 3)) == "1 + X1 X1"


def test_pth_power_of_generator_in_char_p():
    u = ta.eval_word(power(gen(1, 2), 3), 3, 2, 4)
    assert u.to_dict() == {(): 1, (1, 1, 1): 1}
    assert ta.zweight(u) == 3


def test_zweight_of_one_is_infinite():
    assert ta.zweight(ta.TruncSeries.one(2, 2, 3)) == math.inf


def test_param_mismatch_raises():
    with pytest.raises(ta.ParamMismatch):
        ta.smul(ta.TruncSeries.one(2, 2, 3), ta.TruncSeries.one(3, 2, 3))


def test_budget_guard():
    with pytest.raises(ta.BudgetExceeded):
        ta.check_budget(3, 9)
    ta.check_budget(2, 8)
    ta.check_budget(3, 4)


@given(letters, letters)
def test_eval_word_is_multiplicative(u, v):
    assert ta.eval_word(u * v, P, N, M) == ta.smul(ta.eval_word(u, P, N, M), ta.eval_word(v, P, N, M))


@given(units(), units(), units())
def test_smul_associative(a, b, c):
    assert ta.smul(ta.smul(a, b), c) == ta.smul(a, ta.smul(b, c))


@given(units())
def test_unit_inverse(u):
    one = ta.TruncSeries.one(P, N, M)
    assert ta.smul(u, ta.unit_inv(u)) == one == ta.smul(ta.unit_inv(u), u)


@given(units(w=1), units(w=2))
def test_commutator_weight_adds(a, b):
    c = ta.group_commutator(a, b)
    assert ta.zweight(c) >= min(ta.zweight(a) + ta.zweight(b), M + 1)


@given(units(w=1))
def test_pth_power_multiplies_weight(a):
    assert ta.zweight(ta.power(a, P)) >= min(P * ta.zweight(a), M + 1)


@given(units(), st.integers(-5, 5), st.integers(-5, 5))
def test_power_law(u, a, b):
    assert ta.smul(ta.power(u, a), ta.power(u, b)) == ta.power(u, a + b)


@given(st.integers(0, 2**32 - 1))
def test_batched_multiplication_matches_scalar(seed):
    rng = np.random.default_rng(seed)
    us = [ta.unit_samples(P, N, M, 1, rng) for _ in range(6)]
    A = np.stack([ta.row_from_series(u) for u in us[:3]])
    B = np.stack([ta.row_from_series(u) for u in us[3:]])
    C = ta.mul_batch(A, B, P, N, M)
    for i in range(3):
        assert ta.series_from_row(C[i], P, N, M) == ta.smul(us[i], us[3 + i])
