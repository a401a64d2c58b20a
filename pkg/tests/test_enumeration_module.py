from fractions import Fraction
from itertools import combinations_with_replacement
from math import gcd

import numpy as np
import pytest

from arith_module import InvalidInputError
from enumeration_module import (
    Enumerator,
    b_exceptional_candidates,
    bar_rows,
    dedupe_multisets,
    divisors,
    members_for_r,
    paired_weights,
    run_tasks,
    sorted_tuples,
    structured_tuples,
    toric_minima,
    units,
    window_for,
)
from singularity_module import CyclicQuotient, b_exceptional_indices, mld


def _square(x):
    return x * x


def test_units():
    assert units(14) == [1, 3, 5, 9, 11, 13]
    assert units(1) == []


def test_divisors():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]


def test_run_tasks_keeps_order_inline_and_pooled():
    tasks = list(range(20))
    assert run_tasks(_square, tasks, jobs=1, progress=False) == [t * t for t in tasks]
    assert run_tasks(_square, tasks, jobs=2, progress=False) == [t * t for t in tasks]


def test_run_tasks_rejects_zero_jobs():
    with pytest.raises(InvalidInputError):
        run_tasks(_square, [1], jobs=0)


def test_sorted_tuples_match_itertools():
    values = [1, 2, 4, 5, 7]
    rows = sorted_tuples(values, 3, 8, 12)
    expected = [c for c in combinations_with_replacement(values, 3) if 8 <= sum(c) <= 12]
    assert [tuple(row) for row in rows.tolist()] == expected


def test_sorted_tuples_empty_window():
    assert sorted_tuples([1, 2], 3, 10, 20).shape == (0, 3)


def test_paired_weights_have_equal_gcd():
    pairs = paired_weights(12)
    assert len(pairs)
    for a, b in pairs.tolist():
        assert a <= b and gcd(a, 12) == gcd(b, 12)


def test_structured_tuples_shape():
    r = 14
    for block in structured_tuples(r, 2 * r - 3, 2 * r - 1):
        assert block.shape[1] == 5
        sums = block.sum(axis=1)
        assert ((sums >= 2 * r - 3) & (sums <= 2 * r - 1)).all()
        assert all(gcd(int(a), r) == 1 for a in block[:, :3].ravel())


def test_toric_minima_agree_with_scalar_mld():
    r = 13
    rows = sorted_tuples(range(1, r), 3, 3, 3 * (r - 1))
    minima = toric_minima(r, rows)
    for row, low in zip(rows.tolist()[:200], minima.tolist()[:200]):
        assert Fraction(low, r) == mld(CyclicQuotient(r, tuple(row))).value


def test_bar_rows():
    rows = np.array([[3, 4, 5], [2, 2, 2]], dtype=np.int64)
    # 1/13(2,2,2) has its minimum at j = 7
    assert bar_rows(13, rows).tolist() == [[3, 4, 5]]


def test_dedupe_multisets():
    rows = np.array([[2, 1, 3], [1, 2, 3], [3, 3, 1]], dtype=np.int64)
    assert dedupe_multisets(rows).tolist() == [[1, 2, 3], [1, 3, 3]]


def test_window_for_bar_and_eps():
    assert window_for(19, False, None) == (5, 90)
    assert window_for(19, True, None) == (5, 37)
    assert window_for(19, True, Fraction(1, 13)) == (37, 37)


def test_b_candidates_have_single_exceptional_index():
    r = 14
    found = b_exceptional_candidates(r)
    assert ((1, 9, 10, 11), 2) in found
    for weights, e in found[:300]:
        assert len(b_exceptional_indices(r, weights, e)) == 1


def test_members_for_r_of_the_level_four_survivor():
    found = members_for_r((4, 19, "1/13", True))
    assert [item["singularity"] for item in found] == [{"r": 19, "weights": [3, 4, 5, 7, 18]}]
    assert found[0]["membership"]["mld"] == "37/19"


class TestEnumerator:
    def test_parameter_checks(self):
        enumerator = Enumerator(progress=False)
        with pytest.raises(InvalidInputError):
            enumerator.members(6, None, 1, 10, False)
        with pytest.raises(InvalidInputError):
            enumerator.members(1, None, 10, 5, False)
        with pytest.raises(InvalidInputError):
            enumerator.members(1, Fraction(3), 1, 5, False)

    def test_smooth_point_is_not_a_member(self):
        assert Enumerator(progress=False).members(1, Fraction(1), 1, 1, False) == []

    def test_isolated_level_five_with_gap_is_empty(self):
        assert Enumerator(progress=False).members(5, Fraction(1, 19), 1, 30, False) == []

    def test_jobs_do_not_change_the_result(self):
        one = Enumerator(jobs=1, progress=False).members(4, Fraction(1, 13), 14, 20, True)
        two = Enumerator(jobs=2, progress=False).members(4, Fraction(1, 13), 14, 20, True)
        assert one == two

    @pytest.mark.slow
    def test_level_four_bar_members_up_to_51(self):
        found = Enumerator(jobs=2, progress=False).members(4, Fraction(1, 13), 1, 51, True)
        keys = sorted(CyclicQuotient.from_dict(item["singularity"]).key() for item in found)
        assert keys == [(14, (2, 3, 4, 5, 13)), (17, (2, 3, 5, 7, 16)), (19, (3, 4, 5, 7, 18))]
