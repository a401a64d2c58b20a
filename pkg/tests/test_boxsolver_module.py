import random
from fractions import Fraction as F

import pytest

from arith_module import InvalidInputError, InvariantBreachError, floor_mul
from boxsolver_module import (
    Box,
    BoxSet,
    BoxSolver,
    FloorSystem,
    Interval,
    PairSumFilter,
    boxset_normalize,
    brute_oracle,
    oracle_grid,
    ordered_feasible,
    pair_sum_feasible,
    refine_step,
    seed_boxset,
    solve,
)
from theorem_module import a2_system, a4_system, a6_system, d213_system


def box(*pairs):
    return Box(tuple(Interval(F(lo), F(hi)) for lo, hi in pairs))


class TestInterval:
    def test_rejects_empty_or_out_of_range(self):
        with pytest.raises(InvalidInputError):
            Interval(F(1, 2), F(1, 2))
        with pytest.raises(InvalidInputError):
            Interval(F(-1, 2), F(1, 2))
        with pytest.raises(InvalidInputError):
            Interval(F(0), F(3, 2))

    def test_split_is_floor_constant(self):
        pieces = Interval(F(0), F(1)).split(3)
        assert pieces == [
            (Interval(F(0), F(1, 3)), 0),
            (Interval(F(1, 3), F(2, 3)), 1),
            (Interval(F(2, 3), F(1)), 2),
        ]

    def test_split_of_inner_interval(self):
        pieces = Interval(F(1, 4), F(1, 2)).split(5)
        assert pieces == [(Interval(F(1, 4), F(2, 5)), 1), (Interval(F(2, 5), F(1, 2)), 2)]

    def test_half_open(self):
        iv = Interval(F(1, 3), F(1, 2))
        assert iv.contains(F(1, 3))
        assert not iv.contains(F(1, 2))


class TestBox:
    def test_within_closure(self):
        b = box(("2/13", "3/19"))
        assert b.within_closure([(F(2, 13), F(3, 19))])
        assert not b.within_closure([(F(1, 7), F(3, 20))])

    def test_sample_points_lie_inside(self):
        b = box(("1/5", "1/3"), ("2/5", "3/5"))
        assert all(b.contains(p) for p in b.sample_points())

    def test_ordered_feasibility(self):
        assert ordered_feasible(box(("0", "1/2"), ("1/4", "1/2")))
        assert not ordered_feasible(box(("1/2", "1"), ("0", "1/2")))
        assert not ordered_feasible(box(("1/3", "1/2"), ("1/4", "1/3")))


class TestFloorSystem:
    def test_equations_are_sorted(self):
        system = FloorSystem(1, ((3, 1), (2, 0)))
        assert [eq.n for eq in system.equations] == [2, 3]

    @pytest.mark.parametrize("kwargs", [
        {"free_dim": 0, "equations": ((2, 1),)},
        {"free_dim": 1, "equations": ((2, 1), (2, 0))},
        {"free_dim": 1, "equations": ((0, 1),)},
        {"free_dim": 1, "equations": ((3, 1),), "skip_modulus": 3},
        {"free_dim": 1, "equations": ((2, 1),), "fixed": (F(1),)},
        {"free_dim": 1, "equations": ((2, 1),), "order_filter": "sometimes"},
        {"free_dim": 2, "equations": ((2, 1),), "pair_sum_filters": (PairSumFilter(0, 2, (F(1, 2),)),)},
    ])
    def test_invalid_systems(self, kwargs):
        with pytest.raises(InvalidInputError):
            FloorSystem(**kwargs)

    def test_from_dict(self):
        system = FloorSystem.from_dict({
            "free_dim": 3,
            "fixed": ["1/5", "2/5"],
            "skip_modulus": 5,
            "ordered": True,
            "equations": [{"n": 2, "rhs": 1}, {"n": 3, "rhs": 3}],
            "pair_sum_filters": [{"i": 0, "j": 1, "sums": ["1/2"]}],
        })
        assert system.fixed == (F(1, 5), F(2, 5))
        assert system.total_dim == 5
        assert FloorSystem.from_dict(system.to_dict()) == system

    @pytest.mark.parametrize("data", [
        {"free_dim": 1},
        {"free_dim": "1", "equations": [{"n": 2, "rhs": 1}]},
        {"free_dim": 1, "equations": [{"n": 2.0, "rhs": 1}]},
        {"free_dim": 1, "equations": [{"n": 2, "rhs": 1}], "fixed": ["0.5"]},
        {"free_dim": 1, "equations": [{"n": 2, "rhs": 1}], "ordered": "yes"},
        [1, 2, 3],
    ])
    def test_from_dict_rejects_malformed(self, data):
        with pytest.raises(InvalidInputError):
            FloorSystem.from_dict(data)


class TestSolve:
    def test_one_dimensional(self):
        result = solve(FloorSystem(1, ((2, 1),)))
        assert result.to_dict()["boxes"] == [[["1/2", "1"]]]

    def test_two_equations_intersect(self):
        result = boxset_normalize(solve(FloorSystem(1, ((2, 0), (3, 1)))))
        assert result.to_dict()["boxes"] == [[["1/3", "1/2"]]]

    def test_fixed_coordinates_shift_the_target(self):
        # floor(2x) + floor(2 * 3/4) = 1 forces x < 1/2
        result = solve(FloorSystem(1, ((2, 1),), fixed=(F(3, 4),)))
        assert result.to_dict()["boxes"] == [[["0", "1/2"]]]

    def test_first_step_of_the_five_variable_system(self):
        steps = {}
        result = solve(a2_system(), on_step=lambda n, bs: steps.setdefault(n, bs))
        assert result.is_empty()
        assert steps[2].to_dict()["boxes"] == [[["0", "1/2"]] * 4 + [["1/2", "1"]]]

    def test_three_variable_system_is_empty(self):
        steps = {}
        assert solve(a6_system(), on_step=lambda n, bs: steps.setdefault(n, bs)).is_empty()
        assert steps[2].to_dict()["boxes"] == [[["0", "1/2"]] * 3]

    def test_pair_sum_condition_kills_every_box(self):
        assert solve(d213_system()).is_empty()

    def test_order_filter_placement_does_not_change_the_set(self):
        per_step = a4_system(5, 1, 2)
        final = FloorSystem(per_step.free_dim, per_step.equations, per_step.fixed, per_step.skip_modulus,
                            ordered=True, order_filter="final")
        a = boxset_normalize(solve(per_step))
        b = boxset_normalize(solve(final))
        points = [p for p in brute_oracle(per_step, 12)]
        assert all(a.contains(p) == b.contains(p) for p in points)

    def test_refinement_keeps_only_satisfying_boxes(self):
        system = FloorSystem(2, ((2, 1), (3, 2)))
        result = solve(system)
        solver = BoxSolver()
        assert solver.unsound_samples(system, result) == []
        assert solver.missed_oracle_points(system, result, 12) == []
        assert not result.is_empty()

    def test_refine_step_on_empty_set(self):
        empty = BoxSet(2)
        assert refine_step(empty, 3, 1).is_empty()

    def test_unreachable_rhs(self):
        assert refine_step(seed_boxset(2), 2, 3).is_empty()


class TestPairSums:
    def test_free_pair(self):
        b = box(("0", "1/3"), ("1/5", "1/3"))
        assert pair_sum_feasible(b, 0, 1, F(1, 2))
        assert not pair_sum_feasible(b, 0, 1, F(2, 3))

    def test_with_fixed_coordinate(self):
        b = box(("1/4", "1/3"),)
        assert pair_sum_feasible(b, 0, 1, F(1, 2), fixed=(F(1, 4),))
        assert not pair_sum_feasible(b, 0, 1, F(1, 2), fixed=(F(1, 3),))

    def test_two_fixed_coordinates_need_exact_sum(self):
        b = box(("0", "1"),)
        assert pair_sum_feasible(b, 1, 2, F(1, 2), fixed=(F(1, 4), F(1, 4)))
        assert not pair_sum_feasible(b, 1, 2, F(1, 3), fixed=(F(1, 4), F(1, 4)))


class TestNormalize:
    def test_merges_abutting_boxes(self):
        bs = BoxSet(2, [box(("1/2", "1"), ("0", "1/2")), box(("0", "1/2"), ("0", "1/2"))])
        assert boxset_normalize(bs).to_dict()["boxes"] == [[["0", "1"], ["0", "1/2"]]]

    def test_keeps_non_abutting_boxes_sorted(self):
        bs = BoxSet(1, [box(("2/3", "1"),), box(("0", "1/3"),)])
        assert boxset_normalize(bs).to_dict()["boxes"] == [[["0", "1/3"]], [["2/3", "1"]]]

    def test_overlap_is_an_invariant_breach(self):
        bs = BoxSet(1, [box(("0", "1/2"),), box(("1/3", "1"),)])
        with pytest.raises(InvariantBreachError):
            boxset_normalize(bs)

    def test_dimension_mismatch(self):
        with pytest.raises(InvariantBreachError):
            BoxSet(2, [box(("0", "1"),)])

    def test_round_trip_through_dict(self):
        bs = BoxSet(1, [box(("1/3", "1/2"),)])
        assert BoxSet.from_dict(bs.to_dict()) == bs


class TestOracle:
    def test_grid_contains_fractions_and_midpoints(self):
        grid = oracle_grid(3)
        assert F(1, 3) in grid and F(2, 3) in grid
        assert F(1, 6) in grid
        assert all(0 <= x < 1 for x in grid)
        assert grid == sorted(grid)

    def test_oracle_points_satisfy_system(self):
        system = FloorSystem(1, ((2, 0), (3, 1)))
        points = brute_oracle(system, 6)
        assert points
        assert all(system.satisfied_by(p) for p in points)
        assert (F(1, 3),) in points and (F(1, 2),) not in points

    def test_oracle_matches_naive_scan(self):
        system = FloorSystem(2, ((2, 1), (3, 2)), ordered=True)
        grid = oracle_grid(7)
        naive = sorted((x, y) for x in grid for y in grid if system.satisfied_by((x, y)))
        assert brute_oracle(system, 7) == naive

    def test_oracle_for_empty_systems(self):
        assert brute_oracle(a6_system(), 13) == []

    def test_oracle_needs_grid(self):
        with pytest.raises(InvalidInputError):
            brute_oracle(FloorSystem(1, ((2, 1),)), 1)

    def test_oracle_matches_naive_scan_in_three_dimensions(self):
        filters = (PairSumFilter(0, 3, (F(1), F(3, 2))),)
        system = FloorSystem(3, ((2, 2), (3, 4), (5, 6)), fixed=(F(1, 2),), pair_sum_filters=filters)
        grid = oracle_grid(6)
        naive = sorted((x, y, z) for x in grid for y in grid for z in grid if system.satisfied_by((x, y, z)))
        assert naive
        assert brute_oracle(system, 6) == naive

    def test_ordered_oracle_keeps_ties(self):
        system = FloorSystem(3, ((2, 0), (3, 0)), ordered=True)
        points = brute_oracle(system, 4)
        assert (F(0), F(0), F(0)) in points
        assert all(p[0] <= p[1] <= p[2] for p in points)

    @pytest.mark.slow
    def test_oracle_for_the_five_variable_system(self):
        assert brute_oracle(a2_system(), 19) == []


def random_system(rng, max_n=10):
    """At most three coordinates; right-hand sides read off a random point so most systems are solvable."""
    free_dim = rng.randint(1, 3)
    fixed = tuple(F(rng.randint(0, q - 1), q) for q in (rng.randint(2, 9) for _ in range(rng.randint(0, 3 - free_dim))))
    point = [F(rng.randint(0, 59), 60) for _ in range(free_dim)] + list(fixed)
    equations = tuple(
        (n, sum(floor_mul(n, x) for x in point) + rng.choice((0, 0, 0, 1)))
        for n in sorted(rng.sample(range(1, max_n + 1), rng.randint(1, 4)))
    )
    return FloorSystem(free_dim, equations, fixed=fixed, ordered=rng.random() < 0.5)


def assert_matches_oracle(system, max_denominator):
    solver = BoxSolver()
    boxes = solver.solve(system)
    assert solver.unsound_samples(system, boxes) == [], system
    assert solver.missed_oracle_points(system, boxes, max_denominator) == [], system
    assert all(system.satisfied_by(p) for p in brute_oracle(system, max_denominator))


class TestRandomSystems:
    @pytest.mark.parametrize("seed", range(20))
    def test_solver_agrees_with_oracle(self, seed):
        rng = random.Random(seed)
        assert_matches_oracle(random_system(rng), rng.randint(2, 12))

    @pytest.mark.slow
    def test_two_hundred_systems(self):
        rng = random.Random(2024)
        for _ in range(200):
            assert_matches_oracle(random_system(rng), rng.randint(2, 30))
