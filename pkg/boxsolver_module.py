"""
Box Solver Module for mldlab
Exact solver for systems of floor-sum equations over products of half-open rational intervals,
with fixed coordinates, a skip modulus, ordering and pair-sum filters, and a brute-force grid oracle.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from arith_module import (
    InvalidInputError,
    InvariantBreachError,
    floor_mul,
    parse_rational,
    to_text,
)

logger = logging.getLogger(__name__)

ORDER_FILTERS = ("per_step", "final")

StepCallback = Callable[[int, "BoxSet"], None]


def _ceil_mul(n: int, x: Fraction) -> int:
    return -((-n * x.numerator) // x.denominator)


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open rational interval [lo, hi) inside [0, 1]."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if not 0 <= self.lo < self.hi <= 1:
            raise InvalidInputError(f"interval [{self.lo}, {self.hi}) violates 0 <= lo < hi <= 1")

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x < self.hi

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def split(self, n: int) -> List[Tuple["Interval", int]]:
        """
        Cut at every interior point m/n; floor(n x) is constant on each piece.

        Returns:
            List of (piece, floor value on piece) in increasing order
        """
        base = floor_mul(n, self.lo)
        cuts = [self.lo]
        cuts.extend(Fraction(m, n) for m in range(base + 1, _ceil_mul(n, self.hi)))
        cuts.append(self.hi)
        return [(Interval(cuts[k], cuts[k + 1]), base + k) for k in range(len(cuts) - 1)]

    def to_list(self) -> List[str]:
        return [to_text(self.lo), to_text(self.hi)]

    @classmethod
    def from_list(cls, pair: Sequence[Any]) -> "Interval":
        if len(pair) != 2:
            raise InvalidInputError(f"an interval is a [lo, hi] pair, got {pair!r}")
        return cls(parse_rational(pair[0]), parse_rational(pair[1]))

    def __str__(self) -> str:
        return f"[{to_text(self.lo)},{to_text(self.hi)})"


@dataclass(frozen=True, order=True)
class Box:
    intervals: Tuple[Interval, ...]

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if not self.intervals:
            raise InvalidInputError("a box needs at least one interval")

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def contains(self, point: Sequence[Fraction]) -> bool:
        return len(point) == self.dim and all(iv.contains(x) for iv, x in zip(self.intervals, point))

    def midpoint(self) -> Tuple[Fraction, ...]:
        return tuple(iv.midpoint() for iv in self.intervals)

    def sample_points(self) -> List[Tuple[Fraction, ...]]:
        """Lower corner, midpoint and every corner pulled inward by an eighth of the width."""
        points = [tuple(iv.lo for iv in self.intervals), self.midpoint()]
        inward = [((iv.lo + (iv.hi - iv.lo) / 8), (iv.hi - (iv.hi - iv.lo) / 8)) for iv in self.intervals]
        points.extend(product(*inward))
        return points

    def within_closure(self, others: Sequence[Tuple[Fraction, Fraction]]) -> bool:
        """True iff every interval lies inside the closed interval [a, b] given per coordinate."""
        return all(a <= iv.lo and iv.hi <= b for iv, (a, b) in zip(self.intervals, others))

    def sort_key(self) -> Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...]]:
        return tuple(iv.lo for iv in self.intervals), tuple(iv.hi for iv in self.intervals)

    def to_list(self) -> List[List[str]]:
        return [iv.to_list() for iv in self.intervals]

    def __str__(self) -> str:
        return "(" + ", ".join(str(iv) for iv in self.intervals) + ")"


@dataclass
class BoxSet:
    """Disjoint union of boxes of equal dimension."""

    dim: int
    boxes: List[Box] = field(default_factory=list)

    def __post_init__(self):
        for box in self.boxes:
            if box.dim != self.dim:
                raise InvariantBreachError(f"box {box} has dimension {box.dim}, expected {self.dim}")

    def __len__(self) -> int:
        return len(self.boxes)

    def __iter__(self):
        return iter(self.boxes)

    def is_empty(self) -> bool:
        return not self.boxes

    def contains(self, point: Sequence[Fraction]) -> bool:
        return any(box.contains(point) for box in self.boxes)

    def to_dict(self) -> Dict[str, Any]:
        return {"dim": self.dim, "boxes": [box.to_list() for box in self.boxes]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BoxSet":
        try:
            boxes = [Box(tuple(Interval.from_list(pair) for pair in raw)) for raw in data["boxes"]]
            return cls(int(data["dim"]), boxes)
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"malformed box set: {e}") from e


class Equation(NamedTuple):
    n: int
    rhs: int


@dataclass(frozen=True)
class PairSumFilter:
    i: int
    j: int
    sums: Tuple[Fraction, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"i": self.i, "j": self.j, "sums": [to_text(s) for s in self.sums]}


def _strict_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidInputError(f"{name} must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class FloorSystem:
    """
    A constraint program sum_free floor(n x_i) + sum_fixed floor(n v) = rhs, one per equation.

    Coordinates are numbered free first, then fixed. Equations are kept sorted by n.
    """

    free_dim: int
    equations: Tuple[Equation, ...]
    fixed: Tuple[Fraction, ...] = ()
    skip_modulus: Optional[int] = None
    ordered: bool = False
    pair_sum_filters: Tuple[PairSumFilter, ...] = ()
    order_filter: str = "per_step"

    def __post_init__(self):
        object.__setattr__(self, "fixed", tuple(Fraction(v) for v in self.fixed))
        equations = tuple(sorted(Equation(int(n), int(rhs)) for n, rhs in self.equations))
        object.__setattr__(self, "equations", equations)
        object.__setattr__(self, "pair_sum_filters", tuple(self.pair_sum_filters))
        if self.free_dim < 1:
            raise InvalidInputError(f"free_dim must be positive, got {self.free_dim}")
        indices = [eq.n for eq in equations]
        if any(n < 1 for n in indices):
            raise InvalidInputError(f"equation indices must be positive, got {indices}")
        if len(set(indices)) != len(indices):
            raise InvalidInputError(f"equation indices must be distinct, got {indices}")
        if self.skip_modulus is not None:
            if self.skip_modulus < 2:
                raise InvalidInputError(f"skip_modulus must be at least 2, got {self.skip_modulus}")
            clashing = [n for n in indices if n % self.skip_modulus == 0]
            if clashing:
                raise InvalidInputError(f"equations {clashing} are divisible by skip_modulus {self.skip_modulus}")
        for v in self.fixed:
            if not 0 <= v < 1:
                raise InvalidInputError(f"fixed coordinate {v} outside [0, 1)")
        for flt in self.pair_sum_filters:
            if flt.i == flt.j or not (0 <= flt.i < self.total_dim and 0 <= flt.j < self.total_dim):
                raise InvalidInputError(f"pair-sum filter indices ({flt.i}, {flt.j}) invalid for {self.total_dim} coordinates")
        if self.order_filter not in ORDER_FILTERS:
            raise InvalidInputError(f"order_filter must be one of {ORDER_FILTERS}, got {self.order_filter!r}")

    @property
    def total_dim(self) -> int:
        return self.free_dim + len(self.fixed)

    def satisfied_by(self, point: Sequence[Fraction]) -> bool:
        """Exact pointwise check of every equation, the ordering and the pair-sum filters."""
        full = tuple(point) + self.fixed
        for n, rhs in self.equations:
            if sum(floor_mul(n, x) for x in full) != rhs:
                return False
        if self.ordered and any(point[k] > point[k + 1] for k in range(self.free_dim - 1)):
            return False
        if self.pair_sum_filters:
            return any(full[flt.i] + full[flt.j] in flt.sums for flt in self.pair_sum_filters)
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "free_dim": self.free_dim,
            "fixed": [to_text(v) for v in self.fixed],
            "skip_modulus": self.skip_modulus,
            "ordered": self.ordered,
            "order_filter": self.order_filter,
            "equations": [{"n": eq.n, "rhs": eq.rhs} for eq in self.equations],
            "pair_sum_filters": [flt.to_dict() for flt in self.pair_sum_filters],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FloorSystem":
        """
        Parse the JSON form of a floor system.

        Raises:
            InvalidInputError: on missing keys, wrong types, decimal fractions or invalid values
        """
        if not isinstance(data, dict):
            raise InvalidInputError(f"a floor system must be a JSON object, got {type(data).__name__}")
        try:
            equations = [(_strict_int(e["n"], "n"), _strict_int(e["rhs"], "rhs")) for e in data["equations"]]
            filters = [
                PairSumFilter(_strict_int(f["i"], "i"), _strict_int(f["j"], "j"),
                              tuple(parse_rational(s) for s in f["sums"]))
                for f in data.get("pair_sum_filters", [])
            ]
            skip = data.get("skip_modulus")
            ordered = data.get("ordered", False)
            if not isinstance(ordered, bool):
                raise InvalidInputError(f"ordered must be a boolean, got {ordered!r}")
            return cls(
                free_dim=_strict_int(data["free_dim"], "free_dim"),
                equations=tuple(equations),
                fixed=tuple(parse_rational(v) for v in data.get("fixed", [])),
                skip_modulus=None if skip is None else _strict_int(skip, "skip_modulus"),
                ordered=ordered,
                pair_sum_filters=tuple(filters),
                order_filter=data.get("order_filter", "per_step"),
            )
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"malformed floor system: missing or mistyped field {e}") from e


def seed_boxset(free_dim: int) -> BoxSet:
    """The unit cube [0,1)^free_dim as a one-box set."""
    return BoxSet(free_dim, [Box(tuple(Interval(Fraction(0), Fraction(1)) for _ in range(free_dim)))])


def _refine_box(box: Box, n: int, target: int) -> List[Box]:
    options = [iv.split(n) for iv in box.intervals]
    d = len(options)
    # suffix bounds on the floor sum still to come
    low = [0] * (d + 1)
    high = [0] * (d + 1)
    for k in range(d - 1, -1, -1):
        low[k] = low[k + 1] + options[k][0][1]
        high[k] = high[k + 1] + options[k][-1][1]
    if not low[0] <= target <= high[0]:
        return []

    found: List[Box] = []
    chosen: List[Interval] = []

    def walk(k: int, acc: int) -> None:
        if k == d:
            if acc == target:
                found.append(Box(tuple(chosen)))
            return
        for piece, value in options[k]:
            total = acc + value
            if total + low[k + 1] > target:
                break
            if total + high[k + 1] < target:
                continue
            chosen.append(piece)
            walk(k + 1, total)
            chosen.pop()

    walk(0, 0)
    return found


def refine_step(bs: BoxSet, n: int, rhs: int, fixed: Sequence[Fraction] = ()) -> BoxSet:
    """
    Impose one equation sum_free floor(n x_i) + sum_fixed floor(n v) = rhs on a box set.

    Each interval is cut at its interior points m/n; the surviving sub-boxes are exactly those on
    which the equation holds, and every output interval is floor-constant for n.

    Args:
        bs: floor-constant box set for all previously applied indices
        n: equation index
        rhs: right-hand side
        fixed: values of the fixed coordinates

    Returns:
        BoxSet: refined set (possibly empty)
    """
    target = rhs - sum(floor_mul(n, Fraction(v)) for v in fixed)
    out: List[Box] = []
    for box in bs.boxes:
        out.extend(_refine_box(box, n, target))
    return BoxSet(bs.dim, out)


def ordered_feasible(b: Box) -> bool:
    """True iff the box holds a point with x_1 <= x_2 <= ... <= x_d (greedy smallest choice)."""
    t = None
    for iv in b.intervals:
        t = iv.lo if t is None else max(t, iv.lo)
        if not t < iv.hi:
            return False
    return True


def _coordinate_range(b: Box, k: int, fixed: Sequence[Fraction]) -> Tuple[Fraction, Fraction, bool]:
    if k < b.dim:
        iv = b.intervals[k]
        return iv.lo, iv.hi, True
    v = Fraction(fixed[k - b.dim])
    return v, v, False


def pair_sum_feasible(b: Box, i: int, j: int, s: Fraction, fixed: Sequence[Fraction] = ()) -> bool:
    """
    True iff some point of the box has x_i + x_j = s.

    Free coordinates range over [lo, hi); fixed coordinates are the degenerate interval [v, v].
    """
    if i == j:
        raise InvalidInputError(f"pair-sum filter needs two distinct coordinates, got ({i}, {j})")
    lo_i, hi_i, open_i = _coordinate_range(b, i, fixed)
    lo_j, hi_j, open_j = _coordinate_range(b, j, fixed)
    lo, hi = lo_i + lo_j, hi_i + hi_j
    if open_i or open_j:
        return lo <= s < hi
    return s == lo


def apply_pair_filters(bs: BoxSet, filters: Iterable[PairSumFilter], fixed: Sequence[Fraction] = ()) -> BoxSet:
    """Keep a box iff some filter (i, j, s) is feasible on it."""
    filters = list(filters)
    kept = [
        box for box in bs.boxes
        if any(pair_sum_feasible(box, flt.i, flt.j, s, fixed) for flt in filters for s in flt.sums)
    ]
    return BoxSet(bs.dim, kept)


def apply_order_filter(bs: BoxSet) -> BoxSet:
    return BoxSet(bs.dim, [box for box in bs.boxes if ordered_feasible(box)])


def solve(sys: FloorSystem, on_step: Optional[StepCallback] = None) -> BoxSet:
    """
    Solve a floor system by refining the unit cube one equation at a time, in increasing n.

    Args:
        sys: the floor system
        on_step: called as on_step(n, boxset) after each equation (and after the ordered filter)

    Returns:
        BoxSet: every box satisfies every equation pointwise (not normalized)
    """
    bs = seed_boxset(sys.free_dim)
    per_step = sys.ordered and sys.order_filter == "per_step"
    for n, rhs in sys.equations:
        bs = refine_step(bs, n, rhs, sys.fixed)
        if per_step:
            bs = apply_order_filter(bs)
        if on_step is not None:
            on_step(n, bs)
        if bs.is_empty():
            break
    if sys.ordered and not per_step:
        bs = apply_order_filter(bs)
    if sys.pair_sum_filters:
        bs = apply_pair_filters(bs, sys.pair_sum_filters, sys.fixed)
    return bs


def _overlaps(a: Box, b: Box) -> bool:
    return all(x.lo < y.hi and y.lo < x.hi for x, y in zip(a.intervals, b.intervals))


def boxset_normalize(bs: BoxSet) -> BoxSet:
    """
    Merge abutting boxes that differ in one coordinate, then sort by (lo vector, hi vector).

    Raises:
        InvariantBreachError: two boxes overlap
    """
    boxes = list(bs.boxes)
    for x in range(len(boxes)):
        for y in range(x + 1, len(boxes)):
            if _overlaps(boxes[x], boxes[y]):
                raise InvariantBreachError(f"boxes {boxes[x]} and {boxes[y]} overlap")

    changed = True
    while changed:
        changed = False
        for k in range(bs.dim):
            groups: Dict[Tuple[Interval, ...], List[Interval]] = {}
            for box in boxes:
                rest = box.intervals[:k] + box.intervals[k + 1:]
                groups.setdefault(rest, []).append(box.intervals[k])
            merged: List[Box] = []
            for rest, pieces in groups.items():
                pieces.sort()
                runs = [pieces[0]]
                for piece in pieces[1:]:
                    if runs[-1].hi == piece.lo:
                        runs[-1] = Interval(runs[-1].lo, piece.hi)
                        changed = True
                    else:
                        runs.append(piece)
                merged.extend(Box(rest[:k] + (iv,) + rest[k:]) for iv in runs)
            boxes = merged
    boxes.sort(key=Box.sort_key)
    return BoxSet(bs.dim, boxes)


def oracle_grid(max_denominator: int) -> List[Fraction]:
    """All p/q in [0,1) with q <= max_denominator plus midpoints of consecutive values (and of the last value and 1)."""
    values = sorted({Fraction(p, q) for q in range(1, max_denominator + 1) for p in range(q)})
    edges = values + [Fraction(1)]
    midpoints = [(edges[k] + edges[k + 1]) / 2 for k in range(len(values))]
    return sorted(set(values) | set(midpoints))


def brute_oracle(sys: FloorSystem, max_denominator: int) -> List[Tuple[Fraction, ...]]:
    """
    Every grid tuple of free coordinates satisfying the whole system exactly.

    Independent of the box machinery. Floors of every grid value are tabulated once, partial
    tuples are pruned with floor-sum bounds, and the last two coordinates come from a table of
    grid pairs keyed by their floor sums.

    Args:
        sys: the floor system
        max_denominator: largest grid denominator, at least 2

    Returns:
        Sorted list of satisfying points
    """
    if max_denominator < 2:
        raise InvalidInputError(f"max_denominator must be at least 2, got {max_denominator}")
    grid = oracle_grid(max_denominator)
    size = len(grid)
    d = sys.free_dim
    ns = [n for n, _ in sys.equations]
    targets = tuple(rhs - sum(floor_mul(n, v) for v in sys.fixed) for n, rhs in sys.equations)
    floors = [tuple(floor_mul(n, x) for n in ns) for x in grid]
    zeros = (0,) * len(ns)
    found: List[Tuple[Fraction, ...]] = []

    def accept(indices: Sequence[int]) -> None:
        point = tuple(grid[i] for i in indices)
        if not sys.pair_sum_filters or sys.satisfied_by(point):
            found.append(point)

    if d == 1:
        for idx, row in enumerate(floors):
            if row == targets:
                accept((idx,))
        return sorted(found)

    # grid pairs (i, j), with i <= j when ordered, keyed by floor(n x_i) + floor(n x_j)
    tails: Dict[Tuple[int, ...], List[Tuple[int, int]]] = {}
    for i, row_i in enumerate(floors):
        for j in range(i if sys.ordered else 0, size):
            key = tuple(a + b for a, b in zip(row_i, floors[j]))
            if all(s <= t for s, t in zip(key, targets)):
                tails.setdefault(key, []).append((i, j))

    def remaining_sum_feasible(sums: Sequence[int], m: int, least: Fraction) -> bool:
        # m coordinates y in [least, 1) with sum_y floor(n y) = v_n force v_n <= n sum(y) < v_n + m
        lower, upper = m * least, Fraction(m)
        for n, target, acc in zip(ns, targets, sums):
            v = target - acc
            lower = max(lower, Fraction(v, n))
            upper = min(upper, Fraction(v + m, n))
            if lower >= upper:
                return False
        return True

    chosen: List[int] = []

    def walk(k: int, start: int, sums: Tuple[int, ...]) -> None:
        if k == d - 2:
            residual = tuple(t - s for t, s in zip(targets, sums))
            for i, j in tails.get(residual, ()):
                if i >= start:
                    accept(chosen + [i, j])
            return
        remaining = d - k - 1
        for idx in range(start, size):
            row = floors[idx]
            least = row if sys.ordered else zeros
            new_sums = []
            too_large = too_small = False
            for n, target, acc, f, f0 in zip(ns, targets, sums, row, least):
                total = acc + f
                if total + remaining * f0 > target:
                    too_large = True
                    break
                if total + remaining * (n - 1) < target:
                    too_small = True
                new_sums.append(total)
            if too_large:
                # both bounds only grow with x
                break
            floor_from = grid[idx] if sys.ordered else Fraction(0)
            if too_small or not remaining_sum_feasible(new_sums, remaining, floor_from):
                continue
            chosen.append(idx)
            walk(k + 1, idx if sys.ordered else 0, tuple(new_sums))
            chosen.pop()

    walk(0, 0, zeros)
    return sorted(found)


class BoxSolver:
    """
    Front for the floor-system solver: solving, presentation and oracle cross-checks with logging.
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def solve(self, system: FloorSystem, on_step: Optional[StepCallback] = None) -> BoxSet:
        self.logger.debug(f"Solving {len(system.equations)} equations over {system.free_dim} free coordinates")
        result = solve(system, on_step)
        self.logger.debug(f"Solver returned {len(result)} boxes")
        return result

    def solve_normalized(self, system: FloorSystem) -> BoxSet:
        """Solve and return the merged, sorted presentation form."""
        return boxset_normalize(self.solve(system))

    def unsound_samples(self, system: FloorSystem, boxes: BoxSet) -> List[Tuple[Fraction, ...]]:
        """Sample points of output boxes that break some equation; empty for a sound result."""
        bad = []
        for box in boxes:
            for point in box.sample_points():
                full = tuple(point) + system.fixed
                if any(sum(floor_mul(n, x) for x in full) != rhs for n, rhs in system.equations):
                    bad.append(point)
        return bad

    def missed_oracle_points(self, system: FloorSystem, boxes: BoxSet,
                             max_denominator: int) -> List[Tuple[Fraction, ...]]:
        """Oracle points not covered by any box; empty when the solver is complete on the grid."""
        points = brute_oracle(system, max_denominator)
        missed = [p for p in points if not boxes.contains(p)]
        if missed:
            self.logger.error(f"{len(missed)} oracle points at denominator {max_denominator} lie outside the solver output")
        return missed
