"""
Singularity Module for mldlab
Cyclic quotient singularities 1/r(a_1,...,a_d): minimal log discrepancy via the toric formula,
the associated function f, conditions D(n,c) and C(n), membership in the A- and B-families,
and the mld-preserving reduction.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from math import gcd
from typing import Any, Dict, List, Optional, Sequence, Tuple

from arith_module import (
    InvalidInputError,
    PreconditionError,
    coprime,
    in_gamma,
    to_text,
)

logger = logging.getLogger(__name__)

TWO = Fraction(2)


@dataclass(frozen=True)
class CyclicQuotient:
    """The singularity 1/r(a_1,...,a_d); weights equal to r are allowed (trivial coordinates)."""

    r: int
    weights: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(a) for a in self.weights))
        if self.r < 1:
            raise InvalidInputError(f"group order must be positive, got r={self.r}")
        if not self.weights:
            raise InvalidInputError("a cyclic quotient needs at least one weight")
        for a in self.weights:
            if not 1 <= a <= self.r:
                raise InvalidInputError(f"weight {a} outside [1, {self.r}]")

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def weight_sum(self) -> int:
        return sum(self.weights)

    def in_open_cube(self) -> bool:
        """True iff the associated point a_i/r lies in (0,1)^d."""
        return all(a < self.r for a in self.weights)

    def is_isolated(self) -> bool:
        return all(coprime(a, self.r) for a in self.weights)

    def point(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(a, self.r) for a in self.weights)

    def key(self) -> Tuple[int, Tuple[int, ...]]:
        """Identity up to reordering of the weights."""
        return self.r, tuple(sorted(self.weights))

    def to_dict(self) -> Dict[str, Any]:
        return {"r": self.r, "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CyclicQuotient":
        try:
            return cls(int(data["r"]), tuple(int(a) for a in data["weights"]))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"malformed singularity record {data!r}: {e}") from e

    @classmethod
    def parse(cls, r: int, weights_text: str) -> "CyclicQuotient":
        """Build from a comma-separated weight list such as "3,4,5"."""
        parts = [p.strip() for p in weights_text.split(",")]
        if not parts or any(not p.isdigit() for p in parts):
            raise InvalidInputError(f"weights must be comma-separated positive integers, got {weights_text!r}")
        return cls(r, tuple(int(p) for p in parts))

    def __str__(self) -> str:
        return f"1/{self.r}({','.join(str(a) for a in self.weights)})"


@dataclass(frozen=True)
class MldResult:
    value: Fraction
    witnesses: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"value": to_text(self.value), "witnesses": list(self.witnesses)}

    def __str__(self) -> str:
        return f"{to_text(self.value)}, j={','.join(str(j) for j in self.witnesses)}"


@dataclass(frozen=True)
class RoleAssignment:
    """
    Which weight positions (0-based) play a_1,a_2,a_3 (coprime to r) and a_4,a_5 (equal gcd).
    """

    coprime_slots: Tuple[int, int, int]
    paired_slots: Tuple[int, int]

    def __post_init__(self):
        slots = tuple(self.coprime_slots) + tuple(self.paired_slots)
        if len(self.coprime_slots) != 3 or len(self.paired_slots) != 2 or sorted(slots) != [0, 1, 2, 3, 4]:
            raise InvalidInputError(f"role slots must partition 0..4, got {self.coprime_slots}/{self.paired_slots}")

    def is_valid_for(self, cq: CyclicQuotient) -> bool:
        if cq.dim != 5:
            return False
        w, r = cq.weights, cq.r
        if not all(coprime(w[i], r) for i in self.coprime_slots):
            return False
        return gcd(w[self.paired_slots[0]], r) == gcd(w[self.paired_slots[1]], r)

    def named(self, cq: CyclicQuotient) -> Tuple[int, int, int, int, int]:
        """Weights in role order (a_1, a_2, a_3, a_4, a_5)."""
        w = cq.weights
        return tuple(w[i] for i in self.coprime_slots + self.paired_slots)

    def to_dict(self) -> Dict[str, Any]:
        return {"coprime_slots": list(self.coprime_slots), "paired_slots": list(self.paired_slots)}


@dataclass
class AMembership:
    level: int
    member: bool
    bar: bool
    mld: Optional[Fraction]
    roles: List[RoleAssignment] = field(default_factory=list)
    disjuncts: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "member": self.member,
            "bar": self.bar,
            "mld": to_text(self.mld) if self.mld is not None else None,
            "roles": [role.to_dict() for role in self.roles],
            "disjuncts": list(self.disjuncts),
        }


@dataclass(frozen=True)
class BMembership:
    r: int
    weights: Tuple[int, int, int, int]
    e: int
    k0: int
    is_bar: bool
    disjuncts: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "weights": list(self.weights),
            "e": self.e,
            "k0": self.k0,
            "is_bar": self.is_bar,
            "disjuncts": list(self.disjuncts),
        }


def _residue_sum(r: int, weights: Sequence[int], j: int) -> int:
    # r * sum_i (1 + j a_i / r - ceil(j a_i / r))
    total = 0
    for a in weights:
        residue = (j * a) % r
        total += residue if residue else r
    return total


def toric_sum(cq: CyclicQuotient, j: int) -> Fraction:
    """The summand sum_i (1 + j a_i/r - ceil(j a_i/r)) of the toric mld formula."""
    return Fraction(_residue_sum(cq.r, cq.weights, j), cq.r)


def mld(cq: CyclicQuotient) -> MldResult:
    """
    Minimal log discrepancy of a cyclic quotient singularity.

    The minimum of the toric sum over j in [1, r]; j = r contributes dim.

    Args:
        cq: the singularity

    Returns:
        MldResult: exact value and every minimising j in increasing order
    """
    best = None
    witnesses: List[int] = []
    for j in range(1, cq.r + 1):
        total = _residue_sum(cq.r, cq.weights, j)
        if best is None or total < best:
            best, witnesses = total, [j]
        elif total == best:
            witnesses.append(j)
    return MldResult(Fraction(best, cq.r), tuple(witnesses))


def _require_open_cube(cq: CyclicQuotient) -> None:
    if not cq.in_open_cube():
        raise PreconditionError(f"{cq}: associated point is not in (0,1)^{cq.dim} (some a_i = r)")


def f_value(cq: CyclicQuotient, n: int) -> int:
    """Associated function f(n) = sum_i floor(n a_i / r)."""
    _require_open_cube(cq)
    return sum((n * a) // cq.r for a in cq.weights)


def _require_roles(cq: CyclicQuotient, roles: RoleAssignment) -> None:
    if not roles.is_valid_for(cq):
        raise InvalidInputError(f"role assignment {roles.to_dict()} is not valid for {cq}")


def assoc_denominator(cq: CyclicQuotient, roles: RoleAssignment) -> int:
    """Associated denominator q = r / gcd(a_4, r)."""
    _require_roles(cq, roles)
    return cq.r // gcd(cq.weights[roles.paired_slots[0]], cq.r)


def _require_five(cq: CyclicQuotient) -> None:
    if cq.dim != 5:
        raise PreconditionError(f"{cq}: operation defined for 5-dimensional singularities only")


def cond_D(cq: CyclicQuotient, roles: RoleAssignment, n: int, c: int) -> bool:
    """Condition D(n,c): n in Gamma_q and f(n) = 2n - 2 - c."""
    _require_five(cq)
    _require_open_cube(cq)
    q = assoc_denominator(cq, roles)
    return in_gamma(q, n) and f_value(cq, n) == 2 * n - 2 - c


def cond_C(cq: CyclicQuotient, roles: RoleAssignment, n: int) -> bool:
    """Condition C(n): n-1, n+1 in Gamma_q and f(n-1) + 5 <= f(n+1)."""
    if n < 2:
        raise PreconditionError(f"C(n) needs n >= 2, got {n}")
    _require_five(cq)
    _require_open_cube(cq)
    q = assoc_denominator(cq, roles)
    if not (in_gamma(q, n - 1) and in_gamma(q, n + 1)):
        return False
    return f_value(cq, n - 1) + 5 <= f_value(cq, n + 1)


def role_assignments(with_coprime_order: bool = False) -> List[RoleAssignment]:
    """
    Candidate role assignments for five weights.

    Args:
        with_coprime_order: also vary which coprime slot plays a_1 and a_2

    Returns:
        List of RoleAssignment (20 ordered paired choices, times 6 if with_coprime_order)
    """
    roles = []
    for pair in permutations(range(5), 2):
        rest = [i for i in range(5) if i not in pair]
        orders = permutations(rest) if with_coprime_order else [tuple(rest)]
        for order in orders:
            roles.append(RoleAssignment(tuple(order), tuple(pair)))
    return roles


_PLAIN_ROLES = role_assignments()
_ORDERED_ROLES = role_assignments(with_coprime_order=True)


def level4_disjuncts(cq: CyclicQuotient, roles: RoleAssignment) -> List[str]:
    """
    Divisibility disjuncts of the level-4 family that hold for this role order.

    Both published lists are checked; labels start with "def:" (set definition) or
    "thm:" (theorem statement) so reports show which list fired.
    """
    r = cq.r
    a1, a2, _a3, a4, a5 = roles.named(cq)
    fired = []
    if (a1 + a4 + a5) % r == 0:
        fired.append("def:a1+a4+a5")
    if (2 * a4 + a5) % r == 0:
        fired.append("def:2a4+a5")
    if (2 * a1 + a5) % r == 0 and gcd(a4, r) <= 2:
        fired.append("def:2a1+a5")
    if (a1 + a2 + a5) % r == 0:
        fired.append("thm:a1+a2+a5")
    if (2 * a1 + a5) % r == 0:
        fired.append("thm:2a1+a5")
    if (2 * a4 + a5) % r == 0 and gcd(a4, r) == gcd(a5, r) <= 2:
        fired.append("thm:2a4+a5")
    return fired


def in_A(cq: CyclicQuotient, level: int, eps: Optional[Fraction] = None,
         mld_result: Optional[MldResult] = None) -> AMembership:
    """
    Membership of a 5-dimensional singularity in A_r(level), its bar and epsilon variants.

    Role assignments are searched exhaustively since weights are identified up to reordering.

    Args:
        cq: 5-dimensional singularity
        level: 1..5
        eps: if given, additionally require mld > 2 - eps
        mld_result: precomputed mld(cq), to skip recomputation in sweeps

    Returns:
        AMembership with every witnessing role (and, at level 4, the disjunct that fired)
    """
    _require_five(cq)
    if level not in (1, 2, 3, 4, 5):
        raise InvalidInputError(f"level must be in 1..5, got {level}")
    if not cq.in_open_cube():
        return AMembership(level, False, False, None)

    m = (mld_result or mld(cq)).value
    is_bar = m == Fraction(cq.weight_sum, cq.r)
    ok = m < TWO and (eps is None or m > TWO - eps)
    roles: List[RoleAssignment] = []
    disjuncts: List[str] = []

    if ok and level == 5:
        ok = cq.is_isolated()
        roles = [role for role in _PLAIN_ROLES if role.is_valid_for(cq)] if ok else []
    elif ok and level >= 2:
        roles = [role for role in _PLAIN_ROLES if role.is_valid_for(cq)]
        if level >= 3 and gcd(cq.weight_sum, cq.r) != 1:
            roles = []
        if level == 4:
            witnessed = []
            for role in _ORDERED_ROLES:
                if not role.is_valid_for(cq):
                    continue
                for label in level4_disjuncts(cq, role):
                    witnessed.append(role)
                    disjuncts.append(label)
            roles = witnessed
        ok = bool(roles)

    return AMembership(level, ok, ok and is_bar, m, roles, disjuncts)


def relabel(cq: CyclicQuotient, j: int) -> CyclicQuotient:
    """Apply the group automorphism a_i -> j a_i mod r (residue 0 written as r)."""
    if gcd(j, cq.r) != 1:
        raise PreconditionError(f"relabel by j={j} is not an automorphism of Z/{cq.r}")
    return CyclicQuotient(cq.r, tuple(((j * a) % cq.r) or cq.r for a in cq.weights))


def reduce(cq: CyclicQuotient) -> CyclicQuotient:
    """
    Replace cq by a singularity of the same mld whose minimum is attained at j = 1.

    Uses the smallest minimising j: r' = r / gcd(j, r), a_i' = r' (1 + j a_i/r - ceil(j a_i/r)).
    """
    j = mld(cq).witnesses[0]
    g = gcd(j, cq.r)
    r_new = cq.r // g
    weights = []
    for a in cq.weights:
        residue = (j * a) % cq.r
        weights.append(residue // g if residue else r_new)
    return CyclicQuotient(r_new, tuple(weights))


def _b_roles(r: int, a: Sequence[int], e: int) -> List[str]:
    labels = []
    for slot4 in range(4):
        others = [i for i in range(4) if i != slot4]
        a4 = a[slot4]
        if any(gcd(a[i], r) != 1 for i in others):
            continue
        if gcd(a4, r) != gcd(e, r) or gcd(sum(a) - e, r) != 1:
            continue
        for i1 in others:
            a1 = a[i1]
            if (2 * a1 - e) % r == 0 and gcd(e, r) <= 2:
                labels.append(f"a4@{slot4}:2a1-e")
            for i2 in others:
                if i2 != i1 and (a1 + a[i2] - e) % r == 0:
                    labels.append(f"a4@{slot4}:a1+a2-e")
        if (2 * a4 - e) % r == 0:
            labels.append(f"a4@{slot4}:2a4-e")
    return sorted(set(labels))


def b_exceptional_indices(r: int, weights: Sequence[int], e: int) -> List[int]:
    """All k in [1, r-1] where sum{k a_i/r} - {k e/r} drops below 1."""
    found = []
    for k in range(1, r):
        total = sum((k * a) % r for a in weights) - (k * e) % r
        if total < r:
            found.append(k)
    return found


def in_B(r: int, weights: Sequence[int], e: int) -> Optional[BMembership]:
    """
    Membership of 1/r(a_1,a_2,a_3,a_4,-e) in B_r.

    Args:
        r: group order, at least 2
        weights: a_1..a_4 in any order (the a_4 slot is searched)
        e: integer, normalised to [0, r-1]

    Returns:
        BMembership with the unique k_0, or None when some condition fails
    """
    if r < 2:
        raise PreconditionError(f"in_B needs r >= 2, got {r}")
    if len(weights) != 4:
        raise InvalidInputError(f"in_B takes four weights, got {len(weights)}")
    a = tuple(int(x) for x in weights)
    e = e % r
    labels = _b_roles(r, a, e)
    if not labels:
        return None
    candidates = b_exceptional_indices(r, a, e)
    if len(candidates) != 1:
        return None
    k0 = candidates[0]
    total = sum((k0 * x) % r for x in a) - (k0 * e) % r
    if total != k0 or (k0 * e) % r == 0:
        return None
    return BMembership(r, a, e, k0, gcd(k0, r) == 1, tuple(labels))


def _require_bar_a2(cq: CyclicQuotient, roles: RoleAssignment) -> Fraction:
    _require_five(cq)
    _require_open_cube(cq)
    if not roles.is_valid_for(cq):
        raise PreconditionError(f"{cq} is not in A(2) under roles {roles.to_dict()}")
    m = mld(cq).value
    if m >= TWO or m != Fraction(cq.weight_sum, cq.r):
        raise PreconditionError(f"{cq} is not in bar-A(2): mld={to_text(m)}")
    return TWO - m


def check_lemma_2_6(cq: CyclicQuotient, roles: RoleAssignment) -> bool:
    """
    Check 2n-3-(n+1)eps <= f(n) <= 2n-2-(n-1)eps for every n in [2, r-1] prime to q.

    Raises:
        PreconditionError: cq is not in bar-A(2) under roles
    """
    eps = _require_bar_a2(cq, roles)
    q = assoc_denominator(cq, roles)
    for n in range(2, cq.r):
        if not in_gamma(q, n):
            continue
        f = f_value(cq, n)
        if not (2 * n - 3 - (n + 1) * eps <= f <= 2 * n - 2 - (n - 1) * eps):
            logger.debug(f"{cq}: lower/upper bound on f({n}) = {f} fails for eps={to_text(eps)}")
            return False
    return True


def check_lemma_2_7(cq: CyclicQuotient, roles: RoleAssignment, c_max: int = 4) -> List[str]:
    """
    Evaluate every part of the D/C consequence lemma on one bar-A(2) singularity.

    Args:
        cq: singularity in bar-A(2) under roles
        roles: role assignment fixing q
        c_max: largest c examined

    Returns:
        List of violated parts as "part@n=..,c=.." strings; empty when all hold
    """
    eps = _require_bar_a2(cq, roles)
    q = assoc_denominator(cq, roles)
    r = cq.r
    gamma = [n for n in range(2, r) if in_gamma(q, n)]
    f = {n: f_value(cq, n) for n in range(1, r)}
    in_set = set(gamma)

    def holds_D(n: int, c: int) -> bool:
        return n in in_set and f[n] == 2 * n - 2 - c

    bar3 = gcd(cq.weight_sum, r) == 1
    violations = []
    for c in range(1, c_max + 1):
        upper = Fraction(c) / eps - 1
        lower = Fraction(c - 1) / eps + 1
        for n in gamma:
            tag = f"n={n},c={c}"
            if n < upper and f[n] < 2 * n - 2 - c:
                violations.append(f"1@{tag}")
            if lower < n < upper and not holds_D(n, c):
                violations.append(f"2@{tag}")
            if holds_D(n, c):
                if not (Fraction(c - 1, n + 1) <= eps <= Fraction(c, n - 1)):
                    violations.append(f"3a@{tag}")
                bound = Fraction(c + 1, c) * (n - 1) - 1
                for m in gamma:
                    if m < bound and f[m] < 2 * m - 3 - c:
                        violations.append(f"3b@{tag},m={m}")
                for n2 in gamma:
                    if not holds_D(n2, c + 1):
                        continue
                    for m in gamma:
                        if n2 + 3 <= m < bound and not holds_D(m, c + 1):
                            violations.append(f"3c@{tag},n'={n2},m={m}")
            if n + 1 < r:
                if holds_D(n - 1, c + 1) and holds_D(n + 1, c) and eps != Fraction(c, n):
                    violations.append(f"4a@{tag}")
    for n in gamma:
        if n + 1 >= r:
            continue
        c_holds = in_gamma(q, n - 1) and in_gamma(q, n + 1) and f[n - 1] + 5 <= f[n + 1]
        if c_holds and (n * eps).denominator != 1:
            violations.append(f"4b@n={n}")
        if c_holds and bar3:
            violations.append(f"4c@n={n}")
    return violations
