"""
Exact Arithmetic Module for mldlab
Rational scalars, floor/fractional-part primitives and the error types shared by every module.
"""

import re
from fractions import Fraction
from math import gcd
from typing import Union

# Every fractional quantity (weights over r, epsilons, interval endpoints, mlds) is a Fraction.
Rational = Fraction

RationalLike = Union[Fraction, int, str]

_RATIONAL_TEXT = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


class MldLabError(Exception):
    """Base class for every error raised by mldlab."""


class InvalidInputError(MldLabError, ValueError):
    """Malformed user input: weights, system files, parameters."""


class PreconditionError(MldLabError):
    """An operation was called outside its documented domain."""


class InvariantBreachError(MldLabError):
    """An internal invariant does not hold (a bug, never a user error)."""


def rat_floor(x: RationalLike) -> int:
    """
    Greatest integer not exceeding x.

    Args:
        x: Rational or integer value

    Returns:
        int: floor(x)
    """
    x = Fraction(x)
    return x.numerator // x.denominator


def rat_ceil(x: RationalLike) -> int:
    """Smallest integer not below x."""
    x = Fraction(x)
    return -((-x.numerator) // x.denominator)


def frac_part(x: RationalLike) -> Fraction:
    """Fractional part x - floor(x), always in [0, 1)."""
    x = Fraction(x)
    return x - rat_floor(x)


def in_gamma(q: int, n: int) -> bool:
    """
    Membership in the set of positive integers not divisible by q.

    Args:
        q: modulus, at least 2
        n: positive integer

    Returns:
        bool: True iff q does not divide n
    """
    if q < 2 or n < 1:
        raise PreconditionError(f"in_gamma needs q >= 2 and n >= 1, got q={q}, n={n}")
    return n % q != 0


def floor_mul(n: int, x: Fraction) -> int:
    """floor(n * x) with integer arithmetic only."""
    return (n * x.numerator) // x.denominator


def coprime(a: int, r: int) -> bool:
    return gcd(a, r) == 1


def to_text(x: RationalLike) -> str:
    """Canonical text form: "p/q" reduced with q > 0, or "p" for integers."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(value: RationalLike) -> Fraction:
    """
    Parse the canonical text form back into a Fraction.

    Decimal and exponent notation are refused so that no lossy value can enter a computation.

    Args:
        value: "p/q" or "p" string, an int, or a Fraction

    Returns:
        Fraction: the parsed value

    Raises:
        InvalidInputError: on anything that is not an exact "p/q" / "p"
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidInputError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str):
        raise InvalidInputError(f"rationals must be given as 'p/q' strings, got {value!r}")
    match = _RATIONAL_TEXT.match(value)
    if not match:
        raise InvalidInputError(f"not a rational in 'p/q' form: {value!r}")
    numerator = int(match.group(1))
    denominator = int(match.group(2)) if match.group(2) is not None else 1
    if denominator == 0:
        raise InvalidInputError(f"zero denominator in {value!r}")
    return Fraction(numerator, denominator)
