import random
from fractions import Fraction
from math import gcd

import pytest

from arith_module import (
    InvalidInputError,
    MldLabError,
    PreconditionError,
    coprime,
    floor_mul,
    frac_part,
    in_gamma,
    parse_rational,
    rat_ceil,
    rat_floor,
    to_text,
)


def test_floor_and_ceil_of_negative_halves():
    assert rat_floor(Fraction(-7, 2)) == -4
    assert rat_ceil(Fraction(-7, 2)) == -3
    assert rat_floor(Fraction(7, 2)) == 3
    assert rat_ceil(Fraction(7, 2)) == 4


def test_floor_and_ceil_agree_on_integers():
    for value in (-3, 0, 5):
        assert rat_floor(value) == rat_ceil(value) == value


def test_frac_part_lies_in_unit_interval():
    assert frac_part(Fraction(-1, 3)) == Fraction(2, 3)
    assert frac_part(Fraction(12, 13)) == Fraction(12, 13)
    assert frac_part(4) == 0


def test_floor_mul_matches_fraction_floor():
    x = Fraction(3, 4)
    for n in range(1, 30):
        assert floor_mul(n, x) == rat_floor(n * x)


def test_in_gamma():
    assert in_gamma(3, 5)
    assert not in_gamma(3, 6)
    assert in_gamma(14, 13)


@pytest.mark.parametrize("q,n", [(1, 5), (0, 3), (3, 0)])
def test_in_gamma_rejects_out_of_domain(q, n):
    with pytest.raises(PreconditionError):
        in_gamma(q, n)


def test_coprime():
    assert coprime(3, 13)
    assert not coprime(4, 14)


def test_to_text_is_reduced():
    assert to_text(Fraction(6, 4)) == "3/2"
    assert to_text(Fraction(-2, 4)) == "-1/2"
    assert to_text(4) == "4"


@pytest.mark.parametrize("text,value", [
    ("12/13", Fraction(12, 13)),
    (" -3 / 6 ", Fraction(-1, 2)),
    ("7", Fraction(7)),
    (5, Fraction(5)),
])
def test_parse_rational_accepts_exact_forms(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("bad", ["0.5", "1e3", "1/0", "abc", "", 2.5, True, None, [1, 2]])
def test_parse_rational_rejects_lossy_or_malformed_input(bad):
    with pytest.raises(InvalidInputError):
        parse_rational(bad)


def test_error_hierarchy():
    assert issubclass(InvalidInputError, MldLabError)
    assert issubclass(InvalidInputError, ValueError)
    assert issubclass(PreconditionError, MldLabError)


def test_integer_sum_splits_into_floor_and_ceil():
    # a + b integral implies a + b = floor(a) + ceil(b)
    rng = random.Random(7)
    for _ in range(2000):
        a = Fraction(rng.randint(-5000, 5000), rng.randint(1, 1000))
        b = rng.randint(-10, 10) - a
        assert a + b == rat_floor(a) + rat_ceil(b)


def test_arithmetic_stays_normalized():
    rng = random.Random(11)
    for _ in range(2000):
        x = Fraction(rng.randint(-999, 999), rng.randint(1, 999))
        y = Fraction(rng.randint(-999, 999), rng.randint(1, 999)) or Fraction(1, 7)
        for value in (x + y, x - y, x * y, x / y, frac_part(x)):
            assert value.denominator > 0
            assert gcd(value.numerator, value.denominator) == 1


def test_parsed_text_is_normalized():
    rng = random.Random(13)
    for _ in range(1000):
        p, q = rng.randint(-999, 999), rng.randint(1, 999)
        value = parse_rational(f"{p}/{q}")
        assert value == Fraction(p, q)
        assert gcd(value.numerator, value.denominator) == 1 and value.denominator > 0
        assert parse_rational(to_text(value)) == value
