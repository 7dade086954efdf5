import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heightlab.errors import PrecisionExhaustedError
from heightlab.numerics import (
    BitsTarget,
    Interval,
    LiouvilleTarget,
    RationalTarget,
    e_target,
    exp_enclosure,
    golden_target,
    liouville_target,
    liouville_truncation,
    ln_enclosure,
    parse_target,
    pow_enclosure,
    reduce,
    refine,
    sample_uniform,
    sqrt2_target,
)


def test_reduce_lowest_terms():
    assert reduce(2, 4) == Fraction(1, 2)
    assert reduce(0, 7) == 0
    assert reduce(-3, 6) == Fraction(-1, 2)
    assert reduce(5, 5).denominator == 1


def test_reduce_rejects_bad_denominator():
    with pytest.raises(ValueError):
        reduce(1, 0)
    with pytest.raises(ValueError):
        reduce(1, -2)


@given(st.integers(-1000, 1000), st.integers(1, 1000))
def test_reduce_is_coprime(p, q):
    r = reduce(p, q)
    assert math.gcd(abs(r.numerator), r.denominator) == 1
    assert r.denominator >= 1
    assert r * q == p


def test_interval_rejects_inverted_endpoints():
    with pytest.raises(ValueError):
        Interval(Fraction(1), Fraction(0))


# --- enclosure contracts -----------------------------------------------------


def test_rational_enclosure_is_degenerate():
    t = parse_target("dec:0.5")
    e = refine(t, 4)
    assert e.lower == e.upper == Fraction(1, 2)
    assert t.exact_value == Fraction(1, 2)


def test_sqrt2_enclosure_squares_around_two():
    # oracle: y = sqrt(2) - 1 satisfies (y + 1)^2 = 2 exactly
    t = sqrt2_target()
    e = refine(t, 80)
    assert (e.lower + 1) ** 2 < 2 < (e.upper + 1) ** 2
    assert e.width <= Fraction(1, 2**80)


def test_golden_enclosure_satisfies_quadratic():
    # oracle: y = (sqrt(5) - 1)/2 satisfies y^2 + y - 1 = 0 with y increasing
    t = golden_target()
    e = refine(t, 80)
    assert e.lower**2 + e.lower - 1 < 0 < e.upper**2 + e.upper - 1


def test_e_target_quotient_stream():
    t = e_target()
    got = [t.partial_quotient(n) for n in range(1, 12)]
    assert got == [1, 2, 1, 1, 4, 1, 1, 6, 1, 1, 8]


def test_e_target_value_digits():
    # e - 2 = 0.71828182845904523536...
    e = refine(e_target(), 64)
    lo = Fraction("0.718281828459045235")
    hi = Fraction("0.718281828459045236")
    assert lo < e.lower and e.upper < hi


@given(st.integers(0, 2**32), st.integers(2, 64), st.integers(2, 64))
@settings(max_examples=60)
def test_enclosures_are_nested(seed, b1, b2):
    t = BitsTarget(seed)
    first = refine(t, min(b1, b2))
    second = refine(t, max(b1, b2))
    assert first.lower <= second.lower <= second.upper <= first.upper
    assert second.width <= Fraction(1, 2 ** max(b1, b2))


def test_bits_target_deterministic():
    a = refine(BitsTarget(7, 1), 300)
    b = refine(BitsTarget(7, 1), 300)
    assert a == b
    assert refine(BitsTarget(7, 2), 300) != a


def test_sample_uniform_in_unit_interval():
    for t in sample_uniform(123, 3):
        e = refine(t, 16)
        assert 0 <= e.lower and e.upper <= 1


def test_distinct_seeds_eventually_separate():
    a = sample_uniform(7, 2)[0]
    b = sample_uniform(8, 2)[0]
    bits = 8
    while bits <= a.budget:
        ea, eb = refine(a, bits), refine(b, bits)
        if ea.upper < eb.lower or eb.upper < ea.lower:
            break
        bits *= 2
    else:
        pytest.fail("enclosures never separated within the budget")


def test_budget_is_enforced():
    t = BitsTarget(1, 0, budget=64)
    refine(t, 64)
    with pytest.raises(PrecisionExhaustedError):
        refine(t, 65)


# --- liouville fixture -------------------------------------------------------


def test_liouville_truncation_values():
    assert liouville_truncation(1) == Fraction(1, 10)
    assert liouville_truncation(2) == Fraction(11, 100)
    assert liouville_truncation(3) == Fraction(110001, 10**6)


def test_liouville_truncation_error_band():
    # The tail after the n=2 term is 10^-6 + 10^-24 + ..., so the distance to
    # the two-term truncation exceeds 10^-6 by a sliver.
    t = liouville_target()
    e = refine(t, 128)
    err_lo = e.lower - liouville_truncation(2)
    err_hi = e.upper - liouville_truncation(2)
    assert Fraction(1, 10**6) < err_lo
    assert err_hi < Fraction(1, 10**6) + Fraction(1, 10**23)


def test_liouville_truncations_witness_tau_five():
    # oracle: exact tail bounds 10^-(n+1)! < L - T_n < 2 * 10^-(n+1)!
    hits = 0
    for n in (5, 6, 7):
        q = 10 ** math.factorial(n)
        err_upper = Fraction(2, 10 ** math.factorial(n + 1))
        if err_upper < Fraction(1, q**5):
            hits += 1
    assert hits == 3


def test_liouville_enclosure_consistent_with_truncations():
    # at 256 bits the enclosure sits between the 4-term partial sum and the
    # exact tail bound above it
    e = refine(liouville_target(), 256)
    t4 = liouville_truncation(4)
    assert t4 <= e.lower <= e.upper <= t4 + Fraction(2, 10 ** math.factorial(5))
    assert e.upper > t4  # the true value sits strictly above the partial sum


# --- parsing -----------------------------------------------------------------


def test_parse_target_fixture_keys():
    assert parse_target("golden").key == ("cf", "golden")
    assert parse_target("sqrt2").key == ("cf", "sqrt2")
    assert parse_target("e").key == ("cf", "e")
    assert parse_target("liouville").key == ("liouville",)
    assert parse_target("seed:42").key == ("seed", 42, 0)
    assert parse_target("dec:0.25").exact_value == Fraction(1, 4)


def test_parse_target_rejects_garbage():
    for bad in ("gold", "dec:abc", "seed:x", "dec:1.5", "dec:-0.1"):
        with pytest.raises(ValueError):
            parse_target(bad)


def test_clone_is_independent_but_equal():
    t = parse_target("seed:9")
    c = t.clone()
    assert c.key == t.key
    assert refine(c, 128) == refine(t, 128)


# --- certified elementary functions -----------------------------------------


def test_ln_enclosure_of_two():
    # ln 2 = 0.693147180559945309417...
    e = ln_enclosure(Fraction(2), 128)
    assert Fraction("0.693147180559945309") < e.lower
    assert e.upper < Fraction("0.693147180559945310")
    assert e.width < Fraction(1, 10**30)


def test_ln_enclosure_rejects_nonpositive():
    with pytest.raises(ValueError):
        ln_enclosure(Fraction(0))


def test_exp_enclosure_inverts_ln():
    x = Fraction(37, 11)
    back = exp_enclosure(ln_enclosure(x, 128), 128)
    assert back.contains(x)
    assert back.width < Fraction(1, 10**25)


def test_pow_enclosure_cube_root_oracle():
    # oracle: v = 3^(2/3) satisfies v^3 = 9 exactly
    e = pow_enclosure(Fraction(3), Fraction(2, 3), 128)
    assert e.lower**3 < 9 < e.upper**3
    assert e.width < Fraction(1, 10**25)


def test_pow_enclosure_integer_exponent_exact():
    e = pow_enclosure(Fraction(7, 2), Fraction(3), 64)
    assert e.lower == e.upper == Fraction(343, 8)
