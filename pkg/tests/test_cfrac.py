"""Continued fractions, convergents, and Ostrowski decompositions.

Oracle values come from the defining identities: the golden ratio conjugate
satisfies x = 1/(1+x) so its quotients are all 1 and its denominators are the
Fibonacci numbers; sqrt(2)-1 satisfies x = 1/(2+x) giving quotients 2 and Pell
denominators.
"""

import dataclasses
import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusflow.cfrac import (
    ContinuedFraction,
    ConvergentTable,
    DomainError,
    PrecisionExhausted,
    TableTooShort,
    constant_type_bound,
    convergents,
    expand,
    named_real,
    ostrowski_decompose,
    verify_decomposition,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0


def test_expand_golden_all_ones():
    cf = expand(GOLDEN, 20)
    assert cf.quotients == (1,) * 20


def test_expand_silver_all_twos():
    cf = expand(SILVER, 12)
    assert cf.quotients == (2,) * 12


def test_expand_string_input_uses_stated_precision():
    cf = expand("0.61803398874989484820458683436563811772", 40, precision_bits=128)
    assert cf.quotients[:30] == (1,) * 30


def test_expand_rational_half_exhausts():
    # 1/2 = [0; 2] has a single quotient; fewer than two reliable quotients
    # must raise rather than return a short tuple silently.
    with pytest.raises(PrecisionExhausted):
        expand(0.5, 10)


def test_expand_float_precision_truncates():
    # A 53-bit float cannot certify 60 quotients; the expansion stops with
    # whatever is reliable instead of inventing digits.
    cf = expand(GOLDEN, 60)
    assert cf.truncated
    assert len(cf.quotients) >= 20
    assert set(cf.quotients) == {1}


def test_expand_domain():
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(DomainError):
            expand(bad, 5)
    with pytest.raises(DomainError):
        expand(GOLDEN, 0)


def test_value_round_trip():
    cf = expand(GOLDEN, 30)
    assert abs(cf.value() - GOLDEN) < 1e-12


def test_convergents_fibonacci():
    cf = ContinuedFraction(quotients=(1,) * 7, precision_bits=256)
    table = convergents(cf)
    assert list(table.q) == [1, 1, 2, 3, 5, 8, 13, 21]
    assert list(table.p) == [0, 1, 1, 2, 3, 5, 8, 13]


def test_convergents_pell():
    cf = ContinuedFraction(quotients=(2,) * 4, precision_bits=256)
    table = convergents(cf)
    assert list(table.q) == [1, 2, 5, 12, 29]
    assert list(table.p) == [0, 1, 2, 5, 12]


def test_convergent_identity():
    # p_{k-1} q_k - p_k q_{k-1} alternates sign with absolute value 1.
    cf = expand(SILVER, 10)
    t = convergents(cf)
    for k in range(1, len(t.q)):
        assert abs(t.p[k - 1] * t.q[k] - t.p[k] * t.q[k - 1]) == 1


def test_convergent_quality_high_precision():
    # |q_k w - p_k| < 1/q_{k+1} <= 1/q_k, checked in 200-bit arithmetic.
    with mpmath.workprec(200):
        w = (mpmath.sqrt(5) - 1) / 2
        cf = expand(str(w), 40, precision_bits=200)
        t = convergents(cf)
        for k in range(1, len(t.q) - 1):
            err = abs(t.q[k] * w - t.p[k])
            assert err < mpmath.mpf(1) / t.q[k + 1]


def test_constant_type_bound():
    assert constant_type_bound(expand(GOLDEN, 15)) == 1
    assert constant_type_bound(expand(SILVER, 10)) == 2


def test_ostrowski_golden_twelve():
    # 12 = 1 + 3 + 8 in Zeckendorf form over Fibonacci denominators.
    table = convergents(ContinuedFraction((1,) * 12, 256))
    d = ostrowski_decompose(12, table)
    assert d.digits[d.N] >= 1
    recon = sum(n * q for n, q in zip(d.digits, table.q))
    assert recon == 12
    assert all(n <= 1 + 1 for n in d.digits)


def test_ostrowski_single_denominator():
    table = convergents(ContinuedFraction((1,) * 12, 256))
    d = ostrowski_decompose(table.q[5], table)
    assert d.N == 5
    assert d.digits[5] == 1
    assert sum(d.digits[:5]) == 0


def test_ostrowski_m_equal_one():
    # Golden table has q_0 = q_1 = 1; the greedy scan takes the largest index
    # with q_k <= m, so m = 1 lands at index 1 with a single digit.
    table = convergents(ContinuedFraction((1,) * 12, 256))
    d = ostrowski_decompose(1, table)
    assert d.N == 1
    assert d.digits[1] == 1
    recon = sum(n * q for n, q in zip(d.digits, table.q))
    assert recon == 1


def test_ostrowski_table_too_short():
    table = convergents(ContinuedFraction((1,) * 5, 256))
    with pytest.raises(TableTooShort):
        ostrowski_decompose(10**6, table)
    # m equal to the last denominator: no q_{N+1} > m is available either.
    with pytest.raises(TableTooShort):
        ostrowski_decompose(table.q[-1], table)


def test_ostrowski_domain():
    table = convergents(ContinuedFraction((1,) * 5, 256))
    with pytest.raises(DomainError):
        ostrowski_decompose(0, table)


def test_verify_decomposition_accepts_good():
    cf = ContinuedFraction((1,) * 26, 256)
    table = convergents(cf)
    B = constant_type_bound(cf)
    for m in (1, 2, 17, 1000, 10000):
        rep = verify_decomposition(ostrowski_decompose(m, table), table, B)
        assert rep.reconstruction_exact
        assert rep.n_bound_ok
        assert rep.digit_bound_ok
        assert rep.max_digit <= B + 1


def test_verify_decomposition_rejects_tampered():
    cf = ContinuedFraction((1,) * 20, 256)
    table = convergents(cf)
    d = ostrowski_decompose(100, table)
    digits = list(d.digits)
    digits[0] += 1
    bad = dataclasses.replace(d, digits=tuple(digits))
    rep = verify_decomposition(bad, table, constant_type_bound(cf))
    assert not rep.reconstruction_exact


def test_named_real_values():
    with mpmath.workprec(256):
        assert abs(named_real("golden") - (mpmath.sqrt(5) - 1) / 2) < mpmath.mpf(2) ** -250
        assert abs(named_real("silver") - (mpmath.sqrt(2) - 1)) < mpmath.mpf(2) ** -250
        assert abs(named_real("lambda") - (1 + mpmath.sqrt(5)) / 2) < mpmath.mpf(2) ** -250
    with pytest.raises(DomainError):
        named_real("copper")


@settings(max_examples=60, deadline=None)
@given(
    quots=st.lists(st.integers(min_value=1, max_value=5), min_size=6, max_size=14),
    frac=st.floats(min_value=0.0, max_value=1.0, exclude_max=True),
)
def test_ostrowski_properties(quots, frac):
    cf = ContinuedFraction(tuple(quots), 256)
    table = convergents(cf)
    B = constant_type_bound(cf)
    # Any m strictly below the last denominator decomposes exactly with
    # digits bounded by B + 1.
    m = 1 + int(frac * (table.q[-1] - 1))
    d = ostrowski_decompose(m, table)
    recon = sum(n * q for n, q in zip(d.digits, table.q))
    assert recon == m
    assert max(d.digits) <= B + 1
    assert d.N < 4 * math.log(m + 1) / math.log(2)


@settings(max_examples=40, deadline=None)
@given(quots=st.lists(st.integers(min_value=1, max_value=9), min_size=4, max_size=12))
def test_denominator_growth(quots):
    # q_k >= 2^((k-1)/2): denominators at least double every two steps.
    table = convergents(ContinuedFraction(tuple(quots), 256))
    for k in range(len(table.q)):
        assert table.q[k] >= 2 ** ((k - 1) / 2.0) - 1e-12
