"""Circle-map layer: Birkhoff sums, rotation numbers, Denjoy-Koksma residuals.

Trigonometric Birkhoff sums over a rigid rotation have an exact geometric-sum
closed form, used here as an independent oracle. Closest-return records of the
golden rotation must occur exactly at Fibonacci indices.
"""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusflow.cfrac import ContinuedFraction, constant_type_bound, convergents, expand
from torusflow.circle import (
    OBSERVABLES,
    CircleMap,
    NonMonotoneLift,
    birkhoff_cumulative,
    birkhoff_sum,
    circular_order,
    closest_return_records,
    const_observable,
    decomposed_sum_bound,
    dk_residual,
    estimate_variation,
    first_order_mismatch,
    rotation_cylinder,
    rotation_number,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0


def sin_sum_closed_form(x: float, alpha: float, n: int) -> float:
    """sum_{k<n} sin(2 pi (x + k alpha)) via the geometric series."""
    w = cmath.exp(2j * math.pi * alpha)
    z = cmath.exp(2j * math.pi * x)
    return (z * (w**n - 1) / (w - 1)).imag


def test_birkhoff_sum_matches_closed_form():
    rot = CircleMap.rotation(GOLDEN)
    phi = OBSERVABLES["sin"]
    for x0, n in [(0.0, 10), (0.37, 1000), (0.9, 4321)]:
        assert birkhoff_sum(rot, phi, x0, n) == pytest.approx(
            sin_sum_closed_form(x0, GOLDEN, n), abs=1e-8
        )


def test_birkhoff_sum_generic_path_agrees():
    fast = CircleMap.rotation(SILVER)
    slow = CircleMap(lift=lambda x: x + SILVER, kind="custom")
    phi = OBSERVABLES["cos"]
    assert birkhoff_sum(slow, phi, 0.2, 300) == pytest.approx(
        birkhoff_sum(fast, phi, 0.2, 300), abs=1e-9
    )


def test_birkhoff_cumulative_endpoints():
    rot = CircleMap.rotation(GOLDEN)
    phi = OBSERVABLES["sin"]
    cum = birkhoff_cumulative(rot, phi, 0.1, 200)
    assert cum.shape == (200,)
    assert cum[-1] == pytest.approx(birkhoff_sum(rot, phi, 0.1, 200), abs=1e-10)
    assert cum[0] == pytest.approx(math.sin(2 * math.pi * 0.1), abs=1e-12)


def test_birkhoff_sum_zero_and_negative():
    rot = CircleMap.rotation(GOLDEN)
    assert birkhoff_sum(rot, OBSERVABLES["sin"], 0.3, 0) == 0.0
    with pytest.raises(ValueError):
        birkhoff_sum(rot, OBSERVABLES["sin"], 0.3, -1)


def test_rotation_number_of_rotation():
    est, err = rotation_number(CircleMap.rotation(GOLDEN), 5000)
    assert err == pytest.approx(1 / 5000)
    assert abs(est - GOLDEN) <= err


def test_rotation_number_requires_iterations():
    with pytest.raises(ValueError):
        rotation_number(CircleMap.rotation(GOLDEN), 50)


def test_rotation_number_rejects_wrong_degree():
    bad = CircleMap(lift=lambda x: 1.5 * x, kind="custom")
    with pytest.raises(NonMonotoneLift):
        rotation_number(bad, 200)


def test_rotation_number_rejects_wide_displacement():
    # Displacement range [0.05, 1.15] has spread > 1, impossible for a
    # homeomorphism lift; the orbit sweeps the circle so the spread is seen.
    bad = CircleMap(
        lift=lambda x: x + 0.05 + 0.55 * (1 - math.cos(2 * math.pi * x)),
        kind="custom",
    )
    with pytest.raises(NonMonotoneLift):
        rotation_number(bad, 5000)


def test_dk_residual_below_variation_golden():
    rot = CircleMap.rotation(GOLDEN)
    table = convergents(expand(GOLDEN, 20))
    rng = np.random.default_rng(7)
    for phi_name in ("sin", "cos", "triangle"):
        phi = OBSERVABLES[phi_name]
        for q in table.q[1:16]:
            for x0 in rng.random(5):
                assert dk_residual(rot, phi, float(x0), int(q), 0.0) < phi.var()


def test_dk_residual_uses_mean():
    rot = CircleMap.rotation(SILVER)
    phi = const_observable(0.7)
    # S_q = 0.7 q exactly, so the residual against mean 0.7 vanishes.
    assert dk_residual(rot, phi, 0.1, 169, 0.7) == pytest.approx(0.0, abs=1e-10)
    assert dk_residual(rot, phi, 0.1, 169, 0.0) == pytest.approx(0.7 * 169, abs=1e-9)


def test_decomposed_sum_bound_structure():
    cf = expand(GOLDEN, 25)
    table = convergents(cf)
    B = constant_type_bound(cf)
    rot = CircleMap.rotation(GOLDEN)
    phi = OBSERVABLES["sin"]
    s, bound = decomposed_sum_bound(rot, phi, 0.25, 1000, table, B)
    assert s == pytest.approx(sin_sum_closed_form(0.25, GOLDEN, 1000), abs=1e-8)
    assert abs(s) <= bound + phi.sup_abs()
    # The bound counts DK blocks: sum of Ostrowski digits of n - 1 times Var.
    from torusflow.cfrac import ostrowski_decompose

    d = ostrowski_decompose(999, table)
    assert bound == pytest.approx(sum(d.digits) * 4.0)
    with pytest.raises(ValueError):
        decomposed_sum_bound(rot, phi, 0.25, 1, table, B)


def test_estimate_variation():
    assert estimate_variation(lambda x: np.sin(2 * np.pi * x)) == pytest.approx(
        4.0, rel=1e-3
    )
    # Sawtooth on the circle: continuous rise 1 plus wrap jump 1.
    assert estimate_variation(lambda x: np.asarray(x) % 1.0) == pytest.approx(
        2.0, rel=1e-3
    )


def test_circular_order_simple():
    pts = np.array([0.1, 0.5, 0.9, 0.3])
    assert list(circular_order(pts)) == [0, 3, 1, 2]
    # Rotating every point by the same amount preserves the order.
    assert list(circular_order((pts + 0.45) % 1.0)) == [0, 3, 1, 2]


def test_first_order_mismatch_detects_perturbation():
    n = 500
    ks = np.arange(n)
    orbit = (0.0 + GOLDEN * ks) % 1.0
    same = (0.1 + GOLDEN * ks) % 1.0
    off = (0.0 + (GOLDEN + 0.01) * ks) % 1.0
    assert first_order_mismatch(orbit, same) is None
    assert first_order_mismatch(orbit, off) is not None


def test_closest_return_records_fibonacci():
    ks = np.arange(4000)
    orbit = (GOLDEN * ks) % 1.0
    records = closest_return_records(orbit)
    fib = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584]
    assert [k for k, _ in records] == fib
    # Sides alternate after the seed record.
    sides = [s for _, s in records[1:]]
    assert sides == [(+1 if i % 2 == 0 else -1) for i in range(len(sides))]


def test_rotation_cylinder_golden():
    ks = np.arange(4000)
    cyl = rotation_cylinder((GOLDEN * ks) % 1.0, max_width=1e-6)
    assert cyl.consistent
    assert cyl.width < 1e-6
    assert cyl.lo < GOLDEN < cyl.hi
    assert cyl.lo < cyl.interior_point() < cyl.hi


def test_rotation_cylinder_silver():
    ks = np.arange(4000)
    cyl = rotation_cylinder((SILVER * ks) % 1.0, max_width=1e-6)
    assert cyl.consistent
    assert cyl.lo < SILVER < cyl.hi


def test_rotation_cylinder_rejects_disorder():
    rng = np.random.default_rng(12345)
    pts = rng.random(3000)
    cyl = rotation_cylinder(pts, max_width=1e-6)
    assert not (cyl.consistent and cyl.width < 1e-4)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(min_value=0.01, max_value=0.99))
def test_rotation_number_property(alpha):
    est, err = rotation_number(CircleMap.rotation(alpha), 500)
    assert abs(est - alpha) <= err + 1e-12


@settings(max_examples=30, deadline=None)
@given(
    alpha=st.sampled_from([GOLDEN, SILVER, GOLDEN / 2, 1 - GOLDEN]),
    x0=st.floats(min_value=0.0, max_value=1.0, exclude_max=True),
    n=st.integers(min_value=1, max_value=2000),
)
def test_birkhoff_sin_closed_form_property(alpha, x0, n):
    rot = CircleMap.rotation(alpha)
    got = birkhoff_sum(rot, OBSERVABLES["sin"], x0, n)
    assert got == pytest.approx(sin_sum_closed_form(x0, alpha, n), abs=1e-7)
