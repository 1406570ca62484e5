import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisocount.counting import (
    ExponentRegime,
    count_points,
    count_points_fiber,
    dual_truncation_radius,
    main_term,
    remainder,
    stretch,
    theoretical_exponent,
)
from anisocount.domains import Ball, Ellipsoid, LpBall, ModeUnavailable, apply_rotation, unit_ball_volume
from anisocount.exact import QuadScalar
from anisocount.geometry import SubspaceSpec, decompose, enumerate_dual_points

SQRT2 = QuadScalar(0, 1, 2)
D_ZERO = decompose(SubspaceSpec(2))
D_X = decompose(SubspaceSpec(2, ((1, 0),)))
D_DIAG = decompose(SubspaceSpec(2, ((1, 1),)))
D_KRON = decompose(SubspaceSpec(2, ((1, SQRT2),), d=2))
UNIT = Ball.from_radius((0, 0), 1)


def brute_count(dec, dom, eps):
    """Scan integer points of a generous box and test the pre-image directly."""
    e = float(eps)
    inv = dec.proj_f_f + e * dec.proj_h_f
    fwd = dec.proj_f_f + dec.proj_h_f / e
    c, rad = dom.bounding_sphere()
    tc = fwd @ c
    half = rad / e + 2
    ranges = [range(math.floor(x - half), math.ceil(x + half) + 1) for x in tc]
    hits = 0
    for k in itertools.product(*ranges):
        if dom.is_exact():
            x = stretch(dec, k, Fraction(eps), "inverse")
            hits += dom.level_exact(x) < 1
        else:
            hits += float(dom.level_float((inv @ np.array(k, dtype=float))[None, :])[0]) < 1
    return hits


def test_stretch_examples():
    assert stretch(D_X, (3, 4), Fraction(1, 10)) == (3, 40)
    assert stretch(D_X, (5, 0), Fraction(1, 7)) == (5, 0)
    assert stretch(D_X, (0, 3), Fraction(1, 2)) == (0, 6)
    with pytest.raises(ValueError):
        stretch(D_X, (1, 1), Fraction(1, 2), "sideways")


@given(st.lists(st.fractions(-5, 5, max_denominator=7), min_size=2, max_size=2), st.fractions(1, 64).map(lambda x: 1 / x))
@settings(max_examples=50, deadline=None)
def test_stretch_round_trip_exact(x, eps):
    for dec in (D_X, D_DIAG, D_KRON):
        assert stretch(dec, stretch(dec, x, eps), eps, "inverse") == tuple(x)
        back = stretch(dec, stretch(dec, [float(v) for v in x], float(eps)), float(eps), "inverse")
        assert np.allclose(back, [float(v) for v in x], atol=1e-12 * max(1, float(1 / eps)))


def test_gauss_disk_radius_ten():
    rec = count_points(D_ZERO, Ball.from_radius((0, 0), 10), 1)
    assert rec.count == 305 and rec.boundary_points == 12 and rec.guard_band_hits == 0


def test_x_axis_unit_ball():
    rec = remainder(D_X, UNIT, Fraction(1, 10))
    assert rec.count == 19
    assert rec.main_term == pytest.approx(20)
    assert rec.remainder == pytest.approx(-1)
    assert rec.remainder == rec.count - rec.main_term


def test_fiber_examples():
    assert count_points_fiber(D_X, UNIT, Fraction(1, 10), (0,)) == 19
    assert count_points_fiber(D_X, UNIT, Fraction(1, 10), (1, 0)) == 0
    assert count_points_fiber(D_X, UNIT, Fraction(1, 10), (50,)) == 0
    r0 = count_points_fiber(D_KRON, UNIT, Fraction(1, 8), ())
    assert r0 == count_points(D_KRON, UNIT, Fraction(1, 8)).count


def test_empty_domain():
    tiny = Ball((Fraction(1, 2), Fraction(1, 2)), Fraction(1, 100))
    assert count_points(D_ZERO, tiny, 1).count == 0


def test_unit_disk_remainder_at_one():
    rec = remainder(D_ZERO, UNIT, 1)
    assert rec.count == 1
    assert rec.remainder == pytest.approx(1 - math.pi)


def test_main_term_examples():
    eps = Fraction(1, 8)
    assert main_term(D_ZERO, UNIT, eps)[0] == pytest.approx(math.pi * 64)
    assert main_term(D_X, UNIT, eps)[0] == pytest.approx(16)
    # slices at m (1/2, 1/2), |m| <= 1, each of length 2 sqrt(1 - m^2/2)
    chords = 2 * math.sqrt(1 - 1 / 2) * 2 + 2
    assert main_term(D_DIAG, UNIT, eps)[0] == pytest.approx(8 * chords / math.sqrt(2))


def test_q_zero_rejected():
    full = decompose(SubspaceSpec(2, ((1, 0), (0, 1))))
    with pytest.raises(ValueError):
        count_points(full, UNIT, Fraction(1, 2))
    with pytest.raises(ValueError):
        theoretical_exponent(2, 2, 0, 2, "baseline")


def test_exact_mode_needs_rational_eps():
    with pytest.raises(ModeUnavailable):
        count_points(D_ZERO, UNIT, 0.5)


@pytest.mark.parametrize(
    "args,regime,expected",
    [
        ((2, 1, 1, 0), "fully_convex", Fraction(-1, 3)),
        ((2, 1, 1, 0), "slicewise_convex", Fraction(-1, 2)),
        ((2, 0, 2, 0), "fully_convex", Fraction(-2, 3)),
        ((2, 1, 1, 0), "baseline", Fraction(-1, 2)),
        ((3, 1, 2, 1), "baseline", Fraction(-1)),
        ((3, 2, 1, 1), "slicewise_convex", Fraction(2, 4) - 1),
    ],
)
def test_theoretical_exponent(args, regime, expected):
    assert theoretical_exponent(*args, ExponentRegime(regime)) == expected


def test_theoretical_exponent_rejects_inconsistent():
    with pytest.raises(ValueError):
        theoretical_exponent(3, 1, 1, 0, "baseline")
    with pytest.raises(ValueError):
        theoretical_exponent(3, 1, 2, 2, "baseline")


def _random_domain(rng, n, exact=True):
    c = tuple(Fraction(rng.randint(-6, 6), 7) for _ in range(n))
    kind = rng.choice(["ball", "ellipsoid", "lp"])
    if kind == "ball":
        return Ball(c, Fraction(rng.randint(4, 16), 9))
    if kind == "ellipsoid":
        while True:
            a = [[Fraction(rng.randint(-2, 2), 3) for _ in range(n)] for _ in range(n)]
            q = [[sum(a[i][k] * a[j][k] for k in range(n)) + (1 if i == j else 0) for j in range(n)] for i in range(n)]
            return Ellipsoid(c, q)
    return LpBall(c, Fraction(rng.randint(5, 12), 8), rng.choice([2, 4, 6]))


SPECS = [
    SubspaceSpec(2),
    SubspaceSpec(2, ((1, 0),)),
    SubspaceSpec(2, ((1, 1),)),
    SubspaceSpec(2, ((1, SQRT2),), d=2),
    SubspaceSpec(3, ((1, 2, 0),)),
    SubspaceSpec(3, ((1, 0, 0), (0, 1, SQRT2)), d=2),
    SubspaceSpec(3, ((1, 1, 1), (0, 1, -1))),
]


@pytest.mark.parametrize("spec", SPECS)
def test_fiber_additivity(spec):
    rng = random.Random(hash(spec.n) + len(spec.f_basis))
    dec = decompose(spec)
    for _ in range(3):
        dom = _random_domain(rng, dec.n)
        for eps in (Fraction(1, 4), Fraction(1, 16)):
            if dec.n == 3 and eps == Fraction(1, 16) and dec.q > 1:
                eps = Fraction(1, 8)
            total = count_points(dec, dom, eps).count
            pts = enumerate_dual_points(dec, dual_truncation_radius(dec, dom))
            assert sum(count_points_fiber(dec, dom, eps, p) for p in pts) == total


def test_matches_brute_force_small():
    rng = random.Random(77)
    for spec in SPECS:
        dec = decompose(spec)
        dom = _random_domain(rng, dec.n)
        eps = Fraction(1, 4) if dec.n == 3 else Fraction(1, 8)
        assert count_points(dec, dom, eps).count == brute_count(dec, dom, eps)


def test_float_mode_agrees_off_boundary():
    rng = random.Random(3)
    for spec in SPECS[:4]:
        dec = decompose(spec)
        dom = _random_domain(rng, 2)
        a = count_points(dec, dom, Fraction(1, 16))
        b = count_points(dec, dom, Fraction(1, 16), "float")
        assert b.guard_band_hits > 0 or a.count == b.count


def test_gamma_translation_invariance():
    dom = Ellipsoid((Fraction(1, 5), Fraction(1, 7)), ((1, Fraction(1, 3)), (Fraction(1, 3), 2)))
    moved = Ellipsoid((Fraction(1, 5) + 3, Fraction(1, 7) + 3), dom.quad)
    for eps in (Fraction(1, 4), Fraction(1, 9)):
        assert count_points(D_DIAG, dom, eps).count == count_points(D_DIAG, moved, eps).count


def test_monotonicity():
    prev = None
    for j in range(1, 8):
        c = count_points(D_KRON, UNIT, Fraction(1, 2**j)).count
        assert prev is None or c >= prev
        prev = c
    small = count_points(D_X, Ball.from_radius((0, 0), Fraction(1, 2)), Fraction(1, 20)).count
    assert small <= count_points(D_X, UNIT, Fraction(1, 20)).count


def test_scaling_consistency():
    dec = decompose(SubspaceSpec(3))
    ball = Ball.from_radius((0, 0, 0), Fraction(3, 2))
    eps = Fraction(1, 5)
    assert main_term(dec, ball, eps)[0] == pytest.approx(float(eps) ** -3 * unit_ball_volume(3) * 1.5**3)
    e = Ellipsoid((0, 0), ((4, 0), (0, 1)))
    assert main_term(D_ZERO, e, eps)[0] == pytest.approx(25 * math.pi / 2)


def test_main_term_invariant_under_vperp_rotation():
    # F = span{(1,0,0)}: V is the x-axis, rotations of the yz-plane fix every slice plane
    dec = decompose(SubspaceSpec(3, ((1, 0, 0),)))
    dom = Ellipsoid((Fraction(1, 3), Fraction(1, 5), 0), ((1, 0, 0), (0, 2, Fraction(1, 2)), (0, Fraction(1, 2), 1)))
    t = 0.7
    r = np.array([[1, 0, 0], [0, math.cos(t), -math.sin(t)], [0, math.sin(t), math.cos(t)]])
    eps = Fraction(1, 8)
    assert main_term(dec, apply_rotation(dom, r), eps)[0] == pytest.approx(main_term(dec, dom, eps)[0], rel=1e-10)


def test_lp_main_term_error_is_reported():
    val, err = main_term(D_X, LpBall((0, 0), 1, 4), Fraction(1, 4), seed=5)
    assert err > 0
    assert val == pytest.approx(4 * 2, rel=5e-3)


def test_lp_ball_boundary_points_are_decided_exactly():
    # x^4 + y^4 < 16 has (+-2, 0) and (0, +-2) on its boundary
    lp = LpBall((0, 0), 2, 4)
    rec = count_points(D_ZERO, lp, 1)
    want = sum(x**4 + y**4 < 16 for x in range(-3, 4) for y in range(-3, 4))
    assert rec.count == want
    assert rec.boundary_points == 4
    assert count_points(D_ZERO, lp, 1, "float").guard_band_hits > 0
