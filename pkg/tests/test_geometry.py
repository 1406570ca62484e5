import itertools
import random
from fractions import Fraction

import pytest

from anisocount import exact as ex
from anisocount.exact import QuadScalar
from anisocount.geometry import (
    SubspaceSpec,
    classify_fiber,
    decompose,
    decomposition_report,
    enumerate_dual_points,
)

SQRT2 = QuadScalar(0, 1, 2)


def random_rational_spec(rng, n):
    while True:
        p = rng.randint(1, n - 1) if n > 1 else 1
        basis = [tuple(rng.randint(-3, 3) for _ in range(n)) for _ in range(p)]
        if ex.field_rank(basis) == p:
            return SubspaceSpec(n, tuple(basis))


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def test_x_axis():
    dec = decompose(SubspaceSpec(2, ((1, 0),)))
    assert dec.r == 1 and dec.q == 1
    assert list(dec.gamma_columns()) == [(1, 0)]
    assert list(ex.columns(dec.gamma_star_basis)) == [(1, 0)]
    assert [tuple(abs(x) for x in c) for c in dec.gamma_perp_columns()] == [(0, 1)]
    assert dec.covol_sq == 1


def test_irrational_line():
    dec = decompose(SubspaceSpec(2, ((1, SQRT2),), d=2))
    assert dec.r == 0 and dec.covol_sq == 1
    assert sorted(dec.gamma_perp_columns()) == [(0, 1), (1, 0)]
    assert dec.fv_basis == dec.f_basis


def test_diagonal_line():
    dec = decompose(SubspaceSpec(2, ((1, 1),)))
    assert list(dec.gamma_columns()) == [(1, 1)]
    assert dec.covol_sq == 2
    assert list(ex.columns(dec.gamma_star_basis)) == [(Fraction(1, 2), Fraction(1, 2))]
    (g,) = dec.gamma_perp_columns()
    assert g in ((1, -1), (-1, 1))
    assert ex.covolume_sq(dec.gamma_perp_basis) == 2


def test_trivial_subspace():
    dec = decompose(SubspaceSpec(3))
    assert dec.p == 0 and dec.r == 0 and dec.q == 3
    assert dec.covol_sq == 1
    assert enumerate_dual_points(dec, 5)[0].coords == ()


def test_dependent_basis_rejected():
    with pytest.raises(ValueError):
        SubspaceSpec(3, ((1, 2, 3), (2, 4, 6)))


def test_irrational_plane_in_r3_has_partial_rank():
    # F = span{(1,0,0), (0,1,sqrt2)} meets Z^3 only along the x-axis
    dec = decompose(SubspaceSpec(3, ((1, 0, 0), (0, 1, SQRT2)), d=2))
    assert dec.p == 2 and dec.r == 1
    assert list(dec.gamma_columns()) == [(1, 0, 0)]
    assert len(dec.fv_basis) == 1


def test_covolume_identity_and_duality_random():
    rng = random.Random(11)
    for _ in range(20):
        n = rng.randint(2, 4)
        dec = decompose(random_rational_spec(rng, n))
        assert dec.r == dec.p
        assert ex.covolume_sq(dec.gamma_perp_basis) == dec.covol_sq
        assert len(dec.gamma_perp_columns()) == n - dec.r
        for i, gs in enumerate(ex.columns(dec.gamma_star_basis)):
            for j, g in enumerate(dec.gamma_columns()):
                assert dot(gs, g) == (1 if i == j else 0)
        for g in dec.gamma_columns():
            assert all(dot(h, g) == 0 for h in dec.h_basis)


@pytest.mark.parametrize(
    "spec",
    [
        SubspaceSpec(2, ((1, SQRT2),), d=2),
        SubspaceSpec(3, ((1, 0, 0), (0, 1, SQRT2)), d=2),
        SubspaceSpec(3, ((1, 2, -1),)),
    ],
)
def test_projection_algebra(spec):
    dec = decompose(spec)
    n = dec.n
    pf, ph, pv = dec.proj_f, dec.proj_h, dec.proj_v
    for i, j in itertools.product(range(n), repeat=2):
        assert pf[i][j] + ph[i][j] == (1 if i == j else 0)
        assert pf[i][j] == pf[j][i]
    assert ex.matmul(pf, pf) == pf
    assert ex.matmul(ph, ph) == ph
    assert ex.matmul(pv, pf) == tuple(tuple(ex.to_field(x, dec.d) for x in r) for r in pv)


def test_classify_fiber_examples():
    dx = decompose(SubspaceSpec(2, ((1, 0),)))
    fp = classify_fiber(dx, (3, 5))
    assert fp.coords == (3,) and fp.vector == (3, 0)
    dd = decompose(SubspaceSpec(2, ((1, 1),)))
    assert classify_fiber(dd, (1, 0)).vector == (Fraction(1, 2), Fraction(1, 2))
    ds = decompose(SubspaceSpec(2, ((1, SQRT2),), d=2))
    assert classify_fiber(ds, (7, -2)).coords == ()


def test_classify_fiber_constant_on_cosets():
    rng = random.Random(5)
    dec = decompose(SubspaceSpec(3, ((1, 1, 0), (0, 1, 2))))
    perp = dec.gamma_perp_columns()
    for _ in range(30):
        k = [rng.randint(-9, 9) for _ in range(3)]
        coef = [rng.randint(-3, 3) for _ in perp]
        g = [sum(t * c[i] for t, c in zip(coef, perp)) for i in range(3)]
        assert classify_fiber(dec, k) == classify_fiber(dec, [a + b for a, b in zip(k, g)])


def test_enumerate_dual_points_examples():
    dx = decompose(SubspaceSpec(2, ((1, 0),)))
    assert [p.coords for p in enumerate_dual_points(dx, 2.5)] == [(-2,), (-1,), (0,), (1,), (2,)]
    dd = decompose(SubspaceSpec(2, ((1, 1),)))
    assert [p.coords for p in enumerate_dual_points(dd, 1)] == [(-1,), (0,), (1,)]
    ds = decompose(SubspaceSpec(2, ((1, SQRT2),), d=2))
    assert len(enumerate_dual_points(ds, 100)) == 1


@pytest.mark.parametrize("basis", [((1, 2, 0), (0, 1, 1)), ((1, 1, 1),), ((2, 1, 0), (1, 0, 3))])
def test_enumerate_dual_points_brute_force(basis):
    dec = decompose(SubspaceSpec(3, basis))
    gs = ex.columns(dec.gamma_star_basis)
    radius = Fraction(7, 3)
    expected = []
    for m in itertools.product(range(-30, 31), repeat=dec.r):
        v = [sum(c * g[i] for c, g in zip(m, gs)) for i in range(3)]
        if dot(v, v) <= radius * radius:
            expected.append(m)
    got = [p.coords for p in enumerate_dual_points(dec, radius)]
    assert got == sorted(expected)
    assert len(set(got)) == len(got)


def test_report_is_deterministic_and_checks_identity():
    dec = decompose(SubspaceSpec(2, ((1, 1),)))
    text = decomposition_report(dec)
    assert text == decomposition_report(decompose(SubspaceSpec(2, ((1, 1),))))
    assert "covolume identity holds: True" in text
    assert text.startswith("n = 2\np = 1\nq = 1\nr = 1\n")
