"""Integer-point enumeration in ellipsoids and along lines.

The workhorse is a Fincke-Pohst style depth-first walk over an LDL^T
factorisation ``q(y) = sum_i D_i (z_i + sum_{j>i} L_ji z_j)^2`` with
``z = y - c``.  Coordinates are fixed from the last one down; at each level
the admissible values form one integer interval, found from a float guess
and then settled by exact (or guard-banded float) membership tests.  The
innermost coordinate is never iterated: its interval length is the count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .exact import QuadScalar

GUARD_BAND = 1e-9
PRUNE_SLACK = 1e-7


class GeometryError(ValueError):
    """A quadratic form that should be positive definite is not."""


@dataclass
class Tally:
    count: int = 0
    boundary: int = 0
    hits: int = 0
    visited: int = 0

    def merge(self, other: "Tally") -> None:
        self.count += other.count
        self.boundary += other.boundary
        self.hits += other.hits
        self.visited += other.visited


def ldl(a):
    """LDL^T factorisation with positive-pivot check.

    Works for float and exact entries alike.  Returns ``(L, D)`` with ``L``
    unit lower-triangular (list of lists).  Raises :class:`GeometryError` on
    a non-positive pivot.
    """
    m = len(a)
    L = [[0] * m for _ in range(m)]
    D = [0] * m
    for j in range(m):
        s = a[j][j]
        for k in range(j):
            s = s - L[j][k] * L[j][k] * D[k]
        if not s > 0:
            raise GeometryError("quadratic form is not positive definite")
        D[j] = s
        L[j][j] = 1
        for i in range(j + 1, m):
            t = a[i][j]
            for k in range(j):
                t = t - L[i][k] * L[j][k] * D[k]
            L[i][j] = t / D[j]
    return L, D


def solve_spd(a, b):
    """Solve ``a x = b`` for symmetric positive definite ``a`` via LDL^T."""
    L, D = ldl(a)
    m = len(b)
    y = list(b)
    for i in range(m):
        for k in range(i):
            y[i] = y[i] - L[i][k] * y[k]
    for i in range(m):
        y[i] = y[i] / D[i]
    for i in reversed(range(m)):
        for k in range(i + 1, m):
            y[i] = y[i] - L[k][i] * y[k]
    return y


def complete_square(a, b, g):
    """For ``q(w) = w^T a w - 2 b^T w + g`` return ``(center, level)``.

    ``q(w) < 0`` iff ``(w - center)^T a (w - center) < level``.
    """
    c = solve_spd(a, b)
    level = -g
    for bi, ci in zip(b, c):
        level = level + bi * ci
    return c, level


def _is_integer(x) -> bool:
    if isinstance(x, QuadScalar):
        return x.b == 0 and x.a.denominator == 1
    if isinstance(x, Fraction):
        return x.denominator == 1
    return float(x).is_integer()


def _float_interval(ctr: float, budget: float, dv: float):
    if budget <= 0:
        return 1, 0
    w = math.sqrt(budget / dv)
    return math.ceil(ctr - w), math.floor(ctr + w)


class _Walker:
    """Depth-first walk over a normalised ellipsoid ``(y-c)^T A (y-c) < 1``."""

    def __init__(self, a, c, exact: bool, prune: bool = False):
        self.exact = exact
        self.prune = prune
        if exact:
            self.L, self.D = ldl(a)
            self.c = list(c)
            self.Lf = [[float(x) for x in row] for row in self.L]
            self.Df = [float(x) for x in self.D]
            self.cf = [float(x) for x in c]
        else:
            self.Lf, self.Df = ldl([[float(x) for x in row] for row in a])
            self.cf = [float(x) for x in c]
        self.m = len(self.Df)

    def _centers(self, i, y):
        Lf, cf = self.Lf, self.cf
        ctr_f = cf[i]
        for j in range(i + 1, self.m):
            ctr_f -= Lf[j][i] * (y[j] - cf[j])
        if not self.exact:
            return None, ctr_f
        L, c = self.L, self.c
        ctr = c[i]
        for j in range(i + 1, self.m):
            ctr = ctr - L[j][i] * (y[j] - c[j])
        return ctr, ctr_f

    def interval(self, i, y, budget, budget_f, tally):
        """Integer range of coordinate ``i`` given ``y[i+1:]``."""
        ctr, ctr_f = self._centers(i, y)
        dv_f = self.Df[i]
        if self.prune:
            bud = budget_f * (1 + PRUNE_SLACK) + PRUNE_SLACK
            lo, hi = _float_interval(ctr_f, bud, dv_f)
            return lo - 1, hi + 1, ctr, ctr_f
        if self.exact:
            dv = self.D[i]

            def inside(v):
                t = v - ctr
                return dv * t * t < budget
        else:

            def inside(v):
                t = v - ctr_f
                return budget_f - dv_f * t * t > 0

        lo, hi = _float_interval(ctr_f, budget_f, dv_f)
        if lo > hi:
            v = round(ctr_f)
            if not inside(v):
                if not self.exact:
                    self._guard(i, (v,), budget_f, ctr_f, tally)
                else:
                    self._boundary(i, (v,), y, budget, ctr, tally)
                return 1, 0, ctr, ctr_f
            lo = hi = v
        if inside(lo):
            while inside(lo - 1):
                lo -= 1
        else:
            while lo <= hi and not inside(lo):
                lo += 1
        if inside(hi):
            while inside(hi + 1):
                hi += 1
        else:
            while hi >= lo and not inside(hi):
                hi -= 1
        if self.exact:
            self._boundary(i, (lo - 1, hi + 1), y, budget, ctr, tally)
        else:
            cand = (lo - 1, hi + 1) if lo > hi else (lo - 1, lo, hi, hi + 1)
            self._guard(i, cand, budget_f, ctr_f, tally)
        return lo, hi, ctr, ctr_f

    def _guard(self, i, cand, budget_f, ctr_f, tally):
        dv = self.Df[i]
        for v in sorted(set(cand)):
            t = v - ctr_f
            if abs(budget_f - dv * t * t) <= GUARD_BAND:
                tally.hits += 1

    def _boundary(self, i, cand, y, budget, ctr, tally):
        dv = self.D[i]
        for v in sorted(set(cand)):
            t = v - ctr
            if dv * t * t == budget:
                # the remaining coordinates are pinned to their centres
                yy = list(y)
                yy[i] = v
                ok = True
                for j in range(i - 1, -1, -1):
                    cj, _ = self._centers(j, yy)
                    if not _is_integer(cj):
                        ok = False
                        break
                    yy[j] = int(cj.a if isinstance(cj, QuadScalar) else cj)
                if ok:
                    tally.boundary += 1

    def count(self, tally: Tally) -> Tally:
        y = [0] * self.m
        if self.m == 0:
            tally.count += 1
            return tally

        def rec(i, budget, budget_f):
            lo, hi, ctr, ctr_f = self.interval(i, y, budget, budget_f, tally)
            tally.visited += 1
            if lo > hi:
                return
            if i == 0:
                tally.count += hi - lo + 1
                return
            dv, dv_f = (self.D[i] if self.exact else None), self.Df[i]
            for v in range(lo, hi + 1):
                y[i] = v
                t_f = v - ctr_f
                if self.exact:
                    t = v - ctr
                    rec(i - 1, budget - dv * t * t, budget_f - dv_f * t_f * t_f)
                else:
                    rec(i - 1, None, budget_f - dv_f * t_f * t_f)
            y[i] = 0

        one = None
        if self.exact:
            one = QuadScalar(1) if any(isinstance(x, QuadScalar) for x in self.c) else Fraction(1)
        rec(self.m - 1, one, 1.0)
        return tally

    def prefixes(self, depth: int):
        """Yield integer tuples ``(y_depth, ..., y_{m-1})`` of a superset."""
        y = [0] * self.m
        if self.m == depth:
            yield ()
            return
        dummy = Tally()

        def rec(i, budget_f):
            lo, hi, _, ctr_f = self.interval(i, y, None, budget_f, dummy)
            for v in range(lo, hi + 1):
                y[i] = v
                t = v - ctr_f
                nb = budget_f - self.Df[i] * t * t
                if i == depth:
                    yield tuple(y[depth:])
                elif nb > -PRUNE_SLACK:
                    yield from rec(i - 1, max(nb, 0.0))
            y[i] = 0

        yield from rec(self.m - 1, 1.0)


def _normalised(a, b, g, exact):
    c, level = complete_square(a, b, g)
    if not level > 0:
        return None, None
    if exact:
        an = [[x / level for x in row] for row in a]
    else:
        an = [[float(x) / float(level) for x in row] for row in a]
    return an, c


def count_quadric(a, b, g, exact: bool, tally: Tally | None = None) -> Tally:
    """Count integer ``w`` with ``w^T a w - 2 b^T w + g < 0`` (``a`` SPD)."""
    tally = Tally() if tally is None else tally
    if not exact:
        a = [[float(x) for x in row] for row in a]
        b = [float(x) for x in b]
        g = float(g)
    an, c = _normalised(a, b, g, exact)
    if an is None:
        return tally
    return _Walker(an, c, exact).count(tally)


def quadric_superset(a, b, g, depth: int = 0):
    """Yield integer tuples covering every point of ``q(w) <= 0``.

    With ``depth > 0`` only the trailing coordinates ``w[depth:]`` are
    enumerated (the projection of the body).  Float arithmetic with a small
    outward slack; callers filter exactly when they need equality.
    """
    a = [[float(x) for x in row] for row in a]
    b = [float(x) for x in b]
    g = float(g)
    an, c = _normalised(a, b, g, False)
    if an is None:
        return iter(())
    return _Walker(an, c, exact=False, prune=True).prefixes(depth)
