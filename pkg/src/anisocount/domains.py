"""Bounded open bodies: balls, ellipsoids and even-exponent l^p balls.

Each body carries a pose ``x -> R x0 + t`` over its base shape.  Membership
is strict (open sets).  Two evaluation modes exist: ``"exact"`` decides by
rational / Q(sqrt d) comparison and never hedges, ``"float"`` reports
:attr:`Membership.BOUNDARY` when the defining functional is within
:data:`GUARD_BAND` of its level.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import exact as ex
from .enumeration import GUARD_BAND, GeometryError, ldl

__all__ = [
    "Membership",
    "ModeUnavailable",
    "Domain",
    "Ball",
    "Ellipsoid",
    "LpBall",
    "AffineSlice",
    "contains",
    "bounding_box",
    "slice_volume",
    "mc_slice_volume",
    "unit_ball_volume",
    "lp_ball_volume",
    "apply_rotation",
    "GeometryError",
]

MC_TARGET_REL_SE = 1e-3
MC_BATCH = 1 << 16
MC_MAX_SAMPLES = 1 << 23
ORTHO_TOL = 1e-12


class Membership(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary-indeterminate"


class ModeUnavailable(ValueError):
    """Exact evaluation was requested for data that is not exact."""


def _num(x):
    if isinstance(x, (ex.QuadScalar, Fraction)):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return Fraction(int(x))
    return float(x)


def _vec(v):
    return tuple(_num(x) for x in v)


def _mat(m):
    return tuple(tuple(_num(x) for x in row) for row in np.asarray(m, dtype=object))


def _all_exact(values) -> bool:
    return all(not isinstance(x, float) for x in values)


def _flat(m):
    return [x for row in m for x in row]


def _rationalize(x):
    return Fraction(x) if isinstance(x, float) else x


def _fmat(m, n):
    if m is None:
        return np.eye(n)
    return np.array([[float(x) for x in row] for row in m])


def _check_rotation(r, n):
    rf = _fmat(r, n)
    if rf.shape != (n, n):
        raise ValueError("rotation has the wrong shape")
    if np.max(np.abs(rf.T @ rf - np.eye(n))) > ORTHO_TOL:
        raise ValueError("rotation is not orthogonal")
    if np.linalg.det(rf) < 0:
        raise ValueError("rotation has determinant -1")


class Domain:
    """Common interface; concrete shapes are frozen dataclasses."""

    center: tuple

    @property
    def dim(self) -> int:
        return len(self.center)

    def exact_values(self):
        raise NotImplementedError

    def is_exact(self) -> bool:
        return _all_exact(self.exact_values())

    def require_exact(self):
        if not self.is_exact():
            raise ModeUnavailable("exact mode needs rational or Q(sqrt d) domain data")

    def level_exact(self, x):
        """Defining functional, exact: inside iff ``< 1``."""
        raise NotImplementedError

    def level_float(self, pts: np.ndarray) -> np.ndarray:
        """Vectorised defining functional for an ``(N, n)`` array."""
        raise NotImplementedError

    def bounding_sphere(self):
        """``(center, radius)`` as floats; the sphere contains the closure."""
        raise NotImplementedError

    def world_center(self) -> np.ndarray:
        return self.bounding_sphere()[0]


def _pose_apply(rot, trans, base_center, n, exact):
    """World-space centre ``R c0 + t``."""
    if exact:
        r = rot if rot is not None else ex.identity(n, Fraction(1))
        t = trans if trans is not None else (Fraction(0),) * n
        return tuple(sum((r[i][j] * base_center[j] for j in range(n)), Fraction(0)) + t[i] for i in range(n))
    r = _fmat(rot, n)
    t = np.zeros(n) if trans is None else np.array([float(x) for x in trans])
    return tuple(r @ np.array([float(x) for x in base_center]) + t)


def _to_base(rot, trans, x, n):
    """Exact ``R^T (x - t)``."""
    if trans is not None:
        x = [xi - ti for xi, ti in zip(x, trans)]
    if rot is None:
        return list(x)
    return [sum((rot[j][i] * x[j] for j in range(n)), Fraction(0)) for i in range(n)]


def _to_base_float(rot, trans, pts, n):
    if trans is not None:
        pts = pts - np.array([float(x) for x in trans])
    if rot is None:
        return pts
    return pts @ _fmat(rot, n)


@dataclass(frozen=True)
class Ball(Domain):
    """Open Euclidean ball.  Stores the squared radius so irrational radii
    such as ``sqrt(lambda)`` stay exact."""

    center: tuple
    radius_sq: object

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "radius_sq", _num(self.radius_sq))
        if not self.radius_sq > 0:
            raise ValueError("radius must be positive")

    @classmethod
    def from_radius(cls, center, radius):
        r = _num(radius)
        return cls(center, r * r)

    @property
    def radius(self) -> float:
        return math.sqrt(float(self.radius_sq))

    def exact_values(self):
        return (*self.center, self.radius_sq)

    def level_exact(self, x):
        s = sum(((xi - ci) * (xi - ci) for xi, ci in zip(x, self.center)), Fraction(0))
        return s / self.radius_sq

    def level_float(self, pts):
        c = np.array([float(x) for x in self.center])
        return np.sum((pts - c) ** 2, axis=-1) / float(self.radius_sq)

    def bounding_sphere(self):
        return np.array([float(x) for x in self.center]), self.radius

    def quadric(self, d: int, exact: bool = True):
        n = self.dim
        if exact:
            c = [ex.to_field(x, d) for x in self.center]
            one = ex.to_field(1, d)
            zero = ex.to_field(0, d)
            a = [[one if i == j else zero for j in range(n)] for i in range(n)]
            g = sum((x * x for x in c), zero) - ex.to_field(self.radius_sq, d)
            return a, c, g
        c = [float(x) for x in self.center]
        return np.eye(n).tolist(), c, sum(x * x for x in c) - float(self.radius_sq)

    def rationalized(self):
        return Ball(tuple(map(_rationalize, self.center)), _rationalize(self.radius_sq))


@dataclass(frozen=True)
class Ellipsoid(Domain):
    """``{R x0 + t : (x0 - c)^T Q (x0 - c) < 1}``."""

    center: tuple
    quad: tuple
    rotation: tuple | None = None
    translation: tuple | None = None

    def __post_init__(self):
        n = len(self.center)
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "quad", _mat(self.quad))
        if len(self.quad) != n or any(len(row) != n for row in self.quad):
            raise ValueError("quad matrix has the wrong shape")
        if any(self.quad[i][j] != self.quad[j][i] for i in range(n) for j in range(n)):
            raise ValueError("quad matrix is not symmetric")
        if _all_exact(_flat(self.quad)):
            ldl(self.quad)
        else:
            try:
                np.linalg.cholesky(_fmat(self.quad, n))
            except np.linalg.LinAlgError:
                raise GeometryError("quad matrix is not positive definite") from None
        if self.rotation is not None:
            object.__setattr__(self, "rotation", _mat(self.rotation))
            _check_rotation(self.rotation, n)
        if self.translation is not None:
            object.__setattr__(self, "translation", _vec(self.translation))

    def exact_values(self):
        vals = [*self.center, *_flat(self.quad)]
        if self.rotation is not None:
            vals += _flat(self.rotation)
        if self.translation is not None:
            vals += list(self.translation)
        return vals

    def _base_exact(self, x):
        return _to_base(self.rotation, self.translation, x, self.dim)

    def level_exact(self, x):
        u = [ui - ci for ui, ci in zip(self._base_exact(x), self.center)]
        n = self.dim
        return sum((u[i] * self.quad[i][j] * u[j] for i in range(n) for j in range(n)), Fraction(0))

    def level_float(self, pts):
        n = self.dim
        u = _to_base_float(self.rotation, self.translation, pts, n) - np.array([float(x) for x in self.center])
        return np.einsum("...i,ij,...j->...", u, _fmat(self.quad, n), u)

    def world_quad(self) -> np.ndarray:
        r = _fmat(self.rotation, self.dim)
        return r @ _fmat(self.quad, self.dim) @ r.T

    def bounding_sphere(self):
        n = self.dim
        c = np.array(_pose_apply(self.rotation, self.translation, self.center, n, False), dtype=float)
        lam_min = np.linalg.eigvalsh(_fmat(self.quad, n))[0]
        return c, 1.0 / math.sqrt(lam_min)

    def quadric(self, d: int, exact: bool = True):
        """``(A, b, g)`` with ``x in S  iff  x^T A x - 2 b^T x + g < 0``."""
        n = self.dim
        if exact:
            conv = lambda x: ex.to_field(x, d)  # noqa: E731
            zero = conv(0)
            q0 = [[conv(x) for x in row] for row in self.quad]
            rot = (
                [[conv(x) for x in row] for row in self.rotation]
                if self.rotation is not None
                else [[conv(int(i == j)) for j in range(n)] for i in range(n)]
            )
            t = [conv(x) for x in self.translation] if self.translation is not None else [zero] * n
            c0 = [conv(x) for x in self.center]
        else:
            zero = 0.0
            q0 = _fmat(self.quad, n).tolist()
            rot = _fmat(self.rotation, n).tolist()
            t = [float(x) for x in self.translation] if self.translation is not None else [0.0] * n
            c0 = [float(x) for x in self.center]
        # base point bv = R^T t + c0, so membership reads (R^T x - bv)^T Q0 (R^T x - bv) < 1
        bv = [sum((rot[j][i] * t[j] for j in range(n)), zero) + c0[i] for i in range(n)]
        rq = [[sum((rot[i][k] * q0[k][j] for k in range(n)), zero) for j in range(n)] for i in range(n)]
        a = [[sum((rq[i][k] * rot[j][k] for k in range(n)), zero) for j in range(n)] for i in range(n)]
        b = [sum((rq[i][k] * bv[k] for k in range(n)), zero) for i in range(n)]
        g = sum((bv[i] * q0[i][j] * bv[j] for i in range(n) for j in range(n)), zero) - 1
        return a, b, g

    def rationalized(self):
        rat = lambda m: None if m is None else tuple(tuple(map(_rationalize, row)) for row in m)  # noqa: E731
        return Ellipsoid(
            tuple(map(_rationalize, self.center)),
            rat(self.quad),
            rat(self.rotation),
            None if self.translation is None else tuple(map(_rationalize, self.translation)),
        )


@dataclass(frozen=True)
class LpBall(Domain):
    """``{R x0 + t : sum |x0_i - c_i|^p < radius^p}`` for even ``p >= 2``."""

    center: tuple
    radius: object
    exponent: int
    rotation: tuple | None = None
    translation: tuple | None = None

    def __post_init__(self):
        n = len(self.center)
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "radius", _num(self.radius))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.exponent < 2 or self.exponent % 2:
            raise ValueError("exponent must be an even integer >= 2")
        if self.rotation is not None:
            object.__setattr__(self, "rotation", _mat(self.rotation))
            _check_rotation(self.rotation, n)
        if self.translation is not None:
            object.__setattr__(self, "translation", _vec(self.translation))

    def exact_values(self):
        vals = [*self.center, self.radius]
        if self.rotation is not None:
            vals += _flat(self.rotation)
        if self.translation is not None:
            vals += list(self.translation)
        return vals

    def level_exact(self, x):
        u = _to_base(self.rotation, self.translation, x, self.dim)
        p = self.exponent
        s = sum(((ui - ci) ** p for ui, ci in zip(u, self.center)), Fraction(0))
        return s / (self.radius**p)

    def level_float(self, pts):
        u = _to_base_float(self.rotation, self.translation, pts, self.dim)
        u = (u - np.array([float(x) for x in self.center])) / float(self.radius)
        return np.sum(u**self.exponent, axis=-1)

    def bounding_sphere(self):
        n = self.dim
        c = np.array(_pose_apply(self.rotation, self.translation, self.center, n, False), dtype=float)
        return c, float(self.radius) * n ** (0.5 - 1.0 / self.exponent)

    def line_polynomial(self, origin, direction):
        """Float coefficients (highest first) of ``level(origin + s*direction) - 1``."""
        n = self.dim
        o = np.array([float(x) for x in origin])[None, :]
        v = np.array([float(x) for x in direction])[None, :]
        rf = _fmat(self.rotation, n)
        alpha = (_to_base_float(self.rotation, self.translation, o, n)[0] - [float(x) for x in self.center])
        beta = (v @ rf)[0]
        r = float(self.radius)
        alpha, beta = alpha / r, beta / r
        p = self.exponent
        coef = np.zeros(p + 1)
        for a_i, b_i in zip(alpha, beta):
            # (a + b s)^p expanded, ascending powers of s
            coef += np.array([math.comb(p, k) * a_i ** (p - k) * b_i**k for k in range(p + 1)])
        coef[0] -= 1.0
        return coef[::-1]

    def rationalized(self):
        rat = lambda m: None if m is None else tuple(tuple(map(_rationalize, row)) for row in m)  # noqa: E731
        return LpBall(
            tuple(map(_rationalize, self.center)),
            _rationalize(self.radius),
            self.exponent,
            rat(self.rotation),
            None if self.translation is None else tuple(map(_rationalize, self.translation)),
        )


def contains(dom: Domain, x, mode: str = "exact") -> Membership:
    """Strict membership of ``x`` in the open body ``dom``."""
    if len(x) != dom.dim:
        raise ValueError("dimension mismatch")
    if mode == "exact":
        dom.require_exact()
        if not _all_exact(_vec(x)):
            raise ModeUnavailable("exact mode needs an exact point")
        lvl = dom.level_exact(list(_vec(x)))
        return Membership.INSIDE if lvl < 1 else Membership.OUTSIDE
    if mode != "float":
        raise ValueError(f"unknown mode {mode!r}")
    lvl = float(dom.level_float(np.array([[float(v) for v in x]]))[0])
    if abs(lvl - 1.0) <= GUARD_BAND:
        return Membership.BOUNDARY
    return Membership.INSIDE if lvl < 1 else Membership.OUTSIDE


def bounding_box(dom: Domain):
    """Per-axis closed intervals containing the closure of ``dom``."""
    n = dom.dim
    if isinstance(dom, Ball):
        return [(float(c) - dom.radius, float(c) + dom.radius) for c in dom.center]
    if isinstance(dom, Ellipsoid):
        c = _pose_apply(dom.rotation, dom.translation, dom.center, n, False)
        inv = np.linalg.inv(dom.world_quad())
        half = np.sqrt(np.diag(inv))
        return [(float(ci) - h, float(ci) + h) for ci, h in zip(c, half)]
    if isinstance(dom, LpBall):
        c, rad = dom.bounding_sphere()
        if dom.rotation is None:
            rad = float(dom.radius)
        return [(ci - rad, ci + rad) for ci in c]
    raise TypeError(f"unsupported domain {type(dom).__name__}")


def unit_ball_volume(m: int) -> float:
    """Volume of the Euclidean unit ball in R^m."""
    if m < 0:
        raise ValueError("dimension must be non-negative")
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def lp_ball_volume(n: int, p: int, radius: float) -> float:
    return (2 * math.gamma(1 + 1 / p) * radius) ** n / math.gamma(1 + n / p)


class AffineSlice(NamedTuple):
    """The plane ``base + span(directions)``; ``directions`` is ``(n, m)`` orthonormal."""

    base: np.ndarray
    directions: np.ndarray

    @classmethod
    def make(cls, base, directions):
        b = np.array([float(x) for x in base])
        w = np.asarray(directions, dtype=float)
        if w.ndim != 2 or w.shape[0] != b.shape[0]:
            raise ValueError("slice directions have the wrong shape")
        if np.max(np.abs(w.T @ w - np.eye(w.shape[1])), initial=0.0) > ORTHO_TOL:
            raise ValueError("slice directions are not orthonormal")
        if w.shape[1] and np.max(np.abs(w.T @ b)) > 1e-9 * max(1.0, np.linalg.norm(b)):
            raise ValueError("slice base point is not orthogonal to the directions")
        return cls(b, w)


def slice_volume(dom: Domain, slc: AffineSlice, seed: int | None = None):
    """``(volume, abs_error)`` of the ``m``-dimensional section ``dom ∩ slc``.

    Quadric bodies use the closed form (error 0).  l^p balls use Monte Carlo
    over the section's bounding cube, except when the slice is the whole
    space, where the closed-form body volume applies.
    """
    a, w = slc.base, slc.directions
    m = w.shape[1]
    if m < 1:
        raise ValueError("slice dimension must be at least 1")
    n = dom.dim
    if isinstance(dom, (Ball, Ellipsoid)):
        A, b, g = dom.quadric(0, exact=False)
        A = np.array(A, dtype=float)
        b = np.array(b, dtype=float)
        B = w.T @ A @ w
        bw = w.T @ (b - A @ a)
        gw = a @ A @ a - 2 * b @ a + g
        try:
            chol = np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            raise GeometryError("restricted quadratic form is not positive definite") from None
        u = np.linalg.solve(B, bw)
        level = bw @ u - gw
        if level <= 0:
            return 0.0, 0.0
        det_sqrt = float(np.prod(np.diag(chol)))
        return unit_ball_volume(m) * level ** (m / 2) / det_sqrt, 0.0
    if isinstance(dom, LpBall):
        if m == n:
            return lp_ball_volume(n, dom.exponent, float(dom.radius)), 0.0
        return mc_slice_volume(dom, slc, seed)
    raise TypeError(f"unsupported domain {type(dom).__name__}")


def mc_slice_volume(dom: Domain, slc: AffineSlice, seed: int | None = None):
    """Monte Carlo ``(volume, standard_error)`` of a section, for any shape.

    Samples uniformly in the cube around the section of the bounding sphere
    until the relative standard error reaches ``MC_TARGET_REL_SE``.
    """
    a, w = slc.base, slc.directions
    cs, rs = dom.bounding_sphere()
    u0 = w.T @ (cs - a)
    dist_sq = float(np.sum((cs - a) ** 2) - np.sum(u0**2))
    if dist_sq >= rs * rs:
        return 0.0, 0.0
    rho = math.sqrt(rs * rs - max(dist_sq, 0.0))
    m = w.shape[1]
    box_vol = (2 * rho) ** m
    rng = np.random.default_rng(seed)
    hits = 0
    total = 0
    while total < MC_MAX_SAMPLES:
        u = u0 + rho * (2 * rng.random((MC_BATCH, m)) - 1)
        hits += int(np.count_nonzero(dom.level_float(a + u @ w.T) < 1))
        total += MC_BATCH
        if hits:
            frac = hits / total
            rel = math.sqrt((1 - frac) / (frac * total))
            if rel <= MC_TARGET_REL_SE:
                break
        elif total >= 16 * MC_BATCH:
            break
    frac = hits / total
    se = box_vol * math.sqrt(max(frac * (1 - frac), 1.0 / total) / total)
    return box_vol * frac, se


def apply_rotation(dom: Domain, rot) -> Domain:
    """The image ``rot(dom)`` for an orthogonal ``rot`` (rotation about the origin).

    Satisfies ``contains(apply_rotation(dom, R), R x) == contains(dom, x)``.
    """
    n = dom.dim
    rmat = _mat(rot)
    _check_rotation(rmat, n)
    exact = _all_exact(_flat(rmat))

    def mul(m, v):
        return tuple(sum((m[i][j] * v[j] for j in range(n)), Fraction(0) if exact else 0.0) for i in range(n))

    def compose(m1, m2):
        if m2 is None:
            return m1
        return tuple(
            tuple(sum((m1[i][k] * m2[k][j] for k in range(n)), Fraction(0) if exact else 0.0) for j in range(n))
            for i in range(n)
        )

    if isinstance(dom, Ball):
        if all(c == 0 for c in dom.center):
            return dom
        return replace(dom, center=mul(rmat, dom.center))
    if isinstance(dom, (Ellipsoid, LpBall)):
        trans = None if dom.translation is None else mul(rmat, dom.translation)
        return replace(dom, rotation=compose(rmat, dom.rotation), translation=trans)
    raise TypeError(f"unsupported domain {type(dom).__name__}")
