"""The subspace decomposition behind anisotropic counting.

Given a subspace ``F`` of R^n this builds ``H = F^perp``, the lattice
``Gamma = Z^n cap F`` (rank ``r``), its rational span ``V``, ``V^perp``,
``F_V = F cap V^perp``, ``Gamma^perp = Z^n cap V^perp``, both dual lattices,
the covolume and the orthogonal projections.  Everything is exact; float
mirrors are attached for hot loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import exact as ex
from .enumeration import quadric_superset

__all__ = [
    "SubspaceSpec",
    "Decomposition",
    "DualPoint",
    "decompose",
    "classify_fiber",
    "enumerate_dual_points",
    "decomposition_report",
]


@dataclass(frozen=True)
class SubspaceSpec:
    """A ``p``-dimensional subspace ``F`` of R^n spanned by exact vectors.

    Entries may be ints, Fractions or :class:`QuadScalar` values in
    Q(sqrt(d)).  ``p == 0`` (an empty basis) is allowed.
    """

    n: int
    f_basis: tuple = ()
    d: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("ambient dimension must be positive")
        if self.d != 0 and not ex.is_squarefree(self.d):
            raise ValueError(f"discriminant {self.d} is not square-free")
        basis = []
        for v in self.f_basis:
            if len(v) != self.n:
                raise ValueError(f"basis vector {v} does not have length {self.n}")
            basis.append(tuple(ex.to_field(x, self.d) for x in v))
        if len(basis) > self.n:
            raise ValueError("more basis vectors than the ambient dimension")
        if basis and ex.field_rank(basis) != len(basis):
            raise ValueError("f_basis is linearly dependent")
        object.__setattr__(self, "f_basis", tuple(basis))

    @property
    def p(self) -> int:
        return len(self.f_basis)


class DualPoint(NamedTuple):
    coords: tuple  # integer coordinates in the dual basis
    vector: tuple  # exact point of V


def _proj(basis_cols, n, d):
    """Orthogonal projection onto the span of the given column vectors."""
    if not basis_cols:
        return tuple(tuple(ex.to_field(0, d) for _ in range(n)) for _ in range(n))
    b = ex.from_columns(basis_cols, n)
    ginv = ex.field_inverse(ex.gram(b))
    return ex.matmul(ex.matmul(b, ginv), ex.transpose(b))


def _floats(m):
    return np.array([[float(x) for x in row] for row in m], dtype=float).reshape(len(m), -1)


def _frame(cols, n):
    """Orthonormal float frame (n x k) for the span of exact columns."""
    if not cols:
        return np.zeros((n, 0))
    b = np.array([[float(x) for x in c] for c in cols]).T
    q, _ = np.linalg.qr(b)
    return q


@dataclass(frozen=True)
class Decomposition:
    n: int
    p: int
    q: int
    d: int
    f_basis: tuple
    h_basis: tuple
    gamma_basis: tuple  # n x r integer matrix
    r: int
    vperp_rational_basis: tuple
    fv_basis: tuple
    gamma_perp_basis: tuple  # n x (n - r) integer matrix
    gamma_star_basis: tuple  # n x r rational matrix
    gamma_perp_star_basis: tuple
    covol_sq: Fraction
    proj_v: tuple
    proj_f: tuple
    proj_h: tuple
    fiber_lift: tuple  # n x r integer matrix L with Gamma^T L = I
    proj_v_f: np.ndarray = field(repr=False, compare=False)
    proj_f_f: np.ndarray = field(repr=False, compare=False)
    proj_h_f: np.ndarray = field(repr=False, compare=False)
    frame_v: np.ndarray = field(repr=False, compare=False)
    frame_vperp: np.ndarray = field(repr=False, compare=False)
    frame_f: np.ndarray = field(repr=False, compare=False)
    frame_h: np.ndarray = field(repr=False, compare=False)

    @property
    def v_basis(self):
        return self.gamma_basis

    @property
    def covolume(self) -> float:
        return math.sqrt(self.covol_sq)

    def gamma_columns(self):
        return ex.columns(self.gamma_basis)

    def gamma_perp_columns(self):
        return ex.columns(self.gamma_perp_basis)

    def zero(self):
        return ex.to_field(0, self.d)


def decompose(spec: SubspaceSpec) -> Decomposition:
    """Build the full decomposition for ``spec``."""
    n, d = spec.n, spec.d
    fb = list(spec.f_basis)
    p = len(fb)
    if p:
        h_basis = [tuple(ex.to_field(x, d) for x in v) for v in ex.field_kernel(fb, n)]
    else:
        h_basis = [tuple(ex.to_field(int(i == j), d) for j in range(n)) for i in range(n)]
    q = n - p

    # Gamma = integers annihilated by every vector of H
    gamma = ex.integer_kernel(h_basis, n, d) if h_basis else ex.identity(n)
    gcols = ex.columns(gamma)
    r = len(gcols)

    if r:
        gt = ex.transpose(gamma)
        vperp = ex.field_kernel([tuple(Fraction(x) for x in row) for row in gt], n)
        hg, u = ex.hnf(gt)
        # Gamma is saturated, so k -> Gamma^T k is onto Z^r and its HNF is [I | 0]
        if any(hg[i][j] != int(i == j) for i in range(r) for j in range(r)):
            raise ArithmeticError("Gamma basis is not primitive")
        lift = tuple(tuple(row[:r]) for row in u)
        gamma_perp = ex.integer_kernel(gt, n) if r < n else tuple(() for _ in range(n))
        # F_V: combinations of the F basis orthogonal to Gamma
        gf = [tuple(sum((x * y for x, y in zip(g, f)), ex.to_field(0, d)) for f in fb) for g in gcols]
        coeffs = ex.field_kernel(gf, p)
        fv = [
            tuple(sum((c * f[i] for c, f in zip(cv, fb)), ex.to_field(0, d)) for i in range(n))
            for cv in coeffs
        ]
    else:
        vperp = [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
        lift = tuple(() for _ in range(n))
        gamma_perp = ex.identity(n)
        fv = list(fb)

    gstar = ex.dual_basis(gamma)
    gpstar = ex.dual_basis(gamma_perp)
    covol_sq = ex.covolume_sq(gamma)

    proj_v = _proj(gcols, n, 0)
    proj_f = _proj(fb, n, d)
    one = ex.to_field(1, d)
    proj_h = tuple(
        tuple((one if i == j else ex.to_field(0, d)) - proj_f[i][j] for j in range(n)) for i in range(n)
    )
    proj_f = tuple(tuple(ex.to_field(x, d) for x in row) for row in proj_f)

    return Decomposition(
        n=n,
        p=p,
        q=q,
        d=d,
        f_basis=tuple(fb),
        h_basis=tuple(h_basis),
        gamma_basis=gamma,
        r=r,
        vperp_rational_basis=tuple(vperp),
        fv_basis=tuple(fv),
        gamma_perp_basis=gamma_perp,
        gamma_star_basis=gstar,
        gamma_perp_star_basis=gpstar,
        covol_sq=Fraction(covol_sq),
        proj_v=proj_v,
        proj_f=proj_f,
        proj_h=proj_h,
        fiber_lift=lift,
        proj_v_f=_floats(proj_v),
        proj_f_f=_floats(proj_f),
        proj_h_f=_floats(proj_h),
        frame_v=_frame(gcols, n),
        frame_vperp=_frame(vperp, n),
        frame_f=_frame(fb, n),
        frame_h=_frame(h_basis, n),
    )


def classify_fiber(dec: Decomposition, k) -> DualPoint:
    """The dual point ``pi_V(k)`` labelling the fiber that contains ``k``.

    Coordinates in the dual basis are the integers ``(gamma_i, k)``.
    """
    k = tuple(int(x) for x in k)
    if len(k) != dec.n:
        raise ValueError("dimension mismatch")
    coords = tuple(sum(g * x for g, x in zip(col, k)) for col in dec.gamma_columns())
    return DualPoint(coords, dual_point_vector(dec, coords))


def dual_point_vector(dec: Decomposition, coords) -> tuple:
    gs = ex.columns(dec.gamma_star_basis)
    return tuple(
        sum((Fraction(m) * col[i] for m, col in zip(coords, gs)), Fraction(0)) for i in range(dec.n)
    )


def enumerate_dual_points(dec: Decomposition, radius) -> list[DualPoint]:
    """All ``gamma* in Gamma*`` with ``|gamma*| <= radius``, sorted by coordinates.

    ``radius`` may be a float or an exact rational; the final inclusion test
    is exact against the given value.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if dec.r == 0:
        return [DualPoint((), tuple(Fraction(0) for _ in range(dec.n)))]
    rad = Fraction(radius)
    rad_sq = rad * rad
    gs_gram = ex.field_inverse(ex.gram(dec.gamma_basis))
    zeros = [0] * dec.r
    g = -(float(rad_sq) * (1 + 1e-9) + 1e-12)
    out = []
    for m in quadric_superset(gs_gram, zeros, g, depth=0):
        norm_sq = sum(
            (gs_gram[i][j] * m[i] * m[j] for i in range(dec.r) for j in range(dec.r)), Fraction(0)
        )
        if norm_sq <= rad_sq:
            out.append(DualPoint(tuple(m), dual_point_vector(dec, m)))
    out.sort(key=lambda dp: dp.coords)
    return out


def _fmt_vec(v):
    return "(" + ", ".join(str(x) for x in v) + ")"


def decomposition_report(dec: Decomposition) -> str:
    """Deterministic plain-text summary, including the covolume identity check."""
    perp_cov = ex.covolume_sq(dec.gamma_perp_basis)
    lines = [
        f"n = {dec.n}",
        f"p = {dec.p}",
        f"q = {dec.q}",
        f"r = {dec.r}",
        f"discriminant = {dec.d}",
        "F basis:",
        *(f"  {_fmt_vec(v)}" for v in dec.f_basis),
        "H basis:",
        *(f"  {_fmt_vec(v)}" for v in dec.h_basis),
        "Gamma basis:",
        *(f"  {_fmt_vec(v)}" for v in dec.gamma_columns()),
        "Gamma* basis:",
        *(f"  {_fmt_vec(v)}" for v in ex.columns(dec.gamma_star_basis)),
        "Gamma_perp basis:",
        *(f"  {_fmt_vec(v)}" for v in dec.gamma_perp_columns()),
        "F_V basis:",
        *(f"  {_fmt_vec(v)}" for v in dec.fv_basis),
        f"covol_sq(Gamma) = {dec.covol_sq}",
        f"covolume(Gamma) = {dec.covolume!r}",
        f"covol_sq(Gamma_perp) = {perp_cov}",
        f"covolume identity holds: {perp_cov == dec.covol_sq}",
    ]
    return "\n".join(lines) + "\n"
