"""Counting integer points of ``T_eps(S)``, the main term and the remainder.

``T_eps`` fixes ``F`` and scales ``H = F^perp`` by ``1/eps``.  A lattice point
``k`` lies in ``T_eps(S)`` iff its pre-image ``P_F k + eps P_H k`` lies in
``S``.  For quadric bodies the pre-image condition is itself a quadric in
``k`` and is counted with the LDL walk of :mod:`anisocount.enumeration`;
l^p balls are pruned by their stretched bounding sphere and settled along
lines by polynomial root finding plus exact endpoint checks.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exact as ex
from .domains import (
    AffineSlice,
    Ball,
    Domain,
    Ellipsoid,
    LpBall,
    ModeUnavailable,
    slice_volume,
)
from .enumeration import GUARD_BAND, Tally, count_quadric, quadric_superset
from .geometry import Decomposition, DualPoint, enumerate_dual_points
from .seeding import derive_seed

__all__ = [
    "CountRecord",
    "ExponentRegime",
    "stretch",
    "count_points",
    "count_points_fiber",
    "main_term",
    "remainder",
    "theoretical_exponent",
    "dual_truncation_radius",
]

LP_PRUNE_INFLATE = 1e-6
# exact lp-ball levels are only evaluated when the float level is this close to 1
LP_EXACT_BAND = 1e-7


class ExponentRegime(str, enum.Enum):
    BASELINE = "baseline"
    SLICEWISE_CONVEX = "slicewise_convex"
    FULLY_CONVEX = "fully_convex"


@dataclass
class CountRecord:
    epsilon: Fraction | float
    count: int
    main_term: float | None = None
    main_term_error: float = 0.0
    remainder: float | None = None
    guard_band_hits: int = 0
    boundary_points: int = 0
    points_scanned: int = 0
    wall_time: float = 0.0
    mode: str = "exact"
    extra: dict = field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        return self.guard_band_hits > 0

    @property
    def abs_remainder(self) -> float | None:
        return None if self.remainder is None else abs(self.remainder)


def _check_mode(mode):
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")


def _check_eps(eps, mode):
    if mode == "exact":
        if isinstance(eps, float) or not ex.is_exact_number(eps) or isinstance(eps, ex.QuadScalar):
            raise ModeUnavailable("exact mode needs a rational epsilon")
        eps = Fraction(eps)
    else:
        eps = float(eps)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    return eps


def _check_dec(dec: Decomposition):
    if dec.q == 0:
        raise ValueError("F = R^n (q = 0) is degenerate: nothing expands")


def stretch(dec: Decomposition, x, eps, direction: str = "forward"):
    """``pi_F(x) + eps^{-1} pi_H(x)`` (forward) or ``pi_F(x) + eps pi_H(x)`` (inverse).

    Exact when ``x`` and ``eps`` are exact, otherwise float.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    n = dec.n
    exact_in = all(ex.is_exact_number(v) for v in x) and ex.is_exact_number(eps)
    if exact_in:
        e = Fraction(eps)
        s = 1 / e if direction == "forward" else e
        xx = [ex.to_field(v, dec.d) for v in x]
        zero = dec.zero()
        pf = [sum((dec.proj_f[i][j] * xx[j] for j in range(n)), zero) for i in range(n)]
        return tuple(pf[i] + s * (xx[i] - pf[i]) for i in range(n))
    xf = np.array([float(v) for v in x])
    s = 1.0 / float(eps) if direction == "forward" else float(eps)
    pf = dec.proj_f_f @ xf
    return tuple(pf + s * (xf - pf))


def _inverse_stretch(dec, eps, exact):
    if exact:
        return [[dec.proj_f[i][j] + eps * dec.proj_h[i][j] for j in range(dec.n)] for i in range(dec.n)]
    return (dec.proj_f_f + float(eps) * dec.proj_h_f).tolist()


def _lattice_frame(dec, eps, exact, k0, basis):
    """World coordinates ``x = x0 + M w`` of lattice points ``k = k0 + G w``."""
    n = dec.n
    s = _inverse_stretch(dec, eps, exact)
    zero = dec.zero() if exact else 0.0
    m = len(basis[0]) if basis and basis[0] else 0
    M = [[sum((s[i][k] * basis[k][j] for k in range(n)), zero) for j in range(m)] for i in range(n)]
    x0 = [sum((s[i][k] * k0[k] for k in range(n)), zero) for i in range(n)]
    return M, x0


def _pullback(a, b, g, M, x0, zero):
    """Pull ``x^T a x - 2 b^T x + g`` back along ``x = x0 + M w``."""
    n = len(x0)
    m = len(M[0]) if M and M[0] else 0
    am = [[sum((a[i][k] * M[k][j] for k in range(n)), zero) for j in range(m)] for i in range(n)]
    aw = [[sum((M[k][i] * am[k][j] for k in range(n)), zero) for j in range(m)] for i in range(m)]
    ax0 = [sum((a[i][k] * x0[k] for k in range(n)), zero) for i in range(n)]
    bw = [sum((M[k][i] * (b[k] - ax0[k]) for k in range(n)), zero) for i in range(m)]
    gw = sum((x0[i] * ax0[i] for i in range(n)), zero) - 2 * sum((b[i] * x0[i] for i in range(n)), zero) + g
    return aw, bw, gw


def _settle(lo, hi, inside):
    """Shrink/extend a float-guessed integer interval until it is exact."""
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
    return lo, hi


def _real_roots(poly):
    roots = np.roots(poly)
    return sorted(r.real for r in roots if abs(r.imag) <= 1e-7 * (1.0 + abs(r)))


def _count_lp(dom: LpBall, dec, eps, exact, k0, basis, tally):
    n = dec.n
    M, x0 = _lattice_frame(dec, eps, exact, k0, basis)
    Mf = np.array([[float(v) for v in row] for row in M]).reshape(n, -1)
    x0f = np.array([float(v) for v in x0])
    m = Mf.shape[1]
    cs, rs = dom.bounding_sphere()
    rs *= 1 + LP_PRUNE_INFLATE
    eye = np.eye(n).tolist()
    aw, bw, gw = _pullback(eye, cs.tolist(), float(cs @ cs) - rs * rs, Mf.tolist(), x0f.tolist(), 0.0)
    direction = Mf[:, 0]
    dir_exact = [row[0] for row in M] if exact else None
    for prefix in quadric_superset(aw, bw, gw, depth=1):
        tally.visited += 1
        origin_f = x0f + (Mf[:, 1:] @ np.array(prefix, dtype=float) if m > 1 else 0.0)
        poly = dom.line_polynomial(origin_f, direction)
        roots = _real_roots(poly)
        if len(roots) >= 2:
            lo, hi = math.ceil(roots[0]), math.floor(roots[-1])
        else:
            crit = _real_roots(np.polyder(poly))
            if not crit:
                continue
            lo = hi = round(crit[0])
        cache = {}
        origin = None

        def level(s):
            # float level decides unless it is near 1; then exact arithmetic settles it
            nonlocal origin
            if s not in cache:
                lv = float(dom.level_float((origin_f + s * direction)[None, :])[0])
                if exact and abs(lv - 1.0) <= LP_EXACT_BAND:
                    if origin is None:
                        origin = [x0[i] + sum((M[i][j + 1] * prefix[j] for j in range(m - 1)), dec.zero())
                                  for i in range(n)]
                    lv = dom.level_exact([o + s * dv for o, dv in zip(origin, dir_exact)])
                cache[s] = lv
            return cache[s]

        lo, hi = _settle(lo, hi, lambda s: level(s) < 1)
        if lo <= hi:
            tally.count += hi - lo + 1
        for s in {lo - 1, hi + 1}:
            lv = level(s)
            if exact and lv == 1:
                tally.boundary += 1
            elif not exact and abs(lv - 1.0) <= GUARD_BAND:
                tally.hits += 1
        if not exact and lo <= hi:
            for s in {lo, hi}:
                if abs(level(s) - 1.0) <= GUARD_BAND:
                    tally.hits += 1
    return tally


def _count(dec, dom, eps, mode, k0, basis) -> Tally:
    exact = mode == "exact"
    tally = Tally()
    if isinstance(dom, LpBall):
        return _count_lp(dom, dec, eps, exact, k0, basis, tally)
    if not isinstance(dom, (Ball, Ellipsoid)):
        raise TypeError(f"unsupported domain {type(dom).__name__}")
    a, b, g = dom.quadric(dec.d, exact)
    M, x0 = _lattice_frame(dec, eps, exact, k0, basis)
    zero = dec.zero() if exact else 0.0
    aw, bw, gw = _pullback(a, b, g, M, x0, zero)
    return count_quadric(aw, bw, gw, exact, tally)


def _prepare(dec, dom, eps, mode):
    _check_mode(mode)
    _check_dec(dec)
    if dom.dim != dec.n:
        raise ValueError("domain dimension does not match the decomposition")
    eps = _check_eps(eps, mode)
    if mode == "exact":
        dom.require_exact()
        eps_field = ex.to_field(eps, dec.d)
        return eps, eps_field
    return eps, eps


def count_points(dec: Decomposition, dom: Domain, eps, mode: str = "exact") -> CountRecord:
    """Number of integer points in ``T_eps(dom)`` (the remainder is left unset)."""
    t0 = time.perf_counter()
    eps, eps_f = _prepare(dec, dom, eps, mode)
    n = dec.n
    ident = ex.identity(n)
    tally = _count(dec, dom, eps_f, mode, [0] * n, ident)
    return CountRecord(
        epsilon=eps,
        count=tally.count,
        guard_band_hits=tally.hits,
        boundary_points=tally.boundary,
        points_scanned=tally.visited,
        wall_time=time.perf_counter() - t0,
        mode=mode,
    )


def _fiber_coords(dec, gamma_star):
    if isinstance(gamma_star, DualPoint):
        return tuple(int(c) for c in gamma_star.coords)
    coords = tuple(gamma_star)
    if len(coords) == dec.r and all(isinstance(c, (int, np.integer)) for c in coords):
        return tuple(int(c) for c in coords)
    # a vector of V: recover integer coordinates (gamma_i, gamma*)
    if len(coords) != dec.n:
        raise ValueError("gamma* must be a DualPoint, r integer coordinates or an n-vector")
    out = []
    for col in dec.gamma_columns():
        c = sum((Fraction(g) * Fraction(v) for g, v in zip(col, coords)), Fraction(0))
        if c.denominator != 1:
            raise ValueError("vector is not a point of Gamma*")
        out.append(int(c))
    return tuple(out)


def count_points_fiber(dec: Decomposition, dom: Domain, eps, gamma_star, mode: str = "exact") -> int:
    """Points of ``T_eps(dom)`` in the fiber ``{k : pi_V(k) = gamma*}``.

    The fiber is parameterised as ``k0 + Gamma_perp w`` and counted directly
    in the ``n - r`` coordinates ``w``.
    """
    return fiber_record(dec, dom, eps, gamma_star, mode).count


def fiber_record(dec, dom, eps, gamma_star, mode="exact") -> CountRecord:
    t0 = time.perf_counter()
    eps, eps_f = _prepare(dec, dom, eps, mode)
    coords = _fiber_coords(dec, gamma_star)
    k0 = [sum(dec.fiber_lift[i][j] * coords[j] for j in range(dec.r)) for i in range(dec.n)]
    tally = _count(dec, dom, eps_f, mode, k0, dec.gamma_perp_basis)
    return CountRecord(
        epsilon=eps,
        count=tally.count,
        guard_band_hits=tally.hits,
        boundary_points=tally.boundary,
        points_scanned=tally.visited,
        wall_time=time.perf_counter() - t0,
        mode=mode,
    )


def dual_truncation_radius(dec: Decomposition, dom: Domain) -> float:
    """``|pi_V(c)| + R_outer``: every dual point beyond it has an empty slice."""
    c, rad = dom.bounding_sphere()
    pv = dec.proj_v_f @ c
    # the float radius is padded so rounding can never drop a touching slice
    return float(np.linalg.norm(pv) + rad) * (1 + 1e-12) + 1e-12


def main_term(dec: Decomposition, dom: Domain, eps, seed: int | None = 0):
    """``(value, error)`` of ``eps^{-q} / vol(V/Gamma) * sum vol_{n-r}(P_gamma* ∩ S)``."""
    _check_dec(dec)
    if dom.dim != dec.n:
        raise ValueError("domain dimension does not match the decomposition")
    e = float(eps)
    if not e > 0:
        raise ValueError("epsilon must be positive")
    pts = enumerate_dual_points(dec, dual_truncation_radius(dec, dom))
    vols, errs = [], []
    for i, dp in enumerate(pts):
        slc = AffineSlice(np.array([float(x) for x in dp.vector]), dec.frame_vperp)
        s = None if seed is None else derive_seed(seed, i)
        v, err = slice_volume(dom, slc, s)
        vols.append(v)
        errs.append(err)
    scale = e ** (-dec.q) / dec.covolume
    return scale * math.fsum(vols), scale * math.sqrt(math.fsum(x * x for x in errs))


def remainder(dec: Decomposition, dom: Domain, eps, mode: str = "exact", seed: int | None = 0) -> CountRecord:
    """Count, main term and ``R_eps(S) = count - main term`` in one record."""
    t0 = time.perf_counter()
    rec = count_points(dec, dom, eps, mode)
    value, err = main_term(dec, dom, eps, seed)
    rec.main_term = value
    rec.main_term_error = err
    rec.remainder = rec.count - value
    rec.wall_time = time.perf_counter() - t0
    return rec


def theoretical_exponent(n: int, p: int, q: int, r: int, regime) -> Fraction:
    """Exponent ``alpha`` in ``R_eps = O(eps^alpha)`` for the given regime."""
    regime = ExponentRegime(regime)
    if p + q != n or q < 1 or not 0 <= r <= p:
        raise ValueError(f"inconsistent dimensions n={n}, p={p}, q={q}, r={r}")
    if regime is ExponentRegime.BASELINE:
        return Fraction(1, p - r + 1) - q
    if regime is ExponentRegime.SLICEWISE_CONVEX:
        return Fraction(2 * q, q + 1 + 2 * (p - r)) - q
    return Fraction(2 * q, n - r + 1) - q
