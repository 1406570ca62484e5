"""Eigenvalue counting for the magnetic Laplacian on the torus in the adiabatic limit.

For the metric ``g_F + eps^{-2} g_H`` and a constant potential ``A`` the
eigenvalues are ``4 pi^2 (|pi_F(k-A)|^2 + eps^2 |pi_H(k-A)|^2)``, ``k`` in
Z^n.  Counting those below ``lambda`` is lattice counting in an ellipsoid.

Thresholds are passed either as a float ``lambda`` or, for exact mode, as a
:class:`Threshold` holding the rational ``mu = lambda / (4 pi^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exact as ex
from .counting import count_points
from .domains import Ball, ModeUnavailable, unit_ball_volume
from .enumeration import Tally, count_quadric
from .geometry import Decomposition, enumerate_dual_points

__all__ = [
    "MagneticTorus",
    "Threshold",
    "SpectralRecord",
    "eigenvalue",
    "counting_function",
    "weyl_prediction",
    "crosscheck_identity",
]

FOUR_PI_SQ = 4 * math.pi**2


@dataclass(frozen=True)
class Threshold:
    """The spectral threshold ``lambda = 4 pi^2 mu`` with ``mu`` exact."""

    mu: Fraction

    def __post_init__(self):
        object.__setattr__(self, "mu", Fraction(self.mu))

    def __float__(self) -> float:
        return FOUR_PI_SQ * float(self.mu)


def _mu(lam):
    """``lambda / 4 pi^2``: exact for a :class:`Threshold`, float otherwise."""
    if isinstance(lam, Threshold):
        return lam.mu
    return float(lam) / FOUR_PI_SQ


@dataclass(frozen=True)
class MagneticTorus:
    dec: Decomposition
    potential: tuple

    def __post_init__(self):
        if len(self.potential) != self.dec.n:
            raise ValueError("potential must have length n")
        vals = tuple(Fraction(x) if ex.is_exact_number(x) and not isinstance(x, float) else float(x)
                     for x in self.potential)
        object.__setattr__(self, "potential", vals)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(x, Fraction) for x in self.potential)


@dataclass
class SpectralRecord:
    lam: float
    mu: object
    epsilon: object
    counting_value: int
    prediction: float
    guard_band_hits: int = 0
    crosscheck: bool | None = None

    @property
    def deviation(self) -> float:
        return self.counting_value - self.prediction


def eigenvalue(mt: MagneticTorus, k, eps) -> float:
    """``4 pi^2 (|pi_F(k-A)|^2 + eps^2 |pi_H(k-A)|^2)``."""
    dec = mt.dec
    v = np.array([float(ki) - float(ai) for ki, ai in zip(k, mt.potential)])
    vf = dec.proj_f_f @ v
    vh = v - vf
    return FOUR_PI_SQ * (float(vf @ vf) + float(eps) ** 2 * float(vh @ vh))


def _eigen_quadric(mt, mu, eps, exact):
    """``x^T Q x - 2 b^T x + g < 0`` iff the eigenvalue at ``x`` is below ``4 pi^2 mu``."""
    dec, n = mt.dec, mt.dec.n
    if exact:
        e2 = Fraction(eps) ** 2
        a = [[dec.proj_f[i][j] + e2 * dec.proj_h[i][j] for j in range(n)] for i in range(n)]
        pot = [ex.to_field(x, dec.d) for x in mt.potential]
        zero = dec.zero()
    else:
        e2 = float(eps) ** 2
        a = (dec.proj_f_f + e2 * dec.proj_h_f).tolist()
        pot = [float(x) for x in mt.potential]
        zero = 0.0
    b = [sum((a[i][j] * pot[j] for j in range(n)), zero) for i in range(n)]
    g = sum((pot[i] * b[i] for i in range(n)), zero) - mu
    return a, b, g


def counting_function(mt: MagneticTorus, lam, eps, mode: str = "exact") -> SpectralRecord:
    """``N_eps(lambda)``, the number of eigenvalues strictly below ``lambda``.

    The eigenvalue condition is a quadric in ``k``, counted directly with the
    lattice enumeration engine.
    """
    mu = _mu(lam)
    exact = mode == "exact"
    if exact and not (isinstance(mu, Fraction) and mt.is_exact and not isinstance(eps, float)):
        raise ModeUnavailable("exact mode needs a Threshold, a rational potential and a rational epsilon")
    if not float(eps) > 0:
        raise ValueError("epsilon must be positive")
    rec = SpectralRecord(float(lam), mu, eps, 0, weyl_prediction(mt, lam, eps))
    if mu <= 0:
        return rec
    a, b, g = _eigen_quadric(mt, mu, eps, exact)
    tally = count_quadric(a, b, g, exact, Tally())
    rec.counting_value = tally.count
    rec.guard_band_hits = tally.hits
    return rec


def weyl_prediction(mt: MagneticTorus, lam, eps) -> float:
    """Adiabatic main term for ``N_eps(lambda)``.

    ``eps^{-q} omega_{n-r} / vol(V/Gamma) * sum max(mu - |gamma* - pi_V(A)|^2, 0)^{(n-r)/2}``
    over the dual lattice, with ``mu = lambda / 4 pi^2``.
    """
    dec = mt.dec
    mu = float(_mu(lam))
    if mu <= 0:
        return 0.0
    a = np.array([float(x) for x in mt.potential])
    av = dec.proj_v_f @ a
    pts = enumerate_dual_points(dec, float(np.linalg.norm(av)) + math.sqrt(mu) + 1e-9)
    m = dec.n - dec.r
    terms = []
    for dp in pts:
        diff = np.array([float(x) for x in dp.vector]) - av
        rest = mu - float(diff @ diff)
        if rest > 0:
            terms.append(rest ** (m / 2))
    return float(eps) ** (-dec.q) * unit_ball_volume(m) / dec.covolume * math.fsum(terms)


def crosscheck_identity(mt: MagneticTorus, mu, eps):
    """Check ``N_eps(4 pi^2 mu) = n_eps(B_sqrt(mu)(T_eps^{-1} A))`` exactly.

    Returns ``(ok, spectral_count, lattice_count)``.
    """
    dec = mt.dec
    mu = Fraction(mu)
    eps = Fraction(eps)
    n_spec = counting_function(mt, Threshold(mu), eps, "exact").counting_value
    pot = [Fraction(x) for x in mt.potential]
    pf = [sum((dec.proj_f[i][j] * pot[j] for j in range(dec.n)), dec.zero()) for i in range(dec.n)]
    center = tuple(pf[i] + eps * (pot[i] - pf[i]) for i in range(dec.n))
    n_lat = count_points(dec, Ball(center, mu), eps, "exact").count
    return n_spec == n_lat, n_spec, n_lat

