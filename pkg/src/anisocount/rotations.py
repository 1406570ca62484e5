"""Haar-random rotations and remainders averaged over them.

Three groups act on R^n: ``so_H`` rotates ``H`` and fixes ``F`` pointwise,
``so_Vperp`` rotates ``V^perp`` and fixes ``V``, ``so_full`` is all of SO(n).
Samples are drawn in the rotated subspace and conjugated into R^n by an
orthonormal frame.
"""

from __future__ import annotations

import enum
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .counting import count_points, main_term, remainder
from .domains import Ball, Domain, apply_rotation
from .geometry import Decomposition
from .seeding import derive_seed

__all__ = ["GroupKind", "RotationGroup", "AverageRecord", "sample_rotation", "averaged_remainder"]


class GroupKind(str, enum.Enum):
    SO_H = "so_H"
    SO_VPERP = "so_Vperp"
    SO_FULL = "so_full"


@dataclass(frozen=True)
class RotationGroup:
    kind: GroupKind
    dec: Decomposition = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", GroupKind(self.kind))

    @property
    def frame(self) -> np.ndarray:
        if self.kind is GroupKind.SO_H:
            return self.dec.frame_h
        if self.kind is GroupKind.SO_VPERP:
            return self.dec.frame_vperp
        return np.eye(self.dec.n)

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def fixes_main_term(self) -> bool:
        """Whether every element preserves each fiber plane and its slice volume."""
        return self.kind is not GroupKind.SO_FULL


def haar_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(m) from a sign-fixed QR factorisation."""
    z = rng.standard_normal((m, m))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def sample_rotation(group: RotationGroup, seed: int) -> np.ndarray:
    """One Haar sample of ``group`` as an n x n rotation of R^n."""
    n, w = group.dec.n, group.frame
    m = w.shape[1]
    if m < 2:
        return np.eye(n)
    q = haar_orthogonal(m, np.random.default_rng(seed))
    # identity on the complement of span(w), q inside it
    return np.eye(n) + w @ (q - np.eye(m)) @ w.T


@dataclass
class AverageRecord:
    epsilon: object
    sample_count: int
    mean_abs_remainder: float
    std_error: float
    seeds: list
    abs_remainders: list
    guard_band_hits: int = 0
    exact_reruns: int = 0
    tainted: bool = False
    wall_time: float = 0.0


def _sample(args):
    dec, dom, eps, group, seed, mode, fixed_main = args
    h = sample_rotation(group, seed)
    hdom = apply_rotation(dom, h)
    if mode == "exact":
        rec = _remainder_with(dec, hdom.rationalized(), eps, "exact", seed, fixed_main)
        return abs(rec.remainder), 0, False, rec.wall_time
    rec = _remainder_with(dec, hdom, eps, mode, seed, fixed_main)
    hits = rec.guard_band_hits
    if hits:
        # settle the ambiguous sample exactly on the same body
        rec = _remainder_with(dec, hdom.rationalized(), eps, "exact", seed, fixed_main)
    return abs(rec.remainder), hits, bool(hits), rec.wall_time


def _remainder_with(dec, dom, eps, mode, seed, fixed_main):
    if fixed_main is None:
        return remainder(dec, dom, eps, mode, seed)
    rec = count_points(dec, dom, eps, mode)
    rec.main_term = fixed_main
    rec.remainder = rec.count - fixed_main
    return rec


def averaged_remainder(
    dec: Decomposition,
    dom: Domain,
    eps,
    group: RotationGroup,
    n_samples: int,
    master_seed: int,
    mode: str = "float",
    jobs: int = 1,
) -> AverageRecord:
    """Monte Carlo estimate of the Haar average of ``|R_eps(hS)|``.

    Parameters
    ----------
    mode : {"float", "exact"}
        Counting mode for each sample.  Rotated bodies carry float
        rotations, so ``"exact"`` runs on their exact rationalisation.
        A float sample with guard-band hits is recounted exactly.
    jobs : int
        Worker processes.  Results do not depend on it.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples for a standard error")
    fixed = None
    if group.fixes_main_term or (isinstance(dom, Ball) and not any(dom.center)):
        fixed = main_term(dec, dom, eps, master_seed)[0]
    seeds = [derive_seed(master_seed, i) for i in range(1, n_samples + 1)]
    tasks = [(dec, dom, eps, group, s, mode, fixed) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sample, tasks))
    else:
        results = [_sample(t) for t in tasks]
    vals = [r[0] for r in results]
    mean = math.fsum(vals) / n_samples
    sd = statistics.stdev(vals, xbar=mean) if len(set(vals)) > 1 else 0.0
    return AverageRecord(
        epsilon=eps,
        sample_count=n_samples,
        mean_abs_remainder=mean,
        std_error=sd / math.sqrt(n_samples),
        seeds=seeds,
        abs_remainders=vals,
        guard_band_hits=sum(r[1] for r in results),
        exact_reruns=sum(r[2] for r in results),
        tainted=False,
        wall_time=math.fsum(r[3] for r in results),
    )

