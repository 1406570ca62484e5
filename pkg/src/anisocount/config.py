"""Experiment configuration files.

A config is an INI-style text file.  Numbers are exact literals: integers,
rationals like ``1/8``, decimals (read exactly) and surds like
``1+1*sqrt(2)``.  Vectors are comma separated; matrix rows are separated by
``;``.  Sections and keys::

    [space]
    n = 2
    basis = 1, sqrt(2)          # rows spanning F; omit for F = {0}
    discriminant = 2            # optional, inferred from surds

    [domain]
    shape = ellipsoid           # ball | ellipsoid | lpball
    center = 1/10, 1/5
    radius = 1                  # ball, lpball
    quad = 1, 0; 0, 1/4         # ellipsoid: (x-c)^T Q (x-c) < 1
    exponent = 4                # lpball, even
    rotation = 0, -1; 1, 0      # optional exact rotation matrix
    angles = 0.3                # optional Givens angles (float), pairs (i,j), i<j
    translation = 0, 0          # optional

    [grid]
    start = 1/8
    ratio = 1/2
    count = 8

    [fit]
    regime = fully_convex       # baseline | slicewise_convex | fully_convex

    [rotation]
    group = so_full             # so_H | so_Vperp | so_full
    samples = 64
    seed = 12345

    [spectral]
    potential = 0, 0
    mu = 7/3, 5/2               # thresholds lambda / (4 pi^2), exact
    lambda = 92.1               # or raw float thresholds (float mode only)

    [run]
    mode = exact                # exact | float
    seed = 0
    out = results
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exact as ex
from .counting import ExponentRegime
from .domains import Ball, Domain, Ellipsoid, LpBall
from .geometry import SubspaceSpec
from .rotations import GroupKind

__all__ = ["ConfigError", "ExperimentConfig", "RotationSettings", "SpectralSettings", "load_config", "parse_config"]

DEFAULT_GRID = (Fraction(1, 8), Fraction(1, 2), 8)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RotationSettings:
    group: GroupKind
    samples: int
    seed: int


@dataclass(frozen=True)
class SpectralSettings:
    potential: tuple
    mus: tuple = ()
    lambdas: tuple = ()


@dataclass
class ExperimentConfig:
    n: int
    subspace: SubspaceSpec
    domain: Domain
    grid_start: Fraction = DEFAULT_GRID[0]
    grid_ratio: Fraction = DEFAULT_GRID[1]
    grid_count: int = DEFAULT_GRID[2]
    regime: ExponentRegime = ExponentRegime.FULLY_CONVEX
    rotation: RotationSettings | None = None
    spectral: SpectralSettings | None = None
    mode: str = "exact"
    seed: int = 0
    out: str | None = None
    echo: dict = field(default_factory=dict)

    @property
    def epsilons(self) -> list[Fraction]:
        return [self.grid_start * self.grid_ratio**j for j in range(self.grid_count)]


def _scalars(text: str):
    return tuple(ex.parse_scalar(t) for t in text.split(",") if t.strip())


def _rows(text: str):
    return tuple(_scalars(r) for r in text.split(";") if r.strip())


def _discriminant(values, declared):
    ds = {v.discriminant for v in values if isinstance(v, ex.QuadScalar) and v.discriminant}
    if declared:
        ds.add(declared)
    if len(ds) > 1:
        raise ConfigError(f"mixed square roots {sorted(ds)}: one quadratic field per config")
    return ds.pop() if ds else 0


def givens_rotation(n: int, angles) -> np.ndarray:
    """Product of plane rotations over the pairs ``(i, j)``, ``i < j``, in order."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if len(angles) > len(pairs):
        raise ConfigError(f"at most {len(pairs)} angles in dimension {n}")
    r = np.eye(n)
    for (i, j), t in zip(pairs, angles):
        g = np.eye(n)
        c, s = math.cos(t), math.sin(t)
        g[i, i], g[i, j], g[j, i], g[j, j] = c, -s, s, c
        r = r @ g
    return r


def _domain(sec, n) -> Domain:
    shape = sec.get("shape", "ball").strip().lower()
    center = _scalars(sec.get("center", ",".join("0" * n)))
    if len(center) != n:
        raise ConfigError("domain center has the wrong dimension")
    rotation = None
    if "rotation" in sec and "angles" in sec:
        raise ConfigError("give either rotation or angles, not both")
    if "rotation" in sec:
        rotation = _rows(sec["rotation"])
    elif "angles" in sec:
        angles = [float(ex.parse_scalar(t)) for t in sec["angles"].split(",") if t.strip()]
        rotation = tuple(map(tuple, givens_rotation(n, angles).tolist()))
    translation = _scalars(sec["translation"]) if "translation" in sec else None
    if shape == "ball":
        if rotation is not None:
            raise ConfigError("rotate a ball by moving its center")
        radius = ex.parse_scalar(sec.get("radius", "1"))
        c = center if translation is None else tuple(a + b for a, b in zip(center, translation))
        return Ball.from_radius(c, radius)
    if shape == "ellipsoid":
        if "quad" not in sec:
            raise ConfigError("ellipsoid needs quad")
        return Ellipsoid(center, _rows(sec["quad"]), rotation, translation)
    if shape == "lpball":
        return LpBall(center, ex.parse_scalar(sec.get("radius", "1")), int(sec.get("exponent", "4")),
                      rotation, translation)
    raise ConfigError(f"unknown shape {shape!r}")


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if "space" not in cp or "n" not in cp["space"]:
        raise ConfigError("[space] n is required")
    try:
        return _build(cp)
    except ConfigError:
        raise
    except (ValueError, TypeError, ArithmeticError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(cp) -> ExperimentConfig:
    space = cp["space"]
    n = int(space["n"])
    basis = _rows(space["basis"]) if space.get("basis", "").strip() else ()
    d = _discriminant([x for row in basis for x in row], int(space.get("discriminant", "0")))
    spec = SubspaceSpec(n, basis, d)
    dom = _domain(cp["domain"] if "domain" in cp else {}, n)

    grid = cp["grid"] if "grid" in cp else {}
    start = Fraction(ex.parse_scalar(grid.get("start", "1/8")))
    ratio = Fraction(ex.parse_scalar(grid.get("ratio", "1/2")))
    count = int(grid.get("count", "8"))
    if not (start > 0 and 0 < ratio < 1):
        raise ConfigError("grid needs start > 0 and 0 < ratio < 1 (strictly decreasing)")
    if count < 1:
        raise ConfigError("grid count must be positive")

    fit = cp["fit"] if "fit" in cp else {}
    regime = ExponentRegime(fit.get("regime", "fully_convex").strip())

    rot = None
    if "rotation" in cp:
        r = cp["rotation"]
        if "seed" not in r:
            raise ConfigError("[rotation] needs a seed")
        rot = RotationSettings(GroupKind(r.get("group", "so_full").strip()), int(r.get("samples", "64")),
                               int(r["seed"]))

    spectral = None
    if "spectral" in cp:
        s = cp["spectral"]
        pot = _scalars(s.get("potential", ",".join("0" * n)))
        if len(pot) != n:
            raise ConfigError("spectral potential has the wrong dimension")
        mus = tuple(Fraction(x) for x in _scalars(s["mu"])) if "mu" in s else ()
        lams = tuple(float(x) for x in s["lambda"].split(",") if x.strip()) if "lambda" in s else ()
        spectral = SpectralSettings(tuple(Fraction(x) for x in pot), mus, lams)

    run = cp["run"] if "run" in cp else {}
    mode = run.get("mode", "exact").strip()
    if mode not in ("exact", "float"):
        raise ConfigError(f"unknown mode {mode!r}")
    echo = {sec: dict(cp[sec]) for sec in cp.sections()}
    return ExperimentConfig(
        n=n,
        subspace=spec,
        domain=dom,
        grid_start=start,
        grid_ratio=ratio,
        grid_count=count,
        regime=regime,
        rotation=rot,
        spectral=spectral,
        mode=mode,
        seed=int(run.get("seed", "0")),
        out=run.get("out"),
        echo=echo,
    )


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
