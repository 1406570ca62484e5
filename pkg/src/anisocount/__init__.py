"""Lattice points in anisotropically expanding domains.

Counts ``#(T_eps(S) ∩ Z^n)`` where ``T_eps`` fixes a subspace ``F`` and
stretches its orthogonal complement by ``1/eps``, splits the count into
fibers over the dual lattice of ``Z^n ∩ F``, and compares it with the main
term built from slice volumes.
"""

__version__ = "0.1.0"

from .counting import (  # noqa: E402
    CountRecord,
    ExponentRegime,
    count_points,
    count_points_fiber,
    main_term,
    remainder,
    stretch,
    theoretical_exponent,
)
from .domains import Ball, Ellipsoid, LpBall, apply_rotation, contains, slice_volume  # noqa: E402
from .exact import QuadScalar, parse_scalar  # noqa: E402
from .geometry import SubspaceSpec, classify_fiber, decompose, enumerate_dual_points  # noqa: E402
from .rotations import RotationGroup, averaged_remainder, sample_rotation  # noqa: E402
from .spectral import MagneticTorus, Threshold, counting_function, crosscheck_identity, weyl_prediction  # noqa: E402

__all__ = [
    "Ball",
    "CountRecord",
    "Ellipsoid",
    "ExponentRegime",
    "LpBall",
    "MagneticTorus",
    "QuadScalar",
    "RotationGroup",
    "SubspaceSpec",
    "Threshold",
    "apply_rotation",
    "averaged_remainder",
    "classify_fiber",
    "contains",
    "count_points",
    "count_points_fiber",
    "counting_function",
    "crosscheck_identity",
    "decompose",
    "enumerate_dual_points",
    "main_term",
    "parse_scalar",
    "remainder",
    "sample_rotation",
    "slice_volume",
    "stretch",
    "theoretical_exponent",
    "weyl_prediction",
]
