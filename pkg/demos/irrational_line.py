"""
Stretching away from an irrational line
=======================================

F is spanned by (1, sqrt 2), so no nonzero integer point lies on F and the
sum over fibers has a single term.  The unit disk is stretched only across
F, by a factor 1/eps.
"""

from fractions import Fraction
from pathlib import Path

from anisocount.config import load_config
from anisocount.counting import remainder
from anisocount.geometry import decompose, decomposition_report
from anisocount.harness import run_sweep

cfg = load_config(Path(__file__).parent / "configs" / "kronecker_line.ini")
dec = decompose(cfg.subspace)
print(decomposition_report(dec))

# one point by hand
rec = remainder(dec, cfg.domain, Fraction(1, 64))
print(f"eps = 1/64: {rec.count} points, main term {rec.main_term:.4f}, remainder {rec.remainder:.4f}")

report = run_sweep(cfg)
print(f"envelope slope {report.envelope_slope:.3f}, predicted {report.theoretical}")
print("verdict", report.verdict)
