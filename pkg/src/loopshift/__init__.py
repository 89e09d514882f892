"""Loop shifts from truncated generating series.

Exact series arithmetic, entropy and recurrence classification, zeta data,
and the construction of one-block codes with magic words between loop
shifts of equal entropy.
"""
__version__ = "0.1.0"

from .errors import LoopShiftError
from .series import Series
from .spectral import classify, entropy, period
from .zeta import fix_counts, orbit_counts, product_formula_residual
from .loopgraph import first_return_series
from .transform import almost_iso, gapprep, loops_lemma_run
from .codec import BlockCode, return_time_tail, verify_injectivity_periodic

__all__ = [
    "LoopShiftError", "Series", "classify", "entropy", "period", "fix_counts",
    "orbit_counts", "product_formula_residual", "first_return_series",
    "almost_iso", "gapprep", "loops_lemma_run", "BlockCode", "return_time_tail",
    "verify_injectivity_periodic",
]
