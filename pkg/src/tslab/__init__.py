"""Exact computations for mixed Tsirelson norms and their modified versions."""

from tslab.core import SparseVector, finset, parse_rational
from tslab.theta import ThetaSpec  # noqa: E402

__all__ = ["SparseVector", "ThetaSpec", "finset", "parse_rational"]
__version__ = "0.1.0"
