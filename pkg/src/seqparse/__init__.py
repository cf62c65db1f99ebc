"""Sequence-to-sequence constituent parsing over shift-reduce linearizations."""

from .delinearize import DelinearizeError, delinearize
from .linearize import Scheme, linearize
from .treebank import Leaf, Tree, parse_ptb, serialize, yield_of

__version__ = "0.1.0"

__all__ = [
    "DelinearizeError", "Leaf", "Scheme", "Tree", "delinearize", "linearize", "parse_ptb",
    "serialize", "yield_of", "__version__",
]
