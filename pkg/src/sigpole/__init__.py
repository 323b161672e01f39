"""Pole-candidate combinatorics and simplex-integral numerics for pair-partition integrals."""

__version__ = "0.1.0"

from .pairings import (  # noqa: F401
    Interval,
    PairPartition,
    PositionSet,
    Word,
    bracket_count,
    enumerate_refining,
    refines,
)
from .poles import PoleSet, RationalProgression, candidate_poles  # noqa: F401
