"""Fault-tolerant multi-neuron representations of hierarchical concepts.

Builds layered threshold networks that embed a k-ary concept forest with m
redundant representative neurons per concept, injects random initial neuron
failures, runs recognition, and validates the closed-form recognition bounds
by Monte Carlo and exhaustive enumeration.  Learning procedures that grow the
same representations from random initial wiring live in `multirep.learning`.
"""

__version__ = "0.1.0"

from .hierarchy import ConceptHierarchy, HierarchyParams, support
from .bounds import CommonParams, ConnectivityParams, bounds_report
from .network import LayeredNetwork, FailureMask, FiringState
from .representation import ReprSpec, build_high, build_low, build_lateral

__all__ = [
    "__version__",
    "ConceptHierarchy",
    "HierarchyParams",
    "support",
    "CommonParams",
    "ConnectivityParams",
    "bounds_report",
    "LayeredNetwork",
    "FailureMask",
    "FiringState",
    "ReprSpec",
    "build_high",
    "build_low",
    "build_lateral",
]
