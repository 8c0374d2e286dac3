"""Canonical traces, spectral laws and free difference quotients for the
semicircular systems attached to finite weighted graphs."""

from .errors import (
    DepthTooShallow,
    DimensionCapExceeded,
    EdgeCountError,
    FreeGraphError,
    GraphError,
    LoopEdgeError,
    NotCornered,
    NotSelfAdjoint,
    ParseError,
    ShapeError,
    UnstableRecursionWarning,
)
from .graph import (
    DirectedDouble,
    WeightedGraph,
    build_directed_double,
    classify_vertices,
    k0_positive_cone_member,
    load_graph,
    structure_report,
)
from .kernels import BACKEND
from .ncpoly import NCPoly, parse_expression, parse_word
from .trace import MomentSeq, SharedTraceCache, TraceEngine, moments

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DepthTooShallow",
    "DimensionCapExceeded",
    "DirectedDouble",
    "EdgeCountError",
    "FreeGraphError",
    "GraphError",
    "LoopEdgeError",
    "MomentSeq",
    "NCPoly",
    "NotCornered",
    "NotSelfAdjoint",
    "ParseError",
    "ShapeError",
    "SharedTraceCache",
    "TraceEngine",
    "UnstableRecursionWarning",
    "WeightedGraph",
    "build_directed_double",
    "classify_vertices",
    "k0_positive_cone_member",
    "load_graph",
    "moments",
    "parse_expression",
    "parse_word",
    "structure_report",
]
