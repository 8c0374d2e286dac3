"""Bundled test graphs."""

from importlib import resources

from ..graph import WeightedGraph

__all__ = ["names", "load", "path"]

#: order used by test suites and benchmarks
NAMES = (
    "self_loop",
    "edge_1_1",
    "edge_1_2",
    "edge_1_4",
    "parallel_1_2",
    "triangle",
    "star",
    "loop_and_parallel",
)


def names():
    return list(NAMES)


def load(name) -> WeightedGraph:
    ref = resources.files(__name__).joinpath(f"{name}.graph")
    if not ref.is_file():
        raise KeyError(f"no bundled graph named {name!r}")
    return WeightedGraph.from_text(ref.read_text(encoding="utf-8"), name=name, path=f"<corpus>/{name}.graph")


def path(name):
    """Filesystem path of a bundled graph, for tools that take file names."""
    ref = resources.files(__name__).joinpath(f"{name}.graph")
    if not ref.is_file():
        raise KeyError(f"no bundled graph named {name!r}")
    return str(ref)
