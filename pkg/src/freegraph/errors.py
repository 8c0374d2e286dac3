"""Exception hierarchy shared by all modules."""


class FreeGraphError(Exception):
    """Base class for all library errors."""


class GraphError(FreeGraphError, ValueError):
    """Invalid graph input: bad weights, dangling endpoints, disconnected graph."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class EdgeCountError(FreeGraphError, ValueError):
    """Structure report requested for a graph with fewer than two edges."""


class ParseError(FreeGraphError, ValueError):
    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} at position {position}"
            if text is not None:
                message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class NotSelfAdjoint(FreeGraphError, ValueError):
    pass


class NotCornered(FreeGraphError, ValueError):
    pass


class DepthTooShallow(FreeGraphError, ValueError):
    pass


class DimensionCapExceeded(FreeGraphError, MemoryError):
    pass


class LoopEdgeError(FreeGraphError, ValueError):
    pass


class ShapeError(FreeGraphError, ValueError):
    pass


class UnstableRecursionWarning(RuntimeWarning):
    """Jacobi coefficients lost positivity; the continued fraction was truncated."""
