"""Kernel selection: compiled Cython extension if importable, else pure Python.

Set ``FREEGRAPH_PURE_PYTHON=1`` to force the fallback.
"""

import os

from ._ext import _fallback

fallback_loop_trace = _fallback.loop_trace

compiled_loop_trace = None
if not os.environ.get("FREEGRAPH_PURE_PYTHON"):
    try:
        from ._ext._looptrace import loop_trace as compiled_loop_trace  # type: ignore
    except ImportError:  # extension not built
        compiled_loop_trace = None

HAVE_COMPILED = compiled_loop_trace is not None
BACKEND = "cython" if HAVE_COMPILED else "python"
