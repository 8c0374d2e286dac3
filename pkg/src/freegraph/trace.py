"""Canonical trace of words and polynomials, and moment sequences.

The trace of a loop word is computed from the last letter's pairing
recursion: for a loop ``e1 ... en`` based at ``t(en)``,

    Tr(w) = 1/sqrt(mu(s(en)) mu(t(en))) * sum_{j : ej = op(en)} Tr(e1..e(j-1)) Tr(e(j+1)..e(n-1))

where an empty factor is the trace ``mu(v)`` of the vertex projection it sits
on.  The two boundary terms (j = 1 and j = n-1) are the empty-factor cases.
Non-loop and odd-length words have trace zero.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import NotCornered, NotSelfAdjoint
from .ncpoly import NCPoly, word_end

__all__ = ["TraceEngine", "SharedTraceCache", "MomentSeq", "moments"]


class SharedTraceCache:
    """Word -> trace cache that may be shared between engines and threads."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            self._data.setdefault(key, value)
            return self._data[key]

    def __len__(self):
        with self._lock:
            return len(self._data)


class _LocalCache(dict):
    def put(self, key, value):
        self[key] = value
        return value


class TraceEngine:
    """Evaluates Tr on words of one directed double.

    ``exact=True`` keeps traces in :class:`~fractions.Fraction`; this needs
    every ``mu(s) mu(t)`` to be a rational square and always uses the
    Python kernel.
    """

    def __init__(self, dd, exact=False, cache=None, backend="auto"):
        self.dd = dd
        self.exact = exact
        self.cache = _LocalCache() if cache is None else cache
        if exact:
            roots = dd.exact_sqrt_st()
            if roots is None:
                raise ValueError("exact mode needs mu(s)*mu(t) to be a rational square for every edge")
            self._mu = list(dd.mu_exact)
            self._inv = [1 / r for r in roots]
            self._src = [int(x) for x in dd.src]
            self._tgt = [int(x) for x in dd.tgt]
            self._opp = [int(x) for x in dd.opp]
            self._kernel = kernels.fallback_loop_trace
            self.backend = "python-exact"
        else:
            use_compiled = kernels.HAVE_COMPILED if backend == "auto" else backend == "cython"
            if use_compiled and not kernels.HAVE_COMPILED:
                raise RuntimeError("compiled kernel not available")
            self._mu = np.ascontiguousarray(dd.mu, dtype=np.float64)
            self._inv = np.ascontiguousarray(dd.inv_sqrt_st, dtype=np.float64)
            self._src = np.ascontiguousarray(dd.src, dtype=np.int64)
            self._tgt = np.ascontiguousarray(dd.tgt, dtype=np.int64)
            self._opp = np.ascontiguousarray(dd.opp, dtype=np.int64)
            if use_compiled:
                self._kernel = kernels.compiled_loop_trace
                self.backend = "cython"
            else:
                self._kernel = kernels.fallback_loop_trace
                # plain lists are much faster than numpy scalars in the Python DP
                self._mu, self._inv = self._mu.tolist(), self._inv.tolist()
                self._src, self._tgt, self._opp = self._src.tolist(), self._tgt.tolist(), self._opp.tolist()
                self.backend = "python"

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def trace_word(self, key):
        """Trace of a word key ``(start, e1, ..., en)`` (see :mod:`freegraph.ncpoly`)."""
        if len(key) == 1:
            v = key[0]
            return self.dd.mu_exact[v] if self.exact else float(self.dd.mu[v])
        n = len(key) - 1
        if n % 2 or key[0] != word_end(self.dd, key):
            return self._zero()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        edges = key[1:]
        if self.backend == "cython":
            arr = np.fromiter(edges, dtype=np.int64, count=n)
            val = self._kernel(arr, self._src, self._tgt, self._opp, self._mu, self._inv)
        else:
            val = self._kernel(edges, self._src, self._tgt, self._opp, self._mu, self._inv)
        return self.cache.put(key, val)

    def trace_edges(self, edges, vertex=None):
        from .ncpoly import make_word

        key = make_word(self.dd, edges, vertex)
        if key is None:
            return self._zero()
        return self.trace_word(key)

    def trace_poly(self, p: NCPoly):
        total = self._zero()
        for key, c in p.terms.items():
            t = self.trace_word(key)
            if t:
                total = total + c * t
        return total

    def moments(self, q: NCPoly, vertex, K: int, check=True) -> "MomentSeq":
        """m_k = Tr(q^k), k = 0..K, for q self-adjoint and cornered at ``vertex``."""
        dd = self.dd
        a = dd.vertex(vertex) if not isinstance(vertex, (int, np.integer)) else int(vertex)
        if check:
            if not q.is_self_adjoint(tol=1e-12):
                raise NotSelfAdjoint("moment sequence needs a self-adjoint element")
            if not q.is_cornered(a):
                raise NotCornered(f"element is not supported under p_{dd.vertex_names[a]}")
        power = NCPoly.proj(dd, a)
        ms = [self.trace_poly(power)]
        for _ in range(K):
            power = power * q
            ms.append(self.trace_poly(power))
        ms = [_realify(m) for m in ms]
        return MomentSeq(dd.vertex_names[a], dd.mu_exact[a] if self.exact else float(dd.mu[a]), tuple(ms))


def _realify(x):
    if isinstance(x, complex):
        if abs(x.imag) > 1e-9 * max(1.0, abs(x.real)):
            raise NotSelfAdjoint(f"moment has imaginary part {x.imag}")
        return x.real
    return x


def moments(q: NCPoly, vertex, K: int, exact=False) -> "MomentSeq":
    return TraceEngine(q.dd, exact=exact).moments(q, vertex, K)


@dataclass(frozen=True)
class MomentSeq:
    """Unnormalized moments m_k = Tr(Q^k) of an element in the corner at ``vertex``."""

    vertex: str
    weight: object  # mu(vertex), or total mass when built by hand
    moments: tuple

    def __post_init__(self):
        if len(self.moments) == 0:
            raise ValueError("moment sequence is empty")

    @property
    def K(self):
        return len(self.moments) - 1

    def as_float(self):
        return np.array([float(m) for m in self.moments])

    def normalized(self):
        m = self.as_float()
        return m / m[0]

    def hankel_min_eig(self):
        """Smallest eigenvalue of the normalized Hankel matrix, relative to its largest."""
        m = self.normalized()
        h = (len(m) - 1) // 2 + 1
        H = np.array([[m[i + j] for j in range(h)] for i in range(h)])
        # scale rows/cols to unit diagonal to keep the test meaningful for fast-growing moments
        d = np.sqrt(np.abs(np.diag(H)))
        d[d == 0] = 1.0
        Hs = H / np.outer(d, d)
        ev = np.linalg.eigvalsh(Hs)
        return ev[0] / max(ev[-1], 1e-300)

    def is_hankel_psd(self, tol=1e-9):
        return self.hankel_min_eig() >= -tol

    def to_csv(self):
        lines = ["k,m_k"]
        for k, m in enumerate(self.moments):
            lines.append(f"{k},{_num(m)}")
        return "\n".join(lines) + "\n"


def _num(x):
    if isinstance(x, Fraction):
        return str(x)
    return format(float(x), ".15g")
