"""Generating series of loop traces from a proper algebraic system.

For each vertex ``alpha`` the series ``z_alpha = sum_w Tr(w) w`` runs over
nonempty loop words based at ``alpha``.  Splitting a loop at its last letter
``eps`` (with ``t(eps) = alpha``, ``beta = s(eps)``) and the matching earlier
``op(eps)`` gives

    z_alpha = sum_{eps : t(eps) = alpha}
              sqrt(mu_a mu_b)      op(eps) eps
            + sqrt(mu_b / mu_a)    z_alpha op(eps) eps
            + sqrt(mu_a / mu_b)    op(eps) z_beta eps
            + 1/sqrt(mu_a mu_b)    z_alpha op(eps) z_beta eps

Each right-hand term raises degree by at least two, so iterating from zero
with truncation at ``Deg`` reaches the exact truncated solution.  A self-loop
is the case ``beta = alpha``, ``op(eps) = eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graph import _exact_sqrt
from .trace import TraceEngine

__all__ = ["TruncatedNCSeries", "solve_system", "crosscheck", "loop_words", "specialize_commutative"]


@dataclass(frozen=True)
class TruncatedNCSeries:
    """Loop-word coefficients based at ``vertex``, words of length ``<= degree``.

    Words are tuples of oriented-edge ids; the empty word is never stored.
    """

    dd: object = field(repr=False)
    vertex: int
    degree: int
    coeffs: dict = field(repr=False)
    iterations: int = 0

    def coefficient(self, word):
        return self.coeffs.get(tuple(word), 0)

    def __len__(self):
        return len(self.coeffs)

    def sorted_items(self):
        return sorted(self.coeffs.items(), key=lambda kv: (len(kv[0]), kv[0]))


def _mul(a, b, deg):
    out = {}
    for w1, c1 in a.items():
        room = deg - len(w1)
        for w2, c2 in b.items():
            if len(w2) > room:
                continue
            w = w1 + w2
            out[w] = out.get(w, 0) + c1 * c2
    return out


def _coefficients(dd, exact):
    """Per oriented edge: (lead, left boundary, right boundary, interior)."""
    table = []
    for eps in range(len(dd)):
        b, a = int(dd.src[eps]), int(dd.tgt[eps])
        if exact:
            mu_a, mu_b = dd.mu_exact[a], dd.mu_exact[b]
            r = _exact_sqrt(mu_a * mu_b)
            table.append((r, r / mu_a, r / mu_b, 1 / r))
        else:
            mu_a, mu_b = float(dd.mu[a]), float(dd.mu[b])
            r = math.sqrt(mu_a * mu_b)
            table.append((r, math.sqrt(mu_b / mu_a), math.sqrt(mu_a / mu_b), 1.0 / r))
    return table


def _rhs(dd, z, table, deg):
    new = {v: {} for v in z}

    def add(target, word_map, c):
        for w, x in word_map.items():
            target[w] = target.get(w, 0) + c * x

    for eps in range(len(dd)):
        b, a = int(dd.src[eps]), int(dd.tgt[eps])
        op = int(dd.opp[eps])
        lead, left, right, inner = table[eps]
        out = new[a]
        add(out, {(op, eps): 1}, lead)
        if deg < 4:
            continue
        za, zb = z[a], z[b]
        add(out, _mul(za, {(op, eps): 1}, deg), left)
        mid = {(op,) + w + (eps,): c for w, c in zb.items() if len(w) <= deg - 2}
        add(out, mid, right)
        add(out, _mul(za, mid, deg), inner)
    for v in new:
        new[v] = {w: c for w, c in new[v].items() if c != 0}
    return new


def solve_system(dd, degree: int, exact=None):
    """Truncated solution ``{vertex: TruncatedNCSeries}`` of the loop system.

    ``exact=None`` uses rational arithmetic when every ``mu(s) mu(t)`` is a
    rational square and floats otherwise.
    """
    if degree < 2:
        raise ValueError("degree must be at least 2")
    if exact is None:
        exact = dd.exact_sqrt_st() is not None
    table = _coefficients(dd, exact)
    z = {v: {} for v in range(dd.n_vertices)}
    it = 0
    while True:
        it += 1
        nz = _rhs(dd, z, table, degree)
        if nz == z:
            break
        z = nz
        if it > degree + 2:
            raise RuntimeError("fixed-point iteration did not stabilise")
    return {v: TruncatedNCSeries(dd, v, degree, z[v], it) for v in z}


def loop_words(dd, vertex, max_len, min_len=1):
    """All loop words based at ``vertex`` with ``min_len <= length <= max_len``."""
    out = []
    stack = [((), int(vertex))]
    while stack:
        w, v = stack.pop()
        if w and v == vertex and len(w) >= min_len:
            out.append(w)
        if len(w) == max_len:
            continue
        for e in dd.out_edges(v):
            stack.append((w + (e,), int(dd.tgt[e])))
    out.sort(key=lambda w: (len(w), w))
    return out


def crosscheck(series: TruncatedNCSeries, degree=None, engine=None):
    """Max ``|coefficient(w) - Tr(w)|`` over loop words ``|w| <= degree``.

    Also reports any stored word that is not a loop at the base vertex.
    Returns ``(max_abs_error, rows)`` with rows ``(word, coefficient, trace, abs_error)``.
    """
    dd = series.dd
    degree = series.degree if degree is None else min(degree, series.degree)
    engine = TraceEngine(dd) if engine is None else engine
    a = series.vertex
    words = loop_words(dd, a, degree)
    seen = set(words)
    rows = []
    worst = 0.0
    for w in words:
        c = series.coefficient(w)
        t = engine.trace_word((a,) + w)
        err = abs(float(c) - float(t))
        worst = max(worst, err)
        rows.append((w, c, t, err))
    for w, c in series.coeffs.items():
        if w not in seen and len(w) <= degree:
            err = abs(float(c))
            worst = max(worst, err)
            rows.append((w, c, 0.0, err))
    return worst, rows


def specialize_commutative(series: TruncatedNCSeries):
    """Coefficient list ``[c_0, ..., c_Deg]`` with ``c_m = sum_{|w|=m} coeff(w)``."""
    zero = Fraction(0) if all(isinstance(c, Fraction) for c in series.coeffs.values()) else 0.0
    out = [zero] * (series.degree + 1)
    for w, c in series.coeffs.items():
        out[len(w)] += c
    return out
