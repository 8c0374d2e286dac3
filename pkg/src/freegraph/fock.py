"""Depth-truncated Fock space of a directed double as sparse real matrices.

Basis vectors are the paths of length ``0..D`` normalised by
``||e1...en||^2 = mu(t(en))``, so creation operators have unit entries and
adjoints are plain transposes.  Creation out of the top level is dropped;
words of length ``<= D`` applied to a vertex never reach the cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DepthTooShallow, DimensionCapExceeded
from .ncpoly import NCPoly, word_end

__all__ = ["TruncatedFock", "build", "DEFAULT_DIMENSION_CAP"]

DEFAULT_DIMENSION_CAP = 200_000


def _enumerate_paths(dd, depth, cap):
    paths = [(v,) for v in range(dd.n_vertices)]
    frontier = list(paths)
    for _ in range(depth):
        nxt = []
        for p in frontier:
            # prepend: paths are grown at the left, matching creation
            for e in dd.in_edges(p[0]):
                nxt.append((int(dd.src[e]), e) + p[1:])
        paths.extend(nxt)
        if len(paths) > cap:
            raise DimensionCapExceeded(f"Fock basis exceeds cap of {cap} vectors at depth {depth}")
        frontier = nxt
    return paths


@dataclass
class TruncatedFock:
    dd: object
    depth: int
    basis: list
    index: dict
    creation: list = field(repr=False)  # l(eps) per oriented edge
    X: list = field(repr=False)  # X_eps per oriented edge
    P: list = field(repr=False)  # p_alpha per vertex
    J: object = field(repr=False)
    lengths: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return len(self.basis)

    def vacuum(self, v):
        x = np.zeros(self.dim)
        x[self.index[(v,)]] = 1.0
        return x

    def omega(self):
        """Unit of the algebra as a vector: sum_a sqrt(mu(a)) e_a."""
        x = np.zeros(self.dim)
        for v in range(self.dd.n_vertices):
            x[self.index[(v,)]] = np.sqrt(self.dd.mu[v])
        return x

    def apply_word(self, key, x):
        """X_{e1} ... X_{en} x, applied right to left."""
        if len(key) == 1:
            return self.P[key[0]] @ x
        for e in reversed(key[1:]):
            x = self.X[e] @ x
        return x

    def poly_matrix(self, p: NCPoly):
        out = sp.csr_matrix((self.dim, self.dim))
        for key, c in p.terms.items():
            if len(key) == 1:
                m = self.P[key[0]]
            else:
                m = self.X[key[1]]
                for e in key[2:]:
                    m = m @ self.X[e]
            out = out + complex(c) * m if isinstance(c, complex) else out + float(c) * m
        return out

    def trace(self, key):
        """Tr of a word from the vacuum coefficient; exact for ``|w| <= depth``."""
        n = len(key) - 1
        if n > self.depth:
            raise DepthTooShallow(f"word of length {n} needs depth >= {n}, have {self.depth}")
        dd = self.dd
        if len(key) == 1:
            return float(dd.mu[key[0]])
        a = key[0]
        if word_end(dd, key) != a:
            return 0.0
        y = self.apply_word(key, self.vacuum(a))
        return float(dd.mu[a]) * float(y[self.index[(a,)]])

    def trace_poly(self, p: NCPoly):
        return sum(c * self.trace(k) for k, c in p.terms.items())

    # identity checks -----------------------------------------------------

    def commutator_constant(self, eps):
        """Constant of the rank-one term, -1/(mu(s)^3 mu(t))^(1/4)."""
        dd = self.dd
        ms, mt = dd.mu[dd.src[eps]], dd.mu[dd.tgt[eps]]
        return -1.0 / (ms**3 * mt) ** 0.25

    def check_commutator(self, eps, eps2):
        """max |[l(eps), J X_eps2 J] - expected| over interior columns (length <= D-2).

        The expected operator is ``c |s(eps)><t(eps)|`` for ``eps == eps2`` with
        unnormalised vertex vectors (``<t|t> = mu(t)``), zero otherwise.
        """
        if self.depth < 2:
            raise DepthTooShallow("commutator check needs depth >= 2")
        dd = self.dd
        L = self.creation[eps]
        R = self.J @ self.X[eps2] @ self.J
        C = (L @ R - R @ L).tocsc()
        cols = np.flatnonzero(self.lengths <= self.depth - 2)
        C = C[:, cols].toarray()
        if eps == eps2:
            s, t = int(dd.src[eps]), int(dd.tgt[eps])
            i, j = self.index[(s,)], self.index[(t,)]
            jc = np.searchsorted(cols, j)
            c = self.commutator_constant(eps)
            # |s><t| in the orthonormal basis: sqrt(mu(s) mu(t)) |e_s><e_t|
            C[i, jc] -= c * np.sqrt(dd.mu[s] * dd.mu[t])
        return float(np.max(np.abs(C))) if C.size else 0.0

    def check_adjoint_identity(self):
        return max(float(abs(self.X[e] - self.X[int(self.dd.opp[e])].T).max()) for e in range(len(self.dd)))

    def check_projections(self):
        I = sp.identity(self.dim, format="csr")
        res = float(abs(sum(self.P) - I).max())
        for p in self.P:
            res = max(res, float(abs(p @ p - p).max()) if p.nnz else 0.0)
        return res

    def check_J_involution(self):
        I = sp.identity(self.dim, format="csr")
        return float(abs(self.J @ self.J - I).max())

    def check_modular_conjugation(self, max_len=None):
        """max over words w of |J (w Omega) - (w* Omega)|, words up to ``max_len``."""
        max_len = self.depth if max_len is None else min(max_len, self.depth)
        om = self.omega()
        res = 0.0
        for key in self.basis:
            if not 1 <= len(key) - 1 <= max_len:
                continue
            lhs = self.J @ self.apply_word(key, om)
            adj = (int(self.dd.tgt[key[-1]]),) + tuple(int(self.dd.opp[e]) for e in reversed(key[1:]))
            rhs = self.apply_word(adj, om)
            res = max(res, float(np.max(np.abs(lhs - rhs))))
        return res


def build(dd, depth: int, cap: int = DEFAULT_DIMENSION_CAP) -> TruncatedFock:
    if depth < 0:
        raise DepthTooShallow("depth must be non-negative")
    paths = _enumerate_paths(dd, depth, cap)
    index = {p: i for i, p in enumerate(paths)}
    n = len(paths)
    lengths = np.array([len(p) - 1 for p in paths])

    creation = []
    for e in range(len(dd)):
        rows, cols = [], []
        t = int(dd.tgt[e])
        for j, p in enumerate(paths):
            if p[0] == t and len(p) - 1 < depth:
                rows.append(index[(int(dd.src[e]), e) + p[1:]])
                cols.append(j)
        creation.append(sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)))

    X = []
    for e in range(len(dd)):
        a = float(dd.amplitude[e])
        o = int(dd.opp[e])
        if o == e:
            X.append((creation[e] + creation[e].T).tocsr())
        else:
            # a_eps^{-1} == a_{op(eps)}; using the latter makes X_eps^T == X_op exact
            X.append((a * creation[e] + float(dd.amplitude[o]) * creation[o].T).tocsr())

    P = []
    for v in range(dd.n_vertices):
        diag = np.array([1.0 if p[0] == v else 0.0 for p in paths])
        P.append(sp.diags(diag, format="csr"))

    rows = []
    for p in paths:
        if len(p) == 1:
            rows.append(index[p])
        else:
            rev = tuple(int(dd.opp[e]) for e in reversed(p[1:]))
            rows.append(index[(int(dd.src[rev[0]]),) + rev])
    J = sp.csr_matrix((np.ones(n), (rows, np.arange(n))), shape=(n, n))
    return TruncatedFock(dd, depth, paths, index, creation, X, P, J, lengths)
