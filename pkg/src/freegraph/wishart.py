"""Block-Wishart Monte Carlo ensembles compared against graph traces.

Blocks ``A_ij`` (``M_i x M_j``, ``i != j``) have i.i.d. circular complex
Gaussian entries with ``E|a|^2 = 1/sqrt(M_i M_j)``.  In the limit, ``A_ij``
becomes the generator of the oriented edge ``e{i}{j}+`` (vertex ``i`` to
vertex ``j``) of the complete graph with two parallel edges per pair and
weights ``gamma_i``; ``A_ij*`` becomes ``e{i}{j}-``.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NotSelfAdjoint, ShapeError
from .graph import WeightedGraph, build_directed_double, parse_weight
from .ncpoly import NCPoly, parse_expression
from .trace import TraceEngine

__all__ = ["EnsembleSpec", "sample_ensemble", "limit_graph", "translate_expression", "compare", "WishartReport"]

DEFAULT_MEMORY_CAP = 2 * 1024**3  # bytes of complex128 per sample


@dataclass(frozen=True)
class EnsembleSpec:
    ratios: tuple  # gamma_1 = 1, gamma_i >= 1
    n: int
    samples: int = 100
    seed: int = 0
    diagonal: bool = False

    def __post_init__(self):
        r = tuple(parse_weight(x) if not isinstance(x, Fraction) else x for x in self.ratios)
        object.__setattr__(self, "ratios", r)
        if not r:
            raise ValueError("need at least one ratio")
        if r[0] != 1:
            raise ValueError("gamma_1 must be 1")
        if any(g < 1 for g in r):
            raise ValueError("ratios must be >= 1")
        if self.n < 1 or self.samples < 1:
            raise ValueError("n and samples must be positive")

    @property
    def k(self):
        return len(self.ratios)

    @property
    def sizes(self):
        return tuple(int(round(float(g) * self.n)) for g in self.ratios)

    def pairs(self):
        out = [(i, j) for i in range(self.k) for j in range(self.k) if i != j]
        if self.diagonal:
            out.extend((i, i) for i in range(self.k))
        return out


def _rng(spec, sample, i, j):
    ss = np.random.SeedSequence(spec.seed, spawn_key=(sample, i, j))
    return np.random.Generator(np.random.Philox(ss))


def _block(spec, sample, i, j):
    M = spec.sizes
    rng = _rng(spec, sample, i, j)
    scale = math.sqrt(0.5 / math.sqrt(M[i] * M[j]))
    z = rng.standard_normal((M[i], M[j], 2))
    return scale * (z[..., 0] + 1j * z[..., 1])


def sample_ensemble(spec: EnsembleSpec, sample: int, memory_cap=DEFAULT_MEMORY_CAP):
    """Blocks ``{(i, j): A_ij}`` (0-based) of one sample; reproducible per ``(seed, sample, i, j)``."""
    M = spec.sizes
    need = sum(M[i] * M[j] for i, j in spec.pairs()) * 16
    if need > memory_cap:
        raise MemoryError(f"one sample needs {need} bytes, cap is {memory_cap}")
    return {(i, j): _block(spec, sample, i, j) for i, j in spec.pairs()}


def _edge_name(spec, i, j):
    if i == j:
        return f"d{i + 1}"
    return f"e{i + 1}{j + 1}" if spec.k <= 9 else f"e{i + 1}_{j + 1}"


def limit_graph(spec: EnsembleSpec) -> WeightedGraph:
    if spec.k < 2:
        raise ValueError("limit graph needs at least two blocks")
    verts = [(str(i + 1), g) for i, g in enumerate(spec.ratios)]
    edges = []
    for i in range(spec.k):
        for j in range(spec.k):
            if i != j:
                edges.append((_edge_name(spec, i, j), str(i + 1), str(j + 1)))
    if spec.diagonal:
        for i in range(spec.k):
            edges.append((_edge_name(spec, i, i), str(i + 1), str(i + 1)))
    return WeightedGraph(verts, edges, name=f"wishart-k{spec.k}")


_SYMBOL = re.compile(r"X_(\d+)_(\d+)(\*?)|X(\d)(\d)(\*?)")


def translate_expression(text: str, spec: EnsembleSpec) -> str:
    """Rewrite ``X12``, ``X12*``, ``X_1_2`` symbols into graph-generator syntax."""

    def sub(m):
        if m.group(1) is not None:
            i, j, star = int(m.group(1)), int(m.group(2)), m.group(3)
        else:
            i, j, star = int(m.group(4)), int(m.group(5)), m.group(6)
        if not (1 <= i <= spec.k and 1 <= j <= spec.k):
            raise ShapeError(f"block index {i},{j} out of range for k={spec.k}")
        if i == j:
            if not spec.diagonal:
                raise ShapeError(f"diagonal block X{i}{j} needs the diagonal option")
            return f"X[{_edge_name(spec, i - 1, i - 1)}+]"
        return f"X[{_edge_name(spec, i - 1, j - 1)}{'-' if star else '+'}]"

    return _SYMBOL.sub(sub, text)


def _edge_block(dd, spec, blocks, e, cache):
    if e in cache:
        return cache[e]
    name = dd.names[e]
    base, sign = name[:-1], name[-1]
    i, j = int(dd.src[e]), int(dd.tgt[e])
    if base.startswith("d"):
        A = blocks[(i, i)]
        m = (A + A.conj().T) / math.sqrt(2.0)
    elif sign == "+":
        m = blocks[(i, j)]
    else:
        m = blocks[(j, i)].conj().T
    cache[e] = m
    return m


def evaluate(q: NCPoly, spec: EnsembleSpec, blocks):
    """Dense ``M_1 x M_1`` matrix of ``q`` on one sample."""
    dd = q.dd
    n = spec.sizes[0]
    out = np.zeros((n, n), dtype=complex)
    cache = {}
    for key, c in q.sorted_terms():
        if len(key) == 1:
            out += complex(c) * np.eye(n)
            continue
        m = _edge_block(dd, spec, blocks, key[1], cache)
        for e in key[2:]:
            m = m @ _edge_block(dd, spec, blocks, e, cache)
        out += complex(c) * m
    return out


@dataclass
class WishartReport:
    spec: EnsembleSpec
    expression: str
    predicted: np.ndarray  # m = 0..K, normalized by mu(1)
    empirical: np.ndarray
    stderr: np.ndarray
    eigenvalues: np.ndarray  # (samples, n)
    gap_mass: float | None = None
    support: list | None = None

    @property
    def K(self):
        return len(self.predicted) - 1

    @property
    def z(self):
        diff = self.empirical - self.predicted
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.stderr > 0, diff / np.where(self.stderr > 0, self.stderr, 1), np.where(diff == 0, 0.0, np.inf))
        return z

    def within(self, nsigma=3.0, moments=None):
        ms = range(1, self.K + 1) if moments is None else moments
        return all(abs(self.z[m]) <= nsigma for m in ms)

    def to_csv(self):
        lines = ["m,predicted,empirical,stderr,z"]
        for m in range(1, self.K + 1):
            lines.append(
                f"{m},{self.predicted[m]:.12g},{self.empirical[m]:.12g},{self.stderr[m]:.12g},{self.z[m]:.6g}"
            )
        return "\n".join(lines) + "\n"

    def histogram(self, bins=50, range_=None):
        ev = self.eigenvalues.ravel()
        counts, edges = np.histogram(ev, bins=bins, range=range_)
        return counts, edges

    def histogram_csv(self, bins=50, range_=None):
        counts, edges = self.histogram(bins, range_)
        lines = ["bin_lo,bin_hi,count"]
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            lines.append(f"{lo:.12g},{hi:.12g},{int(c)}")
        return "\n".join(lines) + "\n"


def _parse_q(expr, spec, dd):
    q = expr if isinstance(expr, NCPoly) else parse_expression(translate_expression(expr, spec), dd)
    one = dd.vertex("1")
    if not q.is_cornered(one):
        raise ShapeError("expression must map block 1 to block 1 (every term a loop at vertex 1)")
    if not q.is_self_adjoint(tol=1e-12):
        raise NotSelfAdjoint("expression is not self-adjoint after substitution")
    return q


def compare(spec: EnsembleSpec, expr, K: int = 4, workers: int = 1, gap_moments: int | None = None):
    """Empirical ``(1/n) E Tr(Q_n^m)`` against ``Tr(q^m)/mu(1)`` on the limit graph."""
    g = limit_graph(spec)
    dd = build_directed_double(g)
    q = _parse_q(expr, spec, dd)
    one = dd.vertex("1")
    pred_seq = TraceEngine(dd).moments(q, one, max(K, gap_moments or 0), check=False)
    mu1 = float(dd.mu[one])
    predicted = np.array([float(x) for x in pred_seq.moments[: K + 1]]) / mu1

    n = spec.sizes[0]
    eig = np.zeros((spec.samples, n))

    def run(s):
        Q = evaluate(q, spec, sample_ensemble(spec, s))
        Q = 0.5 * (Q + Q.conj().T)
        eig[s] = np.linalg.eigvalsh(Q)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(run, range(spec.samples)))
    else:
        for s in range(spec.samples):
            run(s)

    per = np.stack([np.mean(eig**m, axis=1) for m in range(K + 1)], axis=1)
    empirical = per.mean(axis=0)
    stderr = per.std(axis=0, ddof=1) / math.sqrt(spec.samples) if spec.samples > 1 else np.zeros(K + 1)
    report = WishartReport(spec, str(q), predicted, empirical, stderr, eig)
    if gap_moments:
        from .law import estimate_law

        est = estimate_law(pred_seq)
        report.support = est.intervals
        ev = eig.ravel()
        inside = np.zeros(ev.shape, dtype=bool)
        for lo, hi in est.intervals:
            inside |= (ev >= lo) & (ev <= hi)
        for t, _ in est.atoms:
            inside |= np.abs(ev - t) <= 1e-6 * max(1.0, abs(t))
        report.gap_mass = float(np.mean(~inside))
    return report
