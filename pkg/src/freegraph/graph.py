"""Weighted graphs, their directed doubles, and the ideal/K-theory structure report.

Graph files are line oriented::

    # comment
    vertex a 1
    vertex b 4/1
    edge e1 a b

Weights are parsed as exact rationals (``p/q`` or decimal strings), so the
vertex classification below never depends on floating point rounding.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import EdgeCountError, GraphError

__all__ = [
    "WeightedGraph",
    "DirectedDouble",
    "VertexClassification",
    "StructureReport",
    "parse_weight",
    "load_graph",
    "build_directed_double",
    "classify_vertices",
    "structure_report",
    "k0_positive_cone_member",
]


def parse_weight(text) -> Fraction:
    """Exact conversion of ``p/q``, integers, decimals and exponent notation."""
    if isinstance(text, Fraction):
        w = text
    elif isinstance(text, int):
        w = Fraction(text)
    elif isinstance(text, float):
        if not math.isfinite(text):
            raise GraphError(f"weight must be finite, got {text!r}")
        w = Fraction(text)
    else:
        try:
            w = Fraction(str(text).strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GraphError(f"cannot parse weight {text!r}") from exc
    return w


@dataclass(frozen=True)
class WeightedGraph:
    vertices: tuple  # ((vertex_id, Fraction weight), ...)
    edges: tuple  # ((edge_id, v1, v2), ...)
    name: str = ""

    def __post_init__(self):
        verts = tuple((str(v), parse_weight(w)) for v, w in self.vertices)
        edges = tuple((str(e), str(a), str(b)) for e, a, b in self.edges)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)
        self._validate()

    def _validate(self):
        if not self.vertices:
            raise GraphError("graph has no vertices")
        seen = set()
        for v, w in self.vertices:
            if v in seen:
                raise GraphError(f"duplicate vertex id {v!r}")
            seen.add(v)
            if w <= 0:
                raise GraphError(f"vertex {v!r} has non-positive weight {w}")
        eseen = set()
        for e, a, b in self.edges:
            if e in eseen:
                raise GraphError(f"duplicate edge id {e!r}")
            eseen.add(e)
            for end in (a, b):
                if end not in seen:
                    raise GraphError(f"edge {e!r} has dangling endpoint {end!r}")
        if not self._connected():
            raise GraphError("graph is not connected")

    def _connected(self):
        adj = defaultdict(set)
        for _, a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        start = self.vertices[0][0]
        stack, reached = [start], {start}
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if u not in reached:
                    reached.add(u)
                    stack.append(u)
        return len(reached) == len(self.vertices)

    @property
    def vertex_ids(self):
        return [v for v, _ in self.vertices]

    @property
    def weights(self):
        return dict(self.vertices)

    def weight(self, v) -> Fraction:
        return self.weights[v]

    def scaled(self, c) -> "WeightedGraph":
        c = parse_weight(c)
        return WeightedGraph(tuple((v, w * c) for v, w in self.vertices), self.edges, self.name)

    @classmethod
    def from_text(cls, text: str, name: str = "", path=None) -> "WeightedGraph":
        vertices, edges = [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            kind = parts[0]
            if kind == "vertex":
                if len(parts) != 3:
                    raise GraphError("expected 'vertex <id> <weight>'", lineno, path)
                try:
                    w = parse_weight(parts[2])
                except GraphError as exc:
                    raise GraphError(str(exc), lineno, path) from None
                vertices.append((parts[1], w))
            elif kind == "edge":
                if len(parts) != 4:
                    raise GraphError("expected 'edge <id> <v1> <v2>'", lineno, path)
                edges.append((parts[1], parts[2], parts[3]))
            else:
                raise GraphError(f"unknown record {kind!r}", lineno, path)
        try:
            return cls(tuple(vertices), tuple(edges), name)
        except GraphError as exc:
            if exc.path is None and path is not None:
                raise GraphError(str(exc), None, path) from None
            raise

    def to_text(self) -> str:
        lines = [f"vertex {v} {w}" for v, w in self.vertices]
        lines += [f"edge {e} {a} {b}" for e, a, b in self.edges]
        return "\n".join(lines) + "\n"


def load_graph(path) -> WeightedGraph:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphError(f"cannot read graph file: {exc.strerror}", None, str(path)) from None
    return WeightedGraph.from_text(text, name=path.stem, path=str(path))


def _exact_sqrt(x: Fraction):
    """Square root of a non-negative rational if it is rational, else None."""
    p, q = x.numerator, x.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        return Fraction(rp, rq)
    return None


class DirectedDouble:
    """Oriented edges of a weighted graph, indexed ``0..m-1``.

    Non-loop edges ``e`` with endpoints ``(v1, v2)`` (file order) give ``e+``
    (v1 -> v2) and ``e-`` (v2 -> v1); a self-loop gives the single fixed
    point ``e+`` of the opposite-edge involution.
    """

    def __init__(self, graph: WeightedGraph):
        self.graph = graph
        self.vertex_names = graph.vertex_ids
        self.vertex_index = {v: i for i, v in enumerate(self.vertex_names)}
        self.mu_exact = tuple(w for _, w in graph.vertices)
        self.mu = np.array([float(w) for w in self.mu_exact])
        self.mu.setflags(write=False)

        names, src, tgt, opp, parent = [], [], [], [], []
        for e, a, b in graph.edges:
            ia, ib = self.vertex_index[a], self.vertex_index[b]
            k = len(names)
            if ia == ib:
                names.append(f"{e}+")
                src.append(ia)
                tgt.append(ia)
                opp.append(k)
                parent.append(e)
            else:
                names += [f"{e}+", f"{e}-"]
                src += [ia, ib]
                tgt += [ib, ia]
                opp += [k + 1, k]
                parent += [e, e]
        self.names = tuple(names)
        self.name_index = {n: i for i, n in enumerate(names)}
        self.src = np.array(src, dtype=np.int64)
        self.tgt = np.array(tgt, dtype=np.int64)
        self.opp = np.array(opp, dtype=np.int64)
        for arr in (self.src, self.tgt, self.opp):
            arr.setflags(write=False)
        self.parent = tuple(parent)

        mu = self.mu
        # a_eps = (mu(s)/mu(t))^(1/4)
        self.amplitude = (mu[self.src] / mu[self.tgt]) ** 0.25
        self.sqrt_st = np.sqrt(mu[self.src] * mu[self.tgt])
        self.inv_sqrt_st = 1.0 / self.sqrt_st
        for arr in (self.amplitude, self.sqrt_st, self.inv_sqrt_st):
            arr.setflags(write=False)

        self._out = defaultdict(list)
        self._in = defaultdict(list)
        for k in range(len(names)):
            self._out[int(self.src[k])].append(k)
            self._in[int(self.tgt[k])].append(k)

    def __len__(self):
        return len(self.names)

    @property
    def n_vertices(self):
        return len(self.vertex_names)

    def out_edges(self, v: int):
        return self._out[v]

    def in_edges(self, v: int):
        return self._in[v]

    def is_loop(self, k: int) -> bool:
        return int(self.opp[k]) == k

    def vertex(self, name) -> int:
        try:
            return self.vertex_index[str(name)]
        except KeyError:
            raise KeyError(f"unknown vertex {name!r}") from None

    def edge(self, name) -> int:
        """Oriented edge by ``<edge>+`` / ``<edge>-`` name."""
        try:
            return self.name_index[name]
        except KeyError:
            raise KeyError(f"unknown oriented edge {name!r}") from None

    def oriented(self, edge_id, v_from, v_to) -> int:
        i, j = self.vertex(v_from), self.vertex(v_to)
        for suffix in ("+", "-"):
            k = self.name_index.get(f"{edge_id}{suffix}")
            if k is not None and self.src[k] == i and self.tgt[k] == j:
                return k
        raise KeyError(f"edge {edge_id!r} has no orientation {v_from}->{v_to}")

    def orientations(self, edge_id):
        return [k for k in (self.name_index.get(f"{edge_id}+"), self.name_index.get(f"{edge_id}-")) if k is not None]

    def exact_sqrt_st(self):
        """Exact sqrt(mu(s) mu(t)) per oriented edge, or None if some is irrational."""
        out = []
        for k in range(len(self)):
            r = _exact_sqrt(self.mu_exact[self.src[k]] * self.mu_exact[self.tgt[k]])
            if r is None:
                return None
            out.append(r)
        return out


def build_directed_double(g: WeightedGraph) -> DirectedDouble:
    return DirectedDouble(g)


@dataclass(frozen=True)
class VertexClassification:
    V_gt: frozenset
    V_eq: frozenset
    neighbor_counts: dict = field(compare=False)  # (a, b) -> n_{a,b}
    neighbor_sums: dict = field(compare=False)  # a -> sum_b n_{a,b} mu(b)

    @property
    def V_geq(self):
        return self.V_gt | self.V_eq


def classify_vertices(g: WeightedGraph) -> VertexClassification:
    counts = defaultdict(int)
    for _, a, b in g.edges:
        counts[(a, b)] += 1
        if a != b:
            counts[(b, a)] += 1
    mu = g.weights
    sums = {v: Fraction(0) for v in mu}
    for (a, b), n in counts.items():
        # a loop at a contributes n_{a,a} mu(a)
        sums[a] += n * mu[b]
    gt = frozenset(v for v in mu if mu[v] > sums[v])
    eq = frozenset(v for v in mu if mu[v] == sums[v])
    return VertexClassification(gt, eq, dict(counts), sums)


@dataclass(frozen=True)
class StructureReport:
    simple: bool
    unique_trace: bool
    ideal_unital: bool
    quotient_dimension: int
    summand_traces: dict
    k0_basis: tuple
    k1_trivial: bool
    weights: dict = field(compare=False, repr=False)
    classification: VertexClassification = field(compare=False, repr=False)

    def lines(self):
        c = self.classification
        fmt = lambda s: "{" + ",".join(sorted(s)) + "}"
        out = [
            f"V_gt={fmt(c.V_gt)}",
            f"V_eq={fmt(c.V_eq)}",
            f"V_geq={fmt(c.V_geq)}",
            f"simple={str(self.simple).lower()}",
            f"unique_trace={str(self.unique_trace).lower()}",
            f"ideal_unital={str(self.ideal_unital).lower()}",
            f"quotient_dimension={self.quotient_dimension}",
        ]
        for v, t in self.summand_traces.items():
            out.append(f"summand_trace[{v}]={t}")
        out.append("K0=Z^{" + ",".join(self.k0_basis) + "}")
        out.append("K1=0")
        return out


def structure_report(g: WeightedGraph) -> StructureReport:
    """Ideal structure, summand traces and K-theory of the graph C*-algebra.

    Summand traces use ``mu(gamma) - sum_{beta ~ gamma} n_{gamma,beta} mu(beta)``.
    """
    if len(g.edges) < 2:
        raise EdgeCountError(f"structure report needs at least two edges, graph has {len(g.edges)}")
    cls = classify_vertices(g)
    mu = g.weights
    order = g.vertex_ids
    summands = {v: mu[v] - cls.neighbor_sums[v] for v in order if v in cls.V_gt}
    geq = cls.V_geq
    return StructureReport(
        simple=not geq,
        unique_trace=not geq,
        ideal_unital=not cls.V_eq,
        quotient_dimension=len(geq),
        summand_traces=summands,
        k0_basis=tuple(v for v in order if v not in geq),
        k1_trivial=True,
        weights=dict(mu),
        classification=cls,
    )


def k0_positive_cone_member(report: StructureReport, coeffs: dict) -> bool:
    """Whether ``sum n_b [p_b]`` lies in the positive cone of K0 of the ideal."""
    basis = set(report.k0_basis)
    total = Fraction(0)
    nonzero = False
    for v, n in coeffs.items():
        if int(n) != n:
            raise ValueError(f"K0 coefficients must be integers, got {n!r} at {v!r}")
        if v not in basis:
            if v in report.weights:
                raise ValueError(f"vertex {v!r} is in V_geq; its projection is not in the ideal")
            raise ValueError(f"unknown vertex {v!r}")
        if n:
            nonzero = True
        total += int(n) * report.weights[v]
    return (not nonzero) or total > 0
