"""Noncommutative *-polynomials in the path generators X_eps and projections p_alpha.

A monomial is stored as a flat tuple ``(start_vertex, e1, e2, ..., en)`` of
integer indices into a :class:`~freegraph.graph.DirectedDouble`.  The empty
word ``(v,)`` is the projection ``p_v``.  Non-composable products are zero, so
every stored key is a genuine path and the bracketing ``p_s w p_t`` is
implicit in its endpoints.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Number

import numpy as np

from .errors import ParseError

__all__ = [
    "NCPoly",
    "word_end",
    "word_edges",
    "word_str",
    "make_word",
    "parse_expression",
    "random_poly",
    "random_path",
]


def word_end(dd, key):
    return int(dd.tgt[key[-1]]) if len(key) > 1 else key[0]


def word_edges(key):
    return key[1:]


def make_word(dd, edges, vertex=None):
    """Key for a sequence of oriented edges, or None if it is not a path."""
    edges = tuple(int(e) for e in edges)
    if not edges:
        if vertex is None:
            raise ValueError("empty word needs a vertex")
        return (int(vertex),)
    for a, b in zip(edges, edges[1:]):
        if dd.tgt[a] != dd.src[b]:
            return None
    return (int(dd.src[edges[0]]),) + edges


def concat(dd, k1, k2):
    if word_end(dd, k1) != k2[0]:
        return None
    return k1 + k2[1:]


def word_str(dd, key):
    if len(key) == 1:
        return f"P[{dd.vertex_names[key[0]]}]"
    return "*".join(f"X[{dd.names[e]}]" for e in key[1:])


def _conj(c):
    return c.conjugate() if isinstance(c, complex) else c


def _is_zero(c):
    return c == 0


class NCPoly:
    """Immutable element of the path algebra with scalar coefficients.

    Coefficients are exact :class:`~fractions.Fraction` values by default; a
    float or complex scalar anywhere promotes the affected terms.
    """

    __slots__ = ("dd", "terms", "_hash")

    def __init__(self, dd, terms=None):
        self.dd = dd
        clean = {}
        if terms:
            for k, c in terms.items():
                if not _is_zero(c):
                    clean[k] = c
        self.terms = clean
        self._hash = None

    # constructors
    @classmethod
    def zero(cls, dd):
        return cls(dd)

    @classmethod
    def one(cls, dd):
        return cls(dd, {(v,): Fraction(1) for v in range(dd.n_vertices)})

    @classmethod
    def proj(cls, dd, v):
        return cls(dd, {(int(v),): Fraction(1)})

    @classmethod
    def gen(cls, dd, eps):
        """The oriented generator X_eps."""
        eps = int(eps)
        return cls(dd, {(int(dd.src[eps]), eps): Fraction(1)})

    @classmethod
    def edge_gen(cls, dd, edge_id):
        """Self-adjoint edge generator X_e = X_eps + X_eps^op (X_eps for a loop)."""
        ks = dd.orientations(edge_id)
        if not ks:
            raise KeyError(f"unknown edge {edge_id!r}")
        return cls(dd, {(int(dd.src[k]), k): Fraction(1) for k in ks})

    @classmethod
    def word(cls, dd, edges, vertex=None, coeff=1):
        key = make_word(dd, edges, vertex)
        if key is None:
            return cls(dd)
        return cls(dd, {key: _as_coeff(coeff)})

    @classmethod
    def scalar(cls, dd, c):
        return cls.one(dd) * c

    # algebra
    def _check(self, other):
        if other.dd is not self.dd:
            raise ValueError("polynomials live over different graphs")

    def __add__(self, other):
        if isinstance(other, Number):
            other = NCPoly.scalar(self.dd, other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return NCPoly(self.dd, out)

    __radd__ = __add__

    def __neg__(self):
        return NCPoly(self.dd, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            c = _as_coeff(other)
            return NCPoly(self.dd, {k: v * c for k, v in self.terms.items()})
        self._check(other)
        dd = self.dd
        out = {}
        # bucket right factors by start vertex
        by_start = {}
        for k2, c2 in other.terms.items():
            by_start.setdefault(k2[0], []).append((k2, c2))
        for k1, c1 in self.terms.items():
            end = word_end(dd, k1)
            for k2, c2 in by_start.get(end, ()):
                k = k1 + k2[1:]
                out[k] = out.get(k, 0) + c1 * c2
        return NCPoly(dd, out)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("power must be a non-negative integer")
        result = NCPoly.one(self.dd)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def adjoint(self):
        dd = self.dd
        out = {}
        for k, c in self.terms.items():
            if len(k) == 1:
                nk = k
            else:
                edges = tuple(int(dd.opp[e]) for e in reversed(k[1:]))
                nk = (int(dd.src[edges[0]]),) + edges
            out[nk] = out.get(nk, 0) + _conj(c)
        return NCPoly(dd, out)

    @property
    def H(self):
        return self.adjoint()

    def __eq__(self, other):
        if isinstance(other, Number):
            other = NCPoly.scalar(self.dd, other)
        if not isinstance(other, NCPoly):
            return NotImplemented
        return self.dd is other.dd and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def max_abs_coeff(self):
        return max((abs(c) for c in self.terms.values()), default=0)

    def degree(self):
        return max((len(k) - 1 for k in self.terms), default=-1)

    def is_self_adjoint(self, tol=0.0):
        diff = self - self.adjoint()
        return diff.max_abs_coeff() <= tol

    def compress(self, a, b):
        """p_a * self * p_b."""
        dd = self.dd
        return NCPoly(dd, {k: c for k, c in self.terms.items() if k[0] == a and word_end(dd, k) == b})

    def is_cornered(self, a, b=None):
        b = a if b is None else b
        return self.compress(a, b) == self

    def to_float(self):
        return NCPoly(self.dd, {k: (c if isinstance(c, complex) else float(c)) for k, c in self.terms.items()})

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kc: (len(kc[0]), kc[0]))

    def __repr__(self):
        return f"NCPoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, c in self.sorted_terms():
            w = word_str(self.dd, k)
            if c == 1:
                parts.append(w)
            elif isinstance(c, complex):
                parts.append(f"({_fmt(c.real)},{_fmt(c.imag)})*{w}")
            else:
                parts.append(f"{_fmt(c)}*{w}")
        return " + ".join(parts)


def _fmt(c):
    if isinstance(c, Fraction):
        return str(c)
    return repr(float(c))


def _as_coeff(c):
    if isinstance(c, (Fraction, float, complex)):
        return c
    if isinstance(c, bool):
        return Fraction(int(c))
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, np.floating):
        return float(c)
    if isinstance(c, np.complexfloating):
        return complex(c)
    if isinstance(c, np.integer):
        return Fraction(int(c))
    return c


# ---------------------------------------------------------------------------
# expression language
#
#   expr   := term (('+'|'-') term)*
#   term   := ['-'] factor ('*'? factor)*
#   factor := atom ('^' int)?
#   atom   := number | '(' re ',' im ')' | P[v] | X[e] | X[e;v->w] | X[e+] | '(' expr ')'
# ---------------------------------------------------------------------------

_NUMBER = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?:/\d+)?|\.\d+(?:[eE][+-]?\d+)?")
_SIGNED = re.compile(r"\s*[+-]?\s*(?:" + _NUMBER.pattern + r")\s*")


class _Parser:
    def __init__(self, text, dd):
        self.text = text
        self.dd = dd
        self.pos = 0

    def error(self, msg, pos=None):
        raise ParseError(msg, self.pos if pos is None else pos, self.text)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def eat(self, ch):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self):
        if not self.text.strip():
            self.error("empty expression", 0)
        p = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        neg = False
        if self.peek() == "-":
            self.pos += 1
            neg = True
        p = self.factor()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                p = p * self.factor()
            elif ch and (ch in "PX(." or ch.isdigit()):
                p = p * self.factor()
            else:
                break
        return -p if neg else p

    def factor(self):
        p = self.atom()
        while self.peek() == "^":
            self.pos += 1
            self.skip()
            m = re.match(r"\d+", self.text[self.pos:])
            if not m:
                self.error("expected non-negative integer exponent")
            self.pos += m.end()
            p = p ** int(m.group())
        return p

    def number(self):
        self.skip()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            self.error("expected number")
        self.pos = m.end()
        try:
            return Fraction(m.group())
        except ZeroDivisionError:
            self.error("division by zero in coefficient", m.start())

    def bracket(self):
        self.eat("[")
        end = self.text.find("]", self.pos)
        if end < 0:
            self.error("unterminated '['")
        body_pos = self.pos
        body = self.text[self.pos:end].strip()
        self.pos = end + 1
        return body, body_pos

    def atom(self):
        ch = self.peek()
        dd = self.dd
        if ch == "(":
            m = re.match(r"\(" + _SIGNED.pattern + "," + _SIGNED.pattern + r"\)", self.text[self.pos:])
            if m:
                re_s, im_s = m.group()[1:-1].split(",")
                self.pos += m.end()
                re_v = float(Fraction(re_s.replace(" ", "")))
                im_v = float(Fraction(im_s.replace(" ", "")))
                if im_v == 0:
                    return NCPoly.scalar(dd, Fraction(re_s.replace(" ", "")))
                return NCPoly.scalar(dd, complex(re_v, im_v))
            self.pos += 1
            p = self.expr()
            self.eat(")")
            return p
        if ch == "." or ch.isdigit():
            return NCPoly.scalar(dd, self.number())
        if ch == "P":
            self.pos += 1
            body, bpos = self.bracket()
            try:
                return NCPoly.proj(dd, dd.vertex(body))
            except KeyError:
                self.error(f"unknown vertex {body!r}", bpos)
        if ch == "X":
            self.pos += 1
            body, bpos = self.bracket()
            return self._x(body, bpos)
        if not ch:
            self.error("unexpected end of expression")
        self.error(f"unexpected {ch!r}")

    def _x(self, body, bpos):
        dd = self.dd
        if ";" in body:
            edge, orient = (s.strip() for s in body.split(";", 1))
            if "->" not in orient:
                self.error("expected orientation 'v->w'", bpos)
            a, b = (s.strip() for s in orient.split("->", 1))
            if not dd.orientations(edge):
                self.error(f"unknown edge {edge!r}", bpos)
            try:
                return NCPoly.gen(dd, dd.oriented(edge, a, b))
            except KeyError as exc:
                self.error(str(exc.args[0]), bpos)
        if dd.orientations(body):
            return NCPoly.edge_gen(dd, body)
        if body in dd.name_index:
            return NCPoly.gen(dd, dd.name_index[body])
        self.error(f"unknown edge {body!r}", bpos)


def parse_expression(text: str, dd) -> NCPoly:
    """Parse the expression mini-language into a canonical :class:`NCPoly`."""
    return _Parser(text, dd).parse()


def parse_word(text: str, dd):
    """Comma separated oriented-edge names, e.g. ``e1+,e1-``; returns a key or None."""
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise ParseError("empty word", 0, text)
    edges = []
    for n in names:
        if n not in dd.name_index:
            raise ParseError(f"unknown oriented edge {n!r}", text.find(n), text)
        edges.append(dd.name_index[n])
    return make_word(dd, edges)


# ---------------------------------------------------------------------------
# random inputs for property checks


def random_path(dd, rng, length, start=None):
    """Uniform random walk of the given length; returns a word key."""
    v = int(rng.integers(dd.n_vertices)) if start is None else int(start)
    key = [v]
    for _ in range(length):
        outs = dd.out_edges(v)
        if not outs:
            break
        e = outs[int(rng.integers(len(outs)))]
        key.append(e)
        v = int(dd.tgt[e])
    return tuple(key)


def random_poly(dd, rng, max_degree=5, n_terms=4, complex_coeffs=False, start=None, end=None):
    """Seeded random polynomial with small rational (or complex) coefficients.

    When ``start``/``end`` are given, terms are restricted to paths between
    those vertices (walks that miss ``end`` are discarded).
    """
    terms = {}
    attempts = 0
    while len(terms) < n_terms and attempts < 50 * n_terms:
        attempts += 1
        key = random_path(dd, rng, int(rng.integers(0, max_degree + 1)), start)
        if end is not None and word_end(dd, key) != end:
            continue
        c = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
        if c == 0:
            continue
        if complex_coeffs:
            c = complex(float(c), float(Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))))
        terms[key] = terms.get(key, 0) + c
    return NCPoly(dd, terms)
