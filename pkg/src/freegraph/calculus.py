"""Free difference quotients on the path algebra and their identities.

``derive(eps, p)`` is the derivation with ``d_eps(X_eps') = [eps == eps'] p_s(eps) (x) p_t(eps)``
and ``d_eps(p_alpha) = 0``.  Elements of the algebraic tensor product are
:class:`TensorPoly` objects keyed by pairs of word keys.

Inner products use the unnormalized trace: ``<a, b> = Tr(a* b)`` and
``<x (x) y, u (x) v> = Tr(x* u) Tr(y* v)``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Number

from .errors import NotCornered
from .ncpoly import NCPoly, _as_coeff, _conj, word_end
from .trace import TraceEngine

__all__ = [
    "TensorPoly",
    "derive",
    "check_conjugate_variable",
    "check_sigma_symmetry",
    "check_adjoint_formula",
    "check_flatness_identity",
    "check_leibniz",
]


class TensorPoly:
    """Finite sum of elementary tensors ``x (x) y`` of words, with merged terms."""

    __slots__ = ("dd", "terms")

    def __init__(self, dd, terms=None):
        self.dd = dd
        self.terms = {k: c for k, c in (terms or {}).items() if c != 0}

    @classmethod
    def elementary(cls, x: NCPoly, y: NCPoly):
        out = {}
        for k1, c1 in x.terms.items():
            for k2, c2 in y.terms.items():
                out[(k1, k2)] = out.get((k1, k2), 0) + c1 * c2
        return cls(x.dd, out)

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return TensorPoly(self.dd, out)

    def __neg__(self):
        return TensorPoly(self.dd, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        c = _as_coeff(c)
        return TensorPoly(self.dd, {k: v * c for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TensorPoly):
            return NotImplemented
        return self.dd is other.dd and self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def legs(self):
        """Iterate ``(x, y, c)`` with x, y word keys."""
        for (k1, k2), c in self.terms.items():
            yield k1, k2, c

    # bimodule structure ---------------------------------------------------

    def bimodule(self, a: NCPoly | None = None, b: NCPoly | None = None):
        """``a . (x (x) y) . b = a x (x) y b``."""
        out = self
        if a is not None:
            out = out._act(a, None)
        if b is not None:
            out = out._act(None, b)
        return out

    def _act(self, left, right):
        dd = self.dd
        out = {}
        for k1, k2, c in self.legs():
            if left is not None:
                for ka, ca in left.terms.items():
                    if word_end(dd, ka) != k1[0]:
                        continue
                    k = (ka + k1[1:], k2)
                    out[k] = out.get(k, 0) + ca * c
            else:
                for kb, cb in right.terms.items():
                    if word_end(dd, k2) != kb[0]:
                        continue
                    k = (k1, k2 + kb[1:])
                    out[k] = out.get(k, 0) + c * cb
        return TensorPoly(dd, out)

    def sharp(self, other: "TensorPoly"):
        """``(a (x) b) # (x (x) y) = a x (x) y b``, extended bilinearly."""
        dd = self.dd
        out = {}
        for a1, b1, c in self.legs():
            ea, sb = word_end(dd, a1), b1[0]
            for x, y, d in other.legs():
                if x[0] != ea or word_end(dd, y) != sb:
                    continue
                k = (a1 + x[1:], y + b1[1:])
                out[k] = out.get(k, 0) + c * d
        return TensorPoly(dd, out)

    def adjoint(self):
        """``(x (x) y)* = x* (x) y*``."""
        def adj(k):
            return next(iter(NCPoly(self.dd, {k: 1}).adjoint().terms))

        out = {}
        for k1, k2, c in self.legs():
            k = (adj(k1), adj(k2))
            out[k] = out.get(k, 0) + _conj(c)
        return TensorPoly(self.dd, out)

    def sigma(self):
        return TensorPoly(self.dd, {(k2, k1): c for (k1, k2), c in self.terms.items()})

    def max_abs(self):
        return max((abs(c) for c in self.terms.values()), default=0)

    # partial traces ---------------------------------------------------------

    def tr_tr(self, engine: TraceEngine):
        total = 0
        for k1, k2, c in self.legs():
            t1 = engine.trace_word(k1)
            if t1:
                total = total + c * t1 * engine.trace_word(k2)
        return total

    def id_tr(self, engine: TraceEngine) -> NCPoly:
        out = {}
        for k1, k2, c in self.legs():
            t = engine.trace_word(k2)
            if t:
                out[k1] = out.get(k1, 0) + c * t
        return NCPoly(self.dd, out)

    def tr_id(self, engine: TraceEngine) -> NCPoly:
        out = {}
        for k1, k2, c in self.legs():
            t = engine.trace_word(k1)
            if t:
                out[k2] = out.get(k2, 0) + c * t
        return NCPoly(self.dd, out)

    def __repr__(self):
        return f"TensorPoly({len(self.terms)} terms)"


def derive(eps, p: NCPoly) -> TensorPoly:
    """Free difference quotient ``d_eps(p)``: sum over occurrences of ``eps``."""
    dd = p.dd
    eps = int(eps)
    s, t = int(dd.src[eps]), int(dd.tgt[eps])
    out = {}
    for key, c in p.terms.items():
        edges = key[1:]
        for i, e in enumerate(edges):
            if e != eps:
                continue
            left = (key[0],) + edges[:i] if i else (s,)
            right = (t,) + edges[i + 1:]
            k = (left, right)
            out[k] = out.get(k, 0) + c
    return TensorPoly(dd, out)


def _engine(dd, engine):
    return TraceEngine(dd) if engine is None else engine


def _inner(engine, a: NCPoly, b: NCPoly):
    return engine.trace_poly(a.adjoint() * b)


def _sqrt_st(dd, eps):
    return float(dd.sqrt_st[eps])


def check_conjugate_variable(eps, p: NCPoly, engine=None):
    """``|(Tr (x) Tr)(d_eps p) - sqrt(mu_s mu_t) Tr(X_op(eps) p)|``."""
    dd = p.dd
    engine = _engine(dd, engine)
    lhs = derive(eps, p).tr_tr(engine)
    rhs = _sqrt_st(dd, eps) * engine.trace_poly(NCPoly.gen(dd, int(dd.opp[eps])) * p)
    return float(abs(lhs - rhs))


def check_sigma_symmetry(eps, p: NCPoly):
    """Max coefficient of ``(d_eps p)* - sigma(d_op(eps) p*)``; symbolic."""
    dd = p.dd
    lhs = derive(eps, p).adjoint()
    rhs = derive(int(dd.opp[eps]), p.adjoint()).sigma()
    return float((lhs - rhs).max_abs())


def adjoint_of_derivative(eps, q: NCPoly, r: NCPoly, engine=None) -> NCPoly:
    """``d_eps*(q (x) r)`` for polynomials ``q, r``."""
    dd = q.dd
    engine = _engine(dd, engine)
    op = int(dd.opp[eps])
    main = q * NCPoly.gen(dd, eps) * r * _sqrt_st(dd, eps)
    return main - derive(op, q).id_tr(engine) * r - q * derive(op, r).tr_id(engine)


def check_adjoint_formula(eps, q: NCPoly, r: NCPoly, p: NCPoly, engine=None):
    """``|<q (x) r, d_eps p> - <d_eps*(q (x) r), p>|``."""
    dd = p.dd
    engine = _engine(dd, engine)
    qa, ra = q.adjoint(), r.adjoint()
    lhs = 0
    for k1, k2, c in derive(eps, p).legs():
        x = NCPoly(dd, {k1: Fraction(1)})
        y = NCPoly(dd, {k2: Fraction(1)})
        t1 = engine.trace_poly(qa * x)
        if t1:
            lhs = lhs + c * t1 * engine.trace_poly(ra * y)
    rhs = _inner(engine, adjoint_of_derivative(eps, q, r, engine), p)
    return float(abs(lhs - rhs))


def flatness_residual(q: NCPoly, alpha, beta) -> TensorPoly:
    """``q (x) p_beta - p_alpha (x) q - sum_eps d_eps(q) # (X_eps (x) 1 - 1 (x) X_eps)``."""
    dd = q.dd
    alpha, beta = int(alpha), int(beta)
    if not q.is_cornered(alpha, beta):
        raise NotCornered(
            f"polynomial is not in p_{dd.vertex_names[alpha]} A p_{dd.vertex_names[beta]}"
        )
    one = NCPoly.one(dd)
    lhs = TensorPoly.elementary(q, NCPoly.proj(dd, beta)) - TensorPoly.elementary(NCPoly.proj(dd, alpha), q)
    rhs = TensorPoly(dd)
    for eps in range(len(dd)):
        d = derive(eps, q)
        if not d:
            continue
        x = NCPoly.gen(dd, eps)
        rhs = rhs + d.sharp(TensorPoly.elementary(x, one) - TensorPoly.elementary(one, x))
    return lhs - rhs


def check_flatness_identity(q: NCPoly, alpha, beta):
    """Largest coefficient of the symbolic residual; exactly 0 for rational input."""
    return float(flatness_residual(q, alpha, beta).max_abs())


def check_leibniz(eps, p: NCPoly, q: NCPoly):
    """Max coefficient of ``d(pq) - d(p).q - p.d(q)``; symbolic."""
    lhs = derive(eps, p * q)
    rhs = derive(eps, p).bimodule(b=q) + derive(eps, q).bimodule(a=p)
    return float((lhs - rhs).max_abs())
