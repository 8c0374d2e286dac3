from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freegraph import corpus
from freegraph.errors import ParseError
from freegraph.graph import build_directed_double
from freegraph.ncpoly import NCPoly, parse_expression, parse_word, random_poly

DD = build_directed_double(corpus.load("edge_1_2"))
TRI = build_directed_double(corpus.load("triangle"))


def P(text, dd=DD):
    return parse_expression(text, dd)


def test_edge_generator_is_sum_of_orientations():
    assert P("X[e]") == P("X[e+] + X[e-]")
    assert P("X[e; a->b]") == P("X[e+]")
    assert P("X[e; b->a]") == P("X[e-]")


def test_noncomposable_products_vanish():
    assert not P("X[e+] X[e+]")
    assert not P("P[a] X[e-]")
    assert P("P[a] X[e+] P[b]") == P("X[e+]")


def test_projections_sum_to_one():
    assert P("P[a] + P[b]") == NCPoly.one(DD)
    assert P("P[a]^3") == P("P[a]")
    assert P("X[e]^0") == NCPoly.one(DD)


def test_scalars_and_signs():
    assert P("2 X[e+] - 1/2 X[e+]") == P("3/2 * X[e+]")
    assert P("-X[e+]") == -P("X[e+]")
    assert P("(2 - 2) X[e]") == NCPoly.zero(DD)
    z = P("(1, 2) X[e+]")
    assert list(z.terms.values()) == [complex(1, 2)]
    assert P("(3, 0)") == P("3")


def test_adjoint_rules():
    assert P("X[e+]").adjoint() == P("X[e-]")
    assert P("X[e+] X[e-]").adjoint() == P("X[e+] X[e-]")
    assert P("(0, 1) X[e+]").adjoint() == P("(0, -1) X[e-]")
    assert P("X[e]^3").is_self_adjoint()
    assert not P("X[e+]").is_self_adjoint()


def test_corners():
    q = P("X[e+] X[e-]")
    assert q.is_cornered(DD.vertex("a"))
    assert not q.is_cornered(DD.vertex("b"))
    assert P("X[e+]").is_cornered(DD.vertex("a"), DD.vertex("b"))


@pytest.mark.parametrize(
    "text",
    ["", "X[", "X[zz]", "P[q]", "X[e;a-b]", "X[e] +", "2 ^ x", "1/0", "X[e] )"],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        P(text)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as exc:
        P("X[e] + X[q]")
    assert exc.value.position is not None and exc.value.position >= 7


def test_parse_word():
    assert parse_word("e+,e-", DD) == (DD.vertex("a"), DD.edge("e+"), DD.edge("e-"))
    assert parse_word("e+,e+", DD) is None
    with pytest.raises(ParseError):
        parse_word("", DD)
    with pytest.raises(ParseError):
        parse_word("q+", DD)


def test_str_round_trip():
    q = P("2 X[e+] X[e-] - 1/3 P[b] + X[e-] X[e+]")
    assert P(str(q)) == q


def _seeded(seed, dd=TRI, **kw):
    return random_poly(dd, np.random.default_rng(seed), **kw)


@settings(max_examples=50, deadline=None)
@given(s1=st.integers(0, 10**6), s2=st.integers(0, 10**6), s3=st.integers(0, 10**6))
def test_ring_axioms(s1, s2, s3):
    a, b, c = _seeded(s1), _seeded(s2), _seeded(s3)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a * b).adjoint() == b.adjoint() * a.adjoint()
    assert a.adjoint().adjoint() == a
    one = NCPoly.one(TRI)
    assert one * a == a == a * one


@settings(max_examples=30, deadline=None)
@given(s=st.integers(0, 10**6))
def test_complex_adjoint_involution(s):
    a = _seeded(s, complex_coeffs=True)
    assert a.adjoint().adjoint() == a
    h = a + a.adjoint()
    assert h.is_self_adjoint(tol=1e-15)


def test_exact_coefficients_stay_fractions():
    q = P("1/3 X[e]") ** 4
    assert all(isinstance(c, Fraction) for c in q.terms.values())
