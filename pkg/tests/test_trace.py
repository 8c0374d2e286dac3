from fractions import Fraction

import numpy as np
import pytest

from freegraph import corpus, fock, kernels
from freegraph.errors import NotCornered, NotSelfAdjoint
from freegraph.graph import build_directed_double
from freegraph.ncpoly import NCPoly, parse_expression, random_path
from freegraph.series import loop_words
from freegraph.trace import MomentSeq, SharedTraceCache, TraceEngine


def test_semicircle_catalan_exact(dd_of):
    dd = dd_of("self_loop")
    ms = TraceEngine(dd, exact=True).moments(parse_expression("X[e]", dd), "a", 10).moments
    assert ms == tuple(Fraction(x) for x in (1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42))


def test_free_poisson_both_corners(dd_of):
    dd = dd_of("edge_1_4")
    eng = TraceEngine(dd, exact=True)
    light = eng.moments(parse_expression("X[e+] X[e-]", dd), "a", 4).moments
    heavy = eng.moments(parse_expression("X[e-] X[e+]", dd), "b", 4).moments
    assert light == (1, 2, 5, Fraction(29, 2), Fraction(185, 4))
    # same nonzero moments; the heavy corner only adds kernel mass
    assert heavy[0] == 4 and heavy[1:] == light[1:]


def test_non_loops_and_odd_words_vanish(dd_of):
    dd = dd_of("triangle")
    eng = TraceEngine(dd)
    rng = np.random.default_rng(1)
    for _ in range(50):
        key = random_path(dd, rng, int(rng.integers(1, 7)))
        if key[0] != int(dd.tgt[key[-1]]) or (len(key) - 1) % 2:
            assert eng.trace_word(key) == 0


def test_trace_is_tracial(corpus_dd):
    dd = corpus_dd
    eng = TraceEngine(dd)
    for v in range(dd.n_vertices):
        for w in loop_words(dd, v, 6)[:200]:
            rot = (int(dd.tgt[w[0]]),) + w[1:] + w[:1]
            assert eng.trace_word((v,) + w) == pytest.approx(eng.trace_word(rot), abs=1e-12)


def test_trace_matches_fock_small(corpus_dd):
    dd = corpus_dd
    eng = TraceEngine(dd)
    F = fock.build(dd, 6)
    worst = 0.0
    for v in range(dd.n_vertices):
        for w in loop_words(dd, v, 6):
            key = (v,) + w
            worst = max(worst, abs(eng.trace_word(key) - F.trace(key)))
    assert worst <= 1e-12


@pytest.mark.skipif(not kernels.HAVE_COMPILED, reason="compiled kernel not built")
def test_backends_agree(corpus_dd):
    dd = corpus_dd
    c = TraceEngine(dd, backend="cython")
    p = TraceEngine(dd, backend="python")
    for v in range(dd.n_vertices):
        for w in loop_words(dd, v, 8)[:300]:
            assert c.trace_word((v,) + w) == pytest.approx(p.trace_word((v,) + w), rel=1e-13, abs=1e-15)


def test_exact_matches_float(dd_of):
    dd = dd_of("edge_1_4")
    a, b = TraceEngine(dd, exact=True), TraceEngine(dd)
    for w in loop_words(dd, 0, 8):
        assert float(a.trace_word((0,) + w)) == pytest.approx(b.trace_word((0,) + w), rel=1e-13)


def test_exact_mode_rejects_irrational(dd_of):
    with pytest.raises(ValueError):
        TraceEngine(dd_of("edge_1_2"), exact=True)


def test_shared_cache_reused(dd_of):
    dd = dd_of("triangle")
    cache = SharedTraceCache()
    q = parse_expression("P[a] (X[e1] + X[e3])^2 P[a]", dd)
    first = TraceEngine(dd, cache=cache).moments(q, "a", 6).moments
    n = len(cache)
    second = TraceEngine(dd, cache=cache).moments(q, "a", 6).moments
    assert first == second and len(cache) == n > 0


def test_moment_checks(dd_of):
    dd = dd_of("edge_1_2")
    eng = TraceEngine(dd)
    with pytest.raises(NotSelfAdjoint):
        eng.moments(parse_expression("X[e+] X[e-] X[e+] X[e-] + X[e+] X[e-] (0,1)", dd), "a", 2)
    with pytest.raises(NotCornered):
        eng.moments(parse_expression("X[e]", dd), "a", 2)


def test_hankel_psd():
    good = MomentSeq("a", 1.0, (1, 0, 1, 0, 2, 0, 5))
    bad = MomentSeq("a", 1.0, (1, 0, 1, 0, 0.5, 0, 5))
    assert good.is_hankel_psd()
    assert not bad.is_hankel_psd()


def test_moment_csv_exact_format(dd_of):
    dd = dd_of("edge_1_4")
    ms = TraceEngine(dd, exact=True).moments(parse_expression("X[e+] X[e-]", dd), "a", 3)
    assert ms.to_csv() == "k,m_k\n0,1\n1,2\n2,5\n3,29/2\n"


def test_forced_fallback_matches(tmp_path):
    import os
    import subprocess
    import sys

    from freegraph import corpus

    code = (
        "from freegraph import corpus, kernels; from freegraph.graph import build_directed_double;"
        "from freegraph.trace import TraceEngine; from freegraph.ncpoly import parse_expression;"
        "d = build_directed_double(corpus.load('star'));"
        "print(kernels.BACKEND, repr(TraceEngine(d).trace_poly(parse_expression('(X[e1] + X[e2])^8', d))))"
    )
    env = dict(os.environ, FREEGRAPH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    backend, value = out.split()
    assert backend == "python"
    d = build_directed_double(corpus.load("star"))
    assert float(value) == pytest.approx(TraceEngine(d).trace_poly(parse_expression("(X[e1] + X[e2])^8", d)), rel=1e-13)
