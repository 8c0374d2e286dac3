"""Acceptance criteria, one PASS/FAIL line each.

Tolerances are pinned here; the assertions use the same numbers that the
report line prints.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from freegraph import corpus, fock, law
from freegraph.calculus import (
    check_adjoint_formula,
    check_conjugate_variable,
    check_flatness_identity,
    check_leibniz,
    check_sigma_symmetry,
)
from freegraph.cli import main
from freegraph.graph import build_directed_double, classify_vertices, structure_report
from freegraph.ncpoly import NCPoly, parse_expression, random_path, random_poly, word_end
from freegraph.series import crosscheck, loop_words, solve_system
from freegraph.trace import MomentSeq, TraceEngine
from freegraph.wishart import EnsembleSpec, compare

ORACLE_GRAPHS = ["self_loop", "edge_1_1", "edge_1_4", "parallel_1_2", "triangle", "star"]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'} {detail}")

    return emit


def dd(name):
    return build_directed_double(corpus.load(name))


def test_c01_oracle_equivalence(report):
    tol, budget, depth = 1e-9, 60.0, 8
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for name in ORACLE_GRAPHS:
        d = dd(name)
        eng = TraceEngine(d)
        F = fock.build(d, depth)
        for v in range(d.n_vertices):
            for w in loop_words(d, v, depth):
                key = (v,) + w
                worst = max(worst, abs(eng.trace_word(key) - F.trace(key)))
                count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= tol and elapsed <= budget
    report(1, ok, f"oracle: {count} loop words, |w|<=8, max err={worst:.2e} (tol {tol:g}), {elapsed:.1f}s (<= {budget:g}s)")
    assert ok


def test_c02_catalan_and_relation(report):
    d = dd("self_loop")
    q = parse_expression("X[e]", d)
    exact = TraceEngine(d, exact=True).moments(q, "a", 8).moments
    evens = tuple(exact[k] for k in (2, 4, 6, 8))
    ms = TraceEngine(d).moments(q, "a", 20)
    rel = law.find_algebraic_relation(ms)
    target = np.array([[1.0, 0.0], [0.0, -1.0], [1.0, 0.0]])
    shape_ok = rel is not None and rel.coeffs.shape == target.shape and np.allclose(rel.coeffs, target, atol=1e-8)
    resid = rel.residual if rel is not None else math.inf
    ok = evens == (1, 2, 5, 14) and all(isinstance(x, Fraction) for x in evens) and shape_ok and resid <= 1e-8
    report(2, ok, f"Catalan exact {tuple(int(x) for x in evens)}; relation '{rel}' residual={resid:.1e} (tol 1e-8)")
    assert ok


def test_c03_free_poisson(report):
    tol = 1e-6
    worst = 0.0
    for name in ("edge_1_1", "edge_1_2", "edge_1_4"):
        d = dd(name)
        eng = TraceEngine(d)
        for orient in ("e+", "e-"):
            eps = d.edge(orient)
            op = int(d.opp[eps])
            q = NCPoly.gen(d, op) * NCPoly.gen(d, eps)
            ms = eng.moments(q, int(d.tgt[eps]), 8).as_float()
            ref = law.free_poisson_reference(d, eps).moments(8)
            worst = max(worst, float(np.max(np.abs(ms - ref) / np.maximum(1.0, np.abs(ref)))))
    d = dd("edge_1_4")
    m2 = TraceEngine(d).moments(parse_expression("X[e+] X[e-]", d), "a", 2).moments[2]
    ok = worst <= tol and abs(m2 - 5) <= 1e-9
    report(3, ok, f"free Poisson k<=8: max rel err={worst:.1e} (tol {tol:g}); light-corner m2={m2:.12g} (5 +- 1e-9)")
    assert ok


def test_c04_series(report):
    tol = 1e-9
    worst = 0.0
    for name in corpus.names():
        d = dd(name)
        eng = TraceEngine(d)
        for s in solve_system(d, 6).values():
            worst = max(worst, crosscheck(s, engine=eng)[0])
    ok = worst <= tol
    report(4, ok, f"series Deg=6 vs trace on {len(corpus.names())} graphs: max err={worst:.1e} (tol {tol:g})")
    assert ok


def test_c05_free_calculus(report):
    tol, n = 1e-9, 100
    worst = {"leibniz": 0.0, "conjugate": 0.0, "sigma": 0.0, "adjoint": 0.0}
    flat = 0.0
    for gi, name in enumerate(corpus.names()):
        d = dd(name)
        eng = TraceEngine(d)
        rng = np.random.default_rng(1000 + gi)
        for _ in range(n):
            p, q, r = (random_poly(d, rng, 5, 3) for _ in range(3))
            eps = int(rng.integers(len(d)))
            worst["leibniz"] = max(worst["leibniz"], check_leibniz(eps, p, q))
            worst["conjugate"] = max(worst["conjugate"], check_conjugate_variable(eps, p, eng))
            worst["sigma"] = max(worst["sigma"], check_sigma_symmetry(eps, p))
            worst["adjoint"] = max(worst["adjoint"], check_adjoint_formula(eps, q, r, p, eng))
            key = random_path(d, rng, int(rng.integers(0, 7)))
            flat = max(flat, check_flatness_identity(NCPoly(d, {key: Fraction(1)}), key[0], word_end(d, key)))
    ok = max(worst.values()) <= tol and flat == 0
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    report(5, ok, f"calculus {n}/graph: {detail} (tol {tol:g}); flatness={flat:g} (exact 0)")
    assert ok


def test_c06_commutators(report):
    tol, depth = 1e-12, 6
    worst = 0.0
    for name in corpus.names():
        d = dd(name)
        F = fock.build(d, depth)
        for a in range(len(d)):
            for b in range(len(d)):
                worst = max(worst, F.check_commutator(a, b))
    ok = worst <= tol
    report(6, ok, f"commutators at depth {depth}, all pairs: max interior residual={worst:.1e} (tol {tol:g})")
    assert ok


def test_c07_classification(report):
    par, star, tri = (corpus.load(n) for n in ("parallel_1_2", "star", "triangle"))
    c = classify_vertices(par)
    ok = c.V_eq == {"b"} and c.V_gt == set()
    c = classify_vertices(star)
    ok &= c.V_gt == {"g"} and c.V_eq == set()
    rs = structure_report(star)
    ok &= (not rs.simple) and rs.ideal_unital and rs.summand_traces == {"g": 7}
    ok &= classify_vertices(tri).V_geq == set()
    rt = structure_report(tri)
    ok &= rt.simple and rt.unique_trace
    for g in (par, star, tri):
        a, b = structure_report(g), structure_report(g.scaled(3))
        ca, cb = a.classification, b.classification
        ok &= (ca.V_gt, ca.V_eq, ca.V_geq) == (cb.V_gt, cb.V_eq, cb.V_geq)
        ok &= (a.simple, a.unique_trace, a.ideal_unital, a.quotient_dimension, a.k0_basis) == (
            b.simple, b.unique_trace, b.ideal_unital, b.quotient_dimension, b.k0_basis
        )
    report(7, ok, f"classification golden sets, summand trace {rs.summand_traces.get('g')}, scaling x3 invariant")
    assert ok


def test_c08_stieltjes(report):
    d = dd("self_loop")
    ms = TraceEngine(d).moments(parse_expression("X[e]", d), "a", 40)
    est = law.estimate_law(ms, eta=1e-3)
    x = np.linspace(-1.8, 1.8, 3601)
    err = float(np.max(np.abs(est.continuous_at(x) - law.semicircle_density(x))))
    h = dd("edge_1_2")
    heavy = TraceEngine(h).moments(parse_expression("X[e-] X[e+]", h), "b", 16)
    atom = law.estimate_law(heavy, eta=1e-3).max_atom_mass()
    ok = err <= 0.01 and abs(atom - 1) <= 0.05
    report(8, ok, f"semicircle max err={err:.1e} on [-1.8,1.8] (tol 0.01); heavy-corner atom={atom:.4f} (1 +- 0.05)")
    assert ok


def test_c09_wishart(report):
    t0 = time.perf_counter()
    r200 = compare(EnsembleSpec((1, 2), 200, samples=100, seed=0), "X12 X12*", K=4)
    r400 = compare(EnsembleSpec((1, 2), 400, samples=100, seed=0), "X12 X12*", K=1)
    elapsed = time.perf_counter() - t0
    rel = abs(r400.empirical[1] - math.sqrt(2)) / math.sqrt(2)
    ok = r200.within(3.0) and rel <= 0.01 and elapsed <= 300
    zs = ", ".join(f"{z:+.2f}" for z in r200.z[1:])
    report(9, ok, f"Wishart n=200 z(m1..m4)=[{zs}] (|z|<=3); n=400 m1 rel err={rel:.1e} (<= 1%); {elapsed:.0f}s (<= 300s)")
    assert ok


def _run_twice(tmp_path, tag, argv):
    outs = []
    for i in range(2):
        dest = tmp_path / f"{tag}.out"
        side = None
        if "--density" in argv or "--hist" in argv:
            side = tmp_path / f"{tag}.side"
            argv = [str(side) if a == "SIDE" else a for a in argv]
        code = main(argv + ["--out", str(dest), "--quiet"])
        blob = dest.read_bytes() + (side.read_bytes() if side is not None else b"")
        outs.append((code, blob))
    return outs[0] == outs[1], outs[0][0]


def test_c10_determinism(report, tmp_path):
    g = corpus.path
    runs = {
        "classify": ["classify", g("star")],
        "trace": ["trace", g("triangle"), "--expr", "(X[e1] + X[e2])^6"],
        "moments": ["moments", g("edge_1_2"), "--expr", "X[e+] X[e-]", "--vertex", "a", "-K", "12"],
        "law": ["law", g("edge_1_2"), "--expr", "X[e-] X[e+]", "--vertex", "b", "-K", "20", "--relation",
                "--density", "SIDE"],
        "series": ["series", g("loop_and_parallel"), "--degree", "6", "--check"],
        "fock-check": ["fock-check", g("parallel_1_2"), "--depth", "5", "--calculus", "--instances", "20"],
        "wishart": ["wishart", "--ratios", "1,2", "--n", "40", "--samples", "8", "--expr", "X12 X12*",
                    "--seed", "3", "--workers", "2", "--hist", "SIDE"],
    }
    bad = []
    for tag, argv in runs.items():
        same, code = _run_twice(tmp_path, tag, argv)
        if not same or code != 0:
            bad.append(f"{tag}(code={code}, identical={same})")
    ok = not bad
    report(10, ok, f"determinism: {len(runs)} subcommands byte-identical" + ("" if ok else f"; failed: {bad}"))
    assert ok
