import warnings

import numpy as np
import pytest

from freegraph import law
from freegraph.errors import LoopEdgeError, UnstableRecursionWarning
from freegraph.ncpoly import parse_expression
from freegraph.trace import MomentSeq, TraceEngine


def semicircle(K):
    from math import comb

    return MomentSeq("a", 1, tuple(comb(k, k // 2) // (k // 2 + 1) if k % 2 == 0 else 0 for k in range(K + 1)))


def test_jacobi_semicircle():
    a, b, status = law.jacobi_coefficients(semicircle(20).moments)
    assert np.allclose(a, 0, atol=1e-12)
    assert np.allclose(b[1:], 1, atol=1e-12)


def test_jacobi_finite_support():
    # two atoms
    ms = [0.5 * (1 + (-1) ** k) for k in range(12)]
    _, _, status = law.jacobi_coefficients(ms)
    assert status == "finite"


def test_unstable_warns():
    bad = MomentSeq("a", 1.0, (1, 0, 1, 0, 0.5, 0, 3, 0, 1))
    with pytest.warns(UnstableRecursionWarning, match="truncated at level"):
        cs = law.CauchySeries(bad)
    assert cs.status == "unstable"


def test_semicircle_density():
    est = law.estimate_law(semicircle(40), eta=1e-3)
    x = np.linspace(-1.8, 1.8, 721)
    err = np.max(np.abs(est.continuous_at(x) - law.semicircle_density(x)))
    assert err <= 0.01
    assert not est.atoms
    (lo, hi), = est.intervals
    assert lo == pytest.approx(-2, abs=0.05) and hi == pytest.approx(2, abs=0.05)


def test_grid_forms():
    ms = semicircle(20)
    a = law.estimate_law(ms, grid=(-2, 2, 101))
    b = law.estimate_law(ms, grid=np.linspace(-2, 2, 101))
    assert np.array_equal(a.density, b.density)
    with pytest.raises(ValueError):
        law.estimate_law(ms, eta=0)


@pytest.mark.parametrize("name", ["edge_1_1", "edge_1_2", "edge_1_4"])
@pytest.mark.parametrize("orient", ["e+", "e-"])
def test_free_poisson_reference_moments(dd_of, name, orient):
    dd = dd_of(name)
    eps = dd.edge(orient)
    op = int(dd.opp[eps])
    ref = law.free_poisson_reference(dd, eps)
    q = parse_expression(f"X[{dd.names[op]}] X[{orient}]", dd)
    ms = TraceEngine(dd).moments(q, int(dd.tgt[eps]), 8).as_float()
    assert np.allclose(ref.moments(8), ms, rtol=1e-9, atol=1e-9)


def test_free_poisson_rejects_loops(dd_of):
    with pytest.raises(LoopEdgeError):
        law.free_poisson_reference(dd_of("self_loop"), 0)


def test_heavy_corner_atom(dd_of):
    dd = dd_of("edge_1_2")
    ms = TraceEngine(dd).moments(parse_expression("X[e-] X[e+]", dd), "b", 16)
    est = law.estimate_law(ms)
    assert est.max_atom_mass() == pytest.approx(1.0, abs=0.05)
    light = law.estimate_law(TraceEngine(dd).moments(parse_expression("X[e+] X[e-]", dd), "a", 16))
    assert not light.atoms


def test_relations():
    rel = law.find_algebraic_relation(semicircle(20))
    assert (rel.dG, rel.dz) == (2, 1)
    z = 3.0 + 0.5j
    G = (z - np.sqrt(z * z - 4)) / 2
    assert abs(rel(z, G)) <= 1e-10
    assert rel.residual <= 1e-8
    assert law.find_algebraic_relation(MomentSeq("a", 1.0, (1.0, 0.3)), dz=1, dG=1) is None


def test_two_bulk_relation(dd_of):
    # full trace of X_e on mu = (1, 4): two bulks and an atom of mass 3 at 0
    dd = dd_of("edge_1_4")
    eng = TraceEngine(dd, exact=True)
    q = parse_expression("X[e]", dd)
    full, power = [], parse_expression("1", dd)
    for _ in range(21):
        full.append(eng.trace_poly(power))
        power = power * q
    ms = MomentSeq("all", 5, tuple(full))
    rel = law.find_algebraic_relation(ms)
    c = rel.coeffs / rel.coeffs[2, 2]
    expected = np.zeros((3, 4))
    expected[2, 2], expected[1, 3], expected[0, 2], expected[0, 0] = 1, -4, 20, -9
    assert np.allclose(c, expected, atol=1e-8)


def test_support_and_log_moment(dd_of):
    dd = dd_of("edge_1_1")
    ms = TraceEngine(dd).moments(parse_expression("X[e-] X[e+]", dd), "b", 30)
    est = law.estimate_law(ms, eta=1e-3)
    rep = law.check_support_arithmetic(est)
    assert rep.all_ok
    lm = law.log_moment(est)
    assert lm.finite and lm.value == pytest.approx(-1.0, abs=0.1)
    heavy = dd_of("edge_1_2")
    est = law.estimate_law(TraceEngine(heavy).moments(parse_expression("X[e-] X[e+]", heavy), "b", 16))
    assert law.log_moment(est).value == float("-inf")


def test_relation_printing():
    rel = law.AlgebraicRelation(np.array([[1.0, 0.0], [0.0, -1.0], [1.0, 0.0]]), 0.0)
    assert str(rel) == "G^2 - z*G + 1 = 0"


def test_deterministic_density():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        a = law.estimate_law(semicircle(30)).to_csv()
        b = law.estimate_law(semicircle(30)).to_csv()
    assert a == b
