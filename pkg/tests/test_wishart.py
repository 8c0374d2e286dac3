import numpy as np
import pytest

from freegraph.errors import NotSelfAdjoint, ShapeError
from freegraph.wishart import EnsembleSpec, compare, limit_graph, sample_ensemble, translate_expression


def test_ensemble_validation():
    with pytest.raises(ValueError):
        EnsembleSpec((2, 1), 10)
    with pytest.raises(ValueError):
        EnsembleSpec((1, "1/2"), 10)
    s = EnsembleSpec((1, "3/2"), 20)
    assert s.sizes == (20, 30) and s.pairs() == [(0, 1), (1, 0)]


def test_blocks_reproducible_and_scaled():
    s = EnsembleSpec((1, 2), 150, seed=3)
    a = sample_ensemble(s, 0)
    b = sample_ensemble(s, 0)
    c = sample_ensemble(s, 1)
    assert np.array_equal(a[(0, 1)], b[(0, 1)])
    assert not np.array_equal(a[(0, 1)], c[(0, 1)])
    A = a[(0, 1)]
    assert A.shape == (150, 300)
    assert np.mean(np.abs(A) ** 2) == pytest.approx(1 / np.sqrt(150 * 300), rel=0.02)


def test_memory_cap():
    with pytest.raises(MemoryError):
        sample_ensemble(EnsembleSpec((1, 2), 100), 0, memory_cap=1000)


def test_translation():
    s = EnsembleSpec((1, 2), 10)
    assert translate_expression("X12 X12*", s) == "X[e12+] X[e12-]"
    assert translate_expression("X_1_2*", s) == "X[e12-]"
    with pytest.raises(ShapeError):
        translate_expression("X13", s)
    with pytest.raises(ShapeError):
        translate_expression("X11", s)
    d = EnsembleSpec((1, 2), 10, diagonal=True)
    assert translate_expression("X11", d) == "X[d1+]"
    g = limit_graph(d)
    assert {e[0] for e in g.edges} == {"e12", "e21", "d1", "d2"}


def test_shape_and_adjoint_errors():
    s = EnsembleSpec((1, 2), 10, samples=2)
    with pytest.raises(ShapeError):
        compare(s, "X12")
    with pytest.raises(NotSelfAdjoint):
        compare(s, "X12 X21")


def test_small_run_deterministic_and_threads():
    s = EnsembleSpec((1, 2), 40, samples=6, seed=1)
    a = compare(s, "X12 X12*", K=3)
    b = compare(s, "X12 X12*", K=3, workers=3)
    assert a.to_csv() == b.to_csv()
    assert a.predicted[1] == pytest.approx(np.sqrt(2))
    assert a.predicted[0] == pytest.approx(1.0)


def test_gap_report():
    s = EnsembleSpec((1, 2), 60, samples=4, seed=2)
    r = compare(s, "X12 X12*", K=2, gap_moments=16)
    assert r.support and r.gap_mass is not None and r.gap_mass < 0.05


def test_diagonal_semicircle():
    s = EnsembleSpec((1, 1), 100, samples=10, seed=4, diagonal=True)
    r = compare(s, "X11", K=4)
    assert r.predicted[2] == pytest.approx(1.0) and r.predicted[4] == pytest.approx(2.0)
    assert r.within(4.0)
