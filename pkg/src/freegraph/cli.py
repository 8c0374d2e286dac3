"""Command-line entry point: ``freegraph <subcommand> ...``.

Every run writes ``# key=value`` lines echoing its full configuration, then
CSV.  Exit status: 0 success, 1 input error, 2 failed consistency check.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import warnings
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import (
    DepthTooShallow,
    DimensionCapExceeded,
    EdgeCountError,
    GraphError,
    LoopEdgeError,
    NotCornered,
    NotSelfAdjoint,
    ParseError,
    ShapeError,
    UnstableRecursionWarning,
)
from .graph import build_directed_double, load_graph, structure_report
from .ncpoly import NCPoly, parse_expression, parse_word, word_str

log = logging.getLogger("freegraph")

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2

INPUT_ERRORS = (
    GraphError,
    ParseError,
    EdgeCountError,
    NotSelfAdjoint,
    NotCornered,
    ShapeError,
    LoopEdgeError,
    DepthTooShallow,
    DimensionCapExceeded,
    FileNotFoundError,
    IsADirectoryError,
    KeyError,
    ValueError,
)


class InputError(Exception):
    pass


def _num(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return f"({x.real:.12g},{x.imag:.12g})"
    return format(float(x), ".12g")


class Output:
    def __init__(self, args, command):
        self.buf = io.StringIO()
        self.writer = csv.writer(self.buf, lineterminator="\n")
        self.buf.write(f"# freegraph {__version__} {command}\n")
        for key in sorted(vars(args)):
            if key in ("func", "command"):
                continue
            self.buf.write(f"# {key}={getattr(args, key)}\n")

    def comment(self, text):
        self.buf.write(f"# {text}\n")

    def row(self, *cells):
        self.writer.writerow(cells)

    def raw(self, text):
        self.buf.write(text)

    def flush(self, path):
        data = self.buf.getvalue()
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(data)
        else:
            sys.stdout.write(data)


def _load(args):
    g = load_graph(args.graph)
    return g, build_directed_double(g)


def _vertex(dd, name):
    return dd.vertex(name)


# ---------------------------------------------------------------------------
# subcommands


def cmd_classify(args, out):
    g = load_graph(args.graph)
    rep = structure_report(g)
    out.row("key", "value")
    for line in rep.lines():
        k, v = line.split("=", 1)
        out.row(k, v)
    return EXIT_OK


def cmd_trace(args, out):
    from .trace import TraceEngine

    g, dd = _load(args)
    eng = TraceEngine(dd, exact=args.exact)
    if (args.word is None) == (args.expr is None):
        raise InputError("give exactly one of --word or --expr")
    if args.word is not None:
        key = parse_word(args.word, dd)
        val = eng._zero() if key is None else eng.trace_word(key)
        label = args.word
    else:
        p = parse_expression(args.expr, dd)
        val = eng.trace_poly(p)
        label = args.expr
    out.row("input", "trace")
    out.row(label, _num(val))
    return EXIT_OK


def _moment_seq(args, dd):
    from .trace import TraceEngine

    q = parse_expression(args.expr, dd)
    return TraceEngine(dd, exact=args.exact).moments(q, _vertex(dd, args.vertex), args.K)


def cmd_moments(args, out):
    g, dd = _load(args)
    ms = _moment_seq(args, dd)
    out.raw(ms.to_csv())
    ok = ms.is_hankel_psd(tol=1e-9)
    out.comment(f"hankel_min_eig={ms.hankel_min_eig():.6g} psd={str(ok).lower()}")
    return EXIT_OK if ok else EXIT_CHECK


def _read_moments(path):
    from .trace import MomentSeq

    ms = []
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if not rows or rows[0][:2] != ["k", "m_k"]:
        raise InputError(f"{path}: expected a 'k,m_k' header")
    for i, r in enumerate(rows[1:]):
        if int(r[0]) != i:
            raise InputError(f"{path}: moments must be listed k = 0, 1, 2, ...")
        ms.append(Fraction(r[1]) if "/" in r[1] else float(r[1]))
    return MomentSeq("input", ms[0], tuple(ms))


def cmd_law(args, out):
    from . import law

    if args.moments_file:
        ms = _read_moments(args.moments_file)
        g = None
    else:
        if not args.graph or not args.expr or args.vertex is None:
            raise InputError("law needs GRAPH --expr --vertex, or --moments-file")
        g, dd = _load(args)
        ms = _moment_seq(args, dd)
    grid = None
    if args.grid:
        lo, hi, n = args.grid.split(",")
        grid = (float(lo), float(hi), int(n))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnstableRecursionWarning)
        est = law.estimate_law(ms, eta=args.eta, grid=grid)
    for w in caught:
        if not args.quiet:
            log.warning("%s", w.message)
        out.comment(f"warning: {w.message}")
    cs = est.cauchy
    out.comment(f"jacobi_levels={cs.levels} status={cs.status} tail_period={cs.period}")
    out.row("kind", "lo", "hi", "value", "eta")
    for (lo, hi), m in zip(est.intervals, est.interval_masses()):
        out.row("interval", _num(lo), _num(hi), _num(m), _num(est.eta))
    for t, m in est.atoms:
        out.row("atom", _num(t), _num(t), _num(m), _num(est.eta))
    lm = law.log_moment(est)
    out.row("log_moment", "", "", _num(lm.value), _num(est.eta))
    if g is not None and args.vertex is not None:
        rep = law.check_support_arithmetic(est, g, args.vertex)
        for lo, hi, m, near, d, ok in rep.rows:
            out.row("lattice_match" if ok else "lattice_miss", _num(lo), _num(hi), _num(near), _num(est.eta))
    if args.relation:
        rel = law.find_algebraic_relation(ms, dz=args.dz, dG=args.dG)
        if rel is None:
            out.row("relation", "", "", "none", "")
        else:
            out.row("relation", "", "", str(rel), _num(rel.residual))
            for j, i, c in rel.rows():
                out.row("relation_coeff", j, i, _num(c), "")
    if args.density:
        with open(args.density, "w", encoding="utf-8", newline="") as fh:
            fh.write(est.to_csv())
    return EXIT_OK


def cmd_series(args, out):
    from .series import crosscheck, solve_system
    from .trace import TraceEngine

    g, dd = _load(args)
    sol = solve_system(dd, args.degree)
    verts = range(dd.n_vertices) if args.vertex is None else [_vertex(dd, args.vertex)]
    eng = TraceEngine(dd)
    out.row("vertex", "word", "coefficient", "trace", "abs_error")
    worst = 0.0
    for v in verts:
        s = sol[v]
        if args.check:
            err, rows = crosscheck(s, engine=eng)
            worst = max(worst, err)
        else:
            rows = [(w, c, eng.trace_word((v,) + w), None) for w, c in s.sorted_items()]
        for w, c, t, e in rows:
            if not args.all_words and c == 0 and not t:
                continue
            name = " ".join(dd.names[x] for x in w)
            err = abs(float(c) - float(t)) if e is None else e
            out.row(dd.vertex_names[v], name, _num(c), _num(t), _num(err))
    if args.check:
        ok = worst <= args.tol
        out.comment(f"max_abs_error={worst:.6g} tol={args.tol:g} pass={str(ok).lower()}")
        return EXIT_OK if ok else EXIT_CHECK
    return EXIT_OK


def _fock_suite(dd, depth, tol):
    from . import fock
    from .series import loop_words
    from .trace import TraceEngine

    f = fock.build(dd, depth)
    eng = TraceEngine(dd)
    rows = []
    worst = 0.0
    for v in range(dd.n_vertices):
        for w in loop_words(dd, v, depth):
            worst = max(worst, abs(f.trace((v,) + w) - eng.trace_word((v,) + w)))
    rows.append(("oracle_vs_recursion", worst))
    if depth >= 2:
        worst = 0.0
        for e1 in range(len(dd)):
            for e2 in range(len(dd)):
                worst = max(worst, f.check_commutator(e1, e2))
        rows.append(("commutator", worst))
    rows.append(("adjoint_identity", f.check_adjoint_identity()))
    rows.append(("projections", f.check_projections()))
    rows.append(("J_involution", f.check_J_involution()))
    rows.append(("modular_conjugation", f.check_modular_conjugation()))
    return f, rows


def _calculus_suite(dd, instances, seed):
    from . import calculus
    from .ncpoly import random_path, random_poly, word_end
    from .trace import TraceEngine

    eng = TraceEngine(dd)
    rng = np.random.default_rng(seed)
    res = dict(leibniz=0.0, conjugate_variable=0.0, sigma_symmetry=0.0, adjoint_formula=0.0, flatness=0.0)
    for i in range(instances):
        eps = int(rng.integers(len(dd)))
        p = random_poly(dd, rng, 5, 4, complex_coeffs=(i % 4 == 3))
        q = random_poly(dd, rng, 4, 3)
        r = random_poly(dd, rng, 4, 3)
        res["leibniz"] = max(res["leibniz"], calculus.check_leibniz(eps, q, r))
        res["conjugate_variable"] = max(res["conjugate_variable"], calculus.check_conjugate_variable(eps, p, eng))
        res["sigma_symmetry"] = max(res["sigma_symmetry"], calculus.check_sigma_symmetry(eps, p))
        res["adjoint_formula"] = max(res["adjoint_formula"], calculus.check_adjoint_formula(eps, q, r, p, eng))
        key = random_path(dd, rng, int(rng.integers(0, 7)))
        mono = NCPoly(dd, {key: Fraction(int(rng.integers(1, 10)))})
        res["flatness"] = max(res["flatness"], calculus.check_flatness_identity(mono, key[0], word_end(dd, key)))
    return list(res.items())


def cmd_fock_check(args, out):
    g, dd = _load(args)
    _, rows = _fock_suite(dd, args.depth, args.tol)
    if args.calculus:
        rows += _calculus_suite(dd, args.instances, args.seed)
    out.row("check", "residual", "tolerance", "depth", "status")
    ok = True
    for name, res in rows:
        tol = 0.0 if name in ("flatness", "sigma_symmetry", "leibniz") else args.tol
        good = res <= tol
        ok &= good
        out.row(name, _num(res), _num(tol), args.depth, "pass" if good else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_wishart(args, out):
    from .wishart import EnsembleSpec, compare

    ratios = tuple(x.strip() for x in args.ratios.split(",") if x.strip())
    spec = EnsembleSpec(ratios, args.n, args.samples, args.seed, diagonal=args.diagonal)
    rep = compare(spec, args.expr, args.max_moment, workers=args.workers, gap_moments=args.gap_moments)
    out.comment(f"sizes={','.join(str(m) for m in spec.sizes)} expression={rep.expression}")
    out.raw(rep.to_csv())
    if rep.gap_mass is not None:
        out.comment(f"gap_mass={rep.gap_mass:.6g} support={rep.support}")
    if args.hist:
        with open(args.hist, "w", encoding="utf-8", newline="") as fh:
            fh.write(rep.histogram_csv(args.bins))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="freegraph", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"freegraph {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="tolerance for consistency checks")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="suppress log messages on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="vertex classes and C*-algebra structure")
    s.add_argument("graph")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("trace", parents=[common], help="canonical trace of a word or expression")
    s.add_argument("graph")
    s.add_argument("--word", help="oriented edges, e.g. e1+,e1-")
    s.add_argument("--expr", help="polynomial expression")
    s.add_argument("--exact", action="store_true", help="rational arithmetic (needs square weight products)")
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("moments", parents=[common], help="moments Tr(q^k) of a cornered self-adjoint q")
    s.add_argument("graph")
    s.add_argument("--expr", required=True)
    s.add_argument("--vertex", required=True)
    s.add_argument("-K", "--max-moment", dest="K", type=int, default=8)
    s.add_argument("--exact", action="store_true")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("law", parents=[common], help="spectral law estimate by Stieltjes inversion")
    s.add_argument("graph", nargs="?")
    s.add_argument("--expr")
    s.add_argument("--vertex")
    s.add_argument("--moments-file", help="read k,m_k CSV instead of a graph")
    s.add_argument("-K", "--max-moment", dest="K", type=int, default=40)
    s.add_argument("--eta", type=float, default=1e-3)
    s.add_argument("--grid", help="lo,hi,points")
    s.add_argument("--exact", action="store_true")
    s.add_argument("--relation", action="store_true", help="search for an algebraic relation")
    s.add_argument("--dz", type=int, default=4)
    s.add_argument("--dG", type=int, default=3)
    s.add_argument("--density", help="write x,density CSV here")
    s.set_defaults(func=cmd_law)

    s = sub.add_parser("series", parents=[common], help="loop generating series from the algebraic system")
    s.add_argument("graph")
    s.add_argument("--degree", type=int, default=6)
    s.add_argument("--vertex")
    s.add_argument("--check", action="store_true", help="compare with the trace engine")
    s.add_argument("--all-words", action="store_true", help="also list loop words with zero trace")
    s.set_defaults(func=cmd_series)

    s = sub.add_parser("fock-check", parents=[common], help="identity suite in the truncated Fock model")
    s.add_argument("graph")
    s.add_argument("--depth", type=int, default=5)
    s.add_argument("--calculus", action="store_true", help="also run the free difference quotient suite")
    s.add_argument("--instances", type=int, default=100)
    s.set_defaults(func=cmd_fock_check)

    s = sub.add_parser("wishart", parents=[common], help="block-Wishart Monte Carlo comparison")
    s.add_argument("--ratios", required=True, help="gamma_1,...,gamma_k with gamma_1 = 1")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--expr", required=True, help="polynomial in X12, X12*, ...")
    s.add_argument("--max-moment", type=int, default=4)
    s.add_argument("--hist", help="write bin_lo,bin_hi,count CSV here")
    s.add_argument("--bins", type=int, default=50)
    s.add_argument("--diagonal", action="store_true", help="enable diagonal blocks as self-loops")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--gap-moments", type=int, default=None, help="moments for the predicted-support gap report")
    s.set_defaults(func=cmd_wishart)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="freegraph: %(message)s")
    out = Output(args, args.command)
    try:
        code = args.func(args, out)
    except InputError as exc:
        print(f"freegraph: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"freegraph: error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    out.flush(args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
