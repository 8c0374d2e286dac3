"""Compare the compiled loop-trace kernel with the pure-Python fallback.

    python benchmarks/bench_trace_kernel.py [--length 12] [--words 2000] [--repeat 3]

Both kernels run on the same seeded random loop words with caching disabled;
the script checks the two agree and prints timings as CSV.
"""

import argparse
import sys
import time

import numpy as np

from freegraph import corpus, kernels
from freegraph.graph import build_directed_double
from freegraph.series import loop_words


def sample_words(dd, length, count, rng):
    pool = [w for v in range(dd.n_vertices) for w in loop_words(dd, v, length, min_len=length)]
    if not pool:
        return []
    idx = rng.integers(len(pool), size=count)
    return [pool[i] for i in idx]


def run(kernel, words, args, as_array):
    t0 = time.perf_counter()
    out = []
    for w in words:
        out.append(kernel(np.asarray(w, dtype=np.int64) if as_array else w, *args))
    return time.perf_counter() - t0, np.array(out)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--graphs", default="star,triangle,loop_and_parallel")
    p.add_argument("--length", type=int, default=12)
    p.add_argument("--words", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args(argv)
    if not kernels.HAVE_COMPILED:
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`", file=sys.stderr)
    print("graph,length,words,python_s,cython_s,speedup,max_abs_diff")
    for name in a.graphs.split(","):
        dd = build_directed_double(corpus.load(name))
        rng = np.random.default_rng(a.seed)
        words = sample_words(dd, a.length, a.words, rng)
        if not words:
            continue
        arr = tuple(np.ascontiguousarray(x) for x in (dd.src, dd.tgt, dd.opp)) + (
            np.ascontiguousarray(dd.mu, dtype=np.float64),
            np.ascontiguousarray(dd.inv_sqrt_st, dtype=np.float64),
        )
        lists = tuple(x.tolist() for x in arr)
        t_py = min(run(kernels.fallback_loop_trace, words, lists, False)[0] for _ in range(a.repeat))
        _, ref = run(kernels.fallback_loop_trace, words, lists, False)
        if kernels.HAVE_COMPILED:
            t_cy = min(run(kernels.compiled_loop_trace, words, arr, True)[0] for _ in range(a.repeat))
            _, got = run(kernels.compiled_loop_trace, words, arr, True)
            diff = float(np.max(np.abs(got - ref)))
            print(f"{name},{a.length},{len(words)},{t_py:.4f},{t_cy:.4f},{t_py / t_cy:.1f},{diff:.3g}")
        else:
            print(f"{name},{a.length},{len(words)},{t_py:.4f},,,")


if __name__ == "__main__":
    main()
