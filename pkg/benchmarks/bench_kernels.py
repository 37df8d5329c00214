"""Compiled vs pure-numpy kernels: per-call timings and a full ADMM solve.

    python3 benchmarks/bench_kernels.py [--n 100 300 600] [--repeat 20]

Prints one CSV row per (kernel, n) with both timings and the speedup of the
compiled backend. ``solve_amortized`` is a full solve, setup included, divided
by its iteration count. Exits quietly if the extension was not built.
"""
import argparse
import csv
import sys
import timeit

import numpy as np

from signedgl import _fallback, kernels
from signedgl.admm import AdmmConfig, solve
from signedgl.datagen import GraphModelSpec, SignalGenSpec, gen_signals, generate_graph
from signedgl.graph import num_pairs, pair_indices
from signedgl.gsp import FilterSpec


def kernel_calls(mod, n, rng):
    rows, cols = (np.ascontiguousarray(a) for a in pair_indices(n))
    d = num_pairs(n)
    v, l, y, z = (rng.standard_normal(d) for _ in range(4))
    w = rng.standard_normal(n)
    return {
        "q_apply": lambda: mod.q_apply(v, rows, cols, n),
        "qt_apply": lambda: mod.qt_apply(w, rows, cols),
        "woodbury_combine": lambda: mod.woodbury_combine(v, w, rows, cols, 1.4, 0.2),
        "z_project": lambda: mod.z_project(l, v, y, z, 1.0),
        "dual_step": lambda: mod.dual_step(y.copy(), z, l, 1.0),
        "p_norm_sq": lambda: mod.p_norm_sq(l, rows, cols, n),
    }


def time_solve(mod, X, iters):
    saved = {f: getattr(kernels, f) for f in kernels.KERNEL_NAMES}
    try:
        for f in kernels.KERNEL_NAMES:
            setattr(kernels, f, getattr(mod, f))
        cfg = AdmmConfig(max_iter=iters, eps=1e-300, residual_tol=1e-300)
        return min(timeit.repeat(lambda: solve(X, cfg), number=1, repeat=3)) / iters
    finally:
        for f, fn in saved.items():
            setattr(kernels, f, fn)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[100, 300, 600])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--iterations", type=int, default=50)
    args = p.parse_args(argv)
    try:
        core = kernels.get_backend("compiled")
    except ImportError:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 0
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["kernel", "n", "python_s", "compiled_s", "speedup"])
    rng = np.random.default_rng(0)
    for n in args.n:
        py, cc = kernel_calls(_fallback, n, rng), kernel_calls(core, n, rng)
        for name in kernels.KERNEL_NAMES:
            tp = min(timeit.repeat(py[name], number=args.repeat, repeat=3)) / args.repeat
            tc = min(timeit.repeat(cc[name], number=args.repeat, repeat=3)) / args.repeat
            out.writerow([name, n, f"{tp:.3e}", f"{tc:.3e}", f"{tp / tc:.2f}"])
        G = generate_graph(GraphModelSpec("ba", n, m_ba=5, zeta=0.1, seed=0))
        X = gen_signals(G, SignalGenSpec(FilterSpec("heat", 2.0), 10 * n, 10, seed=1))
        tp, tc = time_solve(_fallback, X, args.iterations), time_solve(core, X, args.iterations)
        out.writerow(["solve_amortized", n, f"{tp:.3e}", f"{tc:.3e}", f"{tp / tc:.2f}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
