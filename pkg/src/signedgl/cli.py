"""Command-line front end: ``signedgl generate | learn | experiment | bench | eval``.

Exit codes: 0 success, 2 config/schema or bad flag, 3 infeasible problem,
4 solver did not converge (outputs are still written), 5 I/O or file format,
6 numerical failure, 1 anything else.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .admm import NORMALIZE_MODES, AdmmConfig, solve
from .config import ConfigError, ExperimentConfig, load_config, manifest_hash, parse_config
from .datagen import gen_signals, generate_graph
from .errors import InfeasibleProblemError, NumericalError, ParameterError, SignedGLError
from .evaluation import (
    auprc_ratio, classify_edges, default_workers, evaluate, frob_error, grid_search, macro_f1,
)
from .fast import CandidateEdgeSet, build_candidates, solve_fast
from .graph import LaplacianPairVec, SignedGraph, from_upper
from . import io

EXIT_OK, EXIT_OTHER, EXIT_SCHEMA, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3, 4, 5, 6

# frozen column orders
LABEL_COLUMNS = ("scenario", "graph", "n", "p", "m_ba", "k_rgg", "zeta", "filter", "eta", "m", "noise_pct", "method")
CELL_METRICS = ("alpha1", "alpha2", "macro_f1", "f1_pos", "f1_neg", "auprc_ratio", "frob_error",
                "iterations", "runtime_ms", "candidates")
CELL_COLUMNS = LABEL_COLUMNS + ("repeat", "graph_seed", "signal_seed") + CELL_METRICS + ("converged", "error")
REPORT_COLUMNS = LABEL_COLUMNS + ("repeats", "converged_frac") + tuple(
    f"{m}_{s}" for m in CELL_METRICS for s in ("mean", "ci95")
)
BENCH_COLUMNS = ("method", "backend", "n", "m", "k", "candidates", "iterations", "setup_s", "iter_total_s",
                 "per_iter_s", "total_s")
CI_NOTE = "ci95 = 1.96 * sample_std / sqrt(repeats) (half-width; nan when repeats < 2)"


class CliError(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


def _exit_code(exc) -> int:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, (ConfigError, ParameterError)):
        return EXIT_SCHEMA
    if isinstance(exc, InfeasibleProblemError):
        return EXIT_INFEASIBLE
    if isinstance(exc, (io.FormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, (NumericalError, ArithmeticError)):
        return EXIT_NUMERICAL
    return EXIT_OTHER


def _report_error(exc, code):
    print(json.dumps({"error": type(exc).__name__, "reason": str(exc), "exit_code": code}), file=sys.stderr)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, obj):
    io._atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _write_csv(path, columns, rows, comments=()):
    lines = [f"# {c}\n" for c in comments]
    tmp = Path(f"{path}.tmp")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(tmp, "w", newline="") as fh:
        fh.writelines(lines)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
    os.replace(tmp, path)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


# ---------------------------------------------------------------- generate

def _load(args) -> ExperimentConfig:
    if not getattr(args, "config", None):
        raise CliError(EXIT_SCHEMA, "--config is required")
    cfg = load_config(args.config, overrides=args.set or ())
    return cfg


def generate_files(cfg: ExperimentConfig, out_dir, scenario=0, repeat=0):
    """Write ``graph.tsv``, ``signals.csv`` and ``manifest.json``; return the manifest."""
    if not 0 <= scenario < len(cfg.scenarios):
        raise CliError(EXIT_SCHEMA, f"scenario {scenario} out of range (config has {len(cfg.scenarios)})")
    sc = cfg.scenarios[scenario]
    gseed, sseed = cfg.seed(repeat, 0), cfg.seed(repeat, 1)
    G = generate_graph(sc.graph_spec(gseed))
    X = gen_signals(G, sc.signal_spec(sseed))
    manifest = {
        "command": "generate", "version": __version__, "config": cfg.manifest()["config"],
        "scenario": sc.label(), "repeat": repeat, "seeds": {"root": cfg.root_seed, "graph": gseed, "signals": sseed},
    }
    h = manifest_hash(manifest)
    out = Path(out_dir)
    io.write_graph(out / "graph.tsv", G, comments=[f"manifest={h}"])
    io.write_matrix(out / "signals.csv", X, comments=[f"manifest={h}"])
    _write_json(out / "manifest.json", {**manifest, "manifest_hash": h})
    return {**manifest, "manifest_hash": h}


def cmd_generate(args):
    cfg = _load(args)
    out = args.out or cfg.output_dir
    m = generate_files(cfg, out, args.scenario, args.repeat)
    print(json.dumps({"output_dir": str(out), "manifest_hash": m["manifest_hash"]}))
    return EXIT_OK


# ---------------------------------------------------------------- learn

def _solver_settings(args):
    """Merge config ``solver`` section with explicit flags (flags win)."""
    s = {}
    if getattr(args, "config", None):
        s.update(load_config(args.config, overrides=args.set or ()).solver)
    elif args.set:
        # allow --set solver.x=y without a config file
        text = "graph: {kind: er, n: 3, p: 1}\nsignals: {m: 1}\n"
        s.update(parse_config(text, "--set", overrides=args.set).solver)
    for key in ("method", "alpha1", "alpha2", "rho", "max_iter", "eps", "residual_tol", "k", "threshold"):
        v = getattr(args, key, None)
        if v is not None:
            s[key] = v
    if getattr(args, "normalize", None) is not None:
        s["normalize"] = args.normalize
    return s


def admm_config_from(s) -> AdmmConfig:
    return AdmmConfig(
        alpha1=float(s.get("alpha1", 0.01)), alpha2=float(s.get("alpha2", 0.01)), rho=float(s.get("rho", 1.0)),
        max_iter=int(s.get("max_iter", 10000)), eps=float(s.get("eps", 1e-6)),
        residual_tol=float(s.get("residual_tol", 1e-6)), normalize=s.get("normalize", "power"),
    )


def learn_files(X, settings, out_dir, candidates_path=None, signals_hash=None):
    """Solve and write ``lpos.csv``, ``lneg.csv``, ``adjacency.tsv``, ``diagnostics.json``.

    Returns the diagnostics dict. Outputs are written even when not converged.
    """
    cfg = admm_config_from(settings)
    method = settings.get("method", "exact")
    n = X.shape[0]
    manifest = {"command": "learn", "version": __version__, "signals_sha256": signals_hash,
                "solver": {**cfg.__dict__, "method": method}}
    cand = None
    if method == "fast":
        if candidates_path:
            cn, r, c = io.read_pairs(candidates_path)
            if cn != n:
                raise CliError(EXIT_SCHEMA, f"candidate file is for n={cn}, signals have n={n}")
            cand = CandidateEdgeSet.from_pairs(n, r, c)
            manifest["candidates_sha256"] = file_sha256(candidates_path)
        else:
            k = min(int(settings.get("k", 20)), n - 1)
            if "choose_k" in settings:
                from .fast import choose_k
                ck = settings["choose_k"]
                k = choose_k(ck["delta_pos"], ck["delta_neg"], n, ck["beta"])
            manifest["solver"]["k"] = k
            cand = build_candidates(X, k)
    elif method != "exact":
        raise CliError(EXIT_SCHEMA, f"method must be 'exact' or 'fast', got {method!r}")
    h = manifest_hash(manifest)
    trace = []
    res = (solve(X, cfg, callback=lambda *a: trace.append(a)) if cand is None
           else solve_fast(X, cand, cfg, callback=lambda *a: trace.append(a)))
    out = Path(out_dir)
    tag = [f"manifest={h}"]
    io.write_vector(out / "lpos.csv", res.pair.lpos, comments=tag)
    io.write_vector(out / "lneg.csv", res.pair.lneg, comments=tag)
    A = from_upper(-res.pair.lpos + res.pair.lneg, n)
    io.write_graph(out / "adjacency.tsv", SignedGraph.from_adjacency(A), comments=tag)
    if cand is not None:
        io.write_pairs(out / "candidates.tsv", n, cand.rows, cand.cols, comments=tag)
    diag = {
        "manifest": manifest, "manifest_hash": h, "converged": bool(res.converged), "reason": res.reason,
        "iterations": res.iterations, "final_objective": res.final_objective,
        "final_residuals": list(res.residuals), "runtime_s": res.runtime_s,
        "trace": [{"iteration": it, "objective": o, "residual_pos": rp, "residual_neg": rn}
                  for it, o, rp, rn in trace],
        "feasibility": res.pair.feasibility(), **{k: v for k, v in res.info.items()},
    }
    _write_json(out / "diagnostics.json", diag)
    return diag


def cmd_learn(args):
    X = io.read_matrix(args.signals)
    settings = _solver_settings(args)
    diag = learn_files(X, settings, args.out, args.candidates, file_sha256(args.signals))
    summary = {k: diag[k] for k in ("converged", "reason", "iterations", "final_objective", "manifest_hash")}
    print(json.dumps(summary))
    if not diag["converged"]:
        _report_error(CliError(EXIT_NOT_CONVERGED, diag["reason"]), EXIT_NOT_CONVERGED)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# ---------------------------------------------------------------- eval

def pair_from_graph(G: SignedGraph) -> LaplacianPairVec:
    """``(l+, l-)`` edge vectors of a signed adjacency, each sign rescaled to sum ``-n``.

    Solver outputs already satisfy the trace constraint, so the rescaling only
    matters for raw graphs (e.g. scoring a planted graph against itself).
    """
    a = G.signed_edge_vector()
    out = []
    for l in (-np.maximum(a, 0.0), np.minimum(a, 0.0)):
        s = l.sum()
        out.append(l * (-G.n / s) if s < 0 else l)
    return LaplacianPairVec(out[0], out[1], G.n)


def eval_metrics(learned: SignedGraph, truth: SignedGraph, threshold=None) -> dict:
    pair = pair_from_graph(learned)
    pred = classify_edges(pair, threshold)
    mf, fp, fn = macro_f1(pred, truth)
    try:
        ar, ap_pos, ap_neg = auprc_ratio(pred, truth)
    except SignedGLError:
        ar = ap_pos = ap_neg = math.nan
    return {"macro_f1": mf, "f1_pos": fp, "f1_neg": fn, "auprc_ratio": ar, "auprc_pos": ap_pos,
            "auprc_neg": ap_neg, "frob_error": frob_error(pair, truth)}


def cmd_eval(args):
    learned, truth = io.read_graph(args.learned), io.read_graph(args.truth)
    out = eval_metrics(learned, truth, args.threshold)
    out = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in out.items()}
    text = json.dumps(out, sort_keys=True)
    if args.out:
        io._atomic_write(args.out, text + "\n")
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------- experiment

def run_cell(cfg: ExperimentConfig, scenario: int, repeat: int) -> dict:
    """One (scenario, repeat) unit: generate data, solve (or grid-search), evaluate."""
    sc = cfg.scenarios[scenario]
    gseed, sseed = cfg.seed(repeat, 0), cfg.seed(repeat, 1)
    row = {**sc.label(), "method": cfg.method, "repeat": repeat, "graph_seed": gseed, "signal_seed": sseed}
    try:
        G = generate_graph(sc.graph_spec(gseed))
        X = gen_signals(G, sc.signal_spec(sseed))
        cand = None
        if cfg.method == "fast":
            cand = build_candidates(X, cfg.neighbor_count(X.shape[0]))
            row["candidates"] = cand.size
        tol = cfg.solver.get("threshold")
        if cfg.grid is not None:
            gr = grid_search(X, cfg.grid, G, cfg.method, cfg.admm_config(), cand, workers=1, tol=tol)
            if gr.best is None:
                raise NumericalError("every grid cell failed")
            best = gr.best
            row.update({k: best[k] for k in CELL_METRICS if k in best})
            row["converged"] = best["converged"]
        else:
            a = cfg.admm_config()
            res = solve(X, a) if cand is None else solve_fast(X, cand, a)
            rep = evaluate(res, G, tol)
            row.update(alpha1=a.alpha1, alpha2=a.alpha2, macro_f1=rep.macro_f1, f1_pos=rep.f1_pos,
                       f1_neg=rep.f1_neg, auprc_ratio=rep.auprc_ratio, frob_error=rep.frob_error,
                       iterations=rep.iterations, runtime_ms=rep.runtime_ms, converged=rep.converged)
    except SignedGLError as exc:
        row.update(converged=False, error=f"{type(exc).__name__}: {exc}")
    return row


def _cell_task(payload):
    raw_text, source, overrides, scenario, repeat, path, h = payload
    cfg = parse_config(raw_text, source, overrides)
    row = run_cell(cfg, scenario, repeat)
    _write_json(path, {"manifest_hash": h, "row": row})
    return row


def aggregate(rows, repeats):
    """Per-scenario mean and CI half-width of every metric (single-threaded)."""
    by = {}
    for r in rows:
        by.setdefault(r["scenario"], []).append(r)
    out = []
    for sc in sorted(by):
        group = sorted(by[sc], key=lambda r: r["repeat"])
        agg = {c: group[0].get(c) for c in LABEL_COLUMNS}
        agg["repeats"] = len(group)
        agg["converged_frac"] = float(np.mean([bool(r.get("converged")) for r in group]))
        for m in CELL_METRICS:
            vals = np.array([float(r[m]) for r in group if r.get(m) is not None], dtype=float)
            vals = vals[np.isfinite(vals)]
            if vals.size == 0:
                agg[f"{m}_mean"] = agg[f"{m}_ci95"] = math.nan
                continue
            agg[f"{m}_mean"] = float(vals.mean())
            agg[f"{m}_ci95"] = float(1.96 * vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
        out.append(agg)
    return out


def run_experiment(cfg: ExperimentConfig, out_dir, raw_text, source, overrides=(), workers=None):
    out = Path(out_dir)
    cells_dir = out / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    h = cfg.manifest_hash()
    manifest = {"command": "experiment", "version": __version__, **cfg.manifest(), "manifest_hash": h,
                "seed_rule": "SeedSequence(root_seed, spawn_key=(repeat, stream)); stream 0 graph, 1 signals"}
    _write_json(out / "manifest.json", manifest)
    rows, todo = [], []
    for sc in cfg.scenarios:
        for r in range(cfg.repeats):
            path = cells_dir / f"s{sc.index:03d}_r{r:03d}.json"
            if path.exists():
                try:
                    ck = json.loads(path.read_text())
                    if ck.get("manifest_hash") == h:
                        rows.append(ck["row"])
                        continue
                except (ValueError, KeyError):
                    pass
            todo.append((raw_text, source, tuple(overrides), sc.index, r, path, h))
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows.extend(pool.map(_cell_task, todo))
    else:
        rows.extend(_cell_task(t) for t in todo)
    rows.sort(key=lambda r: (r["scenario"], r["repeat"]))
    tags = [f"manifest={h}"]
    _write_csv(out / "cells.csv", CELL_COLUMNS, rows, tags)
    report = aggregate(rows, cfg.repeats)
    _write_csv(out / "report.csv", REPORT_COLUMNS, report, tags + [CI_NOTE])
    return report, len(todo)


def cmd_experiment(args):
    text = Path(args.config).read_text()
    cfg = load_config(args.config, overrides=args.set or ())
    out = args.out or cfg.output_dir
    report, ran = run_experiment(cfg, out, text, args.config, args.set or (), args.workers)
    print(json.dumps({"output_dir": str(out), "rows": len(report), "cells_run": ran,
                      "manifest_hash": cfg.manifest_hash()}))
    return EXIT_OK


# ---------------------------------------------------------------- bench

def time_solver(X, method: str, iterations: int, k: int = 20, alpha1=0.01, alpha2=0.01, rho=1.0):
    """Fixed-iteration timing; per-iteration time excludes data-dependent setup.

    Tolerances are set so small that the loop always runs ``iterations`` steps.
    """
    cfg = AdmmConfig(alpha1, alpha2, rho, max_iter=iterations, eps=1e-300, residual_tol=1e-300)
    stamps = []
    cb = lambda *a: stamps.append(time.perf_counter())
    t0 = time.perf_counter()
    if method == "exact":
        solve(X, cfg, callback=cb)
        ncand = None
    elif method == "fast":
        cand = build_candidates(X, min(k, X.shape[0] - 1))
        solve_fast(X, cand, cfg, callback=cb)
        ncand = cand.size
    else:
        raise ParameterError(f"unknown method {method!r}")
    total = time.perf_counter() - t0
    its = len(stamps)
    loop = stamps[-1] - stamps[0]
    return {
        "method": method, "backend": kernels.BACKEND, "n": X.shape[0], "m": X.shape[1], "k": k if method == "fast" else None,
        "candidates": ncand, "iterations": its, "setup_s": stamps[0] - t0, "iter_total_s": loop,
        "per_iter_s": loop / max(its - 1, 1), "total_s": total,
    }


_BENCH_DEFAULT = """\
root_seed: 0
graph: {kind: ba, n: [200, 400], m_ba: 5, zeta: 0.1}
signals: {filter: {kind: heat, eta: 2}, m_per_node: 20, noise_pct: 10}
solver: {method: exact, k: 20}
bench: {iterations: 100, methods: [exact, fast]}
"""


def cmd_bench(args):
    overrides = list(args.set or ())
    if args.n:
        overrides.append(f"graph.n=[{', '.join(str(n) for n in args.n)}]")
    if args.iterations:
        overrides.append(f"bench.iterations={args.iterations}")
    if args.methods:
        overrides.append(f"bench.methods=[{', '.join(args.methods)}]")
    if args.k:
        overrides.append(f"solver.k={args.k}")
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = parse_config(_BENCH_DEFAULT, "<bench defaults>", overrides)
    iters = int(cfg.bench.get("iterations", 100))
    methods = cfg.bench.get("methods", [cfg.method])
    rows = []
    for sc in cfg.scenarios:
        G = generate_graph(sc.graph_spec(cfg.seed(0, 0)))
        X = gen_signals(G, sc.signal_spec(cfg.seed(0, 1)))
        for method in methods:
            s = cfg.solver
            row = time_solver(X, method, iters, cfg.neighbor_count(X.shape[0]),
                              s.get("alpha1", 0.01), s.get("alpha2", 0.01), s.get("rho", 1.0))
            rows.append(row)
            print(json.dumps({k: row[k] for k in ("method", "n", "per_iter_s", "total_s")}), file=sys.stderr)
    out = Path(args.out or Path(cfg.output_dir) / "bench.csv")
    _write_csv(out, BENCH_COLUMNS, rows, [f"manifest={cfg.manifest_hash()}", "per_iter_s excludes setup"])
    print(json.dumps({"output": str(out), "rows": len(rows)}))
    return EXIT_OK


# ---------------------------------------------------------------- entry

def build_parser():
    p = argparse.ArgumentParser(prog="signedgl", description="Signed graph learning from smooth signals.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, need_config=False):
        q.add_argument("--config", required=need_config, help="YAML config file")
        q.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key, e.g. solver.alpha1=0.1 (repeatable)")
        q.add_argument("--out", help="output directory (or file for bench/eval)")

    g = sub.add_parser("generate", help="write a planted graph, its signals and a manifest")
    common(g, need_config=True)
    g.add_argument("--scenario", type=int, default=0)
    g.add_argument("--repeat", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    ln = sub.add_parser("learn", help="learn a signed graph from a signal matrix")
    ln.add_argument("signals", help="comma-separated n x m signal matrix")
    common(ln)
    ln.add_argument("--method", choices=("exact", "fast"))
    ln.add_argument("--alpha1", type=float)
    ln.add_argument("--alpha2", type=float)
    ln.add_argument("--rho", type=float)
    ln.add_argument("--max-iter", dest="max_iter", type=int)
    ln.add_argument("--eps", type=float)
    ln.add_argument("--residual-tol", dest="residual_tol", type=float)
    ln.add_argument("--normalize", choices=NORMALIZE_MODES, help="scaling of the smoothness term (default power)")
    ln.add_argument("--k", type=int, help="neighbours per node for the fast solver")
    ln.add_argument("--candidates", help="TSV pair list to use as the fast solver's candidate set")
    ln.set_defaults(func=cmd_learn)

    e = sub.add_parser("experiment", help="run repeats x grid and write an aggregated CSV report")
    common(e, need_config=True)
    e.add_argument("--workers", type=int, help="worker processes (default: $SIGNEDGL_THREADS or 1)")
    e.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bench", help="fixed-iteration solver timing")
    common(b)
    b.add_argument("--n", type=int, nargs="+")
    b.add_argument("--iterations", type=int)
    b.add_argument("--methods", nargs="+", choices=("exact", "fast"))
    b.add_argument("--k", type=int)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("eval", help="score a learned adjacency against a truth graph")
    v.add_argument("--learned", required=True)
    v.add_argument("--truth", required=True)
    v.add_argument("--threshold", type=float)
    v.add_argument("--out")
    v.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "out", None) is None and args.command == "learn":
        args.out = "."
    try:
        return args.func(args)
    except (SignedGLError, CliError, OSError, ArithmeticError) as exc:
        code = _exit_code(exc)
        _report_error(exc, code)
        return code


if __name__ == "__main__":
    sys.exit(main())
