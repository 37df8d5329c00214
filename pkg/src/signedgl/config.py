"""Experiment configuration (YAML) with strict validation.

Schema (every key optional unless marked)::

    root_seed: 0
    repeats: 20
    output_dir: out
    graph:                       # required; mapping or list of mappings
      kind: er | ba | rgg        # required
      n: 100                     # required
      p: 0.1                     # er
      m_ba: 5                    # ba
      k_rgg: 5                   # rgg
      zeta: 0.1                  # er/ba
    signals:                     # required; mapping or list of mappings
      filter: {kind: heat, eta: 2}
      m: 2000                    # or m_per_node: 20
      noise_pct: 10
    solver:
      method: exact | fast
      alpha1: 0.01
      alpha2: 0.01
      rho: 1.0
      max_iter: 10000
      eps: 1.0e-6
      residual_tol: 1.0e-6
      normalize: power | samples | none
      k: 20                      # fast; or choose_k: {delta_pos, delta_neg, beta}
      threshold: null
    grid:                        # optional
      alpha1_values: [0.001, 0.01] | {start: -3, step: 0.1, count: 21, base: 10}
      alpha2_values: ...
      metric: macro_f1 | auprc_ratio
    bench:
      iterations: 100
      methods: [exact, fast]

Any scalar under a ``graph`` or ``signals`` entry (including ``filter.eta``)
may be a list; entries expand to the cartesian product of their lists.

Seeds: repeat ``r`` uses ``SeedSequence(root_seed, spawn_key=(r, stream))``
with stream 0 for the graph and 1 for the signals, so a repeat's data does
not depend on execution order and is shared across sweep scenarios.
"""
from __future__ import annotations

import copy
import hashlib
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .admm import NORMALIZE_MODES, AdmmConfig
from .datagen import GRAPH_KINDS, GraphModelSpec, SignalGenSpec
from .errors import ParameterError, SignedGLError
from .evaluation import METRICS, GridSpec, log_grid
from .gsp import FILTER_KINDS, FilterSpec


class ConfigError(SignedGLError, ValueError):
    def __init__(self, path, message, line=None, source=None):
        self.path = path
        self.line = line
        where = f"{source or '<config>'}:{line}: " if line else f"{source or '<config>'}: "
        super().__init__(f"{where}{path}: {message}" if path else f"{where}{message}")


_TOP = {"root_seed", "repeats", "output_dir", "graph", "signals", "solver", "grid", "bench", "name"}
_GRAPH = {"kind", "n", "p", "m_ba", "k_rgg", "zeta"}
_SIGNALS = {"filter", "m", "m_per_node", "noise_pct"}
_FILTER = {"kind", "eta"}
_SOLVER = {"method", "alpha1", "alpha2", "rho", "max_iter", "eps", "residual_tol", "normalize",
           "k", "choose_k", "threshold"}
_CHOOSE_K = {"delta_pos", "delta_neg", "beta"}
_GRID = {"alpha1_values", "alpha2_values", "metric"}
_GRID_RANGE = {"start", "step", "count", "base"}
_BENCH = {"iterations", "methods"}


def _line_index(node, prefix=(), out=None):
    """Map key paths to 1-based source lines from a composed YAML node tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            out[path] = k.start_mark.line + 1
            _line_index(v, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            path = prefix + (i,)
            out[path] = v.start_mark.line + 1
            _line_index(v, path, out)
    return out


class _Validator:
    def __init__(self, lines, source):
        self.lines, self.source = lines, source

    def fail(self, path, msg):
        line = None
        for cut in range(len(path), 0, -1):
            if tuple(path[:cut]) in self.lines:
                line = self.lines[tuple(path[:cut])]
                break
        raise ConfigError(".".join(str(p) for p in path), msg, line, self.source)

    def mapping(self, obj, path, allowed, required=()):
        if not isinstance(obj, dict):
            self.fail(path, f"expected a mapping, got {type(obj).__name__}")
        for k in obj:
            if k not in allowed:
                self.fail(path + (k,), f"unknown key (allowed: {', '.join(sorted(allowed))})")
        for k in required:
            if k not in obj:
                self.fail(path, f"missing required key '{k}'")

    def number(self, obj, path, lo=None, hi=None, integer=False, lo_open=False):
        ok_type = isinstance(obj, int) if integer else isinstance(obj, (int, float))
        if isinstance(obj, bool) or not ok_type:
            self.fail(path, f"expected {'an integer' if integer else 'a number'}, got {obj!r}")
        if lo is not None and (obj <= lo if lo_open else obj < lo):
            self.fail(path, f"must be {'>' if lo_open else '>='} {lo}, got {obj}")
        if hi is not None and obj > hi:
            self.fail(path, f"must be <= {hi}, got {obj}")
        return obj


def _as_list(x):
    return x if isinstance(x, list) else [x]


def _expand(entry: dict):
    """Cartesian product over list-valued scalars (one level of nesting)."""
    flat = []
    for k, v in entry.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                flat.append(((k, kk), _as_list(vv)))
        else:
            flat.append(((k,), _as_list(v)))
    out = []
    for combo in itertools.product(*(vals for _, vals in flat)):
        e = {}
        for (key, _), val in zip(flat, combo):
            if len(key) == 1:
                e[key[0]] = val
            else:
                e.setdefault(key[0], {})[key[1]] = val
        out.append(e)
    return out


@dataclass
class Scenario:
    index: int
    graph: dict
    signals: dict

    def graph_spec(self, seed) -> GraphModelSpec:
        g = self.graph
        return GraphModelSpec(g["kind"], g["n"], g.get("p"), g.get("m_ba"), g.get("k_rgg"),
                              float(g.get("zeta", 0.0)), seed)

    def signal_spec(self, seed) -> SignalGenSpec:
        s = self.signals
        m = s["m"] if "m" in s else s["m_per_node"] * self.graph["n"]
        f = s.get("filter", {"kind": "heat", "eta": 2.0})
        return SignalGenSpec(FilterSpec(f["kind"], float(f["eta"])), int(m), float(s.get("noise_pct", 0.0)), seed)

    def label(self) -> dict:
        g, s = self.graph, self.signals
        f = s.get("filter", {"kind": "heat", "eta": 2.0})
        return {
            "scenario": self.index, "graph": g["kind"], "n": g["n"], "p": g.get("p"), "m_ba": g.get("m_ba"),
            "k_rgg": g.get("k_rgg"), "zeta": g.get("zeta", 0.0), "filter": f["kind"], "eta": f["eta"],
            "m": self.signal_spec(0).m, "noise_pct": s.get("noise_pct", 0.0),
        }


@dataclass
class ExperimentConfig:
    raw: dict
    root_seed: int
    repeats: int
    output_dir: str
    scenarios: list
    solver: dict
    grid: Optional[GridSpec]
    bench: dict

    def admm_config(self, **over) -> AdmmConfig:
        s = self.solver
        kw = dict(alpha1=s.get("alpha1", 0.01), alpha2=s.get("alpha2", 0.01), rho=s.get("rho", 1.0),
                  max_iter=s.get("max_iter", 10000), eps=s.get("eps", 1e-6),
                  residual_tol=s.get("residual_tol", 1e-6), normalize=s.get("normalize", "power"))
        kw.update(over)
        return AdmmConfig(**kw)

    @property
    def method(self) -> str:
        return self.solver.get("method", "exact")

    def neighbor_count(self, n) -> int:
        from .fast import choose_k
        s = self.solver
        if "k" in s:
            return min(int(s["k"]), n - 1)
        if "choose_k" in s:
            c = s["choose_k"]
            return choose_k(c["delta_pos"], c["delta_neg"], n, c["beta"])
        return min(20, n - 1)

    def seed(self, repeat: int, stream: int) -> int:
        ss = np.random.SeedSequence(self.root_seed, spawn_key=(repeat, stream))
        return int(ss.generate_state(1, dtype=np.uint32)[0])

    def manifest(self) -> dict:
        # the output location does not change any result
        return {"config": {k: v for k, v in self.raw.items() if k != "output_dir"}}

    def manifest_hash(self) -> str:
        return manifest_hash(self.manifest())


def manifest_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _validate(raw, v: _Validator) -> ExperimentConfig:
    v.mapping(raw, (), _TOP, required=("graph", "signals"))
    root_seed = v.number(raw.get("root_seed", 0), ("root_seed",), lo=0, integer=True)
    repeats = v.number(raw.get("repeats", 20), ("repeats",), lo=1, integer=True)
    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str):
        v.fail(("output_dir",), "expected a string")

    graphs, signals = [], []
    for gi, g in enumerate(_as_list(raw["graph"])):
        base = ("graph", gi) if isinstance(raw["graph"], list) else ("graph",)
        v.mapping(g, base, _GRAPH, required=("kind", "n"))
        for e in _expand(g):
            if e["kind"] not in GRAPH_KINDS:
                v.fail(base + ("kind",), f"must be one of {GRAPH_KINDS}")
            v.number(e["n"], base + ("n",), lo=3, integer=True)
            if "zeta" in e:
                v.number(e["zeta"], base + ("zeta",), lo=0, hi=1)
            if e["kind"] == "er":
                if "p" not in e:
                    v.fail(base, "ER graph needs 'p'")
                v.number(e["p"], base + ("p",), lo=0, hi=1, lo_open=True)
            if e["kind"] == "ba":
                if "m_ba" not in e:
                    v.fail(base, "BA graph needs 'm_ba'")
                v.number(e["m_ba"], base + ("m_ba",), lo=1, hi=e["n"] - 1, integer=True)
            if e["kind"] == "rgg":
                if "k_rgg" not in e:
                    v.fail(base, "RGG graph needs 'k_rgg'")
                v.number(e["k_rgg"], base + ("k_rgg",), lo=1, hi=e["n"] - 1, integer=True)
                if e.get("zeta", 0):
                    v.fail(base + ("zeta",), "zeta applies to ER/BA graphs only")
            graphs.append(e)
    for si, s in enumerate(_as_list(raw["signals"])):
        base = ("signals", si) if isinstance(raw["signals"], list) else ("signals",)
        v.mapping(s, base, _SIGNALS)
        if "m" in s and "m_per_node" in s:
            v.fail(base, "give either 'm' or 'm_per_node', not both")
        if "m" not in s and "m_per_node" not in s:
            v.fail(base, "missing required key 'm' (or 'm_per_node')")
        if "filter" in s:
            v.mapping(s["filter"], base + ("filter",), _FILTER, required=("kind", "eta"))
        for e in _expand(s):
            if "m" in e:
                v.number(e["m"], base + ("m",), lo=1, integer=True)
            else:
                v.number(e["m_per_node"], base + ("m_per_node",), lo=1, integer=True)
            v.number(e.get("noise_pct", 0), base + ("noise_pct",), lo=0)
            if "filter" in e:
                if e["filter"]["kind"] not in FILTER_KINDS:
                    v.fail(base + ("filter", "kind"), f"must be one of {FILTER_KINDS}")
                v.number(e["filter"]["eta"], base + ("filter", "eta"), lo=0, lo_open=True)
            signals.append(e)
    scenarios = [Scenario(i, g, s) for i, (g, s) in enumerate(itertools.product(graphs, signals))]

    solver = raw.get("solver", {}) or {}
    v.mapping(solver, ("solver",), _SOLVER)
    if solver.get("method", "exact") not in ("exact", "fast"):
        v.fail(("solver", "method"), "must be 'exact' or 'fast'")
    for key in ("alpha1", "alpha2"):
        if key in solver:
            v.number(solver[key], ("solver", key), lo=0)
    if "rho" in solver:
        v.number(solver["rho"], ("solver", "rho"), lo=0, lo_open=True)
    for key in ("eps", "residual_tol"):
        if key in solver:
            v.number(solver[key], ("solver", key), lo=0, lo_open=True)
    if "max_iter" in solver:
        v.number(solver["max_iter"], ("solver", "max_iter"), lo=1, integer=True)
    if "normalize" in solver and solver["normalize"] not in NORMALIZE_MODES:
        v.fail(("solver", "normalize"), f"must be one of {NORMALIZE_MODES}")
    if "k" in solver:
        v.number(solver["k"], ("solver", "k"), lo=1, integer=True)
    if "choose_k" in solver:
        v.mapping(solver["choose_k"], ("solver", "choose_k"), _CHOOSE_K, required=tuple(_CHOOSE_K))
        v.number(solver["choose_k"]["beta"], ("solver", "choose_k", "beta"), lo=1, lo_open=True)
        for key in ("delta_pos", "delta_neg"):
            v.number(solver["choose_k"][key], ("solver", "choose_k", key), lo=0)
    if solver.get("threshold") is not None:
        v.number(solver["threshold"], ("solver", "threshold"), lo=0)

    grid = None
    if raw.get("grid") is not None:
        g = raw["grid"]
        v.mapping(g, ("grid",), _GRID, required=("alpha1_values", "alpha2_values"))
        vals = {}
        for key in ("alpha1_values", "alpha2_values"):
            spec = g[key]
            if isinstance(spec, dict):
                v.mapping(spec, ("grid", key), _GRID_RANGE, required=("start", "step", "count"))
                v.number(spec["count"], ("grid", key, "count"), lo=1, integer=True)
                vals[key] = log_grid(spec["start"], spec["step"], spec["count"], spec.get("base", 10.0))
            elif isinstance(spec, list) and spec:
                for i, a in enumerate(spec):
                    v.number(a, ("grid", key, i), lo=0, lo_open=True)
                vals[key] = spec
            else:
                v.fail(("grid", key), "expected a non-empty list or a {start, step, count} range")
        metric = g.get("metric", "macro_f1")
        if metric not in METRICS:
            v.fail(("grid", "metric"), f"must be one of {METRICS}")
        grid = GridSpec(vals["alpha1_values"], vals["alpha2_values"], metric)

    bench = raw.get("bench", {}) or {}
    v.mapping(bench, ("bench",), _BENCH)
    if "iterations" in bench:
        v.number(bench["iterations"], ("bench", "iterations"), lo=2, integer=True)
    if "methods" in bench:
        ms = bench["methods"]
        if not isinstance(ms, list) or not ms or any(m not in ("exact", "fast") for m in ms):
            v.fail(("bench", "methods"), "expected a non-empty list drawn from [exact, fast]")

    cfg = ExperimentConfig(raw, root_seed, repeats, output_dir, scenarios, solver, grid, bench)
    try:
        cfg.admm_config()
    except ParameterError as exc:
        v.fail(("solver",), str(exc))
    return cfg


def set_path(raw: dict, dotted: str, value: Any):
    keys = dotted.split(".")
    cur = raw
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
        if not isinstance(cur, dict):
            raise ConfigError(dotted, "cannot set a key below a non-mapping")
    cur[keys[-1]] = value


def parse_config(text: str, source: str = "<config>", overrides=()) -> ExperimentConfig:
    """Parse and validate YAML text; ``overrides`` are ``"a.b=value"`` strings."""
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("", f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    raw = copy.deepcopy(raw) if raw is not None else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key.path=value", None, "--set")
        key, val = item.split("=", 1)
        set_path(raw, key.strip(), yaml.safe_load(val))
    lines = _line_index(node) if node is not None else {}
    return _validate(raw, _Validator(lines, source))


def load_config(path, overrides=()) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path), overrides)
