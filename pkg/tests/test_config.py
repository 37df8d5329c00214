import numpy as np
import pytest

from signedgl.config import ConfigError, manifest_hash, parse_config

MINIMAL = """\
root_seed: 3
repeats: 2
graph: {kind: er, n: 10, p: 0.3}
signals: {m: 50}
"""


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.repeats == 2 and cfg.method == "exact" and cfg.grid is None
    assert len(cfg.scenarios) == 1
    a = cfg.admm_config()
    assert a.alpha1 == 0.01 and a.rho == 1.0 and a.normalize == "power"


def test_unknown_key_is_rejected_with_line():
    text = MINIMAL + "solver:\n  alpha1: 0.1\n  alpah2: 0.2\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "cfg.yaml")
    assert exc.value.line == 7 and "solver.alpah2" in str(exc.value) and "cfg.yaml:7" in str(exc.value)


def test_zeta_out_of_range_names_field():
    text = "graph:\n  kind: ba\n  n: 20\n  m_ba: 2\n  zeta: 1.5\nsignals: {m: 10}\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.path == "graph.zeta" and exc.value.line == 5


@pytest.mark.parametrize("snippet,path", [
    ("graph: {kind: er, n: 10}\nsignals: {m: 5}\n", "graph"),
    ("graph: {kind: er, n: 2, p: 0.5}\nsignals: {m: 5}\n", "graph.n"),
    ("graph: {kind: er, n: 10, p: 0.5}\nsignals: {m: 5, m_per_node: 2}\n", "signals"),
    ("graph: {kind: er, n: 10, p: 0.5}\nsignals: {m: 5, filter: {kind: heat, eta: -1}}\n", "signals.filter.eta"),
    ("graph: {kind: er, n: 10, p: 0.5}\nsignals: {m: 5}\nsolver: {method: slow}\n", "solver.method"),
    ("graph: {kind: er, n: 10, p: 0.5}\nsignals: {m: 5}\nsolver: {rho: 0}\n", "solver.rho"),
    ("graph: {kind: er, n: 10, p: 0.5}\nsignals: {m: 5}\ngrid: {alpha1_values: [], alpha2_values: [1]}\n",
     "grid.alpha1_values"),
    ("graph: {kind: er, n: 10, p: 0.5}\nsignals: {m: 5}\nrepeats: 0\n", "repeats"),
    ("signals: {m: 5}\n", ""),
])
def test_schema_errors(snippet, path):
    with pytest.raises(ConfigError) as exc:
        parse_config(snippet)
    assert exc.value.path == path


def test_yaml_syntax_error_has_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("graph: {kind: er\nsignals: [\n")
    assert exc.value.line is not None


def test_sweep_expansion():
    text = """\
graph:
  - {kind: er, n: 100, p: 0.1, zeta: 0.1}
  - {kind: ba, n: 100, m_ba: 5, zeta: 0.1}
  - {kind: rgg, n: 100, k_rgg: 5}
signals:
  - {filter: {kind: gaussian, eta: 0.1}, m: 2000, noise_pct: 10}
  - {filter: {kind: heat, eta: 2}, m: 2000, noise_pct: 10}
  - {filter: {kind: tikhonov, eta: 5}, m: 2000, noise_pct: 10}
"""
    cfg = parse_config(text)
    assert len(cfg.scenarios) == 9
    assert {(s.graph["kind"], s.signals["filter"]["kind"]) for s in cfg.scenarios} == {
        (g, f) for g in ("er", "ba", "rgg") for f in ("gaussian", "heat", "tikhonov")}


def test_list_valued_scalars_expand():
    text = "graph: {kind: ba, n: [200, 400, 600], m_ba: 5, zeta: 0.1}\nsignals: {m_per_node: 20, noise_pct: [0, 10]}\n"
    cfg = parse_config(text)
    assert len(cfg.scenarios) == 6
    assert sorted({s.signal_spec(0).m for s in cfg.scenarios}) == [4000, 8000, 12000]


def test_grid_range():
    text = MINIMAL + "grid:\n  alpha1_values: {start: -3, step: 0.1, count: 21}\n  alpha2_values: [0.1]\n"
    cfg = parse_config(text)
    assert len(cfg.grid.alpha1_values) == 21
    assert cfg.grid.alpha1_values[10] == pytest.approx(1e-2)


def test_seed_rule():
    cfg = parse_config(MINIMAL)
    expected = int(np.random.SeedSequence(3, spawn_key=(1, 0)).generate_state(1, dtype=np.uint32)[0])
    assert cfg.seed(1, 0) == expected
    assert len({cfg.seed(r, s) for r in range(5) for s in range(2)}) == 10


def test_overrides():
    cfg = parse_config(MINIMAL, overrides=["solver.alpha1=0.5", "repeats=4"])
    assert cfg.admm_config().alpha1 == 0.5 and cfg.repeats == 4
    with pytest.raises(ConfigError):
        parse_config(MINIMAL, overrides=["solver.alpha1"])


def test_manifest_hash_ignores_output_dir():
    a = parse_config(MINIMAL + "output_dir: a\n")
    b = parse_config(MINIMAL + "output_dir: b\n")
    c = parse_config(MINIMAL, overrides=["root_seed=4"])
    assert a.manifest_hash() == b.manifest_hash() != c.manifest_hash()
    assert manifest_hash({"x": 1, "y": 2}) == manifest_hash({"y": 2, "x": 1})


def test_fast_neighbor_count():
    cfg = parse_config(MINIMAL + "solver: {method: fast, choose_k: {delta_pos: 500, delta_neg: 300, beta: 4}}\n")
    assert cfg.neighbor_count(100) == 20
    assert parse_config(MINIMAL + "solver: {k: 50}\n").neighbor_count(10) == 9


@pytest.mark.parametrize("name", ["synthetic_sweep", "sample_size", "scaling", "fast_large"])
def test_shipped_configs_parse(name):
    import os
    from signedgl.config import load_config
    path = os.path.join(os.path.dirname(__file__), "..", "configs", f"{name}.yaml")
    cfg = load_config(path)
    assert cfg.scenarios
    if name == "synthetic_sweep":
        assert len(cfg.scenarios) == 9 and len(cfg.grid.cells()) == 441
