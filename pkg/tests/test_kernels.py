import os
import numpy as np
import pytest

from signedgl import _fallback, kernels
from signedgl.graph import num_pairs, pair_indices

try:
    from signedgl import _core
except ImportError:  # pragma: no cover
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def inputs(n=13, seed=0):
    rng = np.random.default_rng(seed)
    r, c = pair_indices(n)
    d = num_pairs(n)
    return rng, np.ascontiguousarray(r), np.ascontiguousarray(c), d


def test_backend_flag():
    assert kernels.BACKEND in ("compiled", "python")
    assert kernels.get_backend("python") is _fallback
    with pytest.raises(ValueError):
        kernels.get_backend("gpu")


@needs_core
class TestParity:
    def test_q_apply(self):
        rng, r, c, d = inputs()
        v = rng.standard_normal(d)
        np.testing.assert_allclose(_core.q_apply(v, r, c, 13), _fallback.q_apply(v, r, c, 13), atol=1e-13)

    def test_qt_apply(self):
        rng, r, c, d = inputs()
        u = rng.standard_normal(13)
        np.testing.assert_array_equal(_core.qt_apply(u, r, c), _fallback.qt_apply(u, r, c))

    def test_woodbury_combine(self):
        rng, r, c, d = inputs()
        v, w = rng.standard_normal(d), rng.standard_normal(13)
        a, sa = _core.woodbury_combine(v, w, r, c, 1.7, 0.3)
        b, sb = _fallback.woodbury_combine(v, w, r, c, 1.7, 0.3)
        np.testing.assert_allclose(a, b, atol=1e-14)
        assert sa == pytest.approx(sb, rel=1e-12)

    def test_z_project(self):
        rng, r, c, d = inputs()
        args = [rng.standard_normal(d) for _ in range(4)]
        # include exact ties between the two parts
        args[1][:5] = args[0][:5]
        args[2][:5] = args[3][:5] = 0.0
        for x, y in zip(_core.z_project(*args, 1.3), _fallback.z_project(*args, 1.3)):
            np.testing.assert_array_equal(x, y)

    def test_dual_step(self):
        rng, r, c, d = inputs()
        y1 = rng.standard_normal(d)
        y2 = y1.copy()
        z, l = rng.standard_normal(d), rng.standard_normal(d)
        ra = _core.dual_step(y1, z, l, 0.8)
        rb = _fallback.dual_step(y2, z, l, 0.8)
        np.testing.assert_allclose(y1, y2, atol=1e-15)
        assert ra == pytest.approx(rb, rel=1e-12)
        assert ra == pytest.approx(np.linalg.norm(z - l), rel=1e-12)

    def test_p_norm_sq(self):
        rng, r, c, d = inputs()
        l = rng.standard_normal(d)
        assert _core.p_norm_sq(l, r, c, 13) == pytest.approx(_fallback.p_norm_sq(l, r, c, 13), rel=1e-12)

    def test_subset_indices(self):
        rng = np.random.default_rng(4)
        r = np.array([0, 1, 2, 0], dtype=np.intp)
        c = np.array([3, 4, 4, 1], dtype=np.intp)
        v = rng.standard_normal(4)
        np.testing.assert_allclose(_core.q_apply(v, r, c, 5), _fallback.q_apply(v, r, c, 5), atol=1e-14)


def test_benchmark_script_runs(capsys):
    import runpy
    import sys
    path = os.path.join(os.path.dirname(__file__), "..", "benchmarks", "bench_kernels.py")
    argv = sys.argv
    sys.argv = [path, "--n", "12", "--repeat", "1", "--iterations", "2"]
    try:
        with pytest.raises(SystemExit) as exc:
            runpy.run_path(path, run_name="__main__")
    finally:
        sys.argv = argv
    assert exc.value.code == 0
    out = capsys.readouterr().out
    if _core is not None:
        assert out.splitlines()[0] == "kernel,n,python_s,compiled_s,speedup"
