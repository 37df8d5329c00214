import numpy as np
import pytest

from signedgl import io
from signedgl.graph import SignedGraph


def test_graph_roundtrip(tmp_path):
    G = SignedGraph.from_edges(5, [(0, 1, 0.1, 1), (2, 4, 3.5, -1), (1, 3, 1e-17, 1)])
    path = tmp_path / "g.tsv"
    io.write_graph(path, G, comments=["manifest=abc"])
    text = path.read_text().splitlines()
    assert text[0] == "# manifest=abc" and text[1] == "n=5"
    H = io.read_graph(path)
    np.testing.assert_array_equal(G.adjacency(), H.adjacency())


def test_matrix_roundtrip_is_exact(tmp_path):
    X = np.random.default_rng(0).standard_normal((4, 7))
    path = tmp_path / "x.csv"
    io.write_matrix(path, X, comments=["hello"])
    np.testing.assert_array_equal(io.read_matrix(path), X)


def test_vector_and_pairs(tmp_path):
    v = np.array([-1.5, 0.0, 2.25])
    io.write_vector(tmp_path / "v.csv", v)
    np.testing.assert_array_equal(io.read_vector(tmp_path / "v.csv"), v)
    io.write_pairs(tmp_path / "p.tsv", 4, [0, 1], [3, 2])
    n, r, c = io.read_pairs(tmp_path / "p.tsv")
    assert n == 4 and r.tolist() == [0, 1] and c.tolist() == [3, 2]


@pytest.mark.parametrize("body,line", [
    ("1,2\n3,x\n", 2),
    ("# c\n1,2\n3\n", 3),
    ("1,2\nnan,1\n", 2),
])
def test_corrupt_matrix_names_row(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(io.FormatError) as exc:
        io.read_matrix(path)
    assert exc.value.line == line and f":{line}:" in str(exc.value)


def test_empty_matrix(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("# only a comment\n")
    with pytest.raises(io.FormatError):
        io.read_matrix(path)


@pytest.mark.parametrize("body,line", [
    ("0\t1\t1.0\n", 1),
    ("n=3\n0\t1\n", 2),
    ("n=3\n0\t1\tq\n", 2),
    ("n=x\n", 1),
])
def test_corrupt_graph(tmp_path, body, line):
    path = tmp_path / "g.tsv"
    path.write_text(body)
    with pytest.raises(io.FormatError) as exc:
        io.read_graph(path)
    assert exc.value.line == line


def test_graph_out_of_range(tmp_path):
    path = tmp_path / "g.tsv"
    path.write_text("n=3\n0\t5\t1.0\n")
    with pytest.raises(io.FormatError):
        io.read_graph(path)


def test_atomic_write_leaves_no_temp(tmp_path):
    io.write_vector(tmp_path / "sub" / "v.csv", [1.0])
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["v.csv"]
