"""Plain-text formats.

Edge list (``.tsv``)::

    # optional comment lines, e.g. "# manifest=<sha256>"
    n=<count>
    i<TAB>j<TAB>signed_weight

Candidate pairs use the same header with two columns ``i<TAB>j``.
Signal matrices are comma-separated, one node per row and one signal per
column.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import SignedGLError
from .graph import SignedGraph


class FormatError(SignedGLError, ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _header_lines(comments):
    return "".join(f"# {c}\n" for c in comments or ())


def _read_header(path, lines):
    """Return (n, index of first data line) from a '# ...' / 'n=<count>' header."""
    for lineno, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if not s.startswith("n="):
            raise FormatError(path, lineno, f"expected header 'n=<count>', got {s!r}")
        try:
            n = int(s[2:])
        except ValueError:
            raise FormatError(path, lineno, f"bad node count {s[2:]!r}") from None
        return n, lineno
    raise FormatError(path, len(lines), "missing 'n=<count>' header")


def format_float(x: float) -> str:
    return repr(float(x))


def write_graph(path, G: SignedGraph, comments=()):
    out = [_header_lines(comments), f"n={G.n}\n"]
    for i, j, w, s in G.edges():
        out.append(f"{i}\t{j}\t{format_float(s * w)}\n")
    _atomic_write(path, "".join(out))


def read_graph(path) -> SignedGraph:
    lines = Path(path).read_text().splitlines()
    n, start = _read_header(path, lines)
    edges = []
    for lineno in range(start + 1, len(lines) + 1):
        s = lines[lineno - 1].strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split("\t")
        if len(parts) != 3:
            raise FormatError(path, lineno, f"expected 3 tab-separated fields, got {len(parts)}")
        try:
            i, j, a = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
        if a == 0:
            continue
        if i > j:
            i, j = j, i
        edges.append((i, j, abs(a), 1 if a > 0 else -1))
    try:
        return SignedGraph.from_edges(n, edges)
    except SignedGLError as exc:
        raise FormatError(path, "-", str(exc)) from None


def write_pairs(path, n, rows, cols, comments=()):
    out = [_header_lines(comments), f"n={n}\n"]
    out.extend(f"{int(i)}\t{int(j)}\n" for i, j in zip(rows, cols))
    _atomic_write(path, "".join(out))


def read_pairs(path):
    lines = Path(path).read_text().splitlines()
    n, start = _read_header(path, lines)
    rows, cols = [], []
    for lineno in range(start + 1, len(lines) + 1):
        s = lines[lineno - 1].strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split("\t")
        if len(parts) != 2:
            raise FormatError(path, lineno, "expected 'i<TAB>j'")
        try:
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
    return n, np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp)


def write_matrix(path, X, comments=()):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    body = "\n".join(",".join(format_float(x) for x in row) for row in X)
    _atomic_write(path, _header_lines(comments) + body + "\n")


def read_matrix(path) -> np.ndarray:
    """Parse a comma-separated matrix; errors name the offending row (1-based line)."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split(",")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise FormatError(path, lineno, f"non-numeric entry in row: {s[:60]!r}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise FormatError(path, lineno, f"row has {len(vals)} columns, expected {width}")
            if not all(np.isfinite(vals)):
                raise FormatError(path, lineno, "non-finite entry")
            rows.append(vals)
    if not rows:
        raise FormatError(path, 0, "empty matrix file")
    return np.array(rows)


def write_vector(path, v, comments=()):
    body = "\n".join(format_float(x) for x in np.asarray(v, dtype=float))
    _atomic_write(path, _header_lines(comments) + body + "\n")


def read_vector(path) -> np.ndarray:
    return read_matrix(path).ravel()
