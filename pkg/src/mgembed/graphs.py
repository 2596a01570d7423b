"""Graph and graph-set containers, validation, and edge-list file I/O.

A Graph is one symmetric adjacency matrix plus flags; a GraphSet is m
vertex-aligned graphs with optional class labels and scalar responses.
Both are frozen after construction so they can be read from any number of
workers.

Edge-list format (text, UTF-8, LF): header ``n e weighted loops`` with the
two flags in {0,1}, then e lines ``u v`` (unweighted) or ``u v w``
(weighted), 0-indexed, u <= v, sorted lexicographically.  A graph-set
manifest is one line per graph: ``path<TAB>label<TAB>response`` where the
fields after the path may be empty or omitted.
"""

import os

import numpy as np

__all__ = [
    "Graph",
    "GraphSet",
    "GraphFormatError",
    "parse_graph",
    "serialize_graph",
    "read_graph",
    "write_graph",
    "load_graph_set",
    "write_graph_set",
]


class GraphFormatError(ValueError):
    """Malformed edge-list document, manifest, or invalid graph data."""


def _fmt(x):
    """Format a float with 17 significant digits (lossless for float64)."""
    return f"{x:.17g}"


class Graph:
    """One undirected graph as a symmetric n-by-n real matrix.

    Storage is either a dense row-major matrix or sorted coordinate triples
    of the upper triangle (diagonal included).  Entries of unweighted graphs
    are {0,1}; weighted entries are arbitrary finite reals.  The diagonal
    must be zero unless ``loops_allowed``.
    """

    __slots__ = ("n", "weighted", "loops_allowed", "storage",
                 "_dense", "_rows", "_cols", "_vals", "_sym_rows", "_sym_cols", "_sym_vals")

    def __init__(self, n, *, weighted, loops_allowed, storage, dense=None, triples=None):
        if n < 1:
            raise GraphFormatError(f"vertex count must be positive, got {n}")
        if storage not in ("dense", "sparse"):
            raise GraphFormatError(f"unknown storage kind: {storage}")
        self.n = int(n)
        self.weighted = bool(weighted)
        self.loops_allowed = bool(loops_allowed)
        self.storage = storage
        if storage == "dense":
            a = np.array(dense, dtype=np.float64)
            if a.shape != (n, n):
                raise GraphFormatError(f"expected a {n}x{n} matrix, got shape {a.shape}")
            self._validate_entries(a[np.triu_indices(n)], np.diag(a))
            if not np.array_equal(a, a.T):
                raise GraphFormatError("adjacency matrix is not exactly symmetric")
            a.setflags(write=False)
            self._dense = a
            self._rows = self._cols = self._vals = None
        else:
            rows, cols, vals = triples
            rows = np.asarray(rows, dtype=np.int64)
            cols = np.asarray(cols, dtype=np.int64)
            vals = np.asarray(vals, dtype=np.float64)
            if not (rows.shape == cols.shape == vals.shape):
                raise GraphFormatError("triple arrays must have equal length")
            if rows.size and (rows.min() < 0 or cols.max() >= n):
                raise GraphFormatError("vertex index out of range")
            if np.any(rows > cols):
                raise GraphFormatError("sparse triples must satisfy row <= col")
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            if rows.size > 1 and np.any((np.diff(rows) == 0) & (np.diff(cols) == 0)):
                raise GraphFormatError("duplicate entry in sparse triples")
            self._validate_entries(vals, vals[rows == cols])
            for arr in (rows, cols, vals):
                arr.setflags(write=False)
            self._dense = None
            self._rows, self._cols, self._vals = rows, cols, vals
            # Symmetric expansion used by matvec: off-diagonal triples twice.
            off = rows != cols
            self._sym_rows = np.concatenate([rows, cols[off]])
            self._sym_cols = np.concatenate([cols, rows[off]])
            self._sym_vals = np.concatenate([vals, vals[off]])

    def _validate_entries(self, values, diagonal):
        if not np.all(np.isfinite(values)):
            raise GraphFormatError("non-finite entry in adjacency matrix")
        if not self.weighted and values.size:
            if not np.all((values == 0.0) | (values == 1.0)):
                raise GraphFormatError("unweighted graph has an entry outside {0,1}")
        if not self.loops_allowed and diagonal.size and np.any(diagonal != 0.0):
            raise GraphFormatError("loop present but loops are not allowed")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_dense(cls, matrix, *, weighted=None, loops_allowed=None, storage="dense"):
        a = np.asarray(matrix, dtype=np.float64)
        if weighted is None:
            weighted = not np.all((a == 0.0) | (a == 1.0))
        if loops_allowed is None:
            loops_allowed = bool(np.any(np.diag(a) != 0.0))
        if storage == "dense":
            return cls(a.shape[0], weighted=weighted, loops_allowed=loops_allowed,
                       storage="dense", dense=a)
        rows, cols = np.nonzero(np.triu(a))
        return cls(a.shape[0], weighted=weighted, loops_allowed=loops_allowed,
                   storage="sparse", triples=(rows, cols, a[rows, cols]))

    @classmethod
    def from_edges(cls, n, edges, *, weighted=False, loops_allowed=False, storage="dense"):
        """Build from (u, v, w) triples with u <= v; w omitted means 1."""
        rows, cols, vals = [], [], []
        for e in edges:
            u, v = e[0], e[1]
            w = e[2] if len(e) > 2 else 1.0
            rows.append(u)
            cols.append(v)
            vals.append(w)
        g = cls(n, weighted=weighted, loops_allowed=loops_allowed,
                storage="sparse", triples=(rows, cols, vals))
        return g if storage == "sparse" else cls(
            n, weighted=weighted, loops_allowed=loops_allowed, storage="dense",
            dense=g.dense())

    # -- views ---------------------------------------------------------

    def dense(self):
        """The full symmetric matrix (materialized for sparse storage)."""
        if self._dense is not None:
            return self._dense
        a = np.zeros((self.n, self.n))
        a[self._rows, self._cols] = self._vals
        a[self._cols, self._rows] = self._vals
        a.setflags(write=False)
        return a

    def triples(self):
        """Sorted upper-triangle (row, col, value) arrays of the nonzeros."""
        if self._dense is not None:
            rows, cols = np.nonzero(np.triu(self._dense))
            return rows, cols, self._dense[rows, cols]
        return self._rows, self._cols, self._vals

    # -- linear algebra -------------------------------------------------

    def matvec(self, v):
        """A @ v; touches only stored nonzeros for sparse storage."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError(f"vector length {v.shape} does not match n={self.n}")
        if self._dense is not None:
            return self._dense @ v
        out = np.zeros(self.n)
        np.add.at(out, self._sym_rows, self._sym_vals * v[self._sym_cols])
        return out

    def quadratic_form(self, h):
        """h^T A h, computed as a matvec followed by a dot product."""
        return float(np.dot(np.asarray(h, dtype=np.float64), self.matvec(h)))

    def frobenius_norm_sq(self):
        """Sum of squared entries of the full matrix, diagonal included."""
        if self._dense is not None:
            return float(np.sum(self._dense * self._dense))
        off = self._rows != self._cols
        v2 = self._vals * self._vals
        return float(v2.sum() + v2[off].sum())

    def __repr__(self):
        return (f"Graph(n={self.n}, weighted={self.weighted}, "
                f"loops_allowed={self.loops_allowed}, storage={self.storage!r})")


class GraphSet:
    """m vertex-aligned graphs with optional labels and scalar responses."""

    __slots__ = ("graphs", "labels", "responses")

    def __init__(self, graphs, labels=None, responses=None):
        graphs = tuple(graphs)
        if not graphs:
            raise GraphFormatError("a graph set needs at least one graph")
        n = graphs[0].n
        for g in graphs:
            if g.n != n:
                raise GraphFormatError("all graphs in a set must share the vertex count")
        if labels is not None:
            labels = tuple(int(y) for y in labels)
            if len(labels) != len(graphs):
                raise GraphFormatError("labels length does not match the number of graphs")
            if min(labels) < 1:
                raise GraphFormatError("class labels must be in 1..K")
        if responses is not None:
            responses = tuple(float(r) for r in responses)
            if len(responses) != len(graphs):
                raise GraphFormatError("responses length does not match the number of graphs")
            if not all(np.isfinite(responses)):
                raise GraphFormatError("non-finite response value")
        self.graphs = graphs
        self.labels = labels
        self.responses = responses

    @property
    def m(self):
        return len(self.graphs)

    @property
    def n(self):
        return self.graphs[0].n

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]


# -- edge-list document parsing/serialization ---------------------------


def parse_graph(text, storage="dense"):
    """Parse an edge-list document into a validated Graph."""
    lines = [ln for ln in text.split("\n") if ln.strip() != ""]
    if not lines:
        raise GraphFormatError("empty document")
    head = lines[0].split()
    if len(head) != 4:
        raise GraphFormatError(f"header must have 4 fields, got {lines[0]!r}")
    try:
        n, e, weighted, loops = (int(x) for x in head)
    except ValueError:
        raise GraphFormatError(f"non-integer header field in {lines[0]!r}") from None
    if n < 1 or e < 0 or weighted not in (0, 1) or loops not in (0, 1):
        raise GraphFormatError(f"invalid header values in {lines[0]!r}")
    if len(lines) - 1 != e:
        raise GraphFormatError(f"header announces {e} edges, found {len(lines) - 1}")
    rows, cols, vals = [], [], []
    seen = set()
    for ln in lines[1:]:
        parts = ln.split()
        if weighted:
            if len(parts) != 3:
                raise GraphFormatError(f"weighted edge line needs 'u v w': {ln!r}")
        else:
            if len(parts) == 3:
                raise GraphFormatError(f"weight given on an unweighted graph: {ln!r}")
            if len(parts) != 2:
                raise GraphFormatError(f"edge line needs 'u v': {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if weighted else 1.0
        except ValueError:
            raise GraphFormatError(f"malformed edge line: {ln!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"vertex index out of range in {ln!r}")
        if u > v:
            raise GraphFormatError(f"edges must satisfy u <= v: {ln!r}")
        if (u, v) in seen:
            raise GraphFormatError(f"duplicate edge {u} {v}")
        seen.add((u, v))
        rows.append(u)
        cols.append(v)
        vals.append(w)
    g = Graph(n, weighted=bool(weighted), loops_allowed=bool(loops),
              storage="sparse", triples=(rows, cols, vals))
    if storage == "dense":
        g = Graph(n, weighted=bool(weighted), loops_allowed=bool(loops),
                  storage="dense", dense=g.dense())
    return g


def serialize_graph(g):
    """Render a Graph back into the edge-list format (nonzeros only)."""
    rows, cols, vals = g.triples()
    out = [f"{g.n} {len(vals)} {int(g.weighted)} {int(g.loops_allowed)}"]
    for u, v, w in zip(rows, cols, vals):
        if g.weighted:
            out.append(f"{u} {v} {_fmt(w)}")
        else:
            out.append(f"{u} {v}")
    return "\n".join(out) + "\n"


def read_graph(path, storage="dense"):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return parse_graph(fh.read(), storage=storage)
        except GraphFormatError as exc:
            raise GraphFormatError(f"{path}: {exc}") from None


def write_graph(g, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_graph(g))


# -- manifests -----------------------------------------------------------


def load_graph_set(manifest_path, storage="dense"):
    """Read a manifest and the edge-list files it points to."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    graphs, labels, responses = [], [], []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.rstrip("\n")
            if ln.strip() == "":
                continue
            fields = ln.split("\t")
            if len(fields) > 3:
                raise GraphFormatError(f"manifest line has too many fields: {ln!r}")
            path = fields[0]
            if not path:
                raise GraphFormatError(f"manifest line missing a path: {ln!r}")
            label = fields[1] if len(fields) > 1 else ""
            response = fields[2] if len(fields) > 2 else ""
            graphs.append(read_graph(os.path.join(base, path), storage=storage))
            labels.append(int(label) if label else None)
            responses.append(float(response) if response else None)
    have_labels = any(y is not None for y in labels)
    have_responses = any(r is not None for r in responses)
    if have_labels and any(y is None for y in labels):
        raise GraphFormatError("manifest mixes labeled and unlabeled graphs")
    if have_responses and any(r is None for r in responses):
        raise GraphFormatError("manifest mixes graphs with and without responses")
    return GraphSet(graphs,
                    labels=labels if have_labels else None,
                    responses=responses if have_responses else None)


def write_graph_set(gs, out_dir, prefix="graph"):
    """Write one edge-list file per graph plus manifest.tsv; returns its path."""
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for i, g in enumerate(gs.graphs):
        name = f"{prefix}_{i:04d}.txt"
        write_graph(g, os.path.join(out_dir, name))
        label = str(gs.labels[i]) if gs.labels is not None else ""
        response = _fmt(gs.responses[i]) if gs.responses is not None else ""
        lines.append(f"{name}\t{label}\t{response}")
    manifest = os.path.join(out_dir, "manifest.tsv")
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return manifest
