"""Weighted directed graphs, the node-weighted feature space, and
characteristic operators.

Conventions used throughout the package:

* ``W[i, j]`` is the weight of the directed edge ``j -> i`` (column = source,
  row = target).  With this orientation the in-degree of node ``i`` is the
  row sum ``W[i, :].sum()`` and the out-degree of node ``j`` is the column
  sum ``W[:, j].sum()``.
* Node weights ``mu_i > 0`` turn the space of N x F feature matrices into an
  inner-product space via ``<X, Y> = sum_ij conj(X_ij) Y_ij mu_i``.
* Feature matrices are plain ndarrays (float64 or complex128); a matrix is
  "purely real" exactly when its dtype is real.

Graphs up to ``DENSE_NODE_LIMIT`` nodes are stored dense; larger graphs are
stored as scipy CSR arrays (the verification harness lives at desk scale, so
the dense path is the one exercised everywhere).
"""

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConfigError,
    IndexOutOfRangeError,
    NegativeWeightError,
    NonpositiveNodeWeightError,
    ShapeMismatchError,
)

# Graphs with more nodes than this are stored sparse (config knob).
DENSE_NODE_LIMIT = 2000


class OperatorKind(enum.Enum):
    ADJACENCY = "adjacency"
    IN_DEGREE_LAPLACIAN = "in_degree_laplacian"
    FABERNET_NORMALIZED = "fabernet_normalized"


@dataclass(frozen=True)
class DiGraph:
    """Immutable node- and edge-weighted directed graph.

    ``adjacency`` follows the ``W[i, j] = weight of j -> i`` convention; it is
    either a dense ndarray or a scipy CSR array.
    """

    node_weights: np.ndarray
    adjacency: np.ndarray | sp.csr_array

    def __post_init__(self):
        mu = np.asarray(self.node_weights, dtype=float)
        object.__setattr__(self, "node_weights", mu)
        mu.setflags(write=False)
        if mu.ndim != 1:
            raise ShapeMismatchError("node_weights must be a 1-D vector")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise NonpositiveNodeWeightError("all node weights must be finite and > 0")
        w = self.adjacency
        if w.shape != (mu.size, mu.size):
            raise ShapeMismatchError(
                f"adjacency shape {w.shape} does not match {mu.size} nodes"
            )
        if sp.issparse(w):
            bad = w.data.size and (np.any(~np.isfinite(w.data)) or np.any(w.data < 0))
        else:
            w = np.asarray(w, dtype=float)
            object.__setattr__(self, "adjacency", w)
            w.setflags(write=False)
            bad = np.any(~np.isfinite(w)) or np.any(w < 0)
        if bad:
            raise NegativeWeightError("edge weights must be finite and >= 0")

    @property
    def n_nodes(self) -> int:
        return self.node_weights.size

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.adjacency)

    def in_degrees(self) -> np.ndarray:
        """Row sums of W."""
        d = self.adjacency.sum(axis=1)
        return np.asarray(d).ravel()

    def out_degrees(self) -> np.ndarray:
        """Column sums of W."""
        d = self.adjacency.sum(axis=0)
        return np.asarray(d).ravel()

    def dense_adjacency(self) -> np.ndarray:
        return self.adjacency.toarray() if self.is_sparse else self.adjacency


@dataclass(frozen=True)
class CharacteristicOperator:
    """A graph-derived matrix that filters are functions of."""

    kind: OperatorKind
    matrix: np.ndarray | sp.csr_array
    graph: DiGraph = field(repr=False)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else self.matrix


def build_graph(edge_list, n_nodes=None, node_weights=None) -> DiGraph:
    """Assemble a DiGraph from ``(src, dst, weight)`` triples.

    Duplicate edges accumulate.  ``n_nodes`` defaults to 1 + the largest index
    seen; ``node_weights`` defaults to all ones.
    """
    edges = list(edge_list)
    if n_nodes is None:
        if node_weights is not None:
            n_nodes = len(node_weights)
        elif edges:
            n_nodes = 1 + max(max(s, d) for s, d, _ in edges)
        else:
            raise ConfigError("cannot infer node count from an empty edge list")
    for src, dst, w in edges:
        if not (0 <= src < n_nodes and 0 <= dst < n_nodes):
            raise IndexOutOfRangeError(
                f"edge ({src}, {dst}) outside node range [0, {n_nodes})"
            )
        if not np.isfinite(w) or w < 0:
            raise NegativeWeightError(f"edge ({src}, {dst}) has invalid weight {w}")
    if node_weights is None:
        mu = np.ones(n_nodes)
    else:
        mu = np.asarray(node_weights, dtype=float)
    if n_nodes > DENSE_NODE_LIMIT:
        rows = np.array([d for _, d, _ in edges], dtype=int)
        cols = np.array([s for s, _, _ in edges], dtype=int)
        vals = np.array([w for _, _, w in edges], dtype=float)
        adj = sp.csr_array(
            sp.coo_array((vals, (rows, cols)), shape=(n_nodes, n_nodes))
        )
        adj.sum_duplicates()
    else:
        adj = np.zeros((n_nodes, n_nodes))
        for src, dst, w in edges:
            adj[dst, src] += w
    return DiGraph(node_weights=mu, adjacency=adj)


def weighted_inner(x, y, g: DiGraph) -> complex:
    """<X, Y> = sum_ij conj(X_ij) Y_ij mu_i; conjugate-symmetric."""
    x = np.atleast_2d(np.asarray(x))
    y = np.atleast_2d(np.asarray(y))
    n = g.n_nodes
    if x.shape[0] != n or y.shape[0] != n or x.shape != y.shape:
        raise ShapeMismatchError(
            f"feature shapes {x.shape}, {y.shape} do not match graph with {n} nodes"
        )
    return complex(np.sum(np.conj(x) * y * g.node_weights[:, None]))


def weighted_norm(x, g_or_mu) -> float:
    """The 2-norm induced by the node weights: ||X||^2 = sum |X_ij|^2 mu_i."""
    mu = g_or_mu.node_weights if isinstance(g_or_mu, DiGraph) else np.asarray(g_or_mu)
    x = np.atleast_2d(np.asarray(x))
    if x.shape[0] != mu.size:
        raise ShapeMismatchError(f"{x.shape[0]} rows vs {mu.size} node weights")
    return float(np.sqrt(np.sum(np.abs(x) ** 2 * mu[:, None])))


def weighted_operator_norm(a, mu_out, mu_in=None) -> float:
    """Operator 2-norm of ``a`` between weighted spaces.

    ``a`` maps signals weighted by ``mu_in`` to signals weighted by
    ``mu_out``; the induced norm is the spectral norm of the metric-conjugated
    matrix diag(sqrt(mu_out)) a diag(1/sqrt(mu_in)).
    """
    if mu_in is None:
        mu_in = mu_out
    scaled = np.sqrt(mu_out)[:, None] * np.asarray(a) / np.sqrt(mu_in)[None, :]
    return float(np.linalg.norm(scaled, 2))


def weighted_adjoint(a, mu) -> np.ndarray:
    """Adjoint of ``a`` w.r.t. the weighted inner product: M^-1 a^H M.

    Reduces to the plain (conjugate) transpose when mu is constant.
    """
    mu = np.asarray(mu, dtype=float)
    return (np.conj(a).T * mu[None, :]) / mu[:, None]


def _degree_inv_quartic(deg):
    """Elementwise d^(-1/4) with the 0^(-1/4) := 0 convention."""
    out = np.zeros_like(deg, dtype=float)
    pos = deg > 0
    out[pos] = deg[pos] ** -0.25
    return out


def characteristic_operator(g: DiGraph, kind: OperatorKind) -> CharacteristicOperator:
    """Build one of the supported graph operators.

    * ADJACENCY: W itself.
    * IN_DEGREE_LAPLACIAN: M^-1 (D_in - W).  Satisfies L 1 = 0 by construction.
    * FABERNET_NORMALIZED: D_in^(-1/4) W D_out^(-1/4), zero factors on zero
      degrees; zero diagonal whenever W has a zero diagonal.
    """
    kind = OperatorKind(kind)
    w = g.adjacency
    mu = g.node_weights
    if kind is OperatorKind.ADJACENCY:
        mat = w
    elif kind is OperatorKind.IN_DEGREE_LAPLACIAN:
        din = g.in_degrees()
        if g.is_sparse:
            inv_mu = sp.diags_array(1.0 / mu)
            mat = sp.csr_array(inv_mu @ (sp.diags_array(din) - w))
        else:
            mat = (np.diag(din) - w) / mu[:, None]
    else:
        lf = _degree_inv_quartic(g.in_degrees())
        rf = _degree_inv_quartic(g.out_degrees())
        if g.is_sparse:
            mat = sp.csr_array(sp.diags_array(lf) @ w @ sp.diags_array(rf))
        else:
            mat = lf[:, None] * w * rf[None, :]
    return CharacteristicOperator(kind=kind, matrix=mat, graph=g)


# ---------------------------------------------------------------------------
# Graph file format: one edge per line "src<TAB>dst<TAB>weight", optional
# header "# nodes N"; node weights in a sibling file with lines "id<TAB>mu".
# ---------------------------------------------------------------------------

def _parse_header_and_rows(path: Path, n_fields: int):
    if not path.exists():
        raise ConfigError(f"graph file not found: {path}")
    n_nodes = None
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nodes":
                n_nodes = int(parts[1])
            continue
        fields = line.split("\t")
        if len(fields) != n_fields:
            raise ConfigError(
                f"{path}:{lineno}: expected {n_fields} tab-separated fields, "
                f"got {len(fields)}"
            )
        rows.append((lineno, fields))
    return n_nodes, rows


def _parse_weight(path, lineno, text):
    try:
        w = float(text)
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: bad weight {text!r}") from exc
    if not np.isfinite(w) or w < 0:
        raise ConfigError(f"{path}:{lineno}: weight must be finite and >= 0, got {w}")
    return w


def read_edge_file(path) -> tuple[list[tuple[int, int, float]], int | None]:
    """Parse an edge-list file; returns (edges, declared node count or None)."""
    path = Path(path)
    n_nodes, rows = _parse_header_and_rows(path, 3)
    edges = []
    for lineno, (src, dst, w) in rows:
        edges.append((int(src), int(dst), _parse_weight(path, lineno, w)))
    return edges, n_nodes


def read_node_weights(path, n_nodes: int) -> np.ndarray:
    """Parse a node-weight file with lines "id<TAB>mu"."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"node-weight file not found: {path}")
    mu = np.ones(n_nodes)
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 'id<TAB>mu'")
        idx = int(fields[0])
        if not 0 <= idx < n_nodes:
            raise ConfigError(f"{path}:{lineno}: node id {idx} out of range")
        val = float(fields[1])
        if not np.isfinite(val) or val <= 0:
            raise ConfigError(f"{path}:{lineno}: node weight must be > 0, got {val}")
        mu[idx] = val
    return mu


def load_graph(path, weights_path=None) -> DiGraph:
    """Load a DiGraph from an edge file plus optional node-weight sibling.

    When ``weights_path`` is omitted, ``<path stem>.mu`` is used if it exists;
    otherwise all node weights default to 1.
    """
    path = Path(path)
    edges, n_declared = read_edge_file(path)
    if n_declared is None:
        if not edges:
            raise ConfigError(f"{path}: empty graph needs a '# nodes N' header")
        n_declared = 1 + max(max(s, d) for s, d, _ in edges)
    if weights_path is None:
        sibling = path.with_suffix(".mu")
        weights_path = sibling if sibling.exists() else None
    mu = None
    if weights_path is not None:
        mu = read_node_weights(weights_path, n_declared)
    try:
        return build_graph(edges, n_nodes=n_declared, node_weights=mu)
    except (IndexOutOfRangeError, NegativeWeightError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_graph(g: DiGraph, path, weights_path=None) -> None:
    """Write a graph in the edge-file format (plus node weights if given)."""
    path = Path(path)
    lines = [f"# nodes {g.n_nodes}"]
    w = g.dense_adjacency()
    for i, j in zip(*np.nonzero(w)):
        lines.append(f"{j}\t{i}\t{w[i, j]:.17g}")
    path.write_text("\n".join(lines) + "\n")
    if weights_path is not None:
        mu_lines = [f"{i}\t{m:.17g}" for i, m in enumerate(g.node_weights)]
        Path(weights_path).write_text("\n".join(mu_lines) + "\n")
