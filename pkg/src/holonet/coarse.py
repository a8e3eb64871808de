"""Reaches, two-scale decompositions, limit graphs and the translation
operators between a graph and its coarse-grained description.

A *reach* is an inclusion-maximal reachable set: R(i) is everything reachable
from node i along edges of nonzero weight (including i), and the reaches are
the distinct R(i) not strictly contained in another.  Reaches generalize
connected components and may overlap on general digraphs; under the
Kirchhoff assumption (in-degree = out-degree inside the high-weight tier)
they partition the node set, which is what the limit-graph construction
requires.

The limit graph collapses each reach R of the high tier into one node with
aggregated weight mu_R = sum of member weights and aggregated edges
W_RP = sum over member pairs.  Signals translate via the weighted-average
projection J_down and the piecewise-constant interpolation J_up, which
satisfy J_down J_up = Id exactly and J_up J_down = the weighted projection
onto the span of the reach indicators.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .digraph import (
    DiGraph,
    OperatorKind,
    _parse_header_and_rows,
    _parse_weight,
    characteristic_operator,
    read_node_weights,
    weighted_operator_norm,
)
from .errors import ConfigError, OverlappingReachesError, ShapeMismatchError
from .holocalc import FilterBankSpec, _resolvent_dense, apply_filter

DEFAULT_C_GRID = (1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6)
_KIRCHHOFF_RTOL = 1e-9


@dataclass(frozen=True)
class ReachPartition:
    """The reaches of a digraph plus, when they are disjoint, the node-to-
    reach assignment.  ``assignment`` is None when reaches overlap."""

    reaches: tuple[frozenset, ...]
    assignment: np.ndarray | None

    @property
    def n_reaches(self) -> int:
        return len(self.reaches)

    @property
    def is_partition(self) -> bool:
        return self.assignment is not None


def _successor_lists(adjacency):
    """successors[j] = nodes i with an edge j -> i (i.e. W[i, j] > 0)."""
    if sp.issparse(adjacency):
        csc = sp.csc_array(adjacency)
        n = csc.shape[0]
        return [
            [int(i) for i, v in zip(
                csc.indices[csc.indptr[j]:csc.indptr[j + 1]],
                csc.data[csc.indptr[j]:csc.indptr[j + 1]]) if v > 0]
            for j in range(n)
        ]
    w = np.asarray(adjacency)
    return [list(np.nonzero(w[:, j] > 0)[0]) for j in range(w.shape[0])]


def _condensation_closures(succ):
    """Reachable-set bitmask per node, via Kosaraju SCCs + DAG propagation."""
    n = len(succ)
    order = []
    seen = [False] * n
    for start in range(n):
        if seen[start]:
            continue
        stack = [(start, iter(succ[start]))]
        seen[start] = True
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if not seen[nxt]:
                    seen[nxt] = True
                    stack.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()
    pred = [[] for _ in range(n)]
    for j, outs in enumerate(succ):
        for i in outs:
            pred[i].append(j)
    comp = [-1] * n
    n_comp = 0
    for start in reversed(order):
        if comp[start] != -1:
            continue
        stack = [start]
        comp[start] = n_comp
        while stack:
            node = stack.pop()
            for nxt in pred[node]:
                if comp[nxt] == -1:
                    comp[nxt] = n_comp
                    stack.append(nxt)
        n_comp += 1
    # Kosaraju numbers components in topological order of the condensation,
    # so successors of c always carry larger indices: sweep backwards.
    members = [0] * n_comp
    comp_succ = [set() for _ in range(n_comp)]
    for node in range(n):
        members[comp[node]] |= 1 << node
    for j, outs in enumerate(succ):
        for i in outs:
            if comp[j] != comp[i]:
                comp_succ[comp[j]].add(comp[i])
    closure = [0] * n_comp
    for c in reversed(range(n_comp)):
        mask = members[c]
        for d in comp_succ[c]:
            mask |= closure[d]
        closure[c] = mask
    return [closure[comp[node]] for node in range(n)]


def reaches(adjacency) -> ReachPartition:
    """Inclusion-maximal reachable sets of a nonnegative adjacency matrix.

    On Kirchhoff-balanced inputs the result partitions the nodes; on general
    inputs the sets may overlap and are returned as-is with ``assignment``
    set to None.
    """
    succ = _successor_lists(adjacency)
    n = len(succ)
    closures = _condensation_closures(succ)
    distinct = sorted(set(closures))
    maximal = [
        m for m in distinct
        if not any(other != m and (m | other) == other for other in distinct)
    ]
    # deterministic order: by smallest member node
    sets = sorted(
        (frozenset(i for i in range(n) if mask >> i & 1) for mask in maximal),
        key=min,
    )
    assignment = np.full(n, -1, dtype=int)
    total = 0
    for idx, members in enumerate(sets):
        total += len(members)
        for node in members:
            assignment[node] = idx
    if total != n or np.any(assignment < 0):
        assignment = None
    return ReachPartition(reaches=tuple(sets), assignment=assignment)


def kirchhoff_defect(w_high) -> float:
    """Max |in-degree - out-degree| over nodes, relative to the largest
    degree of the high tier."""
    w = w_high.toarray() if sp.issparse(w_high) else np.asarray(w_high)
    din = w.sum(axis=1)
    dout = w.sum(axis=0)
    scale = max(1.0, float(max(din.max(initial=0.0), dout.max(initial=0.0))))
    return float(np.max(np.abs(din - dout), initial=0.0)) / scale


@dataclass(frozen=True)
class TwoScaleGraph:
    """Weight matrix split W = w_regular + c * w_high with disjoint supports.

    The high tier must satisfy the Kirchhoff property (equal in- and
    out-degree per node within the tier), which guarantees that its reaches
    partition the nodes.
    """

    node_weights: np.ndarray
    w_regular: np.ndarray
    w_high: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        mu = np.asarray(self.node_weights, dtype=float)
        wr = np.asarray(self.w_regular, dtype=float)
        wh = np.asarray(self.w_high, dtype=float)
        object.__setattr__(self, "node_weights", mu)
        object.__setattr__(self, "w_regular", wr)
        object.__setattr__(self, "w_high", wh)
        n = mu.size
        if wr.shape != (n, n) or wh.shape != (n, n):
            raise ShapeMismatchError("tier matrices must be N x N")
        if np.any(wr < 0) or np.any(wh < 0):
            raise ShapeMismatchError("tier weights must be nonnegative")
        if self.scale <= 0:
            raise ShapeMismatchError("scale c must be positive")
        if np.any((wr > 0) & (wh > 0)):
            raise OverlappingReachesError("tier supports must be disjoint")
        defect = kirchhoff_defect(wh)
        if defect > _KIRCHHOFF_RTOL:
            raise OverlappingReachesError(
                f"high tier violates the Kirchhoff balance (defect {defect:.2e})"
            )
        for arr in (mu, wr, wh):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.node_weights.size

    def effective_adjacency(self) -> np.ndarray:
        return self.w_regular + self.scale * self.w_high

    def graph(self) -> DiGraph:
        return DiGraph(node_weights=self.node_weights,
                       adjacency=self.effective_adjacency())

    def at_scale(self, c: float) -> "TwoScaleGraph":
        return replace(self, scale=float(c))


@dataclass(frozen=True)
class LimitGraph:
    """Coarse-grained graph plus the reach partition and the translation
    operators (as dense matrices: j_up is N x K, j_down is K x N)."""

    graph: DiGraph
    partition: ReachPartition
    j_up: np.ndarray = field(repr=False)
    j_down: np.ndarray = field(repr=False)

    @property
    def n_reaches(self) -> int:
        return self.partition.n_reaches


def build_limit_graph(source: TwoScaleGraph | DiGraph, w_high=None) -> LimitGraph:
    """Collapse each high-tier reach into a single node.

    Aggregation uses the full effective adjacency: internal high-weight edges
    collapse onto the diagonal of the coarse W (kept as self-loops; they
    cancel inside D_in - W, so Laplacian-based results are unaffected), and
    node weights add up.
    """
    if isinstance(source, TwoScaleGraph):
        w_high = source.w_high
        w_full = source.effective_adjacency()
        mu = source.node_weights
    else:
        if w_high is None:
            raise ValueError("pass the high-tier matrix when giving a plain DiGraph")
        w_full = source.dense_adjacency()
        mu = source.node_weights
    part = reaches(w_high)
    if not part.is_partition:
        raise OverlappingReachesError(
            "high-tier reaches overlap; limit graph undefined"
        )
    n = mu.size
    k = part.n_reaches
    indicator = np.zeros((n, k))
    indicator[np.arange(n), part.assignment] = 1.0
    mu_bar = indicator.T @ mu
    w_bar = indicator.T @ w_full @ indicator
    coarse = DiGraph(node_weights=mu_bar, adjacency=w_bar)
    j_up = indicator
    j_down = (indicator.T * mu[None, :]) / mu_bar[:, None]
    j_up.setflags(write=False)
    j_down.setflags(write=False)
    return LimitGraph(graph=coarse, partition=part, j_up=j_up, j_down=j_down)


def project_down(x, lg: LimitGraph) -> np.ndarray:
    """Per-reach weighted average: (J_down x)_R = sum_{r in R} mu_r x_r / mu_R."""
    x = np.asarray(x)
    if x.shape[0] != lg.j_down.shape[1]:
        raise ShapeMismatchError(
            f"{x.shape[0]} feature rows vs {lg.j_down.shape[1]} fine nodes"
        )
    return lg.j_down @ x


def interpolate_up(u, lg: LimitGraph) -> np.ndarray:
    """Piecewise-constant interpolation: every node receives its reach's row."""
    u = np.asarray(u)
    if u.shape[0] != lg.j_up.shape[1]:
        raise ShapeMismatchError(
            f"{u.shape[0]} feature rows vs {lg.j_up.shape[1]} reaches"
        )
    return lg.j_up @ u


def high_kernel_projection(lg: LimitGraph) -> np.ndarray:
    """J_up J_down: the weighted projection onto span{1_R}."""
    return lg.j_up @ lg.j_down


def _laplacian(graph: DiGraph) -> np.ndarray:
    return characteristic_operator(graph, OperatorKind.IN_DEGREE_LAPLACIAN).dense()


def resolvent_convergence_gap(tsg: TwoScaleGraph, pole=-1.0,
                              c_grid=DEFAULT_C_GRID) -> list[tuple[float, float]]:
    """Theorem-1 diagnostic: per scale c, the weighted operator-norm gap
    || R_y(L) - J_up R_y(L_bar) J_down ||.

    The limit-graph resolvent is scale-independent, so the returned sequence
    should decay like O(1/c) once c dominates the regular tier.
    """
    pole = complex(pole)
    if pole.imag == 0:
        pole = pole.real
    lg = build_limit_graph(tsg)
    mu = tsg.node_weights
    r_bar = _resolvent_dense(_laplacian(lg.graph), pole)
    coarse_part = lg.j_up @ r_bar @ lg.j_down
    out = []
    for c in c_grid:
        if c <= 0:
            raise ValueError("scales must be positive")
        fine = tsg.at_scale(c).graph()
        r_fine = _resolvent_dense(_laplacian(fine), pole)
        gap = weighted_operator_norm(r_fine - coarse_part, mu)
        out.append((float(c), gap))
    return out


def filter_convergence_gap(tsg: TwoScaleGraph, spec: FilterBankSpec, theta,
                           c_grid=DEFAULT_C_GRID) -> list[tuple[float, float]]:
    """Theorem-2 diagnostic: the same gap for a full resolvent filter
    g_theta(L) = sum_k theta_k (L - y Id)^-k."""
    if spec.kind != "resolvent":
        raise ConfigError("filter-level convergence is a resolvent-bank property")
    lg = build_limit_graph(tsg)
    mu = tsg.node_weights
    eye_bar = np.eye(lg.n_reaches)
    g_bar = apply_filter(_laplacian(lg.graph), spec, theta, eye_bar)
    coarse_part = lg.j_up @ g_bar @ lg.j_down
    out = []
    for c in c_grid:
        fine = tsg.at_scale(c).graph()
        g_fine = apply_filter(_laplacian(fine), spec, theta, np.eye(tsg.n_nodes))
        gap = weighted_operator_norm(g_fine - coarse_part, mu)
        out.append((float(c), gap))
    return out


def write_gap_csv(rows, path) -> None:
    """Emit convergence results as CSV with header "c,gap"."""
    lines = ["c,gap"]
    for c, gap in rows:
        lines.append(f"{c:.17g},{gap:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Two-scale file format: edge lines carry a fourth tier column.
# ---------------------------------------------------------------------------

def load_two_scale(path, weights_path=None, scale=1.0) -> TwoScaleGraph:
    """Load "src<TAB>dst<TAB>weight<TAB>tier" lines, tier in {regular, high}."""
    path = Path(path)
    n_nodes, rows = _parse_header_and_rows(path, 4)
    edges = {"regular": [], "high": []}
    max_idx = -1
    for lineno, (src, dst, w, tier) in rows:
        if tier not in edges:
            raise ConfigError(
                f"{path}:{lineno}: tier must be 'regular' or 'high', got {tier!r}"
            )
        s, d = int(src), int(dst)
        max_idx = max(max_idx, s, d)
        edges[tier].append((s, d, _parse_weight(path, lineno, w)))
    if n_nodes is None:
        n_nodes = max_idx + 1
    if n_nodes <= 0:
        raise ConfigError(f"{path}: empty two-scale graph needs a '# nodes N' header")
    mu = np.ones(n_nodes)
    if weights_path is None:
        sibling = path.with_suffix(".mu")
        weights_path = sibling if sibling.exists() else None
    if weights_path is not None:
        mu = read_node_weights(weights_path, n_nodes)
    mats = {}
    for tier, triples in edges.items():
        w = np.zeros((n_nodes, n_nodes))
        for s, d, val in triples:
            if not (0 <= s < n_nodes and 0 <= d < n_nodes):
                raise ConfigError(f"{path}: edge ({s}, {d}) out of range")
            w[d, s] += val
        mats[tier] = w
    return TwoScaleGraph(node_weights=mu, w_regular=mats["regular"],
                         w_high=mats["high"], scale=scale)


def write_two_scale(tsg: TwoScaleGraph, path, weights_path=None) -> None:
    path = Path(path)
    lines = [f"# nodes {tsg.n_nodes}"]
    for tier, w in (("regular", tsg.w_regular), ("high", tsg.w_high)):
        for i, j in zip(*np.nonzero(w)):
            lines.append(f"{j}\t{i}\t{w[i, j]:.17g}\t{tier}")
    path.write_text("\n".join(lines) + "\n")
    if weights_path is not None:
        mu_lines = [f"{i}\t{m:.17g}" for i, m in enumerate(tsg.node_weights)]
        Path(weights_path).write_text("\n".join(mu_lines) + "\n")
