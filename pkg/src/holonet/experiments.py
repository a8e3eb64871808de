"""Synthetic data generators and reproducible desk-scale harnesses for the
scale-insensitivity and direction-sensitivity properties.

Real benchmark datasets are out of scope; the two generators below reproduce
the mathematical structure the theory predicts instead:

* ``direction_parity``: node labels are a pure function of edge directions
  (sources vs sinks with matched total degree), so symmetrizing the
  adjacency provably destroys the label signal.  Logistic-regression probes
  run at generation time to certify this.
* ``two_scale_regression``: clustered two-scale graphs whose regression
  target is computed from the *limit* graph only, making the ground truth
  scale-invariant by construction (the honest analogue of a molecular
  property that does not depend on the discretization).

Every harness is a pure function of (seed, config); CSV columns come out in
a fixed order so reruns are byte-identical.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.linear_model import LogisticRegression

from .coarse import (
    DEFAULT_C_GRID,
    TwoScaleGraph,
    _laplacian,
    build_limit_graph,
    filter_convergence_gap,
    project_down,
    resolvent_convergence_gap,
)
from .digraph import DiGraph, build_graph
from .errors import ConfigError
from .holocalc import FilterBankSpec, apply_filter
from .network import (
    GRAPH,
    HoloNet,
    TrainConfig,
    aggregate,
    bind,
    dir_resolvnet_config,
    fabernet_config,
    forward_features,
    init_params,
    predict,
    train_graph_regressor,
)

SUITE_HEADER = "c,resolvent_gap,filter_gap,node_gap,graph_gap"


@dataclass(frozen=True)
class SyntheticTaskSpec:
    """Seeded description of a synthetic dataset; generation is a pure
    function of this object."""

    kind: str
    n_nodes: int = 200
    n_graphs: int = 1
    feature_dim: int = 4
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("direction_parity", "two_scale_regression"):
            raise ConfigError(f"unknown task kind {self.kind!r}")
        if self.n_nodes < 2 or self.n_graphs < 1 or self.feature_dim < 1:
            raise ConfigError("need n_nodes >= 2, n_graphs >= 1, feature_dim >= 1")


# ---------------------------------------------------------------------------
# Direction-parity task
# ---------------------------------------------------------------------------

def symmetrize(graph: DiGraph) -> DiGraph:
    """Replace W by (W + W^T) / 2, erasing directional information."""
    w = graph.dense_adjacency()
    return DiGraph(node_weights=graph.node_weights, adjacency=(w + w.T) / 2.0)


def _direction_instance(rng, n_nodes, feature_dim, noise):
    labels = np.zeros(n_nodes, dtype=int)
    labels[n_nodes // 2:] = 1  # 0 = source, 1 = sink
    rng.shuffle(labels)
    out_stubs = max(1, min(6, n_nodes - 1))
    edges = []
    for i in range(n_nodes):
        others = np.delete(np.arange(n_nodes), i)
        picks = rng.choice(others, size=out_stubs, replace=True)
        if labels[i] == 0:
            edges.extend((int(i), int(t), 1.0) for t in picks)
        else:
            edges.extend((int(o), int(i), 1.0) for o in picks)
    graph = build_graph(edges, n_nodes=n_nodes)
    features = np.ones((n_nodes, feature_dim))
    if noise > 0:
        features = features + noise * rng.standard_normal(features.shape)
    return graph, features, labels


def degree_probe_accuracies(graph: DiGraph, labels) -> tuple[float, float]:
    """Train-set accuracy of logistic regression on directed degree features
    (in, out) versus the symmetrized degree."""
    din = graph.in_degrees()
    dout = graph.out_degrees()
    directed = np.column_stack([din, dout])
    sym = symmetrize(graph)
    sym_deg = np.column_stack([sym.in_degrees()])
    out = []
    for feats in (directed, sym_deg):
        clf = LogisticRegression(max_iter=2000)
        clf.fit(feats, labels)
        out.append(float(clf.score(feats, labels)))
    return out[0], out[1]


def gen_direction_task(spec: SyntheticTaskSpec, validate=True) -> list:
    """Generate (graph, features, labels) triples for the direction task.

    With ``validate`` on (and enough nodes for the probes to be meaningful),
    generation certifies that directed degree features separate the classes
    while symmetrized degrees do not.
    """
    if spec.kind != "direction_parity":
        raise ConfigError("spec.kind must be 'direction_parity'")
    rng = np.random.default_rng(spec.seed)
    dataset = []
    for _ in range(spec.n_graphs):
        graph, features, labels = _direction_instance(
            rng, spec.n_nodes, spec.feature_dim, spec.noise
        )
        if validate and spec.n_nodes >= 50:
            directed_acc, sym_acc = degree_probe_accuracies(graph, labels)
            if directed_acc < 0.9 or sym_acc > 0.55:
                raise ConfigError(
                    f"direction-parity generation failed its probes "
                    f"(directed {directed_acc:.3f}, symmetrized {sym_acc:.3f})"
                )
        dataset.append((graph, features, labels))
    return dataset


# ---------------------------------------------------------------------------
# Two-scale regression task
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoScaleRegressionData:
    """Graphs with per-graph scales, one-hot features, scale-invariant
    targets, and the latent readout vector that defined them."""

    graphs: tuple
    features: tuple
    targets: np.ndarray
    readout_vector: np.ndarray


def random_two_scale_graph(rng, n_clusters=4, max_satellites=3, feature_dim=6,
                           scale=1.0) -> tuple[TwoScaleGraph, np.ndarray]:
    """Cluster template: per cluster one heavy center with symmetric
    high-tier star edges to its satellites, plus directed regular-tier edges
    between clusters.  Node types are one-hot features; node weight = type + 1
    (satellites are type 0, so mu = 1, like a light atom)."""
    sizes = [1 + int(rng.integers(1, max_satellites + 1)) for _ in range(n_clusters)]
    n = sum(sizes)
    types = np.zeros(n, dtype=int)
    centers = []
    offset = 0
    members = []
    for size in sizes:
        centers.append(offset)
        members.append(list(range(offset, offset + size)))
        types[offset] = int(rng.integers(1, feature_dim))
        offset += size
    mu = types + 1.0
    w_high = np.zeros((n, n))
    for center, group in zip(centers, members):
        for sat in group[1:]:
            w = float(rng.uniform(1.0, 2.0))
            w_high[sat, center] = w
            w_high[center, sat] = w
    w_regular = np.zeros((n, n))
    for a in range(n_clusters):
        for b in range(n_clusters):
            if a == b:
                continue
            if rng.uniform() < 0.75:
                src = int(rng.choice(members[a]))
                dst = int(rng.choice(members[b]))
                w_regular[dst, src] += float(rng.uniform(0.2, 0.6))
    tsg = TwoScaleGraph(node_weights=mu, w_regular=w_regular, w_high=w_high,
                        scale=scale)
    features = np.zeros((n, feature_dim))
    features[np.arange(n), types] = 1.0
    return tsg, features


def limit_graph_target(tsg: TwoScaleGraph, features, readout_vector) -> float:
    """Ground truth computed from the limit graph only: pool a resolvent
    smoothing of the projected features and contract with a fixed vector.
    Scale-invariant by construction."""
    lg = build_limit_graph(tsg)
    x_bar = project_down(features, lg)
    spec = FilterBankSpec(kind="resolvent", order=1, pole=-1.0)
    smoothed = apply_filter(_laplacian(lg.graph), spec, [1.0], x_bar)
    omega = aggregate(smoothed, lg.graph.node_weights)
    return float(omega @ np.asarray(readout_vector))


def gen_two_scale_regression(spec: SyntheticTaskSpec) -> TwoScaleRegressionData:
    """Graphs drawn at log-uniform scales in [10, 100]; targets from the
    limit graphs plus optional observation noise."""
    if spec.kind != "two_scale_regression":
        raise ConfigError("spec.kind must be 'two_scale_regression'")
    rng = np.random.default_rng(spec.seed)
    readout_vector = rng.uniform(0.5, 1.5, spec.feature_dim) / 10.0
    graphs, feats, targets = [], [], []
    for _ in range(spec.n_graphs):
        n_clusters = max(2, spec.n_nodes // 4)
        scale = float(10 ** rng.uniform(1.0, 2.0))
        tsg, x = random_two_scale_graph(
            rng, n_clusters=n_clusters, feature_dim=spec.feature_dim, scale=scale
        )
        y = limit_graph_target(tsg, x, readout_vector)
        if spec.noise > 0:
            y += float(spec.noise * rng.standard_normal())
        graphs.append(tsg)
        feats.append(x)
        targets.append(y)
    return TwoScaleRegressionData(
        graphs=tuple(graphs), features=tuple(feats),
        targets=np.array(targets), readout_vector=readout_vector,
    )


# ---------------------------------------------------------------------------
# Deflection families and the theorem suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeflectionFamily:
    """One two-scale template deployed at a grid of weight scales.

    The regular tier is identical across the family; only c varies (modelling
    a deformation whose strength scales like an inverse distance)."""

    template: TwoScaleGraph
    c_grid: tuple = DEFAULT_C_GRID

    @classmethod
    def from_deflections(cls, template, deflections, base_scale=1.0):
        """Map deflection magnitudes to scales via c = base_scale / deflection."""
        deflections = np.asarray(deflections, dtype=float)
        if np.any(deflections <= 0):
            raise ConfigError("deflections must be positive")
        grid = tuple(sorted(float(base_scale / d) for d in deflections))
        return cls(template=template, c_grid=grid)

    def instances(self):
        return [self.template.at_scale(c) for c in self.c_grid]


def _random_features(rng, n, width):
    return rng.uniform(0.0, 1.0, (n, width))


def run_theorem_suite(family: DeflectionFamily, seed=0, widths=(6, 8, 8),
                      bank_order=3, nonlinearity="split_relu",
                      include_baseline=False):
    """Per scale c: resolvent, filter, node-level and graph-feature gaps
    between the fine graph and its limit description, with shared randomness
    across scales.

    Returns (rows, baseline_graph_gaps or None); each row is a tuple
    (c, resolvent_gap, filter_gap, node_gap, graph_gap).
    """
    rng = np.random.default_rng(seed)
    template = family.template
    n = template.n_nodes
    widths = tuple(widths)
    x = _random_features(rng, n, widths[0])
    theta = rng.uniform(-1.0, 1.0, bank_order)
    spec = FilterBankSpec(kind="resolvent", order=bank_order, pole=-1.0)

    res_rows = resolvent_convergence_gap(template, pole=-1.0, c_grid=family.c_grid)
    filt_rows = filter_convergence_gap(template, spec, theta, c_grid=family.c_grid)

    config = dir_resolvnet_config(widths, n_outputs=1, order=bank_order,
                                  nonlinearity=nonlinearity, mode=GRAPH)
    params = init_params(config, rng)
    lg = build_limit_graph(template)
    coarse_model = bind(params, lg.graph, config)
    x_bar = project_down(x, lg)
    feats_bar = forward_features(coarse_model, x_bar)
    omega_bar = aggregate(feats_bar, lg.graph.node_weights)
    lifted = lg.j_up @ feats_bar

    baseline = None
    if include_baseline:
        base_cfg = fabernet_config(widths, n_outputs=1, order=bank_order,
                                   alpha=0.5, nonlinearity=nonlinearity,
                                   mode=GRAPH)
        base_params = init_params(base_cfg, np.random.default_rng(seed + 1))
        base_coarse = bind(base_params, lg.graph, base_cfg)
        base_omega_bar = aggregate(forward_features(base_coarse, x_bar),
                                   lg.graph.node_weights)
        baseline = []

    mu = template.node_weights
    rows = []
    for idx, c in enumerate(family.c_grid):
        fine_graph = template.at_scale(c).graph()
        fine_model = bind(params, fine_graph, config)
        feats = forward_features(fine_model, x)
        node_gap = float(np.sqrt(np.sum(np.abs(feats - lifted) ** 2
                                        * mu[:, None])))
        omega = aggregate(feats, mu)
        graph_gap = float(np.linalg.norm(omega - omega_bar))
        rows.append((float(c), res_rows[idx][1], filt_rows[idx][1],
                     node_gap, graph_gap))
        if include_baseline:
            base_fine = bind(base_params, fine_graph, base_cfg)
            base_omega = aggregate(forward_features(base_fine, x), mu)
            baseline.append(float(np.linalg.norm(base_omega - base_omega_bar)))
    return rows, baseline


def write_suite_csv(rows, path) -> None:
    lines = [SUITE_HEADER]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_convergence_plot(rows, path) -> None:
    """Optional log-log rendering of the gap columns (vector graphics)."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError("plotting requires matplotlib (install extra 'plot')") \
            from exc
    rows = list(rows)
    c = [r[0] for r in rows]
    names = ["resolvent", "filter", "node", "graph"]
    fig, ax = plt.subplots(figsize=(5, 4))
    for k, name in enumerate(names, start=1):
        ax.loglog(c, [max(r[k], 1e-300) for r in rows], marker="o", label=name)
    ax.set_xlabel("weight scale c")
    ax.set_ylabel("gap to limit description")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Coarse-inference experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoarseInferenceResult:
    fine_mae: float
    coarse_mae: float

    @property
    def ratio(self) -> float:
        """coarse/fine MAE; 1 means collapsing costs nothing."""
        return self.coarse_mae / self.fine_mae


def _bind_fine(params, config, dataset, indices):
    return [bind(params, dataset.graphs[i].graph(), config) for i in indices]


def _eval_mae(models, inputs, targets) -> float:
    errs = []
    for model, x, y in zip(models, inputs, targets):
        _, pred = predict(model, x)
        errs.append(abs(float(pred[0]) - y))
    return float(np.mean(errs))


def run_coarse_inference(dataset: TwoScaleRegressionData, model_kind,
                         seed=0, hidden=(8,), bank_order=2,
                         train_cfg: TrainConfig = None,
                         train_fraction=0.75) -> CoarseInferenceResult:
    """Train on fine graphs, evaluate on fine and on collapsed test graphs.

    Collapsed inputs are the limit graphs with projected features, modelling
    a resolution-limited observation; the model parameters are reused as-is.
    """
    n = len(dataset.graphs)
    n_train = max(1, int(round(train_fraction * n)))
    if n_train >= n:
        n_train = n - 1
    train_idx = list(range(n_train))
    test_idx = list(range(n_train, n))
    feature_dim = dataset.features[0].shape[1]
    widths = (feature_dim,) + tuple(hidden)
    if model_kind == "dir_resolvnet":
        config = dir_resolvnet_config(widths, n_outputs=1, order=bank_order,
                                      mode=GRAPH)
    elif model_kind == "fabernet":
        config = fabernet_config(widths, n_outputs=1, order=bank_order,
                                 alpha=0.5, mode=GRAPH)
    else:
        raise ConfigError(f"unknown model kind {model_kind!r}")
    params = init_params(config, np.random.default_rng(seed))
    train_models = _bind_fine(params, config, dataset, train_idx)
    train_inputs = [dataset.features[i] for i in train_idx]
    train_targets = [float(dataset.targets[i]) for i in train_idx]
    train_graph_regressor(train_models, train_inputs, train_targets,
                          train_cfg or TrainConfig())

    test_models = _bind_fine(params, config, dataset, test_idx)
    test_inputs = [dataset.features[i] for i in test_idx]
    test_targets = [float(dataset.targets[i]) for i in test_idx]
    fine_mae = _eval_mae(test_models, test_inputs, test_targets)

    coarse_models, coarse_inputs = [], []
    for i in test_idx:
        lg = build_limit_graph(dataset.graphs[i])
        coarse_models.append(bind(params, lg.graph, config))
        coarse_inputs.append(project_down(dataset.features[i], lg))
    coarse_mae = _eval_mae(coarse_models, coarse_inputs, test_targets)
    return CoarseInferenceResult(fine_mae=fine_mae, coarse_mae=coarse_mae)
