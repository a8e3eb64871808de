"""HoloNet layers and models: spectral convolutions over precomputed filter
banks, with hand-written reverse-mode gradients.

The layer update is

    X^l = rho( alpha * sum_i Psi_i^fwd(T) X^(l-1) W_i^fwd
               + (1 - alpha) * sum_i Psi_i^bwd(T*) X^(l-1) W_i^bwd
               + B^l )

where T* is the adjoint of T in the node-weighted inner product and rho acts
separately on real and imaginary parts.  Bias matrices are constrained to be
constant per column (each column a multiple of the all-ones vector); they are
stored as plain F-vectors, which enforces the constraint structurally and
makes the coarse-graining identities J_down B = B_bar hold for free.

Two model flavours ship:

* FaberNet: discounted-monomial banks on the zero-diagonal normalized
  adjacency, aimed at direction-sensitive node tasks.
* Dir-ResolvNet: resolvent-power banks (starting at power 1, enforced
  structurally) on the in-degree Laplacian, whose graph-level features are
  insensitive to the resolution scale of the graph.

Complex parameters are supported throughout; gradients for a complex tensor
P are reported as dL/dRe(P) + i dL/dIm(P), so viewing complex arrays as
interleaved float64 pairs turns every optimizer update into a real one.
"""

import base64
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .digraph import DiGraph, OperatorKind, characteristic_operator, weighted_adjoint
from .errors import (
    ConfigError,
    NonFiniteLossError,
    NonRealBankError,
    ShapeMismatchError,
)
from .holocalc import RESOLVENT, FilterBankSpec, PrecomputedBank, build_bank

SPLIT_RELU = "split_relu"
SPLIT_ABS = "split_abs"
NONLINEARITIES = (SPLIT_RELU, SPLIT_ABS)

REAL = "real"
COMPLEX = "complex"

NODE = "node"
GRAPH = "graph"


# ---------------------------------------------------------------------------
# Parameters and configuration
# ---------------------------------------------------------------------------

@dataclass
class LayerParams:
    """One layer's learnables: per-atom forward/backward mixing matrices of
    shape (F_in, F_out) and a constant-per-column bias stored as (F_out,)."""

    w_fwd: list
    w_bwd: list
    bias: np.ndarray


@dataclass
class HoloNetParams:
    """Graph-independent learnables shared by all deployments of a model."""

    layers: list
    readout_weight: np.ndarray
    readout_bias: np.ndarray

    def tensors(self) -> list:
        """All parameter arrays in a fixed traversal order."""
        out = []
        for layer in self.layers:
            out.extend(layer.w_fwd)
            out.extend(layer.w_bwd)
            out.append(layer.bias)
        out.append(self.readout_weight)
        out.append(self.readout_bias)
        return out


@dataclass(frozen=True)
class ModelConfig:
    """Architecture description: operator, bank, widths (input through final
    feature width), readout size and the scalar field of the parameters."""

    operator_kind: OperatorKind
    bank: FilterBankSpec
    widths: tuple
    n_outputs: int
    alpha: float = 0.5
    nonlinearity: str = SPLIT_RELU
    scalar_field: str = REAL
    mode: str = NODE

    def __post_init__(self):
        object.__setattr__(self, "operator_kind", OperatorKind(self.operator_kind))
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if not self.widths or any(w < 1 for w in self.widths):
            raise ConfigError("widths must be a nonempty tuple of positive ints")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.scalar_field not in (REAL, COMPLEX):
            raise ConfigError(f"scalar_field must be 'real' or 'complex'")
        if self.mode not in (NODE, GRAPH):
            raise ConfigError(f"mode must be 'node' or 'graph'")

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @property
    def features_complex(self) -> bool:
        if self.scalar_field == COMPLEX:
            return True
        return self.bank.kind == RESOLVENT and complex(self.bank.pole).imag != 0

    @property
    def readout_in(self) -> int:
        if self.mode == GRAPH:
            return self.widths[-1]
        return (2 if self.features_complex else 1) * self.widths[-1]


def fabernet_config(widths, n_outputs, order=2, gamma=0.5, include_order_zero=True,
                    alpha=0.5, nonlinearity=SPLIT_RELU, scalar_field=REAL,
                    mode=NODE) -> ModelConfig:
    """FaberNet: monomial bank on the zero-diagonal normalized adjacency."""
    bank = FilterBankSpec(kind="faber", order=order, gamma=gamma,
                          include_order_zero=include_order_zero)
    return ModelConfig(OperatorKind.FABERNET_NORMALIZED, bank, tuple(widths),
                       n_outputs, alpha, nonlinearity, scalar_field, mode)


def dir_resolvnet_config(widths, n_outputs, order=2, pole=-1.0, alpha=1.0,
                         nonlinearity=SPLIT_RELU, scalar_field=REAL,
                         mode=GRAPH) -> ModelConfig:
    """Dir-ResolvNet: resolvent-power bank on the in-degree Laplacian.

    Resolvent banks structurally start at power 1 (no order-zero atom); the
    scale-insensitivity results require it.
    """
    bank = FilterBankSpec(kind="resolvent", order=order, pole=pole)
    return ModelConfig(OperatorKind.IN_DEGREE_LAPLACIAN, bank, tuple(widths),
                       n_outputs, alpha, nonlinearity, scalar_field, mode)


@dataclass
class HoloNet:
    """A parameter set bound to one graph's precomputed banks."""

    config: ModelConfig
    params: HoloNetParams
    fwd_bank: PrecomputedBank
    bwd_bank: PrecomputedBank
    mu: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.mu.size


def _param_dtype(config):
    return np.complex128 if config.scalar_field == COMPLEX else np.float64


def init_params(config: ModelConfig, rng) -> HoloNetParams:
    """Uniform init in [-s, s] with s = (fan_in * atom_count)^(-1/2); complex
    parameters draw real and imaginary parts independently."""
    n_atoms = config.bank.n_atoms
    dtype = _param_dtype(config)

    def uniform(shape, s):
        if dtype == np.complex128:
            return (rng.uniform(-s, s, shape) + 1j * rng.uniform(-s, s, shape))
        return rng.uniform(-s, s, shape)

    layers = []
    for f_in, f_out in zip(config.widths[:-1], config.widths[1:]):
        s = 1.0 / np.sqrt(f_in * n_atoms)
        layers.append(LayerParams(
            w_fwd=[uniform((f_in, f_out), s) for _ in range(n_atoms)],
            w_bwd=[uniform((f_in, f_out), s) for _ in range(n_atoms)],
            bias=np.zeros(f_out, dtype=dtype),
        ))
    s = 1.0 / np.sqrt(config.readout_in)
    readout_weight = rng.uniform(-s, s, (config.readout_in, config.n_outputs))
    readout_bias = np.zeros(config.n_outputs)
    return HoloNetParams(layers=layers, readout_weight=readout_weight,
                         readout_bias=readout_bias)


def bind(params: HoloNetParams, graph: DiGraph, config: ModelConfig) -> HoloNet:
    """Precompute the forward/backward banks of ``graph`` and attach them.

    The backward bank lives on the adjoint of the operator taken in the
    weighted inner product (M^-1 T^T M for real T), so <x, Ty> = <T*x, y>
    holds with the node-weighted metric.
    """
    op = characteristic_operator(graph, config.operator_kind)
    t = op.dense()
    t_adj = weighted_adjoint(t, graph.node_weights)
    fwd_bank = build_bank(t, config.bank)
    bwd_bank = build_bank(t_adj, config.bank)
    return HoloNet(config=config, params=params, fwd_bank=fwd_bank,
                   bwd_bank=bwd_bank, mu=graph.node_weights)


def build_model(graph: DiGraph, config: ModelConfig, seed=0) -> HoloNet:
    return bind(init_params(config, np.random.default_rng(seed)), graph, config)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _apply_nonlinearity(z, kind):
    if np.iscomplexobj(z):
        if kind == SPLIT_RELU:
            return np.maximum(z.real, 0.0) + 1j * np.maximum(z.imag, 0.0)
        return np.abs(z.real) + 1j * np.abs(z.imag)
    return np.maximum(z, 0.0) if kind == SPLIT_RELU else np.abs(z)


def _nonlinearity_grad(pre, d_post, kind):
    """Chain d_post through rho; subgradient 0 at the kinks."""
    if kind == SPLIT_RELU:
        factor_re = (pre.real > 0).astype(float)
        factor_im = (pre.imag > 0).astype(float) if np.iscomplexobj(pre) else None
    else:
        factor_re = np.sign(pre.real)
        factor_im = np.sign(pre.imag) if np.iscomplexobj(pre) else None
    if np.iscomplexobj(pre):
        return d_post.real * factor_re + 1j * (d_post.imag * factor_im)
    return d_post * factor_re


def layer_forward(x, layer: LayerParams, fwd_atoms, bwd_atoms, alpha,
                  nonlinearity) -> np.ndarray:
    """One update step; pure function used by the cached forward as well."""
    pre = _layer_preactivation(x, layer, fwd_atoms, bwd_atoms, alpha)[0]
    return _apply_nonlinearity(pre, nonlinearity)


def _layer_preactivation(x, layer, fwd_atoms, bwd_atoms, alpha):
    if x.shape[1] != layer.w_fwd[0].shape[0]:
        raise ShapeMismatchError(
            f"feature width {x.shape[1]} vs layer input {layer.w_fwd[0].shape[0]}"
        )
    prop_fwd = [a @ x for a in fwd_atoms] if alpha > 0 else None
    prop_bwd = [a @ x for a in bwd_atoms] if alpha < 1 else None
    pre = np.zeros((x.shape[0], layer.bias.size),
                   dtype=np.result_type(x.dtype, layer.bias.dtype,
                                        fwd_atoms[0].dtype))
    if prop_fwd is not None:
        for p, w in zip(prop_fwd, layer.w_fwd):
            pre += alpha * (p @ w)
    if prop_bwd is not None:
        for p, w in zip(prop_bwd, layer.w_bwd):
            pre += (1.0 - alpha) * (p @ w)
    pre += layer.bias[None, :]
    return pre, prop_fwd, prop_bwd


def _input_dtype(model):
    if model.config.features_complex or any(
        np.iscomplexobj(a) for a in model.fwd_bank.atoms
    ):
        return np.complex128
    return np.float64


def _forward_cached(model: HoloNet, x):
    x = np.atleast_2d(np.asarray(x)).astype(_input_dtype(model))
    if x.shape[0] != model.n_nodes:
        raise ShapeMismatchError(f"{x.shape[0]} feature rows vs {model.n_nodes} nodes")
    if x.shape[1] != model.config.widths[0]:
        raise ShapeMismatchError(
            f"input width {x.shape[1]} vs configured {model.config.widths[0]}"
        )
    cur = x
    caches = []
    alpha = model.config.alpha
    rho = model.config.nonlinearity
    for layer in model.params.layers:
        pre, prop_fwd, prop_bwd = _layer_preactivation(
            cur, layer, model.fwd_bank.atoms, model.bwd_bank.atoms, alpha
        )
        caches.append((cur, pre, prop_fwd, prop_bwd))
        cur = _apply_nonlinearity(pre, rho)
    return cur, caches


def forward_features(model: HoloNet, x) -> np.ndarray:
    """Node-level output of the layer stack (the feature map Phi)."""
    return _forward_cached(model, x)[0]


def aggregate(x, mu) -> np.ndarray:
    """Graph-level pooling Omega(X)_j = sum_i |X_ij| mu_i.

    Nonnegative, permutation-invariant, and compatible with interpolation
    from a coarse graph: Omega(J_up u) = Omega_bar(u).
    """
    x = np.atleast_2d(np.asarray(x))
    mu = np.asarray(mu)
    if x.shape[0] != mu.size:
        raise ShapeMismatchError(f"{x.shape[0]} feature rows vs {mu.size} weights")
    return np.sum(np.abs(x) * mu[:, None], axis=0)


def _readout_input(features, config):
    if config.mode == GRAPH:
        raise AssertionError("graph mode readout consumes aggregated features")
    if config.features_complex:
        return np.hstack([features.real, features.imag])
    return features


def predict(model: HoloNet, x):
    """Forward pass through readout.

    Node mode returns (features, logits) with logits of shape (N, n_outputs);
    graph mode returns (features, output vector of shape (n_outputs,)).
    """
    features, _ = _forward_cached(model, x)
    p = model.params
    if model.config.mode == GRAPH:
        omega = aggregate(features, model.mu)
        return features, omega @ p.readout_weight + p.readout_bias
    r = _readout_input(features, model.config)
    return features, r @ p.readout_weight + p.readout_bias


def model_forward(model: HoloNet, x):
    """Spec-level forward: node outputs plus the mode's readout output."""
    return predict(model, x)


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def softmax_cross_entropy(logits, labels, mask=None):
    """Mean cross-entropy over (masked) nodes; returns (loss, dloss/dlogits)."""
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n = logits.shape[0]
    if mask is None:
        mask = np.ones(n, dtype=bool)
    count = int(mask.sum())
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    loss = -float(log_p[np.arange(n), labels][mask].mean())
    grad = np.exp(log_p)
    grad[np.arange(n), labels] -= 1.0
    grad[~mask] = 0.0
    return loss, grad / count


def mean_absolute_error(pred, target):
    """MAE with subgradient sign (0 at exact hits); returns (loss, dpred)."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    diff = pred - target
    return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size


def accuracy(logits, labels, mask=None) -> float:
    labels = np.asarray(labels)
    pred = np.asarray(logits).argmax(axis=1)
    hits = pred == labels
    if mask is not None:
        hits = hits[np.asarray(mask)]
    return float(np.mean(hits))


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------

def _zeros_like_params(params):
    return [np.zeros_like(t) for t in params.tensors()]


def _backward(model: HoloNet, caches, d_features):
    """Backpropagate d(loss)/d(features) through the layer stack.

    Returns (layer gradients in forward order, gradient w.r.t. the input x).
    Complex gradients follow the dL/dRe + i dL/dIm convention, under which
    the chain rule through Y = C B reads dB = C^H dY and dC = dY B^H.
    """
    alpha = model.config.alpha
    rho = model.config.nonlinearity
    fwd_adj = [np.conj(a).T for a in model.fwd_bank.atoms]
    bwd_adj = [np.conj(a).T for a in model.bwd_bank.atoms]
    layer_grads = []
    d_cur = d_features
    for layer, (inp, pre, prop_fwd, prop_bwd) in zip(
        reversed(model.params.layers), reversed(caches)
    ):
        d_pre = _nonlinearity_grad(pre, d_cur, rho)
        d_inp = np.zeros_like(inp)
        g_fwd = [np.zeros_like(w) for w in layer.w_fwd]
        g_bwd = [np.zeros_like(w) for w in layer.w_bwd]
        if prop_fwd is not None:
            for i, (prop, w) in enumerate(zip(prop_fwd, layer.w_fwd)):
                g_fwd[i] = alpha * (np.conj(prop).T @ d_pre)
                d_inp += alpha * (fwd_adj[i] @ d_pre @ np.conj(w).T)
        if prop_bwd is not None:
            for i, (prop, w) in enumerate(zip(prop_bwd, layer.w_bwd)):
                g_bwd[i] = (1.0 - alpha) * (np.conj(prop).T @ d_pre)
                d_inp += (1.0 - alpha) * (bwd_adj[i] @ d_pre @ np.conj(w).T)
        g_bias = d_pre.sum(axis=0)
        layer_grads.append((g_fwd, g_bwd, g_bias))
        d_cur = d_inp
    layer_grads.reverse()
    return layer_grads, d_cur


def _aggregate_grad(features, mu, d_omega):
    """d(loss)/d(features) through Omega; zero at exactly-zero entries."""
    mags = np.abs(features)
    direction = np.zeros_like(features)
    nz = mags > 0
    direction[nz] = features[nz] / mags[nz]
    return direction * mu[:, None] * d_omega[None, :]


def loss_and_gradients(model: HoloNet, x, task, target, mask=None):
    """Forward + backward for one graph.

    ``task`` is "node_classification" (target = integer labels, optional
    mask) or "graph_regression" (target = output vector).  Returns
    (loss, gradient list aligned with ``params.tensors()``, auxiliary output).
    """
    features, caches = _forward_cached(model, x)
    p = model.params
    if task == "node_classification":
        if model.config.mode != NODE:
            raise ConfigError("node classification needs a node-mode model")
        r = _readout_input(features, model.config)  # always real
        logits = r @ p.readout_weight + p.readout_bias
        loss, d_logits = softmax_cross_entropy(logits, target, mask)
        g_rw = r.T @ d_logits
        g_rb = d_logits.sum(axis=0)
        d_r = d_logits @ p.readout_weight.T
        if model.config.features_complex:
            f = model.config.widths[-1]
            d_features = d_r[:, :f] + 1j * d_r[:, f:]
        else:
            d_features = d_r
        aux = logits
    elif task == "graph_regression":
        if model.config.mode != GRAPH:
            raise ConfigError("graph regression needs a graph-mode model")
        omega = aggregate(features, model.mu)
        pred = omega @ p.readout_weight + p.readout_bias
        loss, d_pred = mean_absolute_error(pred, target)
        g_rw = np.outer(omega, d_pred)
        g_rb = d_pred
        d_omega = p.readout_weight @ d_pred
        d_features = _aggregate_grad(features, model.mu, d_omega)
        if not np.iscomplexobj(features):
            d_features = d_features.real
        aux = pred
    else:
        raise ConfigError(f"unknown task {task!r}")
    layer_grads, _ = _backward(model, caches, d_features)
    grads = []
    for g_fwd, g_bwd, g_bias in layer_grads:
        grads.extend(g_fwd)
        grads.extend(g_bwd)
        grads.append(g_bias)
    grads.append(g_rw)
    grads.append(g_rb)
    return loss, grads, aux


# ---------------------------------------------------------------------------
# Optimizers and training
# ---------------------------------------------------------------------------

def _float_views(tensors):
    """Real views of (possibly complex) parameter arrays, sharing memory."""
    return [t.view(np.float64) if np.iscomplexobj(t) else t for t in tensors]


@dataclass
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 0.01
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.optimizer not in ("adam", "gd"):
            raise ConfigError("optimizer must be 'adam' or 'gd'")


class _Optimizer:
    def __init__(self, tensors, cfg: TrainConfig):
        self.cfg = cfg
        self.views = _float_views(tensors)
        self.step_count = 0
        if cfg.optimizer == "adam":
            self.m = [np.zeros_like(v) for v in self.views]
            self.v = [np.zeros_like(v) for v in self.views]

    def step(self, grads):
        cfg = self.cfg
        grad_views = _float_views(grads)
        self.step_count += 1
        if cfg.optimizer == "gd":
            for view, g in zip(self.views, grad_views):
                view -= cfg.learning_rate * g
            return
        b1, b2 = cfg.beta1, cfg.beta2
        t = self.step_count
        for view, g, m, v in zip(self.views, grad_views, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** t)
            v_hat = v / (1 - b2 ** t)
            view -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


def _check_finite(loss, epoch):
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"non-finite loss at epoch {epoch}")


def train_node_classifier(model: HoloNet, x, labels, cfg: TrainConfig = None,
                          mask=None) -> list:
    """Full-batch training on one graph; returns the loss curve."""
    cfg = cfg or TrainConfig()
    opt = _Optimizer(model.params.tensors(), cfg)
    losses = []
    for epoch in range(cfg.epochs):
        loss, grads, _ = loss_and_gradients(
            model, x, "node_classification", labels, mask
        )
        _check_finite(loss, epoch)
        losses.append(loss)
        opt.step(grads)
    return losses


def train_graph_regressor(models, inputs, targets, cfg: TrainConfig = None) -> list:
    """Full-batch training over a list of bound models sharing one
    HoloNetParams instance; gradients average over graphs."""
    cfg = cfg or TrainConfig()
    params = models[0].params
    if any(m.params is not params for m in models):
        raise ConfigError("all models must share the same parameter object")
    opt = _Optimizer(params.tensors(), cfg)
    losses = []
    for epoch in range(cfg.epochs):
        total = 0.0
        acc = None
        for model, x, target in zip(models, inputs, targets):
            loss, grads, _ = loss_and_gradients(
                model, x, "graph_regression", target
            )
            total += loss
            if acc is None:
                acc = grads
            else:
                for a, g in zip(acc, grads):
                    a += g
        mean_loss = total / len(models)
        _check_finite(mean_loss, epoch)
        losses.append(mean_loss)
        scale = 1.0 / len(models)
        opt.step([g * scale for g in acc])
    return losses


def train(model_or_models, task, data, cfg: TrainConfig = None):
    """Dispatching front door for the two supported tasks.

    ``data`` is a dict: {"x", "labels", optional "mask"} for node
    classification on a single bound model, or {"inputs", "targets"} for
    graph regression over a list of bound models sharing parameters.
    """
    if task == "node_classification":
        return train_node_classifier(
            model_or_models, data["x"], data["labels"], cfg, data.get("mask")
        )
    if task == "graph_regression":
        return train_graph_regressor(
            model_or_models, data["inputs"], data["targets"], cfg
        )
    raise ConfigError(f"unknown task {task!r}")


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

def _min_kink_distance(model, x, task, target):
    """Smallest distance of any pre-activation component (and, for MAE, of
    the prediction-target residual) to a nonlinearity kink."""
    features, caches = _forward_cached(model, x)
    dist = np.inf
    for _, pre, _, _ in caches:
        dist = min(dist, float(np.min(np.abs(pre.real))))
        if np.iscomplexobj(pre):
            dist = min(dist, float(np.min(np.abs(pre.imag))))
    if task == "graph_regression":
        omega = aggregate(features, model.mu)
        pred = omega @ model.params.readout_weight + model.params.readout_bias
        dist = min(dist, float(np.min(np.abs(pred - np.asarray(target)))))
        if np.iscomplexobj(features):
            # the complex modulus curves like 1/|x|, which inflates the
            # finite-difference truncation error: keep magnitudes >= 100x
            # the kink threshold
            mags = np.abs(features)
            nonzero = mags[mags > 0]
            if nonzero.size:
                dist = min(dist, float(nonzero.min()) / 100.0)
    return dist


def jitter_inputs(model, x, task, target, rng, threshold=1e-4, attempts=64):
    """Perturb x until no pre-activation sits within ``threshold`` of a kink
    (finite differences would otherwise straddle the subgradient)."""
    x = np.atleast_2d(np.asarray(x)).astype(float)
    for _ in range(attempts):
        if _min_kink_distance(model, x, task, target) > threshold:
            return x
        x = x + rng.normal(scale=10 * threshold, size=x.shape)
    raise ValueError("could not jitter inputs away from nonlinearity kinks")


def gradcheck(model: HoloNet, x, task, target, mask=None, step=1e-6) -> float:
    """Compare analytic gradients against central finite differences.

    Every real degree of freedom is perturbed (complex tensors through their
    interleaved real view).  Returns the worst componentwise error
    |g_analytic - g_fd| / max(1, |g_analytic|, |g_fd|).
    """
    _, grads, _ = loss_and_gradients(model, x, task, target, mask)
    views = _float_views(model.params.tensors())
    grad_views = _float_views(grads)
    worst = 0.0
    for view, g_view in zip(views, grad_views):
        flat = view.reshape(-1)
        g_flat = g_view.reshape(-1)
        for idx in range(flat.size):
            saved = flat[idx]
            flat[idx] = saved + step
            up, _, _ = loss_and_gradients(model, x, task, target, mask)
            flat[idx] = saved - step
            down, _, _ = loss_and_gradients(model, x, task, target, mask)
            flat[idx] = saved
            fd = (up - down) / (2 * step)
            err = abs(g_flat[idx] - fd) / max(1.0, abs(g_flat[idx]), abs(fd))
            worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# Complex-to-real expansion (width doubling)
# ---------------------------------------------------------------------------

def stack_real_imag(x) -> np.ndarray:
    """Represent complex features as horizontally stacked real blocks."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    return np.hstack([x.real, x.imag])


def _expand_weight(w):
    """Real 2x2-block realization of right-multiplication by a complex W.

    With row features stacked as [re | im], complex multiplication becomes
    [re | im] @ [[W_re, W_im], [-W_im, W_re]].
    """
    w = np.asarray(w, dtype=complex)
    return np.block([[w.real, w.imag], [-w.imag, w.real]])


def expand_complex_to_real(model: HoloNet) -> HoloNet:
    """Double every width to trade complex parameters for real ones.

    Requires purely real bank atoms.  For every input x the expanded model's
    features equal the stacked (real, imaginary) parts of the original
    model's features exactly up to roundoff.  The node-mode readout transfers
    exactly (its input already is the stacked representation); graph-mode
    aggregation of complex moduli has no real-linear counterpart, so there
    the readout is carried on the real half only and the equivalence is at
    feature level.
    """
    cfg = model.config
    if cfg.scalar_field != COMPLEX:
        raise ConfigError("model already uses real parameters")
    if not (model.fwd_bank.purely_real and model.bwd_bank.purely_real):
        raise NonRealBankError("expansion requires purely real bank atoms")
    new_cfg = replace(
        cfg,
        widths=tuple(2 * w for w in cfg.widths),
        scalar_field=REAL,
    )
    layers = []
    for layer in model.params.layers:
        layers.append(LayerParams(
            w_fwd=[_expand_weight(w) for w in layer.w_fwd],
            w_bwd=[_expand_weight(w) for w in layer.w_bwd],
            bias=np.concatenate([layer.bias.real, layer.bias.imag]),
        ))
    if cfg.mode == NODE:
        readout_weight = model.params.readout_weight.copy()
    else:
        readout_weight = np.vstack([
            model.params.readout_weight,
            np.zeros_like(model.params.readout_weight),
        ])
    new_params = HoloNetParams(
        layers=layers,
        readout_weight=readout_weight,
        readout_bias=model.params.readout_bias.copy(),
    )
    return HoloNet(config=new_cfg, params=new_params,
                   fwd_bank=model.fwd_bank, bwd_bank=model.bwd_bank,
                   mu=model.mu)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

_CHECKPOINT_FORMAT = "holonet-checkpoint-v1"


def _encode_array(a) -> dict:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {
            "shape": list(a.shape),
            "dtype": "complex128",
            "re": base64.b64encode(
                np.ascontiguousarray(a.real, dtype="<f8").tobytes()).decode(),
            "im": base64.b64encode(
                np.ascontiguousarray(a.imag, dtype="<f8").tobytes()).decode(),
        }
    return {
        "shape": list(a.shape),
        "dtype": "float64",
        "re": base64.b64encode(
            np.ascontiguousarray(a, dtype="<f8").tobytes()).decode(),
    }


def _decode_array(d) -> np.ndarray:
    shape = tuple(d["shape"])
    re = np.frombuffer(base64.b64decode(d["re"]), dtype="<f8").reshape(shape)
    if d["dtype"] == "complex128":
        im = np.frombuffer(base64.b64decode(d["im"]), dtype="<f8").reshape(shape)
        return re + 1j * im
    return re.copy()


def _config_to_dict(cfg: ModelConfig) -> dict:
    bank = cfg.bank
    return {
        "operator_kind": cfg.operator_kind.value,
        "bank": {
            "kind": bank.kind,
            "order": bank.order,
            "gamma": bank.gamma,
            "include_order_zero": bank.include_order_zero,
            "pole_real": complex(bank.pole).real,
            "pole_imag": complex(bank.pole).imag,
        },
        "widths": list(cfg.widths),
        "n_outputs": cfg.n_outputs,
        "alpha": cfg.alpha,
        "nonlinearity": cfg.nonlinearity,
        "scalar_field": cfg.scalar_field,
        "mode": cfg.mode,
    }


def _config_from_dict(d) -> ModelConfig:
    bank = FilterBankSpec(
        kind=d["bank"]["kind"],
        order=d["bank"]["order"],
        gamma=d["bank"]["gamma"],
        include_order_zero=d["bank"]["include_order_zero"],
        pole=complex(d["bank"]["pole_real"], d["bank"]["pole_imag"]),
    )
    return ModelConfig(
        operator_kind=OperatorKind(d["operator_kind"]),
        bank=bank,
        widths=tuple(d["widths"]),
        n_outputs=d["n_outputs"],
        alpha=d["alpha"],
        nonlinearity=d["nonlinearity"],
        scalar_field=d["scalar_field"],
        mode=d["mode"],
    )


def save_model(model: HoloNet, path) -> None:
    """Serialize architecture plus parameters (banks are re-derived from the
    graph on load, so only their spec is stored)."""
    payload = {
        "format": _CHECKPOINT_FORMAT,
        "config": _config_to_dict(model.config),
        "params": {
            "layers": [
                {
                    "w_fwd": [_encode_array(w) for w in layer.w_fwd],
                    "w_bwd": [_encode_array(w) for w in layer.w_bwd],
                    "bias": _encode_array(layer.bias),
                }
                for layer in model.params.layers
            ],
            "readout_weight": _encode_array(model.params.readout_weight),
            "readout_bias": _encode_array(model.params.readout_bias),
        },
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_model(path, graph: DiGraph) -> HoloNet:
    """Rebuild a checkpointed model on ``graph``; forward outputs reproduce
    the saved model's to floating-point equality."""
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != _CHECKPOINT_FORMAT:
        raise ConfigError(f"{path}: not a {_CHECKPOINT_FORMAT} file")
    cfg = _config_from_dict(payload["config"])
    raw = payload["params"]
    params = HoloNetParams(
        layers=[
            LayerParams(
                w_fwd=[_decode_array(w) for w in layer["w_fwd"]],
                w_bwd=[_decode_array(w) for w in layer["w_bwd"]],
                bias=_decode_array(layer["bias"]),
            )
            for layer in raw["layers"]
        ],
        readout_weight=_decode_array(raw["readout_weight"]),
        readout_bias=_decode_array(raw["readout_bias"]),
    )
    return bind(params, graph, cfg)
