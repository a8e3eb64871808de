"""Command-line entry point.

Subcommands: filter-apply, reaches, coarsen, converge, train, eval,
gradcheck, oracle-check.  Every subcommand (except oracle-check, which has
built-in defaults) takes one INI-style config file; unknown sections or keys
are rejected before any computation, and the fully resolved configuration is
echoed into the output directory so a run can be reproduced byte-for-byte.

Exit codes: 0 success, 1 failed assertion in a check subcommand, 2 config
error, 3 numerical failure.
"""

import argparse
import configparser
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .coarse import (
    DEFAULT_C_GRID,
    build_limit_graph,
    load_two_scale,
    project_down,
    reaches,
    resolvent_convergence_gap,
    write_gap_csv,
)
from .digraph import (
    OperatorKind,
    characteristic_operator,
    load_graph,
    write_graph,
)
from .errors import ConfigError, HoloNetError
from .experiments import (
    DeflectionFamily,
    SyntheticTaskSpec,
    gen_direction_task,
    gen_two_scale_regression,
    run_coarse_inference,
    run_theorem_suite,
    write_suite_csv,
)
from .holocalc import (
    Contour,
    FilterBankSpec,
    apply_filter,
    build_bank,
    bank_matches_contour,
    contour_apply,
    default_contour,
    matrix_polynomial,
    spectral_mapping_check,
)
from .network import (
    TrainConfig,
    accuracy,
    bind,
    build_model,
    dir_resolvnet_config,
    fabernet_config,
    gradcheck,
    init_params,
    jitter_inputs,
    load_model,
    predict,
    save_model,
    train_graph_regressor,
    train_node_classifier,
)

_SCHEMA = {
    "run": {"seed", "outdir", "threads"},
    "graph": {"path", "weights", "operator", "two_scale", "scale"},
    "bank": {"kind", "k", "gamma", "include_order_zero", "y_real", "y_imag"},
    "filter": {"theta", "features"},
    "model": {"kind", "widths", "outputs", "alpha", "nonlinearity", "field",
              "mode", "order", "gamma", "include_order_zero", "y_real",
              "y_imag"},
    "train": {"task", "epochs", "lr", "optimizer"},
    "task": {"kind", "n_nodes", "n_graphs", "feature_dim", "noise"},
    "converge": {"mode", "y_real", "y_imag", "c_grid", "plot", "baseline"},
    "eval": {"checkpoint"},
    "gradcheck": {"tolerance", "task"},
}


class RunConfig:
    """Validated view of one INI config file."""

    def __init__(self, sections: dict):
        self.sections = sections

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        sections = {}
        for name in parser.sections():
            if name not in _SCHEMA:
                raise ConfigError(f"{path}: unknown section [{name}]")
            body = dict(parser.items(name))
            unknown = set(body) - _SCHEMA[name]
            if unknown:
                raise ConfigError(
                    f"{path}: unknown key(s) {sorted(unknown)} in [{name}]"
                )
            sections[name] = body
        return cls(sections)

    def has(self, section) -> bool:
        return section in self.sections

    def get(self, section, key, default=None, required=False):
        value = self.sections.get(section, {}).get(key)
        if value is None:
            if required:
                raise ConfigError(f"missing required key '{key}' in [{section}]")
            return default
        return value

    def get_int(self, section, key, default=None, required=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be an integer") from exc

    def get_float(self, section, key, default=None, required=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be a number") from exc

    def get_bool(self, section, key, default=False):
        raw = self.get(section, key)
        if raw is None:
            return default
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"[{section}] {key} must be a boolean")

    def resolved_text(self, extra=None) -> str:
        lines = []
        merged = {k: dict(v) for k, v in self.sections.items()}
        for section, body in (extra or {}).items():
            merged.setdefault(section, {}).update(
                {k: v for k, v in body.items()
                 if k not in merged.get(section, {})}
            )
        for section in sorted(merged):
            lines.append(f"[{section}]")
            for key in sorted(merged[section]):
                lines.append(f"{key} = {merged[section][key]}")
            lines.append("")
        return "\n".join(lines)


def _outdir(cfg: RunConfig) -> Path:
    env = os.environ.get("HOLONET_OUTDIR")
    out = Path(env) if env else Path(cfg.get("run", "outdir", default="out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: RunConfig, out: Path, extra=None) -> None:
    (out / "resolved_config.ini").write_text(cfg.resolved_text(extra))


def _load_graph_section(cfg: RunConfig):
    path = cfg.get("graph", "path", required=True)
    weights = cfg.get("graph", "weights")
    if cfg.get_bool("graph", "two_scale"):
        scale = cfg.get_float("graph", "scale", default=1.0)
        return load_two_scale(path, weights_path=weights, scale=scale)
    return load_graph(path, weights_path=weights)


def _bank_spec(cfg: RunConfig, section="bank") -> FilterBankSpec:
    kind = cfg.get(section, "kind", required=True)
    order = cfg.get_int(section, "k", required=True)
    kwargs = {"kind": kind, "order": order}
    gamma = cfg.get_float(section, "gamma")
    if gamma is not None:
        kwargs["gamma"] = gamma
    raw_flag = cfg.get(section, "include_order_zero")
    if raw_flag is not None:
        kwargs["include_order_zero"] = cfg.get_bool(section, "include_order_zero")
    y_re = cfg.get_float(section, "y_real")
    y_im = cfg.get_float(section, "y_imag")
    if y_re is not None or y_im is not None:
        kwargs["pole"] = complex(y_re or 0.0, y_im or 0.0)
    return FilterBankSpec(**kwargs)


def _parse_c_grid(cfg: RunConfig):
    raw = cfg.get("converge", "c_grid")
    if raw is None:
        return DEFAULT_C_GRID
    try:
        grid = tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError("c_grid must be a comma list of numbers") from exc
    if not grid or any(c <= 0 for c in grid) or list(grid) != sorted(grid):
        raise ConfigError("c_grid must be positive and increasing")
    return grid


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_reaches(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    graph = _load_graph_section(cfg)
    adjacency = (graph.effective_adjacency()
                 if hasattr(graph, "effective_adjacency") else graph.adjacency)
    part = reaches(adjacency)
    lines = []
    for idx, members in enumerate(part.reaches):
        lines.append(f"reach {idx}: {{{', '.join(str(i) for i in sorted(members))}}}")
    lines.append(f"partition: {str(part.is_partition).lower()}")
    text = "\n".join(lines)
    print(text)
    (out / "reaches.txt").write_text(text + "\n")
    _echo_config(cfg, out)
    return 0


def _cmd_coarsen(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    tsg = _load_graph_section(cfg)
    if not hasattr(tsg, "w_high"):
        raise ConfigError("coarsen needs a two-scale graph (set two_scale = true)")
    lg = build_limit_graph(tsg)
    write_graph(lg.graph, out / "limit_graph.tsv", out / "limit_graph.mu")
    assign_lines = [f"{node}\t{reach}" for node, reach in
                    enumerate(lg.partition.assignment)]
    (out / "assignment.tsv").write_text("\n".join(assign_lines) + "\n")
    print(f"collapsed {tsg.n_nodes} nodes into {lg.n_reaches} reaches")
    _echo_config(cfg, out)
    return 0


def _cmd_filter_apply(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    graph = _load_graph_section(cfg)
    if hasattr(graph, "graph"):
        graph = graph.graph()
    op_name = cfg.get("graph", "operator", default="in_degree_laplacian")
    try:
        kind = OperatorKind(op_name)
    except ValueError as exc:
        raise ConfigError(f"unknown operator {op_name!r}") from exc
    op = characteristic_operator(graph, kind)
    spec = _bank_spec(cfg)
    raw_theta = cfg.get("filter", "theta", required=True)
    try:
        theta = np.array([complex(tok.strip().replace("i", "j"))
                          for tok in raw_theta.split(",") if tok.strip()])
    except ValueError as exc:
        raise ConfigError("theta must be a comma list of (complex) numbers") from exc
    if np.all(theta.imag == 0):
        theta = theta.real
    feat_path = cfg.get("filter", "features")
    if feat_path is None:
        x = np.ones((graph.n_nodes, 1))
    else:
        if not Path(feat_path).exists():
            raise ConfigError(f"feature file not found: {feat_path}")
        x = np.loadtxt(feat_path, delimiter="\t", ndmin=2)
    y = apply_filter(op.matrix, spec, theta, x)
    header = ",".join(f"f{j}" for j in range(y.shape[1]))
    rows = [header]
    for row in np.atleast_2d(y):
        rows.append(",".join(
            f"{v.real:.17g}" if np.isrealobj(y) or v.imag == 0
            else f"{v.real:.17g}{v.imag:+.17g}j" for v in row))
    (out / "filtered.csv").write_text("\n".join(rows) + "\n")
    (out / "bank.txt").write_text(spec.to_config_block())
    print(f"filtered {x.shape[1]} feature column(s) through "
          f"{spec.n_atoms} {spec.kind} atom(s)")
    _echo_config(cfg, out)
    return 0


def _cmd_converge(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    tsg = _load_graph_section(cfg)
    if not hasattr(tsg, "w_high"):
        raise ConfigError("converge needs a two-scale graph (set two_scale = true)")
    c_grid = _parse_c_grid(cfg)
    mode = cfg.get("converge", "mode", default="resolvent")
    seed = cfg.get_int("run", "seed", default=0)
    threads = cfg.get_int("run", "threads", default=1)
    if mode == "resolvent":
        pole = complex(cfg.get_float("converge", "y_real", default=-1.0),
                       cfg.get_float("converge", "y_imag", default=0.0))
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            def one(c):
                return resolvent_convergence_gap(tsg, pole=pole, c_grid=(c,))[0]

            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(one, c_grid))
        else:
            rows = resolvent_convergence_gap(tsg, pole=pole, c_grid=c_grid)
        write_gap_csv(rows, out / "gaps.csv")
        print(f"wrote {len(rows)} scales to gaps.csv "
              f"(first gap {rows[0][1]:.3e}, last {rows[-1][1]:.3e})")
    elif mode == "suite":
        family = DeflectionFamily(template=tsg, c_grid=c_grid)
        rows, baseline = run_theorem_suite(
            family, seed=seed, widths=(6, 8, 8),
            include_baseline=cfg.get_bool("converge", "baseline"),
        )
        write_suite_csv(rows, out / "suite.csv")
        if baseline is not None:
            lines = ["c,graph_gap"]
            for (c, *_), gap in zip(rows, baseline):
                lines.append(f"{c:.17g},{gap:.17g}")
            (out / "baseline.csv").write_text("\n".join(lines) + "\n")
        if cfg.get_bool("converge", "plot"):
            experiments.write_convergence_plot(rows, out / "convergence.svg")
        print(f"wrote theorem suite over {len(rows)} scales to suite.csv")
    else:
        raise ConfigError("converge mode must be 'resolvent' or 'suite'")
    _echo_config(cfg, out)
    return 0


def _task_spec(cfg: RunConfig, default_kind) -> SyntheticTaskSpec:
    return SyntheticTaskSpec(
        kind=cfg.get("task", "kind", default=default_kind),
        n_nodes=cfg.get_int("task", "n_nodes", default=200),
        n_graphs=cfg.get_int("task", "n_graphs", default=1),
        feature_dim=cfg.get_int("task", "feature_dim", default=4),
        noise=cfg.get_float("task", "noise", default=0.0),
        seed=cfg.get_int("run", "seed", default=0),
    )


def _model_config(cfg: RunConfig, widths, n_outputs, mode):
    kind = cfg.get("model", "kind", required=True)
    common = dict(
        alpha=cfg.get_float("model", "alpha",
                            default=0.5 if kind == "fabernet" else 1.0),
        nonlinearity=cfg.get("model", "nonlinearity", default="split_relu"),
        scalar_field=cfg.get("model", "field", default="real"),
        mode=cfg.get("model", "mode", default=mode),
    )
    order = cfg.get_int("model", "order", default=2)
    if kind == "fabernet":
        flag = cfg.get("model", "include_order_zero")
        return fabernet_config(
            widths, n_outputs, order=order,
            gamma=cfg.get_float("model", "gamma", default=0.5),
            include_order_zero=(cfg.get_bool("model", "include_order_zero")
                                if flag is not None else True),
            **common,
        )
    if kind == "dir_resolvnet":
        pole = complex(cfg.get_float("model", "y_real", default=-1.0),
                       cfg.get_float("model", "y_imag", default=0.0))
        return dir_resolvnet_config(widths, n_outputs, order=order, pole=pole,
                                    **common)
    raise ConfigError(f"model kind must be 'fabernet' or 'dir_resolvnet', got {kind!r}")


def _hidden_widths(cfg: RunConfig):
    raw = cfg.get("model", "widths", default="8,8")
    try:
        widths = tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError("widths must be a comma list of integers") from exc
    if not widths:
        raise ConfigError("widths must not be empty")
    return widths


def _train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.get_int("train", "epochs", default=500),
        learning_rate=cfg.get_float("train", "lr", default=0.01),
        optimizer=cfg.get("train", "optimizer", default="adam"),
    )


def _write_losses(losses, path):
    lines = ["epoch,loss"] + [f"{i},{v:.17g}" for i, v in enumerate(losses)]
    Path(path).write_text("\n".join(lines) + "\n")


def _cmd_train(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    task = cfg.get("train", "task", required=True)
    seed = cfg.get_int("run", "seed", default=0)
    tcfg = _train_config(cfg)
    metrics = []
    if task == "direction_parity":
        spec = _task_spec(cfg, "direction_parity")
        graph, x, labels = gen_direction_task(spec)[0]
        widths = (x.shape[1],) + _hidden_widths(cfg)
        n_out = cfg.get_int("model", "outputs", default=int(labels.max()) + 1)
        config = _model_config(cfg, widths, n_out, mode="node")
        model = build_model(graph, config, seed=seed)
        losses = train_node_classifier(model, x, labels, tcfg)
        _, logits = predict(model, x)
        metrics.append(f"train_accuracy = {accuracy(logits, labels):.6f}")
    elif task == "two_scale_regression":
        spec = _task_spec(cfg, "two_scale_regression")
        data = gen_two_scale_regression(spec)
        widths = (spec.feature_dim,) + _hidden_widths(cfg)
        n_out = cfg.get_int("model", "outputs", default=1)
        config = _model_config(cfg, widths, n_out, mode="graph")
        params = init_params(config, np.random.default_rng(seed))
        models = [bind(params, g.graph(), config) for g in data.graphs]
        losses = train_graph_regressor(
            models, list(data.features),
            [float(t) for t in data.targets], tcfg)
        model = models[0]
        metrics.append(f"final_train_mae = {losses[-1]:.6f}")
    else:
        raise ConfigError(f"unknown training task {task!r}")
    metrics.insert(0, f"initial_loss = {losses[0]:.6f}")
    metrics.insert(1, f"final_loss = {losses[-1]:.6f}")
    save_model(model, out / "checkpoint.json")
    _write_losses(losses, out / "losses.csv")
    (out / "metrics.txt").write_text("\n".join(metrics) + "\n")
    print("\n".join(metrics))
    _echo_config(cfg, out)
    return 0


def _cmd_eval(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    ckpt = cfg.get("eval", "checkpoint", required=True)
    if not Path(ckpt).exists():
        raise ConfigError(f"checkpoint not found: {ckpt}")
    task_kind = cfg.get("task", "kind", required=True)
    spec = _task_spec(cfg, task_kind)
    metrics = []
    if task_kind == "direction_parity":
        graph, x, labels = gen_direction_task(spec)[0]
        model = load_model(ckpt, graph)
        _, logits = predict(model, x)
        metrics.append(f"accuracy = {accuracy(logits, labels):.6f}")
    elif task_kind == "two_scale_regression":
        data = gen_two_scale_regression(spec)
        errs_fine, errs_coarse = [], []
        for tsg, x, target in zip(data.graphs, data.features, data.targets):
            fine = load_model(ckpt, tsg.graph())
            _, pred = predict(fine, x)
            errs_fine.append(abs(float(pred[0]) - float(target)))
            lg = build_limit_graph(tsg)
            coarse = load_model(ckpt, lg.graph)
            _, pred_c = predict(coarse, project_down(x, lg))
            errs_coarse.append(abs(float(pred_c[0]) - float(target)))
        fine_mae = float(np.mean(errs_fine))
        coarse_mae = float(np.mean(errs_coarse))
        metrics.append(f"fine_mae = {fine_mae:.6f}")
        metrics.append(f"coarse_mae = {coarse_mae:.6f}")
        metrics.append(f"coarse_over_fine = {coarse_mae / fine_mae:.6f}")
    else:
        raise ConfigError(f"unknown eval task {task_kind!r}")
    (out / "metrics.txt").write_text("\n".join(metrics) + "\n")
    print("\n".join(metrics))
    _echo_config(cfg, out)
    return 0


def _cmd_gradcheck(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    seed = cfg.get_int("run", "seed", default=0)
    tol = cfg.get_float("gradcheck", "tolerance", default=1e-5)
    task = cfg.get("gradcheck", "task", default="node_classification")
    rng = np.random.default_rng(seed)
    spec = SyntheticTaskSpec(kind="direction_parity", n_nodes=10,
                             feature_dim=3, seed=seed)
    graph, x, labels = gen_direction_task(spec, validate=False)[0]
    x = x + 0.1 * rng.standard_normal(x.shape)
    widths = (x.shape[1],) + _hidden_widths(cfg)
    if task == "node_classification":
        config = _model_config(cfg, widths, int(labels.max()) + 1, mode="node")
        model = build_model(graph, config, seed=seed)
        target = labels
    elif task == "graph_regression":
        config = _model_config(cfg, widths, 1, mode="graph")
        model = build_model(graph, config, seed=seed)
        target = np.array([float(rng.uniform(0.5, 1.5))])
    else:
        raise ConfigError(f"unknown gradcheck task {task!r}")
    x = jitter_inputs(model, x, task, target, rng)
    err = gradcheck(model, x, task, target)
    line = f"max_gradient_error = {err:.3e} (tolerance {tol:.1e})"
    print(line)
    (out / "gradcheck.txt").write_text(line + "\n")
    _echo_config(cfg, out)
    return 0 if err <= tol else 1


def _cmd_oracle_check(cfg: RunConfig | None) -> int:
    seed = cfg.get_int("run", "seed", default=0) if cfg else 0
    threads = cfg.get_int("run", "threads", default=1) if cfg else 1
    rng = np.random.default_rng(seed)
    failures = 0

    def report(name, ok, detail):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        failures += 0 if ok else 1

    # polynomial consistency of the contour integral
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(3, 13))
        t = rng.standard_normal((n, n))
        t *= 2.0 / max(1e-12, np.linalg.norm(t, 2))
        coeffs = rng.standard_normal(int(rng.integers(2, 8)))
        poly = np.polynomial.Polynomial(coeffs)
        direct = matrix_polynomial(coeffs, t)
        via = contour_apply(poly, t, default_contour(t, n_quadrature=256),
                            threads=threads)
        scale = max(1.0, np.linalg.norm(direct))
        worst = max(worst, np.linalg.norm(via - direct) / scale)
    report("contour vs matrix polynomial", worst <= 1e-7, f"max rel {worst:.2e}")

    # inversion consistency
    path_lap = np.array([[0.0, 0, 0], [-1, 1, 0], [0, -1, 1]])
    contour = Contour(center=1.0, radius=1.5, n_quadrature=256)
    res = contour_apply(lambda z: 1.0 / (z + 1.0), path_lap, contour,
                        threads=threads)
    dev = np.linalg.norm(res @ (path_lap + np.eye(3)) - np.eye(3))
    report("contour resolvent inverts L - y Id", dev <= 1e-7, f"dev {dev:.2e}")

    # multiplicativity on commuting polynomial filters
    t = rng.standard_normal((6, 6))
    t *= 1.5 / np.linalg.norm(t, 2)
    c = default_contour(t, n_quadrature=256)
    g = np.polynomial.Polynomial(rng.standard_normal(3))
    h = np.polynomial.Polynomial(rng.standard_normal(4))
    lhs = contour_apply(g * h, t, c, threads=threads)
    rhs = contour_apply(g, t, c, threads=threads) @ contour_apply(
        h, t, c, threads=threads)
    dev = np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs))
    report("contour multiplicativity", dev <= 1e-7, f"rel dev {dev:.2e}")

    # quadrature convergence
    t8 = rng.standard_normal((8, 8))
    t8 *= 0.9 / np.linalg.norm(t8, 2)
    truth = np.linalg.inv(t8 + 2.0 * np.eye(8))
    errs = {}
    for m in (32, 256):
        approx = contour_apply(lambda z: 1.0 / (z + 2.0), t8,
                               Contour(0.0, 1.2, m), threads=threads)
        errs[m] = np.linalg.norm(approx - truth)
    ok = errs[256] <= 1e-3 * errs[32]
    report("quadrature converges exponentially", ok,
           f"err32 {errs[32]:.2e} err256 {errs[256]:.2e}")

    # nilpotency ladder on the 3-node path
    w = np.zeros((3, 3))
    w[1, 0] = w[2, 1] = 1.0
    bank = build_bank(w, FilterBankSpec(kind="faber", order=3, gamma=0.5))
    ladder_ok = (np.any(bank.atoms[1] != 0) and np.any(bank.atoms[2] != 0)
                 and np.all(bank.atoms[3] == 0))
    dev = bank_matches_contour(bank, Contour(0.0, 2.0, 128), threads=threads)
    report("path-graph nilpotency ladder", ladder_ok and dev <= 1e-9,
           f"contour dev {dev:.2e}")

    # spectral mapping on a random matrix
    t10 = rng.standard_normal((10, 10)) * 0.5
    ok = spectral_mapping_check(t10, rng.standard_normal(5))
    report("spectral mapping theorem", ok, "multiset match at 1e-6")

    return 0 if failures == 0 else 1


_HANDLERS = {
    "filter-apply": (_cmd_filter_apply, True),
    "reaches": (_cmd_reaches, True),
    "coarsen": (_cmd_coarsen, True),
    "converge": (_cmd_converge, True),
    "train": (_cmd_train, True),
    "eval": (_cmd_eval, True),
    "gradcheck": (_cmd_gradcheck, True),
    "oracle-check": (_cmd_oracle_check, False),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="holonet",
        description="Spectral filters and networks on directed graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, needs_config) in _HANDLERS.items():
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("config", help="path to an INI run configuration")
        else:
            p.add_argument("config", nargs="?", default=None)
    args = parser.parse_args(argv)
    handler, needs_config = _HANDLERS[args.command]
    try:
        if needs_config:
            cfg = RunConfig.load(args.config)
            return handler(cfg)
        cfg = RunConfig.load(args.config) if args.config else None
        return handler(cfg)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except HoloNetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
