"""Spectral convolutions on directed graphs without a graph Fourier
transform: filter banks built through the holomorphic functional calculus,
HoloNet layers (FaberNet, Dir-ResolvNet), and two-scale coarse-graining with
provably scale-insensitive resolvent filters.

Quick tour:

    from holonet import build_graph, characteristic_operator, OperatorKind
    from holonet import FilterBankSpec, build_bank, contour_apply
    from holonet import reaches, TwoScaleGraph, build_limit_graph
    from holonet import fabernet_config, build_model, predict

Edge-direction convention: ``W[i, j]`` is the weight of the edge ``j -> i``,
so in-degrees are row sums and out-degrees are column sums.
"""

from .digraph import (
    DENSE_NODE_LIMIT,
    CharacteristicOperator,
    DiGraph,
    OperatorKind,
    build_graph,
    characteristic_operator,
    load_graph,
    weighted_adjoint,
    weighted_inner,
    weighted_norm,
    weighted_operator_norm,
    write_graph,
)
from .holocalc import (
    Contour,
    FilterBankSpec,
    PrecomputedBank,
    SpectralResponseOracle,
    apply_filter,
    bank_matches_contour,
    build_bank,
    contour_apply,
    default_contour,
    matrix_polynomial,
    spectral_mapping_check,
    spectral_response,
)
from .coarse import (
    DEFAULT_C_GRID,
    LimitGraph,
    ReachPartition,
    TwoScaleGraph,
    build_limit_graph,
    filter_convergence_gap,
    high_kernel_projection,
    interpolate_up,
    load_two_scale,
    project_down,
    reaches,
    resolvent_convergence_gap,
    write_two_scale,
)
from .network import (
    HoloNet,
    HoloNetParams,
    LayerParams,
    ModelConfig,
    TrainConfig,
    accuracy,
    aggregate,
    bind,
    build_model,
    dir_resolvnet_config,
    expand_complex_to_real,
    fabernet_config,
    forward_features,
    gradcheck,
    init_params,
    layer_forward,
    load_model,
    model_forward,
    predict,
    save_model,
    train,
    train_graph_regressor,
    train_node_classifier,
)
from .experiments import (
    DeflectionFamily,
    SyntheticTaskSpec,
    gen_direction_task,
    gen_two_scale_regression,
    run_coarse_inference,
    run_theorem_suite,
    symmetrize,
)
from . import errors

__version__ = "0.1.0"
