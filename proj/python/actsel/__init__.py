"""Activation sparsity and selectivity of MLPs trained on MNIST."""

from ._core import (
    ConfigError,
    FormatError,
    InputError,
    MetricError,
    Mlp,
    Optimizer,
    OptimizerConfig,
    __version__,
    ccmas_from_class_means,
    ccmas_selectivity,
    experiment_presets,
    fluctuation_scale,
    hoyer_row,
    hoyer_sparsity,
    load_mnist,
    resolve_config,
    run_experiment,
    sweep_presets,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "InputError",
    "MetricError",
    "Mlp",
    "Optimizer",
    "OptimizerConfig",
    "__version__",
    "ccmas_from_class_means",
    "ccmas_selectivity",
    "experiment_presets",
    "fluctuation_scale",
    "hoyer_row",
    "hoyer_sparsity",
    "load_mnist",
    "resolve_config",
    "run_experiment",
    "sweep_presets",
]
