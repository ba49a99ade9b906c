"""functensor: regression with functional tensor decompositions.

Tucker/PARAFAC models whose factor matrices are learnable Gaussian kernel
banks over continuous inputs, a sparse-tensor path for discrete inputs,
classic baselines, and a benchmark pipeline for inverse-dynamics data.
"""

from .basis import (
    BasisGradient,
    GaussianBasis,
    UnivariateRbfBank,
    basis_backward,
    basis_row,
    basis_rows,
    gaussian_activation,
    rbf_univariate,
)
from .baselines import (
    LinearModel,
    RbfNetwork,
    fit_linear,
    fit_rbf_network,
    predict_baseline,
    predict_linear,
    predict_rbf,
)
from .data import (
    SplitSpec,
    Standardizer,
    TrajectoryDataset,
    gen_synthetic_arm,
    load_dataset,
    nmse,
    save_dataset,
    split,
    standardize,
    two_link_gravity,
    two_link_torques,
)
from .discrete import (
    DiscreteModel,
    DiscreteSample,
    build_vocab,
    encode_samples,
    fit_discrete,
    predict_discrete,
    read_discrete_table,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DomainError,
    FunctensorError,
    NumericalError,
    ShapeError,
    UnknownCategoryError,
)
from .functional import (
    FunctionalGradients,
    FunctionalParafacModel,
    FunctionalTuckerModel,
    cost,
    forward,
    gradients,
    init_model,
    predict,
    train,
    train_all_dofs,
)
from .modelfile import load_model, save_model, write_history
from .optim import AdamState, TrainConfig, TrainHistory, adam_step, fit_minibatch, kmeans
from .tensor_core import (
    DenseTensor,
    embed_parafac_as_tucker,
    mode_contract,
    parafac_eval,
    tucker_eval,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BasisGradient",
    "ConfigError",
    "DataFormatError",
    "DenseTensor",
    "DiscreteModel",
    "DiscreteSample",
    "DomainError",
    "FunctensorError",
    "FunctionalGradients",
    "FunctionalParafacModel",
    "FunctionalTuckerModel",
    "GaussianBasis",
    "LinearModel",
    "NumericalError",
    "RbfNetwork",
    "ShapeError",
    "SplitSpec",
    "Standardizer",
    "TrainConfig",
    "TrainHistory",
    "TrajectoryDataset",
    "UnivariateRbfBank",
    "UnknownCategoryError",
    "adam_step",
    "basis_backward",
    "basis_row",
    "basis_rows",
    "build_vocab",
    "cost",
    "embed_parafac_as_tucker",
    "encode_samples",
    "fit_discrete",
    "fit_linear",
    "fit_minibatch",
    "fit_rbf_network",
    "forward",
    "gaussian_activation",
    "gen_synthetic_arm",
    "gradients",
    "init_model",
    "kmeans",
    "load_dataset",
    "load_model",
    "mode_contract",
    "nmse",
    "parafac_eval",
    "predict",
    "predict_baseline",
    "predict_discrete",
    "predict_linear",
    "predict_rbf",
    "rbf_univariate",
    "read_discrete_table",
    "save_dataset",
    "save_model",
    "split",
    "standardize",
    "train",
    "train_all_dofs",
    "tucker_eval",
    "two_link_gravity",
    "two_link_torques",
    "write_history",
]
