"""Classification RBMs over sets of vectors, baselines, and benchmark tools."""

from .classrbm import (
    Gradients,
    GibbsParticle,
    RbmParams,
    cd_update,
    disc_gradient,
    free_energy,
    gibbs_step,
    init_params,
    posterior,
)
from .data import (
    Bag,
    Dataset,
    FeatureScaler,
    FoldPlan,
    MilFormatError,
    apply_scaler,
    fit_scaler,
    make_folds,
    parse_mil_sparse,
    serialize_mil_sparse,
    validation_split,
)
from .numerics import RngStream, log_sum_exp, sigmoid, softminus, softplus
from .set_rbm import (
    OR_HARD,
    OR_SOFT,
    XOR_HARD,
    XOR_SOFT,
    SetGibbsParticle,
    SetVariant,
    brute_force_posterior,
    or_hidden_conditionals,
    pooled_activation,
    pooled_activations,
    set_cd_update,
    set_disc_gradient,
    set_free_energy,
    set_gibbs_step,
    set_posterior,
    xor_hidden_conditional,
)
from .trainer import (
    GridSearchResult,
    TrainConfig,
    TrainedModel,
    TrainHistory,
    TrainingDiverged,
    default_grid,
    grid_search,
    train,
    train_on_split,
)

__version__ = "0.1.0"
