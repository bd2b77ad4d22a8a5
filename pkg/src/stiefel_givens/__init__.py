"""Bayesian inference over orthonormal-column matrices in Givens-angle coordinates."""

from ._backend import BACKEND
from .charts import ChartConfig, ChartResult, constrain, mirror, mirror_angles, unconstrain
from .diff import GivensPosterior, GradientBundle, eval_grad
from .givens import (
    AngleIndex,
    AngleKind,
    DomainError,
    Shape,
    angle_indices,
    apply_rotation,
    givens_reduction,
    givens_to_matrix,
    log_measure,
    make_shape,
    matrix_to_givens,
)
from .models import (
    NetworkData,
    PpcaData,
    eigenmodel_target,
    ppca_target,
    synth_network,
    uniform_stiefel_target,
)

__version__ = "0.1.0"
