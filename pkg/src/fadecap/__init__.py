"""Mutual information, bounds and capacity for multicode CDMA Rayleigh fading channels
with imperfect channel estimates."""

from .bounds import (
    BoundReport,
    asymptotic_onoff_bound,
    best_lemma3_bound,
    fourth_moment_vanishing_bound,
    lower_bound_cor2,
    lower_bound_lemma2,
    lower_bound_lemma3,
    lower_bound_lemma3_simplified,
    upper_bound_cor1,
    upper_bound_lemma1,
)
from .capacity import (
    CapacityResult,
    OptimizerSettings,
    QUICK_SETTINGS,
    capacity_r,
    capacity_tr,
    coherent_cdma_capacity,
    estimated_capacity,
    mi_fixed_family,
    optimize_capacity,
    spacetime_capacity,
)
from .channel import ChannelParams, CodeMatrix, random_code_matrix, reduce_model
from .constellations import (
    Constellation,
    RadialDistribution,
    amqam,
    amqam_lift,
    gaussian_radial,
    lift_radial,
    orthogonal_onoff,
    psk,
    uniform_disk,
)
from .errors import FadecapError
from .exact_mi import MiContext, QuadratureBudget, certify, mi_radial
from .kernels import BACKEND
from .mc_oracle import McEstimate, mc_mutual_information

__version__ = "0.1.0"
