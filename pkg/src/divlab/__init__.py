"""Tools for comparing sequence models under interpolated divergences.

The package covers exact discrete divergence computation, the blended
training objective that scheduled sampling optimizes, simplex and grid
optimizers for its minimizers, a small training lab, pi-weighted
adversarial loops, and a CLI that writes reproducible report bundles.
"""

__version__ = "0.1.0"

from .dists import (
    DiscreteDist,
    DiscreteJoint,
    Gaussian2D,
    GridDensity,
    IsotropicGaussian,
    RngSeed,
    TabularAutoregressive,
)
from .divergences import (
    MixtureWeight,
    Nats,
    cross_entropy,
    entropy,
    jsd,
    js_pi,
    js_pi_grid,
    kl,
    kl_gaussian,
    kl_limit_ratio,
    total_variation,
)
from .errors import (
    AlphabetMismatch,
    DegenerateGrid,
    DivergedTraining,
    DivlabError,
    EmptySamples,
    GridMismatch,
    GridTooLarge,
    InvalidDistribution,
    NonFiniteObjective,
    NumericFault,
    ParseError,
    ZeroMarginal,
)
from .objectives import ObjectiveKind, SSWeight, d_alternative, d_ml, d_ss
from .optimize import (
    OptConfig,
    OptResult,
    brute_force_minimize,
    exclusive_isotropic_closed_form,
    fit_isotropic,
    minimize_discrete,
    ml_isotropic_closed_form,
)
from .sslab import SSSchedule, SSTrainConfig, inconsistency_scan, ss_train
from .adversary import AdvConfig, estimate_js_pi, train_generalized_adversarial

__all__ = [
    "__version__",
    "AdvConfig",
    "AlphabetMismatch",
    "DegenerateGrid",
    "DiscreteDist",
    "DiscreteJoint",
    "DivergedTraining",
    "DivlabError",
    "EmptySamples",
    "Gaussian2D",
    "GridDensity",
    "GridMismatch",
    "GridTooLarge",
    "InvalidDistribution",
    "IsotropicGaussian",
    "MixtureWeight",
    "Nats",
    "NonFiniteObjective",
    "NumericFault",
    "ObjectiveKind",
    "OptConfig",
    "OptResult",
    "ParseError",
    "RngSeed",
    "SSSchedule",
    "SSTrainConfig",
    "SSWeight",
    "TabularAutoregressive",
    "ZeroMarginal",
    "brute_force_minimize",
    "cross_entropy",
    "d_alternative",
    "d_ml",
    "d_ss",
    "entropy",
    "estimate_js_pi",
    "exclusive_isotropic_closed_form",
    "fit_isotropic",
    "inconsistency_scan",
    "js_pi",
    "js_pi_grid",
    "jsd",
    "kl",
    "kl_gaussian",
    "kl_limit_ratio",
    "minimize_discrete",
    "ml_isotropic_closed_form",
    "ss_train",
    "total_variation",
]
