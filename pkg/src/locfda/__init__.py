"""Localization processes for functional data: pointwise kNN curves, kNN
reconstruction of censored curves, a localization classifier and outlier
detection, with Monte Carlo checks of their large-sample behaviour."""

from .classification import (
    ClassifierModel,
    OutlierReport,
    detect_outliers,
    fit,
    fknn_classify,
    predict,
    predict_proba,
)
from .core import (
    FunctionalSample,
    GroupLabels,
    LocFDAError,
    ObservationMask,
    TimeGrid,
    affine_transform,
    trapezoid_integral,
)
from .localization import (
    LocalizationPath,
    WidthSummary,
    empirical_localization_distance,
    group_localization_distance,
    localization_path,
    rescaled_width,
    self_localization_scores,
)
from .reconstruction import (
    ReconstructionResult,
    baseline_mean_impute,
    knn_reconstruct,
    membership_probability,
    restricted_distance,
)
from .simulation import CensoringSpec, GeneratorSpec, censor, generate, thin_at_time

__version__ = "0.1.0"
