"""Elastic shape analysis of multichannel movement curves.

Phase/amplitude separation of curve collections via penalized alignment in
the square-root velocity framework, mode extraction (PCA for amplitude,
principal nested spheres for phase), landmark extraction, and clustered
bootstrap comparison of full-curve against landmark predictors.
"""

from .align import (
    AlignConfig,
    AlignmentResult,
    LambdaDiagnostics,
    dp_align,
    karcher_mean,
    lambda_sweep,
)
from .curves import (
    Curve,
    Dataset,
    RawTrial,
    load_dataset,
    load_raw_trials,
    normalize_time,
    preprocess_trials,
    save_dataset,
    trim_zeros,
)
from .landmarks import LandmarkVector, extract_landmarks, landmark_matrix
from .modes import (
    ModeExtremes,
    PcaDecomposition,
    PnsDecomposition,
    amplitude_pca,
    mode_extremes,
    phase_pns,
    pns,
    score_table,
)
from .regress import (
    BootstrapTest,
    CompareResult,
    ModelSpec,
    RegressionReport,
    TraitTable,
    cluster_bootstrap_test,
    compare_predictor_sets,
    fit_ols,
    impute_means,
    load_traits,
    nested_f,
    save_traits,
)
from .srvf import (
    SrvfCurve,
    Warp,
    WarpSphericalRep,
    from_srvf,
    identity_warp,
    sphere_to_warp,
    to_srvf,
    warp_action,
    warp_compose,
    warp_invert,
    warp_to_sphere,
)
from .synth import GroundTruth, SynthConfig, generate
from .tables import FeatureMatrix, load_feature_matrix, save_feature_matrix

__version__ = "0.1.0"

__all__ = [
    "AlignConfig",
    "AlignmentResult",
    "BootstrapTest",
    "CompareResult",
    "Curve",
    "Dataset",
    "FeatureMatrix",
    "GroundTruth",
    "LambdaDiagnostics",
    "LandmarkVector",
    "ModeExtremes",
    "ModelSpec",
    "PcaDecomposition",
    "PnsDecomposition",
    "RawTrial",
    "RegressionReport",
    "SrvfCurve",
    "SynthConfig",
    "TraitTable",
    "Warp",
    "WarpSphericalRep",
    "amplitude_pca",
    "cluster_bootstrap_test",
    "compare_predictor_sets",
    "dp_align",
    "extract_landmarks",
    "fit_ols",
    "from_srvf",
    "generate",
    "identity_warp",
    "impute_means",
    "karcher_mean",
    "lambda_sweep",
    "landmark_matrix",
    "load_dataset",
    "load_feature_matrix",
    "load_raw_trials",
    "load_traits",
    "mode_extremes",
    "nested_f",
    "normalize_time",
    "phase_pns",
    "pns",
    "preprocess_trials",
    "save_dataset",
    "save_feature_matrix",
    "save_traits",
    "score_table",
    "sphere_to_warp",
    "to_srvf",
    "trim_zeros",
    "warp_action",
    "warp_compose",
    "warp_invert",
    "warp_to_sphere",
]
