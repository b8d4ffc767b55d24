"""ARMA graph filtering with a reconstruction-regularized objective for
subject-level classification of FA histogram features."""

from .config import ExperimentConfig, load_config
from .errors import (ArmaReconError, ConfigError, ConvergenceError, DataError,
                     NumericalError, SingularFilterError)
from .experiment import (MetricsReport, SplitPlan, binary_metrics, run_experiment,
                         stratified_folds)
from .features import (FeatureMatrix, roi_histogram, subject_features, synth_cohort)
from .graph import SubjectGraph, build_adjacency, cosine_similarity, normalize_adjacency
from .nifti import Volume, load_nifti, save_nifti
from .spectral import (ArmaFilterSpec, arma_exact_filter, arma_fixed_point,
                       frequency_response, normalized_laplacian)

__version__ = "0.1.0"
