"""Wearable-EEG mental-state recognition toolkit.

Pipeline: recordings -> artifact mask -> db4 band decomposition -> windowed
features -> classifiers -> cross-validated evaluation.
"""

__version__ = "0.1.0"

from .artifacts import ArtifactMask, MaskConfig, compute_mask
from .errors import ConfigError, ConvergenceError, DataError, EegToolkitError, SchemaError
from .evaluation import (ConfusionCounts, Dataset, EvalReport, Protocol, feature_selection_report,
                         grid_search, make_classifier, metrics, plan_folds,
                         predictability_report, run_experiment)
from .features import (FeatureMatrix, WindowSpec, extract_features, feature_names,
                       fit_standardizer)
from .io import load_features, load_manifest, load_recording, save_features, save_recording
from .recording import (DEFAULT_LAYOUT, ChannelLayout, ClassLabel, EegRecording, SyntheticSpec,
                        generate_synthetic, synthesize_dataset)
from .wavelet import (BandDecomposition, band_for_level, decompose_recording, dwt_multilevel,
                      inverse_dwt)
