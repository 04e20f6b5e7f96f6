"""Eigengesture analysis of data-glove recordings.

Pipeline: resample variable-length 10-channel recordings onto a common
grid, double-integrate the accelerometer channels, studentise per sensor,
flatten realisations into a data matrix, decompose it, and derive
eigengestures, low-rank reconstructions, and the normalized error curve.
"""

__version__ = "0.1.0"

from .dataset import (
    GestureEntry,
    GestureManifest,
    RawRecording,
    SynthConfig,
    builtin_manifest,
    load_corpus,
    load_recording,
    save_corpus,
    save_recording,
    synthesize_corpus,
)
from .decomposition import (
    Eigengesture,
    PrincipalComponents,
    SvdResult,
    eigengestures,
    error_curve,
    mean_column_error_curve,
    principal_components,
    reconstruct,
    reconstruct_gesture,
    svd,
)
from .errors import EigengestureError
from .preprocess import (
    DataMatrix,
    GestureTensor,
    ResampledGesture,
    assemble_tensor,
    flatten,
    integrate_acceleration,
    integrate_recording,
    integrate_tensor,
    preprocess_corpus,
    resample,
    studentise,
    unflatten,
    unflatten_column,
)
from .visualize import (
    RemappedEigengesture,
    SensorStats,
    emit_pose_frames,
    emit_timeseries_plot,
    quantile_dispersion,
    remap,
    sensor_stats,
)

__all__ = [
    "__version__",
    "EigengestureError",
    "RawRecording",
    "GestureEntry",
    "GestureManifest",
    "SynthConfig",
    "builtin_manifest",
    "load_recording",
    "save_recording",
    "load_corpus",
    "save_corpus",
    "synthesize_corpus",
    "ResampledGesture",
    "GestureTensor",
    "DataMatrix",
    "resample",
    "integrate_acceleration",
    "integrate_recording",
    "integrate_tensor",
    "assemble_tensor",
    "studentise",
    "flatten",
    "unflatten",
    "unflatten_column",
    "preprocess_corpus",
    "SvdResult",
    "Eigengesture",
    "PrincipalComponents",
    "svd",
    "principal_components",
    "eigengestures",
    "reconstruct",
    "reconstruct_gesture",
    "error_curve",
    "mean_column_error_curve",
    "SensorStats",
    "RemappedEigengesture",
    "quantile_dispersion",
    "sensor_stats",
    "remap",
    "emit_timeseries_plot",
    "emit_pose_frames",
]
