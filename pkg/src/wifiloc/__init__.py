"""WiFi RSSI fingerprinting pipeline.

Simulate robot surveys over a floorplan, align odometry and WiFi scan
streams with dynamic time warping, build fingerprint datasets, train an
MLP position regressor, and evaluate localization accuracy.
"""

from .alignment import AlignmentResult, DtwCostMatrix, backtrack, dtw, match_scans
from .core import (
    FingerprintDataset,
    FingerprintRow,
    OdometrySample,
    Pose2D,
    WifiScan,
    canonical_ap_order,
    parse_ap_id,
)
from .dataset_io import (
    DataFormatError,
    HeatmapGrid,
    build_dataset,
    from_csv,
    heatmap,
    impute,
    to_csv,
)
from .evaluation import EvalReport, ablate, density_report, ground_truth_consistency, metrics
from .localizer import (
    MlpModel,
    NumericError,
    TrainConfig,
    TrainingReport,
    forward,
    init,
    loss_and_grads,
    model_load,
    model_save,
    predict,
    train,
)
from .simulator import (
    AccessPointSpec,
    Floorplan,
    Rect,
    SurveyConfig,
    SurveyRecording,
    drive_continuous,
    rssi_at,
    survey_grid,
)

__version__ = "0.1.0"
