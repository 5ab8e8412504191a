"""Radar water-level estimation: FMCW processing, point-cloud filtering, mode
estimation and parameter tuning against groundtruth."""

from .errors import *  # noqa: F401,F403
from .waveform import (
    C, ChirpConfig, PathClass, SampledFrame, ScatterTarget,
    delay_to_phase, phase_diff_to_velocity, phase_to_range, synthesize_if_frame,
)
from .filtering import (
    Aggregation, FilterParams, PointCloud, PointCloudWindow, RadarPoint,
    filter_window, project_xy, tilt_compensate, window_measurements,
)
from .rdmap import (
    CfarParams, Detection, RangeDopplerMap,
    cfar_detect, detections_to_points, doppler_fft, range_doppler_map, range_fft, refine_range,
)
from .scenesim import DeploymentRecord, RunRecord, SceneSpec, linear_trajectory, synth_deployment, synth_run
from .estimator import RunEstimate, aggregate, estimate_run, mode_estimate
from .evaluation import (
    AlignedPair, EvaluationReport, GridSearchResult, ParamGrid,
    align, evaluate_deployment, grid_search, mse, rmse, to_deltas,
)

__version__ = "0.1.0"
