"""Uncertainty-aware sequential Monte Carlo multi-person keypoint tracking."""

from .evaluation import EvalReport, MotCounts, evaluate
from .geometry import COCO_KAPPAS, Keypoint, OksParams, Pose, oks, oks_grid
from .predictor import (
    DivergenceError,
    GaussianPrediction,
    KeypointHistory,
    PredictorConfig,
    PredictorModel,
    TrainConfig,
    build_training_set,
    forward,
    init_model,
    load_model,
    nll_loss,
    nll_loss_grad,
    sample,
    save_model,
    train,
)
from .scenes import (
    DetectorModel,
    NoiseModel,
    OcclusionModel,
    SceneConfig,
    simulate,
    training_stream,
    true_sigmas,
)
from .smc import (
    ParticleSet,
    PoseBatch,
    PoseQueue,
    SmcConfig,
    elite_weights,
    propose,
    resample,
    select_mixture,
)
from .streams import Frame, FrameStream, StreamFormatError, StreamMeta, read_stream, write_stream
from .tracker import (
    TrackedPose,
    Tracker,
    TrackerConfig,
    TrackFilter,
    greedy_match,
    hungarian_match,
    score_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "COCO_KAPPAS",
    "DetectorModel",
    "DivergenceError",
    "EvalReport",
    "Frame",
    "FrameStream",
    "GaussianPrediction",
    "Keypoint",
    "KeypointHistory",
    "MotCounts",
    "NoiseModel",
    "OcclusionModel",
    "OksParams",
    "ParticleSet",
    "Pose",
    "PoseBatch",
    "PoseQueue",
    "PredictorConfig",
    "PredictorModel",
    "SceneConfig",
    "SmcConfig",
    "StreamFormatError",
    "StreamMeta",
    "TrackFilter",
    "TrackedPose",
    "Tracker",
    "TrackerConfig",
    "TrainConfig",
    "build_training_set",
    "elite_weights",
    "evaluate",
    "forward",
    "greedy_match",
    "hungarian_match",
    "init_model",
    "load_model",
    "nll_loss",
    "nll_loss_grad",
    "oks",
    "oks_grid",
    "propose",
    "read_stream",
    "resample",
    "sample",
    "save_model",
    "score_matrix",
    "select_mixture",
    "simulate",
    "train",
    "training_stream",
    "true_sigmas",
    "write_stream",
]
