"""trigrasp-trainer: desk-scale reference predictor for grasp-map GMAPs."""

from .losses import grasp_loss
from .model import GraspPredictor, PredictorSpec
from .train import FULL_SCALE_PRESET, TrainConfig, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "GraspPredictor",
    "PredictorSpec",
    "FULL_SCALE_PRESET",
    "TrainConfig",
    "TrainResult",
    "grasp_loss",
    "train",
]
