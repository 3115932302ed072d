from .schedule import NoiseSchedule, make_linear_schedule, q_sample, predict_x0
from .model import DenoiserModel
from .training import TrainConfig, loss, train
from .sampling import sample
from .checkpoint import save_checkpoint, load_checkpoint, save_model, load_model

__all__ = [
    "NoiseSchedule",
    "make_linear_schedule",
    "q_sample",
    "predict_x0",
    "DenoiserModel",
    "TrainConfig",
    "loss",
    "train",
    "sample",
    "save_checkpoint",
    "load_checkpoint",
    "save_model",
    "load_model",
]
