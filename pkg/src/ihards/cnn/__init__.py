from .arch import ARCHITECTURES, ArchSpec, build_architecture, get_arch
from .backend import BACKEND
from .checkpoint import Checkpoint, checkpoint_load, checkpoint_save
from .train import TrainConfig, TrainResult, evaluate_model, train_model

__all__ = [
    "ARCHITECTURES",
    "ArchSpec",
    "BACKEND",
    "Checkpoint",
    "TrainConfig",
    "TrainResult",
    "build_architecture",
    "checkpoint_load",
    "checkpoint_save",
    "evaluate_model",
    "get_arch",
    "train_model",
]
