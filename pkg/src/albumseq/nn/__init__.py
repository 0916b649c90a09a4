from . import autodiff
from .autodiff import Tensor, no_grad
from .model import ModelConfig, OrderingModel, parameter_shapes, quantize32, sinusoidal_encoding
from .checkpoint import FORMAT_VERSION, load_checkpoint, save_checkpoint
from .train import Adam, TrainConfig, TrainHistory, train, uniform_loss_baseline

__all__ = [
    "Adam",
    "FORMAT_VERSION",
    "ModelConfig",
    "OrderingModel",
    "Tensor",
    "TrainConfig",
    "TrainHistory",
    "autodiff",
    "load_checkpoint",
    "no_grad",
    "parameter_shapes",
    "quantize32",
    "save_checkpoint",
    "sinusoidal_encoding",
    "train",
    "uniform_loss_baseline",
]
