"""From-scratch numpy classifiers: LSTM, GRU and 1D-CNN."""

from .functional import (GRUParams, LSTMParams, LSTMState, conv1d_forward, gru_step,
                         lstm_step, sigmoid, softmax)
from .gradcheck import finite_difference_gradients, max_relative_error
from .model import (Arch, Classifier, ModelConfig, analytic_parameter_count, clip_grad_norm,
                    count_parameters, load_checkpoint, save_checkpoint)
from .train import (Adam, EncodedSplit, EpochStats, TrainConfig, TrainResult, evaluate, train,
                    write_curve)

__all__ = [
    "Adam", "Arch", "Classifier", "EncodedSplit", "EpochStats", "GRUParams", "LSTMParams",
    "LSTMState", "ModelConfig", "TrainConfig", "TrainResult", "analytic_parameter_count",
    "clip_grad_norm", "conv1d_forward", "count_parameters", "evaluate",
    "finite_difference_gradients", "gru_step", "load_checkpoint", "lstm_step",
    "max_relative_error", "save_checkpoint", "sigmoid", "softmax", "train", "write_curve",
]
