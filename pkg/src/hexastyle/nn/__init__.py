from .kernels import BACKEND
from .layers import (
    AvgPool2D,
    BatchNorm,
    Bidirectional,
    Conv2D,
    Dense,
    Dropout,
    Embedding,
    Flatten,
    LSTM,
    MaxPool2D,
    Param,
    ShapeError,
    Softmax,
    softmax,
    softmax_xent,
)
from .optim import Adam
from .gradcheck import GradReport, check_layer

__all__ = [
    "BACKEND",
    "Adam",
    "AvgPool2D",
    "BatchNorm",
    "Bidirectional",
    "Conv2D",
    "Dense",
    "Dropout",
    "Embedding",
    "Flatten",
    "GradReport",
    "LSTM",
    "MaxPool2D",
    "Param",
    "ShapeError",
    "Softmax",
    "check_layer",
    "softmax",
    "softmax_xent",
]
