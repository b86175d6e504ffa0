"""Semantic softmax loss for zero-shot learning.

A bilinear compatibility model whose per-class classifier weights are
generated from class semantic descriptors (``W_j = V^T a_j``), trained with
softmax cross-entropy plus a hypersphere penalty on feature-minus-prototype
residuals, and evaluated by zero-shot classification and retrieval.
"""

from .data import SyntheticSpec, ZslDataset, make_synthetic, validate_dataset
from .eval import EvalReport, evaluate, prototype_diagnostic, retrieval_map
from .model import Hyperparams, ModelParams, reconstruct_prototypes, ssl_grad, ssl_loss
from .optim import TrainHistory, grad_check, train

__all__ = [
    "EvalReport",
    "Hyperparams",
    "ModelParams",
    "SyntheticSpec",
    "TrainHistory",
    "ZslDataset",
    "evaluate",
    "grad_check",
    "make_synthetic",
    "prototype_diagnostic",
    "reconstruct_prototypes",
    "retrieval_map",
    "ssl_grad",
    "ssl_loss",
    "train",
    "validate_dataset",
]
