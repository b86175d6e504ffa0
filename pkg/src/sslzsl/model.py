"""Semantic softmax loss: logits, loss terms, analytic gradient, prototypes.

Shapes used throughout::

    F  features      (M x d_f)
    A  descriptors   (C x d_a)
    V  map           (d_a x d_f)
    b  bias          (C,)

The logit of instance i for class j is ``a_j^T V f_i + b_j`` and the
classifier (visual prototype) of class j is ``W_j = V^T a_j``.

The hypersphere constraint ``||f_i - V^T a_{y_i}|| = alpha`` is enforced as
the quadratic penalty ``(beta / M) * sum_i (n_i - alpha)^2``; ``beta = 0``
gives the unconstrained model.
"""

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .linalg import ShapeError, row_norms

# Residual norms below this are clamped in the penalty gradient.
RESIDUAL_EPS = 1e-8

OPTIMIZERS = ("sgd", "sgd_momentum", "adam")


@dataclass(frozen=True)
class ModelParams:
    V: np.ndarray
    b: np.ndarray

    def copy(self):
        return ModelParams(self.V.copy(), self.b.copy())


@dataclass(frozen=True)
class Hyperparams:
    lam: float = 1e-4
    beta: float = 1.0
    alpha: float = 1.0
    lr: float = 1e-2
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")

    def replace(self, **kw):
        return Hyperparams(**{**asdict(self), **kw})


@dataclass(frozen=True)
class LossTerms:
    ce: float
    reg: float
    penalty: float

    @property
    def total(self):
        return self.ce + self.reg + self.penalty


def init_params(d_a, d_f, num_classes, seed=0):
    """Small Gaussian ``V`` (std 0.01/sqrt(d_a)) and zero bias."""
    rng = np.random.Generator(np.random.PCG64([seed, 0]))
    V = rng.standard_normal((d_a, d_f)) * (0.01 / math.sqrt(d_a))
    return ModelParams(V=V, b=np.zeros(num_classes))


def _check_shapes(params, features, descriptors, labels=None):
    V, b = params.V, params.b
    if descriptors.shape[1] != V.shape[0]:
        raise ShapeError(f"descriptors {descriptors.shape} incompatible with V {V.shape}")
    if features.shape[1] != V.shape[1]:
        raise ShapeError(f"features {features.shape} incompatible with V {V.shape}")
    if b.shape != (descriptors.shape[0],):
        raise ShapeError(f"bias {b.shape} does not match {descriptors.shape[0]} classes")
    if labels is not None:
        if labels.shape != (features.shape[0],):
            raise ShapeError(f"{labels.shape} labels for {features.shape[0]} feature rows")
        if features.shape[0] == 0:
            raise ValueError("empty batch")


def logits(params, descriptors, features):
    """(M x C) matrix with entries ``a_j^T V f_i + b_j``."""
    descriptors = np.asarray(descriptors, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    _check_shapes(params, features, descriptors)
    return features @ params.V.T @ descriptors.T + params.b


def softmax_rows(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def log_softmax_rows(z):
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def reconstruct_prototypes(V, descriptors):
    """Rows ``W_j = V^T a_j`` (C x d_f)."""
    V = np.asarray(V, dtype=np.float64)
    descriptors = np.asarray(descriptors, dtype=np.float64)
    if descriptors.ndim != 2 or descriptors.shape[1] != V.shape[0]:
        raise ShapeError(f"descriptors {descriptors.shape} incompatible with V {V.shape}")
    return descriptors @ V


def loss_terms(params, features, labels, descriptors, h):
    features = np.asarray(features, dtype=np.float64)
    descriptors = np.asarray(descriptors, dtype=np.float64)
    labels = np.asarray(labels)
    _check_shapes(params, features, descriptors, labels)
    m = features.shape[0]
    logp = log_softmax_rows(logits(params, descriptors, features))
    ce = -logp[np.arange(m), labels].sum() / m
    reg = h.lam * float(np.sum(params.V * params.V))
    penalty = 0.0
    if h.beta:
        residual = features - descriptors[labels] @ params.V
        penalty = h.beta * float(np.sum((row_norms(residual) - h.alpha) ** 2)) / m
    return LossTerms(float(ce), reg, penalty)


def ssl_loss(params, features, labels, descriptors, h):
    """Cross-entropy + ``lam * ||V||_F^2`` + hypersphere penalty."""
    return loss_terms(params, features, labels, descriptors, h).total


def ssl_grad(params, features, labels, descriptors, h):
    """Analytic gradient of :func:`ssl_loss`; returns ``(dV, db)``."""
    features = np.asarray(features, dtype=np.float64)
    descriptors = np.asarray(descriptors, dtype=np.float64)
    labels = np.asarray(labels)
    _check_shapes(params, features, descriptors, labels)
    m = features.shape[0]
    rows = np.arange(m)

    g = softmax_rows(logits(params, descriptors, features))
    g[rows, labels] -= 1.0
    g /= m
    dV = descriptors.T @ (g.T @ features)
    db = g.sum(axis=0)

    if h.lam:
        dV += 2.0 * h.lam * params.V
    if h.beta:
        a_y = descriptors[labels]
        residual = features - a_y @ params.V
        n = row_norms(residual)
        coef = (n - h.alpha) / np.maximum(n, RESIDUAL_EPS)
        if h.alpha == 0:
            coef[n < RESIDUAL_EPS] = 0.0
        dV -= (2.0 * h.beta / m) * (a_y.T @ (coef[:, None] * residual))
    return dV, db


# -- checkpoints -----------------------------------------------------------


def save_checkpoint(outdir, params, h=None, extra=None):
    """Write ``V.bin``, ``b.csv`` and ``model.manifest``; return the manifest path."""
    from .data import save_matrix, write_kv

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_matrix(outdir / "V.bin", params.V, "bin")
    save_matrix(outdir / "b.csv", params.b[:, None], "csv")
    items = {
        "kind": "ssl",
        "V": "V.bin",
        "b": "b.csv",
        "d_a": params.V.shape[0],
        "d_f": params.V.shape[1],
        "num_classes": params.b.shape[0],
    }
    if h is not None:
        items.update({k: repr(v) if isinstance(v, float) else v for k, v in asdict(h).items()})
    items.update(extra or {})
    path = outdir / "model.manifest"
    write_kv(path, items)
    return path


def load_checkpoint(manifest_path):
    from .data import DataFormatError, load_matrix, read_kv

    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "model.manifest"
    kv = read_kv(manifest_path)
    if kv.get("kind", "ssl") != "ssl":
        raise DataFormatError(f"{manifest_path}: not an ssl checkpoint (kind={kv['kind']})")
    root = manifest_path.parent
    V = load_matrix(root / kv["V"])
    b = load_matrix(root / kv["b"]).ravel()
    if b.shape[0] != int(kv.get("num_classes", b.shape[0])):
        raise DataFormatError(f"{manifest_path}: bias length {b.shape[0]} disagrees with manifest")
    return ModelParams(V=V, b=b), kv
