"""Closed-form zero-shot baselines: LR, RLR and ESZSL.

With ``F`` the training features (M x d_f), ``A`` the seen descriptors
(C x d_a) and ``A_y = A[labels]``:

- LR regresses features onto their class descriptor,
  ``P = argmin ||F P - A_y||^2 + gamma ||P||^2``  (d_f x d_a).
- RLR regresses descriptors onto features,
  ``R = argmin ||A_y R - F||^2 + gamma ||R||^2``  (d_a x d_f).
- ESZSL fits a bilinear map against label targets ``Y`` (0/1 one-hot by
  default, or the +-1 encoding),
  ``M = argmin ||F M A^T - Y||^2 + gamma ||M A^T||^2 + lam ||F M||^2
  + gamma lam ||M||^2``  (d_f x d_a), solved in closed form.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .eval import cosine_scores, inner_scores
from .linalg import ridge_solve

KINDS = ("lr", "rlr", "eszsl")
ENCODINGS = ("onehot", "signed")


@dataclass(frozen=True)
class BaselineModel:
    kind: str
    weights: np.ndarray
    gamma: float
    lam: float = 0.0
    encoding: str = "onehot"


def lr_fit(features, labels, seen_descriptors, gamma=1.0):
    F = np.asarray(features, dtype=np.float64)
    target = np.asarray(seen_descriptors, dtype=np.float64)[np.asarray(labels)]
    P = ridge_solve(F.T @ F, F.T @ target, gamma)
    return BaselineModel("lr", P, gamma)


def rlr_fit(features, labels, seen_descriptors, gamma=1.0):
    F = np.asarray(features, dtype=np.float64)
    A_y = np.asarray(seen_descriptors, dtype=np.float64)[np.asarray(labels)]
    R = ridge_solve(A_y.T @ A_y, A_y.T @ F, gamma)
    return BaselineModel("rlr", R, gamma)


def signed_onehot(labels, num_classes):
    y = -np.ones((len(labels), num_classes))
    y[np.arange(len(labels)), labels] = 1.0
    return y


def label_targets(labels, num_classes, encoding="onehot"):
    labels = np.asarray(labels)
    if encoding == "signed":
        return signed_onehot(labels, num_classes)
    if encoding == "onehot":
        return np.eye(num_classes)[labels]
    raise ValueError(f"unknown encoding {encoding!r}")


def eszsl_fit(features, labels, seen_descriptors, gamma=1.0, lam=1.0, encoding="onehot"):
    F = np.asarray(features, dtype=np.float64)
    A = np.asarray(seen_descriptors, dtype=np.float64)
    Y = label_targets(labels, A.shape[0], encoding)
    left = ridge_solve(F.T @ F, F.T @ Y @ A, gamma)
    # right-multiplication by the inverse of the symmetric (A^T A + lam I)
    M = ridge_solve(A.T @ A, left.T, lam).T
    return BaselineModel("eszsl", M, gamma, lam, encoding)


def fit(kind, features, labels, seen_descriptors, gamma=1.0, lam=1.0, encoding="onehot"):
    if kind == "lr":
        return lr_fit(features, labels, seen_descriptors, gamma)
    if kind == "rlr":
        return rlr_fit(features, labels, seen_descriptors, gamma)
    if kind == "eszsl":
        return eszsl_fit(features, labels, seen_descriptors, gamma, lam, encoding)
    raise ValueError(f"unknown baseline {kind!r}")


def scores(model, test_features, descriptors):
    """(test x class) scores under each method's own inference rule."""
    F = np.asarray(test_features, dtype=np.float64)
    A = np.asarray(descriptors, dtype=np.float64)
    if model.kind == "lr":
        return cosine_scores(F @ model.weights, A)
    if model.kind == "rlr":
        return cosine_scores(F, A @ model.weights)
    if model.kind == "eszsl":
        return inner_scores(F @ model.weights, A)
    raise ValueError(f"unknown baseline {model.kind!r}")


def predict(model, test_features, descriptors):
    return np.argmax(scores(model, test_features, descriptors), axis=1)


# -- objectives (used for stationarity checks) -----------------------------


def lr_objective(P, features, labels, seen_descriptors, gamma):
    r = features @ P - seen_descriptors[labels]
    return float(np.sum(r * r) + gamma * np.sum(P * P))


def rlr_objective(R, features, labels, seen_descriptors, gamma):
    r = seen_descriptors[labels] @ R - features
    return float(np.sum(r * r) + gamma * np.sum(R * R))


def eszsl_objective(M, features, labels, seen_descriptors, gamma, lam, encoding="onehot"):
    A = seen_descriptors
    Y = label_targets(labels, A.shape[0], encoding)
    MA = M @ A.T
    FM = features @ M
    r = features @ MA - Y
    return float(
        np.sum(r * r) + gamma * np.sum(MA * MA) + lam * np.sum(FM * FM) + gamma * lam * np.sum(M * M)
    )


def objective(model, features, labels, seen_descriptors, weights=None):
    W = model.weights if weights is None else weights
    F = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    A = np.asarray(seen_descriptors, dtype=np.float64)
    if model.kind == "lr":
        return lr_objective(W, F, y, A, model.gamma)
    if model.kind == "rlr":
        return rlr_objective(W, F, y, A, model.gamma)
    return eszsl_objective(W, F, y, A, model.gamma, model.lam, model.encoding)


def stationarity(model, features, labels, seen_descriptors, step=1e-5):
    """Central-difference gradient of the fit objective at the returned weights.

    Reported as the max-abs gradient entry divided by the max-abs gradient
    entry at zero weights, so 0 means an exact stationary point.
    """
    def fd_grad(W):
        W = W.copy()
        g = np.zeros_like(W)
        flat = W.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = objective(model, features, labels, seen_descriptors, W)
            flat[i] = orig - step
            down = objective(model, features, labels, seen_descriptors, W)
            flat[i] = orig
            g.reshape(-1)[i] = (up - down) / (2 * step)
        return g

    at_fit = fd_grad(model.weights)
    at_zero = fd_grad(np.zeros_like(model.weights))
    return float(np.abs(at_fit).max() / max(np.abs(at_zero).max(), 1e-300))


def save_baseline(outdir, model):
    from .data import save_matrix, write_kv

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_matrix(outdir / "weights.bin", model.weights, "bin")
    path = outdir / "model.manifest"
    write_kv(
        path,
        {
            "kind": model.kind,
            "weights": "weights.bin",
            "rows": model.weights.shape[0],
            "cols": model.weights.shape[1],
            "gamma": repr(float(model.gamma)),
            "lam": repr(float(model.lam)),
            "encoding": model.encoding,
        },
    )
    return path


def load_baseline(manifest_path):
    from .data import DataFormatError, load_matrix, read_kv

    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "model.manifest"
    kv = read_kv(manifest_path)
    if kv.get("kind") not in KINDS:
        raise DataFormatError(f"{manifest_path}: not a baseline checkpoint (kind={kv.get('kind')})")
    W = load_matrix(manifest_path.parent / kv["weights"])
    return BaselineModel(kv["kind"], W, float(kv["gamma"]), float(kv["lam"]), kv.get("encoding", "onehot"))
