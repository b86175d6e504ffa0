"""Minibatch training of the semantic softmax model and gradient checking."""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, init_params, loss_terms, ssl_grad, ssl_loss


class TrainingDiverged(FloatingPointError):
    pass


class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


class Momentum(SGD):
    def __init__(self, lr, momentum=0.9):
        super().__init__(lr)
        self.momentum = momentum
        self.velocity = None

    def step(self, params, grads):
        if self.velocity is None:
            self.velocity = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, self.velocity):
            v *= self.momentum
            v += g
            p -= self.lr * v


class Adam(SGD):
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(name, lr):
    if name == "sgd":
        return SGD(lr)
    if name == "sgd_momentum":
        return Momentum(lr, 0.9)
    if name == "adam":
        return Adam(lr, 0.9, 0.999, 1e-8)
    raise ValueError(f"unknown optimizer {name!r}")


@dataclass
class EpochRecord:
    epoch: int
    total: float
    ce: float
    reg: float
    penalty: float
    seconds: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    params: ModelParams = None

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "total", "ce", "reg", "penalty", "seconds"])
            for r in self.records:
                w.writerow([r.epoch, repr(r.total), repr(r.ce), repr(r.reg), repr(r.penalty), f"{r.seconds:.6f}"])


def epoch_permutation(seed, epoch, n):
    rng = np.random.Generator(np.random.PCG64([seed, 1, epoch]))
    return rng.permutation(n)


def train(dataset, h, init=None, callback=None):
    """Fit ``{V, b}`` on the seen-class training split.

    Each epoch visits a seeded permutation of the training rows in
    minibatches of ``h.batch_size`` (the last one may be short). After every
    epoch the full-data loss terms are recorded. ``callback(epoch, params)``
    is invoked after each epoch if given.

    Deterministic given ``(dataset, h, init)``.
    """
    F = dataset.train_features
    y = np.asarray(dataset.train_labels)
    A = dataset.seen_descriptors
    params = init.copy() if init is not None else init_params(
        A.shape[1], F.shape[1], A.shape[0], h.seed
    )
    V, b = params.V, params.b
    opt = make_optimizer(h.optimizer, h.lr)
    history = TrainHistory()
    n = F.shape[0]

    for epoch in range(1, h.epochs + 1):
        t0 = time.perf_counter()
        order = epoch_permutation(h.seed, epoch, n)
        for k, start in enumerate(range(0, n, h.batch_size)):
            idx = order[start : start + h.batch_size]
            dV, db = ssl_grad(params, F[idx], y[idx], A, h)
            if not (np.all(np.isfinite(dV)) and np.all(np.isfinite(db))):
                terms = loss_terms(params, F[idx], y[idx], A, h)
                raise TrainingDiverged(
                    f"non-finite gradient at epoch {epoch}, batch {k}: "
                    f"ce={terms.ce} reg={terms.reg} penalty={terms.penalty}"
                )
            opt.step((V, b), (dV, db))
        terms = loss_terms(params, F, y, A, h)
        if not np.isfinite(terms.total):
            raise TrainingDiverged(
                f"non-finite loss after epoch {epoch}: "
                f"ce={terms.ce} reg={terms.reg} penalty={terms.penalty}"
            )
        history.records.append(
            EpochRecord(epoch, terms.total, terms.ce, terms.reg, terms.penalty, time.perf_counter() - t0)
        )
        if callback is not None:
            callback(epoch, params)
    history.params = params
    return params, history


def numerical_grad(params, features, labels, descriptors, h, step=1e-6):
    """Central-difference gradient of ``ssl_loss`` w.r.t. ``V`` and ``b``."""
    work = params.copy()
    grads = []
    for p in (work.V, work.b):
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = ssl_loss(work, features, labels, descriptors, h)
            flat[i] = orig - step
            down = ssl_loss(work, features, labels, descriptors, h)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * step)
        grads.append(g)
    return tuple(grads)


def relative_error(a, b, floor=1e-8):
    a, b = np.asarray(a), np.asarray(b)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.abs(a - b) / denom


def grad_check(params, features, labels, descriptors, h, step=1e-6):
    """Max entrywise relative error between ``ssl_grad`` and central differences."""
    if not 0 < step <= 1e-3:
        raise ValueError("step must lie in (0, 1e-3]")
    analytic = ssl_grad(params, features, labels, descriptors, h)
    numeric = numerical_grad(params, features, labels, descriptors, h, step)
    return float(max(relative_error(a, n).max(initial=0.0) for a, n in zip(analytic, numeric)))
