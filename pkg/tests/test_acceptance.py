"""Exit criteria for the package, one test per criterion.

Each test records a one-line detail; the terminal summary prints PASS/FAIL
per criterion.
"""

import itertools
import time

import numpy as np
import pytest

from oracles import ap_sorted_list, plain_softmax_loss
from sslzsl import baselines
from sslzsl.cli import main
from sslzsl.data import SyntheticSpec, make_synthetic
from sslzsl.eval import classify, cosine_scores, evaluate, per_class_top1, prototype_diagnostic, retrieval_ap
from sslzsl.model import Hyperparams, ModelParams, reconstruct_prototypes, ssl_loss
from sslzsl.optim import grad_check, train

ZERO_NOISE = dict(d_a=8, d_f=16, seen_classes=10, unseen_classes=4, per_class=20, noise_sigma=0.0)


@pytest.fixture
def detail(record_property):
    def put(text):
        record_property("detail", text)
    return put


def test_gradient_correctness(detail):
    t0 = time.perf_counter()
    worst, n = 0.0, 0
    grid = itertools.product([0.0, 1e-3], [0.0, 0.1, 1.0], [0.5, 1.0])
    for k, (lam, beta, alpha) in enumerate(grid):
        for draw in range(2):
            rng = np.random.default_rng([k, draw])
            m, c, d_a, d_f = 6, 4, 3, 5
            F = rng.standard_normal((m, d_f))
            F /= np.linalg.norm(F, axis=1, keepdims=True)
            A = rng.standard_normal((c, d_a))
            y = rng.integers(0, c, size=m)
            params = ModelParams(rng.standard_normal((d_a, d_f)) * 0.5, rng.standard_normal(c) * 0.1)
            err = grad_check(params, F, y, A, Hyperparams(lam=lam, beta=beta, alpha=alpha), step=1e-6)
            worst, n = max(worst, err), n + 1
    elapsed = time.perf_counter() - t0
    detail(f"{n} configs, max rel err {worst:.2e} (< 1e-5), {elapsed:.2f}s (< 10s)")
    assert n >= 20
    assert worst < 1e-5
    assert elapsed < 10


def test_softmax_reduction(detail):
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        c, d_f, m = int(rng.integers(2, 7)), int(rng.integers(1, 6)), int(rng.integers(1, 12))
        W = rng.standard_normal((c, d_f))
        b = rng.standard_normal(c)
        F = rng.standard_normal((m, d_f))
        y = rng.integers(0, c, size=m)
        got = ssl_loss(ModelParams(W, b), F, y, np.eye(c), Hyperparams(lam=0.0, beta=0.0))
        worst = max(worst, abs(got - plain_softmax_loss(W.tolist(), b.tolist(), F.tolist(), y.tolist())))
    detail(f"100 batches, max |diff| {worst:.1e} (<= 1e-12)")
    assert worst <= 1e-12


def test_zero_noise_recovery(detail):
    t0 = time.perf_counter()
    accs, maps = [], []
    for seed in range(5):
        ds, _ = make_synthetic(SyntheticSpec(**ZERO_NOISE, seed=seed))
        params, _ = train(ds, Hyperparams())
        report = evaluate(params, ds)
        accs.append(report.mean_accuracy)
        maps.append(report.map)
    elapsed = time.perf_counter() - t0
    detail(f"5 datasets, min acc {min(accs):.4f} (= 1), min mAP {min(maps):.4f} (= 1), {elapsed:.2f}s (< 60s)")
    assert accs == [1.0] * 5
    assert maps == [1.0] * 5
    assert elapsed < 60


def test_noisy_ablation(detail):
    t0 = time.perf_counter()
    acc_wins = dist_wins = 0
    gains = []
    for seed in range(10):
        ds, _ = make_synthetic(SyntheticSpec(**{**ZERO_NOISE, "noise_sigma": 0.3}, seed=seed))
        out = {}
        for beta in (0.0, 1.0):
            params, _ = train(ds, Hyperparams(beta=beta, seed=seed))
            out[beta] = (evaluate(params, ds).mean_accuracy, prototype_diagnostic(params, ds).mean())
        # equal accuracies can differ in the last ulp after averaging
        acc_wins += out[1.0][0] >= out[0.0][0] - 1e-12
        dist_wins += out[1.0][1] <= out[0.0][1]
        gains.append(out[1.0][0] - out[0.0][0])
    elapsed = time.perf_counter() - t0
    detail(f"acc(beta=1) >= acc(beta=0) in {acc_wins}/10, distance smaller in {dist_wins}/10 (>= 7 each), "
           f"mean gain {100 * np.mean(gains):.2f} pts, {elapsed:.1f}s (< 300s)")
    assert acc_wins >= 7
    assert dist_wins >= 7
    assert elapsed < 300


def test_map_oracle_equivalence(detail):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    checked = 0
    for n in range(1, 9):
        draws = [rng.random(n), rng.integers(0, 3, size=n).astype(float), np.zeros(n)]
        for pattern in itertools.product([False, True], repeat=n):
            if not any(pattern):
                continue
            for scores in draws:
                assert retrieval_ap(scores, pattern) == ap_sorted_list(scores.tolist(), pattern)
                checked += 1
    elapsed = time.perf_counter() - t0
    detail(f"{checked} galleries (n <= 8, all patterns, 3 score draws), exact match, {elapsed:.2f}s (< 30s)")
    assert elapsed < 30


def test_argmax_scale_invariance(detail):
    ds, _ = make_synthetic(SyntheticSpec(**{**ZERO_NOISE, "noise_sigma": 0.3}, seed=0))
    params, _ = train(ds, Hyperparams())
    rows = np.random.default_rng(1).standard_normal((1000, ds.feature_dim))
    base = classify(cosine_scores(rows, reconstruct_prototypes(params.V, ds.unseen_descriptors)))
    changed = 0
    for c in (0.1, 10.0):
        pred = classify(cosine_scores(rows, reconstruct_prototypes(params.V, c * ds.unseen_descriptors)))
        changed += int(np.sum(pred != base))
    detail(f"1000 rows x c in (0.1, 10): {changed} labels changed (= 0)")
    assert changed == 0


def test_baseline_sanity(detail):
    ds, _ = make_synthetic(SyntheticSpec(**ZERO_NOISE, seed=0))
    parts = []
    for kind in baselines.KINDS:
        model = baselines.fit(kind, ds.train_features, ds.train_labels, ds.seen_descriptors)
        pred = baselines.predict(model, ds.test_features, ds.unseen_descriptors)
        _, acc = per_class_top1(pred, ds.test_labels, ds.num_unseen)
        stat = baselines.stationarity(model, ds.train_features, ds.train_labels, ds.seen_descriptors)
        parts.append(f"{kind} acc {acc:.2f} stat {stat:.1e}")
        assert acc == 1.0, kind
        assert stat < 1e-6, kind
    detail("; ".join(parts) + " (acc = 1, stat < 1e-6)")


def test_determinism(detail, tmp_path):
    dirs = [tmp_path / "g1", tmp_path / "g2"]
    for d in dirs:
        assert main(["gen", "--seed", "7", "--noise", "0.3", "--outdir", str(d)]) == 0
    gen_files = sorted(p.name for p in dirs[0].iterdir())
    same_gen = all((dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes() for f in gen_files)
    models = [tmp_path / "m1", tmp_path / "m2"]
    for m in models:
        assert main(["train", "--data", str(dirs[0] / "dataset.manifest"), "--outdir", str(m)]) == 0
    ckpt = ("V.bin", "b.csv", "model.manifest")
    same_ckpt = all((models[0] / f).read_bytes() == (models[1] / f).read_bytes() for f in ckpt)
    detail(f"gen: {len(gen_files)} files identical={same_gen}; train checkpoint identical={same_ckpt}")
    assert same_gen and same_ckpt
