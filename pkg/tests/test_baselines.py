import numpy as np
import pytest

from sslzsl import baselines
from sslzsl.baselines import eszsl_fit, lr_fit, predict, rlr_fit, stationarity
from sslzsl.eval import per_class_top1
from sslzsl.linalg import SingularSystemError


def well_conditioned(rng, m=40, d_f=6, d_a=4, c=5):
    F = rng.standard_normal((m, d_f))
    y = np.arange(m) % c
    A = rng.standard_normal((c, d_a))
    return F, y, A


def test_lr_fixed_point(rng):
    A = rng.standard_normal((10, 8))
    y = np.repeat(np.arange(10), 3)
    model = lr_fit(A[y], y, A, gamma=0.0)
    np.testing.assert_allclose(model.weights, np.eye(8), atol=1e-9)
    np.testing.assert_allclose(A[y] @ model.weights, A[y], atol=1e-9)


@pytest.mark.parametrize("fit", [lr_fit, rlr_fit])
def test_huge_gamma_shrinks_to_zero(rng, fit):
    F, y, A = well_conditioned(rng)
    assert np.linalg.norm(fit(F, y, A, gamma=1e12).weights) < 1e-6


def test_eszsl_huge_regularization_shrinks(rng):
    F, y, A = well_conditioned(rng)
    assert np.linalg.norm(eszsl_fit(F, y, A, gamma=1e12, lam=1.0).weights) < 1e-6


def test_singular_without_ridge(zero_noise):
    ds, _ = zero_noise
    # 10 distinct feature rows in 16 dims: F^T F has rank 10
    with pytest.raises(SingularSystemError):
        lr_fit(ds.train_features, ds.train_labels, ds.seen_descriptors, gamma=0.0)


def test_shapes(rng):
    F, y, A = well_conditioned(rng)
    assert lr_fit(F, y, A).weights.shape == (6, 4)
    assert rlr_fit(F, y, A).weights.shape == (4, 6)
    assert eszsl_fit(F, y, A).weights.shape == (6, 4)


@pytest.mark.parametrize("kind", baselines.KINDS)
def test_stationarity(rng, kind):
    F, y, A = well_conditioned(rng)
    model = baselines.fit(kind, F, y, A, gamma=0.5, lam=0.3)
    assert stationarity(model, F, y, A) < 1e-6


def test_stationarity_signed_encoding(rng):
    F, y, A = well_conditioned(rng)
    model = eszsl_fit(F, y, A, gamma=0.5, lam=0.3, encoding="signed")
    assert stationarity(model, F, y, A) < 1e-6


@pytest.mark.parametrize("kind", baselines.KINDS)
def test_stationarity_check_is_sensitive(rng, kind):
    F, y, A = well_conditioned(rng)
    model = baselines.fit(kind, F, y, A, gamma=0.5, lam=0.3)
    off = baselines.BaselineModel(kind, model.weights * 1.01, model.gamma, model.lam)
    assert stationarity(off, F, y, A) > 1e-4


def test_eszsl_identity_descriptors_reduce_to_ridge(rng):
    F = rng.standard_normal((30, 5))
    y = np.arange(30) % 3
    model = eszsl_fit(F, y, np.eye(3), gamma=0.7, lam=0.0, encoding="signed")
    Y = baselines.signed_onehot(y, 3)
    for j in range(3):
        col = np.linalg.solve(F.T @ F + 0.7 * np.eye(5), F.T @ Y[:, j])
        np.testing.assert_allclose(model.weights[:, j], col, atol=1e-9)


def test_signed_onehot():
    assert baselines.signed_onehot(np.array([1, 0]), 3).tolist() == [[-1, 1, -1], [1, -1, -1]]


def test_rlr_reconstructs_unseen_prototypes(zero_noise):
    ds, v_true = zero_noise
    model = rlr_fit(ds.train_features, ds.train_labels, ds.seen_descriptors, gamma=1e-8)
    np.testing.assert_allclose(ds.unseen_descriptors @ model.weights, ds.unseen_descriptors @ v_true, atol=1e-6)


@pytest.mark.parametrize("kind", baselines.KINDS)
def test_zero_noise_perfect(zero_noise, kind):
    ds, _ = zero_noise
    model = baselines.fit(kind, ds.train_features, ds.train_labels, ds.seen_descriptors, gamma=0.1, lam=0.1)
    pred = predict(model, ds.test_features, ds.unseen_descriptors)
    _, mean = per_class_top1(pred, ds.test_labels, ds.num_unseen)
    assert mean == 1.0


def test_deterministic(noisy):
    ds, _ = noisy
    for kind in baselines.KINDS:
        a = baselines.fit(kind, ds.train_features, ds.train_labels, ds.seen_descriptors)
        b = baselines.fit(kind, ds.train_features, ds.train_labels, ds.seen_descriptors)
        assert a.weights.tobytes() == b.weights.tobytes()


def test_checkpoint_roundtrip(tmp_path, noisy):
    ds, _ = noisy
    model = eszsl_fit(ds.train_features, ds.train_labels, ds.seen_descriptors, 0.1, 10.0, "signed")
    baselines.save_baseline(tmp_path, model)
    back = baselines.load_baseline(tmp_path / "model.manifest")
    assert back.kind == "eszsl" and back.gamma == 0.1 and back.lam == 10.0
    assert back.encoding == "signed"
    assert back.weights.tobytes() == model.weights.tobytes()


def test_unknown_kind(rng):
    F, y, A = well_conditioned(rng)
    with pytest.raises(ValueError):
        baselines.fit("svm", F, y, A)


def test_label_targets():
    assert baselines.label_targets([1, 0], 2).tolist() == [[0, 1], [1, 0]]
    with pytest.raises(ValueError):
        baselines.label_targets([0], 2, "ternary")
