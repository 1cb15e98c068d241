import numpy as np
import pytest

from memfuse import regression
from memfuse.errors import SchemaError
from memfuse.regression import (
    RidgeModel,
    fit_bayesian_ridge,
    load_embeddings,
    load_model,
    predict_ridge,
    save_model,
    write_embeddings,
)


def closed_form_ridge(X, y, alpha, lam):
    """Oracle: solve (lam*I + alpha*Xc'Xc) w = alpha*Xc'yc directly."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    yc = y - ym
    d = X.shape[1]
    w = np.linalg.solve(lam * np.eye(d) + alpha * (Xc.T @ Xc), alpha * (Xc.T @ yc))
    return w, ym - w @ xm


def linear_data(n=200, d=4, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = 2.0 * X[:, 0] + noise * rng.normal(size=n)
    return X, y


def test_recovers_single_active_coefficient():
    X, y = linear_data()
    model = fit_bayesian_ridge(X, y)
    assert abs(model.coef[0] - 2.0) < 1e-2
    assert np.all(np.abs(model.coef[1:]) < 1e-2)


def test_noiseless_fit_reproduces_targets():
    X, y = linear_data(seed=3)
    model = fit_bayesian_ridge(X, y)
    pred = predict_ridge(model, X)
    rms = float(np.sqrt(np.mean((pred - y) ** 2)))
    assert rms < 1e-6


def test_zero_design_predicts_target_mean():
    y = np.array([0.1, 0.4, 0.9, 0.3, 0.7])
    X = np.zeros((5, 3))
    model = fit_bayesian_ridge(X, y)
    assert np.all(model.coef == 0.0)
    pred = predict_ridge(model, X)
    assert np.allclose(pred, y.mean(), atol=1e-12)


def test_frozen_precisions_match_closed_form():
    X, y = linear_data(n=60, d=6, seed=5, noise=0.3)
    alpha, lam = 2.5, 0.7
    model = fit_bayesian_ridge(X, y, alpha0=alpha, lambda0=lam, optimize=False)
    w_ref, b_ref = closed_form_ridge(X, y, alpha, lam)
    assert np.max(np.abs(model.coef - w_ref)) < 1e-6
    assert abs(model.intercept - b_ref) < 1e-6
    assert model.alpha == alpha
    assert model.lambda_ == lam
    assert model.n_iterations_run == 0


def test_stronger_prior_shrinks_weights():
    X, y = linear_data(n=80, d=5, seed=9, noise=0.2)
    norms = []
    for lam in (1e2, 1e4, 1e6):
        model = fit_bayesian_ridge(X, y, alpha0=1.0, lambda0=lam, optimize=False)
        norms.append(float(np.linalg.norm(model.coef)))
    assert norms[0] > norms[1] > norms[2]


def test_predictions_invariant_to_feature_translation():
    X, y = linear_data(n=50, d=3, seed=13, noise=0.1)
    shift = np.array([10.0, -4.0, 250.0])
    a = predict_ridge(fit_bayesian_ridge(X, y), X)
    b = predict_ridge(fit_bayesian_ridge(X + shift, y), X + shift)
    assert np.max(np.abs(a - b)) < 1e-9


def test_fit_is_deterministic():
    X, y = linear_data(n=70, d=8, seed=17, noise=0.4)
    m1 = fit_bayesian_ridge(X, y)
    m2 = fit_bayesian_ridge(X, y)
    np.testing.assert_array_equal(m1.coef, m2.coef)
    assert m1.intercept == m2.intercept
    assert m1.alpha == m2.alpha
    assert m1.lambda_ == m2.lambda_
    assert m1.n_iterations_run == m2.n_iterations_run


def test_fit_converges_within_budget():
    X, y = linear_data(n=100, d=6, seed=21, noise=0.5)
    model = fit_bayesian_ridge(X, y)
    assert 1 <= model.n_iterations_run < 300
    assert model.alpha > 0 and model.lambda_ > 0


def test_constant_prediction_from_zero_coefficients():
    model = RidgeModel(
        coef=np.zeros(3), intercept=0.5, alpha=1.0, lambda_=1.0, n_iterations_run=0
    )
    pred = predict_ridge(model, np.random.default_rng(0).normal(size=(7, 3)))
    assert np.all(pred == 0.5)


def test_predict_rejects_dimension_mismatch():
    model = RidgeModel(
        coef=np.zeros(4), intercept=0.0, alpha=1.0, lambda_=1.0, n_iterations_run=0
    )
    with pytest.raises(ValueError, match="dimension mismatch"):
        predict_ridge(model, np.zeros((5, 3)))


@pytest.mark.parametrize(
    "X,y,match",
    [
        (np.zeros((3, 2, 1)), np.zeros(3), "2-d"),
        (np.zeros((4, 2)), np.zeros(3), "does not match"),
        (np.zeros((1, 2)), np.zeros(1), "at least 2"),
        (np.array([[1.0], [np.inf]]), np.array([0.0, 1.0]), "non-finite"),
        (np.array([[1.0], [2.0]]), np.array([0.5, 0.5]), "zero variance"),
    ],
)
def test_fit_input_validation(X, y, match):
    with pytest.raises(ValueError, match=match):
        fit_bayesian_ridge(X, y)


def test_model_validation():
    with pytest.raises(ValueError, match="alpha"):
        RidgeModel(coef=np.zeros(2), intercept=0.0, alpha=0.0, lambda_=1.0, n_iterations_run=0)
    with pytest.raises(ValueError, match="finite"):
        RidgeModel(
            coef=np.array([np.nan]), intercept=0.0, alpha=1.0, lambda_=1.0, n_iterations_run=0
        )


# ---------------------------------------------------------------------------
# persistence


def test_model_json_round_trip(tmp_path):
    X, y = linear_data(n=40, d=5, seed=29, noise=0.2)
    model = fit_bayesian_ridge(X, y)
    path = tmp_path / "model.json"
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_array_equal(back.coef, model.coef)
    assert back.intercept == model.intercept
    assert back.alpha == model.alpha
    assert back.lambda_ == model.lambda_
    assert back.n_iterations_run == model.n_iterations_run


def test_load_model_rejects_garbage(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"coefficients": [0.1]}', encoding="utf-8")
    with pytest.raises(SchemaError, match="invalid ridge model"):
        load_model(path)
    path.write_text("not json", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_model(path)


def test_embeddings_round_trip(tmp_path):
    rng = np.random.default_rng(33)
    ids = [f"vid{i}" for i in range(6)]
    X = rng.normal(size=(6, regression.DEFAULT_EMBEDDING_DIM))
    path = tmp_path / "embeddings.csv"
    write_embeddings(ids, X, path)
    back_ids, back = load_embeddings(path)
    assert back_ids == ids
    assert back.shape == X.shape
    np.testing.assert_array_equal(back, X)


@pytest.mark.parametrize(
    "text,match",
    [
        ("video_id,e0\nv1,0.5\nv1,0.6\n", "duplicate video_id"),
        ("video_id,e0\nv1,abc\n", "non-numeric"),
        ("video_id,e0\nv1,inf\n", "non-finite"),
        ("video_id,x0\nv1,0.5\n", "header"),
        ("clip,e0\nv1,0.5\n", "header"),
        ("video_id,e0,e1\nv1,0.5\n", "expected 3 cells"),
        ("", "empty header"),
    ],
)
def test_load_embeddings_errors(tmp_path, text, match):
    path = tmp_path / "bad.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(SchemaError, match=match):
        load_embeddings(path)


def test_load_embeddings_missing_file(tmp_path):
    with pytest.raises(SchemaError, match="not found"):
        load_embeddings(tmp_path / "nope.csv")
