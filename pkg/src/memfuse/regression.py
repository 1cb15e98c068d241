"""Bayesian ridge regression over per-video audio embedding vectors.

Hyperparameters follow the evidence approximation: with the posterior mean
``w = (lambda*I + alpha*X'X)^-1 alpha*X'y``, the effective number of
well-determined parameters is ``gamma = sum(alpha*s_i / (lambda + alpha*s_i))``
over the eigenvalues ``s_i`` of ``X'X``, and the precisions update as
``lambda <- gamma / |w|^2`` and ``alpha <- (n - gamma) / |y - Xw|^2`` until
the relative parameter change drops below ``tol``.  The eigendecomposition is
computed once per fit, so each iteration is O(d).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError

DEFAULT_EMBEDDING_DIM = 384  # three 128-dim per-second embeddings


@dataclass(frozen=True)
class RidgeModel:
    coef: np.ndarray
    intercept: float
    alpha: float
    lambda_: float
    n_iterations_run: int

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=np.float64)
        object.__setattr__(self, "coef", coef)
        for name in ("alpha", "lambda_"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not np.all(np.isfinite(coef)) or not math.isfinite(self.intercept):
            raise ValueError("model parameters must be finite")


def fit_bayesian_ridge(
    X: np.ndarray,
    y: np.ndarray,
    max_iter: int = 300,
    tol: float = 1e-4,
    alpha0: float | None = None,
    lambda0: float = 1.0,
    optimize: bool = True,
) -> RidgeModel:
    """Fit by iterated evidence updates.

    ``alpha0`` defaults to ``1/var(y)``.  With ``optimize=False`` the
    precisions stay frozen at their initial values and the returned
    coefficients are the closed-form ridge solution for (alpha0, lambda0).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d matrix")
    n, d = X.shape
    if y.shape != (n,):
        raise ValueError(f"y length {y.shape} does not match {n} rows of X")
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite input")
    y_var = float(np.var(y))
    if y_var == 0.0:
        raise ValueError("degenerate y: zero variance")

    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean

    xtx = Xc.T @ Xc
    eigvals, eigvecs = np.linalg.eigh(xtx)
    eigvals = np.clip(eigvals, 0.0, None)
    proj = eigvecs.T @ (Xc.T @ yc)

    alpha = float(alpha0) if alpha0 is not None else 1.0 / y_var
    lam = float(lambda0)
    if alpha <= 0 or lam <= 0:
        raise ValueError("initial precisions must be positive")

    def posterior_mean(a: float, l: float) -> np.ndarray:
        return eigvecs @ (a * proj / (l + a * eigvals))

    w = posterior_mean(alpha, lam)
    iterations = 0
    if optimize:
        for iterations in range(1, max_iter + 1):
            gamma = float(np.sum(alpha * eigvals / (lam + alpha * eigvals)))
            w_norm2 = float(w @ w)
            residual = yc - Xc @ w
            rss = float(residual @ residual)
            lam_new = gamma / w_norm2 if w_norm2 > 0 else lam
            alpha_new = (n - gamma) / rss if rss > 0 and gamma < n else alpha
            change = max(
                abs(alpha_new - alpha) / max(abs(alpha), 1e-300),
                abs(lam_new - lam) / max(abs(lam), 1e-300),
            )
            alpha, lam = alpha_new, lam_new
            w = posterior_mean(alpha, lam)
            if change < tol:
                break

    intercept = y_mean - float(w @ x_mean)
    return RidgeModel(
        coef=w, intercept=intercept, alpha=alpha, lambda_=lam, n_iterations_run=iterations
    )


def predict_ridge(model: RidgeModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.coef.shape[0]:
        raise ValueError(
            f"dimension mismatch: model expects {model.coef.shape[0]} features, "
            f"got shape {X.shape}"
        )
    return X @ model.coef + model.intercept


def save_model(model: RidgeModel, path: str | Path) -> None:
    payload = {
        "coefficients": model.coef.tolist(),
        "intercept": model.intercept,
        "alpha": model.alpha,
        "lambda": model.lambda_,
        "n_iterations_run": model.n_iterations_run,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path) -> RidgeModel:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return RidgeModel(
            coef=np.asarray(obj["coefficients"], dtype=np.float64),
            intercept=float(obj["intercept"]),
            alpha=float(obj["alpha"]),
            lambda_=float(obj["lambda"]),
            n_iterations_run=int(obj.get("n_iterations_run", 0)),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: invalid ridge model file: {exc}") from exc


def load_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Embedding CSV ``video_id,e0,...,e{d-1}`` -> (ids, n x d matrix)."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"embedding file not found: {path}")
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty header") from None
        d = len(header) - 1
        if d < 1 or header[0] != "video_id" or header[1:] != [f"e{i}" for i in range(d)]:
            raise SchemaError(f"{path}: header must be video_id,e0,...,e{{d-1}}")
        seen = set()
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise SchemaError(f"{path}: row {rowno}: expected {d + 1} cells")
            vid = row[0]
            if vid in seen:
                raise SchemaError(f"{path}: row {rowno}: duplicate video_id {vid!r}")
            seen.add(vid)
            try:
                values = [float(x) for x in row[1:]]
            except ValueError:
                raise SchemaError(f"{path}: row {rowno}: non-numeric cell") from None
            if not all(math.isfinite(v) for v in values):
                raise SchemaError(f"{path}: row {rowno}: non-finite embedding value")
            ids.append(vid)
            rows.append(values)
    return ids, np.asarray(rows, dtype=np.float64).reshape(len(ids), d)


def write_embeddings(ids: list[str], X: np.ndarray, path: str | Path) -> None:
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id"] + [f"e{i}" for i in range(X.shape[1])])
        for vid, row in zip(ids, X):
            writer.writerow([vid] + [f"{v:.17g}" for v in row])


__all__ = [
    "DEFAULT_EMBEDDING_DIM",
    "RidgeModel",
    "fit_bayesian_ridge",
    "predict_ridge",
    "save_model",
    "load_model",
    "load_embeddings",
    "write_embeddings",
]
