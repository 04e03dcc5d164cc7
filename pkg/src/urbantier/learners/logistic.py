"""L2-regularized logistic regression fit by full-batch Newton iterations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FitError


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean log-loss plus l2*||w||^2/2 (intercept unpenalized) and its gradient.

    ``params`` is [w_0..w_{d-1}, intercept].
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    p = sigmoid(z)
    eps = 1e-15
    loss = -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
    loss += 0.5 * l2 * float(w @ w)
    r = (p - y) / len(y)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r + l2 * w
    grad[-1] = np.sum(r)
    return loss, grad


@dataclass
class LogisticModel:
    coef: np.ndarray
    intercept: float

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(X @ self.coef + self.intercept)

    def to_dict(self) -> dict:
        return {"kind": "logistic", "coef": self.coef.tolist(),
                "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["coef"], dtype=np.float64), float(d["intercept"]))


def fit_logistic(X: np.ndarray, y: np.ndarray, l2_penalty: float = 1.0,
                 max_iter: int = 100, tol: float = 1e-8) -> LogisticModel:
    """Newton's method on internally standardized features; coefficients are
    mapped back to raw feature scale."""
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise FitError("logistic regression needs both classes present")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    Xs = (X - mu) / sd

    n, d = Xs.shape
    params = np.zeros(d + 1)
    for _ in range(max_iter):
        _, grad = loss_and_grad(params, Xs, y, l2_penalty)
        if np.max(np.abs(grad)) < tol:
            break
        p = sigmoid(Xs @ params[:-1] + params[-1])
        w_diag = np.maximum(p * (1 - p), 1e-10) / n
        A = np.hstack([Xs, np.ones((n, 1))])
        H = A.T @ (A * w_diag[:, None])
        H[:d, :d] += l2_penalty * np.eye(d)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        params = params - step

    coef = params[:-1] / sd
    intercept = float(params[-1] - np.sum(params[:-1] * mu / sd))
    return LogisticModel(coef, intercept)
