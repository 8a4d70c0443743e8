"""Quadratic discriminant analysis with shrinkage towards a spherical covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.special import logsumexp

from ..errors import ClassTooSmall, DimensionMismatch, SingularCovariance


@dataclass(frozen=True)
class QdaModel:
    class_priors: np.ndarray  # (K,)
    class_means: np.ndarray  # (K, k)
    class_covariances: np.ndarray  # (K, k, k), regularised
    reg_lambda: float
    cholesky_factors: np.ndarray  # (K, k, k), lower

    @property
    def n_classes(self) -> int:
        return self.class_priors.shape[0]

    def to_dict(self) -> dict:
        return {
            "class_priors": self.class_priors.tolist(),
            "class_means": self.class_means.tolist(),
            "class_covariances": self.class_covariances.tolist(),
            "reg_lambda": self.reg_lambda,
        }

    @classmethod
    def from_dict(cls, d: dict) -> QdaModel:
        priors = np.array(d["class_priors"], dtype=np.float64)
        means = np.array(d["class_means"], dtype=np.float64).reshape(priors.shape[0], -1)
        k = means.shape[1]
        covs = np.array(d["class_covariances"], dtype=np.float64).reshape(priors.shape[0], k, k)
        return cls(priors, means, covs, float(d["reg_lambda"]), _factor_all(covs))


def regularize(cov: np.ndarray, reg_lambda: float) -> np.ndarray:
    """``(1 - lambda) * cov + lambda * (trace(cov) / k) * I``."""
    k = cov.shape[0]
    return (1.0 - reg_lambda) * cov + reg_lambda * (np.trace(cov) / k) * np.eye(k)


def _factor_all(covs: np.ndarray) -> np.ndarray:
    factors = np.empty_like(covs)
    for c, cov in enumerate(covs):
        try:
            factors[c] = cholesky(cov, lower=True)
        except LinAlgError:
            raise SingularCovariance(
                f"covariance of class {c} is not positive definite; increase reg_lambda"
            ) from None
    return factors


def fit_qda(X, y, reg_lambda: float = 0.0, n_classes: int | None = None) -> QdaModel:
    """Per-class Gaussian fit: means, unbiased covariances (divisor n_c - 1), frequency priors."""
    if not 0 <= reg_lambda <= 1:
        raise ValueError("reg_lambda must lie in [0, 1]")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch("X must be (n, k) with one label per row")
    K = int(y.max()) + 1 if n_classes is None else n_classes
    n, k = X.shape
    priors = np.empty(K)
    means = np.empty((K, k))
    covs = np.empty((K, k, k))
    for c in range(K):
        Xc = X[y == c]
        if Xc.shape[0] < 2:
            raise ClassTooSmall(f"class {c} has {Xc.shape[0]} training samples, need >= 2")
        priors[c] = Xc.shape[0] / n
        means[c] = Xc.mean(axis=0)
        D = Xc - means[c]
        covs[c] = regularize(D.T @ D / (Xc.shape[0] - 1), reg_lambda)
    return QdaModel(priors, means, covs, float(reg_lambda), _factor_all(covs))


def discriminants(model: QdaModel, X) -> np.ndarray:
    """``-1/2 (x - mu)' S^-1 (x - mu) - 1/2 ln|S| + ln pi`` for every class, via Cholesky solves."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.class_means.shape[1]:
        raise DimensionMismatch(f"expected {model.class_means.shape[1]} features, got {X.shape[1]}")
    out = np.empty((X.shape[0], model.n_classes))
    for c in range(model.n_classes):
        L = model.cholesky_factors[c]
        z = solve_triangular(L, (X - model.class_means[c]).T, lower=True)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        out[:, c] = -0.5 * np.sum(z * z, axis=0) - 0.5 * logdet + np.log(model.class_priors[c])
    return out


def qda_predict(model: QdaModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels (ties to the lower class index) and log-posterior probabilities."""
    g = discriminants(model, X)
    log_post = g - logsumexp(g, axis=1, keepdims=True)
    return np.argmax(g, axis=1), log_post
