from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateMatrix, DimensionMismatch, TooFewRows

_CUMULATIVE_SLACK = 1e-12


@dataclass(frozen=True)
class PcaModel:
    center: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance_ratio: np.ndarray  # (k,)
    retained_variance: float

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def project(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.center.shape[0]:
            raise DimensionMismatch(f"expected {self.center.shape[0]} columns, got shape {X.shape}")
        return (X - self.center) @ self.components.T

    def reconstruct(self, Z) -> np.ndarray:
        return np.asarray(Z) @ self.components + self.center

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "components": self.components.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "retained_variance": self.retained_variance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PcaModel:
        center = np.array(d["center"], dtype=np.float64)
        comps = np.array(d["components"], dtype=np.float64).reshape(-1, center.shape[0])
        return cls(center, comps, np.array(d["explained_variance_ratio"], dtype=np.float64),
                   float(d["retained_variance"]))


def fit_pca(X, retained_variance: float = 0.95) -> PcaModel:
    """Keep the fewest principal axes whose cumulative variance ratio reaches the target."""
    if not 0 < retained_variance <= 1:
        raise ValueError("retained_variance must lie in (0, 1]")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows("PCA needs at least two rows")
    center = X.mean(axis=0)
    Xc = X - center
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    var = s**2
    total = var.sum()
    if total <= 0 or not np.isfinite(total):
        raise DegenerateMatrix("data has zero variance")
    ratio = var / total
    cumulative = np.cumsum(ratio)
    k = int(np.searchsorted(cumulative, retained_variance - _CUMULATIVE_SLACK) + 1)
    k = min(k, int(np.sum(s > s[0] * 1e-12)))
    # sign convention: largest-magnitude loading of each axis is positive
    comps = vt[:k].copy()
    flip = np.sign(comps[np.arange(k), np.argmax(np.abs(comps), axis=1)])
    comps *= flip[:, None]
    return PcaModel(center, comps, ratio[:k].copy(), float(retained_variance))
