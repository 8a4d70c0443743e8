from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, TooFewRows


@dataclass(frozen=True)
class Standardizer:
    """Column z-scoring with statistics frozen at fit time.

    Columns with zero training variance get ``std = 1`` and are listed in
    ``flagged``; they transform to zero on the training data.
    """

    means: np.ndarray
    stds: np.ndarray
    flagged: tuple[int, ...] = ()

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.means.shape[0]:
            raise DimensionMismatch(f"expected {self.means.shape[0]} columns, got shape {X.shape}")
        return (X - self.means) / self.stds

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist(), "flagged": list(self.flagged)}

    @classmethod
    def from_dict(cls, d: dict) -> Standardizer:
        return cls(np.array(d["means"], dtype=np.float64), np.array(d["stds"], dtype=np.float64),
                   tuple(d["flagged"]))


def fit_standardizer(train) -> Standardizer:
    """Population mean and standard deviation (divisor n) of each column."""
    X = np.asarray(train, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows("standardizer needs at least two training rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    scale = np.maximum(np.abs(means), 1.0)
    zero = stds <= 1e-12 * scale
    stds = np.where(zero, 1.0, stds)
    return Standardizer(means, stds, tuple(int(i) for i in np.flatnonzero(zero)))
