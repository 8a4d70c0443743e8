"""Standardize -> PCA -> classifier pipelines, grid search and model files."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..errors import EmptyGrid, NeurobandError, SchemaMismatch
from ..features import DatasetSplit, feature_matrix
from ..metrics import macro_f1
from .forest import ForestModel, ForestParams, fit_forest, forest_predict
from .pca import PcaModel, fit_pca
from .qda import QdaModel, fit_qda, qda_predict
from .standardize import Standardizer, fit_standardizer

SCHEMA_VERSION = 1
KINDS = ("qda", "rf")

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "qda": {
        "reg_lambda": [1e-4, 1e-3, 1e-2, 0.1, 0.5],
        "retained_variance": [0.90, 0.95, 0.99, 1.0],
    },
    "rf": {
        "n_estimators": [100, 300, 500],
        "max_depth": [0, 4, 8, 16],
        "min_samples_leaf": [1, 2, 5],
        "retained_variance": [0.95],
    },
}


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    params: dict
    seed: int
    n_classes: int
    standardizer: Standardizer
    pca: PcaModel
    classifier: QdaModel | ForestModel
    class_names: tuple[str, ...] = ()
    training_subjects: tuple[str, ...] = ()

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Labels and an ``(n, K)`` score matrix (posterior or vote fraction)."""
        Z = self.pca.project(self.standardizer.transform(X))
        if self.kind == "qda":
            labels, log_post = qda_predict(self.classifier, Z)
            return labels, np.exp(log_post)
        return forest_predict(self.classifier, Z)


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown pipeline kind {kind!r}; expected one of {KINDS}")


def fit_pipeline(kind: str, params: Mapping, X, y, seed: int = 0,
                 n_classes: int | None = None, class_names: Sequence[str] = ()) -> TrainedModel:
    """Fit standardizer and PCA on ``X`` only, then the classifier on the projection."""
    _check_kind(kind)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    K = int(y.max()) + 1 if n_classes is None else n_classes
    params = dict(params)
    std = fit_standardizer(X)
    pca = fit_pca(std.transform(X), params.get("retained_variance", 1.0))
    Z = pca.project(std.transform(X))
    if kind == "qda":
        clf = fit_qda(Z, y, params.get("reg_lambda", 0.0), n_classes=K)
    else:
        fp = ForestParams(
            n_estimators=int(params.get("n_estimators", 100)),
            max_depth=int(params.get("max_depth", 0)),
            min_samples_leaf=int(params.get("min_samples_leaf", 1)),
            features_per_split=params.get("features_per_split"),
        )
        clf = fit_forest(Z, y, fp, seed=seed, n_classes=K)
    return TrainedModel(kind, params, int(seed), K, std, pca, clf, tuple(class_names))


def expand_grid(grid: Mapping[str, Sequence]) -> list[dict]:
    """Cartesian product in declared key order (last key varies fastest)."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise EmptyGrid("grid has no candidates")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass
class GridSearchReport:
    kind: str
    candidates: list[tuple[dict, float]]
    best: int
    refit_model: TrainedModel
    refit_with_val: bool = True
    errors: list[tuple[dict, str]] = field(default_factory=list)

    @property
    def best_params(self) -> dict:
        return self.candidates[self.best][0]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "candidates": [{"params": p, "val_macro_f1": s} for p, s in self.candidates],
            "best": self.best,
            "best_params": self.best_params,
            "refit_with_val": self.refit_with_val,
            "errors": [{"params": p, "error": e} for p, e in self.errors],
        }


def grid_search(kind: str, split: DatasetSplit, grid: Mapping[str, Sequence] | None = None,
                seed: int = 0, refit_with_val: bool = True, n_classes: int | None = None,
                class_names: Sequence[str] = ()) -> GridSearchReport:
    """Pick hyperparameters by validation macro-F1 and refit the winner.

    Candidates that cannot be fitted (e.g. a singular covariance) score -1 and
    are recorded in ``errors``. Ties go to the earliest candidate. The test
    partition is never touched here.
    """
    _check_kind(kind)
    split.check()
    candidates = expand_grid(DEFAULT_GRIDS[kind] if grid is None else grid)
    Xtr, ytr = feature_matrix(split.train)
    Xva, yva = feature_matrix(split.val)
    K = int(max(ytr.max(), yva.max())) + 1 if n_classes is None else n_classes

    scored: list[tuple[dict, float]] = []
    errors = []
    best, best_score = 0, -np.inf
    for i, params in enumerate(candidates):
        try:
            model = fit_pipeline(kind, params, Xtr, ytr, seed, K)
            pred, _ = model.predict(Xva)
            score = macro_f1(yva, pred, K)
        except NeurobandError as exc:
            errors.append((params, f"{type(exc).__name__}: {exc}"))
            score = -1.0
        scored.append((params, float(score)))
        if score > best_score:
            best, best_score = i, score

    if refit_with_val:
        Xfit, yfit = np.vstack([Xtr, Xva]), np.concatenate([ytr, yva])
    else:
        Xfit, yfit = Xtr, ytr
    refit = fit_pipeline(kind, candidates[best], Xfit, yfit, seed, K, class_names)
    fit_rows = split.train + split.val if refit_with_val else split.train
    refit = replace(refit, training_subjects=tuple(sorted({r.subject_id for r in fit_rows})))
    return GridSearchReport(kind, scored, best, refit, refit_with_val, errors)


# ---------------------------------------------------------------------------
# model files


def model_to_dict(model: TrainedModel, grid_report: GridSearchReport | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": model.kind,
        "params": model.params,
        "seed": model.seed,
        "n_classes": model.n_classes,
        "class_names": list(model.class_names),
        "training_subjects": list(model.training_subjects),
        "standardizer": model.standardizer.to_dict(),
        "pca": model.pca.to_dict(),
        "classifier": model.classifier.to_dict(),
        "grid_report": None if grid_report is None else grid_report.to_dict(),
    }


def save_model(path, model: TrainedModel, grid_report: GridSearchReport | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, grid_report), indent=1) + "\n",
                          encoding="utf-8")


def model_from_dict(doc: dict) -> TrainedModel:
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"unsupported model schema version {doc.get('schema_version') if isinstance(doc, dict) else None!r}"
        )
    kind = doc.get("kind")
    if kind not in KINDS:
        raise SchemaMismatch(f"unknown model kind {kind!r}")
    try:
        clf = QdaModel.from_dict(doc["classifier"]) if kind == "qda" else ForestModel.from_dict(doc["classifier"])
        return TrainedModel(
            kind=kind,
            params=dict(doc["params"]),
            seed=int(doc["seed"]),
            n_classes=int(doc["n_classes"]),
            standardizer=Standardizer.from_dict(doc["standardizer"]),
            pca=PcaModel.from_dict(doc["pca"]),
            classifier=clf,
            class_names=tuple(doc.get("class_names", ())),
            training_subjects=tuple(doc.get("training_subjects", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"model document is malformed: {exc}") from None


def load_model(path) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path} is not valid JSON: {exc}") from None
    return model_from_dict(doc)
