"""Leak-free normalization, PCA, QDA, random forests and grid search."""

from .forest import DecisionTree, ForestModel, ForestParams, fit_forest, forest_predict
from .pca import PcaModel, fit_pca
from .pipeline import (
    DEFAULT_GRIDS,
    GridSearchReport,
    TrainedModel,
    expand_grid,
    fit_pipeline,
    grid_search,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from .qda import QdaModel, discriminants, fit_qda, qda_predict, regularize
from .standardize import Standardizer, fit_standardizer

__all__ = [
    "DEFAULT_GRIDS",
    "DecisionTree",
    "ForestModel",
    "ForestParams",
    "GridSearchReport",
    "PcaModel",
    "QdaModel",
    "Standardizer",
    "TrainedModel",
    "discriminants",
    "expand_grid",
    "fit_forest",
    "fit_pca",
    "fit_pipeline",
    "fit_qda",
    "fit_standardizer",
    "forest_predict",
    "grid_search",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "qda_predict",
    "regularize",
    "save_model",
]
