"""Rank pre-trained models for a target classification task.

The score is a two-stage regularized Fisher discriminant fitted on each
model's extracted features; see :func:`sfda_score` and :func:`score_hub`.
"""
from .ensemble import (
    EnsembleReport,
    complementarity_scores,
    ensemble_rank,
    fisher_embeddings,
    select_ensemble,
)
from .errors import DataError, FormatError, SfdaError
from .fda import FdaModel, FeatureSet, adaptive_lambda, class_scores, fit, predict_proba
from .metrics import (
    RankEvaluation,
    evaluate,
    kendall_tau,
    pearson,
    rel_at_k,
    weighted_kendall_tau,
    weighted_pearson,
)
from .pipeline import TransferScore, confmix, outer_class_means, score_hub, sfda_score

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "EnsembleReport",
    "FdaModel",
    "FeatureSet",
    "FormatError",
    "RankEvaluation",
    "SfdaError",
    "TransferScore",
    "adaptive_lambda",
    "class_scores",
    "complementarity_scores",
    "confmix",
    "ensemble_rank",
    "evaluate",
    "fisher_embeddings",
    "fit",
    "kendall_tau",
    "outer_class_means",
    "pearson",
    "predict_proba",
    "rel_at_k",
    "score_hub",
    "select_ensemble",
    "sfda_score",
    "weighted_kendall_tau",
    "weighted_pearson",
]
