"""Two-stage self-challenging transferability score.

Stage one fits the regularized discriminant on the raw features and reads off
each sample's confidence in its own label.  ConfMix then pulls every sample
towards the mean of the *other* classes by ``1 - confidence``, stage two
refits on the mixed features, and the mean log-probability of the true labels
under stage two is the model's score.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fda
from .errors import DataError, LabelMismatch, SingleClassDominates, StageError

log = logging.getLogger(__name__)

LOG_PROB_FLOOR = math.log(1e-300)


@dataclass(frozen=True)
class TransferScore:
    """Score of one model plus per-stage diagnostics.

    ``prior_logp`` is what a predictor that ignores the features and always
    outputs the class priors would score (same reduction as ``score``).  It
    is shared by every model of a hub.  Stage-two probabilities are often
    close to the priors, so ``gain`` keeps the model-to-model differences
    at full relative precision where ``score`` alone would need many digits.
    """

    model_id: str
    score: float
    stage1_mean_logp: float
    stage2_mean_logp: float
    lambda_stage1: float
    lambda_stage2: float
    degenerate: bool = False
    clamped: int = 0
    reduction: str = "mean"
    prior_logp: float | None = None

    @property
    def gain(self):
        """``score - prior_logp``, or ``None`` when the baseline is unknown."""
        return None if self.prior_logp is None else self.score - self.prior_logp


@dataclass(frozen=True, eq=False)
class ConfMixOutput:
    mixed_features: np.ndarray
    confidences: np.ndarray
    outer_means: np.ndarray


def outer_class_means(fs):
    """Row ``c`` is the mean of all samples whose label differs from ``c``."""
    X = fs.features
    y = fs.labels
    n = fs.n_samples
    counts = np.bincount(y, minlength=fs.num_classes)
    if np.any(counts == n):
        raise SingleClassDominates("a single class holds every sample")
    onehot = np.zeros((fs.num_classes, n))
    onehot[y, np.arange(n)] = 1.0
    class_sums = onehot @ X
    total = X.sum(axis=0)
    return (total - class_sums) / (n - counts)[:, None]


def confmix(fs, probs):
    """Mix each sample with its outer-class mean, weighted by its confidence.

    ``probs`` is the ``N x C`` table of class probabilities; the confidence of
    sample ``n`` is ``probs[n, y_n]``.
    """
    P = np.asarray(probs, dtype=np.float64)
    if P.shape != (fs.n_samples, fs.num_classes):
        raise DataError(
            f"probability table {P.shape} does not match ({fs.n_samples}, {fs.num_classes})"
        )
    y = fs.labels
    p = P[np.arange(fs.n_samples), y]
    outer = outer_class_means(fs)
    mixed = p[:, None] * fs.features + (1.0 - p)[:, None] * outer[y]
    return ConfMixOutput(mixed, p, outer)


def _mean_true_logp(model, features, labels):
    logp = fda.predict_log_proba(model, features)[np.arange(labels.shape[0]), labels]
    clamped = int(np.count_nonzero(logp < LOG_PROB_FLOOR))
    logp = np.maximum(logp, LOG_PROB_FLOOR)
    return logp, clamped


def sfda_score(
    fs,
    a=4.0,
    *,
    lambda_variant="main_text",
    power_steps=3,
    reduction="mean",
    standardize=False,
):
    """Score one model's features on the target labels.

    ``reduction="sum"`` returns the summed log-likelihood instead of the mean;
    both rank models identically for a fixed dataset.
    """
    if reduction not in ("mean", "sum"):
        raise ValueError("reduction must be 'mean' or 'sum'")
    if standardize:
        fs = fda.standardize(fs)
    kw = dict(lambda_variant=lambda_variant, power_steps=power_steps)
    y = fs.labels

    try:
        first = fda.fit(fs, a, **kw)
        logp1, clamped1 = _mean_true_logp(first, fs.features, y)
    except DataError as exc:
        raise StageError(1, fs.model_id, exc) from exc
    mix = confmix(fs, fda.predict_proba(first, fs.features))

    try:
        second = fda.fit(fs.with_features(mix.mixed_features), a, **kw)
        logp2, clamped2 = _mean_true_logp(second, mix.mixed_features, y)
    except DataError as exc:
        raise StageError(2, fs.model_id, exc) from exc

    stage2 = float(np.mean(logp2))
    counts = np.bincount(y, minlength=fs.num_classes)
    prior_logp = np.log(counts[y] / fs.n_samples)
    return TransferScore(
        model_id=fs.model_id,
        score=stage2 if reduction == "mean" else float(np.sum(logp2)),
        stage1_mean_logp=float(np.mean(logp1)),
        stage2_mean_logp=stage2,
        lambda_stage1=first.lam,
        lambda_stage2=second.lam,
        degenerate=first.degenerate or second.degenerate,
        clamped=clamped1 + clamped2,
        reduction=reduction,
        prior_logp=float(np.mean(prior_logp) if reduction == "mean" else np.sum(prior_logp)),
    )


def check_hub(hub):
    if not hub:
        raise DataError("empty hub")
    ref = hub[0]
    for fs in hub[1:]:
        if (
            fs.num_classes != ref.num_classes
            or fs.labels.shape != ref.labels.shape
            or not np.array_equal(fs.labels, ref.labels)
        ):
            raise LabelMismatch(
                f"labels of model {fs.model_id!r} differ from those of {ref.model_id!r}"
            )


def _timed_score(fs, a, kw):
    t0 = time.perf_counter()
    result = sfda_score(fs, a, **kw)
    log.info("scored %s in %.1f ms", fs.model_id, 1e3 * (time.perf_counter() - t0))
    return result


def score_hub(hub, a=4.0, *, threads=1, **kwargs):
    """Score every model in ``hub``; output order follows input order.

    Models are independent, so ``threads > 1`` scores them concurrently with
    identical results.  Extra keyword arguments go to :func:`sfda_score`.
    """
    hub = list(hub)
    check_hub(hub)
    if threads is None or threads <= 1 or len(hub) == 1:
        return [_timed_score(fs, a, kwargs) for fs in hub]
    with ThreadPoolExecutor(max_workers=min(threads, len(hub))) as pool:
        return list(pool.map(lambda fs: _timed_score(fs, a, kwargs), hub))
