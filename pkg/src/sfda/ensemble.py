"""Top-k ensemble selection from Fisher-space embeddings.

Each model's stage-one projection maps its features to ``C - 1`` dimensions,
so per-sample embeddings of different models stack into an ``M x (C-1)``
matrix.  A model's complementarity is how much the nuclear norm of that
stack drops when its row is zeroed, averaged over samples.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fda
from .errors import DataError, DimensionMismatch, HeterogeneousProjection, KTooLarge
from .linalg import nuclear_norm
from .pipeline import check_hub, score_hub

log = logging.getLogger(__name__)

DEFAULT_N_ENS = 3000
# samples per batched SVD call
_CHUNK = 512


@dataclass(frozen=True)
class EnsembleRow:
    model_id: str
    t_sfda: float
    t_com: float
    t_ens: float
    t_sfda_combined: float
    t_com_combined: float


@dataclass(frozen=True)
class EnsembleReport:
    """Combined scores per model plus the selected top-k.

    ``t_sfda_combined`` and ``t_com_combined`` are the values that enter
    ``t_ens = r * t_sfda_combined + (1 - r) * t_com_combined``; they equal the
    raw scores when ``normalized`` is false and their min-max rescaling to
    ``[0, 1]`` otherwise.
    """

    rows: tuple
    selected_top_k: tuple
    sfda_top_k: tuple
    r: float
    k: int
    n_ens: int
    normalized: bool
    excluded: tuple = ()


def fisher_embeddings(hub, models):
    """Project each model's features into its own Fisher space."""
    if len(hub) != len(models):
        raise DimensionMismatch("need one fitted model per feature set")
    check_hub(hub)
    target = hub[0].num_classes - 1
    for fs, model in zip(hub, models):
        if model.n_components != target:
            raise HeterogeneousProjection(
                f"model {fs.model_id!r} projects to {model.n_components} dims, "
                f"expected C-1={target} (feature dim {fs.dim})"
            )
    return [fda.project(model, fs.features) for fs, model in zip(hub, models)]


def _masked_gaps(F, m):
    full = nuclear_norm(F)
    masked = F.copy()
    masked[:, m, :] = 0.0
    return full - nuclear_norm(masked)


def complementarity_scores(embeddings, sample_indices=None, *, threads=1):
    """Mean nuclear-norm drop per model when its row is masked out.

    Parameters
    ----------
    embeddings : list of array, each (N, D')
    sample_indices : array_like of int, optional
        Samples to average over; all samples by default.

    Returns
    -------
    ndarray, shape (M,)
    """
    if len(embeddings) < 2:
        raise DataError("complementarity needs at least 2 models")
    embs = [np.asarray(e, dtype=np.float64) for e in embeddings]
    shapes = {e.shape for e in embs}
    if len(shapes) != 1 or embs[0].ndim != 2:
        raise DimensionMismatch(f"embeddings must share one (N, D') shape, got {sorted(shapes)}")
    idx = np.arange(embs[0].shape[0]) if sample_indices is None else np.asarray(sample_indices)
    if idx.size == 0:
        raise DataError("no samples selected")
    F = np.stack([e[idx] for e in embs], axis=1)  # (N_ens, M, D')
    n_models = F.shape[1]

    def per_model(m):
        gaps = np.concatenate(
            [_masked_gaps(F[s : s + _CHUNK], m) for s in range(0, F.shape[0], _CHUNK)]
        )
        return float(np.mean(gaps))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, n_models)) as pool:
            return np.array(list(pool.map(per_model, range(n_models))))
    return np.array([per_model(m) for m in range(n_models)])


def _minmax(x):
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def _top_k(values, k):
    # stable: ties keep input order
    return sorted(range(len(values)), key=lambda i: -values[i])[:k]


def ensemble_rank(scores, t_com, r=0.5, k=3, *, normalize=True, n_ens=0, excluded=()):
    """Blend transferability and complementarity, then take the top ``k``."""
    m = len(scores)
    t_com = np.asarray(t_com, dtype=np.float64)
    if t_com.shape != (m,):
        raise DimensionMismatch(f"{t_com.shape[0]} complementarity scores for {m} models")
    if not 0.0 <= r <= 1.0:
        raise DataError(f"r must lie in [0, 1], got {r}")
    if not 1 <= k <= m:
        raise KTooLarge(f"k={k} outside [1, {m}]")
    t_sfda = np.array([s.score for s in scores], dtype=np.float64)
    a = _minmax(t_sfda) if normalize else t_sfda
    b = _minmax(t_com) if normalize else t_com
    t_ens = r * a + (1.0 - r) * b
    ids = [s.model_id for s in scores]
    rows = tuple(
        EnsembleRow(ids[i], float(t_sfda[i]), float(t_com[i]), float(t_ens[i]), float(a[i]), float(b[i]))
        for i in range(m)
    )
    return EnsembleReport(
        rows=rows,
        selected_top_k=tuple(ids[i] for i in _top_k(t_ens, k)),
        sfda_top_k=tuple(ids[i] for i in _top_k(t_sfda, k)),
        r=float(r),
        k=int(k),
        n_ens=int(n_ens),
        normalized=bool(normalize),
        excluded=tuple(excluded),
    )


def select_ensemble(
    hub,
    a=4.0,
    *,
    k=3,
    r=0.5,
    n_ens=DEFAULT_N_ENS,
    normalize=True,
    threads=1,
    scores=None,
    **score_kwargs,
):
    """Score a hub and pick a top-``k`` ensemble.

    Models whose feature dimension is below ``C - 1`` cannot share the
    Fisher space; they are dropped with a warning.  Embeddings use the first
    ``min(N, n_ens)`` samples in dataset order.
    """
    hub = list(hub)
    check_hub(hub)
    if scores is None:
        scores = score_hub(hub, a, threads=threads, **score_kwargs)
    target = hub[0].num_classes - 1
    keep = [i for i, fs in enumerate(hub) if fs.dim >= target]
    excluded = tuple(hub[i].model_id for i in range(len(hub)) if i not in keep)
    if excluded:
        warnings.warn(f"excluded from ensemble (feature dim < C-1): {list(excluded)}", stacklevel=2)
    if len(keep) < k:
        raise KTooLarge(f"only {len(keep)} eligible models for k={k}")
    kept = [hub[i] for i in keep]
    fit_kw = {
        key: score_kwargs[key] for key in ("lambda_variant", "power_steps") if key in score_kwargs
    }
    if score_kwargs.get("standardize"):
        kept_fit = [fda.standardize(fs) for fs in kept]
    else:
        kept_fit = kept
    models = [fda.fit(fs, a, **fit_kw) for fs in kept_fit]
    n_used = min(hub[0].n_samples, int(n_ens))
    idx = np.arange(n_used)
    if len(kept) >= 2:
        t_com = complementarity_scores(fisher_embeddings(kept_fit, models), idx, threads=threads)
    else:
        t_com = np.zeros(len(kept))
    return ensemble_rank(
        [scores[i] for i in keep], t_com, r, k, normalize=normalize, n_ens=n_used, excluded=excluded
    )
