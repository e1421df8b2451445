"""Agreement between predicted transferability scores and ground-truth accuracies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, KTooLarge, LengthMismatch, ZeroVariance


@dataclass(frozen=True)
class RankEvaluation:
    tau: float
    tau_w: float
    pearson_r: float
    pearson_rw: float
    rel_at_k: dict = field(default_factory=dict)


def _pair(T, G):
    T = np.asarray(T, dtype=np.float64).ravel()
    G = np.asarray(G, dtype=np.float64).ravel()
    if T.shape != G.shape:
        raise LengthMismatch(f"{T.size} scores vs {G.size} ground-truth values")
    if T.size < 2:
        raise DataError("need at least 2 models")
    if not (np.all(np.isfinite(T)) and np.all(np.isfinite(G))):
        raise DataError("non-finite score or accuracy")
    return T, G


def kendall_tau(T, G):
    """Plain Kendall tau over all pairs; tied pairs contribute zero."""
    T, G = _pair(T, G)
    m = T.size
    iu = np.triu_indices(m, 1)
    s = np.sign(G[:, None] - G[None, :])[iu] * np.sign(T[:, None] - T[None, :])[iu]
    return 2.0 * float(s.sum()) / (m * (m - 1))


def _ranked_weighted_tau(x, y):
    # rank 0 = largest x, ties broken by larger y, then by position
    order = np.lexsort((-y, -x))
    rank = np.empty(x.size, dtype=np.int64)
    rank[order] = np.arange(x.size)
    w = 1.0 / (1.0 + rank)
    iu = np.triu_indices(x.size, 1)
    pair_w = (w[:, None] + w[None, :])[iu]
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    total = pair_w.sum()
    tied_x = pair_w[sx == 0].sum()
    tied_y = pair_w[sy == 0].sum()
    denom = np.sqrt((total - tied_x) * (total - tied_y))
    if denom == 0:
        raise ZeroVariance("weighted tau undefined when every pair is tied")
    return float((pair_w * sx * sy).sum() / denom)


def weighted_kendall_tau(T, G):
    """Weighted tau with additive hyperbolic weights ``1 / (1 + rank)``.

    A pair is weighted by the sum of its members' weights, ranks counting
    from 0 at the largest value.  The statistic is computed once ranking by
    ``G`` and once ranking by ``T``, and the two are averaged.  Ties are
    handled as in tau-b: tied pairs are dropped from the normalizer of the
    corresponding side.
    """
    T, G = _pair(T, G)
    return 0.5 * (_ranked_weighted_tau(G, T) + _ranked_weighted_tau(T, G))


def hyperbolic_weights(values):
    """``1 / (1 + rank)`` with rank 0 for the largest value (stable ties)."""
    order = np.argsort(-np.asarray(values, dtype=np.float64), kind="stable")
    rank = np.empty(order.size, dtype=np.int64)
    rank[order] = np.arange(order.size)
    return 1.0 / (1.0 + rank)


def pearson(T, G):
    T, G = _pair(T, G)
    return _weighted_corr(T, G, np.ones_like(T))


def _weighted_corr(x, y, w):
    # test constancy directly: weighted means of a constant need not round back to it
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ZeroVariance("correlation undefined for a constant vector")
    w = w / w.sum()
    dx = x - w @ x
    dy = y - w @ y
    vx = w @ (dx * dx)
    vy = w @ (dy * dy)
    if vx <= 0 or vy <= 0:
        raise ZeroVariance("correlation undefined for a constant vector")
    r = (w @ (dx * dy)) / np.sqrt(vx * vy)
    return float(np.clip(r, -1.0, 1.0))


def weighted_pearson(T, G):
    """Pearson correlation under the hyperbolic rank weights, symmetrized
    over ranking by ``G`` and by ``T``."""
    T, G = _pair(T, G)
    return 0.5 * (
        _weighted_corr(T, G, hyperbolic_weights(G)) + _weighted_corr(T, G, hyperbolic_weights(T))
    )


def rel_at_k(T, G, k):
    """Best accuracy among the top-``k`` models by score over the best overall."""
    T, G = _pair(T, G)
    k = int(k)
    if not 1 <= k <= T.size:
        raise KTooLarge(f"k={k} outside [1, {T.size}]")
    if np.any(G <= 0):
        raise DataError("accuracies must be positive")
    top = np.argsort(-T, kind="stable")[:k]
    return float(G[top].max() / G.max())


def evaluate(T, G, ks=(1, 3)):
    T, G = _pair(T, G)
    ks = [k for k in ks if k <= T.size]
    return RankEvaluation(
        tau=kendall_tau(T, G),
        tau_w=weighted_kendall_tau(T, G),
        pearson_r=pearson(T, G),
        pearson_rw=weighted_pearson(T, G),
        rel_at_k={int(k): rel_at_k(T, G, k) for k in ks},
    )
