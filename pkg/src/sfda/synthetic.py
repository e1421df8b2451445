"""Synthetic model hubs with a known Bayes-optimal accuracy per model.

Every model sees the same labelled samples.  Model ``m`` embeds sample ``n``
near the mean of its *feature class*, which equals the true label except for a
``label_noise_rate`` fraction of samples whose feature class is redrawn
uniformly.  Class means sit on a regular simplex scaled by
``class_separation``; the noise around them is isotropic with standard
deviation ``within_scatter``.

Random streams come from numpy's counter-based Philox generator keyed by
``(seed, stream)``, so a given spec yields the same bytes on every platform.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import SpecInvalid
from .fda import FeatureSet

LABEL_STREAM = 0
ORACLE_OFFSET = 1_000_000


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    dim: int
    class_separation: float
    within_scatter: float
    label_noise_rate: float = 0.0


@dataclass(frozen=True)
class SyntheticHubSpec:
    seed: int
    n_samples: int
    num_classes: int
    models: tuple = field(default_factory=tuple)
    dataset_name: str = "synthetic"
    n_oracle: int = 20000

    def validate(self):
        if self.n_samples < self.num_classes:
            raise SpecInvalid("n_samples must be >= num_classes")
        if self.num_classes < 2:
            raise SpecInvalid("num_classes must be >= 2")
        if self.n_oracle < 1:
            raise SpecInvalid("n_oracle must be >= 1")
        if not self.models:
            raise SpecInvalid("at least one model is required")
        ids = [m.model_id for m in self.models]
        if len(set(ids)) != len(ids):
            raise SpecInvalid("model ids must be unique")
        for m in self.models:
            if m.dim < self.num_classes:
                raise SpecInvalid(f"{m.model_id}: dim must be >= num_classes")
            if not m.class_separation > 0:
                raise SpecInvalid(f"{m.model_id}: class_separation must be > 0")
            if not m.within_scatter >= 0:
                raise SpecInvalid(f"{m.model_id}: within_scatter must be >= 0")
            if not 0 <= m.label_noise_rate < 1:
                raise SpecInvalid(f"{m.model_id}: label_noise_rate must lie in [0, 1)")

    @classmethod
    def from_dict(cls, d):
        try:
            models = tuple(ModelSpec(**m) for m in d["models"])
            rest = {k: v for k, v in d.items() if k != "models"}
            spec = cls(models=models, **rest)
        except (KeyError, TypeError) as exc:
            raise SpecInvalid(f"malformed hub spec: {exc}") from None
        spec.validate()
        return spec


def _rng(seed, stream):
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def simplex_vertices(num_classes, dim):
    """Unit-norm, zero-mean vertices of a regular simplex in the first C axes."""
    V = np.zeros((num_classes, dim))
    V[:, :num_classes] = np.eye(num_classes) - 1.0 / num_classes
    return V / np.linalg.norm(V[0])


def make_labels(seed, n_samples, num_classes):
    """Balanced labels in a seeded random order (every class non-empty)."""
    y = np.arange(n_samples) % num_classes
    return _rng(seed, LABEL_STREAM).permutation(y)


def _draw(rng, labels, m, means, num_classes):
    z = labels.copy()
    flip = rng.random(labels.shape[0]) < m.label_noise_rate
    z[flip] = rng.integers(0, num_classes, size=int(flip.sum()))
    noise = rng.standard_normal((labels.shape[0], m.dim))
    return means[z] + m.within_scatter * noise


def oracle_accuracy(spec, index, means):
    """Bayes-optimal accuracy (percent) on a fresh held-out draw.

    With equal priors, isotropic noise and uniform feature-class flips the
    posterior is monotone in the class-conditional density, so the optimal
    rule is the nearest true mean.
    """
    m = spec.models[index]
    rng = _rng(spec.seed, ORACLE_OFFSET + index + 1)
    y = rng.integers(0, spec.num_classes, size=spec.n_oracle)
    X = _draw(rng, y, m, means, spec.num_classes)
    # |x - mu_c|^2 up to a per-row constant
    d2 = -2.0 * X @ means.T + np.einsum("cd,cd->c", means, means)
    pred = np.argmin(d2, axis=1)
    return 100.0 * float(np.mean(pred == y))


def sample_hub(spec):
    """Draw a hub in memory.

    Returns ``(hub, oracle)`` where ``hub`` is a list of :class:`FeatureSet`
    and ``oracle`` maps model id to Bayes-optimal accuracy in percent.
    Features are rounded through float32 so they match what the on-disk
    format stores.
    """
    spec.validate()
    labels = make_labels(spec.seed, spec.n_samples, spec.num_classes)
    hub, oracle = [], {}
    for i, m in enumerate(spec.models):
        means = m.class_separation * simplex_vertices(spec.num_classes, m.dim)
        X = _draw(_rng(spec.seed, i + 1), labels, m, means, spec.num_classes)
        X = X.astype(np.float32).astype(np.float64)
        hub.append(FeatureSet(m.model_id, X, labels, spec.num_classes))
        oracle[m.model_id] = oracle_accuracy(spec, i, means)
    return hub, oracle


def graded_hub_spec(seed, n_models=8, n_samples=2000, num_classes=10, dims=(32, 64, 128, 256)):
    """A hub whose models sit at evenly graded noise levels.

    Level ``g`` in ``[0, 1]`` sets ``within_scatter = 0.5 + 1.5 g`` and
    ``label_noise_rate = 0.3 g``.  Levels are assigned to models in a seeded
    random order, and each model gets a random dimension from ``dims``;
    the class separation is shared across the hub.
    """
    rng = _rng(seed, 999_999)
    separation = float(rng.uniform(2.0, 4.0))
    levels = rng.permutation(np.linspace(0.0, 1.0, n_models))
    models = []
    for i, g in enumerate(levels):
        models.append(
            ModelSpec(
                model_id=f"model_{i:02d}",
                dim=int(rng.choice(dims)),
                class_separation=separation,
                within_scatter=0.5 + 1.5 * float(g),
                label_noise_rate=0.3 * float(g),
            )
        )
    return SyntheticHubSpec(seed, n_samples, num_classes, tuple(models))


def generate_synthetic_hub(spec, out_dir):
    """Write a hub to ``out_dir``: labels, one feature file per model,
    ``manifest.json`` and ``oracle.csv`` (Bayes-optimal accuracies).

    Returns ``(manifest_path, oracle)``.
    """
    from . import io

    if isinstance(spec, dict):
        spec = SyntheticHubSpec.from_dict(spec)
    hub, oracle = sample_hub(spec)
    os.makedirs(out_dir, exist_ok=True)
    io.write_labels(os.path.join(out_dir, "labels.bin"), hub[0].labels, spec.num_classes)
    entries = []
    for fs in hub:
        name = f"{fs.model_id}.feat"
        io.write_feature_file(os.path.join(out_dir, name), fs.features)
        entries.append(io.ModelEntry(fs.model_id, name, fs.dim))
    manifest = io.HubManifest(spec.dataset_name, spec.num_classes, "labels.bin", tuple(entries))
    manifest_path = os.path.join(out_dir, "manifest.json")
    io.write_manifest(manifest_path, manifest)
    io.write_ground_truth(os.path.join(out_dir, "oracle.csv"), oracle)
    return manifest_path, oracle
