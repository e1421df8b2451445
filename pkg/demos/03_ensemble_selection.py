"""
Picking a complementary ensemble
================================

Listing the same model twice makes both copies look equally good to a
per-model score.  The complementarity term notices that the second copy adds
nothing new.
"""
import numpy as np

from sfda import complementarity_scores, select_ensemble
from sfda.fda import FeatureSet
from sfda.synthetic import ModelSpec, SyntheticHubSpec, sample_hub

# Per-sample intuition: two orthogonal embeddings vs two identical ones.
orth = complementarity_scores([np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])])
dup = complementarity_scores([np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])])
print("orthogonal pair:", orth)          # [1, 1]
print("identical pair: ", dup)           # sqrt(2) - 1 each

# Three models of similar quality; model "a" is listed twice.
spec = SyntheticHubSpec(
    seed=3, n_samples=400, num_classes=4, n_oracle=10,
    models=tuple(ModelSpec(m, 6, 3.0, w) for m, w in (("a", 1.0), ("b", 1.1), ("c", 1.2))),
)
hub, _ = sample_hub(spec)
hub.append(FeatureSet("a_copy", hub[0].features, hub[0].labels, 4))

report = select_ensemble(hub, k=2, r=0.5)
print()
print("model    T_sfda       T_com     T_ens")
for row in report.rows:
    print(f"{row.model_id:7s} {row.t_sfda:+.6f}  {row.t_com:.5f}  {row.t_ens:.4f}")
print()
print("top-2 by score alone:   ", report.sfda_top_k)
print("top-2 with complementarity:", report.selected_top_k)
