"""
A regularized Fisher discriminant on a toy problem
===================================================

Two classes on a line, then three Gaussian blobs in the plane.
"""
import numpy as np

from sfda.fda import FeatureSet, fit, predict_proba
from sfda.linalg import scatter_matrices

# Four points, two classes: {0, 2} and {4, 6}.
toy = FeatureSet("toy", [[0.0], [2.0], [4.0], [6.0]], [0, 0, 1, 1], num_classes=2)

sc = scatter_matrices(toy.features, toy.labels)
print("between-class scatter:", sc.between.ravel())   # 16
print("within-class scatter: ", sc.within.ravel())    # 4

# The shrinkage weight is exp(-a * sigma) where sigma is the largest
# eigenvalue of the within-class scatter.  With sigma = 4 and a = 4 it is tiny.
model = fit(toy, a=4.0)
print("lambda =", model.lam, "~ e^-16 =", np.exp(-16.0))
print("projection u =", model.projection.ravel())      # 0.5, so u^2 * 4 = 1

# Class probabilities along the line.  The midpoint x = 3 sits on the boundary.
grid = np.array([[0.0], [3.0], [6.0]])
print(np.round(predict_proba(model, grid), 4))

# Three blobs in 2-D.  At most C - 1 = 2 discriminant directions exist.
rng = np.random.default_rng(0)
centers = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
y = np.repeat(np.arange(3), 50)
X = centers[y] + 0.7 * rng.normal(size=(150, 2))
blobs = fit(FeatureSet("blobs", X, y, 3))
print("projection shape:", blobs.projection.shape)
print("generalized eigenvalues:", blobs.eigenvalues)

P = predict_proba(blobs, X)
print("training accuracy: %.3f" % np.mean(P.argmax(axis=1) == y))
print("mean log p(y|x):   %.4f" % np.mean(np.log(P[np.arange(150), y])))
