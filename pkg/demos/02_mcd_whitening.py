"""
Whitening with the minimum covariance determinant
=================================================

ICA starts by whitening. With the sample covariance a small remote
cluster drags the center and inflates the scatter, so the whitened data
are no longer white where the bulk of the points lives. The MCD
estimate ignores the cluster.
"""

import numpy as np

from rica import classical_whiten, mcd_whiten
from rica.robustcov import sample_covariance

rng = np.random.default_rng(1)
a = np.array([[2.0, 0.5], [0.3, 1.0]])
x = rng.normal(size=(1000, 2)) @ a.T
x[:100] = rng.normal(15.0, 1.0, size=(100, 2))
clean = np.arange(100, 1000)

classical = classical_whiten(x)
robust, mcd = mcd_whiten(x, seed=0)

print("center, classical:", classical.center.round(2))
print("center, MCD:      ", robust.center.round(2))
print("MCD subset size h =", mcd.h, "of", x.shape[0])

# covariance of the whitened clean rows should be close to the identity
for name, white in [("classical", classical), ("MCD", robust)]:
    cov = sample_covariance(white.z[clean])
    print("\n%s: covariance of whitened clean rows" % name)
    print(cov.round(3))
