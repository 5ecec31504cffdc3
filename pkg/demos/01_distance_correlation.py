"""
Distance correlation and the bowl transform
===========================================

Distance correlation detects any kind of dependence, not only linear
correlation. Its weakness is a handful of far outliers. Passing each
sample through the bowl transform first keeps the detection power and
removes the leverage of remote points.
"""

import numpy as np

from rica import bowl_dcor, dcor

rng = np.random.default_rng(0)
n = 1000

# a pair with zero correlation but strong dependence
x = rng.normal(size=n)
y = x**2 + 0.3 * rng.normal(size=n)
print("corr(x, x^2 + noise)      = %.3f" % np.corrcoef(x, y)[0, 1])
print("dcor(x, x^2 + noise)      = %.3f" % dcor(x, y))
print("bowl dcor(x, x^2 + noise) = %.3f" % bowl_dcor(x, y))

# an independent pair
u, v = rng.normal(size=(2, n))
print("\nindependent pair:  dcor = %.3f   bowl dcor = %.3f" % (dcor(u, v), bowl_dcor(u, v)))

# plant 5% of shared far outliers: raw dcor now reports strong dependence
u[:50] = v[:50] = 1e3 + rng.normal(size=50)
print("with 5%% shared outliers: dcor = %.3f   bowl dcor = %.3f" % (dcor(u, v), bowl_dcor(u, v)))
