"""
A small benchmark table
=======================

``run_benchmark`` draws sources from the catalogue, contaminates them,
mixes them and records the Amari error of every method. The summary
uses the familiar "Amari error x 100" layout. The same run is available
from the command line:

    rica bench --distributions ejpr --contamination multiplicative --replications 5
"""

from rica import format_summary, run_benchmark
from rica.evalsim import CATALOGUE

print("catalogue entries used here:")
for key in "ejpr":
    print("  %s  %s" % (key, CATALOGUE[key].description))

for kind in ("none", "multiplicative"):
    results = run_benchmark(["rica", "dcovica"], list("ejpr"), contamination=kind, n=500, replications=5, seed=0)
    print()
    print(format_summary(results, title="contamination: %s, 5 replications" % kind), end="")
