"""Robust independent component analysis.

Sources are estimated by whitening the data with the Minimum Covariance
Determinant scatter and then choosing the rotation whose components have
the smallest distance correlation with one another, after passing every
component through the redescending bowl transform.

>>> import numpy as np
>>> from rica import rica_fit
>>> rng = np.random.default_rng(0)
>>> s = rng.uniform(-1, 1, size=(500, 2))
>>> x = s @ np.array([[1.0, 0.5], [0.3, 1.0]]).T
>>> result = rica_fit(x)
>>> result.sources.shape
(500, 2)
"""

__version__ = "0.1.0"

from .distcorr import DependenceStats, dcor, dcor_n, dcov_n, dvar_n
from .evalsim import (
    CATALOGUE,
    amari_error,
    contaminate_clustered,
    contaminate_increasing,
    contaminate_multiplicative,
    format_summary,
    random_mixing_matrix,
    run_benchmark,
)
from .exceptions import (
    ConditioningError,
    DegenerateScaleError,
    DimensionError,
    ExactFitError,
    GenerationError,
    ObjectiveError,
    ValidationError,
)
from .ica import RicaConfig, UnmixResult, dcovica_fit, fit, rica_fit
from .robustcov import classical_whiten, fast_mcd, mcd_whiten
from .rotation import AngleVector, compose
from .transforms import biloop, bowl, bowl_dcor, chi2_quantile

__all__ = [
    "AngleVector",
    "CATALOGUE",
    "ConditioningError",
    "DegenerateScaleError",
    "DependenceStats",
    "DimensionError",
    "ExactFitError",
    "GenerationError",
    "ObjectiveError",
    "RicaConfig",
    "UnmixResult",
    "ValidationError",
    "amari_error",
    "biloop",
    "bowl",
    "bowl_dcor",
    "chi2_quantile",
    "classical_whiten",
    "compose",
    "contaminate_clustered",
    "contaminate_increasing",
    "contaminate_multiplicative",
    "dcor",
    "dcor_n",
    "dcov_n",
    "dcovica_fit",
    "dvar_n",
    "fast_mcd",
    "fit",
    "format_summary",
    "mcd_whiten",
    "random_mixing_matrix",
    "rica_fit",
    "run_benchmark",
]
