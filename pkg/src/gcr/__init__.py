"""Subspace clustering by collapsed Gibbs sampling over a reconstruction model.

The reconstruction weights and noise scales are integrated out analytically;
only the cluster indicators are sampled. See :mod:`gcr.pipeline` for the
end-to-end fit and :mod:`gcr.cli` for the command-line interface.
"""
__version__ = "0.1.0"

from .errors import GCRError  # noqa: E402
from .model import DP, FINITE, Dataset, Hyperparams  # noqa: E402
from .pipeline import RunConfig, fit  # noqa: E402

__all__ = ["DP", "FINITE", "Dataset", "GCRError", "Hyperparams", "RunConfig", "fit", "__version__"]
