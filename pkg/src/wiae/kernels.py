"""Backend selection for the scalar inner loops.

The Cython extension is preferred.  Set ``WIAE_PURE_PYTHON=1`` to force the
reference implementation, e.g. when comparing the two.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("WIAE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

ar1_filter = _impl.ar1_filter
markov2_chain = _impl.markov2_chain
runs_up_down = _impl.runs_up_down
crps_rows = _impl.crps_rows
wasserstein_sorted = _impl.wasserstein_sorted

__all__ = ["BACKEND", "ar1_filter", "markov2_chain", "runs_up_down", "crps_rows",
           "wasserstein_sorted"]
