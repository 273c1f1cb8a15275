"""Hot-loop kernels: compiled extension when available, else pure Python.

Set ``NCSCHED_PURE_PYTHON=1`` to force the fallback.
"""
import os

BACKEND = "python"

if not os.environ.get("NCSCHED_PURE_PYTHON"):
    try:
        from ._kernels import lyap_scaled_batch, mu_table, propagate  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from ._kernels_py import lyap_scaled_batch, mu_table, propagate  # noqa: F401

__all__ = ["BACKEND", "lyap_scaled_batch", "mu_table", "propagate"]
