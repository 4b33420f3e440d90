"""Hot search kernel, compiled when available.

``dfs_solve`` is the Cython build of the schedule search if it was compiled
at install time, otherwise the pure-Python twin.  Set ``PNET_PURE_PYTHON=1``
to force the fallback.
"""
import os

from ._dfs_py import dfs_solve as python_dfs_solve

try:
    from ._dfs import dfs_solve as compiled_dfs_solve
except ImportError:  # extension not built
    compiled_dfs_solve = None

if compiled_dfs_solve is not None and os.environ.get("PNET_PURE_PYTHON") != "1":
    dfs_solve = compiled_dfs_solve
    BACKEND = "cython"
else:
    dfs_solve = python_dfs_solve
    BACKEND = "python"

__all__ = ["dfs_solve", "python_dfs_solve", "compiled_dfs_solve", "BACKEND"]
