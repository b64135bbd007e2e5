"""Kernel backend selection.

The compiled Cython extension is used when available; otherwise the NumPy
fallback is selected at import time.  ``BACKEND`` records the choice.
Both backends expose the same functions with identical semantics.
"""

try:
    from . import _core as _impl

    BACKEND = "cython"
except ImportError:  # extension not built on this install
    from . import fallback as _impl

    BACKEND = "numpy"

em_loop = _impl.em_loop
perm_sample = _impl.perm_sample

__all__ = ["BACKEND", "em_loop", "perm_sample"]
