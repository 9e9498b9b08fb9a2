"""Selects the matching kernel at import: compiled if built, else pure Python.

Set ``AILEEN_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernel_py

BACKEND = "python"
_impl = _kernel_py

if os.environ.get("AILEEN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel_c as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

search = _impl.search
bound = _impl.bound


def backends() -> dict:
    """Every importable kernel, keyed by name."""
    out = {"python": _kernel_py}
    try:
        from . import _kernel_c

        out["cython"] = _kernel_c
    except ImportError:
        pass
    return out
