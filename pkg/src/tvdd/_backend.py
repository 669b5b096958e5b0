"""Kernel backend selection.

The compiled extension is preferred; ``TVDD_BACKEND=python`` forces the NumPy
fallback, ``TVDD_BACKEND=cython`` makes a missing extension an error.
"""

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled


def get_backend(name=None):
    """Return the kernel module for ``name`` (``None`` means the default)."""
    if name is None:
        name = os.environ.get("TVDD_BACKEND") or ("cython" if _compiled is not None else "python")
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def default_backend_name() -> str:
    return get_backend().NAME
