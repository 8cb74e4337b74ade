"""Hot-kernel backend selection.

The compiled extension (built from ``_native.pyx``) is preferred when it is
importable; otherwise the numpy/scipy reference implementations are used.
Set CNLS_FORCE_REFERENCE=1 to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import importlib
import os

from . import reference
from .reference import (  # noqa: F401  (termination codes are backend-independent)
    SHOOT_CROSSED,
    SHOOT_FLOORED,
    SHOOT_RAN_OUT,
    SHOOT_TURNED,
)

_native = None
if not os.environ.get("CNLS_FORCE_REFERENCE"):
    try:
        _native = importlib.import_module(__name__ + "._native")
    except ImportError:
        _native = None

_impl = _native if _native is not None else reference

BACKEND = "native" if _native is not None else "reference"

tridiag_solve = _impl.tridiag_solve
radial_laplacian = _impl.radial_laplacian
truncated_quartic = _impl.truncated_quartic
rk4_shoot = _impl.rk4_shoot


def backend() -> str:
    """Name of the active kernel backend ("native" or "reference")."""
    return BACKEND


def backends_available() -> list[str]:
    out = ["reference"]
    if _native is not None:
        out.insert(0, "native")
    return out
