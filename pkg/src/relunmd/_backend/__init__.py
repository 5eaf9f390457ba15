"""Backend selection for the fused elementwise kernels.

The compiled Cython core is preferred when it imported cleanly; otherwise the
pure-numpy twin in :mod:`relunmd._backend.pure` is used. Setting the
environment variable ``RELU_NMD_PURE=1`` forces the fallback (useful for the
backend benchmark and for debugging).

Both backends implement the same four routines with identical semantics:

- ``slack_update(x, data, pos_mask, out) -> float``
- ``relu_residual_sq(x, data) -> float``
- ``half_sqdiff(w, x) -> float``
- ``soft_threshold_into(x, tau, out) -> float``

Results may differ between backends in the last few ulps (different summation
orders); each backend on its own is bitwise deterministic.
"""

import os

from . import pure

_compiled = None
if os.environ.get("RELU_NMD_PURE", "") != "1":
    try:
        from . import _fused as _compiled
    except ImportError:
        _compiled = None

_active = _compiled if _compiled is not None else pure

BACKEND_NAME = _active.BACKEND_NAME
HAVE_COMPILED = _compiled is not None


def get_backend(name=None):
    """Return a kernel module by name ("compiled", "pure", or None for active)."""
    if name is None:
        return _active
    if name == "pure":
        return pure
    if name == "compiled":
        if _compiled is None:
            raise ValueError("compiled backend is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def slack_update(x, data, pos_mask, out):
    return _active.slack_update(x, data, pos_mask, out)


def relu_residual_sq(x, data):
    return _active.relu_residual_sq(x, data)


def half_sqdiff(w, x):
    return _active.half_sqdiff(w, x)


def soft_threshold_into(x, tau, out):
    return _active.soft_threshold_into(x, tau, out)
