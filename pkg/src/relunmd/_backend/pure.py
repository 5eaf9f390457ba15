"""Pure-numpy implementations of the fused elementwise kernels.

These mirror the compiled routines in ``_fused.pyx`` one-to-one and are the
fallback selected at import time when the extension is unavailable (or when
``RELU_NMD_PURE=1`` is set).
"""

import math

import numpy as np

BACKEND_NAME = "pure"


def slack_update(x, data, pos_mask, out):
    """Write the slack matrix for iterate ``x`` into ``out``.

    ``out[i, j]`` is ``data[i, j]`` where ``pos_mask`` holds and
    ``min(0, x[i, j])`` elsewhere. Returns the Frobenius norm of ``out``.
    """
    np.minimum(x, 0.0, out=out)
    np.copyto(out, data, where=pos_mask)
    return math.sqrt(float(np.einsum("ij,ij->", out, out)))


def relu_residual_sq(x, data):
    """Squared Frobenius norm of ``data - max(0, x)``."""
    r = data - np.maximum(x, 0.0)
    return float(np.einsum("ij,ij->", r, r))


def half_sqdiff(w, x):
    """``0.5 * ||w - x||_F**2``."""
    r = w - x
    return 0.5 * float(np.einsum("ij,ij->", r, r))


def soft_threshold_into(x, tau, out):
    """Componentwise shrinkage of ``x`` by ``tau`` into ``out``.

    Returns the squared Frobenius norm of the result.
    """
    np.abs(x, out=out)
    out -= tau
    np.maximum(out, 0.0, out=out)
    out *= np.sign(x)
    return float(np.einsum("ij,ij->", out, out))
