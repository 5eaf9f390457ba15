"""Problem representation for ReLU-constrained low-rank factorization.

Holds the observed nonnegative target ``M`` with its sign-based index sets,
the factor pair ``(U, V)``, the slack matrix ``W`` (feasible iff
``max(0, W) = M``), and the smooth misfit ``F(U, V, W) = 0.5 * ||W - U V||_F**2``
with its gradients and error metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _backend


def _as_dense64(mat) -> np.ndarray:
    if sp.issparse(mat):
        mat = mat.toarray()
    arr = np.ascontiguousarray(mat, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ObservedMatrix:
    """Nonnegative target matrix with its positive/zero support masks.

    ``pos_mask[i, j]`` is True exactly where ``data[i, j] > 0``; the zero set
    is its complement. ``norm`` caches ``||M||_F``.
    """

    data: np.ndarray
    pos_mask: np.ndarray
    norm: float

    @property
    def shape(self):
        return self.data.shape

    @property
    def zero_mask(self) -> np.ndarray:
        return ~self.pos_mask


@dataclass(frozen=True)
class FactorPair:
    """Rank-r factors: ``u`` is m x r, ``v`` is r x n (stored as C-contiguous
    float64, the layout the fused kernels require)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name in ("u", "v"):
            arr = getattr(self, name)
            if not (isinstance(arr, np.ndarray) and arr.dtype == np.float64
                    and arr.flags.c_contiguous):
                object.__setattr__(self, name,
                                   np.ascontiguousarray(arr, dtype=np.float64))
        if self.u.ndim != 2 or self.v.ndim != 2 or self.u.shape[1] != self.v.shape[0]:
            raise ValueError(
                f"incompatible factor shapes {self.u.shape} and {self.v.shape}"
            )

    @property
    def rank(self) -> int:
        return self.u.shape[1]

    def product(self) -> np.ndarray:
        return self.u @ self.v

    def norms_sq(self) -> tuple[float, float]:
        nu = float(np.einsum("ij,ij->", self.u, self.u))
        nv = float(np.einsum("ij,ij->", self.v, self.v))
        return nu, nv


@dataclass(frozen=True)
class SlackMatrix:
    """Slack variable: equals M on the positive set, <= 0 on the zero set."""

    w: np.ndarray

    def __post_init__(self):
        if not (isinstance(self.w, np.ndarray) and self.w.dtype == np.float64
                and self.w.flags.c_contiguous):
            object.__setattr__(self, "w",
                               np.ascontiguousarray(self.w, dtype=np.float64))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.w))


def build_observed(m) -> ObservedMatrix:
    """Validate a ReLU target and precompute its sign index sets.

    Accepts a dense array or a scipy sparse matrix (densified: the slack
    matrix is dense regardless, since zero entries of M relax to arbitrary
    nonpositive values). Rejects negative or non-finite entries.
    """
    data = _as_dense64(m)
    if not np.isfinite(data).all():
        raise ValueError("observed matrix contains non-finite entries")
    if (data < 0).any():
        raise ValueError("observed matrix contains negative entries; "
                         "a ReLU target must be nonnegative")
    pos_mask = data > 0
    norm = float(np.linalg.norm(data))
    data.setflags(write=False)
    pos_mask.setflags(write=False)
    return ObservedMatrix(data=data, pos_mask=pos_mask, norm=norm)


def update_slack(x: np.ndarray, obs: ObservedMatrix) -> SlackMatrix:
    """Closed-form minimizer of ``0.5 * ||W - X||_F**2`` over ``max(0, W) = M``.

    ``W = M`` on the positive set and ``W = min(0, X)`` on the zero set.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != obs.shape:
        raise ValueError(f"iterate shape {x.shape} != observed shape {obs.shape}")
    out = np.empty_like(x)
    _backend.slack_update(x, obs.data, obs.pos_mask, out)
    return SlackMatrix(w=out)


def smooth_value(pair: FactorPair, w: SlackMatrix) -> float:
    """``F(U, V, W) = 0.5 * ||W - U V||_F**2``."""
    return _backend.half_sqdiff(w.w, pair.product())


def grad_f(pair: FactorPair, w: SlackMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of F: ``((UV - W) V^T, U^T (UV - W))``."""
    if w.w.shape != (pair.u.shape[0], pair.v.shape[1]):
        raise ValueError(
            f"slack shape {w.w.shape} incompatible with factors "
            f"{pair.u.shape} x {pair.v.shape}"
        )
    r = pair.product() - w.w
    return r @ pair.v.T, pair.u.T @ r


def objective(pair: FactorPair, w: SlackMatrix, case=None) -> float:
    """Full objective ``F(U, V, W) + H1(U) + H2(V)``.

    Indicator regularizers contribute 0 when feasible and ``math.inf``
    otherwise, so traces remain well defined on infeasible iterates.
    """
    val = smooth_value(pair, w)
    if case is not None:
        from .regularizers import reg_value

        val += reg_value(case, pair)
    return val


def relative_error(obs: ObservedMatrix, pair: FactorPair) -> float:
    """ReLU reconstruction error ``||M - max(0, UV)||_F / ||M||_F``."""
    if obs.norm == 0.0:
        raise ValueError("relative error undefined for a zero target matrix")
    x = pair.product()
    return math.sqrt(_backend.relu_residual_sq(x, obs.data)) / obs.norm
