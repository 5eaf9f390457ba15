"""Elementwise proximal maps and the scalar scale equations.

Every closed-form factor update reduces to thresholding (or nothing)
followed by solving ``a*t**3 + c*t - 1 = 0`` for its unique positive root,
so this module carries the package's only root-finding code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def soft_threshold(x, tau: float):
    """Componentwise shrinkage ``sign(x) * max(|x| - tau, 0)``."""
    if tau < 0:
        raise ValueError("soft threshold requires tau >= 0")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def hard_threshold(x, s: int):
    """Keep the ``s`` entries of largest magnitude, zero the rest.

    Ties are broken toward the lowest index so repeated runs are identical.
    """
    if s < 0:
        raise ValueError("hard threshold requires s >= 0")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("hard_threshold expects a vector; "
                         "use hard_threshold_columns for matrices")
    if s >= x.size:
        return x.copy()
    out = np.zeros_like(x)
    if s == 0:
        return out
    # stable sort on -|x| keeps the earliest index first among equal magnitudes
    keep = np.argsort(-np.abs(x), kind="stable")[:s]
    out[keep] = x[keep]
    return out


def hard_threshold_columns(v, s: int):
    """Apply ``hard_threshold`` independently to each column of ``v``."""
    if s < 0:
        raise ValueError("hard threshold requires s >= 0")
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    for j in range(v.shape[1]):
        out[:, j] = hard_threshold(v[:, j], s)
    return out


@dataclass(frozen=True)
class CubicCoefficients:
    """Coefficients of ``a*t**3 + c*t - 1 = 0`` with a >= 0, c > 0."""

    a: float
    c: float

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("cubic coefficient a must be >= 0")
        if self.c <= 0:
            raise ValueError("linear coefficient c must be > 0")


def _cubic_root(a: float, c: float) -> float:
    """Positive root of ``a*t**3 + c*t - 1``; radical form, Newton-polished.

    The radical expression cancels badly when ``12*a*c**3 << 81*a**2``, so
    the small factor is recovered from the product identity
    ``alpha1 * alpha2 = -27 * a**3 * c**3`` and the result is polished with
    a few Newton steps (f is increasing and convex on t > 0, so Newton from
    any point right of the root converges monotonically).
    """
    if a == 0.0:
        return 1.0 / c
    disc = math.sqrt(81.0 * a * a + 12.0 * a * c * c * c)
    alpha2 = 1.5 * a * (-9.0 * a - disc)
    t = 1.0 / c
    if alpha2 < 0.0 and math.isfinite(alpha2):
        ac = a * c
        alpha1 = (-27.0 * ac * ac * ac) / alpha2
        t_rad = (-np.cbrt(alpha1) - np.cbrt(alpha2)) / (3.0 * a)
        if math.isfinite(t_rad) and t_rad > 0.0:
            t = t_rad
    # f is increasing and convex on t > 0, so Newton from the right of the
    # root descends monotonically; from t = 1/c it contracts geometrically
    # even for extreme coefficients, hence the generous cap
    for _ in range(300):
        f = a * t * t * t + c * t - 1.0
        if abs(f) <= 1e-14 * max(1.0, c * t):
            break
        t -= f / (3.0 * a * t * t + c)
    return t


def cubic_positive_root(coeffs: CubicCoefficients) -> float:
    """Unique positive root of ``a*t**3 + c*t - 1 = 0``."""
    return _cubic_root(coeffs.a, coeffs.c)


def coupled_scale_pair(p2: float, q2: float, c1: float, c2: float, a: float,
                       max_iter: int = 200) -> tuple[float, float]:
    """Positive pair (t1, t2) solving the coupled stationarity system

        1 = t1 * (c1 + a * (t1**2 * p2 + t2**2 * q2))
        1 = t2 * (c2 + a * (t1**2 * p2 + t2**2 * q2))

    Substituting ``s = a * (t1**2 * p2 + t2**2 * q2)`` gives
    ``t_i = 1 / (c_i + s)`` and a scalar root problem
    ``h(s) = s - a * (p2/(c1+s)**2 + q2/(c2+s)**2) = 0`` on ``[0, h_hi]``,
    solved by bisection-safeguarded Newton from the decoupled-root guess.
    """
    if p2 < 0 or q2 < 0:
        raise ValueError("squared norms p2, q2 must be >= 0")
    if c1 <= 0 or c2 <= 0:
        raise ValueError("linear coefficients c1, c2 must be > 0")
    if a < 0:
        raise ValueError("coupling coefficient a must be >= 0")
    if a == 0.0 or (p2 == 0.0 and q2 == 0.0):
        return 1.0 / c1, 1.0 / c2

    def h(s):
        return s - a * (p2 / (c1 + s) ** 2 + q2 / (c2 + s) ** 2)

    def h_prime(s):
        return 1.0 + 2.0 * a * (p2 / (c1 + s) ** 3 + q2 / (c2 + s) ** 3)

    lo = 0.0
    hi = a * (p2 / (c1 * c1) + q2 / (c2 * c2))
    t1 = _cubic_root(a * (p2 + q2), c1)
    t2 = _cubic_root(a * (p2 + q2), c2)
    s = min(max(a * (t1 * t1 * p2 + t2 * t2 * q2), lo), hi)
    for _ in range(max_iter):
        val = h(s)
        # equation residual is h(s)/(c_i + s), so scale the test accordingly
        if abs(val) <= 1e-12 * (min(c1, c2) + s):
            return 1.0 / (c1 + s), 1.0 / (c2 + s)
        if val > 0:
            hi = s
        else:
            lo = s
        step = s - val / h_prime(s)
        s = step if lo < step < hi else 0.5 * (lo + hi)
    raise RuntimeError("coupled scale equations did not converge "
                       f"(p2={p2:g}, q2={q2:g}, c1={c1:g}, c2={c2:g}, a={a:g})")
