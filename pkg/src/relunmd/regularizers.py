"""The six regularizer configurations and their closed-form factor updates.

Each case bundles three things: the penalty value ``H1(U) + H2(V)``, the
kernel coefficients used by the Bregman step, and the exact minimizer of the
factor subproblem

    min  lam*H1(U) + lam*H2(V) + <P, U> + <Q, V> + psi(U, V)

which always has the scaled form ``U = -t1 * P'``, ``V = -t2 * Q'`` for
(possibly thresholded) ``P', Q'`` and positive scales solving a cubic.

The graph case treats the trace penalty as part of the smooth term: its
gradient ``mu0 * L @ U`` is folded into ``P`` by the solver, and the kernel's
quadratic coefficient grows by ``mu0 * ||L||_F``. That is the only reading
under which the scaled update form is stationary, since ``L @ U`` is not
parallel to ``U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _backend
from .kernels import KernelSpec, psi_value
from .model import FactorPair
from .proxops import _cubic_root, coupled_scale_pair, hard_threshold, \
    hard_threshold_columns, soft_threshold

TAGS = ("none", "tikhonov", "l1l1", "graph_tikhonov", "l1_minus_fro", "sparsity")
SCOPES = ("global", "per-column")


def _sq(m) -> float:
    return float(np.einsum("ij,ij->", m, m))


@dataclass(frozen=True)
class RegularizerCase:
    """One H1/H2 configuration; build instances via the classmethods."""

    tag: str
    eta1: float = 0.0
    eta2: float = 0.0
    mu0: float = 0.0
    laplacian: np.ndarray | None = None
    s1: int | None = None
    s2: int | None = None
    s_scope: str = "global"

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown regularizer tag {self.tag!r}")
        if self.s_scope not in SCOPES:
            raise ValueError(f"s_scope must be one of {SCOPES}")
        if min(self.eta1, self.eta2, self.mu0) < 0:
            raise ValueError("regularization weights must be nonnegative")
        used = {
            "none": set(),
            "tikhonov": {"eta1", "eta2"},
            "l1l1": {"eta1", "eta2"},
            "graph_tikhonov": {"eta1", "eta2", "mu0", "laplacian"},
            "l1_minus_fro": {"eta1", "eta2"},
            "sparsity": {"s1", "s2", "s_scope"},
        }[self.tag]
        defaults = {"eta1": 0.0, "eta2": 0.0, "mu0": 0.0, "laplacian": None,
                    "s1": None, "s2": None, "s_scope": "global"}
        for name, default in defaults.items():
            if name in used:
                continue
            val = getattr(self, name)
            stray = (val is not None) if default is None else (val != default)
            if stray:
                raise ValueError(f"parameter {name!r} is not used by case {self.tag!r}")
        if self.tag == "graph_tikhonov":
            lap = self.laplacian
            if lap is None:
                raise ValueError("graph_tikhonov requires a laplacian matrix")
            lap = np.ascontiguousarray(lap, dtype=np.float64)
            if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
                raise ValueError("laplacian must be square")
            if not np.allclose(lap, lap.T, atol=1e-10):
                raise ValueError("laplacian must be symmetric")
            if np.abs(lap.sum(axis=1)).max() > 1e-8 * max(1.0, np.abs(lap).max()):
                raise ValueError("laplacian rows must sum to zero")
            object.__setattr__(self, "laplacian", lap)
        if self.tag == "sparsity":
            for s in (self.s1, self.s2):
                if s is not None and (s < 0 or s != int(s)):
                    raise ValueError("sparsity budgets must be nonnegative integers")

    @classmethod
    def none(cls):
        return cls(tag="none")

    @classmethod
    def tikhonov(cls, eta1: float, eta2: float):
        return cls(tag="tikhonov", eta1=eta1, eta2=eta2)

    @classmethod
    def l1l1(cls, eta1: float, eta2: float):
        return cls(tag="l1l1", eta1=eta1, eta2=eta2)

    @classmethod
    def graph_tikhonov(cls, eta1: float, eta2: float, mu0: float, laplacian):
        return cls(tag="graph_tikhonov", eta1=eta1, eta2=eta2, mu0=mu0,
                   laplacian=np.asarray(laplacian, dtype=np.float64))

    @classmethod
    def l1_minus_fro(cls, eta1: float, eta2: float):
        return cls(tag="l1_minus_fro", eta1=eta1, eta2=eta2)

    @classmethod
    def sparsity(cls, s1: int | None, s2: int | None, s_scope: str = "global"):
        return cls(tag="sparsity", s1=s1, s2=s2, s_scope=s_scope)

    @cached_property
    def laplacian_fro(self) -> float:
        return 0.0 if self.laplacian is None else float(np.linalg.norm(self.laplacian))

    @cached_property
    def laplacian_spectral(self) -> float:
        if self.laplacian is None:
            return 0.0
        return float(np.linalg.eigvalsh(self.laplacian)[-1])


def kernel_for(case: RegularizerCase, w_norm: float, lam: float) -> KernelSpec:
    """Kernel coefficients for the current slack norm and step size."""
    if w_norm < 0:
        raise ValueError("w_norm must be >= 0")
    if lam <= 0:
        raise ValueError("step size lam must be > 0")
    if case.tag == "graph_tikhonov":
        return KernelSpec(a=3.0, c=w_norm + case.mu0 * case.laplacian_fro)
    if case.tag == "l1_minus_fro":
        return KernelSpec(a=3.0, c=w_norm, e=case.eta2 * lam)
    return KernelSpec(a=3.0, c=w_norm)


def _threshold_u(case: RegularizerCase, m):
    if case.s1 is None:
        return m.copy()
    if case.s_scope == "per-column":
        return hard_threshold_columns(m, case.s1)
    return hard_threshold(m.ravel(), case.s1).reshape(m.shape)


def _threshold_v(case: RegularizerCase, m):
    if case.s2 is None:
        return m.copy()
    if case.s_scope == "per-column":
        return hard_threshold_columns(m, case.s2)
    return hard_threshold(m.ravel(), case.s2).reshape(m.shape)


def update_uv(case: RegularizerCase, p: np.ndarray, q: np.ndarray,
              w_norm: float, lam: float, coupled: bool = False) -> FactorPair:
    """Closed-form minimizer of the factor subproblem for (P, Q).

    For the Tikhonov-type cases with ``eta1 != eta2`` the two published
    cubics decouple the scales; that form is exact only for equal weights.
    ``coupled=True`` solves the exactly-coupled system instead (see
    ``proxops.coupled_scale_pair``). The default follows the published form.
    """
    spec = kernel_for(case, w_norm, lam)
    c = spec.c
    if c <= 0:
        raise ValueError("degenerate kernel: quadratic coefficient must be > 0 "
                         "(is the slack matrix identically zero?)")
    p = np.ascontiguousarray(p, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    tag = case.tag
    if tag == "none":
        t = _cubic_root(3.0 * (_sq(p) + _sq(q)), c)
        return FactorPair(u=-t * p, v=-t * q)
    if tag in ("tikhonov", "graph_tikhonov"):
        c1 = c + lam * case.eta1
        c2 = c + lam * case.eta2
        p2, q2 = _sq(p), _sq(q)
        if coupled:
            t1, t2 = coupled_scale_pair(p2, q2, c1, c2, 3.0)
        else:
            rho = 3.0 * (p2 + q2)
            t1 = _cubic_root(rho, c1)
            t2 = _cubic_root(rho, c2)
        return FactorPair(u=-t1 * p, v=-t2 * q)
    if tag == "l1l1":
        su = np.empty_like(p)
        sv = np.empty_like(q)
        nu = _backend.soft_threshold_into(-p, case.eta1 * lam, su)
        nv = _backend.soft_threshold_into(-q, case.eta2 * lam, sv)
        t = _cubic_root(3.0 * (nu + nv), c)
        su *= t
        sv *= t
        return FactorPair(u=su, v=sv)
    if tag == "l1_minus_fro":
        su = np.empty_like(p)
        nu = _backend.soft_threshold_into(-p, case.eta1 * lam, su)
        t = _cubic_root(3.0 * (nu + _sq(q)), c)
        su *= t
        return FactorPair(u=su, v=-t * q)
    if tag == "sparsity":
        tu = _threshold_u(case, -p)
        tv = _threshold_v(case, -q)
        t = _cubic_root(3.0 * (_sq(tu) + _sq(tv)), c)
        tu *= t
        tv *= t
        return FactorPair(u=tu, v=tv)
    raise AssertionError(f"unhandled tag {tag!r}")


def reg_value(case: RegularizerCase | None, pair: FactorPair) -> float:
    """``H1(U) + H2(V)``; indicator cases return 0 or ``math.inf``."""
    if case is None or case.tag == "none":
        return 0.0
    nu, nv = pair.norms_sq()
    if case.tag == "tikhonov":
        return 0.5 * (case.eta1 * nu + case.eta2 * nv)
    if case.tag == "l1l1":
        return case.eta1 * float(np.abs(pair.u).sum()) \
            + case.eta2 * float(np.abs(pair.v).sum())
    if case.tag == "graph_tikhonov":
        trace = float(np.einsum("ij,ij->", pair.u, case.laplacian @ pair.u))
        return 0.5 * (case.mu0 * trace + case.eta1 * nu + case.eta2 * nv)
    if case.tag == "l1_minus_fro":
        return case.eta1 * float(np.abs(pair.u).sum()) - 0.5 * case.eta2 * nu
    if case.tag == "sparsity":
        return 0.0 if _sparsity_feasible(case, pair) else math.inf
    raise AssertionError(f"unhandled tag {case.tag!r}")


def _sparsity_feasible(case: RegularizerCase, pair: FactorPair) -> bool:
    def ok(m, s):
        if s is None:
            return True
        if case.s_scope == "per-column":
            return bool((np.count_nonzero(m, axis=0) <= s).all())
        return np.count_nonzero(m) <= s

    return ok(pair.u, case.s1) and ok(pair.v, case.s2)


def _subproblem_reg(case: RegularizerCase, pair: FactorPair) -> float:
    """Regularizer as seen by the factor subproblem.

    Identical to ``reg_value`` except for the graph case, whose trace term is
    linearized into P and therefore absent from the subproblem.
    """
    if case.tag == "graph_tikhonov":
        nu, nv = pair.norms_sq()
        return 0.5 * (case.eta1 * nu + case.eta2 * nv)
    return reg_value(case, pair)


def subproblem_objective(case: RegularizerCase, p: np.ndarray, q: np.ndarray,
                         w_norm: float, lam: float, pair: FactorPair) -> float:
    """Value of the subproblem objective that ``update_uv`` minimizes."""
    spec = kernel_for(case, w_norm, lam)
    inner = float(np.einsum("ij,ij->", p, pair.u) + np.einsum("ij,ij->", q, pair.v))
    return lam * _subproblem_reg(case, pair) + inner + psi_value(pair, spec)


def prox_step(case: RegularizerCase | None, z: np.ndarray, step: float,
              side: str) -> np.ndarray:
    """Euclidean proximal map of ``step * H`` for one factor block.

    ``side`` selects H1 (``"u"``) or H2 (``"v"``). Used by the PALM-type
    baselines; the graph trace term is handled as a smooth gradient by the
    caller, so here the graph case reduces to its Tikhonov part.
    """
    if side not in ("u", "v"):
        raise ValueError("side must be 'u' or 'v'")
    if case is None or case.tag == "none":
        return z
    eta = case.eta1 if side == "u" else case.eta2
    if case.tag in ("tikhonov", "graph_tikhonov"):
        return z / (1.0 + step * eta)
    if case.tag == "l1l1":
        return soft_threshold(z, step * eta)
    if case.tag == "l1_minus_fro":
        if side == "v":
            return z
        denom = 1.0 - step * case.eta2
        if denom <= 0:
            raise ValueError("prox of the concave-quadratic case needs "
                             "step * eta2 < 1")
        return soft_threshold(z, step * case.eta1) / denom
    if case.tag == "sparsity":
        return _threshold_u(case, z) if side == "u" else _threshold_v(case, z)
    raise AssertionError(f"unhandled tag {case.tag!r}")
