"""Alternating solvers for the ReLU-constrained factorization objective.

``nmd_aapb`` alternates the closed-form slack update with one Bregman
proximal step that updates both factors simultaneously, plus optional
extrapolation (``beta = 0`` gives the plain variant). ``ippalm`` is the
PALM-type baseline that updates U and V by separate Euclidean
proximal-gradient steps with exact partial Lipschitz step sizes.

Both are deterministic given the seed in their options, and both emit one
trace record per iteration carrying the objective, the ReLU relative error,
the Bregman step length, and a Lyapunov surrogate (the unknown infimum of
the objective is replaced by the running minimum; only differences of the
surrogate are meaningful).
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _backend
from .kernels import KernelSpec, bregman_distance, psi_grad
from .model import FactorPair, ObservedMatrix, SlackMatrix
from .regularizers import RegularizerCase, kernel_for, prox_step, reg_value, \
    update_uv

SOLVER_NAMES = ("aapb", "apb", "ippalm", "ppalm")

_STEP_FLOOR = 1e-8  # guards 1/L when a factor block is numerically zero


@dataclass
class SolveOptions:
    """Options shared by all solvers.

    ``lam`` is the Bregman step size (at most 1, since the kernel makes the
    misfit smooth-adaptable with constant 1). ``assumption_check`` enables
    the per-iteration extrapolation safeguard: whenever the Bregman
    inequality bounding the extrapolated point fails, that iteration falls
    back to ``beta = 0``.
    """

    rank: int
    lam: float = 1.0
    beta: float = 0.6
    max_iter: int = 1000
    max_time: float = math.inf
    tol: float = 1e-4
    seed: int = 0
    assumption_check: bool = False
    delta: float = 0.9
    eps: float = 0.1
    # optional adaptive step (iteration -> lam); clamped so the effective
    # sequence is nonincreasing and never exceeds lam
    lam_schedule: Optional[Callable[[int], float]] = None

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be a positive integer")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("step size lam must satisfy 0 < lam <= 1")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("extrapolation beta must lie in [0, 1)")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.max_time <= 0:
            raise ValueError("max_time must be positive")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if not 0.0 < self.eps < self.delta < 1.0:
            raise ValueError("monitor constants need 0 < eps < delta < 1")


@dataclass(frozen=True)
class TraceRecord:
    """Per-iteration monitor values; ``bregman_step`` is D(Y^{k-1}, Y^k)."""

    iter: int
    wall_time: float
    objective: float
    rel_error: float
    bregman_step: float
    lyapunov: float


def init_factors(obs: ObservedMatrix, opts: SolveOptions) -> FactorPair:
    """Seeded Gaussian factors scaled so ||U V||_F is on the order of ||M||_F."""
    m, n = obs.shape
    if opts.rank > min(m, n):
        raise ValueError(f"rank {opts.rank} exceeds min(m, n) = {min(m, n)}")
    rng = np.random.Generator(np.random.PCG64(opts.seed))
    scale = math.sqrt(obs.norm / (opts.rank * math.sqrt(m * n)))
    u = scale * rng.standard_normal((m, opts.rank))
    v = scale * rng.standard_normal((opts.rank, n))
    return FactorPair(u=u, v=v)


def extrapolate(curr: FactorPair, prev: FactorPair, beta: float) -> FactorPair:
    """``Y + beta * (Y - Y_prev)`` applied jointly to both factors."""
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if beta == 0.0:
        return curr
    return FactorPair(u=curr.u + beta * (curr.u - prev.u),
                      v=curr.v + beta * (curr.v - prev.v))


def compute_pq(bar_pair: FactorPair, w: SlackMatrix, lam: float,
               spec: KernelSpec, case: RegularizerCase | None = None):
    """Linearization point of the Bregman step:

    ``P = lam * grad_U F(Ubar, Vbar, W) - grad_U psi(Ubar, Vbar)`` and the
    symmetric Q. For the graph case the smooth part includes the trace
    penalty, so ``mu0 * L @ Ubar`` joins the U gradient.
    """
    xb = bar_pair.product()
    if xb.shape != w.w.shape:
        raise ValueError(f"slack shape {w.w.shape} does not match factors")
    resid = xb - w.w
    gu = resid @ bar_pair.v.T
    gv = bar_pair.u.T @ resid
    if case is not None and case.tag == "graph_tikhonov":
        gu = gu + case.mu0 * (case.laplacian @ bar_pair.u)
    pgu, pgv = psi_grad(bar_pair, spec)
    return lam * gu - pgu, lam * gv - pgv


def assumption32_check(y_bar: FactorPair, y_curr: FactorPair,
                       y_prev: FactorPair, spec: KernelSpec, lam: float,
                       delta_minus_eps: float, L: float = 1.0) -> bool:
    """Extrapolation safeguard inequality

    ``D(Y^k, Ybar^k) <= (delta - eps) / (1 + L * lam) * D(Y^{k-1}, Y^k)``.

    Distances are clamped at zero (they are nonnegative up to rounding).
    """
    if not 0.0 < delta_minus_eps < 1.0:
        raise ValueError("delta_minus_eps must lie in (0, 1)")
    lhs = max(bregman_distance(y_curr, y_bar, spec), 0.0)
    rhs = max(bregman_distance(y_prev, y_curr, spec), 0.0)
    return lhs <= delta_minus_eps / (1.0 + L * lam) * rhs


def _finish_iteration(obs, case, w, spec_or_none, new_pair, old_pair, k, t0,
                      best_obj, lam, delta, trace):
    """Shared trace bookkeeping; returns (product, rel_error, best_obj).

    With ``spec_or_none=None`` the step length falls back to the quadratic
    kernel (half squared distance), which is the natural metric for the
    PALM-type solvers.
    """
    x = new_pair.product()
    obj = _backend.half_sqdiff(w, x) + reg_value(case, new_pair)
    rel = math.sqrt(_backend.relu_residual_sq(x, obs.data)) / obs.norm
    if not (math.isfinite(obj) and math.isfinite(rel)):
        raise ArithmeticError(f"non-finite iterate at iteration {k + 1}; "
                              "the run diverged")
    if spec_or_none is not None:
        dstep = max(bregman_distance(old_pair, new_pair, spec_or_none), 0.0)
    else:
        du = new_pair.u - old_pair.u
        dv = new_pair.v - old_pair.v
        dstep = 0.5 * (float(np.einsum("ij,ij->", du, du))
                       + float(np.einsum("ij,ij->", dv, dv)))
    best_obj = min(best_obj, obj)
    trace.append(TraceRecord(iter=k + 1, wall_time=time.perf_counter() - t0,
                             objective=obj, rel_error=rel, bregman_step=dstep,
                             lyapunov=lam * (obj - best_obj) + delta * dstep))
    return x, rel, best_obj


def _validate_case_shapes(obs: ObservedMatrix, case: RegularizerCase | None):
    if case is not None and case.tag == "graph_tikhonov" \
            and case.laplacian.shape[0] != obs.shape[0]:
        raise ValueError("laplacian size must equal the number of rows of M")


def nmd_aapb(obs: ObservedMatrix, case: RegularizerCase | None,
             opts: SolveOptions, callback=None):
    """Accelerated alternating partial Bregman solver.

    Per iteration: closed-form slack update, extrapolation of both factors,
    linearization (P, Q), and the closed-form factor update for the case's
    regularizer. ``opts.beta = 0`` gives the non-accelerated variant.

    Returns the final factors and the per-iteration trace. Stops on
    ``max_iter``, ``max_time``, or relative error at most ``opts.tol``.
    """
    if case is None:
        case = RegularizerCase.none()
    _validate_case_shapes(obs, case)
    pair = init_factors(obs, opts)
    prev = pair
    x = pair.product()
    w = np.empty_like(obs.data)
    trace: list[TraceRecord] = []
    best_obj = math.inf
    lam = opts.lam
    t0 = time.perf_counter()
    for k in range(opts.max_iter):
        if time.perf_counter() - t0 > opts.max_time:
            break
        if opts.lam_schedule is not None:
            lam = min(lam, float(opts.lam_schedule(k)), opts.lam)
            if lam <= 0:
                raise ValueError("lam_schedule produced a nonpositive step")
        w_norm = _backend.slack_update(x, obs.data, obs.pos_mask, w)
        spec = kernel_for(case, w_norm, lam)
        bar = extrapolate(pair, prev, opts.beta)
        if opts.assumption_check and opts.beta > 0.0 and bar is not pair:
            if not assumption32_check(bar, pair, prev, spec, lam,
                                      opts.delta - opts.eps):
                bar = pair
        p, q = compute_pq(bar, SlackMatrix(w=w), lam, spec, case)
        new_pair = update_uv(case, p, q, w_norm, lam)
        x, rel, best_obj = _finish_iteration(
            obs, case, w, spec, new_pair, pair, k, t0, best_obj,
            lam, opts.delta, trace)
        prev, pair = pair, new_pair
        if callback is not None:
            callback(k + 1, pair)
        if rel <= opts.tol:
            break
    return pair, trace


def _spectral_sq(mat: np.ndarray) -> float:
    """Largest eigenvalue of the symmetric PSD product block."""
    return float(max(np.linalg.eigvalsh(mat)[-1], 0.0))


def ippalm(obs: ObservedMatrix, case: RegularizerCase | None,
           opts: SolveOptions, callback=None):
    """Inertial PALM baseline with a closed-form slack update.

    U and V take separate proximal-gradient steps (U against V^k, V against
    the fresh U^{k+1}) with steps equal to the inverse partial-gradient
    Lipschitz constants. ``opts.beta = 0`` gives the non-inertial variant.
    """
    if case is None:
        case = RegularizerCase.none()
    _validate_case_shapes(obs, case)
    pair = init_factors(obs, opts)
    prev = pair
    x = pair.product()
    w = np.empty_like(obs.data)
    trace: list[TraceRecord] = []
    best_obj = math.inf
    graph = case.tag == "graph_tikhonov"
    lap_spec = case.mu0 * case.laplacian_spectral if graph else 0.0
    t0 = time.perf_counter()
    for k in range(opts.max_iter):
        if time.perf_counter() - t0 > opts.max_time:
            break
        _backend.slack_update(x, obs.data, obs.pos_mask, w)

        u_bar = pair.u + opts.beta * (pair.u - prev.u)
        lam1 = 1.0 / max(_spectral_sq(pair.v @ pair.v.T) + lap_spec, _STEP_FLOOR)
        if case.tag == "l1_minus_fro" and case.eta2 > 0:
            # the concave-quadratic prox needs step * eta2 < 1
            lam1 = min(lam1, 0.95 / case.eta2)
        gu = (u_bar @ pair.v - w) @ pair.v.T
        if graph:
            gu += case.mu0 * (case.laplacian @ u_bar)
        u_new = prox_step(case, u_bar - lam1 * gu, lam1, "u")

        v_bar = pair.v + opts.beta * (pair.v - prev.v)
        lam2 = 1.0 / max(_spectral_sq(u_new.T @ u_new), _STEP_FLOOR)
        gv = u_new.T @ (u_new @ v_bar - w)
        v_new = prox_step(case, v_bar - lam2 * gv, lam2, "v")

        new_pair = FactorPair(u=u_new, v=v_new)
        x, rel, best_obj = _finish_iteration(
            obs, case, w, None, new_pair, pair, k, t0, best_obj,
            opts.lam, opts.delta, trace)
        prev, pair = pair, new_pair
        if callback is not None:
            callback(k + 1, pair)
        if rel <= opts.tol:
            break
    return pair, trace


def rate_monitor(trace) -> float:
    """``K * min_k D(Y^{k-1}, Y^k)`` over the trace; O(1/K) when bounded."""
    if not trace:
        raise ValueError("rate monitor needs a nonempty trace")
    return len(trace) * min(rec.bregman_step for rec in trace)


def run_solver(name: str, obs: ObservedMatrix, case: RegularizerCase | None,
               opts: SolveOptions, callback=None):
    """Dispatch by solver name; 'apb' and 'ppalm' force ``beta = 0``."""
    if name not in SOLVER_NAMES:
        raise ValueError(f"unknown solver {name!r}; choose from {SOLVER_NAMES}")
    if name in ("apb", "ppalm"):
        opts = dataclasses.replace(opts, beta=0.0)
    fn = nmd_aapb if name in ("aapb", "apb") else ippalm
    return fn(obs, case, opts, callback=callback)
