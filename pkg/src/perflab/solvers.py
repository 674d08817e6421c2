"""Optimization procedures and brute-force oracles.

Three iterative methods over one instance:

* rrm -- repeated risk minimization: at each round, fully minimize the loss
  on the distribution the previous parameters induced. Its fixed points are
  the stable points.
* rgd -- repeated gradient descent: one naive gradient step per round (loss
  term only), fresh samples each round. Shares the rrm fixed points.
* pgd -- descent on the full deployed-risk gradient (loss term plus
  distribution term), which targets the deployed-risk minimizer instead.

Plus two oracles: an exhaustive grid minimizer of the deployed risk (d <= 2)
and a fixed-point finder for the retraining map with a contraction check and
a grid fallback on the fixed-point residual.

Defaults: step = 0.1 / (beta + ridge + 1), stop tolerance 1e-5 in closed-form
mode; Monte Carlo runs stop at 3x the standard error of the quantity watched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import distmaps, losses, risk
from .core import Instance, SeedSpec, project
from .errors import ContractError, DivergenceError

MAX_ITERS_DEFAULT = 10_000
RRM_MAX_OUTER_DEFAULT = 100
TOL_CLOSED_FORM = 1e-5
DIVERGENCE_FACTOR = 10.0


@dataclass
class Trajectory:
    iterates: list
    pr_values: list           # one RiskEstimate per iterate
    grad_norms: list          # gradient norm (rgd/pgd) or iterate gap (rrm)
    method: str               # "RRM" | "RGD" | "PGD"
    step_size: float
    stop_reason: str          # "converged" | "max_iters" | "diverged"

    def __post_init__(self):
        if len(self.iterates) != len(self.pr_values) or len(self.iterates) != len(
            self.grad_norms
        ):
            raise ContractError("trajectory columns have unequal lengths")

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def gap_ratios(self) -> np.ndarray:
        """Successive iterate-gap ratios; the empirical contraction factor."""
        gaps = [
            float(np.linalg.norm(b - a))
            for a, b in zip(self.iterates[:-1], self.iterates[1:])
        ]
        gaps = [g for g in gaps if g > 0]
        if len(gaps) < 2:
            return np.array([])
        g = np.array(gaps)
        return g[1:] / g[:-1]


@dataclass(frozen=True)
class OracleResult:
    theta_star: np.ndarray
    objective: float
    grid_step: float
    method: str  # "grid" | "fixed_point" | "analytic"
    residual: float = 0.0
    conclusive: bool = True


def default_step(instance: Instance) -> float:
    beta = 2.0 if instance.loss.kind == "squared_ridge" else 1.0
    return 0.1 / (beta + instance.loss.ridge + 1.0)


def _resolve_tol(mode: str, tol: Optional[float], mc_floor: float) -> float:
    if tol is not None:
        return float(tol)
    return TOL_CLOSED_FORM if mode == "closed_form" else mc_floor


class _InnerObjective:
    """dpr(theta_env, .) under frozen samples (or exactly, in closed form)."""

    def __init__(self, instance, theta_env, n, seed, mode):
        self.instance = instance
        self.theta_env = instance.theta(theta_env)
        self.mode = mode
        self.grad_se = 0.0
        if mode == "closed_form":
            self.points = None
        else:
            if seed is None:
                raise ContractError("monte_carlo mode needs a seed")
            self.points = distmaps.sample(instance.map, self.theta_env, n, seed).points
            g = losses.batch_grad_theta(instance.loss, self.points, self.theta_env)
            self.grad_se = float(np.linalg.norm(g.std(axis=0, ddof=1)) / np.sqrt(n))

    def value(self, theta) -> float:
        if self.mode == "closed_form":
            return risk.dpr(self.instance, self.theta_env, theta, mode="closed_form").value
        return float(losses.batch_values(self.instance.loss, self.points, theta).mean())

    def grad(self, theta) -> np.ndarray:
        if self.mode == "closed_form":
            return risk.theta_grad_dpr(
                self.instance, self.theta_env, theta, mode="closed_form"
            )
        return losses.batch_grad_theta_mean(self.instance.loss, self.points, theta)


def inner_argmin(
    instance: Instance,
    theta_env,
    init=None,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    tol: Optional[float] = None,
    mode: str = "auto",
    max_iters: int = MAX_ITERS_DEFAULT,
    step: Optional[float] = None,
) -> np.ndarray:
    """Projected gradient descent on dpr(theta_env, .) to gradient norm <= tol."""
    mode = risk.resolve_mode(instance, mode)
    obj = _InnerObjective(instance, theta_env, n, seed, mode)
    eta = step if step is not None else default_step(instance)
    theta = instance.theta(init) if init is not None else obj.theta_env.copy()
    theta = project(theta, instance.domain)
    tol_eff = _resolve_tol(mode, tol, mc_floor=max(3.0 * obj.grad_se, 1e-8))
    v0 = obj.value(theta)
    guard = DIVERGENCE_FACTOR * max(abs(v0), 1.0)
    for _ in range(max_iters):
        g = obj.grad(theta)
        if _projected_grad_norm(theta, g, instance.domain, eta) <= tol_eff:
            break
        theta = project(theta - eta * g, instance.domain)
        if obj.value(theta) > guard:
            raise DivergenceError(
                f"inner minimization diverged (value exceeded {guard:g})"
            )
    return theta


def _projected_grad_norm(theta, g, box, eta) -> float:
    """Norm of the projected step direction; zero at constrained stationarity."""
    moved = project(theta - eta * g, box)
    return float(np.linalg.norm(theta - moved) / eta)


def rrm(
    instance: Instance,
    theta0,
    max_iters: int = RRM_MAX_OUTER_DEFAULT,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    tol: Optional[float] = None,
    mode: str = "auto",
) -> Trajectory:
    """Iterate the retraining map until successive parameters stop moving."""
    mode = risk.resolve_mode(instance, mode)
    seed = seed if seed is not None else SeedSpec(0)
    theta = project(instance.theta(theta0), instance.domain)
    gamma = loss_curvature(instance)
    iterates = [theta]
    gaps = []
    stop_reason = "max_iters"
    tol_gap = tol
    for t in range(max_iters):
        inner_seed = seed.child(t)
        nxt = inner_argmin(
            instance, theta, init=theta, n=n, seed=inner_seed, mode=mode
        )
        gap = float(np.linalg.norm(nxt - theta))
        gaps.append(gap)
        iterates.append(nxt)
        theta = nxt
        if tol_gap is None:
            mc_floor = 1e-3 if gamma == 0 else max(_rrm_gap_floor(instance, n, gamma), 1e-6)
            tol_gap = _resolve_tol(mode, None, mc_floor)
        if gap <= tol_gap:
            stop_reason = "converged"
            break
    grad_norms = gaps + [gaps[-1]] if gaps else [0.0]
    pr_values = _trajectory_pr(instance, iterates, n, seed, mode)
    return Trajectory(iterates, pr_values, grad_norms, "RRM", 0.0, stop_reason)


def _rrm_gap_floor(instance: Instance, n: int, gamma: float) -> float:
    # the argmin of a sample-average objective with curvature gamma wobbles by
    # about (gradient SE) / gamma; stop once the gap is inside 3x that
    sd_proxy = float(np.sqrt(np.sum(np.atleast_1d(
        instance.map.base_var if hasattr(instance.map, "base_var") else 1.0
    ))))
    return 3.0 * 2.0 * sd_proxy / (gamma * np.sqrt(n))


def loss_curvature(instance: Instance) -> float:
    if instance.loss.kind == "squared_ridge":
        return 2.0 + instance.loss.ridge
    return instance.loss.ridge


def _trajectory_pr(instance, iterates, n, seed, mode):
    out = []
    for t, th in enumerate(iterates):
        out.append(risk.pr(instance, th, n=n, seed=seed.child(90_000 + t), mode=mode))
    return out


def _gradient_descent(
    instance: Instance,
    theta0,
    grad_fn,
    method: str,
    step: Optional[float],
    max_iters: int,
    n: int,
    seed: SeedSpec,
    tol: Optional[float],
    mode: str,
) -> Trajectory:
    eta = step if step is not None else default_step(instance)
    if eta < 0:
        raise ContractError("step size must be >= 0")
    theta = project(instance.theta(theta0), instance.domain)
    iterates = [theta]
    grad_norms = []
    stop_reason = "max_iters"
    v0 = risk.pr(instance, theta, n=n, seed=seed.child(1), mode=mode).value
    guard = DIVERGENCE_FACTOR * max(abs(v0), 1.0)
    for t in range(max_iters):
        g, g_se = grad_fn(theta, seed.child(10 + t))
        gnorm = (
            float(np.linalg.norm(g))
            if eta == 0
            else _projected_grad_norm(theta, g, instance.domain, eta)
        )
        grad_norms.append(gnorm)
        tol_eff = _resolve_tol(mode, tol, mc_floor=max(3.0 * g_se, 1e-8))
        if gnorm <= tol_eff:
            stop_reason = "converged"
            break
        if eta == 0:
            break  # constant trajectory; nothing can change
        theta = project(theta - eta * g, instance.domain)
        iterates.append(theta)
        value = risk.pr(instance, theta, n=n, seed=seed.child(2), mode=mode).value
        if value > guard:
            stop_reason = "diverged"
            break
    if len(grad_norms) < len(iterates):
        grad_norms.append(grad_norms[-1] if grad_norms else 0.0)
    grad_norms = grad_norms[: len(iterates)]
    pr_values = _trajectory_pr(instance, iterates, n, seed, mode)
    return Trajectory(iterates, pr_values, grad_norms, method, eta, stop_reason)


def rgd(
    instance: Instance,
    theta0,
    step: Optional[float] = None,
    max_iters: int = MAX_ITERS_DEFAULT,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    tol: Optional[float] = None,
    mode: str = "auto",
) -> Trajectory:
    """Naive retraining by single gradient steps: only the loss term of the
    gradient, fresh samples from D(theta_t) each round."""
    mode = risk.resolve_mode(instance, mode)
    seed = seed if seed is not None else SeedSpec(0)

    def grad_fn(theta, s):
        if mode == "closed_form":
            return risk._cf_grad1(instance, theta), 0.0
        pts = distmaps.sample(instance.map, theta, n, s).points
        g = losses.batch_grad_theta_mean(instance.loss, pts, theta)
        per = losses.batch_grad_theta(instance.loss, pts, theta)
        se = float(np.linalg.norm(per.std(axis=0, ddof=1)) / np.sqrt(n))
        return g, se

    return _gradient_descent(
        instance, theta0, grad_fn, "RGD", step, max_iters, n, seed, tol, mode
    )


def pgd(
    instance: Instance,
    theta0,
    step: Optional[float] = None,
    max_iters: int = MAX_ITERS_DEFAULT,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    tol: Optional[float] = None,
    mode: str = "auto",
) -> Trajectory:
    """Descent on the full deployed-risk gradient (score term included)."""
    mode = risk.resolve_mode(instance, mode)
    seed = seed if seed is not None else SeedSpec(0)

    def grad_fn(theta, s):
        est = risk.performative_gradient(
            instance, theta, n=n, seed=s, mode=mode, with_se=(mode == "monte_carlo")
        )
        return est.total, est.std_err

    return _gradient_descent(
        instance, theta0, grad_fn, "PGD", step, max_iters, n, seed, tol, mode
    )


def grid_oracle_po(
    instance: Instance,
    grid_step: float = 1e-3,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> OracleResult:
    """Exhaustive deployed-risk minimizer over the full parameter grid (d <= 2).

    Ties break toward the smallest parameter norm, then lexicographically.
    """
    if instance.dim > 2:
        raise ContractError("grid oracle supports d <= 2 only")
    mode = risk.resolve_mode(instance, mode)
    thetas = instance.domain.grid(grid_step)
    values, _ = risk.pr_grid(instance, thetas, n=n, seed=seed, mode=mode)
    best = values.min()
    ties = np.flatnonzero(values == best)
    if ties.shape[0] > 1:
        cand = thetas[ties]
        order = np.lexsort(tuple(cand[:, j] for j in range(cand.shape[1] - 1, -1, -1)))
        cand = cand[order]
        norms = np.linalg.norm(cand, axis=1)
        pick = cand[np.argmin(norms)]
    else:
        pick = thetas[ties[0]]
    return OracleResult(pick.copy(), float(best), float(grid_step), "grid")


def fixed_point_oracle_ps(
    instance: Instance,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    tol: Optional[float] = None,
    mode: str = "auto",
    max_outer: int = 200,
) -> OracleResult:
    """Find a retraining fixed point.

    Runs the retraining iteration from the box center and accepts when the
    empirical gap ratios behave like a contraction and the fixed-point
    residual clears the tolerance; otherwise falls back to a grid search on
    the residual and may return an inconclusive minimum-residual point.
    """
    mode = risk.resolve_mode(instance, mode)
    seed = seed if seed is not None else SeedSpec(0)
    tol_res = _resolve_tol(mode, tol, mc_floor=1e-2)
    traj = rrm(
        instance,
        instance.domain.center(),
        max_iters=max_outer,
        n=n,
        seed=seed.child(1),
        tol=tol,
        mode=mode,
    )
    ratios = traj.gap_ratios()
    contraction_like = traj.stop_reason == "converged" and (
        ratios.size == 0 or float(np.median(ratios)) <= 0.97
    )
    if contraction_like:
        theta = traj.final
        res = _fp_residual(instance, theta, n, seed.child(2), mode)
        if res <= max(tol_res, 10 * TOL_CLOSED_FORM if mode == "closed_form" else tol_res):
            obj = risk.pr(instance, theta, n=n, seed=seed.child(3), mode=mode).value
            return OracleResult(theta, obj, 0.0, "fixed_point", res, True)
    # grid fallback on the fixed-point residual
    grid_step = instance.domain.diameter() / 100 if instance.dim == 1 else (
        instance.domain.diameter() / 20
    )
    thetas = instance.domain.grid(grid_step)
    residuals = np.array(
        [
            _fp_residual(instance, th, n, seed.child(100 + i), mode)
            for i, th in enumerate(thetas)
        ]
    )
    k = int(np.argmin(residuals))
    theta = thetas[k].copy()
    res = float(residuals[k])
    obj = risk.pr(instance, theta, n=n, seed=seed.child(3), mode=mode).value
    return OracleResult(theta, obj, float(grid_step), "grid", res, res <= tol_res)


def _fp_residual(instance, theta, n, seed, mode) -> float:
    nxt = inner_argmin(instance, theta, init=theta, n=n, seed=seed, mode=mode)
    return float(np.linalg.norm(nxt - theta))
