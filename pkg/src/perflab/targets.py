"""Probe targets: scalar functions with gradients that condition checkers probe.

A target bundles value/gradient callables (each returning a standard error,
zero for exact targets), the domain box, and optionally a known minimizer or
a projector onto a known optimal set. Instance-derived targets freeze one
sample batch so every probe shares the same noise (common random numbers);
analytic targets are exact and exist mainly to calibrate the checkers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import distmaps, losses, risk
from .core import Instance, ParamBox, SeedSpec, as_vector, project
from .errors import ContractError


@dataclass
class ProbeTarget:
    value: Callable          # theta -> (float, se)
    grad: Callable           # theta -> (vector, se_scalar)
    domain: ParamBox
    label: str
    minimizer: Optional[np.ndarray] = None
    project_opt: Optional[Callable] = None  # theta -> nearest optimal point
    mode: str = "exact"

    def projection(self, theta: np.ndarray) -> np.ndarray:
        if self.project_opt is not None:
            return as_vector(self.project_opt(theta), dim=self.domain.dim)
        if self.minimizer is None:
            raise ContractError("target has no minimizer; resolve one first")
        return self.minimizer


def dpr_target(
    instance: Instance,
    anchor,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> ProbeTarget:
    """theta -> dpr(anchor, theta): the loss landscape on one frozen distribution."""
    anchor = instance.theta(anchor)
    mode = risk.resolve_mode(instance, mode)
    if mode == "closed_form":
        def value(t):
            return risk.dpr(instance, anchor, t, mode="closed_form").value, 0.0

        def grad(t):
            return risk.theta_grad_dpr(instance, anchor, t, mode="closed_form"), 0.0

        return ProbeTarget(value, grad, instance.domain,
                           f"dpr(anchor={np.round(anchor, 6).tolist()})", mode="closed_form")
    if seed is None:
        raise ContractError("monte_carlo target needs a seed")
    points = distmaps.sample(instance.map, anchor, n, seed).points
    sqrt_n = np.sqrt(n)

    def value(t):
        vals = losses.batch_values(instance.loss, points, t)
        return float(vals.mean()), float(vals.std(ddof=1) / sqrt_n)

    def grad(t):
        per = losses.batch_grad_theta(instance.loss, points, t)
        se = float(np.linalg.norm(per.std(axis=0, ddof=1)) / sqrt_n)
        return per.mean(axis=0), se

    return ProbeTarget(value, grad, instance.domain,
                       f"dpr(anchor={np.round(anchor, 6).tolist()}, n={n})",
                       mode="monte_carlo")


def pr_target(
    instance: Instance,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> ProbeTarget:
    """theta -> pr(theta), with one shared noise stream across probes."""
    mode = risk.resolve_mode(instance, mode)
    if mode == "monte_carlo" and seed is None:
        raise ContractError("monte_carlo target needs a seed")

    def value(t):
        est = risk.pr(instance, t, n=n, seed=seed, mode=mode)
        return est.value, est.std_err

    def grad(t):
        est = risk.performative_gradient(
            instance, t, n=n, seed=seed, mode=mode, with_se=(mode == "monte_carlo")
        )
        return est.total, est.std_err

    return ProbeTarget(value, grad, instance.domain, f"pr(mode={mode})", mode=mode)


def quadratic_target(curvature: float, minimizer, box: ParamBox) -> ProbeTarget:
    """f(x) = (c/2) ||x - x*||^2; every checker constant is known exactly."""
    x_star = as_vector(minimizer, dim=box.dim)

    def value(t):
        d = as_vector(t, dim=box.dim) - x_star
        return 0.5 * curvature * float(d @ d), 0.0

    def grad(t):
        return curvature * (as_vector(t, dim=box.dim) - x_star), 0.0

    return ProbeTarget(value, grad, box, f"quadratic(c={curvature})",
                       minimizer=x_star, mode="exact")


def quartic_target(box: ParamBox) -> ProbeTarget:
    """f(x) = sum x_i^4: a known counterexample, flat to second order at 0."""
    zero = np.zeros(box.dim)

    def value(t):
        t = as_vector(t, dim=box.dim)
        return float(np.sum(t**4)), 0.0

    def grad(t):
        t = as_vector(t, dim=box.dim)
        return 4.0 * t**3, 0.0

    return ProbeTarget(value, grad, box, "quartic", minimizer=zero, mode="exact")


def flat_bottom_target(box: ParamBox, radius: float = 1.0) -> ProbeTarget:
    """f(x) = (max(|x| - r, 0))^2 per coordinate: a flat optimal set [-r, r]^d."""

    def residual(t):
        t = as_vector(t, dim=box.dim)
        return np.maximum(np.abs(t) - radius, 0.0) * np.sign(t)

    def value(t):
        r = residual(t)
        return float(r @ r), 0.0

    def grad(t):
        return 2.0 * residual(t), 0.0

    def project_opt(t):
        t = as_vector(t, dim=box.dim)
        return np.clip(t, -radius, radius)

    return ProbeTarget(value, grad, box, f"flat_bottom(r={radius})",
                       minimizer=np.zeros(box.dim), project_opt=project_opt,
                       mode="exact")


def minimize_target(
    target: ProbeTarget,
    init,
    max_iters: int = 5000,
    grad_tol: float = 1e-9,
) -> np.ndarray:
    """Projected gradient descent with Armijo step halving.

    Steps must decrease the value by a fraction of eta * ||g||^2; a bare
    non-increase test would loop forever on exact reflections (step 1 on a
    curvature-2 quadratic maps each point to its mirror image).
    """
    box = target.domain
    theta = project(as_vector(init, dim=box.dim), box)
    val, _ = target.value(theta)
    eta = 1.0
    for _ in range(max_iters):
        g, _ = target.grad(theta)
        moved = project(theta - eta * g, box)
        step = float(np.linalg.norm(theta - moved))
        if step / max(eta, 1e-300) <= grad_tol:
            break
        new_val, _ = target.value(moved)
        if new_val > val - 1e-4 * step * step / max(eta, 1e-300):
            eta *= 0.5
            if eta < 1e-12:
                break
            continue
        theta, val = moved, new_val
    return theta


def resolve_minimizer(
    target: ProbeTarget,
    seed: SeedSpec,
    restarts: int = 10,
    disagreement_tol: float = 1e-4,
) -> tuple:
    """Fill in target.minimizer by multi-restart descent.

    Returns (minimizer, disagreement). A disagreement above the tolerance
    signals a non-unique minimizer; callers must then report inconclusive
    rather than pick a point silently.
    """
    if target.minimizer is not None:
        return target.minimizer, 0.0
    inits = np.vstack(
        [target.domain.center()[None, :], target.domain.uniform(restarts - 1, seed)]
    )
    sols = np.array([minimize_target(target, x0) for x0 in inits])
    vals = np.array([target.value(s)[0] for s in sols])
    best = sols[np.argmin(vals)]
    disagreement = float(np.max(np.linalg.norm(sols - best[None, :], axis=1)))
    if disagreement <= disagreement_tol:
        target.minimizer = best
    return best, disagreement
