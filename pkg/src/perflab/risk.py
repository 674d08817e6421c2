"""Deployed-risk estimators.

pr(theta) is the expected loss of theta on the distribution theta itself
induces; dpr(theta1, theta2) decouples the two roles (distribution from
theta1, loss from theta2). Both come in Monte Carlo and closed-form modes;
the closed form exists for the Gaussian location map with the squared-ridge
loss and is exact:

    dpr(t1, t2) = ||t2 - mu(t1)||^2 + sum(var) + (ridge/2) ||t2||^2,
    mu(t) = base_mean + shift @ t.

The deployed-risk gradient splits into grad1 (loss dependence on theta) and
grad2 (distribution dependence, via the log-density score). The Monte Carlo
grad2 is the score-weighted loss mean; maps without a density fall back to a
central finite difference in the distribution slot, flagged on the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import distmaps, losses
from .core import Instance, SeedSpec, as_vector
from .errors import ContractError, UnsupportedMapError

DEFAULT_SAMPLES = 100_000
FD_STEP_MC = 1e-3
FD_STEP_CF = 1e-5


@dataclass(frozen=True)
class RiskEstimate:
    value: float
    std_err: float
    n: int
    mode: str  # "monte_carlo" | "closed_form"

    def __post_init__(self):
        if self.std_err < 0:
            raise ContractError("std_err must be >= 0")
        if self.mode == "closed_form" and self.std_err != 0.0:
            raise ContractError("closed-form estimates carry std_err = 0")


@dataclass(frozen=True)
class GradEstimate:
    grad1: np.ndarray  # mean of grad_theta loss
    grad2: np.ndarray  # score-weighted loss mean (distribution dependence)
    total: np.ndarray
    n: int
    mode: str
    grad2_method: str = "score"  # "score" | "fd_first_arg" | "closed_form"
    std_err: float = 0.0         # norm-level SE of `total` (0 in closed form)

    def __post_init__(self):
        if not np.allclose(self.total, self.grad1 + self.grad2, rtol=0, atol=1e-12):
            raise ContractError("total must equal grad1 + grad2")


def has_closed_form(instance: Instance) -> bool:
    return (
        instance.map.kind == "gaussian_location_scale"
        and instance.loss.kind == "squared_ridge"
    )


def resolve_mode(instance: Instance, mode: str) -> str:
    if mode == "auto":
        return "closed_form" if has_closed_form(instance) else "monte_carlo"
    if mode not in ("monte_carlo", "closed_form"):
        raise ContractError(f"unknown mode {mode!r}")
    if mode == "closed_form" and not has_closed_form(instance):
        raise UnsupportedMapError(
            "closed-form mode needs gaussian_location_scale with squared_ridge"
        )
    return mode


# ---------------------------------------------------------------------------
# closed forms (Gaussian location map x squared-ridge loss)
# ---------------------------------------------------------------------------

def _cf_dpr(instance: Instance, t1: np.ndarray, t2: np.ndarray) -> float:
    m = instance.map
    mean = m.base_mean + m.shift @ t1
    diff = t2 - mean
    return float(diff @ diff + m.base_var.sum() + 0.5 * instance.loss.ridge * (t2 @ t2))


def _cf_grad1(instance: Instance, t: np.ndarray) -> np.ndarray:
    m = instance.map
    mean = m.base_mean + m.shift @ t
    return 2.0 * (t - mean) + instance.loss.ridge * t


def _cf_grad2(instance: Instance, t: np.ndarray) -> np.ndarray:
    m = instance.map
    mean = m.base_mean + m.shift @ t
    return 2.0 * m.shift.T @ (mean - t)


def cf_pr_values(instance: Instance, thetas: np.ndarray) -> np.ndarray:
    """Vectorized closed-form pr over a (k, d) stack of parameters."""
    m = instance.map
    means = m.base_mean[None, :] + thetas @ m.shift.T
    diff = thetas - means
    return (
        np.einsum("ij,ij->i", diff, diff)
        + m.base_var.sum()
        + 0.5 * instance.loss.ridge * np.einsum("ij,ij->i", thetas, thetas)
    )


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def dpr(
    instance: Instance,
    theta1,
    theta2,
    n: int = DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> RiskEstimate:
    """Expected loss of theta2 over the distribution induced by theta1."""
    t1 = instance.theta(theta1)
    t2 = instance.theta(theta2)
    mode = resolve_mode(instance, mode)
    if mode == "closed_form":
        return RiskEstimate(_cf_dpr(instance, t1, t2), 0.0, 0, "closed_form")
    if seed is None:
        raise ContractError("monte_carlo mode needs a seed")
    batch = distmaps.sample(instance.map, t1, n, seed)
    vals = losses.batch_values(instance.loss, batch.points, t2)
    se = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return RiskEstimate(float(vals.mean()), se, n, "monte_carlo")


def pr(
    instance: Instance,
    theta,
    n: int = DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> RiskEstimate:
    """Deployed risk: dpr(theta, theta)."""
    return dpr(instance, theta, theta, n=n, seed=seed, mode=mode)


def subopt_gap(
    instance: Instance,
    theta,
    theta_prime,
    n: int = DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> RiskEstimate:
    """dpr(theta, theta_prime) - pr(theta), on one shared batch in MC mode.

    Nonnegative (within noise) when theta minimizes the loss on its own
    distribution.
    """
    t = instance.theta(theta)
    tp = instance.theta(theta_prime)
    mode = resolve_mode(instance, mode)
    if mode == "closed_form":
        gap = _cf_dpr(instance, t, tp) - _cf_dpr(instance, t, t)
        return RiskEstimate(gap, 0.0, 0, "closed_form")
    if seed is None:
        raise ContractError("monte_carlo mode needs a seed")
    batch = distmaps.sample(instance.map, t, n, seed)
    diffs = losses.batch_values(instance.loss, batch.points, tp) - losses.batch_values(
        instance.loss, batch.points, t
    )
    se = float(diffs.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return RiskEstimate(float(diffs.mean()), se, n, "monte_carlo")


def performative_gradient(
    instance: Instance,
    theta,
    n: int = DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    with_se: bool = False,
) -> GradEstimate:
    """Full gradient of pr: loss term plus distribution (score) term.

    `with_se` additionally estimates the norm-level standard error of the
    total from per-sample quantities (costs one extra pass over the batch).
    """
    t = instance.theta(theta)
    mode = resolve_mode(instance, mode)
    if mode == "closed_form":
        g1 = _cf_grad1(instance, t)
        g2 = _cf_grad2(instance, t)
        return GradEstimate(g1, g2, g1 + g2, 0, "closed_form", "closed_form", 0.0)
    if seed is None:
        raise ContractError("monte_carlo mode needs a seed")
    batch = distmaps.sample(instance.map, t, n, seed)
    g1 = losses.batch_grad_theta_mean(instance.loss, batch.points, t)
    m = instance.map
    se = 0.0
    if m.has_density():
        method = "score"
        if with_se:
            vals = losses.batch_values(instance.loss, batch.points, t)
            scores = distmaps.batch_scores(m, batch.points, t)
            g2 = (scores * vals[:, None]).mean(axis=0)
            per_sample = losses.batch_grad_theta(instance.loss, batch.points, t)
            total_samples = per_sample + scores * vals[:, None]
            se = float(np.linalg.norm(total_samples.std(axis=0, ddof=1)) / np.sqrt(n))
        elif instance.loss.kind == "squared_ridge":
            from . import _kernels

            mean = m.base_mean + m.shift @ t
            g2 = _kernels.impl.sq_ridge_loss_score_mean(
                batch.points, t, instance.loss.ridge, mean, m.shift, 1.0 / m.base_var
            )
        else:
            vals = losses.batch_values(instance.loss, batch.points, t)
            scores = distmaps.batch_scores(m, batch.points, t)
            g2 = (scores * vals[:, None]).mean(axis=0)
    else:
        g2 = _fd_first_arg_grad(instance, t, n, seed.child(771))
        method = "fd_first_arg"
        if with_se:
            per_sample = losses.batch_grad_theta(instance.loss, batch.points, t)
            se = float(np.linalg.norm(per_sample.std(axis=0, ddof=1)) / np.sqrt(n))
    return GradEstimate(g1, g2, g1 + g2, n, "monte_carlo", method, se)


def _fd_first_arg_grad(instance: Instance, t, n, seed, step: float = FD_STEP_MC):
    """Central difference of dpr in its distribution slot, CRN across sides."""
    d = instance.dim
    out = np.zeros(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        hi = dpr(instance, t + e, t, n=n, seed=seed, mode="monte_carlo").value
        lo = dpr(instance, t - e, t, n=n, seed=seed, mode="monte_carlo").value
        out[i] = (hi - lo) / (2.0 * step)
    return out


def fd_grad_pr(
    instance: Instance,
    theta,
    n: int = DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    step: Optional[float] = None,
) -> np.ndarray:
    """Central finite difference of pr, CRN across evaluation points."""
    t = instance.theta(theta)
    mode = resolve_mode(instance, mode)
    h = step if step is not None else (FD_STEP_CF if mode == "closed_form" else FD_STEP_MC)
    out = np.zeros(instance.dim)
    for i in range(instance.dim):
        e = np.zeros(instance.dim)
        e[i] = h
        hi = pr(instance, t + e, n=n, seed=seed, mode=mode).value
        lo = pr(instance, t - e, n=n, seed=seed, mode=mode).value
        out[i] = (hi - lo) / (2.0 * h)
    return out


def pr_grid(
    instance: Instance,
    thetas: np.ndarray,
    n: int = DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> tuple:
    """pr over a (k, d) stack; one independent substream per cell in MC mode."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    mode = resolve_mode(instance, mode)
    if mode == "closed_form":
        return cf_pr_values(instance, thetas), np.zeros(thetas.shape[0])
    if seed is None:
        raise ContractError("monte_carlo mode needs a seed")
    values = np.empty(thetas.shape[0])
    ses = np.empty(thetas.shape[0])
    for i, t in enumerate(thetas):
        est = pr(instance, t, n=n, seed=seed.child(i), mode="monte_carlo")
        values[i] = est.value
        ses[i] = est.std_err
    return values, ses


def grad_pr(
    instance: Instance,
    theta,
    n: int = DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> np.ndarray:
    """Convenience: the total gradient vector of pr."""
    return performative_gradient(instance, theta, n=n, seed=seed, mode=mode).total


def theta_grad_dpr(
    instance: Instance,
    theta1,
    theta2,
    n: int = DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> np.ndarray:
    """Gradient of dpr(theta1, .) at theta2 (the loss slot)."""
    t1 = instance.theta(theta1)
    t2 = instance.theta(theta2)
    mode = resolve_mode(instance, mode)
    if mode == "closed_form":
        m = instance.map
        mean = m.base_mean + m.shift @ t1
        return 2.0 * (t2 - mean) + instance.loss.ridge * t2
    if seed is None:
        raise ContractError("monte_carlo mode needs a seed")
    batch = distmaps.sample(instance.map, t1, n, seed)
    return losses.batch_grad_theta_mean(instance.loss, batch.points, t2)
