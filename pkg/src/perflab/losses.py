"""Loss functions with exact gradients in theta and in z, plus analytic constants.

Two families:

* squared_ridge  --  l(z; t) = ||t - z||^2 + (ridge/2) ||t||^2, data dim == d.
* logistic_ridge --  z = (x, y) with the label y in {-1, +1} stored in the
  last column; l = log(1 + exp(-y <x, t>)) + (ridge/2) ||t||^2.

Assumption-bookkeeping note: the smoothness constant beta bounds the change
of grad_theta l when z moves, and there are two distinct Lipschitz readings
for the z-dependence: a value-Lipschitz constant (sup of ||grad_z l|| over a
region, the one a Wasserstein-1 argument needs) and a gradient-Lipschitz
constant. `analytic_constants` reports both and downstream bound machinery
consumes the value form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels
from .core import ParamBox, as_vector
from .errors import ContractError


@dataclass(frozen=True)
class SquaredRidge:
    ridge: float = 0.0

    kind = "squared_ridge"

    def __post_init__(self):
        if not np.isfinite(self.ridge) or self.ridge < 0:
            raise ContractError("ridge must be finite and >= 0")
        object.__setattr__(self, "ridge", float(self.ridge))

    def check_dims(self, dim: int, data_dim: int) -> None:
        if data_dim != dim:
            raise ContractError(
                f"squared_ridge needs data_dim == dim, got {data_dim} != {dim}"
            )

    def feature_slice(self, data_dim: int) -> slice:
        return slice(0, data_dim)


@dataclass(frozen=True)
class LogisticRidge:
    ridge: float = 0.0

    kind = "logistic_ridge"

    def __post_init__(self):
        if not np.isfinite(self.ridge) or self.ridge < 0:
            raise ContractError("ridge must be finite and >= 0")
        object.__setattr__(self, "ridge", float(self.ridge))

    def check_dims(self, dim: int, data_dim: int) -> None:
        if data_dim != dim + 1:
            raise ContractError(
                f"logistic_ridge needs data_dim == dim + 1 (features + label), "
                f"got data_dim={data_dim}, dim={dim}"
            )

    def feature_slice(self, data_dim: int) -> slice:
        return slice(0, data_dim - 1)


LossSpec = Union[SquaredRidge, LogisticRidge]


def _as_batch(z) -> np.ndarray:
    pts = np.asarray(z, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise ContractError(f"data must be a point or an (n, m) batch, got shape {pts.shape}")
    return pts


def loss_value(spec: LossSpec, z, theta) -> float:
    return float(batch_values(spec, _as_batch(z), theta)[0])


def batch_values(spec: LossSpec, points: np.ndarray, theta) -> np.ndarray:
    theta = as_vector(theta, name="theta")
    if spec.kind == "squared_ridge":
        if points.shape[1] != theta.shape[0]:
            raise ContractError("data and theta dimensions disagree")
        return _kernels.impl.sq_ridge_values(points, theta, spec.ridge)
    if points.shape[1] != theta.shape[0] + 1:
        raise ContractError("logistic data must be (features..., label)")
    return _kernels.impl.logistic_values(points, theta, spec.ridge)


def grad_theta(spec: LossSpec, z, theta) -> np.ndarray:
    """Exact gradient in theta at a single data point."""
    theta = as_vector(theta, name="theta")
    z = as_vector(z, name="z")
    if spec.kind == "squared_ridge":
        if z.shape[0] != theta.shape[0]:
            raise ContractError("data and theta dimensions disagree")
        return 2.0 * (theta - z) + spec.ridge * theta
    x, y = z[:-1], z[-1]
    s = _sigmoid(-y * float(x @ theta))
    return -s * y * x + spec.ridge * theta


def batch_grad_theta_mean(spec: LossSpec, points: np.ndarray, theta) -> np.ndarray:
    theta = as_vector(theta, name="theta")
    if spec.kind == "squared_ridge":
        return _kernels.impl.sq_ridge_grad_theta_mean(points, theta, spec.ridge)
    return _kernels.impl.logistic_grad_theta_mean(points, theta, spec.ridge)


def batch_grad_theta(spec: LossSpec, points: np.ndarray, theta) -> np.ndarray:
    """Per-sample gradients in theta, shape (n, d). Used where variances matter."""
    theta = as_vector(theta, name="theta")
    if spec.kind == "squared_ridge":
        return 2.0 * (theta[None, :] - points) + spec.ridge * theta[None, :]
    x, y = points[:, :-1], points[:, -1]
    s = _sigmoid(-(x @ theta) * y)
    return -(s * y)[:, None] * x + spec.ridge * theta[None, :]


def grad_z(spec: LossSpec, z, theta) -> np.ndarray:
    """Exact gradient in z at a single data point.

    For logistic_ridge the label coordinate is discrete; its slot is zero.
    """
    theta = as_vector(theta, name="theta")
    z = as_vector(z, name="z")
    if spec.kind == "squared_ridge":
        return -2.0 * (theta - z)
    x, y = z[:-1], z[-1]
    s = _sigmoid(-y * float(x @ theta))
    out = np.zeros_like(z)
    out[:-1] = -s * y * theta
    return out


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


@dataclass(frozen=True)
class LossConstants:
    """Analytic regularity constants over a stated (theta box) x (data box) region."""

    beta: float
    gamma_sc: float
    lip_value: float
    lip_grad: float
    theta_box: ParamBox
    data_box: ParamBox

    def region_note(self) -> str:
        return (
            f"theta in [{self.theta_box.lower.tolist()}, {self.theta_box.upper.tolist()}], "
            f"z in [{self.data_box.lower.tolist()}, {self.data_box.upper.tolist()}]"
        )


def _sup_box_distance(a: ParamBox, b: ParamBox) -> float:
    # sup over the product box of ||u - v||_2, attained coordinatewise at corners
    per = np.maximum(np.abs(a.lower - b.upper), np.abs(a.upper - b.lower))
    return float(np.linalg.norm(per))


def analytic_constants(spec: LossSpec, theta_box: ParamBox, data_box: ParamBox) -> LossConstants:
    """Closed-form constants for the supported losses over a bounded region.

    squared_ridge: beta = 2 and lip_grad = 2 globally; gamma_sc = 2 + ridge;
    lip_value = 2 sup ||t - z|| over the region.

    logistic_ridge: gamma_sc = ridge (the logistic term is convex but not
    strongly so); the remaining values are conservative region bounds.
    """
    if spec.kind == "squared_ridge":
        if data_box.dim != theta_box.dim:
            raise ContractError("squared_ridge region needs matching dimensions")
        sup_dist = _sup_box_distance(theta_box, data_box)
        return LossConstants(
            beta=2.0,
            gamma_sc=2.0 + spec.ridge,
            lip_value=2.0 * sup_dist,
            lip_grad=2.0,
            theta_box=theta_box,
            data_box=data_box,
        )
    if spec.kind == "logistic_ridge":
        r_theta = float(
            np.sqrt(np.sum(np.maximum(theta_box.lower**2, theta_box.upper**2)))
        )
        feat = spec.feature_slice(data_box.dim)
        r_x = float(
            np.sqrt(
                np.sum(np.maximum(data_box.lower[feat] ** 2, data_box.upper[feat] ** 2))
            )
        )
        return LossConstants(
            beta=max(0.25 * r_x * r_theta + 1.0, r_x),
            gamma_sc=spec.ridge,
            lip_value=r_theta,
            lip_grad=0.25 * r_theta * r_theta,
            theta_box=theta_box,
            data_box=data_box,
        )
    raise ContractError(f"no analytic constants for loss kind {spec.kind!r}")
