"""Parameter-dependent distribution maps D(theta): sampling, scores, closed forms.

Two families:

* gaussian_location_scale -- z = base_mean + shift @ theta + sqrt(base_var) * w
  with w standard normal. Diagonal covariance keeps the log-density score and
  the Wasserstein facts closed-form.
* strategic_response -- a Gaussian-mixture population whose members game a
  linear score with quadratic moving costs: each agent shifts its feature
  block by theta / (2 * cost). No tractable density, so score() refuses it.

Sampling contract (common random numbers): the base draw depends on the seed
and n only, never on theta. Re-sampling at a different theta under the same
seed moves every point deterministically, which makes risk differences and
finite-difference gradients low-variance and makes the empirical transport
ratio exact for location families.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import ndtri

from . import _kernels
from .core import ParamBox, SeedSpec, as_vector
from .errors import ContractError, UnsupportedMapError


@dataclass(frozen=True)
class GaussianLocationScale:
    data_dim: int
    base_mean: np.ndarray  # (m,)
    shift: np.ndarray      # (m, d): performative displacement per unit theta
    base_var: np.ndarray   # (m,) diagonal, > 0

    kind = "gaussian_location_scale"

    def __post_init__(self):
        m = int(self.data_dim)
        mean = as_vector(self.base_mean, dim=m, name="base_mean")
        var = as_vector(self.base_var, dim=m, name="base_var")
        if np.any(var <= 0):
            raise ContractError("base_var must be strictly positive")
        shift = np.atleast_2d(np.asarray(self.shift, dtype=float))
        if shift.shape[0] != m:
            raise ContractError(f"shift must have {m} rows, got {shift.shape[0]}")
        if not np.all(np.isfinite(shift)):
            raise ContractError("shift has non-finite entries")
        for arr in (mean, var, shift):
            arr.setflags(write=False)
        object.__setattr__(self, "data_dim", m)
        object.__setattr__(self, "base_mean", mean)
        object.__setattr__(self, "base_var", var)
        object.__setattr__(self, "shift", shift)

    @property
    def param_dim(self) -> int:
        return self.shift.shape[1]

    def validate(self) -> None:
        pass  # construction already validated

    def has_density(self) -> bool:
        return True


@dataclass(frozen=True)
class StrategicResponse:
    data_dim: int
    cost: float
    base_means: np.ndarray    # (k, m) mixture component means
    base_var: np.ndarray      # (m,) shared diagonal, >= 0 (0 allowed for a label column)
    weights: np.ndarray       # (k,) mixture weights
    label_col: Optional[int] = None

    kind = "strategic_response"

    def __post_init__(self):
        m = int(self.data_dim)
        if not np.isfinite(self.cost) or self.cost <= 0:
            raise ContractError("cost must be finite and > 0")
        means = np.atleast_2d(np.asarray(self.base_means, dtype=float))
        if means.shape[1] != m:
            raise ContractError(f"base_means must have {m} columns")
        var = as_vector(self.base_var, dim=m, name="base_var")
        if np.any(var < 0):
            raise ContractError("base_var must be >= 0")
        w = as_vector(self.weights, dim=means.shape[0], name="weights")
        if np.any(w < 0) or not np.isclose(w.sum(), 1.0):
            raise ContractError("weights must be nonnegative and sum to 1")
        if self.label_col is not None and self.label_col != m - 1:
            raise ContractError("label_col, when present, must be the last column")
        for arr in (means, var, w):
            arr.setflags(write=False)
        object.__setattr__(self, "data_dim", m)
        object.__setattr__(self, "cost", float(self.cost))
        object.__setattr__(self, "base_means", means)
        object.__setattr__(self, "base_var", var)
        object.__setattr__(self, "weights", w)

    @property
    def param_dim(self) -> int:
        return self.data_dim if self.label_col is None else self.data_dim - 1

    def feature_cols(self) -> slice:
        return slice(0, self.param_dim)

    def validate(self) -> None:
        pass

    def has_density(self) -> bool:
        return False


DistMapSpec = Union[GaussianLocationScale, StrategicResponse]


@dataclass(frozen=True)
class SampleBatch:
    """n draws from D(theta) with the lineage needed to redraw them exactly."""

    points: np.ndarray  # (n, m)
    theta_used: np.ndarray
    seed: SeedSpec

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ContractError("points must be a nonempty (n, m) matrix")
        if not np.all(np.isfinite(self.points)):
            raise ContractError("sample batch has non-finite entries")
        self.points.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def data_dim(self) -> int:
        return self.points.shape[1]


def _base_draw(map_spec: DistMapSpec, n: int, seed: SeedSpec) -> np.ndarray:
    """Theta-independent base noise; the only consumer of the RNG."""
    rng = seed.rng()
    if map_spec.kind == "gaussian_location_scale":
        return rng.standard_normal((n, map_spec.data_dim))
    comp = rng.choice(map_spec.base_means.shape[0], size=n, p=map_spec.weights)
    noise = rng.standard_normal((n, map_spec.data_dim))
    return map_spec.base_means[comp] + noise * np.sqrt(map_spec.base_var)[None, :]


def sample(map_spec: DistMapSpec, theta, n: int, seed: SeedSpec) -> SampleBatch:
    """Draw n points from D(theta) under the common-random-numbers contract."""
    if n < 1:
        raise ContractError("n must be >= 1")
    theta = as_vector(theta, dim=map_spec.param_dim, name="theta")
    base = _base_draw(map_spec, n, seed)
    if map_spec.kind == "gaussian_location_scale":
        mean = map_spec.base_mean + map_spec.shift @ theta
        pts = mean[None, :] + base * np.sqrt(map_spec.base_var)[None, :]
    else:
        pts = base.copy()
        cols = map_spec.feature_cols()
        pts[:, cols] = pts[:, cols] + (theta / (2.0 * map_spec.cost))[None, :]
    return SampleBatch(points=pts, theta_used=theta, seed=seed)


def score(map_spec: DistMapSpec, z, theta) -> np.ndarray:
    """Gradient of log p_theta(z) in theta; needs a density."""
    z = as_vector(z, name="z")
    return batch_scores(map_spec, z[None, :], theta)[0]


def batch_scores(map_spec: DistMapSpec, points: np.ndarray, theta) -> np.ndarray:
    if map_spec.kind != "gaussian_location_scale":
        raise UnsupportedMapError(
            f"map kind {map_spec.kind!r} has no tractable density; "
            "score-based estimators must fall back to finite differences"
        )
    theta = as_vector(theta, dim=map_spec.param_dim, name="theta")
    mean = map_spec.base_mean + map_spec.shift @ theta
    return _kernels.impl.gaussian_scores(
        points, mean, map_spec.shift, 1.0 / map_spec.base_var
    )


def closed_form_mean_cov(map_spec: DistMapSpec, theta) -> tuple:
    """Exact (mean, diagonal covariance) of D(theta) for the Gaussian family."""
    if map_spec.kind != "gaussian_location_scale":
        raise UnsupportedMapError(
            f"no closed-form moments for map kind {map_spec.kind!r}"
        )
    theta = as_vector(theta, dim=map_spec.param_dim, name="theta")
    return map_spec.base_mean + map_spec.shift @ theta, map_spec.base_var.copy()


def analytic_sensitivity(map_spec: DistMapSpec) -> float:
    """Exact Wasserstein-1 Lipschitz constant of theta -> D(theta).

    Both families move points affinely in theta with a theta-independent
    base, so the translation coupling is optimal and the constant is the
    spectral norm of the displacement-per-unit-theta matrix.
    """
    if map_spec.kind == "gaussian_location_scale":
        return float(np.linalg.norm(map_spec.shift, 2))
    return 1.0 / (2.0 * map_spec.cost)


_COVERAGE_DEFAULT = 0.999


def data_region(
    map_spec: DistMapSpec,
    box: ParamBox,
    coverage: float = _COVERAGE_DEFAULT,
    n: int = 4096,
    seed: Optional[SeedSpec] = None,
) -> ParamBox:
    """Box containing the central `coverage` mass of D(theta) across theta in box.

    Gaussian family: exact from per-coordinate extreme means over the box
    corners plus two-sided normal quantiles. Other maps: empirical quantiles
    of pooled samples drawn at the box corners and center.
    """
    if not (0 < coverage < 1):
        raise ContractError("coverage must be in (0, 1)")
    if map_spec.kind == "gaussian_location_scale":
        corners = box.corners()
        means = map_spec.base_mean[None, :] + corners @ map_spec.shift.T
        zq = float(ndtri(0.5 + coverage / 2.0))
        sd = np.sqrt(map_spec.base_var)
        return ParamBox(means.min(axis=0) - zq * sd, means.max(axis=0) + zq * sd)
    seed = seed if seed is not None else SeedSpec(0, (9090,))
    thetas = np.vstack([box.corners(), box.center()[None, :]])
    pooled = np.vstack(
        [sample(map_spec, t, n, seed.child(i)).points for i, t in enumerate(thetas)]
    )
    lo = np.quantile(pooled, (1 - coverage) / 2.0, axis=0)
    hi = np.quantile(pooled, 0.5 + coverage / 2.0, axis=0)
    return ParamBox(lo, hi)
