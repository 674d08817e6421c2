"""Core model: parameter domain, instance container, seeding and numeric conventions.

The parameter set is an axis-aligned box (the simplest closed convex set
with an exact projection). Randomness follows one contract everywhere:
a root seed plus a hierarchical stream path, so any sub-computation can
derive an independent, reproducible stream, and grid cells can be
evaluated in any order (or in parallel) without changing results.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import ContractError

if TYPE_CHECKING:
    from .distmaps import DistMapSpec
    from .losses import LossSpec


def as_vector(x, dim: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Validate and convert to a finite float64 1-D array."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ContractError(f"{name} must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ContractError(f"{name} has length {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ContractError(f"{name} has non-finite entries")
    return v


@dataclass(frozen=True)
class SeedSpec:
    """Root seed plus hierarchical substream labels.

    Identical (root_seed, stream_path) pairs reproduce identical draws;
    distinct paths give statistically independent streams.
    """

    root_seed: int
    stream_path: tuple = ()

    def __post_init__(self):
        if not (0 <= int(self.root_seed) < 2**64):
            raise ContractError("root_seed must fit in 64 unsigned bits")
        object.__setattr__(self, "stream_path", tuple(int(k) for k in self.stream_path))

    def child(self, *labels: int) -> "SeedSpec":
        return SeedSpec(self.root_seed, self.stream_path + tuple(labels))

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.root_seed, spawn_key=self.stream_path)
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ParamBox:
    """Axis-aligned box: componentwise [lower, upper], nonempty."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, dim=lo.shape[0], name="upper")
        if np.any(lo > hi):
            raise ContractError("box is empty: lower > upper in some coordinate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, theta, atol: float = 1e-12) -> bool:
        t = as_vector(theta, dim=self.dim, name="theta")
        return bool(np.all(t >= self.lower - atol) and np.all(t <= self.upper + atol))

    def clip(self, theta) -> np.ndarray:
        t = as_vector(theta, dim=self.dim, name="theta")
        return np.minimum(np.maximum(t, self.lower), self.upper)

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def corners(self) -> np.ndarray:
        d = self.dim
        out = np.empty((2**d, d))
        for i in range(2**d):
            for j in range(d):
                out[i, j] = self.upper[j] if (i >> j) & 1 else self.lower[j]
        return out

    def axis_grid(self, step: float, axis: int) -> np.ndarray:
        lo, hi = self.lower[axis], self.upper[axis]
        if step <= 0:
            raise ContractError("grid step must be positive")
        count = int(round((hi - lo) / step)) + 1 if hi > lo else 1
        pts = lo + step * np.arange(count)
        return np.minimum(pts, hi)

    def grid(self, step: float) -> np.ndarray:
        """Full product grid, rows in lexicographic (axis-0 outer) order. d <= 2."""
        if self.dim == 1:
            return self.axis_grid(step, 0)[:, None]
        if self.dim == 2:
            g0 = self.axis_grid(step, 0)
            g1 = self.axis_grid(step, 1)
            a, b = np.meshgrid(g0, g1, indexing="ij")
            return np.column_stack([a.ravel(), b.ravel()])
        raise ContractError("full grids are supported for d <= 2 only")

    def uniform(self, n: int, seed: SeedSpec) -> np.ndarray:
        rng = seed.rng()
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


def project(theta, box: ParamBox) -> np.ndarray:
    """Componentwise clamp into the box. Idempotent and nonexpansive."""
    return box.clip(theta)


_CONSTANT_FIELDS = (
    "beta",
    "gamma_sc",
    "lip_L",
    "eps",
    "mu_wsc",
    "mu_rsi",
    "gamma_qg",
    "shift_bound_B",
)


@dataclass(frozen=True)
class ConstantSet:
    """Optionally declared regularity constants; absent means 'estimate me'.

    beta: smoothness of the loss gradient in z.
    gamma_sc: strong convexity of the loss in theta.
    lip_L: value-Lipschitz constant of the loss in z (the one W1 bounds use).
    eps: sensitivity of the distribution map in Wasserstein-1.
    mu_wsc / mu_rsi: weak-strong-convexity / restricted-secant constants.
    gamma_qg: quadratic-growth constant of the suboptimality gap.
    shift_bound_B: absolute cap on pairwise distribution shift.
    """

    beta: Optional[float] = None
    gamma_sc: Optional[float] = None
    lip_L: Optional[float] = None
    eps: Optional[float] = None
    mu_wsc: Optional[float] = None
    mu_rsi: Optional[float] = None
    gamma_qg: Optional[float] = None
    shift_bound_B: Optional[float] = None

    def __post_init__(self):
        for name in _CONSTANT_FIELDS:
            v = getattr(self, name)
            if v is None:
                continue
            v = float(v)
            if not np.isfinite(v) or v < 0:
                raise ContractError(f"constant {name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)

    def is_empty(self) -> bool:
        return all(getattr(self, name) is None for name in _CONSTANT_FIELDS)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in _CONSTANT_FIELDS if getattr(self, k) is not None}

    def with_values(self, **kwargs) -> "ConstantSet":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Instance:
    """One complete performative problem: loss, distribution map, domain, constants."""

    dim: int
    domain: ParamBox
    loss: "LossSpec"
    map: "DistMapSpec"
    declared: ConstantSet = field(default_factory=ConstantSet)
    name: str = "instance"
    applied_defaults: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ContractError("dim must be >= 1")
        if self.domain.dim != self.dim:
            raise ContractError(
                f"domain dimension {self.domain.dim} != instance dim {self.dim}"
            )
        self.map.validate()
        self.loss.check_dims(self.dim, self.map.data_dim)

    def theta(self, x) -> np.ndarray:
        return as_vector(x, dim=self.dim, name="theta")
