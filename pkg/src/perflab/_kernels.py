"""Hot numeric kernels, JIT-compiled with numba when available.

Every kernel exists twice with an identical signature: a pure-numpy
implementation (the fallback and the reference) and a numba ``@njit``
loop implementation that fuses the per-sample work and avoids the large
(n, d) temporaries. The active backend is chosen once at import time:

* numba, when importable -- the default;
* numpy, when numba is missing or ``PERFLAB_DISABLE_NUMBA=1`` is set.

Callers go through ``impl.<kernel>``. Tests and the benchmark script use
``get_impls(name)`` to drive both backends side by side. The two backends
agree to float rounding (different summation order), not bit-for-bit.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_TRUTHY = {"1", "true", "yes", "on"}


def _numba_requested() -> bool:
    return os.environ.get("PERFLAB_DISABLE_NUMBA", "").strip().lower() not in _TRUTHY


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested() and _numba_available()


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _sq_ridge_values_np(points, theta, lam):
    # l(z; t) = ||t - z||^2 + (lam/2) ||t||^2
    diff = theta[None, :] - points
    return np.einsum("ij,ij->i", diff, diff) + 0.5 * lam * float(theta @ theta)


def _sq_ridge_grad_theta_mean_np(points, theta, lam):
    # grad_t l = 2 (t - z) + lam t, averaged over the batch
    return 2.0 * (theta - points.mean(axis=0)) + lam * theta


def _sq_ridge_loss_score_mean_np(points, theta, lam, mean, shift, inv_var):
    # mean over the batch of l(z; t) * A^T Sigma^{-1} (z - mean)
    vals = _sq_ridge_values_np(points, theta, lam)
    resid = (points - mean[None, :]) * inv_var[None, :]
    return shift.T @ (resid.T @ vals) / points.shape[0]


def _logistic_values_np(points, theta, lam):
    # z = (x, y), label last column; l = log(1 + exp(-y x.t)) + (lam/2)||t||^2
    margins = points[:, :-1] @ theta * points[:, -1]
    return np.logaddexp(0.0, -margins) + 0.5 * lam * float(theta @ theta)


def _logistic_grad_theta_mean_np(points, theta, lam):
    x, y = points[:, :-1], points[:, -1]
    s = _sigmoid_np(-(x @ theta) * y)
    return -(x.T @ (s * y)) / points.shape[0] + lam * theta


def _sigmoid_np(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _gaussian_scores_np(points, mean, shift, inv_var):
    # grad_t log p_t(z) = A^T Sigma^{-1} (z - mean) per sample
    return ((points - mean[None, :]) * inv_var[None, :]) @ shift


def _sorted_abs_mean_np(a_sorted, b_sorted):
    return float(np.mean(np.abs(a_sorted - b_sorted)))


def _pairwise_dist_np(xa, xb):
    d2 = (
        np.einsum("ij,ij->i", xa, xa)[:, None]
        + np.einsum("ij,ij->i", xb, xb)[None, :]
        - 2.0 * (xa @ xb.T)
    )
    return np.sqrt(np.maximum(d2, 0.0))


_NUMPY_IMPLS = SimpleNamespace(
    name="numpy",
    sq_ridge_values=_sq_ridge_values_np,
    sq_ridge_grad_theta_mean=_sq_ridge_grad_theta_mean_np,
    sq_ridge_loss_score_mean=_sq_ridge_loss_score_mean_np,
    logistic_values=_logistic_values_np,
    logistic_grad_theta_mean=_logistic_grad_theta_mean_np,
    gaussian_scores=_gaussian_scores_np,
    sorted_abs_mean=_sorted_abs_mean_np,
    pairwise_dist=_pairwise_dist_np,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def _sq_ridge_values_nb(points, theta, lam):
        n, m = points.shape
        reg = 0.0
        for j in range(m):
            reg += theta[j] * theta[j]
        reg *= 0.5 * lam
        out = np.empty(n)
        for i in range(n):
            s = 0.0
            for j in range(m):
                d = theta[j] - points[i, j]
                s += d * d
            out[i] = s + reg
        return out

    @njit(cache=True)
    def _sq_ridge_grad_theta_mean_nb(points, theta, lam):
        n, m = points.shape
        out = np.zeros(m)
        for i in range(n):
            for j in range(m):
                out[j] += points[i, j]
        for j in range(m):
            out[j] = 2.0 * (theta[j] - out[j] / n) + lam * theta[j]
        return out

    @njit(cache=True)
    def _sq_ridge_loss_score_mean_nb(points, theta, lam, mean, shift, inv_var):
        n, m = points.shape
        d = shift.shape[1]
        reg = 0.0
        for j in range(m):
            reg += theta[j] * theta[j]
        reg *= 0.5 * lam
        acc = np.zeros(m)
        for i in range(n):
            val = reg
            for j in range(m):
                diff = theta[j] - points[i, j]
                val += diff * diff
            for j in range(m):
                acc[j] += val * (points[i, j] - mean[j]) * inv_var[j]
        out = np.zeros(d)
        for k in range(d):
            for j in range(m):
                out[k] += shift[j, k] * acc[j]
            out[k] /= n
        return out

    @njit(cache=True)
    def _logistic_values_nb(points, theta, lam):
        n, m = points.shape
        reg = 0.0
        for j in range(m - 1):
            reg += theta[j] * theta[j]
        reg *= 0.5 * lam
        out = np.empty(n)
        for i in range(n):
            t = 0.0
            for j in range(m - 1):
                t += points[i, j] * theta[j]
            t *= -points[i, m - 1]
            if t > 0.0:
                out[i] = t + np.log1p(np.exp(-t)) + reg
            else:
                out[i] = np.log1p(np.exp(t)) + reg
        return out

    @njit(cache=True)
    def _logistic_grad_theta_mean_nb(points, theta, lam):
        n, m = points.shape
        d = m - 1
        out = np.zeros(d)
        for i in range(n):
            t = 0.0
            for j in range(d):
                t += points[i, j] * theta[j]
            t *= -points[i, m - 1]
            if t >= 0.0:
                s = 1.0 / (1.0 + np.exp(-t))
            else:
                e = np.exp(t)
                s = e / (1.0 + e)
            w = -s * points[i, m - 1]
            for j in range(d):
                out[j] += w * points[i, j]
        for j in range(d):
            out[j] = out[j] / n + lam * theta[j]
        return out

    @njit(cache=True)
    def _gaussian_scores_nb(points, mean, shift, inv_var):
        n, m = points.shape
        d = shift.shape[1]
        out = np.zeros((n, d))
        for i in range(n):
            for k in range(d):
                s = 0.0
                for j in range(m):
                    s += (points[i, j] - mean[j]) * inv_var[j] * shift[j, k]
                out[i, k] = s
        return out

    @njit(cache=True)
    def _sorted_abs_mean_nb(a_sorted, b_sorted):
        n = a_sorted.shape[0]
        s = 0.0
        for i in range(n):
            s += abs(a_sorted[i] - b_sorted[i])
        return s / n

    @njit(cache=True)
    def _pairwise_dist_nb(xa, xb):
        na, m = xa.shape
        nb = xb.shape[0]
        out = np.empty((na, nb))
        for i in range(na):
            for j in range(nb):
                s = 0.0
                for k in range(m):
                    d = xa[i, k] - xb[j, k]
                    s += d * d
                out[i, j] = np.sqrt(s)
        return out

    _NUMBA_IMPLS = SimpleNamespace(
        name="numba",
        sq_ridge_values=_sq_ridge_values_nb,
        sq_ridge_grad_theta_mean=_sq_ridge_grad_theta_mean_nb,
        sq_ridge_loss_score_mean=_sq_ridge_loss_score_mean_nb,
        logistic_values=_logistic_values_nb,
        logistic_grad_theta_mean=_logistic_grad_theta_mean_nb,
        gaussian_scores=_gaussian_scores_nb,
        sorted_abs_mean=_sorted_abs_mean_nb,
        pairwise_dist=_pairwise_dist_nb,
    )
else:
    _NUMBA_IMPLS = None


BACKEND = "numba" if NUMBA_ENABLED else "numpy"
impl = _NUMBA_IMPLS if NUMBA_ENABLED else _NUMPY_IMPLS

_KERNEL_NAMES = (
    "sq_ridge_values",
    "sq_ridge_grad_theta_mean",
    "sq_ridge_loss_score_mean",
    "logistic_values",
    "logistic_grad_theta_mean",
    "gaussian_scores",
    "sorted_abs_mean",
    "pairwise_dist",
)


def kernel_names() -> tuple:
    return _KERNEL_NAMES


def get_impls(name: str) -> SimpleNamespace:
    """Return a specific backend, independent of the active one."""
    if name == "numpy":
        return _NUMPY_IMPLS
    if name == "numba":
        if _NUMBA_IMPLS is None:
            raise RuntimeError("numba backend unavailable (not installed or disabled)")
        return _NUMBA_IMPLS
    raise ValueError(f"unknown backend {name!r}")


def warmup() -> str:
    """Trigger JIT compilation of every kernel on tiny inputs; returns the backend."""
    pts = np.array([[0.5, 1.0], [1.5, -1.0]])
    th = np.array([0.25, 0.5])
    impl.sq_ridge_values(pts, th, 1.0)
    impl.sq_ridge_grad_theta_mean(pts, th, 1.0)
    impl.sq_ridge_loss_score_mean(
        pts, th, 1.0, np.zeros(2), np.eye(2), np.ones(2)
    )
    impl.logistic_values(pts, th[:1], 1.0)
    impl.logistic_grad_theta_mean(pts, th[:1], 1.0)
    impl.gaussian_scores(pts, np.zeros(2), np.eye(2), np.ones(2))
    impl.sorted_abs_mean(np.array([0.0, 1.0]), np.array([0.5, 1.5]))
    impl.pairwise_dist(pts, pts)
    return BACKEND
