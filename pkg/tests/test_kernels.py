"""Backend agreement: every numba kernel matches its numpy reference."""

import numpy as np
import pytest

from perflab import _kernels

RNG = np.random.default_rng(99)
POINTS = RNG.normal(size=(500, 3))
THETA3 = np.array([0.4, -0.2, 1.1])
THETA2 = np.array([0.4, -0.2])
MEAN = np.array([0.1, 0.0, -0.3])
SHIFT = RNG.normal(size=(3, 3))
INV_VAR = np.array([1.0, 0.5, 2.0])

pytestmark = pytest.mark.skipif(
    not _kernels.NUMBA_ENABLED, reason="numba backend disabled or unavailable"
)


def pair():
    return _kernels.get_impls("numpy"), _kernels.get_impls("numba")


def test_sq_ridge_values_agree():
    np_impl, nb_impl = pair()
    a = np_impl.sq_ridge_values(POINTS, THETA3, 0.7)
    b = nb_impl.sq_ridge_values(POINTS, THETA3, 0.7)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_sq_ridge_grad_theta_mean_agree():
    np_impl, nb_impl = pair()
    a = np_impl.sq_ridge_grad_theta_mean(POINTS, THETA3, 0.7)
    b = nb_impl.sq_ridge_grad_theta_mean(POINTS, THETA3, 0.7)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_sq_ridge_loss_score_mean_agree():
    np_impl, nb_impl = pair()
    a = np_impl.sq_ridge_loss_score_mean(POINTS, THETA3, 0.7, MEAN, SHIFT, INV_VAR)
    b = nb_impl.sq_ridge_loss_score_mean(POINTS, THETA3, 0.7, MEAN, SHIFT, INV_VAR)
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_logistic_values_agree():
    np_impl, nb_impl = pair()
    pts = POINTS.copy()
    pts[:, -1] = np.sign(pts[:, -1]) + (pts[:, -1] == 0)
    a = np_impl.logistic_values(pts, THETA2, 0.3)
    b = nb_impl.logistic_values(pts, THETA2, 0.3)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_logistic_grad_theta_mean_agree():
    np_impl, nb_impl = pair()
    pts = POINTS.copy()
    pts[:, -1] = np.sign(pts[:, -1]) + (pts[:, -1] == 0)
    a = np_impl.logistic_grad_theta_mean(pts, THETA2, 0.3)
    b = nb_impl.logistic_grad_theta_mean(pts, THETA2, 0.3)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_gaussian_scores_agree():
    np_impl, nb_impl = pair()
    a = np_impl.gaussian_scores(POINTS, MEAN, SHIFT, INV_VAR)
    b = nb_impl.gaussian_scores(POINTS, MEAN, SHIFT, INV_VAR)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_sorted_abs_mean_agree():
    np_impl, nb_impl = pair()
    x = np.sort(RNG.normal(size=1000))
    y = np.sort(RNG.normal(size=1000))
    assert np_impl.sorted_abs_mean(x, y) == pytest.approx(
        nb_impl.sorted_abs_mean(x, y), rel=1e-12
    )


def test_pairwise_dist_agree():
    np_impl, nb_impl = pair()
    xa, xb = POINTS[:40], POINTS[40:110]
    np.testing.assert_allclose(
        np_impl.pairwise_dist(xa, xb), nb_impl.pairwise_dist(xa, xb), rtol=1e-10
    )


def test_backend_flag_reflects_env(monkeypatch):
    import importlib
    import os
    import subprocess
    import sys

    env = dict(os.environ, PERFLAB_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import perflab._kernels as k; print(k.BACKEND)"],
        capture_output=True, text=True, env=env,
    )
    assert out.stdout.strip() == "numpy"
