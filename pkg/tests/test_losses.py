import numpy as np
import pytest

from perflab import SquaredRidge, LogisticRidge, grad_theta, grad_z, loss_value
from perflab.core import ParamBox
from perflab.losses import analytic_constants, batch_grad_theta, batch_values

SQ1 = SquaredRidge(ridge=1.0)
SQ0 = SquaredRidge(ridge=0.0)


def test_values():
    assert loss_value(SQ1, [1.0], [0.0]) == pytest.approx(1.0)
    assert loss_value(SQ1, [0.0], [0.0]) == pytest.approx(0.0)
    assert loss_value(SQ1, [1.5], [1.0]) == pytest.approx(0.75)


def test_grad_theta_values():
    # stationarity of the inner argmin: 2(t - z) + t = 0 at t=1, z=1.5
    assert grad_theta(SQ1, [1.5], [1.0]) == pytest.approx([0.0])
    assert grad_theta(SQ0, [0.7], [0.7]) == pytest.approx([0.0])
    assert grad_theta(SQ1, [1.0], [0.0]) == pytest.approx([-2.0])


def test_grad_z_values():
    assert grad_z(SQ0, [1.0], [0.0]) == pytest.approx([2.0])
    assert grad_z(SQ0, [0.7], [0.7]) == pytest.approx([0.0])
    assert grad_z(SQ0, [0.0], [1.0]) == pytest.approx([-2.0])


def _central_diff(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


@pytest.mark.parametrize("spec,data_dim,dim", [
    (SQ1, 2, 2),
    (SquaredRidge(ridge=0.3), 2, 2),
    (LogisticRidge(ridge=0.5), 3, 2),
])
def test_gradients_match_finite_differences(spec, data_dim, dim):
    rng = np.random.default_rng(4)
    for _ in range(1000):
        z = rng.normal(size=data_dim)
        if spec.kind == "logistic_ridge":
            z[-1] = 1.0 if z[-1] >= 0 else -1.0
        t = rng.normal(size=dim)
        g = grad_theta(spec, z, t)
        fd = _central_diff(lambda x: loss_value(spec, z, x), t)
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-7)
        gz = grad_z(spec, z, t)
        if spec.kind == "logistic_ridge":
            feat = z.copy()
            fdz = _central_diff(
                lambda x: loss_value(spec, np.append(x, z[-1]), t), z[:-1]
            )
            assert np.allclose(gz[:-1], fdz, rtol=1e-6, atol=1e-7)
        else:
            fdz = _central_diff(lambda x: loss_value(spec, x, t), z)
            assert np.allclose(gz, fdz, rtol=1e-6, atol=1e-7)


def test_strong_convexity_witness():
    # gap(t, t') - (gamma/2)||t - t'||^2 with gamma = 2 + ridge is exactly zero
    rng = np.random.default_rng(5)
    gamma = 2.0 + SQ1.ridge
    for _ in range(200):
        z, t1, t2 = rng.normal(size=3)
        gap = (
            loss_value(SQ1, [z], [t2])
            - loss_value(SQ1, [z], [t1])
            - grad_theta(SQ1, [z], [t1])[0] * (t2 - t1)
        )
        assert gap - 0.5 * gamma * (t2 - t1) ** 2 >= -1e-12


def test_smoothness_witness_exact():
    # grad_theta moves exactly 2x as fast as z for the squared loss
    rng = np.random.default_rng(6)
    for _ in range(200):
        z1, z2 = rng.normal(size=(2, 2))
        t = rng.normal(size=2)
        lhs = np.linalg.norm(grad_theta(SQ1, z1, t) - grad_theta(SQ1, z2, t))
        assert lhs == pytest.approx(2.0 * np.linalg.norm(z1 - z2), rel=1e-12)


def test_analytic_constants_squared():
    consts = analytic_constants(SQ1, ParamBox([-3.0], [3.0]), ParamBox([-5.0], [5.0]))
    assert consts.beta == 2.0
    assert consts.gamma_sc == 3.0
    assert consts.lip_grad == 2.0
    assert consts.lip_value == pytest.approx(16.0)  # 2 * sup|t - z| = 2 * 8


def test_analytic_constants_ridge_free():
    consts = analytic_constants(SQ0, ParamBox([-1.0], [1.0]), ParamBox([-1.0], [1.0]))
    assert consts.gamma_sc == 2.0


def test_batch_paths_match_scalar():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(64, 2))
    t = np.array([0.3, -0.7])
    vals = batch_values(SQ1, pts, t)
    grads = batch_grad_theta(SQ1, pts, t)
    for i in range(8):
        assert vals[i] == pytest.approx(loss_value(SQ1, pts[i], t), rel=1e-12)
        assert grads[i] == pytest.approx(grad_theta(SQ1, pts[i], t), rel=1e-12)
