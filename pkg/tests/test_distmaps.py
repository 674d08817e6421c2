import numpy as np
import pytest

from perflab import (
    SeedSpec,
    StrategicResponse,
    UnsupportedMapError,
    analytic_sensitivity,
    closed_form_mean_cov,
    sample,
    score,
)
from perflab.distmaps import batch_scores, data_region


def test_sample_mean_lln(canonical, seed):
    n = 100_000
    batch = sample(canonical.map, [0.0], n, seed)
    # base distribution N(1, 1): 4-sigma band for the sample mean
    assert batch.points.mean() == pytest.approx(1.0, abs=4.0 / np.sqrt(n))


def test_sample_determinism(canonical, seed):
    a = sample(canonical.map, [0.7], 100, seed)
    b = sample(canonical.map, [0.7], 100, seed)
    assert np.array_equal(a.points, b.points)


def test_location_structure_exact(canonical, seed):
    a = sample(canonical.map, [0.0], 500, seed)
    b = sample(canonical.map, [2.0], 500, seed)
    np.testing.assert_allclose(b.points - a.points, 0.5 * 2.0, rtol=0, atol=1e-12)


def test_score_vanishes_at_mean(canonical):
    assert score(canonical.map, [1.0], [0.0]) == pytest.approx([0.0])


def test_score_formula(canonical):
    # a (z - mu0 - a t) / sigma^2 = 0.5 * (2 - 1) at t = 0
    assert score(canonical.map, [2.0], [0.0]) == pytest.approx([0.5])


def test_score_identity_zero_mean(canonical, seed):
    n = 100_000
    batch = sample(canonical.map, [0.4], n, seed)
    scores = batch_scores(canonical.map, batch.points, [0.4])
    se = scores.std(ddof=1) / np.sqrt(n)
    assert abs(scores.mean()) <= 4 * se


def test_closed_form_mean_cov(canonical):
    mean, var = closed_form_mean_cov(canonical.map, [2.0])
    assert mean == pytest.approx([2.0])
    assert var == pytest.approx([1.0])
    assert closed_form_mean_cov(canonical.map, [0.0])[0] == pytest.approx([1.0])
    assert closed_form_mean_cov(canonical.map, [-2.0])[0] == pytest.approx([0.0])


def test_analytic_sensitivity(canonical):
    assert analytic_sensitivity(canonical.map) == pytest.approx(0.5)


def test_data_region_covers_means(canonical):
    region = data_region(canonical.map, canonical.domain)
    assert region.lower[0] < -0.5 - 3.0  # mean at theta=-3 is -0.5
    assert region.upper[0] > 2.5 + 3.0   # mean at theta=+3 is 2.5


STRATEGIC = StrategicResponse(
    data_dim=1, cost=2.0, base_means=[[0.0]], base_var=[1.0], weights=[1.0]
)


def test_strategic_shift_exact(seed):
    a = sample(STRATEGIC, [0.0], 400, seed)
    b = sample(STRATEGIC, [1.0], 400, seed)
    np.testing.assert_allclose(b.points - a.points, 1.0 / (2 * 2.0), atol=1e-12)


def test_strategic_has_no_score(seed):
    with pytest.raises(UnsupportedMapError):
        score(STRATEGIC, [0.0], [0.0])


def test_strategic_sensitivity():
    assert analytic_sensitivity(STRATEGIC) == pytest.approx(0.25)


def test_strategic_label_column_fixed(seed):
    spec = StrategicResponse(
        data_dim=2,
        cost=1.0,
        base_means=[[0.0, 1.0], [1.0, -1.0]],
        base_var=[1.0, 0.0],
        weights=[0.5, 0.5],
        label_col=1,
    )
    a = sample(spec, [0.0], 300, seed)
    b = sample(spec, [2.0], 300, seed)
    assert set(np.unique(a.points[:, 1])) <= {-1.0, 1.0}
    # labels untouched, features shifted by theta / (2 cost)
    np.testing.assert_allclose(a.points[:, 1], b.points[:, 1], atol=0)
    np.testing.assert_allclose(b.points[:, 0] - a.points[:, 0], 1.0, atol=1e-12)


def test_sample_rejects_bad_n(canonical, seed):
    from perflab import ContractError

    with pytest.raises(ContractError):
        sample(canonical.map, [0.0], 0, seed)
