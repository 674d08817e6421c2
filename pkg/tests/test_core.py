import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perflab import ContractError, ParamBox, SeedSpec, project


BOX = ParamBox([-3.0], [3.0])
BOX2 = ParamBox([-3.0, -3.0], [3.0, 3.0])


def test_project_clamps_to_boundary():
    assert project([5.0], BOX) == pytest.approx([3.0])


def test_project_fixes_interior_point():
    assert project([0.5], BOX) == pytest.approx([0.5])


def test_project_componentwise():
    assert project([-4.0, 2.0], BOX2) == pytest.approx([-3.0, 2.0])


def test_project_dimension_mismatch():
    with pytest.raises(ContractError):
        project([1.0, 2.0], BOX)


def test_project_rejects_nonfinite():
    with pytest.raises(ContractError):
        project([np.nan], BOX)


coord = st.floats(min_value=-50, max_value=50, allow_nan=False)


@given(x=st.lists(coord, min_size=2, max_size=2))
@settings(max_examples=200, deadline=None)
def test_project_idempotent(x):
    once = project(x, BOX2)
    assert np.array_equal(project(once, BOX2), once)


@given(
    x=st.lists(coord, min_size=2, max_size=2),
    y=st.lists(coord, min_size=2, max_size=2),
)
@settings(max_examples=200, deadline=None)
def test_project_nonexpansive(x, y):
    px, py = project(x, BOX2), project(y, BOX2)
    assert np.linalg.norm(px - py) <= np.linalg.norm(np.array(x) - np.array(y)) + 1e-12


def test_box_rejects_empty():
    with pytest.raises(ContractError):
        ParamBox([1.0], [0.0])


def test_box_grid_cardinality():
    assert BOX.grid(0.5).shape == (13, 1)
    assert BOX.grid(1e-3).shape == (6001, 1)
    assert BOX2.grid(1.0).shape == (49, 2)


def test_seedspec_reproducible_and_independent():
    s = SeedSpec(7, (1, 2))
    a = s.rng().standard_normal(5)
    b = SeedSpec(7, (1, 2)).rng().standard_normal(5)
    c = s.child(3).rng().standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_seedspec_rejects_out_of_range():
    with pytest.raises(ContractError):
        SeedSpec(-1)
    with pytest.raises(ContractError):
        SeedSpec(2**64)


def test_constantset_rejects_negative():
    from perflab import ConstantSet

    with pytest.raises(ContractError):
        ConstantSet(eps=-0.1)
