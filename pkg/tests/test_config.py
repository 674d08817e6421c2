import numpy as np
import pytest

from perflab import (
    ConfigError,
    ConstantSet,
    dumps_instance,
    instances_equal,
    load_instance,
    make_gaussian_mean_instance,
)

CANONICAL = """
name = "gauss-mean-1d"

[domain]
lower = [-3.0]
upper = [3.0]

[loss]
kind = "squared_ridge"
ridge = 1.0

[map]
kind = "gaussian_location_scale"
base_mean = [1.0]
shift = [[0.5]]
base_var = [1.0]
"""


def test_canonical_parses():
    inst = load_instance(CANONICAL)
    assert inst.dim == 1
    assert inst.loss.ridge == 1.0
    assert inst.map.base_mean == pytest.approx([1.0])
    assert inst.map.shift == pytest.approx([[0.5]])
    assert inst.declared.is_empty()
    assert "constants" in inst.applied_defaults


def test_round_trip_identity():
    inst = load_instance(CANONICAL)
    again = load_instance(dumps_instance(inst))
    assert instances_equal(inst, again)


def test_round_trip_with_constants():
    inst = make_gaussian_mean_instance(declared=ConstantSet(eps=0.5, beta=2.0))
    again = load_instance(dumps_instance(inst))
    assert instances_equal(inst, again)
    assert again.declared.eps == 0.5


def test_negative_variance_names_field():
    bad = CANONICAL.replace("base_var = [1.0]", "base_var = [-1.0]")
    with pytest.raises(ConfigError) as err:
        load_instance(bad)
    assert "map.base_var" in str(err.value)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        load_instance(CANONICAL + "\n[loss.extra]\nfoo = 1\n")
    assert "loss" in str(err.value)


def test_unknown_top_key_rejected():
    with pytest.raises(ConfigError) as err:
        load_instance(CANONICAL + "\n[observer]\nx = 1\n")
    assert "observer" in str(err.value)


def test_parse_error_reported():
    with pytest.raises(ConfigError):
        load_instance("[domain\nlower=")


def test_missing_section():
    with pytest.raises(ConfigError) as err:
        load_instance("[domain]\nlower=[0.0]\nupper=[1.0]\n")
    assert "loss" in str(err.value)


def test_defaults_recorded():
    text = CANONICAL.replace('ridge = 1.0', '')
    inst = load_instance(text)
    assert inst.loss.ridge == 0.0
    assert "loss.ridge" in inst.applied_defaults


def test_strategic_config():
    inst = load_instance(
        """
[domain]
lower = [-2.0]
upper = [2.0]

[loss]
kind = "squared_ridge"

[map]
kind = "strategic_response"
cost = 2.0
base_means = [[0.0]]
base_var = [1.0]
"""
    )
    assert inst.map.kind == "strategic_response"
    assert inst.map.cost == 2.0
    assert "map.weights" in inst.applied_defaults
    again = load_instance(dumps_instance(inst))
    assert instances_equal(inst, again)


def test_logistic_dimensions_enforced():
    with pytest.raises(ConfigError):
        load_instance(
            """
[domain]
lower = [-1.0]
upper = [1.0]

[loss]
kind = "logistic_ridge"

[map]
kind = "gaussian_location_scale"
base_mean = [0.0]
shift = [[1.0]]
"""
        )  # logistic needs data_dim == dim + 1


def test_bool_is_not_a_number():
    with pytest.raises(ConfigError):
        load_instance(CANONICAL.replace("ridge = 1.0", "ridge = true"))
