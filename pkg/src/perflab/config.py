"""Instance config: strict TOML schema, round-trip serialization.

Sections: [domain], [loss], [map], and an optional [constants]. Unknown keys
are rejected with the full field path; defaults are applied and recorded on
the resulting Instance (`applied_defaults`).
"""

from __future__ import annotations

import sys
from typing import Optional

import numpy as np

from .core import ConstantSet, Instance, ParamBox
from .distmaps import DistMapSpec, GaussianLocationScale, StrategicResponse
from .errors import ConfigError
from .losses import LogisticRidge, LossSpec, SquaredRidge

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

_TOP_KEYS = {"name", "domain", "loss", "map", "constants"}
_DOMAIN_KEYS = {"dim", "lower", "upper"}
_LOSS_KEYS = {"kind", "ridge"}
_MAP_KEYS_GAUSS = {"kind", "data_dim", "base_mean", "shift", "base_var"}
_MAP_KEYS_STRAT = {"kind", "data_dim", "cost", "base_means", "base_var", "weights", "label_col"}
_CONSTANT_KEYS = {
    "beta", "gamma_sc", "lip_L", "eps", "mu_wsc", "mu_rsi", "gamma_qg", "shift_bound_B",
}


def _reject_unknown(table: dict, allowed: set, path: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown key")


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}", "missing required key")
    return table[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _vector(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a nonempty array of numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a nonempty array of rows")
    rows = [_vector(row, f"{path}[{i}]") for i, row in enumerate(value)]
    if len({r.shape[0] for r in rows}) != 1:
        raise ConfigError(path, "rows have unequal lengths")
    return np.vstack(rows)


def load_instance(config_text: str) -> Instance:
    """Parse and validate one instance config. See `dumps_instance` for the inverse."""
    try:
        data = _toml.loads(config_text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError("config", f"parse error: {exc}") from None

    _reject_unknown(data, _TOP_KEYS, "config")
    applied = []

    name = data.get("name", "instance")
    if not isinstance(name, str):
        raise ConfigError("name", "expected a string")

    dom = _require(data, "domain", "config")
    _reject_unknown(dom, _DOMAIN_KEYS, "domain")
    lower = _vector(_require(dom, "lower", "domain"), "domain.lower")
    upper = _vector(_require(dom, "upper", "domain"), "domain.upper")
    if "dim" in dom:
        dim = dom["dim"]
        if not isinstance(dim, int) or dim < 1:
            raise ConfigError("domain.dim", "expected a positive integer")
    else:
        dim = lower.shape[0]
        applied.append("domain.dim")
    if lower.shape[0] != dim or upper.shape[0] != dim:
        raise ConfigError("domain.lower", f"bounds must have length dim={dim}")
    if np.any(lower > upper):
        raise ConfigError("domain.upper", "upper < lower in some coordinate")
    box = ParamBox(lower, upper)

    loss = _parse_loss(_require(data, "loss", "config"), applied)
    dist = _parse_map(_require(data, "map", "config"), applied)

    if "constants" in data:
        consts = _parse_constants(data["constants"])
    else:
        consts = ConstantSet()
        applied.append("constants")

    try:
        return Instance(
            dim=dim,
            domain=box,
            loss=loss,
            map=dist,
            declared=consts,
            name=name,
            applied_defaults=tuple(applied),
        )
    except Exception as exc:
        raise ConfigError("config", str(exc)) from None


def _parse_loss(table: dict, applied: list) -> LossSpec:
    _reject_unknown(table, _LOSS_KEYS, "loss")
    kind = _require(table, "kind", "loss")
    if "ridge" in table:
        ridge = _number(table["ridge"], "loss.ridge")
        if ridge < 0:
            raise ConfigError("loss.ridge", "must be >= 0")
    else:
        ridge = 0.0
        applied.append("loss.ridge")
    if kind == "squared_ridge":
        return SquaredRidge(ridge=ridge)
    if kind == "logistic_ridge":
        return LogisticRidge(ridge=ridge)
    raise ConfigError("loss.kind", f"unknown loss kind {kind!r}")


def _parse_map(table: dict, applied: list) -> DistMapSpec:
    kind = _require(table, "kind", "map")
    if kind == "gaussian_location_scale":
        _reject_unknown(table, _MAP_KEYS_GAUSS, "map")
        mean = _vector(_require(table, "base_mean", "map"), "map.base_mean")
        m = table.get("data_dim", mean.shape[0])
        if "data_dim" not in table:
            applied.append("map.data_dim")
        shift = _matrix(_require(table, "shift", "map"), "map.shift")
        if "base_var" in table:
            var = _vector(table["base_var"], "map.base_var")
        else:
            var = np.ones(mean.shape[0])
            applied.append("map.base_var")
        if np.any(var <= 0):
            raise ConfigError("map.base_var", "must be strictly positive")
        try:
            return GaussianLocationScale(
                data_dim=m, base_mean=mean, shift=shift, base_var=var
            )
        except Exception as exc:
            raise ConfigError("map", str(exc)) from None
    if kind == "strategic_response":
        _reject_unknown(table, _MAP_KEYS_STRAT, "map")
        means = _matrix(_require(table, "base_means", "map"), "map.base_means")
        m = table.get("data_dim", means.shape[1])
        if "data_dim" not in table:
            applied.append("map.data_dim")
        cost = _number(_require(table, "cost", "map"), "map.cost")
        if cost <= 0:
            raise ConfigError("map.cost", "must be > 0")
        if "base_var" in table:
            var = _vector(table["base_var"], "map.base_var")
        else:
            var = np.ones(means.shape[1])
            applied.append("map.base_var")
        if np.any(var < 0):
            raise ConfigError("map.base_var", "must be >= 0")
        if "weights" in table:
            weights = _vector(table["weights"], "map.weights")
        else:
            weights = np.full(means.shape[0], 1.0 / means.shape[0])
            applied.append("map.weights")
        label_col = table.get("label_col")
        if label_col is not None and not isinstance(label_col, int):
            raise ConfigError("map.label_col", "expected an integer column index")
        try:
            return StrategicResponse(
                data_dim=m,
                cost=cost,
                base_means=means,
                base_var=var,
                weights=weights,
                label_col=label_col,
            )
        except Exception as exc:
            raise ConfigError("map", str(exc)) from None
    raise ConfigError("map.kind", f"unknown map kind {kind!r}")


def _parse_constants(table: dict) -> ConstantSet:
    _reject_unknown(table, _CONSTANT_KEYS, "constants")
    values = {}
    for key in sorted(table):
        v = _number(table[key], f"constants.{key}")
        if v < 0 or not np.isfinite(v):
            raise ConfigError(f"constants.{key}", "must be finite and >= 0")
        values[key] = v
    return ConstantSet(**values)


def load_instance_path(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return load_instance(fh.read())


# ---------------------------------------------------------------------------
# serialization (inverse of load_instance)
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.ndarray):
        if value.ndim == 1:
            return "[" + ", ".join(_fmt(v) for v in value) + "]"
        return "[" + ", ".join(_fmt(row) for row in value) + "]"
    raise TypeError(f"cannot serialize {type(value)}")


def dumps_instance(instance: Instance) -> str:
    """Serialize an Instance back to config text; load_instance inverts it."""
    lines = [f"name = {_fmt(instance.name)}", ""]
    lines += [
        "[domain]",
        f"dim = {instance.dim}",
        f"lower = {_fmt(instance.domain.lower)}",
        f"upper = {_fmt(instance.domain.upper)}",
        "",
        "[loss]",
        f"kind = {_fmt(instance.loss.kind)}",
        f"ridge = {_fmt(instance.loss.ridge)}",
        "",
        "[map]",
        f"kind = {_fmt(instance.map.kind)}",
        f"data_dim = {instance.map.data_dim}",
    ]
    m = instance.map
    if m.kind == "gaussian_location_scale":
        lines += [
            f"base_mean = {_fmt(m.base_mean)}",
            f"shift = {_fmt(m.shift)}",
            f"base_var = {_fmt(m.base_var)}",
        ]
    else:
        lines += [
            f"cost = {_fmt(m.cost)}",
            f"base_means = {_fmt(m.base_means)}",
            f"base_var = {_fmt(m.base_var)}",
            f"weights = {_fmt(m.weights)}",
        ]
        if m.label_col is not None:
            lines.append(f"label_col = {m.label_col}")
    declared = instance.declared.as_dict()
    if declared:
        lines += ["", "[constants]"]
        lines += [f"{k} = {_fmt(v)}" for k, v in sorted(declared.items())]
    return "\n".join(lines) + "\n"


def instances_equal(a: Instance, b: Instance) -> bool:
    """Structural equality (dataclass == is unusable with array fields)."""
    return dumps_instance(a) == dumps_instance(b) and a.applied_defaults == b.applied_defaults


def make_gaussian_mean_instance(
    mu0: float = 1.0,
    a: float = 0.5,
    ridge: float = 1.0,
    sigma: float = 1.0,
    lo: float = -3.0,
    hi: float = 3.0,
    declared: Optional[ConstantSet] = None,
    name: str = "gauss-mean-1d",
) -> Instance:
    """The 1-D Gaussian location instance used throughout tests and docs."""
    return Instance(
        dim=1,
        domain=ParamBox([lo], [hi]),
        loss=SquaredRidge(ridge=ridge),
        map=GaussianLocationScale(
            data_dim=1,
            base_mean=[mu0],
            shift=[[a]],
            base_var=[sigma**2],
        ),
        declared=declared if declared is not None else ConstantSet(),
        name=name,
    )
