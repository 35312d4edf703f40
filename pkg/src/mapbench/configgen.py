"""Expand parameter grids into deterministic mapping configurations and render
each one as the unified YAML config file consumed by the sandbox entry script.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import uuid
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .errors import ValidationFailure
from .model import AlgorithmSpec, DatasetSpec, RemapRule, validate_param_value


@dataclass(frozen=True)
class MappingConfig:
    """One fully-bound run recipe."""

    config_id: str
    algorithm_id: str
    mode: str
    dataset_id: str
    algo_params: dict = field(default_factory=dict)
    dataset_params: dict = field(default_factory=dict)
    remaps: tuple[RemapRule, ...] = ()
    repeat_index: int = 0

    def __post_init__(self):
        if self.repeat_index < 0:
            raise ValueError("repeat_index must be >= 0")
        object.__setattr__(self, "remaps", tuple(self.remaps))

    def content_key(self) -> str:
        """Canonical JSON of everything except config_id; equal key means equal config."""
        return json.dumps(
            {
                "algorithm_id": self.algorithm_id,
                "mode": self.mode,
                "dataset_id": self.dataset_id,
                "algo_params": self.algo_params,
                "dataset_params": self.dataset_params,
                "remaps": [[r.from_topic, r.to_topic] for r in self.remaps],
                "repeat_index": self.repeat_index,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    def as_dict(self) -> dict:
        return {
            "config_id": self.config_id,
            "algorithm_id": self.algorithm_id,
            "mode": self.mode,
            "dataset_id": self.dataset_id,
            "algo_params": dict(self.algo_params),
            "dataset_params": dict(self.dataset_params),
            "remaps": [{"from_topic": r.from_topic, "to_topic": r.to_topic} for r in self.remaps],
            "repeat_index": self.repeat_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MappingConfig":
        return cls(
            config_id=d["config_id"],
            algorithm_id=d["algorithm_id"],
            mode=d["mode"],
            dataset_id=d["dataset_id"],
            algo_params=dict(d.get("algo_params") or {}),
            dataset_params=dict(d.get("dataset_params") or {}),
            remaps=tuple(RemapRule(r["from_topic"], r["to_topic"]) for r in d.get("remaps") or ()),
            repeat_index=int(d.get("repeat_index", 0)),
        )


@dataclass(frozen=True)
class ParamGrid:
    """Cartesian sweep: ordered axes of values over a template config, times repeats."""

    base: MappingConfig
    axes: tuple[tuple[str, tuple], ...] = ()
    repeats: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        axes = tuple((name, tuple(values)) for name, values in self.axes)
        names = [name for name, _ in axes]
        if len(names) != len(set(names)):
            raise ValueError("axis names must be distinct")
        for name, values in axes:
            if not values:
                raise ValueError(f"axis {name!r} has no values")
        object.__setattr__(self, "axes", axes)


def count_combinations(grid: ParamGrid) -> int:
    n = grid.repeats
    for _, values in grid.axes:
        n *= len(values)
    return n


def _deterministic_id(content_key: str) -> str:
    return hashlib.sha256(content_key.encode()).hexdigest()[:16]


def _new_id() -> str:
    return uuid.uuid4().hex[:16]


def _validate_assignment(
    name: str,
    value: Any,
    algorithm: Optional[AlgorithmSpec],
    dataset: Optional[DatasetSpec],
) -> str:
    """Returns which param map ('algo' or 'dataset') owns the name; raises when invalid."""
    if algorithm is not None:
        try:
            spec = algorithm.param(name)
        except KeyError:
            pass
        else:
            violation = validate_param_value(spec, value)
            if violation:
                raise ValidationFailure(violation)
            return "algo"
    if dataset is not None:
        try:
            spec = dataset.param(name)
        except KeyError:
            pass
        else:
            violation = validate_param_value(spec, value)
            if violation:
                raise ValidationFailure(violation)
            return "dataset"
    if algorithm is None and dataset is None:
        # unchecked mode: default to algorithm params
        return "algo"
    raise ValidationFailure(f"unknown parameter {name!r}")


def validate_config(
    cfg: MappingConfig, algorithm: AlgorithmSpec, dataset: DatasetSpec
) -> None:
    """Every bound value must validate against its owning ParamSpec."""
    if cfg.mode not in algorithm.modes:
        raise ValidationFailure(f"mode {cfg.mode!r} not supported by {algorithm.id}")
    for name, value in cfg.algo_params.items():
        try:
            spec = algorithm.param(name)
        except KeyError:
            raise ValidationFailure(f"unknown algorithm parameter {name!r}") from None
        violation = validate_param_value(spec, value)
        if violation:
            raise ValidationFailure(violation)
    for name, value in cfg.dataset_params.items():
        try:
            spec = dataset.param(name)
        except KeyError:
            raise ValidationFailure(f"unknown dataset parameter {name!r}") from None
        violation = validate_param_value(spec, value)
        if violation:
            raise ValidationFailure(violation)


def expand_grid(
    grid: ParamGrid,
    algorithm: Optional[AlgorithmSpec] = None,
    dataset: Optional[DatasetSpec] = None,
) -> list[MappingConfig]:
    """Row-major cartesian product in declared axis order, repeats innermost.

    Deterministic: equal grids expand to element-wise equal configs with equal
    deterministic config ids.
    """
    owners = {
        name: _validate_assignment(name, values[0], algorithm, dataset)
        for name, values in grid.axes
    }
    for name, values in grid.axes:
        for v in values:
            _validate_assignment(name, v, algorithm, dataset)
    configs = []
    value_lists = [values for _, values in grid.axes]
    for combo in itertools.product(*value_lists):
        algo_params = dict(grid.base.algo_params)
        dataset_params = dict(grid.base.dataset_params)
        for (name, _), value in zip(grid.axes, combo):
            if owners[name] == "algo":
                algo_params[name] = value
            else:
                dataset_params[name] = value
        for repeat in range(grid.repeats):
            cfg = MappingConfig(
                config_id="",
                algorithm_id=grid.base.algorithm_id,
                mode=grid.base.mode,
                dataset_id=grid.base.dataset_id,
                algo_params=algo_params,
                dataset_params=dataset_params,
                remaps=grid.base.remaps,
                repeat_index=repeat,
            )
            configs.append(replace(cfg, config_id=_deterministic_id(cfg.content_key())))
    return configs


def copy_and_modify(
    src: MappingConfig,
    overrides: dict,
    algorithm: Optional[AlgorithmSpec] = None,
    dataset: Optional[DatasetSpec] = None,
) -> MappingConfig:
    """Fresh config with a new id; non-overridden fields equal to src."""
    algo_params = dict(src.algo_params)
    dataset_params = dict(src.dataset_params)
    for name, value in overrides.items():
        owner = _validate_assignment(name, value, algorithm, dataset)
        if owner == "dataset" or (owner == "algo" and algorithm is None and name in dataset_params):
            dataset_params[name] = value
        else:
            algo_params[name] = value
    return replace(
        src,
        config_id=_new_id(),
        algo_params=algo_params,
        dataset_params=dataset_params,
    )


def _scalar(value: Any) -> str:
    """Render one YAML scalar; strings always double-quoted (JSON escaping is
    valid YAML), bools lowercase, ints bare, floats with an exponent or point."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = repr(value)
        if "." not in text and "e" not in text and "n" not in text:  # nan/inf guard
            text += ".0"
        return text
    return json.dumps(str(value))


def render_config_file(
    cfg: MappingConfig,
    algorithm: Optional[AlgorithmSpec] = None,
    dataset: Optional[DatasetSpec] = None,
) -> str:
    """Unified YAML config document: fixed key order, byte-deterministic."""
    lines = []
    lines.append("algorithm:")
    lines.append(f"  id: {_scalar(cfg.algorithm_id)}")
    lines.append(f"  mode: {_scalar(cfg.mode)}")
    entry = algorithm.entry_script if algorithm is not None else ""
    lines.append(f"  entry_script: {_scalar(entry)}")
    if cfg.algo_params:
        lines.append("  params:")
        for name in sorted(cfg.algo_params):
            lines.append(f"    {json.dumps(name)}: {_scalar(cfg.algo_params[name])}")
    else:
        lines.append("  params: {}")
    lines.append("dataset:")
    lines.append(f"  id: {_scalar(cfg.dataset_id)}")
    data_path = dataset.data_path if dataset is not None else ""
    lines.append(f"  data_path: {_scalar(data_path)}")
    if cfg.dataset_params:
        lines.append("  params:")
        for name in sorted(cfg.dataset_params):
            lines.append(f"    {json.dumps(name)}: {_scalar(cfg.dataset_params[name])}")
    else:
        lines.append("  params: {}")
    if cfg.remaps:
        lines.append("  remaps:")
        for r in cfg.remaps:
            lines.append(f"    - from: {_scalar(r.from_topic)}")
            lines.append(f"      to: {_scalar(r.to_topic)}")
    else:
        lines.append("  remaps: []")
    lines.append("run:")
    lines.append(f"  config_id: {_scalar(cfg.config_id)}")
    lines.append(f"  repeat_index: {cfg.repeat_index}")
    return "\n".join(lines) + "\n"
