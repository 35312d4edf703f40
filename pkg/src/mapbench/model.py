"""Registry entities: algorithms, datasets, parameter schemas, remap rules."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

MODES = (
    "monocular",
    "monocular_inertial",
    "stereo",
    "stereo_inertial",
    "rgbd",
    "lidar_inertial",
)

PARAM_KINDS = ("int", "float", "string", "bool", "enum")


@dataclass(frozen=True)
class ParamSpec:
    """One declared parameter: kind plus an optional domain (range or allowed set)."""

    name: str
    kind: str
    default: Any
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    choices: Optional[tuple] = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("parameter name must be non-empty")
        if self.kind not in PARAM_KINDS:
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if self.kind == "enum" and not self.choices:
            raise ValueError(f"enum parameter {self.name!r} needs choices")
        if self.choices is not None:
            object.__setattr__(self, "choices", tuple(self.choices))
        violation = validate_param_value(self, self.default)
        if violation:
            raise ValueError(f"default for {self.name!r} out of domain: {violation}")

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "default": self.default,
            "minimum": self.minimum,
            "maximum": self.maximum,
            "choices": list(self.choices) if self.choices is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSpec":
        return cls(
            name=d["name"],
            kind=d["kind"],
            default=d["default"],
            minimum=d.get("minimum"),
            maximum=d.get("maximum"),
            choices=tuple(d["choices"]) if d.get("choices") else None,
        )


def validate_param_value(spec: ParamSpec, value: Any) -> Optional[str]:
    """Check kind and domain; returns a violation description or None, never raises."""
    if spec.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return f"{spec.name}: expected int, got {type(value).__name__}"
    elif spec.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return f"{spec.name}: expected float, got {type(value).__name__}"
    elif spec.kind == "bool":
        if not isinstance(value, bool):
            return f"{spec.name}: expected bool, got {type(value).__name__}"
    elif spec.kind == "string":
        if not isinstance(value, str):
            return f"{spec.name}: expected string, got {type(value).__name__}"
    elif spec.kind == "enum":
        if value not in spec.choices:
            return f"{spec.name}: {value!r} not in {list(spec.choices)}"
        return None
    if spec.kind in ("int", "float"):
        if spec.minimum is not None and value < spec.minimum:
            return f"{spec.name}: {value} below minimum {spec.minimum}"
        if spec.maximum is not None and value > spec.maximum:
            return f"{spec.name}: {value} above maximum {spec.maximum}"
    if spec.choices is not None and value not in spec.choices:
        return f"{spec.name}: {value!r} not in {list(spec.choices)}"
    return None


@dataclass(frozen=True)
class RemapRule:
    """Opaque topic remap carried into the rendered config untouched."""

    from_topic: str
    to_topic: str

    def __post_init__(self):
        if not self.from_topic or not self.to_topic:
            raise ValueError("remap topics must be non-empty")


@dataclass(frozen=True)
class AlgorithmSpec:
    id: str
    name: str
    version_tag: str
    image_ref: str  # sandbox image identifier or local executable path
    modes: tuple[str, ...]
    entry_script: str
    params: tuple[ParamSpec, ...] = ()

    def __post_init__(self):
        if not self.modes:
            raise ValueError("algorithm must declare at least one mode")
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown mode {m!r}")
        names = [p.name for p in self.params]
        if len(names) != len(set(names)):
            raise ValueError("duplicate parameter names")
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "params", tuple(self.params))

    def param(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)


@dataclass(frozen=True)
class DatasetSpec:
    id: str
    name: str
    sequence_name: str
    data_path: str
    groundtruth_path: str
    topics: tuple[str, ...] = ()
    params: tuple[ParamSpec, ...] = ()
    length_m: Optional[float] = None
    duration_s: Optional[float] = None

    def __post_init__(self):
        names = [p.name for p in self.params]
        if len(names) != len(set(names)):
            raise ValueError("duplicate parameter names")
        object.__setattr__(self, "topics", tuple(self.topics))
        object.__setattr__(self, "params", tuple(self.params))

    def param(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)
