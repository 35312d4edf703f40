"""Request/response schemas for the HTTP API. All JSON fields are snake_case."""
from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field

from ..configgen import MappingConfig
from ..model import AlgorithmSpec, DatasetSpec, ParamSpec, RemapRule


class ParamSpecIn(BaseModel):
    name: str
    kind: str
    default: Any
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    choices: Optional[list] = None

    def to_model(self) -> ParamSpec:
        return ParamSpec(
            name=self.name,
            kind=self.kind,
            default=self.default,
            minimum=self.minimum,
            maximum=self.maximum,
            choices=tuple(self.choices) if self.choices else None,
        )


class AlgorithmIn(BaseModel):
    id: str = ""
    name: str
    version_tag: str
    image_ref: str
    modes: list[str]
    entry_script: str
    params: list[ParamSpecIn] = Field(default_factory=list)

    def to_model(self) -> AlgorithmSpec:
        return AlgorithmSpec(
            id=self.id,
            name=self.name,
            version_tag=self.version_tag,
            image_ref=self.image_ref,
            modes=tuple(self.modes),
            entry_script=self.entry_script,
            params=tuple(p.to_model() for p in self.params),
        )


class DatasetIn(BaseModel):
    id: str = ""
    name: str
    sequence_name: str
    data_path: str
    groundtruth_path: str
    topics: list[str] = Field(default_factory=list)
    params: list[ParamSpecIn] = Field(default_factory=list)
    length_m: Optional[float] = None
    duration_s: Optional[float] = None

    def to_model(self) -> DatasetSpec:
        return DatasetSpec(
            id=self.id,
            name=self.name,
            sequence_name=self.sequence_name,
            data_path=self.data_path,
            groundtruth_path=self.groundtruth_path,
            topics=tuple(self.topics),
            params=tuple(p.to_model() for p in self.params),
            length_m=self.length_m,
            duration_s=self.duration_s,
        )


class RemapIn(BaseModel):
    from_topic: str
    to_topic: str


class ConfigIn(BaseModel):
    config_id: Optional[str] = None
    algorithm_id: str
    mode: str
    dataset_id: str
    algo_params: dict = Field(default_factory=dict)
    dataset_params: dict = Field(default_factory=dict)
    remaps: list[RemapIn] = Field(default_factory=list)
    repeat_index: int = 0

    def to_model(self, config_id: str) -> MappingConfig:
        return MappingConfig(
            config_id=config_id,
            algorithm_id=self.algorithm_id,
            mode=self.mode,
            dataset_id=self.dataset_id,
            algo_params=dict(self.algo_params),
            dataset_params=dict(self.dataset_params),
            remaps=tuple(RemapRule(r.from_topic, r.to_topic) for r in self.remaps),
            repeat_index=self.repeat_index,
        )


class AxisIn(BaseModel):
    name: str
    values: list


class GridIn(BaseModel):
    base: ConfigIn
    axes: list[AxisIn] = Field(default_factory=list)
    repeats: int = 1
    dry_run: bool = False


class RunIn(BaseModel):
    config_id: str
    timeout_s: float = 600.0
    cpu_limit_cores: Optional[float] = None
    mem_limit_mb: Optional[int] = None
    idempotency_key: Optional[str] = None


class EvalParamsIn(BaseModel):
    max_dt: float = 0.02
    rpe_delta_m: float = 1.0
    with_scale: bool = False


class EvalIn(BaseModel):
    run_id: str
    eval_params: EvalParamsIn = Field(default_factory=EvalParamsIn)


class MetaFilterIn(BaseModel):
    algorithm_id: Optional[str] = None
    dataset_id: Optional[str] = None
    mode: Optional[str] = None
    param_equals: dict = Field(default_factory=dict)


class MetaSeriesIn(BaseModel):
    x_axis: str
    metric: str
    filter: MetaFilterIn = Field(default_factory=MetaFilterIn)
    aggregate_repeats: str = "mean"
    group_by: Optional[str] = None
    unit: Optional[str] = None  # display unit, e.g. "cm" for metre metrics


class MetaMatrixIn(BaseModel):
    rows: list[list[str]]  # [algorithm_id, mode] pairs
    cols: list[str]  # dataset ids
    aggregate_repeats: str = "mean"


def algorithm_out(spec: AlgorithmSpec) -> dict:
    return {
        "id": spec.id,
        "name": spec.name,
        "version_tag": spec.version_tag,
        "image_ref": spec.image_ref,
        "modes": list(spec.modes),
        "entry_script": spec.entry_script,
        "params": [p.as_dict() for p in spec.params],
    }


def dataset_out(spec: DatasetSpec) -> dict:
    return {
        "id": spec.id,
        "name": spec.name,
        "sequence_name": spec.sequence_name,
        "data_path": spec.data_path,
        "groundtruth_path": spec.groundtruth_path,
        "topics": list(spec.topics),
        "params": [p.as_dict() for p in spec.params],
        "length_m": spec.length_m,
        "duration_s": spec.duration_s,
    }
