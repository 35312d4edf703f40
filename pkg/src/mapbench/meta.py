"""Meta analysis over stored runs: parameter-vs-metric series, algorithm×dataset
matrices, and errorbar plot data. Read-only over store snapshots.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import NoMatchingRuns, UnknownParameter
from .store import Store, RunRecord

METRICS = ("ate_rmse", "ate_mean", "rpe_rmse", "cpu_avg", "cpu_max", "ram_max", "wall_time")

METRIC_UNITS = {
    "ate_rmse": "m",
    "ate_mean": "m",
    "rpe_rmse": "m/m",
    "cpu_avg": "cores",
    "cpu_max": "cores",
    "ram_max": "MB",
    "wall_time": "s",
}

FAILED_STATES = ("Failed", "TimedOut")

# dataset attributes usable as an x axis alongside parameters
DATASET_ATTRIBUTES = ("length_m", "duration_s", "sequence_name", "name")


@dataclass(frozen=True)
class RunFilter:
    algorithm_id: Optional[str] = None
    dataset_id: Optional[str] = None
    mode: Optional[str] = None
    param_equals: dict = field(default_factory=dict)

    def matches(self, run: RunRecord, cfg, dataset) -> bool:
        if self.algorithm_id and cfg.algorithm_id != self.algorithm_id:
            return False
        if self.dataset_id and cfg.dataset_id != self.dataset_id:
            return False
        if self.mode and cfg.mode != self.mode:
            return False
        for name, value in self.param_equals.items():
            bound = cfg.algo_params.get(name, cfg.dataset_params.get(name))
            if bound != value:
                return False
        return True


@dataclass(frozen=True)
class MetaQuery:
    x_axis: str
    metric: str
    filter: RunFilter = RunFilter()
    aggregate_repeats: str = "mean"
    group_by: Optional[str] = None  # 'algorithm_id' | 'mode' | 'dataset_id'

    def __post_init__(self):
        if self.metric not in METRICS:
            raise UnknownParameter(f"metric {self.metric!r} not in {METRICS}")
        if self.aggregate_repeats not in ("mean", "median"):
            raise ValueError("aggregate_repeats must be 'mean' or 'median'")


@dataclass(frozen=True)
class MetaRow:
    x: Any
    value: Optional[float]
    spread: Optional[float]  # population std over repeats
    n: int
    failed_count: int

    @property
    def all_failed(self) -> bool:
        return self.n == 0

    def as_dict(self) -> dict:
        return {
            "x": self.x,
            "value": self.value,
            "spread": self.spread,
            "n": self.n,
            "failed_count": self.failed_count,
            "all_failed": self.all_failed,
        }


@dataclass(frozen=True)
class MetaTable:
    rows: tuple[MetaRow, ...]
    metric: str
    unit: str

    def as_dict(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows], "metric": self.metric, "unit": self.unit}


def _load_joined(store: Store, flt: RunFilter):
    """All runs joined with config/dataset plus latest eval and profile."""
    datasets = {d.id: d for d in store.list_datasets()}
    joined = []
    cursor = None
    while True:
        runs, cursor = store.list_runs(
            algorithm_id=flt.algorithm_id, dataset_id=flt.dataset_id, limit=1000, cursor=cursor
        )
        for run in runs:
            cfg = store.get_config(run.config_id)
            dataset = datasets[cfg.dataset_id]
            if not flt.matches(run, cfg, dataset):
                continue
            evals = store.list_evals(run_id=run.run_id)
            joined.append((run, cfg, dataset, evals[-1] if evals else None))
        if cursor is None:
            break
    return joined


def _metric_value(store: Store, run: RunRecord, evaluation) -> Optional[dict]:
    values: dict[str, Optional[float]] = {
        "wall_time": run.wall_time_s,
        "ate_rmse": None,
        "ate_mean": None,
        "rpe_rmse": None,
        "cpu_avg": None,
        "cpu_max": None,
        "ram_max": None,
    }
    if evaluation is not None:
        values["ate_rmse"] = evaluation.ate_stats.get("rmse")
        values["ate_mean"] = evaluation.ate_stats.get("mean")
        values["rpe_rmse"] = evaluation.rpe_stats.get("rmse")
    if store.has_profile(run.run_id):
        profile = store.get_profile(run.run_id, with_samples=False)
        values["cpu_avg"] = profile.cpu_avg_cores
        values["cpu_max"] = profile.cpu_max_cores
        values["ram_max"] = profile.ram_max_mb
    return values


def _x_value(x_axis: str, cfg, dataset):
    if x_axis in cfg.algo_params:
        return cfg.algo_params[x_axis]
    if x_axis in cfg.dataset_params:
        return cfg.dataset_params[x_axis]
    if x_axis in DATASET_ATTRIBUTES:
        return getattr(dataset, x_axis)
    return None


def _aggregate(values: list[float], how: str) -> tuple[float, float]:
    if how == "median":
        center = statistics.median(values)
    else:
        center = statistics.fmean(values)
    spread = statistics.pstdev(values) if len(values) > 1 else 0.0
    return center, spread


def series(store: Store, q: MetaQuery) -> MetaTable:
    """Group matching runs by x value; aggregate the metric over Succeeded runs;
    failed runs stay visible per group as failed_count."""
    joined = _load_joined(store, q.filter)
    if not joined:
        raise NoMatchingRuns("no runs match the filter")
    groups: dict[Any, dict] = {}
    x_seen = False
    for run, cfg, dataset, evaluation in joined:
        x = _x_value(q.x_axis, cfg, dataset)
        if x is None:
            continue
        x_seen = True
        g = groups.setdefault(x, {"values": [], "failed": 0})
        if run.state in FAILED_STATES:
            g["failed"] += 1
            continue
        if run.state != "Succeeded":
            continue
        metric = _metric_value(store, run, evaluation)[q.metric]
        if metric is not None:
            g["values"].append(metric)
    if not x_seen:
        raise UnknownParameter(f"x axis {q.x_axis!r} absent from all matching runs")
    rows = []
    for x in sorted(groups, key=lambda v: (str(type(v)), v)):
        g = groups[x]
        if g["values"]:
            value, spread = _aggregate(g["values"], q.aggregate_repeats)
            rows.append(MetaRow(x=x, value=value, spread=spread, n=len(g["values"]), failed_count=g["failed"]))
        else:
            rows.append(MetaRow(x=x, value=None, spread=None, n=0, failed_count=g["failed"]))
    return MetaTable(rows=tuple(rows), metric=q.metric, unit=METRIC_UNITS[q.metric])


def convert_table(table: MetaTable, unit: str) -> MetaTable:
    """Meter-denominated tables can be rendered in cm; storage stays SI."""
    if unit == table.unit:
        return table
    if table.unit == "m" and unit == "cm":
        factor = 100.0
    elif table.unit == "m/m" and unit == "cm/m":
        factor = 100.0
    else:
        raise ValueError(f"cannot convert {table.unit} to {unit}")
    rows = tuple(
        MetaRow(
            x=r.x,
            value=None if r.value is None else r.value * factor,
            spread=None if r.spread is None else r.spread * factor,
            n=r.n,
            failed_count=r.failed_count,
        )
        for r in table.rows
    )
    return MetaTable(rows=rows, metric=table.metric, unit=unit)


@dataclass(frozen=True)
class MatrixCell:
    ate_rmse: Optional[float]
    cpu_avg: Optional[float]
    cpu_max: Optional[float]
    ram_max: Optional[float]
    n: int
    spread: Optional[float]
    best_rmse: bool = False
    best_cpu: bool = False
    best_ram: bool = False

    @property
    def empty(self) -> bool:
        return self.n == 0

    def cpu_display(self) -> str:
        if self.cpu_avg is None or self.cpu_max is None:
            return ""
        return f"{self.cpu_avg:.2f}/{self.cpu_max:.2f}"

    def as_dict(self) -> dict:
        return {
            "ate_rmse": self.ate_rmse,
            "cpu_avg": self.cpu_avg,
            "cpu_max": self.cpu_max,
            "ram_max": self.ram_max,
            "cpu_display": self.cpu_display(),
            "n": self.n,
            "spread": self.spread,
            "best_rmse": self.best_rmse,
            "best_cpu": self.best_cpu,
            "best_ram": self.best_ram,
            "empty": self.empty,
        }


@dataclass(frozen=True)
class MetaMatrix:
    row_labels: tuple[tuple[str, str], ...]  # (algorithm_id, mode)
    col_labels: tuple[str, ...]  # dataset ids
    cells: tuple[tuple[MatrixCell, ...], ...]  # rows x cols

    def as_dict(self) -> dict:
        return {
            "rows": [list(r) for r in self.row_labels],
            "cols": list(self.col_labels),
            "cells": [[c.as_dict() for c in row] for row in self.cells],
        }


def matrix(store: Store, rows: list[tuple[str, str]], cols: list[str], aggregate_repeats: str = "mean") -> MetaMatrix:
    """Algorithm×dataset grid of (ate rmse, cpu avg/max, ram max); per-column
    best (lowest) values flagged for bold rendering. Empty grid allowed."""
    cells: list[list[MatrixCell]] = []
    for algo_id, mode in rows:
        row_cells = []
        for ds_id in cols:
            flt = RunFilter(algorithm_id=algo_id, dataset_id=ds_id, mode=mode)
            joined = [
                (run, cfg, dataset, ev)
                for run, cfg, dataset, ev in _load_joined(store, flt)
                if run.state == "Succeeded"
            ]
            rmses, cpu_avgs, cpu_maxs, rams = [], [], [], []
            for run, cfg, dataset, evaluation in joined:
                values = _metric_value(store, run, evaluation)
                if values["ate_rmse"] is not None:
                    rmses.append(values["ate_rmse"])
                if values["cpu_avg"] is not None:
                    cpu_avgs.append(values["cpu_avg"])
                    cpu_maxs.append(values["cpu_max"])
                if values["ram_max"] is not None:
                    rams.append(values["ram_max"])
            if rmses:
                value, spread = _aggregate(rmses, aggregate_repeats)
                row_cells.append(
                    MatrixCell(
                        ate_rmse=value,
                        cpu_avg=_aggregate(cpu_avgs, aggregate_repeats)[0] if cpu_avgs else None,
                        cpu_max=_aggregate(cpu_maxs, aggregate_repeats)[0] if cpu_maxs else None,
                        ram_max=_aggregate(rams, aggregate_repeats)[0] if rams else None,
                        n=len(rmses),
                        spread=spread,
                    )
                )
            else:
                row_cells.append(MatrixCell(None, None, None, None, n=0, spread=None))
        cells.append(row_cells)
    # flag column-wise best values
    for j in range(len(cols)):
        col = [cells[i][j] for i in range(len(rows))]
        for attr, flag in (("ate_rmse", "best_rmse"), ("cpu_avg", "best_cpu"), ("ram_max", "best_ram")):
            candidates = [(getattr(c, attr), i) for i, c in enumerate(col) if getattr(c, attr) is not None]
            if not candidates:
                continue
            _, best_i = min(candidates)
            cells[best_i][j] = _replace_flag(cells[best_i][j], flag)
    return MetaMatrix(
        row_labels=tuple((a, m) for a, m in rows),
        col_labels=tuple(cols),
        cells=tuple(tuple(r) for r in cells),
    )


def _replace_flag(cell: MatrixCell, flag: str) -> MatrixCell:
    from dataclasses import replace

    return replace(cell, **{flag: True})


def summary_plot_data(store: Store, q: MetaQuery) -> list[dict]:
    """Errorbar records: one per (group, x) with mean and std, for x-vs-metric plots."""
    if q.group_by is None:
        table = series(store, q)
        return [
            {"group": "all", "x": r.x, "mean": r.value, "std": r.spread, "n": r.n, "failed_count": r.failed_count}
            for r in table.rows
        ]
    joined = _load_joined(store, q.filter)
    if not joined:
        raise NoMatchingRuns("no runs match the filter")
    group_values = sorted(
        {getattr(cfg, q.group_by) for _, cfg, _, _ in joined}
        if q.group_by != "dataset_id"
        else {cfg.dataset_id for _, cfg, _, _ in joined}
    )
    records = []
    for gv in group_values:
        flt = RunFilter(
            algorithm_id=gv if q.group_by == "algorithm_id" else q.filter.algorithm_id,
            dataset_id=gv if q.group_by == "dataset_id" else q.filter.dataset_id,
            mode=gv if q.group_by == "mode" else q.filter.mode,
            param_equals=q.filter.param_equals,
        )
        sub = MetaQuery(x_axis=q.x_axis, metric=q.metric, filter=flt, aggregate_repeats=q.aggregate_repeats)
        try:
            table = series(store, sub)
        except NoMatchingRuns:
            continue
        for r in table.rows:
            records.append(
                {"group": gv, "x": r.x, "mean": r.value, "std": r.spread, "n": r.n, "failed_count": r.failed_count}
            )
    return records
