"""Trajectory alignment and error metrics: ATE, per-meter RPE, summary statistics.

Pure functions over immutable inputs; safe to run arbitrarily parallel across runs.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateInput, EmptySeries, TrajectoryTooShort
from .trajectory import (
    DEFAULT_MAX_DT,
    Pose,
    Trajectory,
    associate,
    relative_pose,
)

DEFAULT_RPE_DELTA_M = 1.0


class Metric(str, Enum):
    ATE = "ATE"
    RPE_TRANS_PER_M = "RPE_TRANS_PER_M"


@dataclass(frozen=True)
class RigidTransform:
    """x ↦ s·R·x + t with R a proper rotation; s is 1.0 unless similarity alignment."""

    R: tuple  # 3x3 nested tuples
    t: tuple[float, float, float]
    s: float = 1.0

    @classmethod
    def from_arrays(cls, R: np.ndarray, t: np.ndarray, s: float = 1.0) -> "RigidTransform":
        return cls(R=tuple(tuple(float(v) for v in row) for row in R), t=tuple(float(v) for v in t), s=float(s))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls.from_arrays(np.eye(3), np.zeros(3))

    def matrix(self) -> np.ndarray:
        return np.array(self.R)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.s * (points @ self.matrix().T) + np.array(self.t)


@dataclass(frozen=True)
class ErrorSeries:
    """Non-negative error magnitudes keyed by reference timestamp."""

    values: tuple[tuple[float, float], ...]  # (reference timestamp, error)
    metric: Metric

    def __post_init__(self):
        if not self.values:
            raise ValueError("error series must be non-empty")
        object.__setattr__(self, "values", tuple((float(a), float(b)) for a, b in self.values))

    def errors(self) -> np.ndarray:
        return np.array([e for _, e in self.values])


@dataclass(frozen=True)
class StatsSummary:
    min: float
    max: float
    mean: float
    std: float
    rmse: float
    count: int

    def as_dict(self) -> dict:
        return {
            "min": self.min,
            "max": self.max,
            "mean": self.mean,
            "std": self.std,
            "rmse": self.rmse,
            "count": self.count,
        }


@dataclass(frozen=True)
class EvalResult:
    run_id: str
    ate_series: ErrorSeries
    ate_stats: StatsSummary
    rpe_series: ErrorSeries
    rpe_stats: StatsSummary
    alignment: RigidTransform
    aligned_estimate: Trajectory
    groundtruth: Trajectory
    pairs_used: int


def summarize(series: ErrorSeries) -> StatsSummary:
    """Population statistics; rmse = sqrt(mean of squares), so rmse² = mean² + std²."""
    errors = series.errors()
    if errors.size == 0:
        raise EmptySeries("cannot summarize an empty series")
    return StatsSummary(
        min=float(errors.min()),
        max=float(errors.max()),
        mean=float(errors.mean()),
        std=float(errors.std()),
        rmse=float(np.sqrt(np.mean(errors**2))),
        count=int(errors.size),
    )


def umeyama_align(src: np.ndarray, dst: np.ndarray, with_scale: bool = False) -> RigidTransform:
    """Least-squares alignment minimizing Σ‖dst_i − (s·R·src_i + t)‖².

    Closed form via SVD of the centered cross-covariance, with the determinant
    sign correction so R is always a proper rotation, including rank-deficient
    (collinear/planar) inputs.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise DegenerateInput("src and dst must be equal-shape (n, 3) arrays")
    n = src.shape[0]
    if n < 3:
        raise DegenerateInput(f"need at least 3 point pairs, got {n}")
    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    src_c = src - mu_src
    dst_c = dst - mu_dst
    var_src = np.mean(np.sum(src_c**2, axis=1))
    if var_src == 0.0:
        raise DegenerateInput("source points are all identical")
    cov = dst_c.T @ src_c / n
    U, D, Vt = np.linalg.svd(cov)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    s = float(np.trace(np.diag(D) @ S) / var_src) if with_scale else 1.0
    if s <= 0:
        raise DegenerateInput("non-positive scale from degenerate covariance")
    t = mu_dst - s * R @ mu_src
    return RigidTransform.from_arrays(R, t, s)


def compute_ate(
    est: Trajectory,
    gt: Trajectory,
    max_dt: float = DEFAULT_MAX_DT,
    with_scale: bool = False,
    run_id: str = "",
) -> tuple[ErrorSeries, StatsSummary, RigidTransform, Trajectory]:
    """Associate, align estimate onto ground truth, and score per-pose translation error."""
    assoc = associate(est, gt, max_dt)
    if len(assoc) < 3:
        raise DegenerateInput(f"only {len(assoc)} associated pairs, need 3")
    est_pts = est.positions[list(assoc.est_indices)]
    gt_pts = gt.positions[list(assoc.ref_indices)]
    transform = umeyama_align(est_pts, gt_pts, with_scale=with_scale)
    aligned_pts = transform.apply(est_pts)
    errors = np.linalg.norm(gt_pts - aligned_pts, axis=1)
    gt_ts = gt.timestamps
    series = ErrorSeries(
        values=tuple((float(gt_ts[j]), float(e)) for (_, j), e in zip(assoc.pairs, errors)),
        metric=Metric.ATE,
    )
    # aligned estimate restricted to associated samples, for overlay plotting
    Rq = _matrix_to_quat(transform.matrix())
    aligned = Trajectory(
        samples=tuple(
            (float(gt_ts[j]), Pose(t=tuple(p), q=_quat_mul_pose(Rq, est.pose(i))))
            for (i, j), p in zip(assoc.pairs, aligned_pts)
        ),
        frame_id=gt.frame_id,
    )
    return series, summarize(series), transform, aligned


def compute_rpe(
    est: Trajectory,
    gt: Trajectory,
    max_dt: float = DEFAULT_MAX_DT,
    delta_m: float = DEFAULT_RPE_DELTA_M,
) -> tuple[ErrorSeries, StatsSummary]:
    """Translation drift per meter over segments of ≥ delta_m ground-truth path length."""
    if delta_m <= 0:
        raise ValueError("delta_m must be positive")
    assoc = associate(est, gt, max_dt)
    if len(assoc) < 2:
        raise TrajectoryTooShort(f"only {len(assoc)} associated pairs")
    gt_pts = gt.positions[list(assoc.ref_indices)]
    gt_ts = gt.timestamps
    # cumulative gt path distance along the associated subsequence
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(gt_pts, axis=0), axis=1))])
    values = []
    j = 0
    for i in range(len(assoc)):
        while j < len(assoc) and cum[j] - cum[i] < delta_m:
            j += 1
        if j >= len(assoc):
            break
        d = cum[j] - cum[i]
        ei, ri = assoc.pairs[i]
        ej, rj = assoc.pairs[j]
        gt_rel = relative_pose(gt.pose(ri), gt.pose(rj))
        est_rel = relative_pose(est.pose(ei), est.pose(ej))
        err_pose = relative_pose(gt_rel, est_rel)
        err = float(np.linalg.norm(err_pose.t)) / d
        values.append((float(gt_ts[ri]), err))
    if not values:
        raise TrajectoryTooShort(f"no segment reaches {delta_m} m of ground-truth path")
    series = ErrorSeries(values=tuple(values), metric=Metric.RPE_TRANS_PER_M)
    return series, summarize(series)


@dataclass(frozen=True)
class PlotBundle:
    """Structured plot records: each a flat dict, serializable one JSON object per line."""

    records: tuple[dict, ...]

    def to_jsonl(self) -> str:
        import json

        return "\n".join(json.dumps(r, sort_keys=True) for r in self.records) + "\n"


def plot_series(result: EvalResult) -> PlotBundle:
    """Emit xy polylines (gt vs aligned estimate) and error-vs-time series records."""
    records = []
    for ts, pose in result.groundtruth.samples:
        records.append({"kind": "xy", "series": "groundtruth", "t": ts, "x": pose.t[0], "y": pose.t[1]})
    for ts, pose in result.aligned_estimate.samples:
        records.append({"kind": "xy", "series": "aligned_estimate", "t": ts, "x": pose.t[0], "y": pose.t[1]})
    for ts, err in result.ate_series.values:
        records.append({"kind": "error", "series": "ate", "t": ts, "value": err})
    for ts, err in result.rpe_series.values:
        records.append({"kind": "error", "series": "rpe", "t": ts, "value": err})
    return PlotBundle(records=tuple(records))


def _matrix_to_quat(R: np.ndarray) -> tuple[float, float, float, float]:
    tr = np.trace(R)
    if tr > 0:
        s = 0.5 / np.sqrt(tr + 1.0)
        return (
            float((R[2, 1] - R[1, 2]) * s),
            float((R[0, 2] - R[2, 0]) * s),
            float((R[1, 0] - R[0, 1]) * s),
            float(0.25 / s),
        )
    i = int(np.argmax(np.diag(R)))
    j, k = (i + 1) % 3, (i + 2) % 3
    s = 2.0 * np.sqrt(max(1.0 + R[i, i] - R[j, j] - R[k, k], 0.0))
    q = [0.0, 0.0, 0.0, 0.0]
    q[i] = 0.25 * s
    q[j] = (R[j, i] + R[i, j]) / s
    q[k] = (R[k, i] + R[i, k]) / s
    q[3] = (R[k, j] - R[j, k]) / s
    return (q[0], q[1], q[2], q[3])


def _quat_mul_pose(q: tuple, pose: Pose) -> tuple:
    from .trajectory import _quat_mul

    return _quat_mul(q, pose.q)
