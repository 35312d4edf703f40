"""Timestamped-pose data model, TUM-format IO, SE(3) algebra, timestamp association.

All types are immutable after construction and safe to share between threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    MalformedLine,
    NoMatches,
    NonMonotonicTimestamp,
    ZeroNormQuaternion,
)

#: Default association window in seconds (TUM tooling convention).
DEFAULT_MAX_DT = 0.02

_QUAT_NORM_FLOOR = 1e-6


def _quat_mul(a, b):
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return (
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    )


def _quat_conj(q):
    x, y, z, w = q
    return (-x, -y, -z, w)


def _quat_rotate(q, v):
    # v' = q * (v, 0) * q^-1 for unit q
    x, y, z, w = q
    vx, vy, vz = v
    # t = 2 * cross(q.xyz, v)
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


@dataclass(frozen=True)
class Pose:
    """Rigid pose: translation in meters, rotation as unit quaternion (qx, qy, qz, qw)."""

    t: tuple[float, float, float]
    q: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        t = tuple(float(v) for v in self.t)
        q = tuple(float(v) for v in self.q)
        if len(t) != 3 or len(q) != 4:
            raise ValueError("pose needs a 3-vector translation and 4-component quaternion")
        norm = math.sqrt(sum(v * v for v in q))
        if not math.isfinite(norm) or norm <= _QUAT_NORM_FLOOR:
            raise ValueError(f"quaternion norm {norm} too small to normalize")
        q = tuple(v / norm for v in q)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "q", q)

    @classmethod
    def identity(cls) -> "Pose":
        return cls((0.0, 0.0, 0.0))

    def rotation_matrix(self) -> np.ndarray:
        x, y, z, w = self.q
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
            ]
        )


def compose(a: Pose, b: Pose) -> Pose:
    """a ∘ b in SE(3)."""
    return Pose(
        t=tuple(ta + tb for ta, tb in zip(a.t, _quat_rotate(a.q, b.t))),
        q=_quat_mul(a.q, b.q),
    )


def inverse(a: Pose) -> Pose:
    qc = _quat_conj(a.q)
    return Pose(t=tuple(-v for v in _quat_rotate(qc, a.t)), q=qc)


def relative_pose(a: Pose, b: Pose) -> Pose:
    """a⁻¹ ∘ b; relative_pose(a, a) is identity."""
    qc = _quat_conj(a.q)
    dt = tuple(tb - ta for ta, tb in zip(a.t, b.t))
    return Pose(t=_quat_rotate(qc, dt), q=_quat_mul(qc, b.q))


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered sequence of (timestamp seconds, Pose); timestamps strictly increasing."""

    samples: tuple[tuple[float, Pose], ...]
    frame_id: str = ""

    def __post_init__(self):
        samples = tuple((float(ts), p) for ts, p in self.samples)
        if not samples:
            raise ValueError("trajectory must hold at least one pose")
        for i, (ts, _) in enumerate(samples):
            if not math.isfinite(ts) or ts < 0:
                raise ValueError(f"timestamp {ts} at index {i} not finite and non-negative")
            if i and ts <= samples[i - 1][0]:
                raise ValueError(f"timestamps not strictly increasing at index {i}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([ts for ts, _ in self.samples])

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.t for _, p in self.samples])

    def pose(self, i: int) -> Pose:
        return self.samples[i][1]


@dataclass(frozen=True)
class Association:
    """Matched index pairs (estimate index, reference index), ordered by reference time."""

    pairs: tuple[tuple[int, int], ...]
    max_dt: float = DEFAULT_MAX_DT

    est_indices: tuple[int, ...] = field(init=False)
    ref_indices: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "est_indices", tuple(a for a, _ in pairs))
        object.__setattr__(self, "ref_indices", tuple(b for _, b in pairs))

    def __len__(self) -> int:
        return len(self.pairs)


def parse_tum(text: str, frame_id: str = "") -> Trajectory:
    """Parse TUM-format lines: "ts tx ty tz qx qy qz qw", '#' starts a comment."""
    samples = []
    last_ts = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 8:
            raise MalformedLine(line_no, f"expected 8 fields, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise MalformedLine(line_no, f"non-numeric field in {line!r}") from None
        ts = values[0]
        if last_ts is not None and ts <= last_ts:
            raise NonMonotonicTimestamp(line_no, f"{ts} after {last_ts}")
        last_ts = ts
        q = values[4:8]
        if math.sqrt(sum(v * v for v in q)) <= _QUAT_NORM_FLOOR:
            raise ZeroNormQuaternion(line_no, "quaternion norm below 1e-6")
        try:
            samples.append((ts, Pose(t=tuple(values[1:4]), q=tuple(q))))
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from None
    if not samples:
        raise MalformedLine(0, "no data lines")
    return Trajectory(samples=tuple(samples), frame_id=frame_id)


def serialize_tum(traj: Trajectory) -> str:
    """One line per sample, 9 fractional digits, LF-terminated."""
    lines = []
    for ts, pose in traj.samples:
        fields = (ts, *pose.t, *pose.q)
        lines.append(" ".join(f"{v:.9f}" for v in fields))
    return "\n".join(lines) + "\n"


def associate(est: Trajectory, ref: Trajectory, max_dt: float = DEFAULT_MAX_DT) -> Association:
    """Greedy nearest-timestamp matching within max_dt; each index used at most once."""
    if max_dt <= 0:
        raise ValueError("max_dt must be positive")
    est_ts = est.timestamps
    ref_ts = ref.timestamps
    candidates = []
    # restrict to ref indices within the window of each est sample
    for i, te in enumerate(est_ts):
        lo = np.searchsorted(ref_ts, te - max_dt, side="left")
        hi = np.searchsorted(ref_ts, te + max_dt, side="right")
        for j in range(lo, hi):
            candidates.append((abs(te - ref_ts[j]), i, j))
    candidates.sort()
    used_est: set[int] = set()
    used_ref: set[int] = set()
    pairs = []
    for _, i, j in candidates:
        if i in used_est or j in used_ref:
            continue
        used_est.add(i)
        used_ref.add(j)
        pairs.append((i, j))
    if not pairs:
        raise NoMatches(f"no timestamp pairs within {max_dt} s")
    pairs.sort(key=lambda p: ref_ts[p[1]])
    return Association(pairs=tuple(pairs), max_dt=max_dt)


def path_length(traj: Trajectory) -> float:
    """Sum of consecutive translation distances; 0 for a single pose."""
    pos = traj.positions
    if len(pos) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pos, axis=0), axis=1)))
