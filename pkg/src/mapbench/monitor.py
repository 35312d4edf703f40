"""Per-run CPU/memory sampling and aggregation.

CPU is a cumulative-time delta rate (sum over all logical cores, unit: cores),
robust to missed ticks. Memory is resident set, MB. One sampler thread per run;
samples are appended by that thread only and read as immutable snapshots.
"""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from .errors import EmptyProfile, RunNotRunning

DEFAULT_INTERVAL_S = 1.0
MIN_INTERVAL_S = 0.1


class SourceGone(Exception):
    """The sampled process/container disappeared; ends sampling, not a failure."""


class SampleSource(Protocol):
    def read(self) -> tuple[float, float]:
        """Returns (cumulative cpu seconds, resident bytes); raises SourceGone."""
        ...


@dataclass(frozen=True)
class ResourceSample:
    t: float  # seconds since epoch
    cpu_cores: float
    rss_mb: float

    def __post_init__(self):
        if self.cpu_cores < 0 or self.rss_mb < 0:
            raise ValueError("resource sample values must be non-negative")


@dataclass(frozen=True)
class ResourceProfile:
    run_id: str
    samples: tuple[ResourceSample, ...]
    cpu_avg_cores: float
    cpu_max_cores: float
    ram_max_mb: float

    @classmethod
    def from_samples(cls, run_id: str, samples) -> "ResourceProfile":
        samples = tuple(samples)
        cpu_avg, cpu_max, ram_max = aggregate(samples)
        return cls(
            run_id=run_id,
            samples=samples,
            cpu_avg_cores=cpu_avg,
            cpu_max_cores=cpu_max,
            ram_max_mb=ram_max,
        )


def aggregate(samples) -> tuple[float, float, float]:
    """(arithmetic mean cpu, max cpu, max rss); permutation-invariant."""
    samples = list(samples)
    if not samples:
        raise EmptyProfile("no samples to aggregate")
    cpus = [s.cpu_cores for s in samples]
    return (sum(cpus) / len(cpus), max(cpus), max(s.rss_mb for s in samples))


class CumulativeDeltaReader:
    """Turns a cumulative (cpu seconds, rss bytes) source into rate samples."""

    def __init__(self, source: SampleSource, clock: Callable[[], float] = time.time):
        self._source = source
        self._clock = clock
        self._prev_cpu: Optional[float] = None
        self._prev_t: Optional[float] = None

    def read_sample(self) -> ResourceSample:
        cpu_s, rss_bytes = self._source.read()
        now = self._clock()
        if self._prev_t is None or now <= self._prev_t:
            cores = 0.0
        else:
            cores = max(0.0, (cpu_s - (self._prev_cpu or 0.0)) / (now - self._prev_t))
        self._prev_cpu = cpu_s
        self._prev_t = now
        return ResourceSample(t=now, cpu_cores=cores, rss_mb=rss_bytes / (1024.0 * 1024.0))


class ProcessTreeSource:
    """Local-backend source: sums cpu time and RSS over a process and its descendants."""

    def __init__(self, pid: int):
        import psutil

        self._psutil = psutil
        try:
            self._proc = psutil.Process(pid)
        except psutil.NoSuchProcess as exc:
            raise SourceGone(str(exc)) from None

    def read(self) -> tuple[float, float]:
        psutil = self._psutil
        try:
            procs = [self._proc] + self._proc.children(recursive=True)
        except psutil.NoSuchProcess as exc:
            raise SourceGone(str(exc)) from None
        cpu_s = 0.0
        rss = 0.0
        alive = False
        for p in procs:
            try:
                times = p.cpu_times()
                cpu_s += times.user + times.system
                rss += p.memory_info().rss
                alive = True
            except (psutil.NoSuchProcess, psutil.AccessDenied):
                continue
        if not alive:
            raise SourceGone("process tree gone")
        return cpu_s, rss


class Sampler:
    """Background sampling loop attached to one run; stops at terminal state."""

    def __init__(self, reader: CumulativeDeltaReader, is_running: Callable[[], bool], interval_s: float):
        self._reader = reader
        self._is_running = is_running
        self._interval = max(float(interval_s), MIN_INTERVAL_S)
        self._samples: list[ResourceSample] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)

    def start(self):
        self._thread.start()
        return self

    def _loop(self):
        # prime the delta baseline so the first recorded sample is a real rate
        try:
            self._reader.read_sample()
        except SourceGone:
            return
        while not self._stop.is_set() and self._is_running():
            self._stop.wait(self._interval)
            if self._stop.is_set():
                break
            try:
                sample = self._reader.read_sample()
            except SourceGone:
                break
            with self._lock:
                self._samples.append(sample)

    def snapshot(self) -> tuple[ResourceSample, ...]:
        with self._lock:
            return tuple(self._samples)

    def stop(self, timeout: float = 5.0) -> tuple[ResourceSample, ...]:
        self._stop.set()
        self._thread.join(timeout)
        return self.snapshot()


def attach(handle, interval_s: float = DEFAULT_INTERVAL_S) -> Sampler:
    """Attach a sampler to a Running run handle; first sample lands within
    two intervals of attachment."""
    source = handle.stats_source()
    if source is None or not handle.is_running():
        raise RunNotRunning(f"run {handle.run_id} is not running")
    reader = CumulativeDeltaReader(source)
    return Sampler(reader, handle.is_running, interval_s).start()
