"""Run orchestration: workspace prep, sandbox lifecycle, timeout, output collection.

submit() is non-blocking; a bounded worker pool executes runs concurrently.
Each run owns its workspace exclusively. Success requires exit code 0 AND a
parseable, non-empty output trajectory.
"""
from __future__ import annotations

import os
import shutil
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .. import monitor as monitor_mod
from ..configgen import render_config_file, validate_config
from ..errors import (
    AlreadyTerminal,
    BackendUnavailable,
    MalformedTrajectory,
    MapbenchError,
    NotFound,
    OutputMissing,
    WorkspaceSetupFailed,
)
from ..monitor import ResourceProfile
from ..store import Store, RunRecord, TERMINAL_STATES
from ..trajectory import Trajectory, parse_tum
from .backends import LocalProcessBackend, Sandbox, SandboxBackend, SandboxTimeout

DEFAULT_TIMEOUT_S = 600.0


def default_worker_count() -> int:
    return max(1, (os.cpu_count() or 4) // 4)


@dataclass(frozen=True)
class RunRequest:
    config_id: str
    timeout_s: float = DEFAULT_TIMEOUT_S
    cpu_limit_cores: Optional[float] = None
    mem_limit_mb: Optional[int] = None
    run_id: Optional[str] = None
    idempotency_key: Optional[str] = None

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


class RunHandle:
    """Live view of one submitted run; also the monitor attachment point."""

    def __init__(self, run_id: str, request: RunRequest, workspace: Path, service: "ExecutionService"):
        self.run_id = run_id
        self.request = request
        self.workspace = workspace
        self._service = service
        self._sandbox: Optional[Sandbox] = None
        self._sampler = None
        self.lock = threading.RLock()
        self.done = threading.Event()
        self.cancel_requested = threading.Event()

    def record(self) -> RunRecord:
        return self._service.store.get_run(self.run_id)

    def is_running(self) -> bool:
        return not self.done.is_set() and self._sandbox is not None and self._sandbox.is_alive()

    def stats_source(self):
        if self._sandbox is None:
            return None
        return self._sandbox.stats_source()


class ExecutionService:
    def __init__(
        self,
        store: Store,
        backend: Optional[SandboxBackend] = None,
        workers: Optional[int] = None,
        monitor_interval_s: float = 1.0,
    ):
        self.store = store
        self.backend = backend or LocalProcessBackend()
        self.monitor_interval_s = monitor_interval_s
        self._pool = ThreadPoolExecutor(max_workers=workers or default_worker_count())
        self._handles: dict[str, RunHandle] = {}
        self._lock = threading.Lock()

    # -- public API ---------------------------------------------------------

    def submit(self, req: RunRequest) -> RunHandle:
        cfg = self.store.get_config(req.config_id)
        algorithm = self.store.get_algorithm(cfg.algorithm_id)
        dataset = self.store.get_dataset(cfg.dataset_id)
        validate_config(cfg, algorithm, dataset)
        if not self.backend.available():
            raise BackendUnavailable("sandbox backend unreachable")
        run = self.store.create_run(
            req.config_id, run_id=req.run_id, idempotency_key=req.idempotency_key
        )
        with self._lock:
            existing = self._handles.get(run.run_id)
            if existing is not None:
                return existing
        workspace = self._prepare_workspace(run.run_id, cfg, algorithm, dataset)
        handle = RunHandle(run.run_id, req, workspace, self)
        with self._lock:
            self._handles[run.run_id] = handle
        self._pool.submit(self._execute, handle, algorithm)
        return handle

    def wait(self, handle: RunHandle, poll_interval_s: float = 0.2) -> RunRecord:
        while not handle.done.wait(poll_interval_s):
            pass
        return handle.record()

    def cancel(self, handle: RunHandle) -> RunRecord:
        with handle.lock:
            record = handle.record()
            if record.state in TERMINAL_STATES:
                raise AlreadyTerminal(f"run {handle.run_id} is already {record.state}")
            handle.cancel_requested.set()
            if record.state == "Pending" and handle._sandbox is None:
                self.store.record_run_transition(handle.run_id, "Cancelled")
                handle.done.set()
                return handle.record()
            if handle._sandbox is not None:
                handle._sandbox.kill()
        handle.done.wait(timeout=10.0)
        return handle.record()

    def handle(self, run_id: str) -> RunHandle:
        with self._lock:
            h = self._handles.get(run_id)
        if h is None:
            raise NotFound(f"no live handle for run {run_id}")
        return h

    def collect_outputs(self, run_id: str) -> tuple[Trajectory, dict]:
        record = self.store.get_run(run_id)
        if record.state not in TERMINAL_STATES:
            raise MapbenchError(f"run {run_id} not terminal yet")
        logs = self.read_logs(run_id)
        if not record.trajectory_ref:
            raise OutputMissing(f"run {run_id} produced no trajectory")
        text = self.store.read_blob(record.trajectory_ref)
        try:
            return parse_tum(text), logs
        except MapbenchError as exc:
            raise MalformedTrajectory(str(exc)) from None

    def read_logs(self, run_id: str) -> dict:
        logs = {}
        for name in ("stdout.log", "stderr.log"):
            try:
                logs[name] = self.store.read_blob(f"blobs/{run_id}/{name}")
            except NotFound:
                logs[name] = ""
        return logs

    def shutdown(self, wait: bool = True) -> None:
        self._pool.shutdown(wait=wait, cancel_futures=True)

    # -- internals ------------------------------------------------------------

    def _prepare_workspace(self, run_id: str, cfg, algorithm, dataset) -> Path:
        try:
            workspace = self.store.workspace_root() / run_id
            workspace.mkdir(parents=True, exist_ok=False)
            (workspace / "output").mkdir()
            (workspace / "config.yaml").write_text(render_config_file(cfg, algorithm, dataset))
            data_path = Path(dataset.data_path)
            if not data_path.exists():
                raise WorkspaceSetupFailed(f"dataset path {data_path} missing")
            (workspace / "dataset").symlink_to(data_path, target_is_directory=data_path.is_dir())
            return workspace
        except OSError as exc:
            raise WorkspaceSetupFailed(str(exc)) from None

    def _execute(self, handle: RunHandle, algorithm) -> None:
        store = self.store
        sandbox = None
        samples = ()
        final_state = "Failed"
        exit_code: Optional[int] = None
        reason: Optional[str] = None
        trajectory_ref = None
        try:
            with handle.lock:
                if handle.cancel_requested.is_set():
                    return
                sandbox = self.backend.create(
                    handle.workspace,
                    image_ref=algorithm.image_ref,
                    entry_script=algorithm.entry_script,
                    cpu_limit_cores=handle.request.cpu_limit_cores,
                    mem_limit_mb=handle.request.mem_limit_mb,
                )
                handle._sandbox = sandbox
                store.record_run_transition(handle.run_id, "Running")
                sandbox.start()
                store.set_run_fields(handle.run_id, sandbox_ref=sandbox.ref())
            try:
                handle._sampler = monitor_mod.attach(handle, self.monitor_interval_s)
            except MapbenchError:
                handle._sampler = None  # sandbox exited before the first sample
            timed_out = False
            try:
                exit_code = sandbox.wait(handle.request.timeout_s)
            except SandboxTimeout:
                timed_out = True
                sandbox.kill()
            if handle._sampler is not None:
                samples = handle._sampler.stop()
            self._archive_logs(handle)
            trajectory_ref, parse_error = self._archive_trajectory(handle)
            if handle.cancel_requested.is_set():
                final_state, reason = "Cancelled", "cancelled by user"
            elif timed_out:
                final_state, reason = "TimedOut", f"exceeded {handle.request.timeout_s} s"
            elif exit_code != 0:
                final_state, reason = "Failed", f"exit code {exit_code}"
            elif trajectory_ref is None:
                final_state, reason = "Failed", parse_error or "missing trajectory output"
            else:
                final_state, reason = "Succeeded", None
        except Exception as exc:  # backend/storage faults surface as run failure
            final_state, reason = "Failed", f"{type(exc).__name__}: {exc}"
        finally:
            try:
                if trajectory_ref and final_state == "Succeeded":
                    store.set_run_fields(handle.run_id, trajectory_ref=trajectory_ref)
                elif trajectory_ref:
                    # keep whatever partial output exists (timeouts, failures)
                    store.set_run_fields(handle.run_id, trajectory_ref=trajectory_ref)
                record = store.get_run(handle.run_id)
                if record.state == "Running":
                    store.record_run_transition(
                        handle.run_id, final_state, exit_code=exit_code, failure_reason=reason
                    )
                if samples:
                    store.put_profile(ResourceProfile.from_samples(handle.run_id, samples))
                if sandbox is not None:
                    sandbox.remove()
                store.set_run_fields(handle.run_id, sandbox_ref=None)
                if final_state == "Succeeded":
                    shutil.rmtree(handle.workspace, ignore_errors=True)
            finally:
                handle.done.set()

    def _archive_logs(self, handle: RunHandle) -> None:
        for name in ("stdout.log", "stderr.log"):
            path = handle.workspace / "output" / name
            if path.exists():
                self.store.write_blob(handle.run_id, name, path.read_text(errors="replace"))

    def _archive_trajectory(self, handle: RunHandle) -> tuple[Optional[str], Optional[str]]:
        path = handle.workspace / "output" / "trajectory.tum"
        if not path.exists():
            return None, "missing trajectory output"
        text = path.read_text(errors="replace")
        try:
            traj = parse_tum(text)
        except MapbenchError as exc:
            ref = self.store.write_blob(handle.run_id, "trajectory.invalid.tum", text)
            if not text.strip():
                return None, "empty trajectory"
            return None, f"malformed trajectory: {exc}"
        ref = self.store.write_blob(handle.run_id, "trajectory.tum", text)
        return ref, None
