"""Pluggable sandbox backends with uniform create/start/wait/stats/remove semantics.

Two implementations: a local-process sandbox (always available, best-effort
resource limits) and an OCI container runtime driven over its local-socket
HTTP API. Callers cannot tell them apart except through `capabilities`.
"""
from __future__ import annotations

import os
import signal
import subprocess
import sys
import threading
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional

from ..errors import BackendUnavailable
from ..monitor import ProcessTreeSource, SampleSource, SourceGone


class SandboxTimeout(Exception):
    """Raised by Sandbox.wait when the deadline passes; the caller kills the sandbox."""


class Sandbox(ABC):
    @abstractmethod
    def start(self) -> None: ...

    @abstractmethod
    def wait(self, timeout_s: float) -> int:
        """Block until exit; returns exit code or raises SandboxTimeout."""

    @abstractmethod
    def kill(self) -> None: ...

    @abstractmethod
    def remove(self) -> None: ...

    @abstractmethod
    def is_alive(self) -> bool: ...

    @abstractmethod
    def stats_source(self) -> SampleSource: ...

    @abstractmethod
    def ref(self) -> str:
        """Durable reference persisted for crash recovery."""


class SandboxBackend(ABC):
    capabilities: dict = {"supports_resource_limits": False, "supports_stats_endpoint": False}

    @abstractmethod
    def available(self) -> bool: ...

    @abstractmethod
    def create(
        self,
        workspace: Path,
        image_ref: str,
        entry_script: str,
        cpu_limit_cores: Optional[float] = None,
        mem_limit_mb: Optional[int] = None,
    ) -> Sandbox: ...

    def live_count(self) -> int:
        return 0


class _LocalSandbox(Sandbox):
    def __init__(self, workspace: Path, entry_script: str, mem_limit_mb: Optional[int], owner: "LocalProcessBackend"):
        self._workspace = workspace
        self._entry = entry_script
        self._mem_limit_mb = mem_limit_mb
        self._owner = owner
        self._proc: Optional[subprocess.Popen] = None
        self._removed = False

    def start(self) -> None:
        config_path = self._workspace / "config.yaml"
        output = self._workspace / "output"
        output.mkdir(exist_ok=True)
        if self._entry.endswith(".py"):
            cmd = [sys.executable, self._entry, str(config_path)]
        else:
            cmd = [self._entry, str(config_path)]
        mem_limit = self._mem_limit_mb

        def limit_resources():
            os.setsid()  # own process group so kill() reaps burner children too
            if mem_limit:
                import resource

                limit = mem_limit * 1024 * 1024
                resource.setrlimit(resource.RLIMIT_AS, (limit, limit))

        self._proc = subprocess.Popen(
            cmd,
            cwd=self._workspace,
            stdout=open(output / "stdout.log", "wb"),
            stderr=open(output / "stderr.log", "wb"),
            preexec_fn=limit_resources,
            env={**os.environ, "MAPBENCH_WORK": str(self._workspace)},
        )

    def wait(self, timeout_s: float) -> int:
        assert self._proc is not None
        try:
            return self._proc.wait(timeout=timeout_s)
        except subprocess.TimeoutExpired:
            raise SandboxTimeout(f"sandbox exceeded {timeout_s} s") from None

    def kill(self) -> None:
        if self._proc is None or self._proc.poll() is not None:
            return
        try:
            os.killpg(self._proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass

    def remove(self) -> None:
        self.kill()
        if not self._removed:
            self._removed = True
            self._owner._forget(self)

    def is_alive(self) -> bool:
        return self._proc is not None and self._proc.poll() is None

    def stats_source(self) -> SampleSource:
        if self._proc is None:
            raise SourceGone("sandbox not started")
        return ProcessTreeSource(self._proc.pid)

    def ref(self) -> str:
        if self._proc is None:
            return "local:unstarted"
        try:
            import psutil

            created = psutil.Process(self._proc.pid).create_time()
        except Exception:
            created = 0.0
        return f"local:{self._proc.pid}:{created}"


class LocalProcessBackend(SandboxBackend):
    """Runs the entry script as a child process under the /work layout."""

    capabilities = {"supports_resource_limits": True, "supports_stats_endpoint": False}

    def __init__(self):
        self._live: set[_LocalSandbox] = set()
        self._lock = threading.Lock()

    def available(self) -> bool:
        return True

    def create(self, workspace, image_ref, entry_script, cpu_limit_cores=None, mem_limit_mb=None) -> Sandbox:
        sandbox = _LocalSandbox(workspace, entry_script, mem_limit_mb, owner=self)
        with self._lock:
            self._live.add(sandbox)
        return sandbox

    def _forget(self, sandbox: "_LocalSandbox") -> None:
        with self._lock:
            self._live.discard(sandbox)

    def live_count(self) -> int:
        with self._lock:
            return sum(1 for s in self._live if s.is_alive())


class _ContainerStatsSource:
    """Reads cumulative cpu ns and resident bytes from the runtime stats endpoint."""

    def __init__(self, client, container_id: str):
        self._client = client
        self._id = container_id

    def read(self):
        import httpx

        try:
            resp = self._client.get(f"/containers/{self._id}/stats", params={"stream": "false"})
        except httpx.HTTPError as exc:
            raise SourceGone(str(exc)) from None
        if resp.status_code != 200:
            raise SourceGone(f"stats endpoint returned {resp.status_code}")
        data = resp.json()
        cpu_ns = data.get("cpu_stats", {}).get("cpu_usage", {}).get("total_usage", 0)
        mem = data.get("memory_stats", {})
        usage = mem.get("usage", 0)
        # exclude reclaimable page cache when the runtime reports it
        cache = mem.get("stats", {}).get("inactive_file", mem.get("stats", {}).get("cache", 0))
        return cpu_ns / 1e9, max(0, usage - cache)


class _ContainerSandbox(Sandbox):
    def __init__(self, client, container_id: str):
        self._client = client
        self._id = container_id
        self._removed = False

    def start(self) -> None:
        resp = self._client.post(f"/containers/{self._id}/start")
        if resp.status_code not in (204, 304):
            raise BackendUnavailable(f"start failed: {resp.status_code} {resp.text}")

    def wait(self, timeout_s: float) -> int:
        import httpx

        try:
            resp = self._client.post(f"/containers/{self._id}/wait", timeout=timeout_s)
        except httpx.TimeoutException:
            raise SandboxTimeout(f"container exceeded {timeout_s} s") from None
        return int(resp.json().get("StatusCode", -1))

    def kill(self) -> None:
        self._client.post(f"/containers/{self._id}/kill")

    def remove(self) -> None:
        if not self._removed:
            self._removed = True
            self._client.delete(f"/containers/{self._id}", params={"force": "true"})

    def is_alive(self) -> bool:
        resp = self._client.get(f"/containers/{self._id}/json")
        if resp.status_code != 200:
            return False
        return bool(resp.json().get("State", {}).get("Running"))

    def stats_source(self) -> SampleSource:
        return _ContainerStatsSource(self._client, self._id)

    def ref(self) -> str:
        return f"container:{self._id}"


class ContainerBackend(SandboxBackend):
    """OCI runtime over its local-socket HTTP API (Docker-compatible)."""

    capabilities = {"supports_resource_limits": True, "supports_stats_endpoint": True}

    def __init__(self, socket_path: str = "/var/run/docker.sock"):
        self.socket_path = socket_path
        self._client = None

    def _http(self):
        if self._client is None:
            import httpx

            self._client = httpx.Client(
                transport=httpx.HTTPTransport(uds=self.socket_path),
                base_url="http://runtime",
                timeout=30.0,
            )
        return self._client

    def available(self) -> bool:
        if not os.path.exists(self.socket_path):
            return False
        try:
            return self._http().get("/_ping").status_code == 200
        except Exception:
            return False

    def create(self, workspace, image_ref, entry_script, cpu_limit_cores=None, mem_limit_mb=None) -> Sandbox:
        if not self.available():
            raise BackendUnavailable(f"runtime socket {self.socket_path} unreachable")
        host_config = {
            "Binds": [f"{workspace}:/work", f"{workspace / 'dataset'}:/work/dataset:ro"],
        }
        if mem_limit_mb:
            host_config["Memory"] = mem_limit_mb * 1024 * 1024
        if cpu_limit_cores:
            host_config["NanoCpus"] = int(cpu_limit_cores * 1e9)
        body = {
            "Image": image_ref,
            "Cmd": [entry_script, "/work/config.yaml"],
            "WorkingDir": "/work",
            "HostConfig": host_config,
        }
        resp = self._http().post("/containers/create", json=body)
        if resp.status_code != 201:
            raise BackendUnavailable(f"create failed: {resp.status_code} {resp.text}")
        return _ContainerSandbox(self._http(), resp.json()["Id"])


def backend_from_name(name: str) -> SandboxBackend:
    if name in ("local", ""):
        return LocalProcessBackend()
    if name.startswith("container"):
        _, _, sock = name.partition(":")
        return ContainerBackend(sock or "/var/run/docker.sock")
    raise BackendUnavailable(f"unknown backend {name!r}")
