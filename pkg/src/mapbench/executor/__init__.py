from .backends import ContainerBackend, LocalProcessBackend, SandboxBackend
from .runner import ExecutionService, RunHandle, RunRequest

__all__ = [
    "ContainerBackend",
    "ExecutionService",
    "LocalProcessBackend",
    "RunHandle",
    "RunRequest",
    "SandboxBackend",
]
