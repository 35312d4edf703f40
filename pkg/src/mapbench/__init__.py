"""mapbench: orchestrate, monitor, and evaluate sandboxed mapping benchmark runs."""

__version__ = "0.1.0"
