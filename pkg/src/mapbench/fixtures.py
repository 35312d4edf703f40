"""Ready-made registry entries for the bundled synthetic workload, plus
straight-line ground-truth generation. Used by tests, the demo seeding
command, and anyone who wants to exercise the pipeline without a real
algorithm image.
"""
from __future__ import annotations

from pathlib import Path

from .executor.synth_workload import script_path
from .model import AlgorithmSpec, DatasetSpec, ParamSpec


def synth_algorithm_spec(version_tag: str = "v1") -> AlgorithmSpec:
    return AlgorithmSpec(
        id="",
        name="synthetic",
        version_tag=version_tag,
        image_ref="mapbench/synthetic",
        modes=("monocular", "rgbd"),
        entry_script=script_path(),
        params=(
            ParamSpec(name="noise_sigma_m", kind="float", default=0.0, minimum=0.0, maximum=10.0),
            ParamSpec(name="drift_per_m", kind="float", default=0.0, minimum=0.0, maximum=1.0),
            ParamSpec(name="cpu_burn_cores", kind="int", default=0, minimum=0, maximum=64),
            ParamSpec(name="mem_touch_mb", kind="int", default=0, minimum=0, maximum=65536),
            ParamSpec(name="duration_s", kind="float", default=0.0, minimum=0.0, maximum=3600.0),
            ParamSpec(name="seed", kind="int", default=0, minimum=0),
            ParamSpec(
                name="fail_mode",
                kind="enum",
                default="none",
                choices=("none", "empty_output", "no_output", "exit_error"),
            ),
        ),
    )


def write_line_groundtruth(
    directory: str | Path,
    n_poses: int = 2000,
    spacing_m: float = 0.01,
    dt_s: float = 0.05,
) -> Path:
    """Straight-line ground truth along +x; returns the dataset directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["# synthetic straight-line ground truth"]
    for i in range(n_poses):
        lines.append(f"{i * dt_s:.6f} {i * spacing_m:.9f} 0.000000000 0.000000000 0 0 0 1")
    (directory / "groundtruth.tum").write_text("\n".join(lines) + "\n")
    return directory


def line_dataset_spec(data_dir: str | Path, name: str = "synthetic-line") -> DatasetSpec:
    data_dir = Path(data_dir)
    return DatasetSpec(
        id="",
        name=name,
        sequence_name="line",
        data_path=str(data_dir),
        groundtruth_path=str(data_dir / "groundtruth.tum"),
        topics=("/synthetic/pose",),
    )
