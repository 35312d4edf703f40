"""Synthetic mapping workload: the bundled stand-in for a real algorithm image.

Runs under the sandbox contract: invoked as `<script> /work/config.yaml`,
reads ground truth from dataset/groundtruth.tum next to the config, writes
output/trajectory.tum. Emits the ground truth perturbed by iid Gaussian noise
and linear-in-distance drift, burns CPU with child processes, and touches a
configurable amount of resident memory. Deterministic output for a fixed seed.

Recognized parameters (algorithm or dataset params):
    noise_sigma_m, drift_per_m, cpu_burn_cores, mem_touch_mb, duration_s,
    seed, fail_mode (none | empty_output | no_output | exit_error)
"""
from __future__ import annotations

import multiprocessing
import sys
import time
from pathlib import Path


def _burn(stop_at: float) -> None:
    x = 1.000001
    while time.time() < stop_at:
        x = x * x % 1e9 + 1.000001


def _touch_memory(mb: int) -> bytearray:
    buf = bytearray(mb * 1024 * 1024)
    for i in range(0, len(buf), 4096):
        buf[i] = 1
    return buf


def synth_trajectory(gt_text: str, noise_sigma_m: float, drift_per_m: float, seed: int) -> str:
    import numpy as np

    stamps = []
    positions = []
    quats = []
    for line in gt_text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        stamps.append(float(fields[0]))
        positions.append([float(v) for v in fields[1:4]])
        quats.append([float(v) for v in fields[4:8]])
    pos = np.array(positions)
    rng = np.random.RandomState(seed)
    est = pos + rng.normal(0.0, noise_sigma_m, size=pos.shape) if noise_sigma_m > 0 else pos.copy()
    if drift_per_m:
        dist = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pos, axis=0), axis=1))])
        est[:, 0] += drift_per_m * dist
    lines = []
    for ts, p, q in zip(stamps, est, quats):
        fields = (ts, p[0], p[1], p[2], *q)
        lines.append(" ".join(f"{v:.9f}" for v in fields))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    import yaml

    argv = argv if argv is not None else sys.argv[1:]
    if not argv:
        print("usage: synth_workload <config.yaml>", file=sys.stderr)
        return 2
    config_path = Path(argv[0])
    work = config_path.parent
    doc = yaml.safe_load(config_path.read_text())
    params: dict = {}
    params.update(doc.get("dataset", {}).get("params") or {})
    params.update(doc.get("algorithm", {}).get("params") or {})

    noise_sigma_m = float(params.get("noise_sigma_m", 0.0))
    drift_per_m = float(params.get("drift_per_m", 0.0))
    cpu_burn_cores = int(params.get("cpu_burn_cores", 0))
    mem_touch_mb = int(params.get("mem_touch_mb", 0))
    duration_s = float(params.get("duration_s", 0.0))
    seed = int(params.get("seed", 0))
    fail_mode = str(params.get("fail_mode", "none"))

    gt_path = work / "dataset" / "groundtruth.tum"
    try:
        gt_text = gt_path.read_text()
    except OSError as exc:
        print(f"cannot read ground truth {gt_path}: {exc}", file=sys.stderr)
        return 1

    buf = _touch_memory(mem_touch_mb) if mem_touch_mb else None

    burners = []
    stop_at = time.time() + duration_s
    for _ in range(cpu_burn_cores):
        p = multiprocessing.Process(target=_burn, args=(stop_at,), daemon=True)
        p.start()
        burners.append(p)
    if duration_s:
        time.sleep(max(0.0, stop_at - time.time()))
    for p in burners:
        p.join()
    if buf is not None:
        buf[0] = buf[-1]  # keep the allocation resident until the end

    if fail_mode == "exit_error":
        print("synthetic failure requested", file=sys.stderr)
        return 3
    out_dir = work / "output"
    out_dir.mkdir(exist_ok=True)
    if fail_mode == "no_output":
        return 0
    if fail_mode == "empty_output":
        (out_dir / "trajectory.tum").write_text("")
        return 0
    (out_dir / "trajectory.tum").write_text(
        synth_trajectory(gt_text, noise_sigma_m, drift_per_m, seed)
    )
    return 0


def script_path() -> str:
    """Filesystem path of this script, for registering as an entry_script."""
    return str(Path(__file__).resolve())


if __name__ == "__main__":
    sys.exit(main())
