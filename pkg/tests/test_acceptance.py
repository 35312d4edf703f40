"""Acceptance gate: every top-level criterion as one test, each printing a
single PASS/FAIL line with the measured value next to its tolerance.
"""
import os
import signal
import subprocess
import sys
import textwrap
import time

import numpy as np
import psutil
import pytest

from conftest import random_rotation, random_trajectory
from oracles import oracle_ate, oracle_rpe

from mapbench.configgen import MappingConfig, ParamGrid, count_combinations, expand_grid, render_config_file
from mapbench.errors import StoreLocked
from mapbench.evaluation import compute_ate, compute_rpe
from mapbench.executor import ExecutionService, LocalProcessBackend, RunRequest
from mapbench.fixtures import line_dataset_spec, synth_algorithm_spec, write_line_groundtruth
from mapbench.meta import MetaQuery, convert_table, matrix, series
from mapbench.model import AlgorithmSpec, DatasetSpec, ParamSpec
from mapbench.monitor import ResourceProfile, ResourceSample
from mapbench.pipeline import evaluate_run
from mapbench.store import EvalRecord, Store, new_id
from mapbench.trajectory import Pose, Trajectory


_CAPTURE = None


@pytest.fixture(autouse=True)
def _acceptance_output(capfd):
    # Route criterion pass/fail lines past pytest's capture so they always
    # appear in the test log, not only on failure.
    global _CAPTURE
    _CAPTURE = capfd
    yield
    _CAPTURE = None


def check(name: str, ok: bool, detail: str = ""):
    line = f"[ACCEPTANCE] {'PASS' if ok else 'FAIL'}  {name}"
    if detail:
        line += f"  ({detail})"
    if _CAPTURE is not None:
        with _CAPTURE.disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)
    assert ok, line


def stats_dict(rmse: float) -> dict:
    return {"min": rmse, "max": rmse, "mean": rmse, "std": 0.0, "rmse": rmse, "count": 100}


def seeded_eval(store, run_id, ate_rmse):
    store.put_eval(
        EvalRecord(
            eval_id=new_id(),
            run_id=run_id,
            ate_stats=stats_dict(ate_rmse),
            rpe_stats=stats_dict(ate_rmse / 10),
            eval_params={},
            evaluated_at=time.time(),
            pairs_used=100,
            alignment={},
            series_refs={},
        )
    )


def finished_run(store, config_id, state="Succeeded"):
    run = store.create_run(config_id)
    store.record_run_transition(run.run_id, "Running")
    if state == "Succeeded":
        store.record_run_transition(run.run_id, "Succeeded", exit_code=0)
    else:
        store.record_run_transition(run.run_id, state, exit_code=1, failure_reason="seeded")
    return run


class TestGridArithmetic:
    def test_grid_80000_configs_under_60s_no_duplicates(self):
        algo = AlgorithmSpec(
            id="sweep/v1",
            name="sweep",
            version_tag="v1",
            image_ref="bench/sweep",
            modes=("monocular",),
            entry_script="/bin/true",
            params=tuple(ParamSpec(name=f"p{i}", kind="int", default=0) for i in range(6)),
        )
        base = MappingConfig(config_id="", algorithm_id=algo.id, mode="monocular", dataset_id="ds")
        axes = tuple(
            (f"p{i}", tuple(range(size))) for i, size in enumerate((10, 5, 10, 4, 4, 10))
        )
        grid = ParamGrid(base=base, axes=axes)
        start = time.monotonic()
        configs = expand_grid(grid, algo)
        rendered = [render_config_file(c, algo) for c in configs]
        elapsed = time.monotonic() - start
        n = count_combinations(grid)
        unique_ids = len({c.config_id for c in configs})
        unique_docs = len(set(rendered))
        ok = n == 80000 and len(configs) == 80000 and unique_ids == 80000 and unique_docs == 80000 and elapsed < 60
        check(
            "grid (10,5,10,4,4,10) -> exactly 80,000 unique configs rendered in < 60 s",
            ok,
            f"count={len(configs)} unique_ids={unique_ids} unique_docs={unique_docs} elapsed={elapsed:.1f}s",
        )


class TestAteRigidInvariance:
    def test_100_random_rigid_transforms(self, rng):
        worst = 0.0
        for _ in range(100):
            gt = random_trajectory(rng, n=60)
            R = random_rotation(rng)
            t = rng.standard_normal(3) * 5
            moved = Trajectory(
                samples=tuple(
                    (ts, Pose(t=tuple(R @ np.asarray(p.t) + t), q=p.q)) for ts, p in gt.samples
                )
            )
            _, stats, _, _ = compute_ate(moved, gt)
            worst = max(worst, stats.rmse)
        check("ATE rigid invariance: 100 random rigid transforms, rmse <= 1e-9", worst <= 1e-9, f"worst={worst:.2e}")


class TestOracleEquivalence:
    def test_200_random_pairs_within_1e9(self, rng):
        worst = 0.0
        for _ in range(200):
            gt = random_trajectory(rng, n=100, dt=0.05)
            R = random_rotation(rng)
            t = rng.standard_normal(3)
            est = Trajectory(
                samples=tuple(
                    (
                        ts,
                        Pose(
                            t=tuple(R @ np.asarray(p.t) + t + 0.01 * rng.standard_normal(3)),
                            q=p.q,
                        ),
                    )
                    for ts, p in gt.samples
                )
            )
            est_s = [(ts, p.t, p.q) for ts, p in est.samples]
            gt_s = [(ts, p.t, p.q) for ts, p in gt.samples]

            _, ate_stats, _, _ = compute_ate(est, gt, max_dt=0.02)
            ref_ate = oracle_ate(est_s, gt_s, max_dt=0.02)
            for key in ("min", "max", "mean", "std", "rmse"):
                worst = max(worst, abs(ate_stats.as_dict()[key] - ref_ate[key]))

            _, rpe_stats = compute_rpe(est, gt, max_dt=0.02, delta_m=1.0)
            ref_rpe = oracle_rpe(est_s, gt_s, max_dt=0.02, delta_m=1.0)
            for key in ("min", "max", "mean", "std", "rmse"):
                worst = max(worst, abs(rpe_stats.as_dict()[key] - ref_rpe[key]))
        check(
            "oracle equivalence: ATE+RPE stats vs independent brute force, 200 pairs, <= 1e-9",
            worst <= 1e-9,
            f"worst={worst:.2e}",
        )


class TestStatisticalPipeline:
    def test_end_to_end_sigma_recovery(self, tmp_path):
        start = time.monotonic()
        store = Store(tmp_path / "store")
        data_dir = write_line_groundtruth(tmp_path / "data", n_poses=2000, spacing_m=0.01, dt_s=0.05)
        algo_id = store.register_algorithm(synth_algorithm_spec())
        ds_id = store.register_dataset(line_dataset_spec(data_dir))
        service = ExecutionService(store, workers=2, monitor_interval_s=0.5)
        try:
            results = {}
            for sigma in (0.05, 0.0):
                cfg = MappingConfig(
                    config_id=new_id(),
                    algorithm_id=algo_id,
                    mode="monocular",
                    dataset_id=ds_id,
                    algo_params={"noise_sigma_m": sigma, "drift_per_m": 0.0, "seed": 11},
                )
                store.put_config(cfg)
                handle = service.submit(RunRequest(config_id=cfg.config_id, timeout_s=90))
                record = service.wait(handle)
                assert record.state == "Succeeded", record.failure_reason
                results[sigma] = evaluate_run(store, handle.run_id).ate_stats["rmse"]
        finally:
            service.shutdown(wait=False)
            store.close()
        elapsed = time.monotonic() - start
        target = 0.05 * np.sqrt(3.0)
        noisy_ok = 0.9 * target <= results[0.05] <= 1.1 * target
        clean_ok = results[0.0] <= 1e-9
        check(
            "pipeline: sigma=0.05 run -> ATE rmse in 0.05*sqrt(3)*[0.9,1.1]; sigma=0 -> <= 1e-9; < 2 min",
            noisy_ok and clean_ok and elapsed < 120,
            f"rmse(0.05)={results[0.05]:.4f} target={target:.4f} rmse(0)={results[0.0]:.2e} elapsed={elapsed:.0f}s",
        )


class TestMonitorCalibration:
    def run_profiled(self, tmp_path, tag, **params):
        store = Store(tmp_path / f"store-{tag}")
        data_dir = write_line_groundtruth(tmp_path / f"data-{tag}", n_poses=50)
        algo_id = store.register_algorithm(synth_algorithm_spec())
        ds_id = store.register_dataset(line_dataset_spec(data_dir))
        service = ExecutionService(store, workers=1, monitor_interval_s=0.5)
        try:
            cfg = MappingConfig(
                config_id=new_id(),
                algorithm_id=algo_id,
                mode="monocular",
                dataset_id=ds_id,
                algo_params=params,
            )
            store.put_config(cfg)
            handle = service.submit(RunRequest(config_id=cfg.config_id, timeout_s=60))
            record = service.wait(handle)
            assert record.state == "Succeeded", record.failure_reason
            profile = store.get_profile(handle.run_id)
            return profile.cpu_avg_cores, profile.cpu_max_cores, profile.ram_max_mb
        finally:
            service.shutdown(wait=False)
            store.close()

    def test_cpu_and_ram_calibration(self, tmp_path):
        cpu1, _, _ = self.run_profiled(tmp_path, "cpu1", cpu_burn_cores=1, duration_s=10.0)
        cpu2, _, _ = self.run_profiled(tmp_path, "cpu2", cpu_burn_cores=2, duration_s=10.0)
        _, _, ram = self.run_profiled(tmp_path, "ram", mem_touch_mb=200, duration_s=4.0)
        # two busy workers cannot exceed the machine's parallelism; on >= 2-core
        # hardware this is exactly the stated [1.6, 2.4] band
        avail = len(os.sched_getaffinity(0))
        expected2 = float(min(2, avail))
        ok1 = 0.8 <= cpu1 <= 1.2
        ok2 = 0.8 * expected2 <= cpu2 <= 1.2 * expected2
        ok3 = ram >= 200.0
        check(
            "monitor: 1 busy thread -> cpu_avg in [0.8,1.2]; 2 -> 2x that band (capped by core count); 200 MB touch -> ram_max >= 200",
            ok1 and ok2 and ok3,
            f"cpu1={cpu1:.2f} cpu2={cpu2:.2f} (cores={avail}, expected2={expected2:.0f}) ram={ram:.0f}MB",
        )


class TestFailureSemantics:
    def test_exit0_empty_trajectory_failed_and_feature_sweep_fixture(self, tmp_path):
        store = Store(tmp_path / "store")
        data_dir = write_line_groundtruth(tmp_path / "data", n_poses=50)
        synth_id = store.register_algorithm(synth_algorithm_spec())
        ds_id = store.register_dataset(line_dataset_spec(data_dir))

        # live part: exit code 0 + empty output must record Failed
        cfg = MappingConfig(
            config_id=new_id(),
            algorithm_id=synth_id,
            mode="monocular",
            dataset_id=ds_id,
            algo_params={"fail_mode": "empty_output"},
        )
        store.put_config(cfg)
        service = ExecutionService(store, workers=1, monitor_interval_s=0.5)
        try:
            record = service.wait(service.submit(RunRequest(config_id=cfg.config_id, timeout_s=30)))
        finally:
            service.shutdown(wait=False)
        live_ok = record.state == "Failed" and record.exit_code == 0

        # fixture part: feature-count sweep where the smallest budget always fails
        sweep_algo = store.register_algorithm(
            AlgorithmSpec(
                id="featvo/v1",
                name="featvo",
                version_tag="v1",
                image_ref="bench/featvo",
                modes=("rgbd",),
                entry_script="/bin/true",
                params=(ParamSpec(name="n_features", kind="int", default=1000, minimum=1),),
            )
        )
        seeded_rmse = 0.00807  # metres; reported as 0.807 cm
        for n_features, state, rmse in ((250, "Failed", None), (500, "Succeeded", seeded_rmse)):
            fcfg = MappingConfig(
                config_id=new_id(),
                algorithm_id=sweep_algo,
                mode="rgbd",
                dataset_id=ds_id,
                algo_params={"n_features": n_features},
            )
            store.put_config(fcfg)
            for _ in range(3):
                run = finished_run(store, fcfg.config_id, state)
                if rmse is not None:
                    seeded_eval(store, run.run_id, rmse)
        table = convert_table(
            series(store, MetaQuery(x_axis="n_features", metric="ate_rmse")), "cm"
        )
        store.close()
        row250, row500 = table.rows[0], table.rows[1]
        fixture_ok = (
            row250.x == 250
            and row250.all_failed
            and row250.failed_count == 3
            and row500.x == 500
            and row500.value == seeded_rmse * 100.0
        )
        check(
            "failure semantics: exit-0 empty trajectory -> Failed; sweep fixture: 250 all-failed, 500 -> 0.807 cm",
            live_ok and fixture_ok,
            f"live_state={record.state}/{record.exit_code} row250_failed={row250.failed_count} row500={row500.value}",
        )


class TestReportFidelity:
    def test_reference_matrix_cell(self, tmp_path):
        store = Store(tmp_path / "store")
        data_dir = write_line_groundtruth(tmp_path / "data", n_poses=50)
        algos = {}
        for name in ("featvo", "densevo"):
            algos[name] = store.register_algorithm(
                AlgorithmSpec(
                    id=f"{name}/v1",
                    name=name,
                    version_tag="v1",
                    image_ref=f"bench/{name}",
                    modes=("monocular",),
                    entry_script="/bin/true",
                )
            )
        ds_ids = {}
        for seq in ("MH_01", "MH_02"):
            spec = line_dataset_spec(data_dir, name=seq.lower())
            ds_ids[seq] = store.register_dataset(
                DatasetSpec(
                    id=seq.lower(),
                    name=seq.lower(),
                    sequence_name=seq,
                    data_path=spec.data_path,
                    groundtruth_path=spec.groundtruth_path,
                    topics=spec.topics,
                )
            )
        cells = {
            ("featvo", "MH_01"): (0.043, 1.36, 1.90, 978.0),
            ("featvo", "MH_02"): (0.052, 1.41, 2.02, 991.0),
            ("densevo", "MH_01"): (0.114, 2.30, 2.95, 2100.0),
        }
        for (name, seq), (rmse, cpu_avg, cpu_max, ram) in cells.items():
            cfg = MappingConfig(
                config_id=new_id(),
                algorithm_id=algos[name],
                mode="monocular",
                dataset_id=ds_ids[seq],
            )
            store.put_config(cfg)
            run = finished_run(store, cfg.config_id)
            seeded_eval(store, run.run_id, rmse)
            samples = [
                ResourceSample(t=1.0, cpu_cores=cpu_avg, rss_mb=ram),
                ResourceSample(t=2.0, cpu_cores=2 * cpu_avg - cpu_max, rss_mb=ram),
                ResourceSample(t=3.0, cpu_cores=cpu_max, rss_mb=ram),
            ]
            store.put_profile(ResourceProfile.from_samples(run.run_id, samples))
        m = matrix(
            store,
            rows=[(algos["featvo"], "monocular"), (algos["densevo"], "monocular")],
            cols=[ds_ids["MH_01"], ds_ids["MH_02"]],
        )
        store.close()
        cell = m.cells[0][0]
        other = m.cells[1][0]
        ok = (
            abs(cell.ate_rmse - 0.043) < 1e-12
            and cell.cpu_display() == "1.36/1.90"
            and abs(cell.ram_max - 978.0) < 1e-9
            and cell.best_rmse
            and not other.best_rmse
        )
        check(
            "report fidelity: matrix cell = (0.043 m, 1.36/1.90 cores, 978 MB) with best-RMSE flag",
            ok,
            f"cell=({cell.ate_rmse}, {cell.cpu_display()}, {cell.ram_max}) best={cell.best_rmse}",
        )


CRASH_SERVICE = textwrap.dedent(
    """
    import sys, time
    from mapbench.executor import ExecutionService, RunRequest
    from mapbench.store import Store

    store = Store(sys.argv[1])
    service = ExecutionService(store, workers=1, monitor_interval_s=0.5)
    handle = service.submit(RunRequest(config_id=sys.argv[2], timeout_s=120))
    while store.get_run(handle.run_id).state != "Running":
        time.sleep(0.05)
    while store.get_run(handle.run_id).sandbox_ref is None:
        time.sleep(0.05)
    print(handle.run_id, flush=True)
    time.sleep(300)
    """
)


class TestCrashRestart:
    def test_kill_mid_run_then_recover(self, tmp_path):
        root = tmp_path / "store"
        with Store(root) as store:
            data_dir = write_line_groundtruth(tmp_path / "data", n_poses=50)
            algo_id = store.register_algorithm(synth_algorithm_spec())
            ds_id = store.register_dataset(line_dataset_spec(data_dir))
            cfg = MappingConfig(
                config_id=new_id(),
                algorithm_id=algo_id,
                mode="monocular",
                dataset_id=ds_id,
                algo_params={"duration_s": 120.0},
            )
            store.put_config(cfg)

        proc = subprocess.Popen(
            [sys.executable, "-c", CRASH_SERVICE, str(root), cfg.config_id],
            stdout=subprocess.PIPE,
            env=dict(os.environ),
        )
        run_id = proc.stdout.readline().strip().decode()
        assert run_id

        # the store is exclusively locked while the service lives
        locked = False
        try:
            Store(root).close()
        except StoreLocked:
            locked = True

        proc.send_signal(signal.SIGKILL)
        proc.wait()

        with Store(root) as store:
            record = store.get_run(run_id)  # readable -> no torn records
            sandbox_pid = int(record.sandbox_ref.split(":")[1])
            orphan_before = psutil.pid_exists(sandbox_pid)
            recovered = store.recover_interrupted()
            record = store.get_run(run_id)
            transitions = [t["to_state"] for t in store.run_transitions(run_id)]
        time.sleep(0.3)
        orphan_after = psutil.pid_exists(sandbox_pid) and psutil.Process(sandbox_pid).status() != psutil.STATUS_ZOMBIE
        ok = (
            locked
            and orphan_before
            and not orphan_after
            and run_id in recovered
            and record.state == "Failed"
            and record.sandbox_ref is None
            and transitions == ["Pending", "Running", "Failed"]
        )
        check(
            "crash/restart: SIGKILL mid-run -> store intact, run finalized on restart, no orphan sandboxes",
            ok,
            f"state={record.state} transitions={transitions} orphan_killed={not orphan_after}",
        )
