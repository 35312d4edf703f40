"""Evaluation pipeline: load a run's stored trajectory, score it against the
dataset's ground truth, and persist the result (summary stats + per-pose
series + plot records).
"""
from __future__ import annotations

import time
from typing import Optional

from .errors import MapbenchError, NotFound
from .evaluation import EvalResult, compute_ate, compute_rpe, plot_series
from .store import EvalRecord, Store, new_id
from .trajectory import parse_tum


def evaluate_run(
    store: Store,
    run_id: str,
    max_dt: float = 0.02,
    rpe_delta_m: float = 1.0,
    with_scale: bool = False,
    eval_id: Optional[str] = None,
) -> EvalRecord:
    """Compute and persist ATE/RPE for a Succeeded run. Stats are stored in SI
    meters; display conversion happens in the reporting layer."""
    run = store.get_run(run_id)
    if not run.trajectory_ref:
        raise NotFound(f"run {run_id} has no stored trajectory")
    estimate = parse_tum(store.read_blob(run.trajectory_ref))
    cfg = store.get_config(run.config_id)
    dataset = store.get_dataset(cfg.dataset_id)
    try:
        groundtruth = parse_tum(open(dataset.groundtruth_path).read())
    except OSError as exc:
        raise NotFound(f"ground truth for dataset {dataset.id}: {exc}") from None

    ate_series, ate_stats, alignment, aligned = compute_ate(
        estimate, groundtruth, max_dt=max_dt, with_scale=with_scale, run_id=run_id
    )
    rpe_series, rpe_stats = compute_rpe(estimate, groundtruth, max_dt=max_dt, delta_m=rpe_delta_m)
    result = EvalResult(
        run_id=run_id,
        ate_series=ate_series,
        ate_stats=ate_stats,
        rpe_series=rpe_series,
        rpe_stats=rpe_stats,
        alignment=alignment,
        aligned_estimate=aligned,
        groundtruth=groundtruth,
        pairs_used=len(ate_series.values),
    )

    eval_id = eval_id or new_id()
    series_refs = {
        "plots": store.write_blob(run_id, f"eval-{eval_id}.plots.jsonl", plot_series(result).to_jsonl()),
        "ate": store.write_blob(
            run_id,
            f"eval-{eval_id}.ate.jsonl",
            "\n".join(f'{{"t": {t}, "error": {e}}}' for t, e in ate_series.values) + "\n",
        ),
        "rpe": store.write_blob(
            run_id,
            f"eval-{eval_id}.rpe.jsonl",
            "\n".join(f'{{"t": {t}, "error": {e}}}' for t, e in rpe_series.values) + "\n",
        ),
    }
    record = EvalRecord(
        eval_id=eval_id,
        run_id=run_id,
        ate_stats=ate_stats.as_dict(),
        rpe_stats=rpe_stats.as_dict(),
        eval_params={"max_dt": max_dt, "rpe_delta_m": rpe_delta_m, "with_scale": with_scale},
        evaluated_at=time.time(),
        pairs_used=result.pairs_used,
        alignment={"R": alignment.R, "t": alignment.t, "s": alignment.s},
        series_refs=series_refs,
    )
    store.put_eval(record)
    return record
