"""HTTP service over the benchmark core: registries, config generation, run
orchestration, evaluation, and meta analysis.

Configuration comes from arguments or environment variables:
HIVE_ADDR (bind host:port), HIVE_STORE (store root), HIVE_BACKEND
(local | container[:socket]), HIVE_WORKERS (run pool size).
"""
from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..configgen import (
    ParamGrid,
    count_combinations,
    expand_grid,
    render_config_file,
    validate_config,
)
from ..errors import AlreadyTerminal, MapbenchError, NotFound
from ..executor import ExecutionService, RunRequest
from ..executor.backends import backend_from_name
from ..meta import MetaQuery, RunFilter, convert_table, matrix, series, summary_plot_data
from ..pipeline import evaluate_run
from ..store import Store, new_id
from . import schemas as S

# MapbenchError code -> HTTP status. Unlisted codes are domain violations (422).
_STATUS_BY_CODE = {
    "not_found": 404,
    "output_missing": 404,
    "duplicate_name": 409,
    "conflicting_id": 409,
    "immutable_violation": 409,
    "already_terminal": 409,
    "illegal_transition": 409,
    "store_locked": 409,
    "backend_unavailable": 503,
}


def _api_error(status: int, code: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "details": details or {}},
    )


class AppState:
    def __init__(self, store_path: str, backend_name: str, workers: Optional[int]):
        self.store = Store(store_path)
        self.recovered = self.store.recover_interrupted()
        self.executor = ExecutionService(
            self.store, backend=backend_from_name(backend_name), workers=workers
        )
        self.eval_pool = ThreadPoolExecutor(max_workers=2)
        self.eval_jobs: dict[str, dict] = {}  # eval_id -> {"status", "error"?}
        self.eval_lock = threading.Lock()

    def close(self):
        self.eval_pool.shutdown(wait=False, cancel_futures=True)
        self.executor.shutdown(wait=False)
        self.store.close()


def create_app(
    store_path: Optional[str] = None,
    backend_name: Optional[str] = None,
    workers: Optional[int] = None,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    store_path = store_path or os.environ.get("HIVE_STORE", "./mapbench-store")
    backend_name = backend_name or os.environ.get("HIVE_BACKEND", "local")
    if workers is None and os.environ.get("HIVE_WORKERS"):
        workers = int(os.environ["HIVE_WORKERS"])

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.ctx = AppState(store_path, backend_name, workers)
        try:
            yield
        finally:
            app.state.ctx.close()

    app = FastAPI(title="mapbench", lifespan=lifespan)

    def ctx() -> AppState:
        return app.state.ctx

    @app.exception_handler(MapbenchError)
    async def mapbench_error_handler(request: Request, exc: MapbenchError):
        return _api_error(_STATUS_BY_CODE.get(exc.code, 422), exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        return _api_error(400, "validation_error", "request body invalid", details=exc.errors())

    # -- health -------------------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "recovered_runs": ctx().recovered}

    # -- registries -----------------------------------------------------------

    @app.post("/api/algorithms", status_code=201)
    def post_algorithm(body: S.AlgorithmIn):
        try:
            spec = body.to_model()
        except ValueError as exc:
            return _api_error(422, "validation_failure", str(exc))
        algo_id = ctx().store.register_algorithm(spec)
        return S.algorithm_out(ctx().store.get_algorithm(algo_id))

    @app.get("/api/algorithms")
    def get_algorithms():
        return {"items": [S.algorithm_out(a) for a in ctx().store.list_algorithms()]}

    @app.get("/api/algorithms/{algo_id:path}")
    def get_algorithm(algo_id: str):
        return S.algorithm_out(ctx().store.get_algorithm(algo_id))

    @app.post("/api/datasets", status_code=201)
    def post_dataset(body: S.DatasetIn):
        try:
            spec = body.to_model()
        except ValueError as exc:
            return _api_error(422, "validation_failure", str(exc))
        ds_id = ctx().store.register_dataset(spec)
        return S.dataset_out(ctx().store.get_dataset(ds_id))

    @app.get("/api/datasets")
    def get_datasets():
        return {"items": [S.dataset_out(d) for d in ctx().store.list_datasets()]}

    # -- configs --------------------------------------------------------------

    @app.post("/api/configs", status_code=201)
    def post_config(body: S.ConfigIn):
        store = ctx().store
        cfg = body.to_model(body.config_id or new_id())
        validate_config(cfg, store.get_algorithm(cfg.algorithm_id), store.get_dataset(cfg.dataset_id))
        config_id = store.put_config(cfg)
        return store.get_config(config_id).as_dict()

    @app.post("/api/configs/generate")
    def post_configs_generate(body: S.GridIn):
        store = ctx().store
        base = body.base.to_model("")
        algorithm = store.get_algorithm(base.algorithm_id)
        dataset = store.get_dataset(base.dataset_id)
        grid = ParamGrid(
            base=base,
            axes=tuple((a.name, tuple(a.values)) for a in body.axes),
            repeats=body.repeats,
        )
        if body.dry_run:
            # still validates axis values against the registered specs
            expand_grid(
                ParamGrid(base=base, axes=tuple((a.name, tuple(a.values[:1])) for a in body.axes)),
                algorithm,
                dataset,
            )
            return {"count": count_combinations(grid), "ids": [], "dry_run": True}
        configs = expand_grid(grid, algorithm, dataset)
        ids = store.put_configs(configs)
        return {"count": len(ids), "ids": ids, "dry_run": False}

    @app.get("/api/configs")
    def get_configs(
        algorithm_id: Optional[str] = None,
        dataset_id: Optional[str] = None,
        limit: int = Query(100, ge=1, le=1000),
        cursor: Optional[str] = None,
    ):
        items, next_cursor = ctx().store.list_configs(
            algorithm_id=algorithm_id, dataset_id=dataset_id, limit=limit, cursor=cursor
        )
        return {"items": [c.as_dict() for c in items], "next_cursor": next_cursor}

    @app.get("/api/configs/{config_id}")
    def get_config(config_id: str):
        return ctx().store.get_config(config_id).as_dict()

    @app.get("/api/configs/{config_id}/yaml", response_class=PlainTextResponse)
    def get_config_yaml(config_id: str):
        store = ctx().store
        cfg = store.get_config(config_id)
        return render_config_file(
            cfg, store.get_algorithm(cfg.algorithm_id), store.get_dataset(cfg.dataset_id)
        )

    # -- runs -------------------------------------------------------------------

    @app.post("/api/runs", status_code=202)
    def post_run(body: S.RunIn):
        handle = ctx().executor.submit(
            RunRequest(
                config_id=body.config_id,
                timeout_s=body.timeout_s,
                cpu_limit_cores=body.cpu_limit_cores,
                mem_limit_mb=body.mem_limit_mb,
                idempotency_key=body.idempotency_key,
            )
        )
        return {"run_id": handle.run_id}

    @app.get("/api/runs")
    def get_runs(
        algorithm_id: Optional[str] = None,
        dataset_id: Optional[str] = None,
        config_id: Optional[str] = None,
        state: Optional[str] = None,
        limit: int = Query(100, ge=1, le=1000),
        cursor: Optional[str] = None,
    ):
        items, next_cursor = ctx().store.list_runs(
            algorithm_id=algorithm_id,
            dataset_id=dataset_id,
            config_id=config_id,
            state=state,
            limit=limit,
            cursor=cursor,
        )
        return {"items": [r.as_dict() for r in items], "next_cursor": next_cursor}

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        record = ctx().store.get_run(run_id)
        out = record.as_dict()
        out["wall_time_s"] = record.wall_time_s
        out["transitions"] = [
            {"from_state": t["from_state"], "to_state": t["to_state"], "at": t["at"]}
            for t in ctx().store.run_transitions(run_id)
        ]
        return out

    @app.get("/api/runs/{run_id}/resources")
    def get_run_resources(run_id: str):
        store = ctx().store
        store.get_run(run_id)  # 404 for unknown id
        if store.has_profile(run_id):
            profile = store.get_profile(run_id)
            return {
                "run_id": run_id,
                "cpu_avg_cores": profile.cpu_avg_cores,
                "cpu_max_cores": profile.cpu_max_cores,
                "ram_max_mb": profile.ram_max_mb,
                "samples": [
                    {"t": s.t, "cpu_cores": s.cpu_cores, "rss_mb": s.rss_mb} for s in profile.samples
                ],
                "live": False,
            }
        try:
            handle = ctx().executor.handle(run_id)
        except NotFound:
            return {"run_id": run_id, "samples": [], "live": False}
        sampler = handle._sampler
        samples = sampler.snapshot() if sampler is not None else ()
        return {
            "run_id": run_id,
            "samples": [{"t": s.t, "cpu_cores": s.cpu_cores, "rss_mb": s.rss_mb} for s in samples],
            "live": True,
        }

    @app.get("/api/runs/{run_id}/trajectory", response_class=PlainTextResponse)
    def get_run_trajectory(run_id: str):
        record = ctx().store.get_run(run_id)
        if not record.trajectory_ref:
            raise NotFound(f"run {run_id} has no stored trajectory")
        return ctx().store.read_blob(record.trajectory_ref)

    @app.get("/api/runs/{run_id}/logs")
    def get_run_logs(run_id: str):
        ctx().store.get_run(run_id)
        return ctx().executor.read_logs(run_id)

    @app.post("/api/runs/{run_id}/cancel")
    def post_run_cancel(run_id: str):
        store = ctx().store
        try:
            handle = ctx().executor.handle(run_id)
        except NotFound:
            # no live handle (e.g. after restart): only a Pending run can be
            # cancelled purely through the store
            record = store.get_run(run_id)
            if record.state in ("Succeeded", "Failed", "TimedOut", "Cancelled"):
                raise AlreadyTerminal(f"run {run_id} is already {record.state}")
            record = store.record_run_transition(run_id, "Cancelled")
            return record.as_dict()
        return ctx().executor.cancel(handle).as_dict()

    # -- evaluations --------------------------------------------------------------

    @app.post("/api/evaluations", status_code=202)
    def post_evaluation(body: S.EvalIn):
        state = ctx()
        run = state.store.get_run(body.run_id)
        if run.state != "Succeeded":
            return _api_error(
                409, "illegal_transition", f"run {body.run_id} is {run.state}, not Succeeded"
            )
        eval_id = new_id()
        with state.eval_lock:
            state.eval_jobs[eval_id] = {"status": "pending"}

        def work():
            try:
                evaluate_run(
                    state.store,
                    body.run_id,
                    max_dt=body.eval_params.max_dt,
                    rpe_delta_m=body.eval_params.rpe_delta_m,
                    with_scale=body.eval_params.with_scale,
                    eval_id=eval_id,
                )
                with state.eval_lock:
                    state.eval_jobs[eval_id] = {"status": "done"}
            except Exception as exc:
                with state.eval_lock:
                    state.eval_jobs[eval_id] = {"status": "failed", "error": str(exc)}

        state.eval_pool.submit(work)
        return {"eval_id": eval_id}

    @app.get("/api/evaluations")
    def get_evaluations(run_id: Optional[str] = None):
        return {"items": [e.as_dict() for e in ctx().store.list_evals(run_id=run_id)]}

    @app.get("/api/evaluations/{eval_id}")
    def get_evaluation(eval_id: str):
        state = ctx()
        try:
            record = state.store.get_eval(eval_id)
        except NotFound:
            with state.eval_lock:
                job = state.eval_jobs.get(eval_id)
            if job is None:
                raise
            return {"eval_id": eval_id, "status": job["status"], "error": job.get("error")}
        out = record.as_dict()
        out["status"] = "done"
        return out

    @app.get("/api/evaluations/{eval_id}/series")
    def get_evaluation_series(eval_id: str):
        state = ctx()
        record = state.store.get_eval(eval_id)
        out = {}
        for key, ref in record.series_refs.items():
            out[key] = state.store.read_blob(ref)
        return out

    # -- meta ---------------------------------------------------------------------

    @app.post("/api/meta/series")
    def post_meta_series(body: S.MetaSeriesIn):
        q = MetaQuery(
            x_axis=body.x_axis,
            metric=body.metric,
            filter=RunFilter(
                algorithm_id=body.filter.algorithm_id,
                dataset_id=body.filter.dataset_id,
                mode=body.filter.mode,
                param_equals=dict(body.filter.param_equals),
            ),
            aggregate_repeats=body.aggregate_repeats,
            group_by=body.group_by,
        )
        if body.group_by is not None:
            return {"records": summary_plot_data(ctx().store, q)}
        table = series(ctx().store, q)
        if body.unit:
            table = convert_table(table, body.unit)
        return table.as_dict()

    @app.post("/api/meta/matrix")
    def post_meta_matrix(body: S.MetaMatrixIn):
        rows = [(r[0], r[1]) for r in body.rows]
        return matrix(ctx().store, rows=rows, cols=body.cols, aggregate_repeats=body.aggregate_repeats).as_dict()

    # -- export ----------------------------------------------------------------------

    @app.get("/api/export")
    def get_export():
        dest = Path(ctx().store.root) / f"export-{int(time.time())}.tar.gz"
        archive = ctx().store.export_archive(dest)
        return FileResponse(archive, media_type="application/gzip", filename=archive.name)

    # -- static UI ---------------------------------------------------------------------

    ui_dir = ui_dir or os.environ.get("MAPBENCH_UI_DIR") or str(
        Path(__file__).resolve().parents[3] / "frontend" / "dist"
    )
    if Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(
    addr: Optional[str] = None,
    store_path: Optional[str] = None,
    backend_name: Optional[str] = None,
    workers: Optional[int] = None,
) -> None:
    import uvicorn

    addr = addr or os.environ.get("HIVE_ADDR", "127.0.0.1:8080")
    host, _, port = addr.rpartition(":")
    app = create_app(store_path=store_path, backend_name=backend_name, workers=workers)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
