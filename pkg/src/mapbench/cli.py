"""Command-line front door mirroring the HTTP API.

Two modes:
  remote   --addr host:port (or HIVE_ADDR): talks to a running service.
  embedded --store PATH (or HIVE_STORE): starts the app in-process against the
           store directly; no networking. Same API surface either way.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""
from __future__ import annotations

import json
import os
import sys
import time

import click
import httpx
import yaml


class CliError(click.ClickException):
    exit_code = 1


def _make_client(ctx: click.Context) -> httpx.Client:
    addr = ctx.obj.get("addr") or os.environ.get("HIVE_ADDR")
    store = ctx.obj.get("store") or os.environ.get("HIVE_STORE")
    if addr and not ctx.obj.get("store"):
        return httpx.Client(base_url=f"http://{addr}", timeout=60.0)
    if not store:
        raise click.UsageError("need --addr (remote) or --store (embedded); or set HIVE_ADDR / HIVE_STORE")
    from fastapi.testclient import TestClient

    from .service import create_app

    client = TestClient(
        create_app(
            store_path=store,
            backend_name=ctx.obj.get("backend") or os.environ.get("HIVE_BACKEND") or "local",
            workers=ctx.obj.get("workers"),
        )
    )
    client.__enter__()
    ctx.call_on_close(lambda: client.__exit__(None, None, None))
    return client


def _request(ctx, method: str, path: str, **kwargs):
    client = ctx.obj.get("client")
    if client is None:
        client = ctx.obj["client"] = _make_client(ctx)
    try:
        resp = client.request(method, path, **kwargs)
    except httpx.HTTPError as exc:
        raise CliError(f"cannot reach service: {exc}")
    if resp.status_code >= 400:
        try:
            body = resp.json()
            raise CliError(f"{body.get('code', resp.status_code)}: {body.get('message', '')}")
        except (ValueError, KeyError):
            raise CliError(f"HTTP {resp.status_code}: {resp.text[:200]}")
    return resp


def _emit(ctx, payload, table_fn=None):
    if ctx.obj.get("json") or table_fn is None:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        click.echo(table_fn(payload))


def _table(rows: list[dict], columns: list[str]) -> str:
    if not rows:
        return "(empty)"
    widths = {c: max(len(c), *(len(str(r.get(c, ""))) for r in rows)) for c in columns}
    lines = ["  ".join(c.ljust(widths[c]) for c in columns)]
    lines.append("  ".join("-" * widths[c] for c in columns))
    for r in rows:
        lines.append("  ".join(str(r.get(c, "")).ljust(widths[c]) for c in columns))
    return "\n".join(lines)


def _load_doc(path: str) -> dict:
    with open(path) as fh:
        return yaml.safe_load(fh)


@click.group()
@click.option("--addr", default=None, help="service address host:port (remote mode)")
@click.option("--store", default=None, type=click.Path(), help="store path (embedded mode)")
@click.option("--backend", default=None, help="sandbox backend (embedded mode): local | container[:sock]")
@click.option("--workers", default=None, type=int, help="run pool size (embedded mode)")
@click.option("--json", "json_out", is_flag=True, help="machine-readable output")
@click.pass_context
def main(ctx, addr, store, backend, workers, json_out):
    """Benchmark orchestration client."""
    ctx.ensure_object(dict)
    ctx.obj.update(addr=addr, store=store, backend=backend, workers=workers, json=json_out)


# -- algo ----------------------------------------------------------------------


@main.group()
def algo():
    """Algorithm registry."""


@algo.command("add")
@click.option("--file", "file_", required=True, type=click.Path(exists=True), help="YAML/JSON spec")
@click.pass_context
def algo_add(ctx, file_):
    body = _load_doc(file_)
    out = _request(ctx, "POST", "/api/algorithms", json=body).json()
    _emit(ctx, out, lambda o: f"registered algorithm {o['id']}")


@algo.command("list")
@click.pass_context
def algo_list(ctx):
    items = _request(ctx, "GET", "/api/algorithms").json()["items"]
    _emit(ctx, items, lambda rows: _table(rows, ["id", "name", "version_tag", "image_ref"]))


# -- dataset -------------------------------------------------------------------


@main.group()
def dataset():
    """Dataset registry."""


@dataset.command("add")
@click.option("--file", "file_", required=True, type=click.Path(exists=True))
@click.pass_context
def dataset_add(ctx, file_):
    body = _load_doc(file_)
    out = _request(ctx, "POST", "/api/datasets", json=body).json()
    _emit(ctx, out, lambda o: f"registered dataset {o['id']}")


@dataset.command("list")
@click.pass_context
def dataset_list(ctx):
    items = _request(ctx, "GET", "/api/datasets").json()["items"]
    _emit(ctx, items, lambda rows: _table(rows, ["id", "name", "sequence_name", "length_m", "duration_s"]))


# -- config --------------------------------------------------------------------


@main.group()
def config():
    """Mapping configurations."""


@config.command("create")
@click.option("--file", "file_", required=True, type=click.Path(exists=True))
@click.pass_context
def config_create(ctx, file_):
    body = _load_doc(file_)
    out = _request(ctx, "POST", "/api/configs", json=body).json()
    _emit(ctx, out, lambda o: f"created config {o['config_id']}")


@config.command("generate")
@click.option("--grid", "grid_file", required=True, type=click.Path(exists=True), help="grid YAML with base/axes/repeats")
@click.option("--dry-run", is_flag=True, help="count only; write nothing")
@click.pass_context
def config_generate(ctx, grid_file, dry_run):
    doc = _load_doc(grid_file)
    axes = doc.get("axes") or []
    if isinstance(axes, dict):  # mapping form: {name: [values]}
        axes = [{"name": k, "values": v} for k, v in axes.items()]
    body = {
        "base": doc["base"],
        "axes": axes,
        "repeats": int(doc.get("repeats", 1)),
        "dry_run": dry_run,
    }
    out = _request(ctx, "POST", "/api/configs/generate", json=body).json()
    _emit(ctx, out, lambda o: f"{o['count']} configurations" + (" (dry run)" if o["dry_run"] else ""))


@config.command("show")
@click.argument("config_id")
@click.option("--yaml", "as_yaml", is_flag=True, help="print the rendered config file")
@click.pass_context
def config_show(ctx, config_id, as_yaml):
    if as_yaml:
        click.echo(_request(ctx, "GET", f"/api/configs/{config_id}/yaml").text, nl=False)
        return
    out = _request(ctx, "GET", f"/api/configs/{config_id}").json()
    _emit(ctx, out)


# -- run -----------------------------------------------------------------------

TERMINAL = ("Succeeded", "Failed", "TimedOut", "Cancelled")


@main.group()
def run():
    """Mapping runs."""


@run.command("start")
@click.option("--config", "config_id", required=True)
@click.option("--timeout", "timeout_s", default=600.0, type=float)
@click.option("--idempotency-key", default=None)
@click.option("--follow", is_flag=True, help="poll until the run finishes")
@click.pass_context
def run_start(ctx, config_id, timeout_s, idempotency_key, follow):
    body = {"config_id": config_id, "timeout_s": timeout_s}
    if idempotency_key:
        body["idempotency_key"] = idempotency_key
    run_id = _request(ctx, "POST", "/api/runs", json=body).json()["run_id"]
    if not follow:
        _emit(ctx, {"run_id": run_id}, lambda o: f"started run {o['run_id']}")
        return
    while True:
        record = _request(ctx, "GET", f"/api/runs/{run_id}").json()
        if record["state"] in TERMINAL:
            break
        time.sleep(0.5)
    _emit(
        ctx,
        record,
        lambda r: f"run {r['run_id']}: {r['state']}"
        + (f" ({r['failure_reason']})" if r.get("failure_reason") else ""),
    )
    if record["state"] != "Succeeded":
        sys.exit(1)


@run.command("status")
@click.argument("run_id")
@click.pass_context
def run_status(ctx, run_id):
    out = _request(ctx, "GET", f"/api/runs/{run_id}").json()
    _emit(
        ctx,
        out,
        lambda r: _table(
            [r], ["run_id", "state", "exit_code", "wall_time_s", "failure_reason"]
        ),
    )


@run.command("cancel")
@click.argument("run_id")
@click.pass_context
def run_cancel(ctx, run_id):
    out = _request(ctx, "POST", f"/api/runs/{run_id}/cancel").json()
    _emit(ctx, out, lambda r: f"run {r['run_id']}: {r['state']}")


@run.command("logs")
@click.argument("run_id")
@click.pass_context
def run_logs(ctx, run_id):
    logs = _request(ctx, "GET", f"/api/runs/{run_id}/logs").json()
    if ctx.obj.get("json"):
        _emit(ctx, logs)
        return
    for name, text in logs.items():
        click.echo(f"===== {name} =====")
        click.echo(text)


@run.command("list")
@click.option("--state", default=None)
@click.option("--limit", default=100, type=int)
@click.pass_context
def run_list(ctx, state, limit):
    params = {"limit": limit}
    if state:
        params["state"] = state
    items = _request(ctx, "GET", "/api/runs", params=params).json()["items"]
    _emit(ctx, items, lambda rows: _table(rows, ["run_id", "config_id", "state", "exit_code"]))


# -- eval ----------------------------------------------------------------------


@main.group(name="eval")
def eval_():
    """Trajectory evaluations."""


@eval_.command("run")
@click.option("--run", "run_id", required=True)
@click.option("--max-dt", default=0.02, type=float)
@click.option("--rpe-delta-m", default=1.0, type=float)
@click.option("--wait/--no-wait", default=True)
@click.pass_context
def eval_run(ctx, run_id, max_dt, rpe_delta_m, wait):
    body = {"run_id": run_id, "eval_params": {"max_dt": max_dt, "rpe_delta_m": rpe_delta_m}}
    eval_id = _request(ctx, "POST", "/api/evaluations", json=body).json()["eval_id"]
    if not wait:
        _emit(ctx, {"eval_id": eval_id}, lambda o: f"started evaluation {o['eval_id']}")
        return
    while True:
        record = _request(ctx, "GET", f"/api/evaluations/{eval_id}").json()
        if record["status"] in ("done", "failed"):
            break
        time.sleep(0.2)
    if record["status"] == "failed":
        raise CliError(f"evaluation failed: {record.get('error')}")
    _emit(
        ctx,
        record,
        lambda r: f"eval {r['eval_id']}: ate_rmse={r['ate_stats']['rmse']:.6f} m "
        f"rpe_rmse={r['rpe_stats']['rmse']:.6f} m/m pairs={r['pairs_used']}",
    )


@eval_.command("show")
@click.argument("eval_id")
@click.pass_context
def eval_show(ctx, eval_id):
    out = _request(ctx, "GET", f"/api/evaluations/{eval_id}").json()
    _emit(ctx, out)


# -- report ----------------------------------------------------------------------


@main.group()
def report():
    """Meta-analysis reports."""


@report.command("series")
@click.option("--x", "x_axis", required=True, help="parameter or dataset attribute")
@click.option("--metric", required=True)
@click.option("--algorithm", default=None)
@click.option("--dataset", "dataset_id", default=None)
@click.option("--mode", default=None)
@click.option("--unit", default=None, help="display unit, e.g. cm")
@click.pass_context
def report_series(ctx, x_axis, metric, algorithm, dataset_id, mode, unit):
    body = {
        "x_axis": x_axis,
        "metric": metric,
        "filter": {"algorithm_id": algorithm, "dataset_id": dataset_id, "mode": mode},
    }
    if unit:
        body["unit"] = unit
    out = _request(ctx, "POST", "/api/meta/series", json=body).json()

    def fmt(table):
        rows = []
        for r in table["rows"]:
            rows.append(
                {
                    "x": r["x"],
                    f"{table['metric']} [{table['unit']}]": "-"
                    if r["all_failed"]
                    else f"{r['value']:.4g}",
                    "n": r["n"],
                    "failed": r["failed_count"],
                }
            )
        return _table(rows, list(rows[0].keys()))

    _emit(ctx, out, fmt)


@report.command("matrix")
@click.option("--row", "rows", multiple=True, required=True, help="algorithm_id:mode (repeatable)")
@click.option("--col", "cols", multiple=True, required=True, help="dataset_id (repeatable)")
@click.pass_context
def report_matrix(ctx, rows, cols):
    parsed = []
    for r in rows:
        algo_id, _, mode = r.rpartition(":")
        if not algo_id:
            raise click.UsageError(f"--row must be algorithm_id:mode, got {r!r}")
        parsed.append([algo_id, mode])
    out = _request(ctx, "POST", "/api/meta/matrix", json={"rows": parsed, "cols": list(cols)}).json()

    def fmt(m):
        table_rows = []
        for (algo_id, mode), row in zip(m["rows"], m["cells"]):
            entry = {"algorithm": f"{algo_id} ({mode})"}
            for ds, cell in zip(m["cols"], row):
                if cell["empty"]:
                    entry[ds] = "-"
                else:
                    star = "*" if cell["best_rmse"] else ""
                    parts = [f"{cell['ate_rmse']:.3f}{star}"]
                    if cell["cpu_display"]:
                        parts.append(cell["cpu_display"])
                    if cell["ram_max"] is not None:
                        parts.append(f"{cell['ram_max']:.0f}MB")
                    entry[ds] = " ".join(parts)
            table_rows.append(entry)
        return _table(table_rows, list(table_rows[0].keys())) + "\n(* best ATE RMSE in column)"

    _emit(ctx, out, fmt)


@report.command("export")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def report_export(ctx, out_path):
    resp = _request(ctx, "GET", "/api/export")
    with open(out_path, "wb") as fh:
        fh.write(resp.content)
    _emit(ctx, {"path": out_path, "bytes": len(resp.content)}, lambda o: f"wrote {o['path']} ({o['bytes']} bytes)")


# -- serve ---------------------------------------------------------------------


@main.command()
@click.option("--addr", default=None, help="bind address host:port (default HIVE_ADDR or 127.0.0.1:8080)")
@click.option("--store", default=None, type=click.Path())
@click.option("--backend", default=None)
@click.option("--workers", default=None, type=int)
def serve(addr, store, backend, workers):
    """Run the HTTP service."""
    from .service import serve as serve_app

    serve_app(addr=addr, store_path=store, backend_name=backend, workers=workers)


if __name__ == "__main__":
    main()
