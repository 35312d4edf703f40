"""Durable, queryable persistence: specs, configs, runs, transitions, profiles, evals.

Single-writer embedded SQLite with file-backed blobs. Many concurrent readers;
writes serialized through one lock. All records are written atomically
(transactions for rows, tmp+rename for blobs), so a crash mid-write leaves
each record either fully present or absent.
"""
from __future__ import annotations

import json
import os
import sqlite3
import tarfile
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional

from filelock import FileLock, Timeout

from . import trajectory as tj
from .configgen import MappingConfig
from .errors import (
    ConflictingId,
    DuplicateName,
    GroundtruthUnparseable,
    IllegalTransition,
    ImmutableViolation,
    NotFound,
    StoreLocked,
)
from .model import AlgorithmSpec, DatasetSpec, ParamSpec
from .monitor import ResourceProfile, ResourceSample

# Executor state machine; the store enforces it on every transition.
RUN_STATES = ("Pending", "Running", "Succeeded", "Failed", "TimedOut", "Cancelled")
TERMINAL_STATES = ("Succeeded", "Failed", "TimedOut", "Cancelled")
LEGAL_TRANSITIONS = {
    ("Pending", "Running"),
    ("Pending", "Cancelled"),
    ("Running", "Succeeded"),
    ("Running", "Failed"),
    ("Running", "TimedOut"),
    ("Running", "Cancelled"),
}


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    config_id: str
    state: str
    created_at: float
    exit_code: Optional[int] = None
    started_at: Optional[float] = None
    finished_at: Optional[float] = None
    failure_reason: Optional[str] = None
    trajectory_ref: Optional[str] = None
    sandbox_ref: Optional[str] = None
    idempotency_key: Optional[str] = None

    @property
    def wall_time_s(self) -> Optional[float]:
        if self.started_at is None or self.finished_at is None:
            return None
        return self.finished_at - self.started_at

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config_id": self.config_id,
            "state": self.state,
            "created_at": self.created_at,
            "exit_code": self.exit_code,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "failure_reason": self.failure_reason,
            "trajectory_ref": self.trajectory_ref,
            "sandbox_ref": self.sandbox_ref,
            "idempotency_key": self.idempotency_key,
        }


@dataclass(frozen=True)
class EvalRecord:
    eval_id: str
    run_id: str
    ate_stats: dict
    rpe_stats: dict
    eval_params: dict
    evaluated_at: float
    pairs_used: int
    alignment: dict
    series_refs: dict

    def as_dict(self) -> dict:
        return {
            "eval_id": self.eval_id,
            "run_id": self.run_id,
            "ate_stats": self.ate_stats,
            "rpe_stats": self.rpe_stats,
            "eval_params": self.eval_params,
            "evaluated_at": self.evaluated_at,
            "pairs_used": self.pairs_used,
            "alignment": self.alignment,
            "series_refs": self.series_refs,
        }


_SCHEMA = """
CREATE TABLE IF NOT EXISTS algorithms (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    version_tag TEXT NOT NULL,
    image_ref TEXT NOT NULL,
    modes TEXT NOT NULL,
    entry_script TEXT NOT NULL,
    params TEXT NOT NULL,
    created_at REAL NOT NULL,
    UNIQUE(name, version_tag)
);
CREATE TABLE IF NOT EXISTS datasets (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    sequence_name TEXT NOT NULL,
    data_path TEXT NOT NULL,
    groundtruth_path TEXT NOT NULL,
    topics TEXT NOT NULL,
    params TEXT NOT NULL,
    length_m REAL,
    duration_s REAL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS configs (
    config_id TEXT PRIMARY KEY,
    algorithm_id TEXT NOT NULL REFERENCES algorithms(id),
    mode TEXT NOT NULL,
    dataset_id TEXT NOT NULL REFERENCES datasets(id),
    algo_params TEXT NOT NULL,
    dataset_params TEXT NOT NULL,
    remaps TEXT NOT NULL,
    repeat_index INTEGER NOT NULL,
    content_key TEXT NOT NULL UNIQUE,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS runs (
    run_id TEXT PRIMARY KEY,
    config_id TEXT NOT NULL REFERENCES configs(config_id),
    state TEXT NOT NULL,
    created_at REAL NOT NULL,
    exit_code INTEGER,
    started_at REAL,
    finished_at REAL,
    failure_reason TEXT,
    trajectory_ref TEXT,
    sandbox_ref TEXT,
    idempotency_key TEXT UNIQUE
);
CREATE TABLE IF NOT EXISTS run_transitions (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id TEXT NOT NULL,
    from_state TEXT,
    to_state TEXT NOT NULL,
    at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS profiles (
    run_id TEXT PRIMARY KEY REFERENCES runs(run_id),
    cpu_avg_cores REAL NOT NULL,
    cpu_max_cores REAL NOT NULL,
    ram_max_mb REAL NOT NULL,
    sample_count INTEGER NOT NULL,
    samples_ref TEXT
);
CREATE TABLE IF NOT EXISTS evals (
    eval_id TEXT PRIMARY KEY,
    run_id TEXT NOT NULL REFERENCES runs(run_id),
    ate_stats TEXT NOT NULL,
    rpe_stats TEXT NOT NULL,
    eval_params TEXT NOT NULL,
    evaluated_at REAL NOT NULL,
    pairs_used INTEGER NOT NULL,
    alignment TEXT NOT NULL,
    series_refs TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_runs_config ON runs(config_id);
CREATE INDEX IF NOT EXISTS idx_runs_state ON runs(state);
CREATE INDEX IF NOT EXISTS idx_evals_run ON evals(run_id);
"""


def new_id() -> str:
    return uuid.uuid4().hex[:16]


class Store:
    """One directory: mapbench.db + blobs/<run_id>/* + workspaces/. One writer
    process enforced via an exclusive lock file."""

    def __init__(self, root: str | Path, exclusive: bool = True):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "blobs").mkdir(exist_ok=True)
        (self.root / "workspaces").mkdir(exist_ok=True)
        self._lockfile = None
        if exclusive:
            self._lockfile = FileLock(str(self.root / ".writer.lock"))
            try:
                self._lockfile.acquire(timeout=0)
            except Timeout:
                raise StoreLocked(f"another process owns {self.root}") from None
        self._db = sqlite3.connect(str(self.root / "mapbench.db"), check_same_thread=False)
        self._db.execute("PRAGMA journal_mode=WAL")
        self._db.execute("PRAGMA synchronous=NORMAL")
        self._db.execute("PRAGMA foreign_keys=ON")
        self._db.row_factory = sqlite3.Row
        with self._write():
            self._db.executescript(_SCHEMA)
        self._wlock = threading.RLock()

    def close(self):
        self._db.close()
        if self._lockfile is not None:
            self._lockfile.release()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _write(self):
        return self._db

    # -- blobs ------------------------------------------------------------

    def blob_dir(self, run_id: str) -> Path:
        d = self.root / "blobs" / run_id
        d.mkdir(parents=True, exist_ok=True)
        return d

    def write_blob(self, run_id: str, name: str, text: str) -> str:
        """Atomic write; returns the reference (path relative to store root)."""
        path = self.blob_dir(run_id) / name
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)
        return str(path.relative_to(self.root))

    def read_blob(self, ref: str) -> str:
        path = self.root / ref
        if not path.exists():
            raise NotFound(f"blob {ref} missing")
        return path.read_text()

    # -- algorithms -------------------------------------------------------

    def register_algorithm(self, spec: AlgorithmSpec) -> str:
        algo_id = spec.id or f"{spec.name}/{spec.version_tag}"
        spec = AlgorithmSpec(
            id=algo_id,
            name=spec.name,
            version_tag=spec.version_tag,
            image_ref=spec.image_ref,
            modes=spec.modes,
            entry_script=spec.entry_script,
            params=spec.params,
        )
        with self._wlock, self._db:
            try:
                self._db.execute(
                    "INSERT INTO algorithms VALUES (?,?,?,?,?,?,?,?)",
                    (
                        spec.id,
                        spec.name,
                        spec.version_tag,
                        spec.image_ref,
                        json.dumps(list(spec.modes)),
                        spec.entry_script,
                        json.dumps([p.as_dict() for p in spec.params]),
                        time.time(),
                    ),
                )
            except sqlite3.IntegrityError as exc:
                if "algorithms.id" in str(exc):
                    raise ConflictingId(f"algorithm id {spec.id} already registered") from None
                raise DuplicateName(f"algorithm {spec.name}/{spec.version_tag} already registered") from None
        return spec.id

    def update_algorithm(self, spec: AlgorithmSpec) -> None:
        """Allowed only until any run references the algorithm."""
        with self._wlock, self._db:
            row = self._db.execute("SELECT id FROM algorithms WHERE id=?", (spec.id,)).fetchone()
            if row is None:
                raise NotFound(f"algorithm {spec.id}")
            if self._algorithm_referenced(spec.id):
                raise ImmutableViolation(f"algorithm {spec.id} is referenced by runs and frozen")
            self._db.execute(
                "UPDATE algorithms SET name=?, version_tag=?, image_ref=?, modes=?, entry_script=?, params=? WHERE id=?",
                (
                    spec.name,
                    spec.version_tag,
                    spec.image_ref,
                    json.dumps(list(spec.modes)),
                    spec.entry_script,
                    json.dumps([p.as_dict() for p in spec.params]),
                    spec.id,
                ),
            )

    def _algorithm_referenced(self, algo_id: str) -> bool:
        row = self._db.execute(
            "SELECT 1 FROM runs JOIN configs USING (config_id) WHERE configs.algorithm_id=? LIMIT 1",
            (algo_id,),
        ).fetchone()
        return row is not None

    def get_algorithm(self, algo_id: str) -> AlgorithmSpec:
        row = self._db.execute("SELECT * FROM algorithms WHERE id=?", (algo_id,)).fetchone()
        if row is None:
            raise NotFound(f"algorithm {algo_id}")
        return self._algorithm_from_row(row)

    def list_algorithms(self) -> list[AlgorithmSpec]:
        rows = self._db.execute("SELECT * FROM algorithms ORDER BY created_at, id").fetchall()
        return [self._algorithm_from_row(r) for r in rows]

    @staticmethod
    def _algorithm_from_row(row) -> AlgorithmSpec:
        return AlgorithmSpec(
            id=row["id"],
            name=row["name"],
            version_tag=row["version_tag"],
            image_ref=row["image_ref"],
            modes=tuple(json.loads(row["modes"])),
            entry_script=row["entry_script"],
            params=tuple(ParamSpec.from_dict(d) for d in json.loads(row["params"])),
        )

    # -- datasets ---------------------------------------------------------

    def register_dataset(self, spec: DatasetSpec) -> str:
        from .errors import MapbenchError

        try:
            gt_text = Path(spec.groundtruth_path).read_text()
            gt = tj.parse_tum(gt_text)
        except (OSError, ValueError, MapbenchError) as exc:
            raise GroundtruthUnparseable(f"{spec.groundtruth_path}: {exc}") from None
        dataset_id = spec.id or new_id()
        length_m = spec.length_m if spec.length_m is not None else tj.path_length(gt)
        duration_s = spec.duration_s
        if duration_s is None and len(gt) > 1:
            duration_s = gt.samples[-1][0] - gt.samples[0][0]
        with self._wlock, self._db:
            try:
                self._db.execute(
                    "INSERT INTO datasets VALUES (?,?,?,?,?,?,?,?,?,?)",
                    (
                        dataset_id,
                        spec.name,
                        spec.sequence_name,
                        spec.data_path,
                        spec.groundtruth_path,
                        json.dumps(list(spec.topics)),
                        json.dumps([p.as_dict() for p in spec.params]),
                        length_m,
                        duration_s,
                        time.time(),
                    ),
                )
            except sqlite3.IntegrityError:
                raise ConflictingId(f"dataset id {dataset_id} already registered") from None
        return dataset_id

    def update_dataset(self, spec: DatasetSpec) -> None:
        with self._wlock, self._db:
            row = self._db.execute("SELECT id FROM datasets WHERE id=?", (spec.id,)).fetchone()
            if row is None:
                raise NotFound(f"dataset {spec.id}")
            ref = self._db.execute(
                "SELECT 1 FROM runs JOIN configs USING (config_id) WHERE configs.dataset_id=? LIMIT 1",
                (spec.id,),
            ).fetchone()
            if ref is not None:
                raise ImmutableViolation(f"dataset {spec.id} is referenced by runs and frozen")
            self._db.execute(
                "UPDATE datasets SET name=?, sequence_name=?, data_path=?, groundtruth_path=?, topics=?, params=?, length_m=?, duration_s=? WHERE id=?",
                (
                    spec.name,
                    spec.sequence_name,
                    spec.data_path,
                    spec.groundtruth_path,
                    json.dumps(list(spec.topics)),
                    json.dumps([p.as_dict() for p in spec.params]),
                    spec.length_m,
                    spec.duration_s,
                    spec.id,
                ),
            )

    def get_dataset(self, dataset_id: str) -> DatasetSpec:
        row = self._db.execute("SELECT * FROM datasets WHERE id=?", (dataset_id,)).fetchone()
        if row is None:
            raise NotFound(f"dataset {dataset_id}")
        return self._dataset_from_row(row)

    def list_datasets(self) -> list[DatasetSpec]:
        rows = self._db.execute("SELECT * FROM datasets ORDER BY created_at, id").fetchall()
        return [self._dataset_from_row(r) for r in rows]

    @staticmethod
    def _dataset_from_row(row) -> DatasetSpec:
        return DatasetSpec(
            id=row["id"],
            name=row["name"],
            sequence_name=row["sequence_name"],
            data_path=row["data_path"],
            groundtruth_path=row["groundtruth_path"],
            topics=tuple(json.loads(row["topics"])),
            params=tuple(ParamSpec.from_dict(d) for d in json.loads(row["params"])),
            length_m=row["length_m"],
            duration_s=row["duration_s"],
        )

    # -- configs ----------------------------------------------------------

    def put_config(self, cfg: MappingConfig) -> str:
        with self._wlock, self._db:
            try:
                self._db.execute(
                    "INSERT INTO configs VALUES (?,?,?,?,?,?,?,?,?,?)",
                    (
                        cfg.config_id,
                        cfg.algorithm_id,
                        cfg.mode,
                        cfg.dataset_id,
                        json.dumps(cfg.algo_params, sort_keys=True),
                        json.dumps(cfg.dataset_params, sort_keys=True),
                        json.dumps([[r.from_topic, r.to_topic] for r in cfg.remaps]),
                        cfg.repeat_index,
                        cfg.content_key(),
                        time.time(),
                    ),
                )
            except sqlite3.IntegrityError as exc:
                msg = str(exc)
                if "content_key" in msg:
                    raise ConflictingId("an identical config already exists") from None
                if "FOREIGN KEY" in msg:
                    raise NotFound(f"algorithm {cfg.algorithm_id} or dataset {cfg.dataset_id} not registered") from None
                raise ConflictingId(f"config id {cfg.config_id} already exists") from None
        return cfg.config_id

    def put_configs(self, cfgs: Iterable[MappingConfig]) -> list[str]:
        """Bulk insert; existing identical configs are reused, not duplicated."""
        ids = []
        with self._wlock, self._db:
            now = time.time()
            for cfg in cfgs:
                existing = self._db.execute(
                    "SELECT config_id FROM configs WHERE content_key=?", (cfg.content_key(),)
                ).fetchone()
                if existing is not None:
                    ids.append(existing["config_id"])
                    continue
                self._db.execute(
                    "INSERT INTO configs VALUES (?,?,?,?,?,?,?,?,?,?)",
                    (
                        cfg.config_id,
                        cfg.algorithm_id,
                        cfg.mode,
                        cfg.dataset_id,
                        json.dumps(cfg.algo_params, sort_keys=True),
                        json.dumps(cfg.dataset_params, sort_keys=True),
                        json.dumps([[r.from_topic, r.to_topic] for r in cfg.remaps]),
                        cfg.repeat_index,
                        cfg.content_key(),
                        now,
                    ),
                )
                ids.append(cfg.config_id)
        return ids

    def get_config(self, config_id: str) -> MappingConfig:
        row = self._db.execute("SELECT * FROM configs WHERE config_id=?", (config_id,)).fetchone()
        if row is None:
            raise NotFound(f"config {config_id}")
        return self._config_from_row(row)

    def list_configs(
        self,
        algorithm_id: Optional[str] = None,
        dataset_id: Optional[str] = None,
        limit: int = 100,
        cursor: Optional[str] = None,
    ) -> tuple[list[MappingConfig], Optional[str]]:
        sql = "SELECT * FROM configs"
        clauses, args = [], []
        if algorithm_id:
            clauses.append("algorithm_id=?")
            args.append(algorithm_id)
        if dataset_id:
            clauses.append("dataset_id=?")
            args.append(dataset_id)
        if cursor:
            created, cid = cursor.split("|", 1)
            clauses.append("(created_at, config_id) > (?, ?)")
            args.extend([float(created), cid])
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY created_at, config_id LIMIT ?"
        args.append(limit)
        rows = self._db.execute(sql, args).fetchall()
        next_cursor = f"{rows[-1]['created_at']}|{rows[-1]['config_id']}" if len(rows) == limit else None
        return [self._config_from_row(r) for r in rows], next_cursor

    @staticmethod
    def _config_from_row(row) -> MappingConfig:
        from .model import RemapRule

        return MappingConfig(
            config_id=row["config_id"],
            algorithm_id=row["algorithm_id"],
            mode=row["mode"],
            dataset_id=row["dataset_id"],
            algo_params=json.loads(row["algo_params"]),
            dataset_params=json.loads(row["dataset_params"]),
            remaps=tuple(RemapRule(a, b) for a, b in json.loads(row["remaps"])),
            repeat_index=row["repeat_index"],
        )

    # -- runs -------------------------------------------------------------

    def create_run(
        self,
        config_id: str,
        run_id: Optional[str] = None,
        idempotency_key: Optional[str] = None,
    ) -> RunRecord:
        with self._wlock, self._db:
            if idempotency_key is not None:
                row = self._db.execute(
                    "SELECT * FROM runs WHERE idempotency_key=?", (idempotency_key,)
                ).fetchone()
                if row is not None:
                    return self._run_from_row(row)
            if self._db.execute("SELECT 1 FROM configs WHERE config_id=?", (config_id,)).fetchone() is None:
                raise NotFound(f"config {config_id}")
            run_id = run_id or new_id()
            now = time.time()
            try:
                self._db.execute(
                    "INSERT INTO runs (run_id, config_id, state, created_at, idempotency_key) VALUES (?,?,?,?,?)",
                    (run_id, config_id, "Pending", now, idempotency_key),
                )
            except sqlite3.IntegrityError:
                raise ConflictingId(f"run id {run_id} already exists") from None
            self._db.execute(
                "INSERT INTO run_transitions (run_id, from_state, to_state, at) VALUES (?,?,?,?)",
                (run_id, None, "Pending", now),
            )
        return self.get_run(run_id)

    def get_run(self, run_id: str) -> RunRecord:
        row = self._db.execute("SELECT * FROM runs WHERE run_id=?", (run_id,)).fetchone()
        if row is None:
            raise NotFound(f"run {run_id}")
        return self._run_from_row(row)

    @staticmethod
    def _run_from_row(row) -> RunRecord:
        return RunRecord(
            run_id=row["run_id"],
            config_id=row["config_id"],
            state=row["state"],
            created_at=row["created_at"],
            exit_code=row["exit_code"],
            started_at=row["started_at"],
            finished_at=row["finished_at"],
            failure_reason=row["failure_reason"],
            trajectory_ref=row["trajectory_ref"],
            sandbox_ref=row["sandbox_ref"],
            idempotency_key=row["idempotency_key"],
        )

    def record_run_transition(
        self,
        run_id: str,
        to_state: str,
        exit_code: Optional[int] = None,
        failure_reason: Optional[str] = None,
    ) -> RunRecord:
        if to_state not in RUN_STATES:
            raise IllegalTransition(f"unknown state {to_state}")
        with self._wlock, self._db:
            row = self._db.execute("SELECT state FROM runs WHERE run_id=?", (run_id,)).fetchone()
            if row is None:
                raise NotFound(f"run {run_id}")
            from_state = row["state"]
            if (from_state, to_state) not in LEGAL_TRANSITIONS:
                raise IllegalTransition(f"{from_state} -> {to_state}")
            now = time.time()
            sets = ["state=?"]
            args: list[Any] = [to_state]
            if to_state == "Running":
                sets.append("started_at=?")
                args.append(now)
            if to_state in TERMINAL_STATES:
                sets.append("finished_at=?")
                args.append(now)
            if exit_code is not None:
                sets.append("exit_code=?")
                args.append(exit_code)
            if failure_reason is not None:
                sets.append("failure_reason=?")
                args.append(failure_reason)
            args.append(run_id)
            self._db.execute(f"UPDATE runs SET {', '.join(sets)} WHERE run_id=?", args)
            self._db.execute(
                "INSERT INTO run_transitions (run_id, from_state, to_state, at) VALUES (?,?,?,?)",
                (run_id, from_state, to_state, now),
            )
        return self.get_run(run_id)

    def set_run_fields(self, run_id: str, **fields) -> None:
        allowed = {"trajectory_ref", "sandbox_ref", "exit_code", "failure_reason", "started_at", "finished_at"}
        unknown = set(fields) - allowed
        if unknown:
            raise ValueError(f"cannot set {unknown}")
        if not fields:
            return
        with self._wlock, self._db:
            sets = ", ".join(f"{k}=?" for k in fields)
            self._db.execute(f"UPDATE runs SET {sets} WHERE run_id=?", (*fields.values(), run_id))

    def run_transitions(self, run_id: str) -> list[dict]:
        rows = self._db.execute(
            "SELECT * FROM run_transitions WHERE run_id=? ORDER BY seq", (run_id,)
        ).fetchall()
        return [dict(r) for r in rows]

    def list_runs(
        self,
        algorithm_id: Optional[str] = None,
        dataset_id: Optional[str] = None,
        config_id: Optional[str] = None,
        state: Optional[str] = None,
        algo_param: Optional[tuple[str, Any]] = None,
        created_after: Optional[float] = None,
        created_before: Optional[float] = None,
        limit: int = 100,
        cursor: Optional[str] = None,
    ) -> tuple[list[RunRecord], Optional[str]]:
        sql = "SELECT runs.* FROM runs JOIN configs USING (config_id)"
        clauses, args = [], []
        if algorithm_id:
            clauses.append("configs.algorithm_id=?")
            args.append(algorithm_id)
        if dataset_id:
            clauses.append("configs.dataset_id=?")
            args.append(dataset_id)
        if config_id:
            clauses.append("runs.config_id=?")
            args.append(config_id)
        if state:
            clauses.append("runs.state=?")
            args.append(state)
        if algo_param:
            name, value = algo_param
            clauses.append("json_extract(configs.algo_params, ?)=?")
            args.extend([f'$."{name}"', value])
        if created_after is not None:
            clauses.append("runs.created_at >= ?")
            args.append(created_after)
        if created_before is not None:
            clauses.append("runs.created_at <= ?")
            args.append(created_before)
        if cursor:
            created, rid = cursor.split("|", 1)
            clauses.append("(runs.created_at, runs.run_id) > (?, ?)")
            args.extend([float(created), rid])
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY runs.created_at, runs.run_id LIMIT ?"
        args.append(limit)
        rows = self._db.execute(sql, args).fetchall()
        next_cursor = f"{rows[-1]['created_at']}|{rows[-1]['run_id']}" if len(rows) == limit else None
        return [self._run_from_row(r) for r in rows], next_cursor

    # -- profiles ---------------------------------------------------------

    def put_profile(self, profile: ResourceProfile) -> None:
        samples_ref = self.write_blob(
            profile.run_id,
            "samples.jsonl",
            "\n".join(
                json.dumps({"t": s.t, "cpu_cores": s.cpu_cores, "rss_mb": s.rss_mb})
                for s in profile.samples
            )
            + "\n",
        )
        with self._wlock, self._db:
            self._db.execute(
                "INSERT OR REPLACE INTO profiles VALUES (?,?,?,?,?,?)",
                (
                    profile.run_id,
                    profile.cpu_avg_cores,
                    profile.cpu_max_cores,
                    profile.ram_max_mb,
                    len(profile.samples),
                    samples_ref,
                ),
            )

    def get_profile(self, run_id: str, with_samples: bool = True) -> ResourceProfile:
        row = self._db.execute("SELECT * FROM profiles WHERE run_id=?", (run_id,)).fetchone()
        if row is None:
            raise NotFound(f"profile for run {run_id}")
        samples: tuple[ResourceSample, ...] = ()
        if with_samples and row["samples_ref"]:
            lines = self.read_blob(row["samples_ref"]).strip()
            if lines:
                samples = tuple(
                    ResourceSample(t=d["t"], cpu_cores=d["cpu_cores"], rss_mb=d["rss_mb"])
                    for d in (json.loads(l) for l in lines.split("\n"))
                )
        return ResourceProfile(
            run_id=run_id,
            samples=samples,
            cpu_avg_cores=row["cpu_avg_cores"],
            cpu_max_cores=row["cpu_max_cores"],
            ram_max_mb=row["ram_max_mb"],
        )

    def has_profile(self, run_id: str) -> bool:
        return self._db.execute("SELECT 1 FROM profiles WHERE run_id=?", (run_id,)).fetchone() is not None

    # -- evals ------------------------------------------------------------

    def put_eval(self, record: EvalRecord) -> str:
        with self._wlock, self._db:
            run = self._db.execute("SELECT state FROM runs WHERE run_id=?", (record.run_id,)).fetchone()
            if run is None:
                raise NotFound(f"run {record.run_id}")
            if run["state"] != "Succeeded":
                raise IllegalTransition(f"run {record.run_id} is {run['state']}, not Succeeded")
            try:
                self._db.execute(
                    "INSERT INTO evals VALUES (?,?,?,?,?,?,?,?,?)",
                    (
                        record.eval_id,
                        record.run_id,
                        json.dumps(record.ate_stats),
                        json.dumps(record.rpe_stats),
                        json.dumps(record.eval_params),
                        record.evaluated_at,
                        record.pairs_used,
                        json.dumps(record.alignment),
                        json.dumps(record.series_refs),
                    ),
                )
            except sqlite3.IntegrityError:
                raise ConflictingId(f"eval id {record.eval_id} already exists") from None
        return record.eval_id

    def get_eval(self, eval_id: str) -> EvalRecord:
        row = self._db.execute("SELECT * FROM evals WHERE eval_id=?", (eval_id,)).fetchone()
        if row is None:
            raise NotFound(f"eval {eval_id}")
        return self._eval_from_row(row)

    def list_evals(self, run_id: Optional[str] = None) -> list[EvalRecord]:
        if run_id:
            rows = self._db.execute(
                "SELECT * FROM evals WHERE run_id=? ORDER BY evaluated_at, eval_id", (run_id,)
            ).fetchall()
        else:
            rows = self._db.execute("SELECT * FROM evals ORDER BY evaluated_at, eval_id").fetchall()
        return [self._eval_from_row(r) for r in rows]

    @staticmethod
    def _eval_from_row(row) -> EvalRecord:
        return EvalRecord(
            eval_id=row["eval_id"],
            run_id=row["run_id"],
            ate_stats=json.loads(row["ate_stats"]),
            rpe_stats=json.loads(row["rpe_stats"]),
            eval_params=json.loads(row["eval_params"]),
            evaluated_at=row["evaluated_at"],
            pairs_used=row["pairs_used"],
            alignment=json.loads(row["alignment"]),
            series_refs=json.loads(row["series_refs"]),
        )

    # -- recovery & export ------------------------------------------------

    def recover_interrupted(self) -> list[str]:
        """Finalize runs left non-terminal by a crash: reap any still-live local
        sandbox process and mark the run Failed."""
        import psutil

        recovered = []
        rows = self._db.execute(
            "SELECT run_id, state, sandbox_ref FROM runs WHERE state IN ('Pending','Running')"
        ).fetchall()
        for row in rows:
            ref = row["sandbox_ref"] or ""
            if ref.startswith("local:"):
                parts = ref.split(":")
                try:
                    pid, create_time = int(parts[1]), float(parts[2])
                    proc = psutil.Process(pid)
                    if abs(proc.create_time() - create_time) < 1.0:
                        # the sandbox leads its own process group; reap it whole
                        import os
                        import signal as _signal

                        try:
                            os.killpg(pid, _signal.SIGKILL)
                        except (ProcessLookupError, PermissionError):
                            proc.kill()
                except (psutil.NoSuchProcess, ValueError, IndexError):
                    pass
            if row["state"] == "Pending":
                self.record_run_transition(row["run_id"], "Cancelled", failure_reason="interrupted by restart")
            else:
                self.record_run_transition(row["run_id"], "Failed", failure_reason="interrupted by restart")
            self.set_run_fields(row["run_id"], sandbox_ref=None)
            recovered.append(row["run_id"])
        return recovered

    def export_archive(self, dest: str | Path) -> Path:
        """Portable tar.gz: one JSONL file per table plus the blob tree."""
        dest = Path(dest)
        tables = {
            "algorithms": "SELECT * FROM algorithms ORDER BY created_at, id",
            "datasets": "SELECT * FROM datasets ORDER BY created_at, id",
            "configs": "SELECT * FROM configs ORDER BY created_at, config_id",
            "runs": "SELECT * FROM runs ORDER BY created_at, run_id",
            "run_transitions": "SELECT * FROM run_transitions ORDER BY seq",
            "profiles": "SELECT * FROM profiles ORDER BY run_id",
            "evals": "SELECT * FROM evals ORDER BY evaluated_at, eval_id",
        }
        import io

        with tarfile.open(dest, "w:gz") as tar:
            for name, sql in tables.items():
                rows = self._db.execute(sql).fetchall()
                payload = "".join(json.dumps(dict(r), sort_keys=True) + "\n" for r in rows).encode()
                info = tarfile.TarInfo(f"records/{name}.jsonl")
                info.size = len(payload)
                tar.addfile(info, io.BytesIO(payload))
            blob_root = self.root / "blobs"
            for path in sorted(blob_root.rglob("*")):
                if path.is_file():
                    tar.add(path, arcname=str(path.relative_to(self.root)))
        return dest

    def workspace_root(self) -> Path:
        return self.root / "workspaces"
