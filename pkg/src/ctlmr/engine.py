"""Embedded map/shuffle/reduce engine.

Jobs read role-tagged sets of line-oriented files.  One map task runs per
input file; its output is hash partitioned into one spill file per reducer.
After every map task has finished, each reducer loads its spill files,
groups the values by key and calls the reduce function once per key, in
ascending key order.  Reducer ``r`` writes ``part-%05d`` % r in the output
directory.

Values are either :data:`BOT` (the empty marker) or a payload string.  A
reducer sees all markers first, then the payloads in sorted order, so output
files are byte-for-byte independent of the number of workers.
"""

from __future__ import annotations

import logging
import multiprocessing
import os
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

from .kripke import PART_FORMAT, fnv1a64, mix64

log = logging.getLogger(__name__)

SPILL_ENV = "CTLMR_SPILL_DIR"
BOT_TEXT = "BOT"


class _Bottom:
    __slots__ = ()

    def __repr__(self) -> str:
        return "⊥"

    def __reduce__(self):
        return "BOT"


BOT = _Bottom()

Key = Union[int, str]
Value = Union[_Bottom, str]
MapFn = Callable[[str, str], Iterable[tuple[Key, Value]]]
ReduceFn = Callable[[Key, list], Iterable[str]]


class JobError(Exception):
    def __init__(self, message: str, key=None, phase: str | None = None):
        self.key = key
        self.phase = phase
        super().__init__(message)


def partition(key: Key, num_reducers: int) -> int:
    """Default partitioner: 64-bit hash of the key modulo the reducer count."""
    if num_reducers < 1:
        raise ValueError("num_reducers must be >= 1")
    h = mix64(key) if isinstance(key, int) else fnv1a64(key.encode())
    return h % num_reducers


@dataclass(frozen=True)
class InputSet:
    role: str
    paths: tuple[Path, ...]

    @classmethod
    def of(cls, role: str, paths: Iterable[str | Path]) -> "InputSet":
        return cls(role, tuple(Path(p) for p in paths))


@dataclass
class JobSpec:
    inputs: Sequence[InputSet]
    map_fn: MapFn
    reduce_fn: ReduceFn
    output_dir: str | Path
    num_reducers: int = 1
    worker_count: int = 1
    key_type: type = int
    name: str = "job"

    def __post_init__(self):
        if self.num_reducers < 1:
            raise ValueError("num_reducers must be >= 1")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.key_type not in (int, str):
            raise ValueError("key_type must be int or str")


@dataclass
class JobResult:
    files: list[Path]
    emitted: int
    mapped: int
    seconds: float
    per_file: list[int] = field(default_factory=list)


# ------------------------------------------------------------ task bodies

def _map_task(task):
    index, role, path, map_fn, num_reducers, spill_dir = task
    buckets: list[list[str]] = [[] for _ in range(num_reducers)]
    mapped = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                pairs = list(map_fn(role, line))
            except Exception as exc:
                key = line.split("\t", 1)[0]
                raise JobError(f"map failed on key {key} ({role}): {exc!r}", key, "map") from exc
            for key, value in pairs:
                if value is BOT:
                    text = BOT_TEXT
                else:
                    if value == BOT_TEXT or "\n" in value:
                        raise JobError(f"payload for key {key} uses reserved encoding", key, "map")
                    text = value
                buckets[partition(key, num_reducers)].append(f"{key}\t{text}\n")
                mapped += 1
    for r, lines in enumerate(buckets):
        if lines:
            with open(os.path.join(spill_dir, f"m{index:05d}-r{r:05d}"), "w", encoding="utf-8") as out:
                out.writelines(lines)
    return mapped


def _reduce_task(task):
    r, spill_files, reduce_fn, key_type, out_path = task
    groups: dict = {}
    for spill in spill_files:
        with open(spill, encoding="utf-8") as fh:
            for line in fh:
                k, _, v = line.rstrip("\n").partition("\t")
                groups.setdefault(k, []).append(v)
    if key_type is int:
        keys = sorted(groups, key=int)
    else:
        keys = sorted(groups)
    emitted = 0
    with open(out_path, "w", encoding="utf-8") as out:
        for k in keys:
            raw = groups[k]
            bots = raw.count(BOT_TEXT)
            payloads = sorted(v for v in raw if v != BOT_TEXT)
            values = [BOT] * bots + payloads
            key = key_type(k)
            try:
                lines = list(reduce_fn(key, values))
            except Exception as exc:
                raise JobError(f"reduce failed on key {key}: {exc!r}", key, "reduce") from exc
            for line in lines:
                out.write(line + "\n")
            emitted += len(lines)
    return emitted


# ---------------------------------------------------------------- engine

def default_spill_root() -> str | None:
    root = os.environ.get(SPILL_ENV)
    if root:
        Path(root).mkdir(parents=True, exist_ok=True)
    return root


class Engine:
    """Executes jobs on a pool of ``workers`` processes (inline when 1)."""

    def __init__(self, workers: int = 1, spill_dir: str | Path | None = None):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = workers
        self.spill_root = str(spill_dir) if spill_dir else default_spill_root()
        self._pool: ProcessPoolExecutor | None = None

    def __enter__(self) -> "Engine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def start(self) -> None:
        """Spawn the worker processes now rather than on the first job."""
        if self.workers > 1 and self._pool is None:
            ctx = multiprocessing.get_context("fork") if os.name == "posix" else None
            self._pool = ProcessPoolExecutor(self.workers, mp_context=ctx)
            list(self._pool.map(abs, range(self.workers)))

    def _map(self, fn, tasks):
        if self.workers == 1 or len(tasks) <= 1:
            return [fn(t) for t in tasks]
        self.start()
        return list(self._pool.map(fn, tasks))

    def run(self, spec: JobSpec) -> JobResult:
        start = time.perf_counter()
        out_dir = Path(spec.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        spill = tempfile.mkdtemp(prefix="spill-", dir=self.spill_root)
        try:
            map_tasks = []
            for inp in spec.inputs:
                for path in inp.paths:
                    if not Path(path).exists():
                        raise JobError(f"input file {path} does not exist", phase="io")
                    map_tasks.append((len(map_tasks), inp.role, str(path), spec.map_fn, spec.num_reducers, spill))
            try:
                mapped = sum(self._map(_map_task, map_tasks))
                spill_files = sorted(os.listdir(spill))
                reduce_tasks = []
                for r in range(spec.num_reducers):
                    suffix = f"-r{r:05d}"
                    mine = [os.path.join(spill, f) for f in spill_files if f.endswith(suffix)]
                    reduce_tasks.append((r, mine, spec.reduce_fn, spec.key_type, str(out_dir / (PART_FORMAT % r))))
                per_file = self._map(_reduce_task, reduce_tasks)
            except OSError as exc:
                raise JobError(f"I/O failure in {spec.name}: {exc}", phase="io") from exc
        finally:
            shutil.rmtree(spill, ignore_errors=True)
        files = [out_dir / (PART_FORMAT % r) for r in range(spec.num_reducers)]
        seconds = time.perf_counter() - start
        log.debug("%s: mapped %d pairs, emitted %d in %.3fs", spec.name, mapped, sum(per_file), seconds)
        return JobResult(files, sum(per_file), mapped, seconds, list(per_file))


def run_job(spec: JobSpec, spill_dir: str | Path | None = None) -> tuple[list[Path], int]:
    """Run one job on a throwaway engine; returns (output files, emitted pair count)."""
    with Engine(spec.worker_count, spill_dir) as engine:
        result = engine.run(spec)
    return result.files, result.emitted
