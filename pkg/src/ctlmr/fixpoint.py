"""Distributed CTL evaluation as chains of map/reduce jobs.

Every satisfying set is a :class:`ResultSet`: partition files in the store
format holding exactly the records of the satisfying states, partitioned like
the store.  Set membership is never looked up globally; a map function only
knows which input set a record arrived from.

- ``EX phi``: one job.  phi-records emit a marker for each predecessor, store
  records forward themselves; a reducer keeps a key iff it saw a marker.
- ``EG phi``: greatest fixed point of ``X -> phi ∩ R⁻(X)`` starting at
  ``X = phi``.
- ``E[phi U psi]``: least fixed point of ``X -> psi ∪ (phi ∩ R⁻(X))``
  starting at ``X = psi``.  The optimized variant only expands the frontier
  added by the previous iteration; records carry the iteration at which they
  entered ``X`` as an optional fifth field.

Both loops stop as soon as two consecutive jobs emit the same number of
records or the set becomes empty.
"""

from __future__ import annotations

import functools
import logging
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import ctl, kripke
from .ctl import Formula
from .engine import BOT, Engine, InputSet, JobError, JobSpec, default_spill_root
from .kripke import KripkeStore

log = logging.getLogger(__name__)


class FixpointError(Exception):
    pass


class CheckError(Exception):
    def __init__(self, subformula: Formula, cause: Exception):
        self.subformula = subformula
        self.cause = cause
        super().__init__(f"while evaluating {ctl.to_text(subformula)}: {cause}")


@dataclass(frozen=True)
class ResultSet:
    files: tuple[Path, ...]
    cardinality: int

    def lines(self) -> Iterable[str]:
        for path in self.files:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        yield line.rstrip("\n")

    def ids(self) -> frozenset[int]:
        return frozenset(int(line.split("\t", 1)[0]) for line in self.lines())

    def records(self) -> list[kripke.StateRecord]:
        return [kripke.parse_record("\t".join(line.split("\t")[:4])) for line in self.lines()]

    def contents(self) -> list[bytes]:
        return [Path(p).read_bytes() for p in self.files]


@dataclass
class OperatorTrace:
    operator: str
    formula: str
    iterations: int
    cardinalities: list[int] = field(default_factory=list)
    iterates: list[frozenset[int]] = field(default_factory=list)


@dataclass
class CheckReport:
    formula: Formula
    cardinality: int
    holds_in_initial: bool
    satisfying: frozenset[int]
    result: ResultSet | None
    traces: list[OperatorTrace]
    job_times: list[tuple[str, float]]
    wall_time: float

    @property
    def iterations_per_operator(self) -> list[int]:
        return [t.iterations for t in self.traces]

    def csv_row(self, prop: str | None = None, workers: int = 1) -> list:
        return [prop if prop is not None else ctl.to_text(self.formula), self.cardinality, workers,
                f"{self.wall_time:.3f}"]

    def to_json(self, workers: int = 1) -> dict:
        return {
            "formula": ctl.to_text(self.formula),
            "cardinality": self.cardinality,
            "holds_in_initial": self.holds_in_initial,
            "workers": workers,
            "time_seconds": self.wall_time,
            "operators": [
                {"operator": t.operator, "formula": t.formula, "iterations": t.iterations,
                 "cardinalities": t.cardinalities}
                for t in self.traces
            ],
            "jobs": [{"name": n, "seconds": s} for n, s in self.job_times],
        }


# ------------------------------------------------- map and reduce functions
# Module level so worker processes can unpickle them.

def _fields(line: str) -> list[str]:
    return line.split("\t")


def _pred_ids(preds: str) -> list[int]:
    return [] if preds == "-" else [int(p) for p in preds.split(",")]


def _plain(line: str) -> str:
    parts = line.split("\t")
    return line if len(parts) == 4 else "\t".join(parts[:4])


def _first_payload(values):
    for v in values:
        if v is not BOT:
            return v
    return None


def filter_map(pred, role, line):
    f = _fields(line)
    marking = [int(x) for x in f[1].split(",")] if f[1] else []
    if ctl.holds(pred, marking, f[3] == "E"):
        yield int(f[0]), _plain(line)


def identity_map(role, line):
    yield int(line.split("\t", 1)[0]), _plain(line)


def first_reduce(key, values):
    payload = _first_payload(values)
    if payload is not None:
        yield payload


def ex_map(role, line):
    f = _fields(line)
    if role == "phi":
        for p in _pred_ids(f[2]):
            yield p, BOT
    else:
        yield int(f[0]), _plain(line)


def ex_reduce(key, values):
    if values and values[0] is BOT:
        payload = _first_payload(values)
        if payload is None:
            raise kripke.IntegrityError(f"predecessor id {key} names no state")
        yield payload


def eg_map(role, line):
    f = _fields(line)
    if role == "X":
        for p in _pred_ids(f[2]):
            yield p, BOT
    elif role == "phi":
        yield int(f[0]), _plain(line)


def eg_reduce(key, values):
    if values and values[0] is BOT:
        payload = _first_payload(values)
        if payload is not None:
            yield payload


def eu_map(optimized, iteration, role, line):
    f = _fields(line)
    key = int(f[0])
    if role == "X":
        stamp = int(f[4]) if len(f) > 4 else 0
        if not optimized or stamp == iteration:
            for p in _pred_ids(f[2]):
                yield p, BOT
        if optimized:
            yield key, "X\t" + line
    else:
        yield key, role + "\t" + _plain(line)


def eu_reduce(optimized, next_iteration, key, values):
    marked = bool(values) and values[0] is BOT
    tags = {}
    for v in values:
        if v is not BOT:
            tag, _, rec = v.partition("\t")
            tags.setdefault(tag, rec)
    if "X" in tags:
        yield tags["X"]
        return
    if "psi" in tags:
        rec = tags["psi"]
    elif marked and "phi" in tags:
        rec = tags["phi"]
    else:
        return
    yield f"{rec}\t{next_iteration}" if optimized else rec


def not_map(role, line):
    key = int(line.split("\t", 1)[0])
    yield (key, BOT) if role == "x" else (key, _plain(line))


def not_reduce(key, values):
    if values and values[0] is not BOT:
        yield values[0]


# ------------------------------------------------------------------ driver

class ModelChecker:
    """Evaluates formulas over one store, reusing an engine and a work directory."""

    def __init__(self, store: KripkeStore, workers: int = 1, workdir: str | Path | None = None,
                 optimized_eu: bool = True, spill_dir: str | Path | None = None,
                 verify_chains: bool = True, record_iterates: bool = False):
        self._own_workdir = workdir is None
        self.workdir = Path(tempfile.mkdtemp(prefix="ctlmr-", dir=spill_dir or default_spill_root()) if workdir is None else workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        if not store.partitions:
            store = kripke.save(store, self.workdir / "store")
        self.store = store
        self.n = store.num_partitions
        self.workers = workers
        self.optimized_eu = optimized_eu
        self.verify_chains = verify_chains
        self.record_iterates = record_iterates
        self.engine = Engine(workers, spill_dir)
        self.engine.start()
        self.all_states = ResultSet(tuple(store.partitions), len(store))
        self.traces: list[OperatorTrace] = []
        self.job_times: list[tuple[str, float]] = []
        self._seq = 0
        self._cache: dict[str, ResultSet] = {}

    def __enter__(self) -> "ModelChecker":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        self.engine.close()
        if self._own_workdir:
            shutil.rmtree(self.workdir, ignore_errors=True)

    # -- jobs

    def _job(self, name: str, inputs: list[tuple[str, ResultSet]], map_fn, reduce_fn) -> ResultSet:
        self._seq += 1
        out = self.workdir / f"{self._seq:05d}-{name}"
        spec = JobSpec(
            inputs=[InputSet.of(role, rs.files) for role, rs in inputs],
            map_fn=map_fn,
            reduce_fn=reduce_fn,
            output_dir=out,
            num_reducers=self.n,
            worker_count=self.workers,
            name=name,
        )
        res = self.engine.run(spec)
        self.job_times.append((name, res.seconds))
        return ResultSet(tuple(res.files), res.emitted)

    def _discard(self, rs: ResultSet, keep: Iterable[ResultSet] = ()) -> None:
        if rs is self.all_states or any(rs is k for k in keep) or rs in self._cache.values():
            return
        if rs.files and rs.files[0].parent.parent == self.workdir:
            shutil.rmtree(rs.files[0].parent, ignore_errors=True)

    def atomic(self, p: ctl.Atomic) -> ResultSet:
        if p == ctl.TRUE:
            return self.all_states
        return self._job("atomic", [("S", self.all_states)], functools.partial(filter_map, p), first_reduce)

    def eval_not(self, x: ResultSet) -> ResultSet:
        return self._job("not", [("S", self.all_states), ("x", x)], not_map, not_reduce)

    def eval_or(self, x: ResultSet, y: ResultSet) -> ResultSet:
        return self._job("or", [("x", x), ("y", y)], identity_map, first_reduce)

    def eval_ex(self, phi: ResultSet) -> ResultSet:
        return self._job("ex", [("S", self.all_states), ("phi", phi)], ex_map, ex_reduce)

    def _check_chain(self, smaller: ResultSet, larger: ResultSet, op: str, i: int) -> None:
        if not self.verify_chains:
            return
        for a, b in zip(smaller.files, larger.files):
            small = ResultSet((a,), 0).ids()
            if not small <= ResultSet((b,), 0).ids():
                raise FixpointError(f"{op}: iterate {i} breaks the monotone chain")

    def _iterate(self, op: str, label: str, x0: ResultSet, step) -> ResultSet:
        trace = OperatorTrace(op, label, 0, [x0.cardinality])
        if self.record_iterates:
            trace.iterates.append(x0.ids())
        self.traces.append(trace)
        x = x0
        limit = len(self.store)
        while x.cardinality > 0:
            if trace.iterations >= limit:
                raise FixpointError(f"{op} did not converge within {limit} iterations")
            nxt = step(x, trace.iterations)
            trace.iterations += 1
            trace.cardinalities.append(nxt.cardinality)
            if self.record_iterates:
                trace.iterates.append(nxt.ids())
            if op == "EG":
                self._check_chain(nxt, x, op, trace.iterations)
            else:
                self._check_chain(x, nxt, op, trace.iterations)
            done = nxt.cardinality == x.cardinality
            self._discard(x, keep=[x0])
            x = nxt
            if done:
                break
        return x

    def eval_eg(self, phi: ResultSet, label: str = "") -> ResultSet:
        def step(x, i):
            return self._job("eg", [("X", x), ("phi", phi)], eg_map, eg_reduce)

        return self._iterate("EG", label, phi, step)

    def eval_eu(self, phi: ResultSet, psi: ResultSet, optimized: bool | None = None, label: str = "") -> ResultSet:
        optimized = self.optimized_eu if optimized is None else optimized

        def step(x, i):
            return self._job("eu", [("X", x), ("phi", phi), ("psi", psi)],
                             functools.partial(eu_map, optimized, i),
                             functools.partial(eu_reduce, optimized, i + 1))

        x = self._iterate("EU", label, psi, step)
        if optimized and x is not psi:
            stripped = self._job("eu-final", [("X", x)], identity_map, first_reduce)
            self._discard(x)
            x = stripped
        return x

    # -- formulas

    def evaluate(self, f: Formula) -> ResultSet:
        key = ctl.to_text(f)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        try:
            if isinstance(f, ctl.Atomic):
                rs = self.atomic(f)
            elif isinstance(f, ctl.Not):
                rs = self.eval_not(self.evaluate(f.operand))
            elif isinstance(f, ctl.Or):
                rs = self.eval_or(self.evaluate(f.left), self.evaluate(f.right))
            elif isinstance(f, ctl.EX):
                rs = self.eval_ex(self.evaluate(f.operand))
            elif isinstance(f, ctl.EG):
                rs = self.eval_eg(self.evaluate(f.operand), key)
            elif isinstance(f, ctl.EU):
                rs = self.eval_eu(self.evaluate(f.left), self.evaluate(f.right), label=key)
            else:
                raise FixpointError(f"{type(f).__name__} is not a basis operator; normalize first")
        except (JobError, FixpointError, kripke.StoreError) as exc:
            raise CheckError(f, exc) from exc
        self._cache[key] = rs
        return rs

    def check(self, f: Formula) -> CheckReport:
        normal = ctl.resolve(ctl.normalize(f), self.store.place_names)
        self.traces = []
        self.job_times = []
        start = time.perf_counter()
        rs = self.evaluate(normal)
        wall = time.perf_counter() - start
        ids = rs.ids()
        return CheckReport(
            formula=normal,
            cardinality=rs.cardinality,
            holds_in_initial=self.store.initial_states <= ids,
            satisfying=ids,
            result=rs,
            traces=list(self.traces),
            job_times=list(self.job_times),
            wall_time=wall,
        )


def check(store: KripkeStore, f: Formula, workers: int = 1, *, optimized_eu: bool = True,
          out_dir: str | Path | None = None, spill_dir: str | Path | None = None) -> CheckReport:
    """One-shot check; the result files are copied to ``out_dir`` when given."""
    with ModelChecker(store, workers, optimized_eu=optimized_eu, spill_dir=spill_dir) as mc:
        report = mc.check(f)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            files = []
            for src in report.result.files:
                shutil.copyfile(src, out / src.name)
                files.append(out / src.name)
            report.result = ResultSet(tuple(files), report.cardinality)
        else:
            report.result = None
    return report
