"""Partitioned Kripke structures stored as predecessor lists.

A store is a directory of ``part-%05d`` text files plus a ``manifest.json``
sidecar.  Each line of a partition file describes one reachable state::

    <id>\\t<m1,m2,...,mk>\\t<p1,p2,...,pj>\\t<flags>

where the third field lists the identifiers of the state's predecessors
(``-`` when empty) and ``flags`` is ``-`` or ``E`` (the error state).

A state with identifier ``k`` lives in partition ``mix64(k) % n``.
``mix64`` is the splitmix64 finalizer; identifiers themselves are the
64-bit FNV-1a hash of the comma-joined marking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

MASK64 = (1 << 64) - 1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

MANIFEST = "manifest.json"
PART_FORMAT = "part-%05d"
ERROR_KEY = b"__error__"


class StoreError(Exception):
    """Base class for Kripke store failures."""


class ParseError(StoreError):
    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class IntegrityError(StoreError):
    pass


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def mix64(key: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit integers."""
    z = key & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def partition_of(state_id: int, n: int) -> int:
    return mix64(state_id) % n


def encode_marking(marking: Iterable[int]) -> str:
    return ",".join(map(str, marking))


def state_id(marking: Iterable[int]) -> int:
    return fnv1a64(encode_marking(marking).encode())


def error_state_id() -> int:
    return fnv1a64(ERROR_KEY)


@dataclass(frozen=True)
class StateRecord:
    id: int
    marking: tuple[int, ...]
    predecessors: tuple[int, ...] = ()
    is_error: bool = False

    def to_line(self) -> str:
        preds = ",".join(map(str, self.predecessors)) if self.predecessors else "-"
        return f"{self.id}\t{encode_marking(self.marking)}\t{preds}\t{'E' if self.is_error else '-'}"


def parse_record(line: str, path="<string>", lineno: int = 0) -> StateRecord:
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 4:
        raise ParseError(path, lineno, f"expected 4 tab-separated fields, got {len(fields)}")
    sid, marking, preds, flags = fields
    try:
        ident = int(sid)
        tokens = tuple(int(x) for x in marking.split(",")) if marking else ()
        predecessors = () if preds == "-" else tuple(int(x) for x in preds.split(","))
    except ValueError as exc:
        raise ParseError(path, lineno, f"bad integer: {exc}") from None
    if not 0 <= ident <= MASK64:
        raise ParseError(path, lineno, f"state id {ident} out of 64-bit range")
    if any(t < 0 for t in tokens):
        raise ParseError(path, lineno, "negative token count")
    if flags not in ("-", "E"):
        raise ParseError(path, lineno, f"unknown flags {flags!r}")
    return StateRecord(ident, tokens, predecessors, flags == "E")


@dataclass(frozen=True)
class KripkeStore:
    """Immutable partitioned Kripke structure.

    ``partitions`` holds the backing files when the store lives on disk and
    is empty for an unsaved in-memory store.
    """

    records: Mapping[int, StateRecord]
    initial_states: frozenset[int]
    num_partitions: int
    place_names: tuple[str, ...] = ()
    partitions: tuple[Path, ...] = ()
    home: Mapping[int, int] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> frozenset[int]:
        return frozenset(self.records)

    @property
    def error_state(self) -> StateRecord | None:
        for rec in self.records.values():
            if rec.is_error:
                return rec
        return None

    def successors(self) -> dict[int, set[int]]:
        succ: dict[int, set[int]] = {k: set() for k in self.records}
        for rec in self.records.values():
            for p in rec.predecessors:
                if p in succ:
                    succ[p].add(rec.id)
        return succ

    def deadlocks(self) -> set[int]:
        return {k for k, s in self.successors().items() if not s}


def from_records(records: Iterable[StateRecord], initial: Iterable[int], num_partitions: int,
                 place_names: Iterable[str] = ()) -> KripkeStore:
    table: dict[int, StateRecord] = {}
    for rec in records:
        if rec.id in table:
            raise IntegrityError(f"duplicate state id {rec.id}")
        table[rec.id] = rec
    home = {k: partition_of(k, num_partitions) for k in table}
    return KripkeStore(table, frozenset(initial), num_partitions, tuple(place_names), (), home)


def load(paths: Iterable[str | Path], initial: Iterable[int], place_names: Iterable[str] = ()) -> KripkeStore:
    paths = tuple(Path(p) for p in paths)
    initial = frozenset(initial)
    if not paths:
        raise StoreError("no partition files given")
    if not initial:
        raise StoreError("initial state set is empty")
    table: dict[int, StateRecord] = {}
    home: dict[int, int] = {}
    for index, path in enumerate(paths):
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                rec = parse_record(line, path, lineno)
                if rec.id in table:
                    raise IntegrityError(f"duplicate state id {rec.id} in {path}:{lineno}")
                table[rec.id] = rec
                home[rec.id] = index
    return KripkeStore(table, initial, len(paths), tuple(place_names), paths, home)


def open_store(directory: str | Path) -> KripkeStore:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST).read_text())
    except FileNotFoundError:
        raise StoreError(f"no {MANIFEST} in {directory}") from None
    n = int(manifest["num_partitions"])
    paths = [directory / (PART_FORMAT % i) for i in range(n)]
    return load(paths, manifest["initial_states"], manifest.get("place_names", ()))


def save(store: KripkeStore, directory: str | Path, extra: dict | None = None) -> KripkeStore:
    """Write ``store`` as partition files plus manifest; returns the file-backed store."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = store.num_partitions
    buckets: list[list[StateRecord]] = [[] for _ in range(n)]
    for rec in store.records.values():
        buckets[partition_of(rec.id, n)].append(rec)
    paths = []
    for i, bucket in enumerate(buckets):
        path = directory / (PART_FORMAT % i)
        bucket.sort(key=lambda r: r.id)
        with open(path, "w", encoding="utf-8") as fh:
            for rec in bucket:
                fh.write(rec.to_line() + "\n")
        paths.append(path)
    manifest = {
        "num_partitions": n,
        "place_names": list(store.place_names),
        "initial_states": sorted(store.initial_states),
        "num_states": len(store.records),
    }
    manifest.update(extra or {})
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    home = {k: partition_of(k, n) for k in store.records}
    return replace(store, partitions=tuple(paths), home=home)


def predecessors(store: KripkeStore, W: Iterable[int]) -> set[int]:
    """R⁻(W): every state with at least one successor in ``W``."""
    out: set[int] = set()
    for k in W:
        try:
            rec = store.records[k]
        except KeyError:
            raise IntegrityError(f"unknown state id {k}") from None
        out.update(rec.predecessors)
    return out


def ensure_seriality(store: KripkeStore, deadlocks: Iterable[int] | None = None) -> KripkeStore:
    """Absorb deadlock states into a self-looping error state.

    Returns ``store`` itself when there is nothing to fix.  The error state
    has an all-zero marking and predecessor list ``{itself} ∪ deadlocks``.
    """
    dead = set(store.deadlocks() if deadlocks is None else deadlocks)
    if not dead:
        return store
    eid = error_state_id()
    existing = store.records.get(eid)
    if existing is not None and not existing.is_error:
        raise IntegrityError(f"error state id {eid} collides with a model state")
    if existing is not None:
        dead |= set(existing.predecessors)
    width = len(store.place_names) or len(next(iter(store.records.values())).marking)
    error = StateRecord(eid, (0,) * width, tuple(sorted(dead | {eid})), True)
    records = dict(store.records)
    records[eid] = error
    home = dict(store.home)
    home[eid] = partition_of(eid, store.num_partitions)
    return replace(store, records=records, partitions=(), home=home)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


def validate(store: KripkeStore) -> list[Diagnostic]:
    """Check every store invariant; an empty list means the store is sound."""
    diags: list[Diagnostic] = []
    width = len(store.place_names)
    has_successor: set[int] = set()
    for k in sorted(store.records):
        rec = store.records[k]
        if len(set(rec.predecessors)) != len(rec.predecessors):
            diags.append(Diagnostic("duplicate", f"duplicate predecessor ids in state {k}"))
        for p in rec.predecessors:
            if p not in store.records:
                diags.append(Diagnostic("dangling", f"dangling id {p} (predecessor of {k})"))
            else:
                has_successor.add(p)
        if width and len(rec.marking) != width:
            diags.append(Diagnostic("marking", f"state {k} has {len(rec.marking)} places, expected {width}"))
        if any(t < 0 for t in rec.marking):
            diags.append(Diagnostic("marking", f"state {k} has a negative token count"))
        expected = partition_of(k, store.num_partitions)
        actual = store.home.get(k, expected)
        if actual != expected:
            diags.append(Diagnostic("partition", f"state {k} stored in partition {actual}, expected {expected}"))
    for k in sorted(store.initial_states - store.records.keys()):
        diags.append(Diagnostic("initial", f"initial state {k} not in store"))
    errors = [r for r in store.records.values() if r.is_error]
    if len(errors) > 1:
        diags.append(Diagnostic("error-state", f"{len(errors)} error states present"))
    stuck = sorted(store.records.keys() - has_successor)
    if stuck:
        shown = ", ".join(map(str, stuck[:5]))
        diags.append(Diagnostic("total", f"{len(stuck)} states without successor (e.g. {shown})"))
    return diags
