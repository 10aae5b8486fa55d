"""P/T nets and their partitioned reachability graphs.

Net text format, one declaration per line (``#`` starts a comment)::

    places: a, b, c
    initial: a=1, b=0, c=0
    transition t1: pre a=1; post b=1

Omitted places in ``initial``/``pre``/``post`` default to 0.
"""

from __future__ import annotations

import logging
import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from . import kripke
from .kripke import KripkeStore, StateRecord

log = logging.getLogger(__name__)


class NetError(Exception):
    pass


class BuildError(Exception):
    pass


class BoundExceeded(BuildError):
    def __init__(self, found: int, bound: int):
        self.found = found
        self.bound = bound
        super().__init__(f"state bound {bound} exceeded ({found} states found so far)")


class DeadlockError(BuildError):
    def __init__(self, deadlocks):
        self.deadlocks = deadlocks
        super().__init__(f"{len(deadlocks)} deadlock states found")


@dataclass(frozen=True)
class Transition:
    name: str
    pre: tuple[int, ...]
    post: tuple[int, ...]


@dataclass(frozen=True)
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[Transition, ...]
    initial_marking: tuple[int, ...]

    def __post_init__(self):
        k = len(self.places)
        if len(set(self.places)) != k:
            raise NetError("duplicate place names")
        if not self.transitions:
            raise NetError("net has no transitions")
        if len(self.initial_marking) != k:
            raise NetError("initial marking arity mismatch")
        for t in self.transitions:
            if len(t.pre) != k or len(t.post) != k:
                raise NetError(f"transition {t.name}: arity mismatch")
            if min(t.pre + t.post, default=0) < 0:
                raise NetError(f"transition {t.name}: negative weight")
        if min(self.initial_marking, default=0) < 0:
            raise NetError("negative initial marking")


def enabled(net: PetriNet, m) -> list[int]:
    return [i for i, t in enumerate(net.transitions) if all(a >= b for a, b in zip(m, t.pre))]


def fire(net: PetriNet, m, t: int) -> tuple[int, ...]:
    tr = net.transitions[t]
    if not all(a >= b for a, b in zip(m, tr.pre)):
        raise ValueError(f"transition {tr.name} is not enabled at {tuple(m)}")
    return tuple(a - b + c for a, b, c in zip(m, tr.pre, tr.post))


# ---------------------------------------------------------------- parsing

_ASSIGN = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_.]*)\s*=\s*(\d+)\s*$")
_TRANSITION = re.compile(r"^transition\s+([A-Za-z_][A-Za-z0-9_.]*)\s*:(.*)$")


def _assignments(text: str, index: dict[str, int], lineno: int) -> list[int]:
    vec = [0] * len(index)
    text = text.strip()
    if not text or text == "-":
        return vec
    for part in text.split(","):
        m = _ASSIGN.match(part)
        if not m:
            raise NetError(f"line {lineno}: bad assignment {part.strip()!r}")
        name, value = m.group(1), int(m.group(2))
        if name not in index:
            raise NetError(f"line {lineno}: unknown place {name!r}")
        vec[index[name]] += value
    return vec


def parse_net(text: str) -> PetriNet:
    places: list[str] | None = None
    index: dict[str, int] = {}
    initial = None
    transitions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("places:"):
            places = [p.strip() for p in line[len("places:"):].split(",") if p.strip()]
            index = {p: i for i, p in enumerate(places)}
            if len(index) != len(places):
                raise NetError(f"line {lineno}: duplicate place name")
            continue
        if places is None:
            raise NetError(f"line {lineno}: 'places:' must come first")
        if line.startswith("initial:"):
            initial = _assignments(line[len("initial:"):], index, lineno)
            continue
        m = _TRANSITION.match(line)
        if not m:
            raise NetError(f"line {lineno}: cannot parse {line!r}")
        pre = post = [0] * len(places)
        for clause in m.group(2).split(";"):
            clause = clause.strip()
            if clause.startswith("pre"):
                pre = _assignments(clause[3:], index, lineno)
            elif clause.startswith("post"):
                post = _assignments(clause[4:], index, lineno)
            elif clause:
                raise NetError(f"line {lineno}: expected 'pre' or 'post', got {clause!r}")
        transitions.append(Transition(m.group(1), tuple(pre), tuple(post)))
    if places is None:
        raise NetError("missing 'places:' declaration")
    if initial is None:
        initial = [0] * len(places)
    return PetriNet(tuple(places), tuple(transitions), tuple(initial))


def net_to_text(net: PetriNet) -> str:
    def assign(vec):
        parts = [f"{p}={v}" for p, v in zip(net.places, vec) if v]
        return ", ".join(parts) if parts else "-"

    lines = [f"places: {', '.join(net.places)}", f"initial: {assign(net.initial_marking)}"]
    for t in net.transitions:
        lines.append(f"transition {t.name}: pre {assign(t.pre)}; post {assign(t.post)}")
    return "\n".join(lines) + "\n"


def load_net(path: str | Path) -> PetriNet:
    return parse_net(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------- exploration

@dataclass
class BuildStats:
    states: int
    edges: int
    deadlocks: int
    error_state: bool


def explore(net: PetriNet, bound: int | None = None):
    """Breadth-first reachability; returns (markings by id, preds by id, deadlock ids, edge count)."""
    compiled = []
    for t in net.transitions:
        need = tuple((i, w) for i, w in enumerate(t.pre) if w)
        delta = tuple((i, c - p) for i, (p, c) in enumerate(zip(t.pre, t.post)) if c != p)
        compiled.append((need, delta))

    start = tuple(net.initial_marking)
    sid = kripke.state_id(start)
    markings: dict[int, tuple[int, ...]] = {sid: start}
    preds: dict[int, set[int]] = {sid: set()}
    deadlocks: list[int] = []
    edges = 0
    queue = deque([(sid, start)])
    while queue:
        src, m = queue.popleft()
        fired = False
        for need, delta in compiled:
            if any(m[i] < w for i, w in need):
                continue
            fired = True
            nxt = list(m)
            for i, d in delta:
                nxt[i] += d
            nxt = tuple(nxt)
            dst = kripke.state_id(nxt)
            seen = markings.get(dst)
            if seen is None:
                if bound is not None and len(markings) >= bound:
                    raise BoundExceeded(len(markings), bound)
                markings[dst] = nxt
                preds[dst] = set()
                queue.append((dst, nxt))
            elif seen != nxt:
                raise BuildError(f"state id collision between {seen} and {nxt}")
            if src not in preds[dst]:
                preds[dst].add(src)
                edges += 1
        if not fired:
            deadlocks.append(src)
    return markings, preds, deadlocks, edges


def build(net: PetriNet, num_partitions: int = 1, bound: int | None = None,
          out_dir: str | Path | None = None, fail_on_deadlock: bool = False) -> KripkeStore:
    """Reachability graph of ``net`` as a serial, hash-partitioned store.

    Deadlocks are absorbed by the self-looping error state unless
    ``fail_on_deadlock`` is set.  The store is written to ``out_dir`` when given.
    """
    if num_partitions < 1:
        raise ValueError("num_partitions must be >= 1")
    markings, preds, deadlocks, edges = explore(net, bound)
    if kripke.error_state_id() in markings:
        raise BuildError("a reachable marking hashes to the reserved error-state id")
    if deadlocks and fail_on_deadlock:
        raise DeadlockError(deadlocks)
    records = (StateRecord(k, m, tuple(sorted(preds[k]))) for k, m in markings.items())
    initial = kripke.state_id(net.initial_marking)
    store = kripke.from_records(records, [initial], num_partitions, net.places)
    store = kripke.ensure_seriality(store, deadlocks)
    stats = BuildStats(len(store), edges + (len(deadlocks) + 1 if deadlocks else 0), len(deadlocks), bool(deadlocks))
    log.info("built %d states, %d edges, %d deadlocks", stats.states, stats.edges, stats.deadlocks)
    if out_dir is not None:
        store = kripke.save(store, out_dir, {"num_edges": stats.edges, "num_deadlocks": stats.deadlocks})
    return store


def bfs_count(net: PetriNet) -> int:
    """Reachable marking count by a plain set-based search (test oracle)."""
    seen = {tuple(net.initial_marking)}
    stack = [tuple(net.initial_marking)]
    while stack:
        m = stack.pop()
        for t in enabled(net, m):
            n = fire(net, m, t)
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen)
