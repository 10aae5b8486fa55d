"""Sequential in-memory CTL evaluation used as ground truth.

States are dense indices ``0..n-1``; satisfying sets are Python sets of
indices.  Every surface operator has its own fixed-point characterization
here, so agreement with the distributed checker does not depend on
:func:`ctlmr.ctl.normalize`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from . import ctl, kripke
from .ctl import Formula

MAX_ORACLE_STATES = 200_000


class OracleError(Exception):
    pass


@dataclass
class DenseKripke:
    ids: list[int]
    markings: list[tuple[int, ...]]
    succ: list[list[int]]
    pred: list[list[int]]
    initial: set[int]
    place_names: tuple[str, ...]
    is_error: list[bool]

    def __len__(self) -> int:
        return len(self.ids)

    def is_serial(self) -> bool:
        return all(self.succ)

    def to_records(self) -> list[kripke.StateRecord]:
        return [
            kripke.StateRecord(self.ids[i], self.markings[i], tuple(sorted(self.ids[p] for p in self.pred[i])),
                               self.is_error[i])
            for i in range(len(self))
        ]

    def to_store(self, num_partitions: int = 1) -> kripke.KripkeStore:
        return kripke.from_records(self.to_records(), (self.ids[i] for i in self.initial), num_partitions,
                                   self.place_names)

    def id_set(self, states) -> set[int]:
        return {self.ids[i] for i in states}


def from_edges(n: int, edges, markings=None, initial=(0,), place_names=("x",), ids=None) -> DenseKripke:
    succ: list[list[int]] = [[] for _ in range(n)]
    pred: list[list[int]] = [[] for _ in range(n)]
    for a, b in sorted(set(edges)):
        succ[a].append(b)
        pred[b].append(a)
    markings = [tuple(m) for m in markings] if markings is not None else [(i,) for i in range(n)]
    ids = list(ids) if ids is not None else [kripke.mix64(i + 1) for i in range(n)]
    return DenseKripke(ids, markings, succ, pred, set(initial), tuple(place_names), [False] * n)


def from_store(store: kripke.KripkeStore) -> DenseKripke:
    if len(store) > MAX_ORACLE_STATES:
        raise OracleError(f"store has {len(store)} states; oracle limit is {MAX_ORACLE_STATES}")
    ids = sorted(store.records)
    index = {k: i for i, k in enumerate(ids)}
    succ: list[list[int]] = [[] for _ in ids]
    pred: list[list[int]] = [[] for _ in ids]
    for k in ids:
        i = index[k]
        for p in set(store.records[k].predecessors):
            pred[i].append(index[p])
            succ[index[p]].append(i)
    return DenseKripke(
        ids,
        [store.records[k].marking for k in ids],
        succ,
        pred,
        {index[k] for k in store.initial_states},
        store.place_names,
        [store.records[k].is_error for k in ids],
    )


# ------------------------------------------------------------- evaluation

def _pre_exists(k: DenseKripke, X: set[int]) -> set[int]:
    out: set[int] = set()
    for s in X:
        out.update(k.pred[s])
    return out


def _pre_forall(k: DenseKripke, X: set[int]) -> set[int]:
    return {s for s in range(len(k)) if all(t in X for t in k.succ[s])}


def lfp(tau) -> set[int]:
    X: set[int] = set()
    while True:
        Y = tau(X)
        if Y == X:
            return X
        X = Y


def gfp(tau, universe: set[int]) -> set[int]:
    X = set(universe)
    while True:
        Y = tau(X)
        if Y == X:
            return X
        X = Y


def oracle_check(k: DenseKripke, f: Formula) -> set[int]:
    """Satisfying set of ``f`` as dense state indices."""
    if not k.is_serial():
        raise OracleError("transition relation is not total")
    f = ctl.resolve(f, k.place_names)
    S = set(range(len(k)))
    memo: dict[Formula, set[int]] = {}

    def sat(g: Formula) -> set[int]:
        if g in memo:
            return memo[g]
        if isinstance(g, ctl.Atomic):
            out = {s for s in S if ctl.holds(g, k.markings[s], k.is_error[s])}
        elif isinstance(g, ctl.Not):
            out = S - sat(g.operand)
        elif isinstance(g, ctl.And):
            out = sat(g.left) & sat(g.right)
        elif isinstance(g, ctl.Or):
            out = sat(g.left) | sat(g.right)
        elif isinstance(g, ctl.EX):
            out = _pre_exists(k, sat(g.operand))
        elif isinstance(g, ctl.AX):
            out = _pre_forall(k, sat(g.operand))
        elif isinstance(g, ctl.EF):
            a = sat(g.operand)
            out = lfp(lambda X: a | _pre_exists(k, X))
        elif isinstance(g, ctl.AF):
            a = sat(g.operand)
            out = lfp(lambda X: a | _pre_forall(k, X))
        elif isinstance(g, ctl.EG):
            a = sat(g.operand)
            out = gfp(lambda X: a & _pre_exists(k, X), S)
        elif isinstance(g, ctl.AG):
            a = sat(g.operand)
            out = gfp(lambda X: a & _pre_forall(k, X), S)
        elif isinstance(g, ctl.EU):
            a, b = sat(g.left), sat(g.right)
            out = lfp(lambda X: b | (a & _pre_exists(k, X)))
        elif isinstance(g, ctl.AU):
            a, b = sat(g.left), sat(g.right)
            out = lfp(lambda X: b | (a & _pre_forall(k, X)))
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[g] = out
        return out

    return sat(f)


def oracle_ids(k: DenseKripke, f: Formula) -> set[int]:
    return k.id_set(oracle_check(k, f))


# ------------------------------------------------------------- generators

RANDOM_PLACES = ("a", "b", "c")


def random_kripke(n: int, avg_degree: float = 2.0, seed=None, max_tokens: int = 2,
                  num_initial: int = 1) -> DenseKripke:
    """Random serial structure with markings over three places.

    Each ordered pair is an edge with probability ``avg_degree / n``; states
    left without a successor get a self-loop.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    p = min(1.0, avg_degree / n)
    edges = [(a, b) for a in range(n) for b in range(n) if rng.random() < p]
    has_succ = {a for a, _ in edges}
    edges += [(a, a) for a in range(n) if a not in has_succ]
    markings = [tuple(rng.randint(0, max_tokens) for _ in RANDOM_PLACES) for _ in range(n)]
    ids = rng.sample(range(1, 1 << 63), n)
    initial = rng.sample(range(n), min(num_initial, n))
    return from_edges(n, edges, markings, initial, RANDOM_PLACES, ids)


_UNARY = (ctl.AX, ctl.EX, ctl.AF, ctl.EF, ctl.AG, ctl.EG)
_BINARY = (ctl.AU, ctl.EU)


def random_predicates(count: int, seed=None, places=RANDOM_PLACES, max_tokens: int = 2) -> list[ctl.Atomic]:
    rng = random.Random(seed)
    ops = list(ctl.COMPARATORS)
    preds = []
    for _ in range(count):
        left = ctl.Place(rng.choice(places))
        right = ctl.Place(rng.choice(places)) if rng.random() < 0.4 else rng.randint(0, max_tokens)
        preds.append(ctl.Compare(rng.choice(ops), left, right))
    return preds


def random_formula(depth: int, num_predicates: int = 4, seed=None) -> Formula:
    """Random formula of nesting depth at most ``depth`` over the full surface syntax."""
    rng = random.Random(seed)
    atoms = random_predicates(num_predicates, rng.random()) + [ctl.TRUE, ctl.FALSE]
    weights = [4] * num_predicates + [1, 1]

    def gen(d: int) -> Formula:
        if d == 0 or rng.random() < 0.15:
            return rng.choices(atoms, weights)[0]
        kind = rng.random()
        if kind < 0.45:
            return rng.choice(_UNARY)(gen(d - 1))
        if kind < 0.65:
            return rng.choice(_BINARY)(gen(d - 1), gen(d - 1))
        if kind < 0.75:
            return ctl.Not(gen(d - 1))
        return rng.choice((ctl.And, ctl.Or))(gen(d - 1), gen(d - 1))

    return gen(depth)


def load_dense(directory: str | Path) -> DenseKripke:
    return from_store(kripke.open_store(directory))
