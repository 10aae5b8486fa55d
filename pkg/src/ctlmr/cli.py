"""Command line interface: ``ctlmr build|check|bench|validate|demo``.

Exit status of ``check``: 0 when the formula holds in every initial state,
1 when it does not, 2 on errors and 3 when ``--oracle-verify`` disagrees.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import ctl, fixpoint, kripke, models, oracle, statespace

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_ERROR = 2
EXIT_MISMATCH = 3

ORACLE_VERIFY_LIMIT = 50_000
BENCH_HEADER = ["property", "cardinality", "workers", "time_seconds", "cheat"]

log = logging.getLogger("ctlmr")


class BenchError(Exception):
    pass


@dataclass
class BenchRecord:
    property: str
    cardinality: int
    workers: int
    time_seconds: float
    cheat: float

    def row(self) -> list:
        return [self.property, self.cardinality, self.workers, f"{self.time_seconds:.3f}", f"{self.cheat:.3f}"]


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _worker_list(text: str) -> list[int]:
    try:
        workers = [int(w) for w in text.split(",") if w.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad worker list {text!r}") from None
    if not workers or min(workers) < 1:
        raise argparse.ArgumentTypeError("worker counts must be positive")
    return workers


def read_net(source: str) -> statespace.PetriNet:
    path = Path(source)
    if path.exists():
        return statespace.load_net(path)
    if "(" in source or source.endswith(".net"):
        return models.bundled(source)
    raise FileNotFoundError(f"no such net file or bundled model: {source}")


# --------------------------------------------------------------- commands

def cmd_build(net_file: str, out_dir: str, partitions: int = 1, bound: int | None = None,
              fail_on_deadlock: bool = False) -> int:
    net = read_net(net_file)
    store = statespace.build(net, partitions, bound, out_dir, fail_on_deadlock)
    manifest = json.loads((Path(out_dir) / kripke.MANIFEST).read_text())
    print(f"states: {len(store)}  edges: {manifest['num_edges']}  partitions: {partitions}")
    if manifest["num_deadlocks"]:
        print(f"deadlocks: {manifest['num_deadlocks']} absorbed by error state {kripke.error_state_id()}")
    return 0


def run_check(store: kripke.KripkeStore, formula_text: str, workers: int = 1, optimized_eu: bool = True,
              out_dir: str | None = None) -> fixpoint.CheckReport:
    formula = ctl.parse(formula_text)
    return fixpoint.check(store, formula, workers, optimized_eu=optimized_eu, out_dir=out_dir)


def cmd_check(store_dir: str, formula_text: str, workers: int = 1, optimized_eu: bool = True,
              oracle_verify: bool = False, fmt: str = "csv", out_dir: str | None = None,
              stream=None) -> int:
    stream = stream or sys.stdout
    store = kripke.open_store(store_dir)
    diags = kripke.validate(store)
    if diags:
        raise kripke.IntegrityError("; ".join(map(str, diags[:5])))
    report = run_check(store, formula_text, workers, optimized_eu, out_dir)
    if fmt == "json":
        json.dump(report.to_json(workers), stream, indent=2)
        stream.write("\n")
    else:
        csv.writer(stream, lineterminator="\n").writerow(report.csv_row(formula_text, workers))
    if oracle_verify:
        if len(store) > ORACLE_VERIFY_LIMIT:
            print(f"oracle verification skipped: {len(store)} states > {ORACLE_VERIFY_LIMIT}", file=sys.stderr)
        else:
            expected = oracle.oracle_ids(oracle.from_store(store), ctl.parse(formula_text))
            if expected != set(report.satisfying):
                print(f"oracle mismatch: checker {report.cardinality} states, oracle {len(expected)}",
                      file=sys.stderr)
                return EXIT_MISMATCH
    return EXIT_HOLDS if report.holds_in_initial else EXIT_FAILS


def cheat(times: dict[int, float], n: int) -> float:
    """Speedup of ``n`` workers over one worker."""
    if n == 1:
        return 1.0
    return times[1] / times[n]


def run_bench(store: kripke.KripkeStore, formula_text: str, worker_list: list[int], optimized_eu: bool = True,
              repeat: int = 1, prop: str | None = None) -> list[BenchRecord]:
    formula = ctl.parse(formula_text)
    workers = list(dict.fromkeys(([1] if 1 not in worker_list else []) + list(worker_list)))
    times: dict[int, float] = {}
    cards: dict[int, int] = {}
    for w in workers:
        best = None
        for _ in range(max(1, repeat)):
            report = fixpoint.check(store, formula, w, optimized_eu=optimized_eu)
            best = report.wall_time if best is None else min(best, report.wall_time)
            if cards.setdefault(w, report.cardinality) != report.cardinality:
                raise BenchError(f"cardinality changed between repeats at {w} workers")
        times[w] = best
    if len(set(cards.values())) != 1:
        raise BenchError(f"cardinality diverges across worker counts: {cards}")
    name = prop or formula_text
    return [BenchRecord(name, cards[w], w, times[w], cheat(times, w)) for w in workers]


def cmd_bench(store_dir: str, formula_text: str, worker_list: list[int], optimized_eu: bool = True,
              repeat: int = 1, fmt: str = "csv", stream=None) -> int:
    stream = stream or sys.stdout
    store = kripke.open_store(store_dir)
    records = run_bench(store, formula_text, worker_list, optimized_eu, repeat)
    if fmt == "json":
        json.dump([asdict(r) for r in records], stream, indent=2)
        stream.write("\n")
    else:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        for r in records:
            writer.writerow(r.row())
    return 0


def cmd_validate(store_dir: str) -> int:
    store = kripke.open_store(store_dir)
    diags = kripke.validate(store)
    for d in diags:
        print(d)
    if diags:
        return EXIT_FAILS
    print(f"ok: {len(store)} states in {store.num_partitions} partitions, relation total")
    return 0


def cmd_demo(out_dir: str, seed: int = 0, count: int = 10, states: int = 50, depth: int = 5,
             partitions: int = 2, verify: bool = False) -> int:
    """Write a reproducible random corpus of stores and formulas."""
    out = Path(out_dir)
    mismatches = 0
    for i in range(count):
        case_seed = seed * 1_000_003 + i
        k = oracle.random_kripke(states, 2.0, case_seed)
        f = oracle.random_formula(depth, 4, case_seed)
        case = out / f"case-{i:04d}"
        store = kripke.save(k.to_store(partitions), case)
        (case / "formula.ctl").write_text(ctl.to_text(f) + "\n")
        if verify:
            report = fixpoint.check(store, f)
            if set(report.satisfying) != oracle.oracle_ids(k, f):
                mismatches += 1
                print(f"{case}: mismatch", file=sys.stderr)
    print(f"wrote {count} cases to {out}" + (f", {mismatches} mismatches" if verify else ""))
    return EXIT_MISMATCH if mismatches else 0


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctlmr", description="Map/reduce CTL model checker")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a partitioned state space from a P/T net")
    p.add_argument("net", help="net file, bundled file name, or a model call like 'mutex(N=3)'")
    p.add_argument("out_dir")
    p.add_argument("--partitions", type=int, default=1)
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--fail-on-deadlock", action="store_true")

    def common(p):
        p.add_argument("store")
        p.add_argument("formula")
        p.add_argument("--optimized-eu", type=_bool, nargs="?", const=True, default=True)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("check", help="evaluate a CTL formula on a store")
    common(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--oracle-verify", action="store_true")
    p.add_argument("--out", default=None, help="copy the satisfying set's partition files here")

    p = sub.add_parser("bench", help="time a check for several worker counts")
    common(p)
    p.add_argument("--workers", type=_worker_list, default=[1, 2, 4])
    p.add_argument("--repeat", type=int, default=1)

    p = sub.add_parser("validate", help="check store invariants")
    p.add_argument("store")

    p = sub.add_parser("demo", help="generate a seeded random corpus")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--states", type=int, default=50)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--partitions", type=int, default=2)
    p.add_argument("--verify", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "build":
            return cmd_build(args.net, args.out_dir, args.partitions, args.bound, args.fail_on_deadlock)
        if args.command == "check":
            return cmd_check(args.store, args.formula, args.workers, args.optimized_eu, args.oracle_verify,
                             args.format, args.out)
        if args.command == "bench":
            return cmd_bench(args.store, args.formula, args.workers, args.optimized_eu, args.repeat, args.format)
        if args.command == "validate":
            return cmd_validate(args.store)
        return cmd_demo(args.out_dir, args.seed, args.count, args.states, args.depth, args.partitions,
                        args.verify)
    except (OSError, ctl.FormulaError, kripke.StoreError, statespace.NetError, statespace.BuildError,
            fixpoint.CheckError, fixpoint.FixpointError, BenchError, oracle.OracleError) as exc:
        print(f"ctlmr: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
