"""Bundled parameterized P/T nets.

Each generator returns the net in text form so that every bundled model
goes through :func:`ctlmr.statespace.parse_net` like a user file would.

``shared_memory(P)``
    P processors, each with a private memory, competing for one shared
    bus to reach the other processors' memories.
``mutex(N)``
    1-safe Dekker-style mutual exclusion among N processes using flags.
``load_balancer(C, S)``
    C clients send requests through a single balancer to S servers.
``philosophers(N)``
    Dining philosophers taking the left fork first; deadlocks when every
    philosopher holds one fork.
"""

from __future__ import annotations

import re
from importlib import resources

from .statespace import NetError, PetriNet, parse_net


def _declare(places, initial, transitions) -> str:
    lines = [f"places: {', '.join(places)}"]
    init = ", ".join(f"{p}={v}" for p, v in initial.items() if v)
    lines.append(f"initial: {init or '-'}")
    for name, pre, post in transitions:
        pre_s = ", ".join(f"{p}={v}" for p, v in pre.items()) or "-"
        post_s = ", ".join(f"{p}={v}" for p, v in post.items()) or "-"
        lines.append(f"transition {name}: pre {pre_s}; post {post_s}")
    return "\n".join(lines) + "\n"


def shared_memory(P: int = 3) -> str:
    if P < 2:
        raise NetError("shared_memory needs P >= 2")
    places, initial, trans = [], {}, []
    for i in range(P):
        places += [f"Active_{i}", f"Memory_{i}", f"Queue_{i}", f"OwnMemAcc_{i}"]
        initial[f"Active_{i}"] = 1
        initial[f"Memory_{i}"] = 1
    places.append("Ext_Bus")
    initial["Ext_Bus"] = 1
    for i in range(P):
        for j in range(P):
            if i != j:
                places.append(f"Ext_Mem_Acc_{i}_{j}")
    for i in range(P):
        trans.append((f"Begin_Own_Acc_{i}", {f"Active_{i}": 1, f"Memory_{i}": 1}, {f"OwnMemAcc_{i}": 1}))
        trans.append((f"End_Own_Acc_{i}", {f"OwnMemAcc_{i}": 1}, {f"Active_{i}": 1, f"Memory_{i}": 1}))
        trans.append((f"Req_Ext_Acc_{i}", {f"Active_{i}": 1}, {f"Queue_{i}": 1}))
        for j in range(P):
            if i == j:
                continue
            trans.append((f"Begin_Ext_Acc_{i}_{j}", {f"Queue_{i}": 1, "Ext_Bus": 1, f"Memory_{j}": 1},
                          {f"Ext_Mem_Acc_{i}_{j}": 1}))
            trans.append((f"End_Ext_Acc_{i}_{j}", {f"Ext_Mem_Acc_{i}_{j}": 1},
                          {f"Active_{i}": 1, "Ext_Bus": 1, f"Memory_{j}": 1}))
    return _declare(places, initial, trans)


def mutex(N: int = 3) -> str:
    if N < 2:
        raise NetError("mutex needs N >= 2")
    places, initial, trans = [], {}, []
    for i in range(N):
        places += [f"p0_{i}", f"p1_{i}", f"p3_{i}", f"flag0_{i}", f"flag1_{i}"]
        initial[f"p0_{i}"] = 1
        initial[f"flag0_{i}"] = 1
    for i in range(N):
        trans.append((f"try_{i}", {f"p0_{i}": 1, f"flag0_{i}": 1}, {f"p1_{i}": 1, f"flag1_{i}": 1}))
        for j in range(N):
            if i != j:
                trans.append((f"withdraw_{i}_{j}", {f"p1_{i}": 1, f"flag1_{i}": 1, f"flag1_{j}": 1},
                              {f"p0_{i}": 1, f"flag0_{i}": 1, f"flag1_{j}": 1}))
        others = {f"flag0_{j}": 1 for j in range(N) if j != i}
        trans.append((f"enter_{i}", {f"p1_{i}": 1, **others}, {f"p3_{i}": 1, **others}))
        trans.append((f"exit_{i}", {f"p3_{i}": 1, f"flag1_{i}": 1}, {f"p0_{i}": 1, f"flag0_{i}": 1}))
    return _declare(places, initial, trans)


def load_balancer(C: int = 3, S: int = 2) -> str:
    if C < 1 or S < 1:
        raise NetError("load_balancer needs C >= 1 and S >= 1")
    places, initial, trans = [], {}, []
    for i in range(C):
        places += [f"client_idle_{i}", f"client_wait_{i}"]
        initial[f"client_idle_{i}"] = 1
    places += ["lb_requests", "lb_idle", "lb_routing", "lb_responses"]
    initial["lb_idle"] = 1
    for k in range(S):
        places += [f"server_queue_{k}", f"server_idle_{k}", f"server_busy_{k}"]
        initial[f"server_idle_{k}"] = 1
    for i in range(C):
        trans.append((f"send_{i}", {f"client_idle_{i}": 1}, {f"client_wait_{i}": 1, "lb_requests": 1}))
        trans.append((f"reply_{i}", {f"client_wait_{i}": 1, "lb_responses": 1}, {f"client_idle_{i}": 1}))
    trans.append(("receive", {"lb_requests": 1, "lb_idle": 1}, {"lb_routing": 1}))
    for k in range(S):
        trans.append((f"route_{k}", {"lb_routing": 1}, {"lb_idle": 1, f"server_queue_{k}": 1}))
        trans.append((f"start_{k}", {f"server_queue_{k}": 1, f"server_idle_{k}": 1}, {f"server_busy_{k}": 1}))
        trans.append((f"finish_{k}", {f"server_busy_{k}": 1}, {f"server_idle_{k}": 1, "lb_responses": 1}))
    return _declare(places, initial, trans)


def philosophers(N: int = 3) -> str:
    if N < 2:
        raise NetError("philosophers needs N >= 2")
    places, initial, trans = [], {}, []
    for i in range(N):
        places += [f"think_{i}", f"fork_{i}", f"left_{i}", f"eat_{i}"]
        initial[f"think_{i}"] = 1
        initial[f"fork_{i}"] = 1
    for i in range(N):
        right = f"fork_{(i + 1) % N}"
        trans.append((f"take_left_{i}", {f"think_{i}": 1, f"fork_{i}": 1}, {f"left_{i}": 1}))
        trans.append((f"take_right_{i}", {f"left_{i}": 1, right: 1}, {f"eat_{i}": 1}))
        trans.append((f"release_{i}", {f"eat_{i}": 1}, {f"think_{i}": 1, f"fork_{i}": 1, right: 1}))
    return _declare(places, initial, trans)


GENERATORS = {
    "shared_memory": shared_memory,
    "mutex": mutex,
    "load_balancer": load_balancer,
    "philosophers": philosophers,
}

_CALL = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def bundled_files() -> list[str]:
    return sorted(p.name for p in resources.files("ctlmr.nets").iterdir() if p.name.endswith(".net"))


def bundled_text(name: str) -> str:
    """Net text for ``shared_memory(P=3)``-style calls or a bundled file name."""
    m = _CALL.match(name)
    if m:
        gen = GENERATORS.get(m.group(1))
        if gen is None:
            raise NetError(f"unknown bundled model {m.group(1)!r}")
        kwargs = {}
        for part in filter(None, (p.strip() for p in m.group(2).split(","))):
            key, _, value = part.partition("=")
            try:
                kwargs[key.strip()] = int(value)
            except ValueError:
                raise NetError(f"bad parameter {part!r}") from None
        try:
            return gen(**kwargs)
        except TypeError as exc:
            raise NetError(str(exc)) from None
    if name in bundled_files():
        return resources.files("ctlmr.nets").joinpath(name).read_text(encoding="utf-8")
    raise NetError(f"unknown bundled model {name!r}")


def bundled(name: str) -> PetriNet:
    return parse_net(bundled_text(name))
