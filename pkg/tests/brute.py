"""Path-based CTL semantics for tiny structures.

Independent of both the fixed-point oracle and the map/reduce checker:
EG is decided by searching for a lasso inside the satisfying subgraph and
EU by plain graph reachability.
"""

from ctlmr import ctl


def _reach(start, allowed, succ):
    seen, stack = set(), [start]
    while stack:
        s = stack.pop()
        if s in seen or s not in allowed:
            continue
        seen.add(s)
        stack.extend(succ[s])
    return seen


def _on_cycle(s, allowed, succ):
    frontier = [t for t in succ[s] if t in allowed]
    return s in set().union(*(_reach(t, allowed, succ) for t in frontier)) if frontier else False


def sat(f, succ, label):
    """``succ``: dict state -> successors; ``label(atom, state)`` decides atomics."""
    S = set(succ)
    if isinstance(f, ctl.Atomic):
        return {s for s in S if label(f, s)}
    if isinstance(f, ctl.Not):
        return S - sat(f.operand, succ, label)
    if isinstance(f, ctl.And):
        return sat(f.left, succ, label) & sat(f.right, succ, label)
    if isinstance(f, ctl.Or):
        return sat(f.left, succ, label) | sat(f.right, succ, label)
    if isinstance(f, ctl.EX):
        a = sat(f.operand, succ, label)
        return {s for s in S if set(succ[s]) & a}
    if isinstance(f, ctl.AX):
        a = sat(f.operand, succ, label)
        return {s for s in S if set(succ[s]) <= a}
    if isinstance(f, ctl.EG):
        a = sat(f.operand, succ, label)
        cyc = {s for s in a if _on_cycle(s, a, succ)}
        return {s for s in a if _reach(s, a, succ) & cyc}
    if isinstance(f, ctl.EU):
        a, b = sat(f.left, succ, label), sat(f.right, succ, label)
        out = set()
        for s in S:
            # a-path from s to a b-state: reach b through a-states
            inner = _reach(s, a, succ) if s in a else set()
            if s in b or any(set(succ[t]) & b for t in inner):
                out.add(s)
        return out
    if isinstance(f, ctl.EF):
        return sat(ctl.EU(ctl.TRUE, f.operand), succ, label)
    if isinstance(f, ctl.AF):
        return S - sat(ctl.EG(ctl.Not(f.operand)), succ, label)
    if isinstance(f, ctl.AG):
        return S - sat(ctl.EF(ctl.Not(f.operand)), succ, label)
    if isinstance(f, ctl.AU):
        a, b = f.left, f.right
        nb = ctl.Not(b)
        bad = sat(ctl.EU(nb, ctl.And(ctl.Not(a), nb)), succ, label) | sat(ctl.EG(nb), succ, label)
        return S - bad
    raise TypeError(f)
