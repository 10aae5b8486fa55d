import pytest

from ctlmr import kripke, models, oracle, statespace
from ctlmr.statespace import PetriNet, Transition, build, enabled, fire, parse_net

BUNDLED = ["shared_memory(P=2)", "shared_memory(P=3)", "mutex(N=3)", "load_balancer(C=3,S=2)",
           "philosophers(N=3)", "self_loop.net", "token_move.net", "two_deadlocks.net"]


def net2(*pairs):
    return PetriNet(("a", "b"), tuple(Transition(f"t{i}", pre, post) for i, (pre, post) in enumerate(pairs)),
                    (0, 0))


def test_enabled():
    assert enabled(net2(((1, 0), (0, 0))), (0, 5)) == []
    assert enabled(net2(((1, 0), (0, 0))), (1, 0)) == [0]
    assert enabled(net2(((1, 0), (0, 0)), ((0, 2), (0, 0))), (1, 1)) == [0]


def test_fire():
    assert fire(net2(((1, 0), (0, 1))), (1, 0), 0) == (0, 1)
    assert fire(net2(((1, 1), (1, 1))), (2, 2), 0) == (2, 2)
    assert fire(net2(((1, 1), (0, 3))), (3, 1), 0) == (2, 3)
    with pytest.raises(ValueError):
        fire(net2(((1, 0), (0, 1))), (0, 0), 0)


def test_parse_minimal_net():
    net = parse_net("places: p\ninitial: p=1\ntransition t: pre p=1; post p=1\n")
    assert net.places == ("p",)
    assert len(net.transitions) == 1
    assert statespace.parse_net(statespace.net_to_text(net)) == net


@pytest.mark.parametrize("text", [
    "places: p\ntransition t: pre q=1; post p=1\n",
    "places: p\ninitial: p=1\n",
    "transition t: pre p=1\n",
    "places: p, p\ntransition t: pre p=1\n",
    "places: p\ntransition t: pre p=x\n",
    "places: p\ntransition t: sideways p=1\n",
])
def test_parse_net_errors(text):
    with pytest.raises(statespace.NetError):
        parse_net(text)


def test_bundled_shared_memory_counts():
    net = models.bundled("shared_memory(P=2)")
    # 4 places per processor, the bus, P*(P-1) external-access places
    assert len(net.places) == 4 * 2 + 1 + 2
    # 3 own-memory transitions per processor, 2 per external access pair
    assert len(net.transitions) == 3 * 2 + 2 * 2
    assert len(models.bundled("shared_memory(P=3)").places) == 19
    with pytest.raises(statespace.NetError):
        models.bundled("nosuch(P=1)")
    with pytest.raises(statespace.NetError):
        models.bundled("shared_memory(Q=2)")


def test_build_self_loop():
    store = build(models.bundled("self_loop.net"))
    assert len(store) == 1
    (rec,) = store.records.values()
    assert rec.predecessors == (rec.id,)
    assert store.error_state is None


def test_build_token_move_adds_error_state():
    store = build(models.bundled("token_move.net"))
    assert len(store) == 3
    err = store.error_state
    s1 = kripke.state_id((0, 1))
    assert set(err.predecessors) == {err.id, s1}
    assert kripke.validate(store) == []


def test_build_fail_on_deadlock():
    with pytest.raises(statespace.DeadlockError):
        build(models.bundled("token_move.net"), fail_on_deadlock=True)


def test_bound_exceeded():
    with pytest.raises(statespace.BoundExceeded) as info:
        build(models.bundled("shared_memory(P=3)"), bound=10)
    assert info.value.found == 10


def test_shared_memory_matches_bfs():
    net = models.bundled("shared_memory(P=2)")
    assert len(build(net)) == statespace.bfs_count(net) == 13


@pytest.mark.parametrize("name", BUNDLED)
@pytest.mark.parametrize("parts", [1, 2, 4, 8])
def test_bundled_builds_validate(tmp_path, name, parts):
    store = build(models.bundled(name), parts, out_dir=tmp_path / "s")
    assert kripke.validate(store) == []
    assert kripke.validate(kripke.open_store(tmp_path / "s")) == []


@pytest.mark.parametrize("name", BUNDLED)
def test_state_set_independent_of_partitions(name):
    net = models.bundled(name)
    ref = dict(build(net, 1).records)
    for parts in (2, 4, 8):
        assert dict(build(net, parts).records) == ref


@pytest.mark.parametrize("name", BUNDLED)
def test_every_edge_is_a_firing(name):
    net = models.bundled(name)
    store = build(net, 3)
    by_id = store.records
    succ_by_marking = {}
    for rec in by_id.values():
        if not rec.is_error:
            succ_by_marking[rec.marking] = {fire(net, rec.marking, t) for t in enabled(net, rec.marking)}
    for rec in by_id.values():
        for p in rec.predecessors:
            src = by_id[p]
            if rec.is_error:
                assert src.is_error or not enabled(net, src.marking)
            else:
                assert rec.marking in succ_by_marking[src.marking]
    # and every firing is recorded
    for rec in by_id.values():
        if rec.is_error:
            continue
        for m in succ_by_marking[rec.marking]:
            assert rec.id in by_id[kripke.state_id(m)].predecessors
    real = sum(1 for r in by_id.values() if not r.is_error)
    assert real == statespace.bfs_count(net)


def test_oracle_reads_built_store(tmp_path):
    build(models.bundled("mutex(N=3)"), 4, out_dir=tmp_path / "m")
    dense = oracle.load_dense(tmp_path / "m")
    assert dense.is_serial()
    assert len(dense) == statespace.bfs_count(models.bundled("mutex(N=3)"))
