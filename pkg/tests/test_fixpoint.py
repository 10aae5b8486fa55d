import pytest
from hypothesis import given, settings, strategies as st

from conftest import S0, S1, S2, at
from ctlmr import ctl, fixpoint, kripke, models, oracle, statespace
from ctlmr.ctl import EG, EU, EX
from ctlmr.fixpoint import ModelChecker, ResultSet


@pytest.fixture
def mc(demo_store, tmp_path):
    with ModelChecker(demo_store, workdir=tmp_path / "work", record_iterates=True) as checker:
        yield checker


def rs(mc, *states):
    return mc.evaluate(ctl.resolve(at(*states), ["x"]))


def test_eval_ex(mc):
    assert mc.eval_ex(rs(mc)).ids() == set()
    assert mc.eval_ex(rs(mc, S2)).ids() == {S1, S2}
    assert mc.eval_ex(mc.all_states).ids() == {S0, S1, S2}


def test_eval_eg(mc):
    assert mc.eval_eg(mc.all_states).ids() == {S0, S1, S2}
    assert mc.eval_eg(rs(mc, S1, S2)).ids() == {S1, S2}
    assert mc.eval_eg(rs(mc, S0, S1)).ids() == set()


@pytest.mark.parametrize("optimized", [True, False])
def test_eval_eu(mc, optimized):
    assert mc.eval_eu(mc.all_states, rs(mc), optimized).ids() == set()
    result = mc.eval_eu(mc.all_states, rs(mc, S2), optimized)
    assert result.ids() == {S0, S1, S2}
    assert result.cardinality == 3
    # result files are plain store records
    assert all(len(line.split("\t")) == 4 for line in result.lines())


def test_eval_not_or(mc):
    empty = rs(mc)
    assert mc.eval_not(empty).ids() == {S0, S1, S2}
    assert mc.eval_not(mc.all_states).ids() == set()
    assert mc.eval_or(rs(mc, S0), rs(mc, S0, S1)).ids() == {S0, S1}


def test_result_records_match_store(mc, demo_store):
    out = mc.eval_ex(rs(mc, S2))
    assert {r.id: r for r in out.records()} == {k: demo_store.records[k] for k in (S1, S2)}


def test_check_true(demo_store):
    report = fixpoint.check(demo_store, ctl.TRUE)
    assert report.satisfying == {S0, S1, S2}
    assert report.holds_in_initial


def test_check_ex_on_demo(demo_store):
    report = fixpoint.check(demo_store, ctl.parse("EX m(x) = 2"))
    assert report.cardinality == 2
    assert not report.holds_in_initial


def test_check_ag_everywhere(demo_store):
    report = fixpoint.check(demo_store, ctl.parse("AG m(x) >= 0"))
    assert report.satisfying == {S0, S1, S2}
    assert report.holds_in_initial


def test_check_report_serializations(demo_store, tmp_path):
    report = fixpoint.check(demo_store, ctl.parse("E[m(x) < 2 U m(x) = 2]"), out_dir=tmp_path / "r")
    row = report.csv_row("prop", 1)
    assert row[:3] == ["prop", 3, 1]
    detail = report.to_json()
    assert detail["cardinality"] == 3 and detail["operators"][0]["operator"] == "EU"
    # X0={s2}, X1={s1,s2}, X2=S, X3=S: three jobs
    assert report.iterations_per_operator == [3]
    assert report.result.ids() == {S0, S1, S2}
    assert [p.name for p in report.result.files] == ["part-00000"]


def test_dangling_predecessor_is_integrity_error(tmp_path):
    recs = [kripke.StateRecord(1, (0,), (1, 77))]
    store = kripke.from_records(recs, [1], 1, ["x"])
    with pytest.raises(fixpoint.CheckError) as info:
        fixpoint.check(store, ctl.parse("EX true"))
    assert isinstance(info.value.cause.__cause__, kripke.IntegrityError)
    assert "77" in str(info.value)


def test_shared_subformulas_cached(demo_store, tmp_path):
    with ModelChecker(demo_store, workdir=tmp_path / "w") as checker:
        checker.check(ctl.parse("EX m(x)=1 | EG EX m(x)=1"))
        names = [n for n, _ in checker.job_times]
    assert names.count("ex") == 1


def test_chain_properties_recorded(demo_store, tmp_path):
    with ModelChecker(demo_store, workdir=tmp_path / "w", record_iterates=True) as checker:
        checker.check(ctl.parse("E[m(x) < 2 U m(x) = 2] | EG m(x) > 0"))
        traces = checker.traces
    eu = next(t for t in traces if t.operator == "EU")
    eg = next(t for t in traces if t.operator == "EG")
    assert [set(x) for x in eu.iterates] == [{S2}, {S1, S2}, {S0, S1, S2}, {S0, S1, S2}]
    assert [set(x) for x in eg.iterates] == [{S1, S2}, {S1, S2}]


def test_set_level_de_morgan(tmp_path):
    k = oracle.random_kripke(40, 2.0, 5)
    with ModelChecker(k.to_store(3), workdir=tmp_path / "w") as checker:
        x = checker.evaluate(ctl.resolve(ctl.parse("m(a) >= 1"), k.place_names))
        y = checker.evaluate(ctl.resolve(ctl.parse("m(b) <= 1"), k.place_names))
        both = checker.eval_not(checker.eval_or(checker.eval_not(x), checker.eval_not(y)))
        assert both.ids() == x.ids() & y.ids()


def test_shared_memory_eg_empty_and_ef_full():
    store = statespace.build(models.bundled("shared_memory(P=2)"), 2)
    a = "m(OwnMemAcc_0) = 1 & m(OwnMemAcc_1) = 1"
    dense = oracle.from_store(store)
    eg = fixpoint.check(store, ctl.parse(f"EG ({a})"))
    ef = fixpoint.check(store, ctl.parse(f"E[true U ({a})]"))
    assert eg.cardinality == len(oracle.oracle_ids(dense, ctl.parse(f"EG ({a})"))) == 0
    assert ef.cardinality == len(oracle.oracle_ids(dense, ctl.parse(f"EF ({a})"))) == len(store)


def test_non_basis_operator_rejected(demo_store, tmp_path):
    with ModelChecker(demo_store, workdir=tmp_path / "w") as checker:
        with pytest.raises(fixpoint.CheckError):
            checker.evaluate(ctl.AX(ctl.TRUE))


@pytest.mark.parametrize("workers", [2, 4])
def test_worker_invariance_bytes(tmp_path, workers):
    store = statespace.build(models.bundled("mutex(N=3)"), 4)
    f = ctl.parse("E[m(flag1_0) = 0 U m(p3_1) = 1] | EG m(p3_0) = 0")
    ref = fixpoint.check(store, f, 1, out_dir=tmp_path / "w1").result.contents()
    got = fixpoint.check(store, f, workers, out_dir=tmp_path / f"w{workers}").result.contents()
    assert got == ref


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32), st.integers(1, 4))
def test_matches_oracle(n, seed, parts):
    k = oracle.random_kripke(n, 2.0, seed)
    f = oracle.random_formula(4, 4, seed)
    report = fixpoint.check(k.to_store(parts), f)
    assert set(report.satisfying) == oracle.oracle_ids(k, f)
    assert report.holds_in_initial == (k.id_set(k.initial) <= report.satisfying)
    assert all(t.iterations <= n for t in report.traces)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32))
def test_optimized_eu_identical(tmp_path_factory, n, seed):
    k = oracle.random_kripke(n, 2.0, seed)
    phi, psi = oracle.random_predicates(2, seed)
    base = tmp_path_factory.mktemp("eu")
    outs = []
    with ModelChecker(k.to_store(3), workdir=base / "w") as checker:
        a = checker.evaluate(ctl.resolve(phi, k.place_names))
        b = checker.evaluate(ctl.resolve(psi, k.place_names))
        for optimized in (False, True):
            outs.append(checker.eval_eu(a, b, optimized).contents())
    assert outs[0] == outs[1]
