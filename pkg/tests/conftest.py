import pytest

from ctlmr import ctl, kripke
from ctlmr.kripke import StateRecord

S0, S1, S2 = (kripke.state_id((i,)) for i in range(3))


def demo_records():
    """s0 -> s1 -> s2 -> s2, marking of s_i is (i,)."""
    return [
        StateRecord(S0, (0,), ()),
        StateRecord(S1, (1,), (S0,)),
        StateRecord(S2, (2,), tuple(sorted((S1, S2)))),
    ]


@pytest.fixture
def demo_store():
    return kripke.from_records(demo_records(), [S0], 1, ["x"])


@pytest.fixture
def demo_saved(tmp_path, demo_store):
    return kripke.save(demo_store, tmp_path / "demo")


def at(*states):
    """Atomic predicate true exactly at the given demo states (by marking value)."""
    values = sorted({(S0, S1, S2).index(s) for s in states})
    if not values:
        return ctl.FALSE
    f = ctl.Compare("=", ctl.Place("x"), values[0])
    for v in values[1:]:
        f = ctl.Or(f, ctl.Compare("=", ctl.Place("x"), v))
    return f


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): exit criterion reported in the summary")
    config._acceptance = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = dict(report.user_properties).get("criterion")
    if name:
        _CONFIG._acceptance.append((name, report.outcome, report.duration))


def pytest_sessionstart(session):
    global _CONFIG
    _CONFIG = session.config


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = getattr(config, "_acceptance", [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in rows:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {name} ({duration:.1f}s)")


@pytest.fixture
def criterion(record_property):
    def named(name):
        record_property("criterion", name)
    return named
