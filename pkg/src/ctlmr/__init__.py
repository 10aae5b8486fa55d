"""Explicit-state CTL model checking with iterated map/reduce jobs."""

from .ctl import normalize, parse
from .fixpoint import CheckReport, ModelChecker, ResultSet, check
from .kripke import KripkeStore, StateRecord, open_store

__all__ = [
    "CheckReport",
    "KripkeStore",
    "ModelChecker",
    "ResultSet",
    "StateRecord",
    "check",
    "normalize",
    "open_store",
    "parse",
]
__version__ = "0.1.0"
