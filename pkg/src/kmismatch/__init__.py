"""Streaming k-mismatch pattern matching with a space/work trade-off parameter."""

from .aperiodic_engine import AperiodicEngine
from .counters import WorkCounters
from .harness import ConfigError, engine_select, kmismatch, oracle_kmismatch
from .periodic_engine import PeriodicPlan, SplitDriver
from .report import MatchReport

__all__ = [
    "AperiodicEngine",
    "ConfigError",
    "MatchReport",
    "PeriodicPlan",
    "SplitDriver",
    "WorkCounters",
    "engine_select",
    "kmismatch",
    "oracle_kmismatch",
]
