"""Work, space and delay instrumentation shared by all engines."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class WorkCounters:
    chars: int = 0
    pair_mults: int = 0
    transform_calls: int = 0
    transform_work: int = 0
    live_cells_max: int = 0
    candidates_admitted: int = 0
    # character comparisons and fingerprint updates outside convolutions
    scan_work: int = 0
    # max observed delay (in arrivals) per output component
    delays: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def observe_delay(self, component: str, delay: int) -> None:
        if delay > self.delays.get(component, -1):
            self.delays[component] = delay

    def observe_cells(self, cells: int) -> None:
        if cells > self.live_cells_max:
            self.live_cells_max = cells

    def warn(self, message: str) -> None:
        # keep the log bounded; repeated warnings carry no extra signal
        if len(self.warnings) < 64 and message not in self.warnings:
            self.warnings.append(message)

    @property
    def max_delay_observed(self) -> int:
        """Largest delay among the reported (user-visible) outputs."""
        return max(
            (v for k, v in self.delays.items() if k in REPORTED_COMPONENTS),
            default=0,
        )

    @property
    def total_work(self) -> int:
        return self.pair_mults + self.transform_work

    def as_record(self) -> dict:
        return {
            "chars": self.chars,
            "pair_mults": self.pair_mults,
            "transform_calls": self.transform_calls,
            "transform_work": self.transform_work,
            "live_cells_max": self.live_cells_max,
            "max_delay_observed": self.max_delay_observed,
            "candidates_admitted": self.candidates_admitted,
            "scan_work": self.scan_work,
            "delays": dict(self.delays),
        }


REPORTED_COMPONENTS = frozenset({"combined", "tail", "aperiodic", "oracle"})
