from __future__ import annotations

from typing import NamedTuple


class MatchReport(NamedTuple):
    """Outcome for the length-``m`` text window ending at ``position``.

    ``distance`` is the Hamming distance when it is at most ``k`` and
    ``None`` when it exceeds ``k``.
    """

    position: int
    distance: int | None

    @property
    def exceeds(self) -> bool:
        return self.distance is None

    def line(self) -> str:
        return f"{self.position}\t{-1 if self.distance is None else self.distance}"
