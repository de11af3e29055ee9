"""Streaming k-mismatch for patterns with a small approximate period.

The pattern is split into a head and a tail of length ``2s``.  The head is
matched through batched convolutions of backward differences, with every
block of ``s`` arrivals processed during the next block (delay below
``2s``); the tail uses the zero-delay online convolution.  Summing both
halves gives each distance at the moment its last character arrives.

Texts without the period are handled fragment by fragment: inside a
fragment of length ``3m/2`` all occurrences lie in one region around the
middle where the period survives, and only that region is fed to the
matcher.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Sequence

from .batched_conv import BatchedState
from .core_sparse import FuncSeq, SparseFunc, SummationJob
from .counters import WorkCounters
from .ham_core import (
    CorrBuffer,
    PeriodicRep,
    backward_diff_seq,
    char_diff_entries,
    cross_corr_step,
    ham_from_corr,
)
from .online_conv import OnlineState
from .report import MatchReport


@dataclass
class PeriodicPlan:
    """Pattern-side preprocessing shared by every fragment engine."""

    pattern: Sequence[Hashable]
    k: int
    s: int
    rho: int
    d: int
    fft_threshold: int | None = None
    head: Sequence[Hashable] = field(init=False)
    tail: Sequence[Hashable] = field(init=False)
    g_head: FuncSeq = field(init=False)
    g_tail: FuncSeq = field(init=False)

    def __post_init__(self):
        m = len(self.pattern)
        if not 1 <= self.k <= self.s <= m:
            raise ValueError(f"need 1 <= k <= s <= m, got k={self.k} s={self.s} m={m}")
        if self.rho < 1:
            raise ValueError("rho must be positive")
        tail_len = min(2 * self.s, m)
        self.head = self.pattern[: m - tail_len]
        self.tail = self.pattern[m - tail_len :]
        self.g_head = backward_diff_seq(self.head, self.rho, reversed=True)
        self.g_tail = backward_diff_seq(self.tail, self.rho, reversed=True)

    @property
    def m(self) -> int:
        return len(self.pattern)

    @property
    def budget(self) -> int:
        """Mismatch budget ``d + 2k`` for the periodic text region."""
        return self.d + 2 * self.k


class CombinedEngine:
    """Zero-delay matcher for texts sharing the pattern's approximate period.

    Indices are local to the fed stream.  :meth:`push` returns the report
    for the window ending at the new character once a full window exists.
    """

    def __init__(self, plan: PeriodicPlan, counters: WorkCounters | None = None):
        self.plan = plan
        self.counters = counters if counters is not None else WorkCounters()
        self.rho = plan.rho
        self.s = plan.s
        self.m = plan.m
        self.mh = len(plan.head)
        self.mt = len(plan.tail)
        self.x = -1
        self.recent: deque[Hashable] = deque(maxlen=self.rho)

        self.tail_conv = OnlineState(plan.g_tail, self.mt + self.rho, self.counters, plan.fft_threshold)
        self.tail_corr = CorrBuffer(self.rho)

        self.head_on = self.mh > 0
        if self.head_on:
            # outputs are wanted for every fed index, not just the pattern's span
            self.head_batched = BatchedState(plan.g_head, self.s, 1 << 62, self.counters, plan.fft_threshold)
            self.head_corr = CorrBuffer(self.rho)
        self.batch: dict[Hashable, SparseFunc] = {}
        self.job: SummationJob | None = None
        self.job_block = 0
        self.job_budget = 0
        # finalized head distances keyed by the end index of the head window
        self.head_out: dict[int, int] = {}

    def _diff_slice(self, c: Hashable) -> SparseFunc | None:
        prev = self.recent[0] if len(self.recent) == self.rho else None
        self.recent.append(c)
        return char_diff_entries(c, prev)

    def head_push(self, x: int, sl: SparseFunc | None) -> None:
        """Feed one arrival to the head; finalizes whole blocks of head values."""
        s = self.s
        if sl:
            for key, v in sl.items():
                self.batch.setdefault(key, {})[x] = v
        if self.job is not None:
            self.job.step(self.job_budget)
            if self.job.done:
                self._finalize_block()
        if x % s == s - 1:
            if self.job is not None:
                self.counters.warn("head block job overran its window")
                self.job.run()
                self._finalize_block()
            block = x // s + 1
            self.job = self.head_batched.start_batch(FuncSeq(funcs=self.batch), block)
            self.job_block = block
            self.job_budget = max(1, -(-self.job.cost // s))
            self.batch = {}

    def _finalize_block(self) -> None:
        job, b = self.job, self.job_block
        self.job = None
        lo = self.s * (b - 1)
        for j in range(lo, lo + self.s):
            val = cross_corr_step(self.head_corr, job.result.get(j, 0), j)
            if j >= self.mh - 1:
                self.head_out[j] = ham_from_corr(val, self.mh)
                self.counters.observe_delay("head", self.x - j)

    def tail_push(self, x: int, sl: SparseFunc | None) -> int | None:
        """Distance of the tail against the text suffix ending at ``x``."""
        conv = self.tail_conv.push(sl or {}, x)
        val = cross_corr_step(self.tail_corr, conv, x)
        if x < self.mt - 1:
            return None
        self.counters.observe_delay("tail", 0)
        return ham_from_corr(val, self.mt)

    def push(self, c: Hashable) -> MatchReport | None:
        self.x += 1
        x = self.x
        sl = self._diff_slice(c)
        tail_ham = self.tail_push(x, sl)
        if self.head_on:
            self.head_push(x, sl)
        if x < self.m - 1:
            return None
        head_ham = 0
        if self.head_on:
            j = x - self.mt
            head_ham = self.head_out.pop(j, None)
            if head_ham is None:
                # unreachable when the block schedule holds
                raise RuntimeError(f"head distance for {j} not ready at {x}")
        self.counters.observe_delay("combined", 0)
        total = head_ham + tail_ham
        return MatchReport(x, total if total <= self.plan.k else None)

    def cells(self) -> int:
        cells = self.tail_conv.cells() + self.tail_corr.cells() + len(self.recent)
        if self.head_on:
            cells += self.head_batched.cells() + self.head_corr.cells() + len(self.head_out)
            cells += sum(len(f) for f in self.batch.values())
            if self.job is not None:
                cells += len(self.job.result)
        return cells


def combined_run(plan: PeriodicPlan, text: Iterable[Hashable], counters: WorkCounters | None = None) -> list[MatchReport]:
    eng = CombinedEngine(plan, counters)
    return [r for r in map(eng.push, text) if r is not None]


class FragmentEngine:
    """Matcher for one text fragment of length ``m + m//2 - 1``.

    Phase one keeps the longest suffix of the first half that has
    ``d + 2k`` mismatches against its ``rho``-shift; phase two extends it
    rightwards while the budget lasts and replays the region into a
    :class:`CombinedEngine`, two queued characters per arrival until it
    catches up.
    """

    def __init__(self, plan: PeriodicPlan, offset: int = 0, counters: WorkCounters | None = None):
        self.plan = plan
        self.offset = offset
        self.counters = counters if counters is not None else WorkCounters()
        self.rho = plan.rho
        self.half = plan.m // 2
        self.length = plan.m + self.half - 1
        self.x = -1
        self.recent: deque[Hashable] = deque(maxlen=self.rho)
        self.rep = PeriodicRep(self.rho)
        self.alg: CombinedEngine | None = None
        self.left_start: int | None = None
        self.fed_until = -1
        self.right_mismatches = 0
        self.stopped = False
        self.pending: dict[int, MatchReport] = {}

    @property
    def finished(self) -> bool:
        return self.x >= self.length - 1

    @property
    def tstar_bounds(self) -> tuple[int, int] | None:
        """Local ``[start, end]`` of the region fed to the matcher so far."""
        if self.left_start is None:
            return None
        return self.left_start, self.fed_until

    def _feed(self, c: Hashable) -> None:
        self.fed_until += 1
        rep = self.alg.push(c)
        if rep is not None:
            pos = self.left_start + rep.position
            self.pending[pos] = MatchReport(pos, rep.distance)
            if pos < self.x:
                self.counters.observe_delay("combined", self.x - pos)

    def push(self, c: Hashable) -> MatchReport | None:
        """Consume the next fragment character; report if a window ends here."""
        self.x += 1
        x = self.x
        prev = self.recent[0] if len(self.recent) == self.rho else None
        self.recent.append(c)
        if x < self.half:
            self.rep.grow(c, prev)
            if self.rep.mismatches() > self.plan.budget:
                new_l = self.rep.L[0][0] - self.rho
                self.rep.crop(new_l)
                self.rep.shrink()
            return None
        if x == self.half:
            self.alg = CombinedEngine(self.plan, self.counters)
            self.left_start = self.rep.l
            self.fed_until = self.rep.l - 1
        if not self.stopped:
            if x - self.rho >= self.half and c != prev:
                self.right_mismatches += 1
                if self.right_mismatches > self.plan.budget:
                    self.stopped = True
                    self.rep = PeriodicRep(self.rho)
            if not self.stopped:
                if len(self.rep):
                    self.rep.grow(c, prev)
                    for _ in range(2):
                        if len(self.rep):
                            self._feed(self.rep.shrink())
                else:
                    self._feed(c)
        if x < self.plan.m - 1:
            return None
        self.counters.observe_delay("combined", 0)
        rep = self.pending.pop(x, None)
        return rep if rep is not None else MatchReport(x, None)

    def cells(self) -> int:
        cells = self.rep.cells() + len(self.recent) + len(self.pending)
        if self.alg is not None:
            cells += self.alg.cells()
        return cells


def arbitrary_text_run(plan: PeriodicPlan, text: Sequence[Hashable], counters: WorkCounters | None = None) -> list[MatchReport]:
    eng = FragmentEngine(plan, 0, counters)
    return [r for r in map(eng.push, text) if r is not None]


class SplitDriver:
    """Cover the stream with overlapping fragments of length ``m + m//2 - 1``.

    Fragment ``j`` starts at ``j * (m//2)`` and owns the windows ending in
    ``[j*(m//2) + m - 1, (j+1)*(m//2) + m - 1)``, which are exactly the
    windows it can complete.
    """

    def __init__(self, plan: PeriodicPlan, counters: WorkCounters | None = None, sample_every: int = 1):
        self.plan = plan
        self.counters = counters if counters is not None else WorkCounters()
        self.m = plan.m
        self.step = max(1, self.m // 2)
        self.fragments: list[FragmentEngine] = []
        self.i = -1
        self.sample_every = sample_every
        self.fragments_started = 0

    def push(self, c: Hashable) -> MatchReport | None:
        self.i += 1
        i = self.i
        self.counters.chars += 1
        if self.m == 1:
            self.counters.observe_delay("combined", 0)
            return MatchReport(i, 0 if c == self.plan.pattern[0] else 1)
        if i % self.step == 0:
            self.fragments.append(FragmentEngine(self.plan, i, self.counters))
            self.fragments_started += 1
        out = None
        for frag in self.fragments:
            rep = frag.push(c)
            if rep is not None:
                if out is not None:
                    raise RuntimeError(f"two fragments report position {i}")
                out = MatchReport(frag.offset + rep.position, rep.distance)
        if self.sample_every and i % self.sample_every == 0:
            self.counters.observe_cells(self.cells())
        self.fragments = [f for f in self.fragments if not f.finished]
        return out

    def run(self, text: Iterable[Hashable]) -> Iterator[MatchReport]:
        for c in text:
            rep = self.push(c)
            if rep is not None:
                yield rep

    def cells(self) -> int:
        return sum(f.cells() for f in self.fragments)


def split_driver(P: Sequence[Hashable], k: int, s: int, text: Iterable[Hashable], rho: int, d: int | None = None,
                 counters: WorkCounters | None = None, fft_threshold: int | None = None) -> Iterator[MatchReport]:
    plan = PeriodicPlan(P, k, s, rho, 6 * k if d is None else d, fft_threshold)
    return SplitDriver(plan, counters).run(text)

