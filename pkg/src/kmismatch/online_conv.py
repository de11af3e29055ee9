"""Zero-delay online convolution summation.

``G`` (support in ``[0, m)``) is split into dyadic pieces
``G_a = G|Gamma_a`` with ``Gamma_a = [2^a - 2, 2^(a+1) - 3]``.  ``F`` arrives
index by index.  For level ``a`` and block ``b`` the job
``F|Phi_{a,b} (x) G_a`` with
``Phi_{a,b} = [(b-4) 2^(a-1) + 2, (b-1) 2^(a-1) + 1]`` starts once the last
index of ``Phi_{a,b}`` has arrived and is spread over the following
``2^(a-1)`` arrivals.  The output at ``i`` is the sum over levels of the
job for block ``floor(i / 2^(a-1))``, which has always finished by then.
All intervals here are closed.
"""

from __future__ import annotations

from collections import deque
from typing import Hashable

from .batched_conv import DomainError, OrderingError
from .core_sparse import FuncSeq, SparseFunc, SummationJob, dense_cost
from .counters import WorkCounters


def level_count(m: int) -> int:
    """``ceil(log2(m + 2)) - 1``."""
    return (m + 1).bit_length() - 1


def gamma_level(a: int) -> tuple[int, int]:
    return (1 << a) - 2, (1 << (a + 1)) - 3


def phi_level(a: int, b: int) -> tuple[int, int]:
    half = 1 << (a - 1)
    return (b - 4) * half + 2, (b - 1) * half + 1


class _LevelJob:
    __slots__ = ("block", "deadline", "job", "budget")

    def __init__(self, block: int, deadline: int, job: SummationJob, budget: int):
        self.block = block
        self.deadline = deadline
        self.job = job
        self.budget = budget


class OnlineState:
    def __init__(self, G: FuncSeq, m: int, counters: WorkCounters | None = None,
                 threshold: int | None = None):
        if m < 1:
            raise ValueError("m must be positive")
        sup = G.support
        if sup and (min(sup) < 0 or max(sup) >= m):
            raise DomainError(f"support of G must lie in [0, {m})")
        self.m = m
        self.M = level_count(m)
        if gamma_level(self.M)[1] < m - 1:
            raise AssertionError("dyadic ranges fail to cover the pattern domain")
        self.counters = counters if counters is not None else WorkCounters()
        # fixed pair-enumeration cutoff; None uses the cost of one transform over the level's span
        self.threshold = threshold
        self.g_levels: dict[int, dict[Hashable, SparseFunc]] = {}
        for key, g in G:
            for idx, v in g.items():
                a = (idx + 2).bit_length() - 1
                self.g_levels.setdefault(a, {}).setdefault(key, {})[idx] = v
        self.g_norm = G.norm
        self.f_cells = 0
        self.delta = 1
        for a_piece in self.g_levels.values():
            per_index: dict[int, int] = {}
            for g in a_piece.values():
                for idx in g:
                    per_index[idx] = per_index.get(idx, 0) + 1
            self.delta = max(self.delta, max(per_index.values(), default=0))
        self.keep = 3 * (1 << (self.M - 1)) + 2
        self.recent_f: deque[tuple[int, SparseFunc]] = deque()
        self.jobs: dict[int, _LevelJob] = {}
        # finished job outputs: level -> block -> values on that block's indices
        self.partials: dict[int, dict[int, SparseFunc]] = {}
        self.i = -1
        self.f_norm = 0
        self.max_step_work = 0
        self.deadline_misses = 0

    def _window(self, lo: int, hi: int) -> dict[Hashable, SparseFunc]:
        out: dict[Hashable, SparseFunc] = {}
        for idx, sl in reversed(self.recent_f):
            if idx < lo:
                break
            if idx > hi:
                continue
            for key, v in sl.items():
                out.setdefault(key, {})[idx] = v
        return out

    def push(self, slice_: SparseFunc, i: int | None = None) -> int:
        """Receive ``F|{i}`` as ``{slot: value}`` and return ``[F (x) G](i)``."""
        i = self.i + 1 if i is None else i
        if i != self.i + 1:
            raise OrderingError(f"expected index {self.i + 1}, got {i}")
        self.i = i
        if slice_:
            self.recent_f.append((i, dict(slice_)))
            self.f_norm += len(slice_)
            self.f_cells += len(slice_)
            self.delta = max(self.delta, len(slice_))
        while self.recent_f and self.recent_f[0][0] < i - self.keep:
            self.f_cells -= len(self.recent_f.popleft()[1])

        before = self.counters.total_work
        for a in range(1, self.M + 1):
            half = 1 << (a - 1)
            if (i - 1) % half:
                continue
            b = (i - 1) // half + 1
            piece = self.g_levels.get(a)
            if not piece:
                continue
            lo, hi = phi_level(a, b)
            fwin = self._window(lo, hi)
            pairs = [(f, piece[key]) for key, f in fwin.items() if key in piece]
            job = SummationJob(
                pairs,
                threshold=dense_cost(3 * half, 2 * half) if self.threshold is None else self.threshold,
                counters=self.counters,
                window=(b * half, (b + 1) * half),
            )
            budget = -(-job.cost // half)
            self.jobs[a] = _LevelJob(b, b * half, job, budget)

        total = 0
        for a in range(1, self.M + 1):
            lj = self.jobs.get(a)
            if lj is not None:
                lj.job.step(lj.budget)
                if lj.deadline <= i and not lj.job.done:
                    self.deadline_misses += 1
                    lj.job.run()
                if lj.job.done:
                    self.partials.setdefault(a, {})[lj.block] = lj.job.result
                    del self.jobs[a]
            parts = self.partials.get(a)
            if parts:
                cur = i >> (a - 1)
                for blk in [blk for blk in parts if blk < cur]:
                    del parts[blk]
                total += parts.get(cur, {}).get(i, 0)
        self.max_step_work = max(self.max_step_work, self.counters.total_work - before)
        return total

    def cells(self) -> int:
        return (
            self.g_norm
            + self.f_cells
            + sum(len(r) for parts in self.partials.values() for r in parts.values())
            + sum(len(lj.job.result) for lj in self.jobs.values())
        )


def online_init(G: FuncSeq, m: int, n: int | None = None, counters: WorkCounters | None = None) -> OnlineState:
    return OnlineState(G, m, counters)


def push_index(state: OnlineState, slice_: SparseFunc, i: int) -> int:
    return state.push(slice_, i)
