"""Incremental batched convolution summation.

``G`` is known up front; ``F`` arrives in batches, the ``i``-th holding the
entries of ``F`` on ``Phi_i = [s(i-1), si)``.  After each batch the
summation ``sum_j f_j * g_j`` is wanted on that same range.

``G`` is cut into the overlapping pieces ``G|Gamma_a`` with
``Gamma_a = [s(a-1), s(a+1))``; since ``Phi_i - Phi_{i-a}`` lies inside
``Gamma_a``, the output on ``Phi_i`` only pairs batch ``i-a`` with piece
``a``.  Every piece has diameter at most ``2s`` and every batch at most
``s``, so each batch costs an offline summation over short functions.
"""

from __future__ import annotations

from collections import deque
from typing import Hashable

from .core_sparse import FuncSeq, SparseFunc, SummationJob, dense_cost
from .counters import WorkCounters


class DomainError(ValueError):
    """Support outside the declared index domain."""


class OrderingError(ValueError):
    """A batch or index arrived out of order or outside its range."""


def gamma(a: int, s: int) -> tuple[int, int]:
    return s * (a - 1), s * (a + 1)


def phi(b: int, s: int) -> tuple[int, int]:
    return s * (b - 1), s * b


class BatchedState:
    def __init__(self, G: FuncSeq, s: int, n: int, counters: WorkCounters | None = None,
                 threshold: int | None = None):
        if s < 1:
            raise ValueError("block length must be positive")
        sup = G.support
        if sup and (min(sup) < 0 or max(sup) >= n):
            raise DomainError(f"support of G must lie in [0, {n})")
        self.s = s
        self.n = n
        self.q = -(-(n + 1) // s)
        self.t = G.t
        self.counters = counters if counters is not None else WorkCounters()
        # enumerate pairs unless that costs more than one transform over a batch's span
        self.threshold = dense_cost(s, 2 * s) if threshold is None else threshold
        self.g_norm = G.norm
        # g_star[a][slot] = g_slot restricted to Gamma_a
        self.g_star: dict[int, dict[Hashable, SparseFunc]] = {}
        for key, g in G:
            for idx, v in g.items():
                for a in (idx // s, idx // s + 1):
                    self.g_star.setdefault(a, {}).setdefault(key, {})[idx] = v
        # batches older than the farthest nonempty piece can never contribute
        self.reach = max(self.g_star, default=-1) + 1
        self.g_cells = sum(len(f) for piece in self.g_star.values() for f in piece.values())
        self.f_cells = 0
        self.f_star: deque[tuple[int, FuncSeq]] = deque()
        self.i = 0
        self.f_norm_total = 0

    def start_batch(self, batch: FuncSeq, i: int | None = None) -> SummationJob:
        """Admit batch ``i`` and return the resumable job computing its output.

        The job result, once finished, is ``[F (x) G]`` restricted to
        ``Phi_i``.
        """
        i = self.i + 1 if i is None else i
        if i != self.i + 1:
            raise OrderingError(f"expected batch {self.i + 1}, got {i}")
        lo, hi = phi(i, self.s)
        sup = batch.support
        if sup and (min(sup) < lo or max(sup) >= hi):
            raise OrderingError(f"batch {i} has entries outside [{lo}, {hi})")
        self.i = i
        self.f_norm_total += batch.norm
        if batch.norm:
            self.f_star.appendleft((i, batch))
            self.f_cells += batch.norm
        while self.f_star and self.f_star[-1][0] <= i - max(self.reach, 1):
            self.f_cells -= self.f_star.pop()[1].norm
        if self.f_norm_total + self.g_norm > self.s:
            self.counters.warn("block length below ||F|| + ||G||; per-batch bound not guaranteed")
        pairs = []
        for b, fb in self.f_star:
            piece = self.g_star.get(i - b)
            if not piece:
                continue
            for key, f in fb:
                g = piece.get(key)
                if g:
                    pairs.append((f, g))
        out_hi = min(hi, self.n)
        return SummationJob(pairs, threshold=self.threshold, counters=self.counters, window=(lo, max(lo, out_hi)))

    def cells(self) -> int:
        return self.g_cells + self.f_cells


def batched_init(G: FuncSeq, s: int, n: int, counters: WorkCounters | None = None) -> BatchedState:
    return BatchedState(G, s, n, counters)


def ingest_batch(state: BatchedState, batch: FuncSeq) -> SparseFunc:
    """Admit the next batch and return ``[F (x) G]`` on its range."""
    return state.start_batch(batch).run()


def split_batches(F: FuncSeq, s: int, n: int) -> list[FuncSeq]:
    """Cut ``F`` into the batches ``F|Phi_1, F|Phi_2, ...`` covering ``[0, n]``."""
    q = -(-(n + 1) // s)
    return [F.restrict(*phi(i, s)) for i in range(1, q + 1)]

