"""Hamming distance through cross-correlation of backward differences.

For strings ``T`` and ``P`` the cross-correlation ``[T (x) P](i)`` counts
the matching aligned pairs of ``P`` against ``T[i-m+1 .. i]``.  With
``D(i) = sum_c Delta_rho[T_c] * Delta_rho[P^R_c] (i)`` it satisfies

    X(i) = D(i) + 2 X(i - rho) - X(i - 2 rho),

so a stream of ``D`` values plus a ring of the last ``2 rho`` values of
``X`` reproduces ``X`` exactly.  ``D`` is sparse whenever both strings are
approximately ``rho``-periodic.
"""

from __future__ import annotations

from collections import deque
from typing import Hashable, Sequence

import numpy as np

from .core_sparse import FuncSeq, SparseFunc


class PipelineCorruption(ArithmeticError):
    """A reconstructed correlation value left its feasible range."""


def char_diff_entries(c: Hashable, prev: Hashable | None) -> SparseFunc | None:
    """Nonzero entries of ``Delta_rho[T_*](i)`` at one index, keyed by symbol."""
    if prev is None:
        return {c: 1}
    if c == prev:
        return None
    return {c: 1, prev: -1}


def backward_diff_seq(X: Sequence[Hashable], rho: int, reversed: bool = False) -> FuncSeq:
    """One slot per symbol holding ``Delta_rho`` of its characteristic function.

    ``reversed`` differentiates ``X^R`` where ``X^R_c(i) = 1`` iff
    ``X[len(X)-1-i] == c``.  The functions are taken over all integers, so
    entries up to index ``len(X) + rho - 1`` appear.
    """
    if rho < 1:
        raise ValueError("rho must be positive")
    seq = list(X)[::-1] if reversed else list(X)
    n = len(seq)
    out: dict[Hashable, SparseFunc] = {}
    for i in range(n + rho):
        cur = seq[i] if i < n else None
        prev = seq[i - rho] if i >= rho else None
        if cur == prev:
            continue
        if cur is not None:
            out.setdefault(cur, {})[i] = 1
        if prev is not None:
            out.setdefault(prev, {})[i] = -1
    return FuncSeq(funcs=out)


class CorrBuffer:
    """Ring of the last ``2 rho`` cross-correlation values (zeros before 0)."""

    def __init__(self, rho: int):
        if rho < 1:
            raise ValueError("rho must be positive")
        self.rho = rho
        self.ring = [0] * (2 * rho)
        self.next_index = 0

    def value(self, i: int) -> int:
        if i < 0:
            return 0
        if not self.next_index - 2 * self.rho <= i < self.next_index:
            raise IndexError(f"index {i} is not buffered")
        return self.ring[i % (2 * self.rho)]

    def cells(self) -> int:
        return len(self.ring)


def cross_corr_step(buf: CorrBuffer, conv_val: int, i: int) -> int:
    """Turn ``D(i)`` into ``[T (x) P](i)`` and rotate it into ``buf``."""
    if i != buf.next_index:
        raise IndexError(f"expected index {buf.next_index}, got {i}")
    rho = buf.rho
    val = conv_val + 2 * buf.value(i - rho) - buf.value(i - 2 * rho)
    buf.ring[i % (2 * rho)] = val
    buf.next_index = i + 1
    return val


def ham_from_corr(val: int, m: int) -> int:
    if m < 1:
        raise ValueError("pattern length must be positive")
    if val < 0 or val > m:
        raise PipelineCorruption(f"correlation value {val} outside [0, {m}]")
    return m - val


def cross_correlation(T: Sequence[Hashable], P: Sequence[Hashable]) -> list[int]:
    """Direct ``sum_c T_c * P^R_c`` on indices ``0 .. len(T)-1``."""
    m = len(P)
    out = [0] * len(T)
    for i in range(len(T)):
        acc = 0
        for x in range(m):
            j = i - m + 1 + x
            if 0 <= j and T[j] == P[x]:
                acc += 1
        out[i] = acc
    return out


def mismatches_at_shift(P: Sequence[Hashable], rho: int) -> int:
    return sum(1 for a, b in zip(P[: len(P) - rho], P[rho:]) if a != b)


def smallest_dperiod(P: Sequence[Hashable], d: int) -> int:
    """Least ``rho >= 1`` whose shift of ``P`` disagrees in at most ``d`` places."""
    if d < 0:
        raise ValueError("d must be non-negative")
    m = len(P)
    if m <= 1:
        return max(m, 1)
    arr = _as_array(P)
    if arr is not None:
        for rho in range(1, m):
            if m - rho <= d or int(np.count_nonzero(arr[: m - rho] != arr[rho:])) <= d:
                return rho
        return m
    for rho in range(1, m):
        if m - rho <= d:
            return rho
        bad = 0
        for a, b in zip(P[: m - rho], P[rho:]):
            if a != b:
                bad += 1
                if bad > d:
                    break
        if bad <= d:
            return rho
    return m


def _as_array(P: Sequence[Hashable]) -> np.ndarray | None:
    if isinstance(P, (bytes, bytearray)):
        return np.frombuffer(bytes(P), dtype=np.uint8)
    if isinstance(P, str):
        return np.array([ord(c) for c in P], dtype=np.int64)
    if P and all(isinstance(c, int) for c in P):
        return np.asarray(P, dtype=np.int64)
    return None


class PeriodicRep:
    """Window ``T[l .. r]`` stored as a base string of length ``rho`` plus the
    list of positions ``i`` with ``T[i] != T[i - rho]``.

    ``S[i % rho] == T[i]`` for ``l <= i < l + rho``; ``L`` holds
    ``(i, T[i])`` for ``l + rho <= i <= r`` with ``T[i - rho] != T[i]``.
    """

    def __init__(self, rho: int, start: int = 0):
        if rho < 1:
            raise ValueError("rho must be positive")
        self.rho = rho
        self.S: list[Hashable | None] = [None] * rho
        self.L: deque[tuple[int, Hashable]] = deque()
        self.l = start
        self.r = start - 1

    def __len__(self) -> int:
        return self.r - self.l + 1

    def grow(self, new_char: Hashable, char_minus_rho: Hashable | None) -> None:
        i = self.r + 1
        if i < self.l + self.rho:
            self.S[i % self.rho] = new_char
        elif new_char != char_minus_rho:
            self.L.append((i, new_char))
        self.r = i

    def shrink(self) -> Hashable:
        if self.r < self.l:
            raise IndexError("shrink on an empty window")
        slot = self.l % self.rho
        c = self.S[slot]
        if self.L and self.L[0][0] == self.l + self.rho:
            self.S[slot] = self.L.popleft()[1]
        self.l += 1
        return c

    def crop(self, new_l: int) -> None:
        if new_l < self.l:
            raise ValueError("crop cannot extend the window")
        self.l = new_l

    def mismatches(self) -> int:
        return len(self.L)

    def cells(self) -> int:
        return self.rho + 2 * len(self.L)

    def materialize(self) -> list[Hashable]:
        """The represented window as an explicit list (for testing)."""
        out: list[Hashable] = []
        pending = iter(self.L)
        nxt = next(pending, None)
        for i in range(self.l, self.r + 1):
            if i < self.l + self.rho:
                out.append(self.S[i % self.rho])
            elif nxt is not None and nxt[0] == i:
                out.append(nxt[1])
                nxt = next(pending, None)
            else:
                out.append(out[i - self.l - self.rho])
        return out
