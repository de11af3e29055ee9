"""Sparse integer functions and the hybrid offline convolution summation.

A sparse function is a plain ``dict[int, int]`` holding only the nonzero
entries.  A :class:`FuncSeq` is a sequence of such functions indexed by
slot keys; slots holding the zero function are simply absent.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Hashable, Iterable

import numpy as np

from .counters import WorkCounters

SparseFunc = dict[int, int]

INT64_MAX = 2**63 - 1
# largest magnitude a float64 transform reproduces exactly after rounding
_FLOAT_EXACT = 2**50


class ShapeError(ValueError):
    """Two function sequences disagree on their slot count."""


class ArithmeticCapacityError(OverflowError):
    """A convolution value does not fit the signed 64-bit value domain."""


def support(f: SparseFunc) -> set[int]:
    return set(f)


def diam(f: SparseFunc) -> int:
    if not f:
        return 0
    return max(f) - min(f) + 1


def restrict(f: SparseFunc, lo: int, hi: int) -> SparseFunc:
    """Keep the entries of ``f`` with ``lo <= index < hi``."""
    if lo > hi:
        raise ValueError(f"empty interval requires lo <= hi, got [{lo}, {hi})")
    if len(f) <= hi - lo:
        return {i: v for i, v in f.items() if lo <= i < hi}
    return {i: f[i] for i in range(lo, hi) if i in f}


def add_into(acc: SparseFunc, f: SparseFunc, scale: int = 1) -> None:
    """``acc += scale * f`` keeping ``acc`` free of zero entries."""
    for i, v in f.items():
        w = acc.get(i, 0) + scale * v
        if w:
            acc[i] = w
        else:
            acc.pop(i, None)


@dataclass
class FuncSeq:
    """Ordered sequence of ``t`` sparse functions, zero slots omitted."""

    funcs: dict[Hashable, SparseFunc] = field(default_factory=dict)
    t: int | None = None

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Hashable, SparseFunc]], t: int | None = None) -> "FuncSeq":
        seq = cls(t=t)
        for key, f in pairs:
            if f:
                seq.funcs[key] = dict(f)
        return seq

    def __len__(self) -> int:
        return len(self.funcs)

    def __iter__(self):
        return iter(self.funcs.items())

    def __getitem__(self, key: Hashable) -> SparseFunc:
        return self.funcs.get(key, {})

    def set(self, key: Hashable, f: SparseFunc) -> None:
        if f:
            self.funcs[key] = f
        else:
            self.funcs.pop(key, None)

    @property
    def norm(self) -> int:
        return sum(len(f) for f in self.funcs.values())

    @property
    def support(self) -> set[int]:
        out: set[int] = set()
        for f in self.funcs.values():
            out.update(f)
        return out

    @property
    def diam(self) -> int:
        return max((diam(f) for f in self.funcs.values()), default=0)

    def restrict(self, lo: int, hi: int) -> "FuncSeq":
        return FuncSeq.from_pairs(((k, restrict(f, lo, hi)) for k, f in self.funcs.items()), t=self.t)


def dense_cost(len_f_span: int, len_g_span: int) -> int:
    """Work units charged for one dense transform convolution."""
    size = 1 << max(1, (len_f_span + len_g_span - 2).bit_length())
    return size * size.bit_length()


def pair_cost(f: SparseFunc, g: SparseFunc, threshold: int | None = None) -> int:
    """Work units :func:`convolve_pair` will spend on ``f * g``."""
    if not f or not g:
        return 1
    pairs = len(f) * len(g)
    if threshold is None:
        threshold = diam(f) + diam(g) - 1
    if pairs <= threshold:
        return pairs
    return dense_cost(diam(f), diam(g))


def _naive(f: SparseFunc, g: SparseFunc) -> SparseFunc:
    out: SparseFunc = {}
    for i, a in f.items():
        for j, b in g.items():
            out[i + j] = out.get(i + j, 0) + a * b
    return {i: v for i, v in out.items() if v}


def _dense(f: SparseFunc, g: SparseFunc, counters: WorkCounters | None) -> SparseFunc:
    f_lo, g_lo = min(f), min(g)
    fa = np.zeros(max(f) - f_lo + 1, dtype=np.int64)
    ga = np.zeros(max(g) - g_lo + 1, dtype=np.int64)
    for i, v in f.items():
        fa[i - f_lo] = v
    for i, v in g.items():
        ga[i - g_lo] = v
    max_f = int(np.abs(fa).max())
    max_g = int(np.abs(ga).max())
    bound = max_f * max_g * min(len(f), len(g))
    if bound > INT64_MAX:
        raise ArithmeticCapacityError(f"convolution values may reach {bound}, beyond 64-bit range")
    out_len = len(fa) + len(ga) - 1
    size = 1 << max(1, (out_len - 1).bit_length())
    if counters is not None:
        counters.transform_calls += 1
        counters.transform_work += size * size.bit_length()
    if bound < _FLOAT_EXACT:
        spectrum = np.fft.rfft(fa.astype(np.float64), size) * np.fft.rfft(ga.astype(np.float64), size)
        raw = np.fft.irfft(spectrum, size)[:out_len]
        res = np.rint(raw)
        if np.abs(raw - res).max(initial=0.0) > 0.25:
            raise ArithmeticCapacityError("transform rounding error too large for an exact result")
        res = res.astype(np.int64)
    else:
        res = np.convolve(fa, ga)
    base = f_lo + g_lo
    nz = np.flatnonzero(res)
    return {int(base + i): int(res[i]) for i in nz}


def convolve_pair(
    f: SparseFunc,
    g: SparseFunc,
    threshold: int | None = None,
    counters: WorkCounters | None = None,
) -> SparseFunc:
    """Exact ``f * g``, by pair enumeration or by a dense transform.

    Pair enumeration runs when ``|f|*|g| <= threshold``; otherwise the
    supports' spans are convolved densely.  ``threshold`` defaults to the
    span of the output interval.
    """
    if threshold is not None and threshold <= 0:
        raise ValueError("threshold must be positive")
    if not f or not g:
        return {}
    pairs = len(f) * len(g)
    if threshold is None:
        threshold = diam(f) + diam(g) - 1
    if pairs <= threshold:
        if counters is not None:
            counters.pair_mults += pairs
        out = _naive(f, g)
        if out and max(abs(v) for v in out.values()) > INT64_MAX:
            raise ArithmeticCapacityError("convolution value beyond 64-bit range")
        return out
    return _dense(f, g, counters)


def _window_pairs(f: SparseFunc, g_keys: list[int], lo: int, hi: int) -> int:
    """Number of index pairs ``(x, y)`` of ``f`` and ``g`` with ``lo <= x + y < hi``."""
    return sum(bisect_left(g_keys, hi - x) - bisect_left(g_keys, lo - x) for x in f)


def _naive_window(f: SparseFunc, g: SparseFunc, g_keys: list[int], lo: int, hi: int) -> SparseFunc:
    out: SparseFunc = {}
    for x, a in f.items():
        for y in g_keys[bisect_left(g_keys, lo - x) : bisect_left(g_keys, hi - x)]:
            out[x + y] = out.get(x + y, 0) + a * g[y]
    return {i: v for i, v in out.items() if v}


class SummationJob:
    """Resumable computation of ``sum_j f_j * g_j``, suspendable between slots.

    ``window`` optionally restricts the accumulated output to ``[lo, hi)``.
    Pair enumeration then visits only the pairs landing in the window, and
    the threshold is compared with that count; dense transforms still cover
    the full span.
    """

    def __init__(
        self,
        pairs: list[tuple[SparseFunc, SparseFunc]],
        threshold: int | None = None,
        counters: WorkCounters | None = None,
        window: tuple[int, int] | None = None,
    ):
        self.pairs = pairs
        self.threshold = threshold
        self.counters = counters
        self.window = window
        if window is None:
            self.g_keys = None
            self.costs = [pair_cost(f, g, threshold) for f, g in pairs]
        else:
            self.g_keys = [sorted(g) for _, g in pairs]
            self.costs = [self._window_cost(f, g, keys) for (f, g), keys in zip(pairs, self.g_keys)]
        self.cost = sum(self.costs)
        self.spent = 0
        self.result: SparseFunc = {}
        self._next = 0

    def _window_cost(self, f: SparseFunc, g: SparseFunc, keys: list[int]) -> int:
        if not f or not g:
            return 1
        hits = _window_pairs(f, keys, *self.window)
        limit = self.threshold if self.threshold is not None else diam(f) + diam(g) - 1
        if hits <= limit:
            # a slot whose pairs all miss the window still costs its bookkeeping
            return max(hits, 1)
        return dense_cost(diam(f), diam(g))

    def _slot(self, j: int) -> SparseFunc:
        f, g = self.pairs[j]
        if self.window is None:
            return convolve_pair(f, g, self.threshold, self.counters)
        if not f or not g:
            return {}
        lo, hi = self.window
        keys = self.g_keys[j]
        if self.costs[j] <= (self.threshold if self.threshold is not None else diam(f) + diam(g) - 1):
            if self.counters is not None:
                self.counters.pair_mults += _window_pairs(f, keys, lo, hi)
            return _naive_window(f, g, keys, lo, hi)
        return restrict(_dense(f, g, self.counters), lo, hi)

    @property
    def done(self) -> bool:
        return self._next >= len(self.pairs)

    def step(self, budget: int) -> bool:
        """Process whole slots until at least ``budget`` units are spent."""
        spent = 0
        while self._next < len(self.pairs) and spent < budget:
            add_into(self.result, self._slot(self._next))
            spent += self.costs[self._next]
            self._next += 1
        self.spent += spent
        return self.done

    def run(self) -> SparseFunc:
        self.step(self.cost + 1)
        return self.result


def conv_summation(
    F: FuncSeq,
    G: FuncSeq,
    n: int,
    threshold: int | None = None,
    counters: WorkCounters | None = None,
) -> SparseFunc:
    """Nonzero entries of ``sum_j f_j * g_j``.

    Each slot picks pair enumeration or a dense transform by comparing
    ``|f_j|*|g_j|`` with ``threshold`` (default ``n``); slots missing from
    either sequence cost nothing.
    """
    if F.t is not None and G.t is not None and F.t != G.t:
        raise ShapeError(f"sequence lengths differ: {F.t} != {G.t}")
    if threshold is None:
        threshold = max(1, n)
    pairs = [(f, G.funcs[key]) for key, f in F.funcs.items() if key in G.funcs]
    result = SummationJob(pairs, threshold, counters).run()
    if counters is not None and len(result) > 4 * max(n, 1) + 4:
        counters.warn(f"summation accumulator holds {len(result)} cells for n={n}")
    return result


def naive_conv_summation(F: FuncSeq, G: FuncSeq) -> SparseFunc:
    """Reference double loop, kept independent of the hybrid path."""
    out: SparseFunc = {}
    for key, f in F.funcs.items():
        g = G.funcs.get(key)
        if not g:
            continue
        for i, a in f.items():
            for j, b in g.items():
                out[i + j] = out.get(i + j, 0) + a * b
    return {i: v for i, v in out.items() if v}
