"""Streaming k-mismatch for patterns without a small approximate period.

For a prime ``p`` the pattern head splits into ``p`` offset patterns
``P[r], P[r+p], P[r+2p], ...``; the text splits the same way into offset
streams.  Each offset stream keeps a rolling fingerprint of its recent
suffix, and the id of the offset pattern that suffix equals (or a dummy)
forms the column text.  Comparing the column text with the column pattern
counts the columns holding at least one mismatch, which never exceeds the
true distance.  Positions where every sampled prime sees at most ``5k/4``
bad columns become candidates.

For a candidate, every bad column is checked against a handful of small
primes ``Q``: the column splits into sub-columns modulo each ``q`` in
``Q``, and a single mismatch shows up as exactly one bad sub-column per
``q``.  Its index follows from the residues by Chinese remaindering.  The
distance is the number of distinct mismatch positions found over all
primes.  The ``2k``-long pattern tail is compared character by character as
the text arrives, so the report is ready the moment the window ends.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_left
from collections import deque
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Hashable, Iterator, Sequence

import numpy as np

from .counters import WorkCounters
from .report import MatchReport

MOD = (1 << 61) - 1
DUMMY = -1

# more simultaneous live candidates than this breaks the spacing guarantee
MAX_LIVE_CANDIDATES = 8

# spread lists longer than this are applied with one vectorized update
SPREAD_VECTOR_MIN = 12


class FingerprintCollision(RuntimeError):
    """Sub-column residues admit no consistent single-mismatch position."""


@lru_cache(maxsize=256)
def _sieve(n: int) -> tuple[int, ...]:
    if n < 2:
        return ()
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return tuple(np.flatnonzero(sieve).tolist())


def primes_upto(n: int) -> list[int]:
    return list(_sieve(n))


def primes_between(lo: int, hi: int) -> list[int]:
    ps = _sieve(hi)
    return list(ps[bisect_left(ps, lo) :])


def filter_prime_range(k: int, m: int) -> tuple[int, int]:
    lg = math.log2(m)
    lo = math.ceil(k * lg * lg)
    return lo, math.floor(34 * k * lg * lg)


def sample_filter_primes(k: int, m: int, rng: random.Random) -> list[int]:
    """``ceil(log2 m)`` distinct primes drawn uniformly from
    ``[k log^2 m, 34 k log^2 m]``.

    Falls back to the smallest primes above ``k`` when the range holds too
    few primes.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    count = max(1, math.ceil(math.log2(m)))
    lo, hi = filter_prime_range(k, m)
    pool = primes_between(max(lo, 2), hi)
    if len(pool) < count:
        pool = []
        x = k + 1
        while len(pool) < count:
            if all(x % d for d in range(2, math.isqrt(x) + 1)):
                pool.append(x)
            x += 1
        return pool
    return sorted(rng.sample(pool, count))


def localization_primes(m: int) -> list[int]:
    """Smallest primes of ``[ln m, 5 ln m]`` (at least 2) whose product exceeds ``m``."""
    if m < 2:
        raise ValueError("m must be at least 2")
    lo = max(2, math.ceil(math.log(m)))
    hi = max(3, math.floor(5 * math.log(m)))
    out, prod = [], 1
    for p in primes_between(lo, hi):
        out.append(p)
        prod *= p
        if prod > m:
            return out
    raise ValueError(f"primes in [{lo}, {hi}] cannot exceed {m}")


def crt(residues: Sequence[int], moduli: Sequence[int]) -> int:
    """Least non-negative ``x`` with ``x = r_i (mod q_i)`` for coprime moduli."""
    x, mod = 0, 1
    for r, q in zip(residues, moduli):
        # step x by multiples of mod until it matches r modulo q
        t = ((r - x) * pow(mod, -1, q)) % q
        x += mod * t
        mod *= q
    return x


def symbol_code(c: Hashable) -> int:
    if isinstance(c, str):
        return ord(c)
    return int(c)


def fingerprint(codes: Sequence[int], base: int) -> int:
    f = 0
    for c in codes:
        f = (f * base + c) % MOD
    return f


@dataclass
class OffsetDecomposition:
    """Offset patterns of ``P`` for one prime ``p``.

    ``column_pattern[z]`` is the id of the column whose last character sits
    ``p - 1 - z`` places before the window end, so it lines up with the
    column text position ``q - p + 1 + z``.
    """

    p: int
    m: int
    offsets: list[tuple]
    ids: dict[tuple, int]
    column_ids: list[int]
    column_pattern: list[int]

    @property
    def lengths(self) -> list[int]:
        return sorted({len(o) for o in self.offsets})


def build_decomposition(P: Sequence[Hashable], p: int) -> OffsetDecomposition:
    if p < 2:
        raise ValueError("p must be at least 2")
    m = len(P)
    offsets = [tuple(P[r::p]) for r in range(p)]
    ids: dict[tuple, int] = {}
    column_ids = []
    for o in offsets:
        column_ids.append(ids.setdefault(o, len(ids)))
    column_pattern = [column_ids[(m + z) % p] for z in range(p)]
    return OffsetDecomposition(p, m, offsets, ids, column_ids, column_pattern)


class _LengthClass:
    """Rolling fingerprints of one offset length over all offset streams."""

    __slots__ = ("length", "top", "table", "fps", "spread")

    def __init__(self, length: int, base: int, p: int):
        self.length = length
        self.top = pow(base, length - 1, MOD)
        self.table: dict[int, int] = {}
        self.fps = [0] * p if length >= 2 else None
        # column id -> ring offsets (p-1-z) of the columns carrying that id
        self.spread: dict[int, list[int]] = {}


class PrimeFilter:
    """Column text and column distance of the head against the text, for one prime."""

    def __init__(self, head: Sequence[Hashable], p: int, base: int, text: "_TextRing"):
        self.p = p
        self.mh = len(head)
        self.base = base
        self.text = text
        self.dec = build_decomposition(head, p)
        self.ncols = min(p, self.mh)
        self.R = self.ncols
        classes: dict[int, _LengthClass] = {}
        self.col_class: list[int] = []
        for y in range(self.ncols):
            off = self.dec.offsets[y]
            L = len(off)
            cls = classes.get(L)
            if cls is None:
                cls = classes[L] = _LengthClass(L, base, p)
            fp = fingerprint([symbol_code(c) for c in off], base)
            cid = self.dec.column_ids[y]
            if cls.table.setdefault(fp, cid) != cid:
                raise FingerprintCollision("two offset patterns share a fingerprint")
            delta = (self.mh - 1 - y) % p
            cls.spread.setdefault(cid, []).append(delta)
            self.col_class.append(L)
        for cls in classes.values():
            # long lists (single-character columns over small alphabets) go through numpy
            cls.spread = {cid: (np.array(d, dtype=np.int64) if len(d) > SPREAD_VECTOR_MIN else d)
                          for cid, d in cls.spread.items()}
        self.classes = sorted(classes.values(), key=lambda c: c.length)
        self.class_index = {c.length: n for n, c in enumerate(self.classes)}
        self.matches = np.zeros(self.R, dtype=np.int64)
        self.col_text: list[tuple[int, ...] | None] = []
        self.col_ring = 0

    def set_history(self, keep: int) -> None:
        self.col_ring = self.R + keep
        self.col_text = [None] * self.col_ring

    def push(self, pos: int, code: int) -> int:
        """Advance by ``T[pos]``; return the column distance of the window ending at ``pos``."""
        p, R = self.p, self.R
        r = pos % p
        self.matches[(pos + R - 1) % R] = 0
        ids = []
        for cls in self.classes:
            L = cls.length
            if L == 1:
                f = code
            else:
                f = cls.fps[r]
                old = pos - L * p
                if old >= 0:
                    f = (f - self.text.code(old) * cls.top) % MOD
                f = (f * self.base + code) % MOD
                cls.fps[r] = f
            cid = cls.table.get(f, DUMMY) if pos - (L - 1) * p >= 0 else DUMMY
            ids.append(cid)
            if cid != DUMMY:
                deltas = cls.spread[cid]
                if type(deltas) is list:
                    for delta in deltas:
                        self.matches[(pos + delta) % R] += 1
                else:
                    self.matches[(deltas + pos) % R] += 1
        self.col_text[pos % self.col_ring] = tuple(ids)
        return self.ncols - int(self.matches[pos % R])

    def bad_columns(self, q: int) -> Iterator[int]:
        """Columns of the head mismatching the window ending at ``q``."""
        for y in range(self.ncols):
            delta = (self.mh - 1 - y) % self.p
            ids = self.col_text[(q - delta) % self.col_ring]
            if ids[self.class_index[self.col_class[y]]] != self.dec.column_ids[y]:
                yield y

    def cells(self) -> int:
        cells = self.R + self.col_ring
        for cls in self.classes:
            cells += len(cls.table) + (len(cls.fps) if cls.fps is not None else 0)
        return cells


class _TextRing:
    def __init__(self, size: int):
        self.size = size
        self.codes = [0] * size
        self.chars: list[Hashable] = [None] * size

    def put(self, pos: int, c: Hashable, code: int) -> None:
        self.codes[pos % self.size] = code
        self.chars[pos % self.size] = c

    def code(self, pos: int) -> int:
        return self.codes[pos % self.size]

    def char(self, pos: int) -> Hashable:
        return self.chars[pos % self.size]


@dataclass
class _Candidate:
    q: int
    head: int | None = None
    tail: int = 0
    job: Iterator[int] | None = None
    budget: int = 0
    finished_at: int | None = None
    positions: set[int] = field(default_factory=set)
    naive: bool = False


class AperiodicEngine:
    def __init__(self, P: Sequence[Hashable], k: int, seed: int | None = None,
                 counters: WorkCounters | None = None, primes: Sequence[int] | None = None):
        m = len(P)
        if k < 1 or 2 * k >= m:
            raise ValueError(f"need 1 <= k and 2k < m, got k={k} m={m}")
        self.P = P
        self.k = k
        self.m = m
        self.counters = counters if counters is not None else WorkCounters()
        self.rng = random.Random(seed)
        self.head = P[: m - 2 * k]
        self.tail = P[m - 2 * k :]
        self.mh = len(self.head)
        self.threshold = (5 * k) // 4
        self.primes = list(primes) if primes is not None else sample_filter_primes(k, m, self.rng)
        self.Q = localization_primes(max(m, 2))
        self.base = self.rng.randrange(1 << 20, MOD - 1)
        self.text = _TextRing(2 * m + 2 * k + 2)
        self.filters = [PrimeFilter(self.head, p, self.base, self.text) for p in self.primes]
        for f in self.filters:
            f.set_history(k + 2)
        self.head_codes = [symbol_code(c) for c in self.head]
        self.pos = -1
        self.live: deque[_Candidate] = deque()
        self.candidate_log: list[int] = []
        self.diagnostics: dict[str, int] = {"spacing_violations": 0, "collisions": 0, "overruns": 0}

    # exact phase -------------------------------------------------------

    def isolated_recover(self, pf: PrimeFilter, y: int, q: int) -> tuple[str, int | None]:
        """Classify column ``y`` of prime ``pf.p`` at window end ``q``.

        Returns ``("zero", None)``, ``("one", text_position)`` or
        ``("many", None)``.
        """
        p = pf.p
        L = pf.col_class[y]
        t0 = q - self.mh + 1 + y
        residues = []
        for qq in self.Q:
            bad = []
            for u in range(min(qq, L)):
                ts = range(u, L, qq)
                fp_pat = fingerprint([self.head_codes[y + p * t] for t in ts], self.base)
                fp_txt = fingerprint([self.text.code(t0 + p * t) for t in ts], self.base)
                self.counters.scan_work += 2 * len(ts)
                if fp_pat != fp_txt:
                    bad.append(u)
                    if len(bad) > 1:
                        return "many", None
            if not bad:
                return "zero", None
            residues.append(bad[0])
        t = crt(residues, self.Q)
        if t >= L or self.text.char(t0 + p * t) == self.head[y + p * t]:
            raise FingerprintCollision(f"inconsistent residues {residues} for column {y} of prime {p}")
        return "one", t0 + p * t

    def _exact_job(self, cand: _Candidate) -> Iterator[int]:
        for pf in self.filters:
            bad = 0
            for y in pf.bad_columns(cand.q):
                bad += 1
                kind, where = self.isolated_recover(pf, y, cand.q)
                if kind == "one":
                    cand.positions.add(where)
                yield pf.col_class[y] * (len(self.Q) + 1)
            yield pf.ncols
        cand.head = len(cand.positions)

    def _job_cost(self) -> int:
        cap = self.threshold + 1
        return sum(pf.ncols + cap * max(pf.col_class, default=1) * (len(self.Q) + 1) for pf in self.filters)

    def _naive_head(self, q: int) -> int:
        start = q - self.mh + 1
        dist = sum(1 for x in range(self.mh) if self.text.char(start + x) != self.head[x])
        self.counters.scan_work += self.mh
        return dist

    def _advance(self, cand: _Candidate) -> None:
        if cand.head is not None:
            return
        try:
            spent = 0
            while spent < cand.budget:
                spent += next(cand.job)
        except StopIteration:
            pass
        except FingerprintCollision:
            self.diagnostics["collisions"] += 1
            self.counters.warn("fingerprint collision; candidate verified naively")
            cand.head = self._naive_head(cand.q)
        if cand.head is None and self.pos >= cand.q + self.k:
            self.diagnostics["overruns"] += 1
            cand.budget = 1 << 62
            self._advance(cand)
            return
        if cand.head is not None:
            cand.finished_at = self.pos
            self.counters.observe_delay("aperiodic_head", self.pos - cand.q)

    # streaming ----------------------------------------------------------

    def filter_push(self, c: Hashable, i: int | None = None) -> bool:
        """Route ``c`` into every prime's offset stream; True iff ``i`` is a candidate."""
        i = self.pos + 1 if i is None else i
        if i != self.pos + 1:
            raise ValueError(f"expected position {self.pos + 1}, got {i}")
        self.pos = i
        code = symbol_code(c)
        self.text.put(i, c, code)
        worst = 0
        for pf in self.filters:
            worst = max(worst, pf.push(i, code))
        self.counters.scan_work += len(self.filters)
        self.last_column_distance = worst
        return i >= self.mh - 1 and worst <= self.threshold

    def push(self, c: Hashable) -> MatchReport | None:
        i = self.pos + 1
        self.counters.chars += 1
        is_cand = self.filter_push(c, i)
        tail_pos = None
        for cand in self.live:
            off = i - cand.q
            if 1 <= off <= 2 * self.k:
                if self.tail[off - 1] != c:
                    cand.tail += 1
        if is_cand:
            self.counters.candidates_admitted += 1
            self.candidate_log.append(i)
            cand = _Candidate(i)
            if len(self.live) >= MAX_LIVE_CANDIDATES:
                self.diagnostics["spacing_violations"] += 1
                self.counters.warn("too many live candidates; verifying naively")
                cand.naive = True
                cand.head = self._naive_head(i)
                cand.finished_at = i
            else:
                cand.job = self._exact_job(cand)
                cand.budget = max(1, -(-self._job_cost() // self.k))
            self.live.append(cand)
        for cand in self.live:
            self._advance(cand)
        if i % 8 == 0:
            self.counters.observe_cells(self.cells())
        if i < self.m - 1:
            return None
        self.counters.observe_delay("aperiodic", 0)
        out = MatchReport(i, None)
        while self.live and self.live[0].q < i - 2 * self.k:
            self.live.popleft()
        if self.live and self.live[0].q == i - 2 * self.k:
            cand = self.live.popleft()
            if cand.head is None:
                raise RuntimeError(f"head distance for {cand.q} unfinished at {i}")
            total = cand.head + cand.tail
            if cand.head <= self.k and total <= self.k:
                out = MatchReport(i, total)
        return out

    def run(self, text) -> Iterator[MatchReport]:
        for c in text:
            rep = self.push(c)
            if rep is not None:
                yield rep

    def cells(self) -> int:
        return (
            self.text.size * 2
            + sum(pf.cells() for pf in self.filters)
            + sum(3 + len(c.positions) for c in self.live)
        )


def aperiodic_push(engine: AperiodicEngine, c: Hashable, i: int | None = None) -> MatchReport | None:
    if i is not None and i != engine.pos + 1:
        raise ValueError(f"expected position {engine.pos + 1}, got {i}")
    return engine.push(c)
