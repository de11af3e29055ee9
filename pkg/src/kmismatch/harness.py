"""Engine dispatch, brute-force oracle, corpus generation and the command line."""

from __future__ import annotations

import argparse
import json
import random
import sys
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

from .aperiodic_engine import AperiodicEngine
from .counters import WorkCounters
from .ham_core import smallest_dperiod
from .periodic_engine import PeriodicPlan, SplitDriver
from .report import MatchReport

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

MODES = ("auto", "periodic", "aperiodic", "oracle")


class ConfigError(ValueError):
    """Parameters violate ``1 <= k <= s <= m`` or the chosen engine's needs."""


def check_params(m: int, k: int, s: int) -> None:
    if m < 1:
        raise ConfigError("pattern must be non-empty")
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if k > s:
        raise ConfigError(f"k={k} exceeds s={s}")
    if s > m:
        raise ConfigError(f"s={s} exceeds pattern length {m}")


class StreamingOracle:
    """Naive zero-delay matcher over a window of the last ``m`` characters."""

    kind = "oracle"

    def __init__(self, P: Sequence[Hashable], k: int, counters: WorkCounters | None = None):
        self.P = list(P)
        self.k = k
        self.m = len(P)
        self.counters = counters if counters is not None else WorkCounters()
        self.window: deque[Hashable] = deque(maxlen=self.m)
        self.i = -1

    def push(self, c: Hashable) -> MatchReport | None:
        self.i += 1
        self.counters.chars += 1
        self.window.append(c)
        if self.i < self.m - 1:
            return None
        dist = 0
        for a, b in zip(self.window, self.P):
            if a != b:
                dist += 1
                if dist > self.k:
                    break
        self.counters.scan_work += self.m
        self.counters.observe_delay("oracle", 0)
        self.counters.observe_cells(self.m)
        return MatchReport(self.i, dist if dist <= self.k else None)


class PeriodicEngine:
    """Split driver over fragments, for patterns with a ``6k``-period."""

    kind = "periodic"

    def __init__(self, P: Sequence[Hashable], k: int, s: int, rho: int,
                 counters: WorkCounters | None = None, fft_threshold: int | None = None):
        self.rho = rho
        self.counters = counters if counters is not None else WorkCounters()
        self.plan = PeriodicPlan(P, k, s, rho, 6 * k, fft_threshold)
        self.driver = SplitDriver(self.plan, self.counters)

    def push(self, c: Hashable) -> MatchReport | None:
        return self.driver.push(c)


def engine_select(P: Sequence[Hashable], k: int, s: int, seed: int | None = None,
                  counters: WorkCounters | None = None, fft_threshold: int | None = None,
                  mode: str = "auto"):
    """Build the engine for ``mode``; ``auto`` picks by the smallest ``6k``-period."""
    check_params(len(P), k, s)
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    if mode == "oracle":
        return StreamingOracle(P, k, counters)
    rho = smallest_dperiod(P, 6 * k)
    if mode == "periodic" or (mode == "auto" and rho <= k):
        return PeriodicEngine(P, k, s, rho, counters, fft_threshold)
    if 2 * k >= len(P):
        raise ConfigError(f"aperiodic engine needs m > 2k, got m={len(P)} k={k}")
    eng = AperiodicEngine(P, k, seed=seed, counters=counters)
    eng.kind = "aperiodic"
    return eng


def _symbol_codes(*seqs: Sequence[Hashable]) -> list[np.ndarray]:
    table: dict[Hashable, int] = {}
    return [np.array([table.setdefault(c, len(table)) for c in seq], dtype=np.int64) for seq in seqs]


def oracle_distances(P: Sequence[Hashable], T: Sequence[Hashable]) -> np.ndarray:
    """Exact Hamming distance of every length-``m`` window of ``T``, by position ``m-1..n-1``."""
    m, n = len(P), len(T)
    if m == 0 or n < m:
        return np.zeros(0, dtype=np.int64)
    p, t = _symbol_codes(P, T)
    windows = np.lib.stride_tricks.sliding_window_view(t, m)
    out = np.empty(len(windows), dtype=np.int64)
    chunk = max(1, (1 << 22) // m)
    for lo in range(0, len(windows), chunk):
        out[lo : lo + chunk] = np.count_nonzero(windows[lo : lo + chunk] != p, axis=1)
    return out


def oracle_kmismatch(P: Sequence[Hashable], T: Sequence[Hashable], k: int) -> list[MatchReport]:
    m = len(P)
    dist = oracle_distances(P, T)
    return [MatchReport(m - 1 + j, int(d) if d <= k else None) for j, d in enumerate(dist)]


def run_engine(engine, text: Iterable[Hashable]) -> Iterator[MatchReport]:
    for c in text:
        rep = engine.push(c)
        if rep is not None:
            yield rep


def kmismatch(P: Sequence[Hashable], T: Iterable[Hashable], k: int, s: int | None = None,
              mode: str = "auto", seed: int | None = None, counters: WorkCounters | None = None,
              fft_threshold: int | None = None) -> list[MatchReport]:
    """Convenience wrapper: all reports of ``P`` against ``T`` (``s`` defaults to ``k``)."""
    eng = engine_select(P, k, k if s is None else s, seed, counters, fft_threshold, mode)
    return list(run_engine(eng, T))


# corpus generation ---------------------------------------------------------

def random_string(rng: random.Random, n: int, sigma: int) -> list[int]:
    return [rng.randrange(sigma) for _ in range(n)]


def noisy_periodic(rng: random.Random, m: int, rho: int, sigma: int, flips: int) -> list[int]:
    """A ``rho``-periodic string of length ``m`` with ``flips`` random substitutions."""
    base = random_string(rng, rho, sigma)
    out = [base[j % rho] for j in range(m)]
    for _ in range(flips):
        out[rng.randrange(m)] = rng.randrange(sigma)
    return out


def planted_text(rng: random.Random, P: Sequence[int], n: int, sigma: int, k: int,
                 background: Sequence[int] | None = None, plants: int = 4, noise: float = 0.02) -> list[int]:
    """Text of length ``n`` with copies of ``P`` carrying up to ``2k`` substitutions.

    ``background`` (repeated to length ``n``) replaces uniform noise, which
    lets periodic patterns meet long periodic stretches of text; about
    ``noise * n`` of its symbols are then randomized.
    """
    if background:
        T = [background[j % len(background)] for j in range(n)]
        for _ in range(rng.randint(0, max(1, round(noise * n)))):
            T[rng.randrange(n)] = rng.randrange(sigma)
    else:
        T = random_string(rng, n, sigma)
    m = len(P)
    if n >= m:
        for _ in range(plants):
            at = rng.randrange(n - m + 1)
            T[at : at + m] = P
            for _ in range(rng.randint(0, 2 * k)):
                T[at + rng.randrange(m)] = rng.randrange(sigma)
    return T


# command line --------------------------------------------------------------

@dataclass
class RunConfig:
    pattern: Sequence[Hashable]
    k: int
    s: int
    mode: str = "auto"
    seed: int | None = None
    fft_threshold: int | None = None
    symbols: str = "bytes"
    text_path: str = "-"
    metrics_path: str | None = None

    def validate(self) -> None:
        check_params(len(self.pattern), self.k, self.s)
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.fft_threshold is not None and self.fft_threshold < 1:
            raise ConfigError("fft threshold must be positive")


def parse_u32(data: bytes) -> list[int]:
    out = []
    for tok in data.split():
        v = int(tok)
        if not 0 <= v < 1 << 32:
            raise ValueError(f"symbol {v} outside the 32-bit range")
        out.append(v)
    return out


def read_symbols(stream, symbols: str, chunk: int = 1 << 16) -> Iterator[Hashable]:
    """Yield text symbols from a binary stream without reading it whole."""
    if symbols == "bytes":
        while True:
            block = stream.read(chunk)
            if not block:
                return
            yield from block
    else:
        rest = b""
        while True:
            block = stream.read(chunk)
            if not block:
                yield from parse_u32(rest)
                return
            block = rest + block
            # a token may straddle the chunk boundary
            cut = max(block.rfind(b" "), block.rfind(b"\n"), block.rfind(b"\t"), block.rfind(b"\r"))
            if cut < 0:
                rest = block
                continue
            yield from parse_u32(block[:cut])
            rest = block[cut:]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kmismatch",
        description="Stream a text and report, for every window, its Hamming distance to the pattern when it is at most k.",
    )
    ap.add_argument("--pattern", required=True, metavar="FILE", help="pattern file")
    ap.add_argument("--text", default="-", metavar="FILE", help="text file, or - for stdin")
    ap.add_argument("--k", type=int, required=True, help="mismatch threshold")
    ap.add_argument("--s", type=int, default=None, help="space/work trade-off parameter, k <= s <= m (default k)")
    ap.add_argument("--mode", choices=MODES, default="auto")
    ap.add_argument("--seed", type=int, default=None, help="seed for the randomized aperiodic engine")
    ap.add_argument("--fft-threshold", type=int, default=None,
                    help="pair-count cutoff above which slot convolutions use FFT")
    ap.add_argument("--metrics", default=None, metavar="FILE", help="append a JSON metrics record here")
    ap.add_argument("--symbols", choices=("bytes", "u32"), default="bytes",
                    help="raw bytes, or whitespace-separated 32-bit integers")
    return ap


def run_cli(argv: Sequence[str] | None = None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    try:
        with open(args.pattern, "rb") as fh:
            raw = fh.read()
        pattern = list(raw) if args.symbols == "bytes" else parse_u32(raw)
    except OSError as exc:
        print(f"kmismatch: cannot read pattern: {exc}", file=stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"kmismatch: bad pattern: {exc}", file=stderr)
        return EXIT_CONFIG

    cfg = RunConfig(pattern, args.k, args.k if args.s is None else args.s, args.mode, args.seed,
                    args.fft_threshold, args.symbols, args.text, args.metrics)
    counters = WorkCounters()
    try:
        cfg.validate()
        engine = engine_select(cfg.pattern, cfg.k, cfg.s, cfg.seed, counters, cfg.fft_threshold, cfg.mode)
    except ConfigError as exc:
        print(f"kmismatch: {exc}", file=stderr)
        return EXIT_CONFIG

    try:
        fh = stdin if cfg.text_path == "-" else open(cfg.text_path, "rb")
    except OSError as exc:
        print(f"kmismatch: cannot read text: {exc}", file=stderr)
        return EXIT_IO
    try:
        for c in read_symbols(fh, cfg.symbols):
            rep = engine.push(c)
            if rep is not None:
                stdout.write(rep.line() + "\n")
        stdout.flush()
    except OSError as exc:
        print(f"kmismatch: I/O failure: {exc}", file=stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"kmismatch: bad text: {exc}", file=stderr)
        return EXIT_CONFIG
    finally:
        if fh is not stdin:
            fh.close()

    if cfg.metrics_path:
        record = {"engine": engine.kind, "k": cfg.k, "s": cfg.s, "m": len(cfg.pattern)}
        record.update(counters.as_record())
        try:
            with open(cfg.metrics_path, "a") as out:
                out.write(json.dumps(record) + "\n")
        except OSError as exc:
            print(f"kmismatch: cannot write metrics: {exc}", file=stderr)
            return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())
