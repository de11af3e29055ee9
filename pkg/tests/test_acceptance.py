"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The differential corpora of criteria 1 and 2 are generated once per session
and shared with the delay (8) and space (9) criteria.  Run alone with

    pytest -v tests/test_acceptance.py

or ``python3 tests/test_acceptance.py`` for just the summary lines.
"""

import itertools
import math
import random
import time

import pytest

from kmismatch.aperiodic_engine import localization_primes
from kmismatch.batched_conv import batched_init, ingest_batch, split_batches
from kmismatch.core_sparse import FuncSeq, conv_summation, naive_conv_summation, restrict
from kmismatch.counters import WorkCounters
from kmismatch.ham_core import (
    CorrBuffer,
    backward_diff_seq,
    cross_corr_step,
    cross_correlation,
    ham_from_corr,
    mismatches_at_shift,
    smallest_dperiod,
)
from kmismatch.harness import engine_select, oracle_distances, oracle_kmismatch, run_engine
from kmismatch.online_conv import online_init, push_index
from kmismatch.periodic_engine import FragmentEngine, PeriodicPlan

PERIODIC_CONFIGS = 300
APERIODIC_CONFIGS = 300
RESEED = 1_000_003

_lines: dict[int, str] = {}


def announce(capsys, n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    _lines[n] = line
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


def report_lines(reports):
    return "".join(r.line() + "\n" for r in reports)


def log_uniform(rng, lo, hi):
    return int(round(2 ** rng.uniform(math.log2(lo), math.log2(hi))))


def run_differential(P, T, k, s, seed):
    counters = WorkCounters()
    eng = engine_select(P, k, s, seed=seed, counters=counters)
    got = report_lines(run_engine(eng, T))
    want = report_lines(oracle_kmismatch(P, T, k))
    return eng.kind, got == want, counters


# criterion 1 corpus ---------------------------------------------------------

def periodic_instance(idx):
    rng = random.Random(idx)
    sigma = rng.choice([2, 4, 26])
    big = idx % 25 == 0
    m = 4096 if big else log_uniform(rng, 8, 2048)
    k = log_uniform(rng, 1, min(64, max(1, m // 2)))
    s = k if rng.random() < 0.35 else log_uniform(rng, k, m)
    n = 20000 if big else rng.randint(m, min(20000, max(3 * m, 400)))
    while True:
        rho = rng.randint(1, k)
        base = [rng.randrange(sigma) for _ in range(rho)]
        P = [base[j % rho] for j in range(m)]
        for _ in range(rng.randint(0, 3 * k)):
            P[rng.randrange(m)] = rng.randrange(sigma)
        if smallest_dperiod(P, 6 * k) <= k:
            break
    if rng.random() < 0.7:
        T = [base[j % rho] for j in range(n)]
        for _ in range(int(rng.choice([0, 0.002, 0.01, 0.03]) * n)):
            T[rng.randrange(n)] = rng.randrange(sigma)
    else:
        T = [rng.randrange(sigma) for _ in range(n)]
    for _ in range(rng.randint(1, 6)):
        at = rng.randrange(n - m + 1)
        T[at : at + m] = P
        for _ in range(rng.choice([0, k // 2, k, k + 1, 2 * k])):
            T[at + rng.randrange(m)] = rng.randrange(sigma)
    return P, T, k, s


# criterion 2 corpus ---------------------------------------------------------

def aperiodic_instance(idx):
    rng = random.Random(10_000 + idx)
    sigma = rng.choice([2, 4, 26])
    k = log_uniform(rng, 1, 16)
    # a random string disagrees with its shifts in about m(1 - 1/sigma) places,
    # which must clear the 6k budget for the pattern to be aperiodic
    m = log_uniform(rng, max(16, int(9 * k / (1 - 1 / sigma))), 2048)
    while True:
        P = [rng.randrange(sigma) for _ in range(m)]
        if smallest_dperiod(P, 6 * k) > k:
            break
        m += 1
    s = k if rng.random() < 0.35 else log_uniform(rng, k, m)
    n = rng.randint(m, min(6000, 3 * m))
    T = [rng.randrange(sigma) for _ in range(n)]
    for _ in range(rng.randint(1, 4)):
        at = rng.randrange(n - m + 1)
        T[at : at + m] = P
        spots = rng.sample(range(m), rng.choice([0, 1, k, k + 1, 2 * k]))
        for j in spots:
            T[at + j] = (T[at + j] + 1 + rng.randrange(sigma - 1)) % sigma
    return P, T, k, s


def collect_periodic_runs():
    runs = []
    t0 = time.time()
    for idx in range(PERIODIC_CONFIGS):
        P, T, k, s = periodic_instance(idx)
        kind, same, counters = run_differential(P, T, k, s, seed=idx)
        runs.append(dict(idx=idx, m=len(P), n=len(T), k=k, s=s, kind=kind, same=same, counters=counters))
    runs.append(dict(elapsed=time.time() - t0))
    return runs


def collect_aperiodic_runs():
    runs = []
    t0 = time.time()
    for idx in range(APERIODIC_CONFIGS):
        P, T, k, s = aperiodic_instance(idx)
        kind, same, counters = run_differential(P, T, k, s, seed=idx)
        retry = None
        if not same:
            retry = run_differential(P, T, k, s, seed=idx + RESEED)[1]
        runs.append(dict(idx=idx, m=len(P), n=len(T), k=k, s=s, kind=kind, same=same, retry=retry, counters=counters))
    runs.append(dict(elapsed=time.time() - t0))
    return runs


@pytest.fixture(scope="module")
def periodic_runs():
    return collect_periodic_runs()


@pytest.fixture(scope="module")
def aperiodic_runs():
    return collect_aperiodic_runs()


def split_elapsed(runs):
    return runs[:-1], runs[-1]["elapsed"]


def test_criterion_01_periodic_differential(periodic_runs, capsys):
    runs, elapsed = split_elapsed(periodic_runs)
    wrong_kind = [r["idx"] for r in runs if r["kind"] != "periodic"]
    failed = [r["idx"] for r in runs if not r["same"]]
    ok = len(runs) >= 300 and not wrong_kind and not failed and elapsed < 300
    announce(capsys, 1, ok, f"{len(runs) - len(failed)}/{len(runs)} periodic configs identical to oracle, "
             f"{elapsed:.0f}s (limit 300s), misrouted={wrong_kind[:5]} failed={failed[:5]}")
    assert ok


def test_criterion_02_aperiodic_differential(aperiodic_runs, capsys):
    runs, elapsed = split_elapsed(aperiodic_runs)
    wrong_kind = [r["idx"] for r in runs if r["kind"] != "aperiodic"]
    failed = [r["idx"] for r in runs if not r["same"]]
    unrecovered = [r["idx"] for r in runs if not r["same"] and not r["retry"]]
    rate = 1 - len(failed) / len(runs)
    ok = len(runs) >= 300 and not wrong_kind and rate >= 0.99 and not unrecovered and elapsed < 600
    announce(capsys, 2, ok, f"{rate:.2%} of {len(runs)} aperiodic configs identical (need 99%), "
             f"failed={failed[:5]} unrecovered after reseed={unrecovered[:5]}, {elapsed:.0f}s (limit 600s)")
    assert ok


def test_criterion_03_batched_equality(capsys):
    runs = bad = 0
    for seed in range(200):
        rng = random.Random(seed)
        for n in range(1, 33):
            for t in (1, 2, 3):
                dens = rng.random()
                F = FuncSeq.from_pairs([(j, {i: rng.choice([-2, -1, 1, 2]) for i in range(n) if rng.random() < dens}) for j in range(t)], t=t)
                G = FuncSeq.from_pairs([(j, {i: rng.choice([-2, -1, 1, 2]) for i in range(n) if rng.random() < dens}) for j in range(t)], t=t)
                want = restrict(conv_summation(F, G, n), 0, n)
                for s in (2, 3, 4, 8):
                    st = batched_init(G, s, n)
                    got = {}
                    for batch in split_batches(F, s, n):
                        got.update(ingest_batch(st, batch))
                    runs += 1
                    bad += got != want
    ok = bad == 0
    announce(capsys, 3, ok, f"{runs - bad}/{runs} batched runs equal the offline restriction "
             "(n 1..32, t 1..3, s in {2,3,4,8}, 200 seeds)")
    assert ok


def test_criterion_04_online_pointwise(capsys):
    bad = late = points = 0
    for seed in range(200):
        rng = random.Random(seed)
        m, n, t = rng.randint(1, 16), rng.randint(1, 64), rng.randint(1, 3)
        F = FuncSeq(t=t)
        for i in range(n):
            for j in rng.sample(range(t), rng.randint(0, min(2, t))):
                F.funcs.setdefault(j, {})[i] = rng.choice([-2, -1, 1, 2])
        G = FuncSeq.from_pairs([(j, {i: rng.choice([-1, 1]) for i in range(m) if rng.random() < 0.5}) for j in range(t)], t=t)
        want = naive_conv_summation(F, G)
        st = online_init(G, m)
        for i in range(n):
            sl = {j: f[i] for j, f in F.funcs.items() if i in f}
            points += 1
            bad += push_index(st, sl, i) != want.get(i, 0)
        late += st.deadline_misses
    ok = bad == 0 and late == 0
    announce(capsys, 4, ok, f"{points - bad}/{points} indices equal the offline value within their own call, "
             f"deadline misses={late} (200 seeds, m<=16, n<=64, delta<=2)")
    assert ok


def _recurrence_case(T, P, rho):
    D = naive_conv_summation(backward_diff_seq(T, rho), backward_diff_seq(P, rho, reversed=True))
    buf = CorrBuffer(rho)
    corr = [cross_corr_step(buf, D.get(i, 0), i) for i in range(len(T))]
    if corr != cross_correlation(T, P):
        return False
    m = len(P)
    for i in range(m - 1, len(T)):
        if ham_from_corr(corr[i], m) != sum(a != b for a, b in zip(P, T[i - m + 1 : i + 1])):
            return False
    return True


def test_criterion_05_recurrence_identity(capsys):
    cases = bad = 0
    # every pattern and text up to small lengths over a binary alphabet
    for mp, mt in itertools.product(range(1, 4), range(1, 7)):
        for P in itertools.product(range(2), repeat=mp):
            for T in itertools.product(range(2), repeat=mt):
                for rho in range(1, 5):
                    cases += 1
                    bad += not _recurrence_case(T, P, rho)
    # random strings for every size up to |P| = 8, |T| = 24, sigma 3, rho 4
    rng = random.Random(5)
    for mp, mt, sigma, rho in itertools.product(range(1, 9), range(1, 25), range(1, 4), range(1, 5)):
        for _ in range(3):
            P = [rng.randrange(sigma) for _ in range(mp)]
            T = [rng.randrange(sigma) for _ in range(mt)]
            cases += 1
            bad += not _recurrence_case(T, P, rho)
    ok = bad == 0
    announce(capsys, 5, ok, f"{cases - bad}/{cases} cases: recurrence equals direct correlation and "
             "Hamming distance at every alignment")
    assert ok


def test_criterion_06_support_bound(capsys):
    rng = random.Random(6)
    violations = 0
    for _ in range(10_000):
        rho = rng.randint(1, 12)
        n = rng.randint(1, 120)
        sigma = rng.choice([2, 3, 26])
        base = [rng.randrange(sigma) for _ in range(rho)]
        X = [base[j % rho] for j in range(n)]
        for _ in range(rng.randint(0, n)):
            X[rng.randrange(n)] = rng.randrange(sigma)
        d = mismatches_at_shift(X, rho)
        violations += backward_diff_seq(X, rho).norm > 2 * (d + rho)
        violations += backward_diff_seq(X, rho, reversed=True).norm > 2 * (d + rho)
    ok = violations == 0
    announce(capsys, 6, ok, f"{violations} violations of |Delta| <= 2(d+rho) over 10^4 samples (both orientations)")
    assert ok


def test_criterion_07_tstar_soundness(capsys):
    rng = random.Random(7)
    outside = not_periodic = occurrences = tested = 0
    while tested < 200:
        k = rng.randint(1, 4)
        rho = rng.randint(1, k)
        m = rng.randint(max(8, 2 * k + 2), 80)
        sigma = rng.choice([2, 4, 26])
        base = [rng.randrange(sigma) for _ in range(rho)]
        P = [base[j % rho] for j in range(m)]
        for _ in range(rng.randint(0, 2 * k)):
            P[rng.randrange(m)] = rng.randrange(sigma)
        rho = smallest_dperiod(P, 6 * k)
        if rho > k:
            continue
        tested += 1
        plan = PeriodicPlan(P, k, k, rho, 6 * k)
        eng = FragmentEngine(plan)
        L = eng.length
        T = [P[j % rho] for j in range(L)]
        for _ in range(int(rng.choice([0, 0.02, 0.1, 0.3]) * L)):
            T[rng.randrange(L)] = rng.randrange(sigma)
        if rng.random() < 0.3:
            junk = rng.randint(1, L // 2)
            side = rng.choice(["left", "right"])
            for j in range(junk):
                T[j if side == "left" else L - 1 - j] = rng.randrange(sigma)
        at = rng.randrange(L - m + 1)
        T[at : at + m] = P
        for _ in range(rng.randint(0, k)):
            T[at + rng.randrange(m)] = rng.randrange(sigma)
        for c in T:
            eng.push(c)
        lo, hi = eng.tstar_bounds
        d = plan.d
        dist = oracle_distances(P, T)
        for j, dd in enumerate(dist):
            if dd <= k:
                occurrences += 1
                end = m - 1 + j
                outside += not (lo <= end - m + 1 and end <= hi)
        if hi >= lo:
            not_periodic += mismatches_at_shift(T[lo : hi + 1], rho) > 2 * d + 4 * k + rho
    ok = outside == 0 and not_periodic == 0
    announce(capsys, 7, ok, f"{occurrences} occurrences in 200 fragments, {outside} outside T*, "
             f"{not_periodic} T* without the (2d+4k+rho)-period")
    assert ok


def test_criterion_08_delays(periodic_runs, aperiodic_runs, capsys):
    problems = []
    runs = split_elapsed(periodic_runs)[0] + split_elapsed(aperiodic_runs)[0]
    worst = {}
    for r in runs:
        delays = r["counters"].delays
        for comp, v in delays.items():
            worst[comp] = max(worst.get(comp, 0), v)
        if delays.get("head", 0) > 2 * r["s"]:
            problems.append((r["kind"], r["idx"], "head", delays["head"]))
        for comp in ("combined", "tail", "aperiodic"):
            if delays.get(comp, 0) != 0:
                problems.append((r["kind"], r["idx"], comp, delays[comp]))
        if delays.get("aperiodic_head", 0) > r["k"]:
            problems.append((r["kind"], r["idx"], "aperiodic_head", delays["aperiodic_head"]))
    ok = not problems
    announce(capsys, 8, ok, f"worst observed delays {worst}; head <= 2s, aperiodic head <= k, "
             f"reported outputs 0; violations={problems[:5]}")
    assert ok


def test_criterion_09_space_proxy(periodic_runs, aperiodic_runs, capsys):
    runs = split_elapsed(periodic_runs)[0] + split_elapsed(aperiodic_runs)[0]

    def ratio(r):
        return r["counters"].live_cells_max / (r["s"] * math.log2(max(r["n"], 2)) ** 2)

    fit = [r for r in runs if r["s"] == r["k"]]
    C = max(ratio(r) for r in fit)
    over = [(r["kind"], r["idx"], round(ratio(r), 2)) for r in runs if ratio(r) > C]
    per_kind = {kind: round(max(ratio(r) for r in fit if r["kind"] == kind), 2) for kind in ("periodic", "aperiodic")}
    ok = len(fit) >= 20 and not over
    announce(capsys, 9, ok, f"C = {C:.2f} fitted on {len(fit)} runs with s = k (per engine {per_kind}); "
             f"{len(runs) - len(over)}/{len(runs)} runs within C*s*log2(n)^2")
    assert ok


def dense_instance(m, k, rho, sigma, n, noise, seed):
    rng = random.Random(seed)
    base = [rng.randrange(sigma) for _ in range(rho)]
    P = [base[j % rho] for j in range(m)]
    # 3k isolated substitutions: exactly 6k = d mismatches at shift rho
    gap = (m - 2 * rho) // (3 * k)
    for j in range(3 * k):
        x = rho + j * gap + rng.randrange(gap - rho)
        P[x] = (P[x] + 1) % sigma
    T = [base[j % rho] for j in range(n)]
    for j in rng.sample(range(n), int(noise * n)):
        T[j] = (T[j] + 1) % sigma
    return P, T


def test_criterion_10_work_scaling(capsys):
    rows = []
    ok = True
    for m, k, rho, sigma, noise in [(1024, 16, 8, 2, 0.03), (2048, 8, 4, 2, 0.02), (1024, 4, 3, 4, 0.01)]:
        P, T = dense_instance(m, k, rho, sigma, 4096, noise, seed=m + k)
        assert mismatches_at_shift(P, rho) == 6 * k
        work = []
        for s in (k, 4 * k, 16 * k, m):
            c = WorkCounters()
            eng = engine_select(P, k, s, counters=c)
            assert eng.kind == "periodic"
            for _ in run_engine(eng, T):
                pass
            work.append(c.total_work)
        steps = [b / a for a, b in zip(work, work[1:])]
        ok &= all(x <= 1.25 for x in steps)
        rows.append(f"m={m} k={k}: {work} steps {[round(x, 3) for x in steps]}")
    announce(capsys, 10, ok, "work over s in {k,4k,16k,m}, each step <= 1.25x: " + "; ".join(rows))
    assert ok


def test_criterion_11_localization_primes(capsys):
    t0 = time.time()
    bad = []
    for m in range(2, 10**6 + 1):
        Q = localization_primes(m)
        if not (math.prod(Q) > m and max(Q) <= max(5 * math.log(m), 3)):
            bad.append(m)
    elapsed = time.time() - t0
    ok = not bad and elapsed < 30
    announce(capsys, 11, ok, f"m in [2, 10^6]: {len(bad)} failures, {elapsed:.1f}s (limit 30s)")
    assert ok


if __name__ == "__main__":
    import sys

    pr = collect_periodic_runs()
    ar = collect_aperiodic_runs()
    tests = [
        (test_criterion_01_periodic_differential, (pr,)),
        (test_criterion_02_aperiodic_differential, (ar,)),
        (test_criterion_03_batched_equality, ()),
        (test_criterion_04_online_pointwise, ()),
        (test_criterion_05_recurrence_identity, ()),
        (test_criterion_06_support_bound, ()),
        (test_criterion_07_tstar_soundness, ()),
        (test_criterion_08_delays, (pr, ar)),
        (test_criterion_09_space_proxy, (pr, ar)),
        (test_criterion_10_work_scaling, ()),
        (test_criterion_11_localization_primes, ()),
    ]
    failures = 0
    for fn, args in tests:
        try:
            fn(*args, None)
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
