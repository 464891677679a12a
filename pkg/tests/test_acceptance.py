"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``python3 -m pytest tests/test_acceptance.py -s``; the
summary lines are also repeated at the end of any pytest session.
"""

import math
import time
from fractions import Fraction

import numpy as np

from approxdom.committee import (
    batch_inflation,
    batch_worst_margin,
    min_dominating_brute,
    sample_counts,
    sample_until_good,
    verify_alpha_dominating,
)
from approxdom.discrepancy import (
    K_EXACT,
    _delta_exact_value,
    alpha_table,
    delta_exact,
    delta_monte_carlo,
    delta_upper_bound,
    survival_pieces,
)
from approxdom.election import majority_tournament, margin_matrix
from approxdom.generators import (
    AdversarialParams,
    adversarial_attack,
    adversarial_candidates,
    adversarial_election_explicit,
    adversarial_margin,
    condorcet_cycle,
    mcgarvey,
    random_election,
    random_pair_candidate,
    random_tournament,
)
from approxdom.lottery import game_matrix, solve_maximal_lottery, support, verify_lottery

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def battery():
    return {
        "3-cycle": condorcet_cycle(3),
        "random m=10": random_election(10, 51, seed=2024),
        "mcgarvey m=15": mcgarvey(random_tournament(15, seed=2024)),
    }


def test_criterion_01_exact_golden_values():
    survival_pieces.cache_clear()
    _delta_exact_value.cache_clear()
    start = time.perf_counter()
    got = [delta_exact(k).value for k in (2, 3, 4)]
    elapsed = time.perf_counter() - start
    ok = got == [Fraction(3, 8), Fraction(17, 54), Fraction(71, 256)] and elapsed < 1
    record(1, ok, f"delta(2..4) = {', '.join(map(str, got))} in {elapsed:.3f}s")


def test_criterion_02_alpha_table():
    start = time.perf_counter()
    alphas = [r.alpha for r in alpha_table([2, 3, 4])]
    table_ok = alphas == [Fraction(1, 8), Fraction(5, 27), Fraction(57, 256)]
    targets = {10: 0.316989216, 50: 0.4145687296}
    notes = []
    points_ok = True
    for k, target in targets.items():
        exact = float(Fraction(1, 2) - delta_exact(k).value)
        mc = delta_monte_carlo(k, 10**6, seed=k)
        exact_ok = abs(exact - target) <= 1e-9
        mc_ok = abs(mc.alpha - target) <= 2 * mc.ci_halfwidth
        points_ok &= exact_ok and mc_ok
        notes.append(f"k={k}: exact {exact:.10f}, MC {mc.alpha:.6f} +/- {mc.ci_halfwidth:.1e}")
    elapsed = time.perf_counter() - start
    ok = table_ok and points_ok and elapsed < 120
    record(2, ok, f"alpha(2..4) = {', '.join(map(str, alphas))}; " + "; ".join(notes) + f"; {elapsed:.1f}s")


def test_criterion_03_upper_bound():
    exact_ok = all(delta_upper_bound(k) >= float(delta_exact(k).value) for k in range(1, K_EXACT + 1))
    mc_ok = within_one_ci = True
    for k in range(1, 51):
        mc = delta_monte_carlo(k, 10**6, seed=1000 + k)
        mc_ok &= delta_upper_bound(k) >= mc.value - 2 * mc.ci_halfwidth
        within_one_ci &= delta_upper_bound(k) >= mc.value - mc.ci_halfwidth
    ks = [100, 200, 500, 1000, 2000, 10**4, 10**6]
    ratios = [delta_upper_bound(k) / math.sqrt(math.pi / (8 * k)) for k in ks]
    in_band = [1 <= r <= 1.5 for r in ratios]
    trending = all(a > b for a, b in zip(ratios, ratios[1:]))
    ok = exact_ok and mc_ok and all(in_band) and trending
    shown = ", ".join(f"k={k}: {r:.3f}" for k, r in zip(ks, ratios))
    record(3, ok, f">= exact to k={K_EXACT}: {exact_ok}; >= MC(1e6) - 2CI to k=50: {mc_ok} "
                  f"(- 1CI: {within_one_ci}); "
                  f"ratio to sqrt(pi/8k) [{shown}] in [1, 1.5]: {all(in_band)}; decreasing: {trending}")


def test_criterion_04_lottery_verification():
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    float_fail = exact_fail = slack_fail = exact_runs = 0
    for i in range(500):
        m = int(rng.integers(1, 21))
        n = 2 * int(rng.integers(0, 101)) + 1
        e = random_election(m, n, seed=10_000 + i)
        fl = margin_matrix(e, exact=False)
        float_fail += not verify_lottery(fl, solve_maximal_lottery(fl), tol=1e-9).passed
        if m <= 8:
            exact_runs += 1
            mm = margin_matrix(e, exact=True)
            x = solve_maximal_lottery(mm)
            exact_fail += not verify_lottery(mm, x, tol=0).passed
            payoff = game_matrix(mm).M.dot(x.probs)
            slack_fail += any(p > 0 for p in payoff) or any(payoff[a] != 0 for a in support(x))
    elapsed = time.perf_counter() - start
    ok = float_fail == exact_fail == slack_fail == 0 and elapsed < 300
    record(4, ok, f"500 elections: float failures {float_fail}; exact failures {exact_fail}/{exact_runs}; "
                  f"slackness violations {slack_fail}; {elapsed:.1f}s")


def test_criterion_05_expected_inflation():
    start = time.perf_counter()
    bad = []
    worst_gap = -math.inf
    for name, e in battery().items():
        mm = margin_matrix(e, exact=False)
        x = solve_maximal_lottery(mm)
        for k in range(2, 9):
            counts = sample_counts(x, k, 10**4, seed=500 + k)
            z = batch_inflation(e, x, counts)
            w = batch_worst_margin(mm, counts)
            delta = float(delta_exact(k).value)
            se_z = z.std(ddof=1) / math.sqrt(len(z))
            se_w = w.std(ddof=1) / math.sqrt(len(w))
            worst_gap = max(worst_gap, z.mean() - delta)
            if z.mean() > delta + 3 * se_z:
                bad.append(f"{name} k={k}: mean Z {z.mean():.4f} > {delta:.4f} + 3 SE")
            if w.mean() > 0.5 + delta + 3 * se_w:
                bad.append(f"{name} k={k}: mean margin {w.mean():.4f} > 1/2 + delta")
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 600
    record(5, ok, "; ".join(bad) if bad else
           f"3 elections x k=2..8 x 1e4 trials; max(mean Z - delta) = {worst_gap:.4f}; {elapsed:.1f}s")


def test_criterion_06_sample_until_good():
    start = time.perf_counter()
    summary = []
    ok = True
    for name, e in battery().items():
        mm = margin_matrix(e)
        x = solve_maximal_lottery(mm)
        exact = margin_matrix(e, exact=True)
        within = dominated = checked = 0
        for seed in range(1000):
            k = 2 + seed % 7
            good = sample_until_good(e, x, k, 1, seed, max_iters=1000, margins=mm)
            within += good.iterations <= 20
            if not good.vacuous:
                checked += 1
                alpha = Fraction(1, 2) - 2 * delta_exact(k).value
                dominated += verify_alpha_dominating(good.committee, exact, alpha).passed
        rate = within / 1000
        ok &= rate >= 0.999 and dominated == checked
        summary.append(f"{name}: {rate:.3f} within 20, {dominated}/{checked} dominating")
    elapsed = time.perf_counter() - start
    record(6, ok, "; ".join(summary) + f"; {elapsed:.1f}s")


def test_criterion_07_margin_formula():
    instances = mismatches = pairs = 0
    for t in (4, 5, 6):
        for a in range(1, t):
            for b in range(1, t - a + 1):
                params = AdversarialParams(t, a, b)
                e = adversarial_election_explicit(params)
                cands = adversarial_candidates(params)
                P = margin_matrix(e, exact=True).P
                instances += 1
                for i in range(e.m):
                    for j in range(e.m):
                        if i != j:
                            pairs += 1
                            mismatches += P[i, j] != adversarial_margin(cands[i], cands[j], t)
    record(7, mismatches == 0, f"{instances} instances (t=4,5,6, all a,b), {pairs} ordered pairs, "
                               f"{mismatches} mismatches")


def test_criterion_08_attack():
    params = AdversarialParams(400, 40, 8)
    floor = params.guaranteed_margin
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    lowest = Fraction(1)
    for trial in range(100):
        committee = [random_pair_candidate(params, int(rng.integers(2**63))) for _ in range(5)]
        attacker = adversarial_attack(committee, params, seed=trial)
        lowest = min(lowest, *(adversarial_margin(attacker, c, params.t) for c in committee))
    elapsed = time.perf_counter() - start
    ok = lowest >= floor and elapsed < 60
    record(8, ok, f"100 committees of 5; lowest margin {float(lowest):.5f} vs {float(floor)}; {elapsed:.1f}s")


def test_criterion_09_mcgarvey():
    rng = np.random.default_rng(9)
    start = time.perf_counter()
    failures = 0
    for i in range(200):
        m = int(rng.integers(1, 21))
        T = random_tournament(m, seed=90_000 + i)
        realized = majority_tournament(margin_matrix(mcgarvey(T), exact=True))
        failures += realized != T or bool(realized.ties)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 30
    record(9, ok, f"200 tournaments (m <= 20): {failures} failures; {elapsed:.1f}s")


def recount_dominates(S, e, alpha):
    for a in range(e.m):
        if a in S:
            continue
        if not any(
            sum(w for w, r in zip(e.weights, e.rankings) if r.index(b) < r.index(a)) >= alpha * e.total_weight
            for b in S
        ):
            return False
    return True


def test_criterion_10_brute_force_consistency():
    rng = np.random.default_rng(10)
    failures = 0
    for i in range(50):
        m = int(rng.integers(2, 11))
        n = int(rng.integers(1, 40))
        e = random_election(m, n, seed=20_000 + i)
        mm = margin_matrix(e, exact=True)
        x = solve_maximal_lottery(mm)
        k = int(rng.integers(6, 11))
        good = sample_until_good(e, x, k, 1, seed=i, margins=mm)
        S = good.committee.distinct
        found = min_dominating_brute(mm, good.alpha, len(S))
        failures += not recount_dominates(S, e, good.alpha) or found is None
    singleton = min_dominating_brute(condorcet_cycle(3), Fraction(1, 2), 1)
    ok = failures == 0 and singleton is None
    record(10, ok, f"50 pipeline committees: {failures} rejected by the recount; "
                   f"3-cycle singleton 1/2-dominating set: {singleton}")
