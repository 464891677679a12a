"""Committees sampled from a maximal lottery and their domination guarantees.

Drawing ``k`` candidates i.i.d. from a maximal lottery and using the
uniform distribution over the resulting multiset changes every voter's
rank of every candidate by at most a one-sided empirical-CDF discrepancy.
The per-voter worst rank increase ``delta_v`` therefore has mean at most
``delta(k)``, and the committee satisfies

    max_a E_{b ~ committee}[P[a, b]] <= max_a avg_rank(a; lottery) + Z
                                     <= 1/2 + Z,

where ``Z`` is the weighted mean of ``delta_v``. Everything here computes
the terms of that chain directly so they can be checked one by one.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from approxdom.discrepancy import delta_value
from approxdom.election import Election, MarginMatrix, margin_matrix
from approxdom.errors import GuardError, IterationLimitError
from approxdom.lottery import Lottery

__all__ = [
    "Committee",
    "DominationReport",
    "RankInflation",
    "GoodCommittee",
    "make_rng",
    "sample_committee",
    "sample_counts",
    "worst_case_avg_margin",
    "rank_inflation",
    "batch_inflation",
    "batch_worst_margin",
    "verify_alpha_dominating",
    "sample_until_good",
    "min_dominating_brute",
    "BRUTE_FORCE_LIMIT",
]

BRUTE_FORCE_LIMIT = 10**7
_BATCH_CELLS = 1 << 22


def make_rng(seed) -> np.random.Generator:
    """Philox generator keyed by ``seed``; an existing Generator passes through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _margins(e_or_mm, exact=None) -> MarginMatrix:
    if isinstance(e_or_mm, MarginMatrix):
        return e_or_mm
    return margin_matrix(e_or_mm, exact=exact)


@dataclass(frozen=True)
class Committee:
    """Size-``k`` multiset of candidates out of ``m``, kept sorted."""

    members: tuple
    m: int

    def __post_init__(self):
        members = tuple(sorted(int(c) for c in self.members))
        if not members:
            raise ValueError("a committee needs at least one member")
        if members[0] < 0 or members[-1] >= self.m:
            raise ValueError("committee member out of range")
        object.__setattr__(self, "members", members)

    @property
    def k(self) -> int:
        return len(self.members)

    @property
    def distinct(self) -> frozenset:
        return frozenset(self.members)

    @property
    def multiplicities(self) -> dict[int, int]:
        return dict(sorted(Counter(self.members).items()))

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.members, minlength=self.m)

    @property
    def empirical(self) -> Lottery:
        return Lottery.from_counts(self.counts)


def _cdf(x: Lottery) -> np.ndarray:
    probs = np.asarray(x.as_float().probs)
    cum = np.cumsum(probs)
    last = int(np.flatnonzero(probs > 0)[-1])
    cum[last:] = 1.0
    return cum


def sample_committee(x: Lottery, k: int, seed) -> Committee:
    """``k`` i.i.d. draws from ``x`` by inverse CDF over candidates in index order."""
    if k < 1:
        raise ValueError("k must be positive")
    u = make_rng(seed).random(k)
    members = np.searchsorted(_cdf(x), u, side="right")
    return Committee(tuple(members.tolist()), x.m)


def sample_counts(x: Lottery, k: int, trials: int, seed) -> np.ndarray:
    """``(trials, m)`` multiplicity table of ``trials`` independent committees."""
    u = make_rng(seed).random((trials, k))
    members = np.searchsorted(_cdf(x), u, side="right")
    counts = np.zeros((trials, x.m), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(trials), k), members.ravel()), 1)
    return counts


def worst_case_avg_margin(c: Committee, e_or_mm) -> tuple[int, Fraction | float]:
    """Candidate maximising ``sum_b D(b) P[a, b]`` over all ``a`` (members included)."""
    mm = _margins(e_or_mm)
    if c.m != mm.m:
        raise ValueError("committee and election disagree on the candidate count")
    counts = c.counts
    if mm.exact:
        values = [Fraction(sum(int(counts[b]) * mm.P[a, b] for b in range(mm.m)), c.k) for a in range(mm.m)]
    else:
        values = list(mm.P @ counts / c.k)
    worst = max(range(mm.m), key=lambda a: (values[a], -a))
    return worst, values[worst]


class RankInflation(NamedTuple):
    per_voter: tuple
    average: Fraction | float


def _rank_table(e: Election, probs: np.ndarray) -> np.ndarray:
    """``table[v, p]`` = rank, for voter ``v``, of the candidate in place ``p``."""
    by_place = probs[e.ranking_array]
    suffix = np.cumsum(by_place[:, ::-1], axis=1)[:, ::-1]
    return suffix - by_place


def rank_inflation(e: Election, x_ml: Lottery, c: Committee) -> RankInflation:
    """Per-voter ``delta_v = max_a (rank_v(a; committee) - rank_v(a; x_ml))`` and their weighted mean."""
    if x_ml.m != e.m or c.m != e.m:
        raise ValueError("lottery, committee and election disagree on the candidate count")
    if x_ml.exact:
        emp = c.empirical.probs
        ml = x_ml.probs
    else:
        emp = c.counts / c.k
        ml = x_ml.probs
    diff = _rank_table(e, emp) - _rank_table(e, ml)
    per_voter = tuple(max(row) for row in diff)
    if x_ml.exact:
        average = sum((w * d for w, d in zip(e.weights, per_voter)), start=Fraction(0)) / e.total_weight
    else:
        per_voter = tuple(float(d) for d in per_voter)
        weights = np.array([float(w) for w in e.weights])
        average = float(weights @ np.array(per_voter) / weights.sum())
    return RankInflation(per_voter, average)


def batch_inflation(e: Election, x_ml: Lottery, counts: np.ndarray) -> np.ndarray:
    """Float ``Z`` for every row of a multiplicity table (see :func:`sample_counts`)."""
    counts = np.asarray(counts)
    k = int(counts[0].sum())
    R = e.ranking_array
    ml = _rank_table(e, np.asarray(x_ml.as_float().probs))
    weights = np.array([float(w) for w in e.weights])
    weights /= weights.sum()
    out = np.empty(len(counts))
    step = max(1, _BATCH_CELLS // (e.num_voters * e.m))
    for lo in range(0, len(counts), step):
        block = counts[lo:lo + step]
        by_place = block[:, R].astype(np.float64) / k  # (T, n, m)
        suffix = np.cumsum(by_place[:, :, ::-1], axis=2)[:, :, ::-1] - by_place
        out[lo:lo + step] = (suffix - ml).max(axis=2) @ weights
    return out


def batch_worst_margin(mm: MarginMatrix, counts: np.ndarray) -> np.ndarray:
    """Float ``max_a sum_b D(b) P[a, b]`` for every row of a multiplicity table."""
    counts = np.asarray(counts, dtype=np.float64)
    k = counts[0].sum()
    return (counts @ mm.as_float().P.T / k).max(axis=1)


@dataclass(frozen=True)
class DominationReport:
    """Outcome of an ``alpha``-domination check.

    ``witness`` maps every excluded candidate to ``(best member, margin)``;
    ``worst_excluded`` is the excluded candidate whose best margin is
    smallest, ``None`` when nothing is excluded.
    """

    alpha: Fraction | float
    passed: bool
    witness: dict
    worst_excluded: int | None

    def rows(self) -> list[tuple[int, int, Fraction | float]]:
        return [(a, b, margin) for a, (b, margin) in sorted(self.witness.items())]


def verify_alpha_dominating(S, e_or_mm, alpha) -> DominationReport:
    """Does every candidate outside ``S`` lose to some member by at least ``alpha``?

    The comparison is inclusive, so ``alpha = 1/2`` decides whether ``S`` is
    a dominating set. ``S`` may be a :class:`Committee` (its distinct
    members are used) or any iterable of candidates.
    """
    mm = _margins(e_or_mm)
    members = sorted(S.distinct if isinstance(S, Committee) else set(S))
    if not members:
        raise ValueError("S must be non-empty")
    if members[0] < 0 or members[-1] >= mm.m:
        raise ValueError("S mentions a candidate outside the election")
    inside = set(members)
    witness = {}
    for a in range(mm.m):
        if a in inside:
            continue
        b = max(members, key=lambda b: (mm.P[b, a], -b))
        witness[a] = (b, mm.P[b, a])
    worst = min(witness, key=lambda a: (witness[a][1], a)) if witness else None
    passed = worst is None or witness[worst][1] >= alpha
    return DominationReport(alpha, bool(passed), witness, worst)


@dataclass(frozen=True)
class GoodCommittee:
    """Result of :func:`sample_until_good`.

    ``alpha = 1/2 - (1 + eta) delta`` is the level at which the distinct
    members are guaranteed to dominate; it is vacuous when not positive.
    """

    committee: Committee
    iterations: int
    Z: Fraction | float
    delta: Fraction | float
    eta: float
    threshold: Fraction | float
    worst_candidate: int
    worst_value: Fraction | float
    certified: bool

    @property
    def alpha(self):
        return Fraction(1, 2) - self.threshold if isinstance(self.threshold, Fraction) else 0.5 - self.threshold

    @property
    def vacuous(self) -> bool:
        return self.alpha <= 0


def _scale(eta, delta):
    if isinstance(delta, Fraction) and isinstance(eta, (int, Fraction)):
        return (1 + Fraction(eta)) * delta
    return (1 + float(eta)) * float(delta)


def sample_until_good(
    e: Election,
    x_ml: Lottery,
    k: int,
    eta,
    seed,
    max_iters: int = 1000,
    delta=None,
    delta_source: str = "auto",
    margins: MarginMatrix | None = None,
) -> GoodCommittee:
    """Resample size-``k`` committees until ``Z <= (1 + eta) delta(k)``.

    By Markov's inequality each draw succeeds with probability at least
    ``eta / (1 + eta)``. A draw is accepted only once the guarantee
    ``max_a E_{b ~ committee}[P[a, b]] <= 1/2 + (1 + eta) delta(k)`` has also
    been checked directly against the margins; with an exact lottery the
    second check follows from the first. ``delta`` overrides the value
    taken from ``delta_source`` (``auto``, ``exact``, ``mc`` or ``bound``).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if delta is None:
        delta = delta_value(k, delta_source)
    mm = margins if margins is not None else margin_matrix(e, exact=x_ml.exact)
    threshold = _scale(eta, delta)
    half = Fraction(1, 2) if mm.exact and isinstance(threshold, Fraction) else 0.5
    rng = make_rng(seed)
    observed = []
    for it in range(1, max_iters + 1):
        c = sample_committee(x_ml, k, rng)
        Z = rank_inflation(e, x_ml, c).average
        observed.append(Z)
        if Z > threshold:
            continue
        worst, value = worst_case_avg_margin(c, mm)
        if value <= half + threshold:
            return GoodCommittee(c, it, Z, delta, eta, threshold, worst, value, True)
    zs = np.array([float(z) for z in observed])
    raise IterationLimitError(
        f"no committee with Z <= {float(threshold):.6g} in {max_iters} draws "
        f"(Z min {zs.min():.6g}, mean {zs.mean():.6g}, max {zs.max():.6g})",
        iterations=max_iters,
        observed=zs,
    )


def _search_size(m: int, k_cap: int) -> int:
    return sum(math.comb(m, s) for s in range(1, min(k_cap, m) + 1))


def min_dominating_brute(e_or_mm, alpha, k_cap: int, limit: int = BRUTE_FORCE_LIMIT) -> tuple | None:
    """Smallest ``alpha``-dominating set of size at most ``k_cap`` by exhaustive search.

    Subsets are tried in order of size and then lexicographically; returns
    ``None`` when no set of size ``<= k_cap`` works.
    """
    mm = _margins(e_or_mm)
    m = mm.m
    size = _search_size(m, k_cap)
    if size > limit:
        raise GuardError(f"exhaustive search over {size} subsets exceeds the limit of {limit}")
    cover = []
    for b in range(m):
        mask = 1 << b
        for a in range(m):
            if a != b and mm.P[b, a] >= alpha:
                mask |= 1 << a
        cover.append(mask)
    full = (1 << m) - 1
    for s in range(1, min(k_cap, m) + 1):
        for subset in itertools.combinations(range(m), s):
            mask = 0
            for b in subset:
                mask |= cover[b]
            if mask == full:
                return subset
    return None

