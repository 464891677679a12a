"""Election generators: McGarvey realisations, random profiles and the
pair-of-sets construction whose elections defeat every small committee by
a margin of order ``1/k``.

In the pair-of-sets election the candidates are pairs ``(A, B)`` of
disjoint subsets of ``{0, ..., t-1}`` with ``|A| = a`` and ``|B| = b``, and
each element ``j`` contributes two voters. ``v_j`` follows a fixed default
order except that pairs with ``j in A`` come first and pairs with
``j in B`` next; ``u_j`` follows the reversed order except that pairs with
``j in B`` come last and pairs with ``j in A`` just above them. The two
voters agree on a pair of candidates only when ``j`` lies in one
candidate's ``A`` and the other's ``B``, which gives the closed-form margin
of :func:`adversarial_margin`.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from approxdom.committee import make_rng
from approxdom.election import Election, Tournament
from approxdom.errors import AttackError, GuardError

__all__ = [
    "mcgarvey",
    "random_tournament",
    "random_election",
    "condorcet_cycle",
    "unanimous",
    "AdversarialParams",
    "PairCandidate",
    "IdenticalCandidatesWarning",
    "default_key",
    "adversarial_compare",
    "adversarial_margin",
    "adversarial_attack",
    "adversarial_candidates",
    "adversarial_election_explicit",
    "random_pair_candidate",
    "EXPLICIT_LIMIT",
    "EXHAUSTIVE_LIMIT",
]

EXPLICIT_LIMIT = 10**5
EXHAUSTIVE_LIMIT = 10**6


def mcgarvey(T: Tournament) -> Election:
    """Election with two voters per edge whose strict majority graph is ``T``.

    For an edge ``u -> v`` one voter ranks ``u, v`` first and then the rest
    in increasing order; the other ranks the rest in decreasing order and
    then ``u, v``. Every other pair is split evenly across the two voters.
    """
    if T.m == 1:
        return Election(1, (1,), ((0,),))
    rankings = []
    for u, v in sorted(T.edges):
        rest = [c for c in range(T.m) if c not in (u, v)]
        rankings.append((u, v, *rest))
        rankings.append((*reversed(rest), u, v))
    return Election.from_rankings(rankings)


def random_tournament(m: int, seed) -> Tournament:
    rng = make_rng(seed)
    flips = rng.random(m * (m - 1) // 2) < 0.5
    edges = [
        (a, b) if flip else (b, a)
        for (a, b), flip in zip(itertools.combinations(range(m), 2), flips)
    ]
    return Tournament(m, frozenset(edges))


def random_election(m: int, n: int, seed) -> Election:
    """``n`` unit-weight voters with independent uniform random rankings."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = make_rng(seed)
    rankings = np.argsort(rng.random((n, m)), axis=1)
    return Election(m, (1,) * n, tuple(map(tuple, rankings.tolist())))


def condorcet_cycle(m: int) -> Election:
    """Voter ``i`` ranks ``i, i+1, ..., i+m-1`` (mod ``m``)."""
    if m < 3:
        raise ValueError("a Condorcet cycle needs at least 3 candidates")
    return Election(m, (1,) * m, tuple(tuple((i + s) % m for s in range(m)) for i in range(m)))


def unanimous(m: int, n: int = 1) -> Election:
    return Election(m, (1,) * n, (tuple(range(m)),) * n)


# --------------------------------------------------------------------------
# Pair-of-sets construction


@dataclass(frozen=True)
class AdversarialParams:
    t: int
    a: int
    b: int

    def __post_init__(self):
        if min(self.t, self.a, self.b) < 1:
            raise ValueError("t, a and b must be positive")
        if self.a + self.b > self.t:
            raise ValueError(f"a + b = {self.a + self.b} exceeds t = {self.t}")

    @property
    def num_candidates(self) -> int:
        return math.comb(self.t, self.a) * math.comb(self.t - self.a, self.b)

    @property
    def num_voters(self) -> int:
        return 2 * self.t

    @property
    def max_committee(self) -> int:
        """Largest committee the attack is guaranteed to handle (``k b <= a``)."""
        return self.a // self.b

    @property
    def guaranteed_margin(self) -> Fraction:
        return Fraction(1, 2) + Fraction(self.b, 4 * self.t)

    @classmethod
    def asymptotic(cls, t: int, constant: int = 200) -> tuple["AdversarialParams", int]:
        """``a = t/constant``, ``b = ceil(log2 t)`` and the matching ``k = floor(t / (constant log2 t))``."""
        a = t // constant
        b = math.ceil(math.log2(t))
        k = math.floor(t / (constant * math.log2(t)))
        return cls(t, a, b), k


@dataclass(frozen=True)
class PairCandidate:
    A: frozenset
    B: frozenset

    def __post_init__(self):
        A, B = frozenset(map(int, self.A)), frozenset(map(int, self.B))
        if A & B:
            raise ValueError("A and B must be disjoint")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    def check(self, params: AdversarialParams) -> None:
        if len(self.A) != params.a or len(self.B) != params.b:
            raise ValueError(f"expected |A| = {params.a} and |B| = {params.b}")
        if any(not 0 <= j < params.t for j in self.A | self.B):
            raise ValueError(f"elements must lie in 0..{params.t - 1}")

    def __str__(self):
        inner = lambda s: ",".join(map(str, sorted(s)))  # noqa: E731
        return f"A={{{inner(self.A)}}};B={{{inner(self.B)}}}"

    @classmethod
    def parse(cls, text: str) -> "PairCandidate":
        parts = dict(part.split("=", 1) for part in text.strip().split(";"))
        sets = {}
        for name in ("A", "B"):
            body = parts[name].strip().strip("{}")
            sets[name] = frozenset(int(x) for x in body.split(",") if x.strip())
        return cls(sets["A"], sets["B"])


def default_key(c: PairCandidate) -> tuple:
    """Lexicographic default order on the sorted-element encoding of ``(A, B)``."""
    return tuple(sorted(c.A)), tuple(sorted(c.B))


def _v_tier(j: int, c: PairCandidate) -> int:
    return 0 if j in c.A else 1 if j in c.B else 2


def _u_tier(j: int, c: PairCandidate) -> int:
    return 2 if j in c.B else 1 if j in c.A else 0


def adversarial_compare(
    j: int,
    side: str,
    c1: PairCandidate,
    c2: PairCandidate,
    key: Callable[[PairCandidate], tuple] = default_key,
) -> bool:
    """True when voter ``v_j`` (``side="v"``) or ``u_j`` (``side="u"``) prefers ``c1`` to ``c2``.

    Lower tiers are preferred. Within a tier ``v_j`` follows ``key``
    ascending and ``u_j`` follows it descending.
    """
    if c1 == c2:
        raise ValueError("cannot compare a candidate with itself")
    k1, k2 = key(c1), key(c2)
    if side == "v":
        return (_v_tier(j, c1), k1) < (_v_tier(j, c2), k2)
    if side == "u":
        t1, t2 = _u_tier(j, c1), _u_tier(j, c2)
        return t1 < t2 or (t1 == t2 and k1 > k2)
    raise ValueError(f"side must be 'v' or 'u', got {side!r}")


class IdenticalCandidatesWarning(UserWarning):
    """The margin of a candidate over itself was requested."""


def adversarial_margin(c1: PairCandidate, c2: PairCandidate, t: int) -> Fraction:
    """Fraction of the ``2t`` voters preferring ``c1``: ``1/2 + (|A1 & B2| - |A2 & B1|) / (2t)``."""
    if c1 == c2:
        warnings.warn("margin of a candidate against itself; returning 1/2", IdenticalCandidatesWarning, stacklevel=2)
        return Fraction(1, 2)
    return Fraction(1, 2) + Fraction(len(c1.A & c2.B) - len(c2.A & c1.B), 2 * t)


def adversarial_candidates(params: AdversarialParams) -> list[PairCandidate]:
    """All pair-candidates, listed in :func:`default_key` order."""
    ground = range(params.t)
    out = []
    for A in itertools.combinations(ground, params.a):
        rest = [j for j in ground if j not in A]
        for B in itertools.combinations(rest, params.b):
            out.append(PairCandidate(frozenset(A), frozenset(B)))
    return out


def adversarial_election_explicit(params: AdversarialParams) -> Election:
    """Materialise the pair-of-sets election.

    Candidate ``i`` is ``adversarial_candidates(params)[i]``; the names side
    table holds the ``A={...};B={...}`` rendering of each pair.
    """
    count = params.num_candidates
    if count > EXPLICIT_LIMIT:
        raise GuardError(f"{count} candidates exceed the explicit materialisation limit of {EXPLICIT_LIMIT}")
    candidates = adversarial_candidates(params)
    idx = range(len(candidates))
    rankings = []
    for j in range(params.t):
        rankings.append(tuple(sorted(idx, key=lambda i: (_v_tier(j, candidates[i]), i))))
    for j in range(params.t):
        rankings.append(tuple(sorted(idx, key=lambda i: (_u_tier(j, candidates[i]), -i))))
    names = tuple(str(c) for c in candidates)
    return Election(len(candidates), (1,) * len(rankings), tuple(rankings), names)


def random_pair_candidate(params: AdversarialParams, rng) -> PairCandidate:
    rng = make_rng(rng)
    perm = rng.permutation(params.t)
    return PairCandidate(frozenset(perm[:params.a].tolist()), frozenset(perm[params.a:params.a + params.b].tolist()))


def adversarial_attack(
    committee: Sequence[PairCandidate],
    params: AdversarialParams,
    seed,
    max_retries: int = 1000,
) -> PairCandidate:
    """A pair-candidate beating every member by at least ``1/2 + b/(4t)``.

    ``A`` is the union of the members' ``B`` sets padded with the smallest
    unused elements; ``B`` is a random ``b``-subset of the complement
    meeting every member's ``A`` in at most ``b/2`` elements. When random
    retries run out the complement is searched exhaustively if it has at
    most ``EXHAUSTIVE_LIMIT`` subsets. The result is re-verified with
    :func:`adversarial_margin` before it is returned.
    """
    t, a, b = params.t, params.a, params.b
    k = len(committee)
    if k < 1:
        raise ValueError("the committee must be non-empty")
    if k * b > a:
        raise ValueError(f"k b = {k * b} exceeds a = {a}; the attack needs k b <= a")
    for c in committee:
        c.check(params)
    union = sorted(set().union(*(c.B for c in committee)))
    padding = [j for j in range(t) if j not in set(union)][: a - len(union)]
    A = frozenset(union) | frozenset(padding)
    rest = np.array([j for j in range(t) if j not in A])
    limit = b / 2

    def ok(B) -> bool:
        return all(len(c.A & B) <= limit for c in committee)

    rng = make_rng(seed)
    found = None
    for _ in range(max_retries):
        B = frozenset(rng.choice(rest, size=b, replace=False).tolist())
        if ok(B):
            found = B
            break
    if found is None:
        space = math.comb(len(rest), b)
        if space > EXHAUSTIVE_LIMIT:
            worst = min(
                (max(len(c.A & frozenset(B)) for c in committee), B)
                for B in (rng.choice(rest, size=b, replace=False).tolist() for _ in range(64))
            )
            raise AttackError(
                f"no valid B after {max_retries} retries and {space} subsets are too many to enumerate "
                f"(best sampled overlap {worst[0]} > {limit})"
            )
        found = next((frozenset(B) for B in itertools.combinations(rest.tolist(), b) if ok(frozenset(B))), None)
        if found is None:
            raise AttackError(f"no b-subset of the {len(rest)} free elements meets every A_i in <= {limit} elements")
    attacker = PairCandidate(A, found)
    floor = params.guaranteed_margin
    for c in committee:
        if adversarial_margin(attacker, c, t) < floor:
            raise AttackError(f"post-verification failed against {c}")
    return attacker
