import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxdom.election import Tournament, majority_tournament, margin_matrix
from approxdom.errors import AttackError, GuardError
from approxdom.generators import (
    AdversarialParams,
    IdenticalCandidatesWarning,
    PairCandidate,
    adversarial_attack,
    adversarial_candidates,
    adversarial_compare,
    adversarial_election_explicit,
    adversarial_margin,
    condorcet_cycle,
    mcgarvey,
    random_election,
    random_pair_candidate,
    random_tournament,
    unanimous,
)


def pc(A, B):
    return PairCandidate(frozenset(A), frozenset(B))


class TestMcGarvey:
    def test_three_cycle(self):
        T = Tournament(3, frozenset({(0, 1), (1, 2), (2, 0)}))
        e = mcgarvey(T)
        assert e.num_voters == 6
        P = margin_matrix(e).P
        assert all(P[u, v] > Fraction(1, 2) for u, v in T.edges)
        assert majority_tournament(margin_matrix(e)) == T

    def test_transitive(self):
        T = Tournament(4, frozenset((a, b) for a, b in itertools.combinations(range(4), 2)))
        assert majority_tournament(margin_matrix(mcgarvey(T))) == T

    def test_single_candidate(self):
        e = mcgarvey(Tournament(1, frozenset()))
        assert e.m == 1

    @pytest.mark.parametrize("seed", range(20))
    def test_random_round_trip(self, seed):
        T = random_tournament(2 + seed % 10, seed)
        result = majority_tournament(margin_matrix(mcgarvey(T)))
        assert result == T and not result.ties


class TestRandomElection:
    def test_single_candidate(self):
        assert set(random_election(1, 5, 0).rankings) == {(0,)}

    def test_deterministic(self):
        assert random_election(6, 20, 3) == random_election(6, 20, 3)
        assert random_election(6, 20, 3) != random_election(6, 20, 4)

    def test_margins_concentrate(self):
        # sd of each margin is 0.005, so 0.05 is a 10 sd band
        P = margin_matrix(random_election(5, 10_000, 1), exact=False).P
        off = P[~np.eye(5, dtype=bool)]
        assert np.all(np.abs(off - 0.5) <= 0.05)

    def test_positive_sizes(self):
        with pytest.raises(ValueError):
            random_election(0, 3, 0)

    def test_random_tournament_complete(self):
        T = random_tournament(7, 5)
        assert len(T.edges) == 21


class TestStructured:
    def test_cycle_margins(self):
        P = margin_matrix(condorcet_cycle(5)).P
        for i in range(5):
            assert P[i, (i + 1) % 5] == Fraction(4, 5)

    def test_cycle_tournament(self):
        T = majority_tournament(margin_matrix(condorcet_cycle(5)))
        assert all(T.beats(i, (i + 1) % 5) for i in range(5))

    def test_cycle_size(self):
        with pytest.raises(ValueError):
            condorcet_cycle(2)

    def test_unanimous(self):
        assert unanimous(3, 2).rankings == ((0, 1, 2), (0, 1, 2))


class TestParams:
    def test_counts(self):
        p = AdversarialParams(6, 2, 1)
        assert p.num_candidates == 60 and p.num_voters == 12
        assert p.guaranteed_margin == Fraction(1, 2) + Fraction(1, 24)

    def test_size_check(self):
        with pytest.raises(ValueError):
            AdversarialParams(5, 3, 3)
        with pytest.raises(ValueError):
            AdversarialParams(5, 0, 1)

    def test_asymptotic(self):
        p, k = AdversarialParams.asymptotic(2**16)
        assert (p.a, p.b, k) == (327, 16, 20)

    def test_candidate_round_trip(self):
        c = pc({3, 1}, {0})
        assert str(c) == "A={1,3};B={0}"
        assert PairCandidate.parse(str(c)) == c

    def test_disjoint(self):
        with pytest.raises(ValueError):
            pc({1, 2}, {2})


class TestCompare:
    def test_j_in_a1_only(self):
        c1, c2 = pc({0}, {1}), pc({2}, {3})
        assert adversarial_compare(0, "v", c1, c2)
        assert not adversarial_compare(0, "u", c1, c2)

    def test_j_in_a1_and_b2(self):
        c1, c2 = pc({0}, {1}), pc({2}, {0})
        assert adversarial_compare(0, "v", c1, c2)
        assert adversarial_compare(0, "u", c1, c2)

    def test_j_in_neither(self):
        c1, c2 = pc({0}, {1}), pc({2}, {3})
        assert adversarial_compare(5, "v", c1, c2) != adversarial_compare(5, "u", c1, c2)

    def test_identical(self):
        with pytest.raises(ValueError):
            adversarial_compare(0, "v", pc({0}, {1}), pc({0}, {1}))

    def test_antisymmetric(self):
        c1, c2 = pc({0, 4}, {1}), pc({2, 1}, {3})
        for j in range(6):
            for side in "vu":
                assert adversarial_compare(j, side, c1, c2) != adversarial_compare(j, side, c2, c1)

    @settings(max_examples=300)
    @given(st.integers(0, 7), st.randoms(use_true_random=False))
    def test_agreement_structure(self, j, rnd):
        params = AdversarialParams(8, 3, 2)
        c1 = random_pair_candidate(params, rnd.getrandbits(32))
        c2 = random_pair_candidate(params, rnd.getrandbits(32))
        if c1 == c2:
            return
        agree = adversarial_compare(j, "v", c1, c2) == adversarial_compare(j, "u", c1, c2)
        assert agree == (j in (c1.A & c2.B) | (c2.A & c1.B))


def counted_margin(c1, c2, t):
    wins = sum(adversarial_compare(j, side, c1, c2) for j in range(t) for side in "vu")
    return Fraction(wins, 2 * t)


class TestMargin:
    def test_full_overlap(self):
        t = 10
        c1, c2 = pc({0, 1, 2}, {5}), pc({6, 7, 8}, {0})
        assert adversarial_margin(c1, c2, t) == Fraction(1, 2) + Fraction(1, 2 * t)

    def test_identical(self):
        c = pc({0}, {1})
        with pytest.warns(IdenticalCandidatesWarning):
            assert adversarial_margin(c, c, 4) == Fraction(1, 2)

    def test_brute_force_small(self):
        params = AdversarialParams(12, 4, 2)
        rng = np.random.default_rng(0)
        for _ in range(200):
            c1 = random_pair_candidate(params, int(rng.integers(2**32)))
            c2 = random_pair_candidate(params, int(rng.integers(2**32)))
            if c1 != c2:
                assert adversarial_margin(c1, c2, 12) == counted_margin(c1, c2, 12)

    @pytest.mark.parametrize("t,a,b", [(4, 1, 1), (6, 2, 1)])
    def test_explicit_instances(self, t, a, b):
        params = AdversarialParams(t, a, b)
        e = adversarial_election_explicit(params)
        cands = adversarial_candidates(params)
        assert e.m == params.num_candidates and e.num_voters == 2 * t
        P = margin_matrix(e, exact=True).P
        for i, j in itertools.permutations(range(e.m), 2):
            assert P[i, j] == adversarial_margin(cands[i], cands[j], t)
            assert P[i, j] == counted_margin(cands[i], cands[j], t)

    def test_explicit_names(self):
        e = adversarial_election_explicit(AdversarialParams(4, 1, 1))
        assert e.names[0] == "A={0};B={1}"

    def test_explicit_guard(self):
        with pytest.raises(GuardError):
            adversarial_election_explicit(AdversarialParams(30, 5, 3))


class TestAttack:
    def test_single_member(self):
        params = AdversarialParams(12, 4, 2)
        member = pc({0, 1, 2, 3}, {4, 5})
        attacker = adversarial_attack([member], params, seed=0)
        assert {4, 5} <= attacker.A
        assert adversarial_margin(attacker, member, 12) >= Fraction(1, 2) + Fraction(2, 48)

    def test_infeasible(self):
        params = AdversarialParams(2048, 10, 11)
        with pytest.raises(ValueError):
            adversarial_attack([random_pair_candidate(params, 0)], params, seed=0)

    def test_random_committees(self):
        params = AdversarialParams(400, 40, 8)
        rng = np.random.default_rng(3)
        for trial in range(20):
            committee = [random_pair_candidate(params, int(rng.integers(2**32))) for _ in range(5)]
            attacker = adversarial_attack(committee, params, seed=trial)
            attacker.check(params)
            for c in committee:
                assert adversarial_margin(attacker, c, 400) >= Fraction(101, 200)

    def test_exhaustive_fallback(self):
        params = AdversarialParams(12, 4, 2)
        member = pc({4, 5, 6, 7}, {0, 1})
        attacker = adversarial_attack([member], params, seed=1, max_retries=0)
        assert len(attacker.B & member.A) <= 1

    def test_no_valid_b(self):
        # the complement of A is {4,...,7}, all inside the member's A, and b/2 = 1
        params = AdversarialParams(8, 4, 2)
        member = pc({4, 5, 6, 7}, {0, 1})
        with pytest.raises(AttackError):
            adversarial_attack([member], params, seed=0, max_retries=10)

    def test_deterministic(self):
        params = AdversarialParams(100, 20, 4)
        committee = [random_pair_candidate(params, s) for s in range(3)]
        assert adversarial_attack(committee, params, 5) == adversarial_attack(committee, params, 5)

    def test_bad_member(self):
        params = AdversarialParams(12, 4, 2)
        with pytest.raises(ValueError):
            adversarial_attack([pc({0, 1}, {2, 3})], params, seed=0)
