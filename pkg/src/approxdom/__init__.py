"""Maximal lotteries and constant-size approximately dominating committees."""

from approxdom.committee import (
    Committee,
    DominationReport,
    min_dominating_brute,
    rank_inflation,
    sample_committee,
    sample_until_good,
    verify_alpha_dominating,
    worst_case_avg_margin,
)
from approxdom.discrepancy import (
    K_EXACT,
    alpha_table,
    delta_exact,
    delta_monte_carlo,
    delta_upper_bound,
    one_sided_discrepancy,
)
from approxdom.election import (
    Election,
    MarginMatrix,
    Tournament,
    avg_rank,
    margin_matrix,
    majority_tournament,
    parse_election,
    parse_preflib,
    rank,
    serialize_election,
)
from approxdom.generators import (
    AdversarialParams,
    PairCandidate,
    adversarial_attack,
    adversarial_election_explicit,
    adversarial_margin,
    condorcet_cycle,
    mcgarvey,
    random_election,
)
from approxdom.lottery import Lottery, game_matrix, solve_maximal_lottery, support, verify_lottery

__all__ = [
    "Committee",
    "DominationReport",
    "min_dominating_brute",
    "rank_inflation",
    "sample_committee",
    "sample_until_good",
    "verify_alpha_dominating",
    "worst_case_avg_margin",
    "K_EXACT",
    "alpha_table",
    "delta_exact",
    "delta_monte_carlo",
    "delta_upper_bound",
    "one_sided_discrepancy",
    "Election",
    "MarginMatrix",
    "Tournament",
    "avg_rank",
    "margin_matrix",
    "majority_tournament",
    "parse_election",
    "parse_preflib",
    "rank",
    "serialize_election",
    "AdversarialParams",
    "PairCandidate",
    "adversarial_attack",
    "adversarial_election_explicit",
    "adversarial_margin",
    "condorcet_cycle",
    "mcgarvey",
    "random_election",
    "Lottery",
    "game_matrix",
    "solve_maximal_lottery",
    "support",
    "verify_lottery",
]

__version__ = "0.1.0"
