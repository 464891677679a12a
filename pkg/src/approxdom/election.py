"""Elections, margin matrices, ranks and majority tournaments.

Candidates are dense integer indices ``0..m-1``. Voters carry positive
integer or rational weights and every "fraction of voters" is a weight
fraction. Margin matrices come in two arithmetic modes: exact
(:class:`fractions.Fraction` entries in an object array) and float64.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from approxdom.errors import ElectionFormatError

__all__ = [
    "Election",
    "MarginMatrix",
    "Tournament",
    "parse_election",
    "serialize_election",
    "parse_preflib",
    "margin_matrix",
    "rank",
    "avg_rank",
    "avg_rank_from_margins",
    "majority_tournament",
    "parse_tournament",
    "serialize_tournament",
    "use_exact",
]

# Auto mode picks exact arithmetic below this many (candidate, voter) cells.
EXACT_AUTO_CELLS = 100_000
EXACT_AUTO_MAX_M = 12


def _as_weight(w) -> int | Fraction:
    if isinstance(w, bool):
        raise TypeError("weight must be a number, not bool")
    if isinstance(w, int):
        return w
    if isinstance(w, Rational):
        f = Fraction(w)
        return f.numerator if f.denominator == 1 else f
    f = Fraction(w)
    return f.numerator if f.denominator == 1 else f


@dataclass(frozen=True)
class Election:
    """A weighted list of complete strict rankings over ``m`` candidates.

    ``rankings[i]`` lists candidate indices most-preferred first and
    ``weights[i]`` is that voter's positive weight. ``names`` is an optional
    side table of external candidate names; it never affects equality.
    """

    m: int
    weights: tuple
    rankings: tuple
    names: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError(f"candidate count must be a positive integer, got {self.m!r}")
        weights = tuple(_as_weight(w) for w in self.weights)
        rankings = tuple(tuple(int(c) for c in r) for r in self.rankings)
        if len(weights) != len(rankings):
            raise ValueError("weights and rankings differ in length")
        if not rankings:
            raise ValueError("an election needs at least one voter")
        full = set(range(self.m))
        for i, (w, r) in enumerate(zip(weights, rankings)):
            if w <= 0:
                raise ValueError(f"voter {i}: weight must be positive, got {w}")
            if len(r) != self.m or set(r) != full:
                raise ValueError(f"voter {i}: ranking {r} is not a permutation of 0..{self.m - 1}")
        if self.names is not None and len(self.names) != self.m:
            raise ValueError("names side table must have one entry per candidate")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "rankings", rankings)

    @classmethod
    def from_rankings(cls, rankings: Iterable[Sequence[int]], weights=None, names=None) -> "Election":
        rankings = [tuple(r) for r in rankings]
        if not rankings:
            raise ValueError("an election needs at least one voter")
        if weights is None:
            weights = [1] * len(rankings)
        return cls(len(rankings[0]), tuple(weights), tuple(rankings), names)

    @property
    def num_voters(self) -> int:
        return len(self.rankings)

    @cached_property
    def total_weight(self) -> int | Fraction:
        return _as_weight(sum(self.weights))

    @property
    def n(self) -> int | Fraction:
        return self.total_weight

    @cached_property
    def ranking_array(self) -> np.ndarray:
        arr = np.array(self.rankings, dtype=np.int64).reshape(self.num_voters, self.m)
        arr.flags.writeable = False
        return arr

    @cached_property
    def positions(self) -> np.ndarray:
        """``positions[v, c]`` is the place of candidate ``c`` in voter ``v``'s ranking (0 = top)."""
        pos = np.argsort(self.ranking_array, axis=1)
        pos.flags.writeable = False
        return pos

    @cached_property
    def integer_weights(self) -> tuple[tuple[int, ...], int]:
        """Weights scaled to integers by the lcm of their denominators, and that lcm."""
        lcm = 1
        for w in self.weights:
            lcm = math.lcm(lcm, Fraction(w).denominator)
        return tuple(int(Fraction(w) * lcm) for w in self.weights), lcm

    def prefers(self, v: int, a: int, b: int) -> bool:
        """True when voter ``v`` ranks ``a`` strictly above ``b``."""
        pos = self.positions[v]
        return bool(pos[a] < pos[b])

    def name(self, c: int) -> str:
        return self.names[c] if self.names else str(c)


def use_exact(e: Election, exact: bool | None = None) -> bool:
    """Resolve the arithmetic mode; ``None`` means pick by problem size."""
    if exact is not None:
        return bool(exact)
    return e.m <= EXACT_AUTO_MAX_M and e.m * e.num_voters <= EXACT_AUTO_CELLS


# --------------------------------------------------------------------------
# Native election file format

_COMMENT_NAME = re.compile(r"#\s*candidate\s+(\d+)\s*:\s*(.*?)\s*$")


def _parse_weight(token: str, lineno: int) -> int | Fraction:
    try:
        w = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ElectionFormatError(f"bad weight {token!r}", lineno) from None
    if w <= 0:
        raise ElectionFormatError(f"weight must be positive, got {token}", lineno)
    return _as_weight(w)


def parse_election(text: str) -> Election:
    """Parse the native whitespace-separated election format.

    The first non-comment line is ``m V``; each of the following ``V`` lines
    is ``w c1 ... cm``. Lines starting with ``#`` are comments, except that
    ``# candidate <i>: <name>`` lines populate the names side table.
    """
    header = None
    weights, rankings = [], []
    names: dict[int, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            match = _COMMENT_NAME.match(line)
            if match:
                names[int(match.group(1))] = match.group(2)
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 2:
                raise ElectionFormatError("header must be 'm V'", lineno)
            try:
                m, voters = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ElectionFormatError(f"header must hold two integers, got {line!r}", lineno) from None
            if m < 1 or voters < 1:
                raise ElectionFormatError("header counts must be positive", lineno)
            header = (m, voters)
            continue
        m, voters = header
        if len(rankings) == voters:
            raise ElectionFormatError(f"more voter lines than the {voters} declared", lineno)
        if len(tokens) != m + 1:
            raise ElectionFormatError(f"expected weight and {m} candidates, got {len(tokens)} tokens", lineno)
        w = _parse_weight(tokens[0], lineno)
        try:
            ranking = [int(tok) for tok in tokens[1:]]
        except ValueError:
            raise ElectionFormatError("candidate indices must be integers", lineno) from None
        for c in ranking:
            if not 0 <= c < m:
                raise ElectionFormatError(f"candidate index {c} out of range 0..{m - 1}", lineno)
        if len(set(ranking)) != m:
            dup = next(c for c in ranking if ranking.count(c) > 1)
            raise ElectionFormatError(f"ranking repeats candidate {dup}", lineno)
        weights.append(w)
        rankings.append(tuple(ranking))
    if header is None:
        raise ElectionFormatError("missing 'm V' header")
    if len(rankings) != header[1]:
        raise ElectionFormatError(f"declared {header[1]} voters but found {len(rankings)}")
    table = None
    if names:
        table = tuple(names.get(c, str(c)) for c in range(header[0]))
    return Election(header[0], tuple(weights), tuple(rankings), table)


def serialize_election(e: Election, comments: Iterable[str] = ()) -> str:
    """Canonical native-format text for ``e``; inverse of :func:`parse_election`."""
    lines = [f"# {c}" for c in comments]
    if e.names is not None:
        lines.extend(f"# candidate {c}: {name}" for c, name in enumerate(e.names))
    lines.append(f"{e.m} {e.num_voters}")
    for w, r in zip(e.weights, e.rankings):
        lines.append(" ".join([str(w), *map(str, r)]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# PrefLib strict-order-complete profiles

_PREFLIB_NAME = re.compile(r"#\s*ALTERNATIVE NAME\s+(\d+)\s*:\s*(.*?)\s*$", re.IGNORECASE)
_PREFLIB_COUNT = re.compile(r"#\s*NUMBER ALTERNATIVES\s*:\s*(\d+)", re.IGNORECASE)


def parse_preflib(text: str) -> Election:
    """Convert a PrefLib ``.soc`` profile into an :class:`Election`.

    Both the current layout (``# ALTERNATIVE NAME i: ...`` headers and
    ``count: c1,c2,...`` data lines) and the legacy layout (leading
    alternative count, ``i,name`` lines, a totals line, then
    ``count,c1,c2,...``) are accepted. PrefLib's 1-based alternative ids
    become candidate indices ``id - 1``.
    """
    lines = [(no, raw.strip()) for no, raw in enumerate(text.splitlines(), start=1) if raw.strip()]
    if not lines:
        raise ElectionFormatError("empty PrefLib file")
    if lines[0][1].startswith("#") or ":" in lines[0][1]:
        return _parse_preflib_modern(lines)
    return _parse_preflib_legacy(lines)


def _preflib_order(body: str, m: int | None, lineno: int) -> tuple[int, ...]:
    if "{" in body:
        raise ElectionFormatError("ties within a ballot are not supported", lineno)
    try:
        ids = [int(tok) for tok in body.split(",")]
    except ValueError:
        raise ElectionFormatError(f"bad ballot {body!r}", lineno) from None
    if m is not None and sorted(ids) != list(range(1, m + 1)):
        raise ElectionFormatError("ballot is not a complete strict order", lineno)
    return tuple(i - 1 for i in ids)


def _parse_preflib_modern(lines) -> Election:
    m = None
    names: dict[int, str] = {}
    weights, rankings = [], []
    for lineno, line in lines:
        if line.startswith("#"):
            if match := _PREFLIB_COUNT.match(line):
                m = int(match.group(1))
            elif match := _PREFLIB_NAME.match(line):
                names[int(match.group(1))] = match.group(2)
            continue
        count, sep, body = line.partition(":")
        if not sep:
            raise ElectionFormatError("expected 'count: c1,c2,...'", lineno)
        if m is None:
            m = len(body.split(","))
        weights.append(_parse_weight(count.strip(), lineno))
        rankings.append(_preflib_order(body, m, lineno))
    if not rankings:
        raise ElectionFormatError("PrefLib file has no ballots")
    table = tuple(names.get(c + 1, str(c)) for c in range(m)) if names else None
    return Election(m, tuple(weights), tuple(rankings), table)


def _parse_preflib_legacy(lines) -> Election:
    lineno, first = lines[0]
    try:
        m = int(first)
    except ValueError:
        raise ElectionFormatError("legacy PrefLib file must start with the alternative count", lineno) from None
    if len(lines) < m + 2:
        raise ElectionFormatError("truncated legacy PrefLib header")
    names = []
    for lineno, line in lines[1:m + 1]:
        _, sep, name = line.partition(",")
        if not sep:
            raise ElectionFormatError("expected 'id,name'", lineno)
        names.append(name.strip())
    weights, rankings = [], []
    for lineno, line in lines[m + 2:]:
        count, _, body = line.partition(",")
        weights.append(_parse_weight(count.strip(), lineno))
        rankings.append(_preflib_order(body, m, lineno))
    if not rankings:
        raise ElectionFormatError("PrefLib file has no ballots")
    return Election(m, tuple(weights), tuple(rankings), tuple(names))


# --------------------------------------------------------------------------
# Margins and ranks


@dataclass(frozen=True, eq=False)
class MarginMatrix:
    """``P[a, b]`` is the weight fraction of voters preferring ``a`` over ``b``.

    In exact mode ``P`` is an object array of :class:`~fractions.Fraction`;
    otherwise it is float64. The array is read-only.
    """

    P: np.ndarray
    exact: bool

    def __post_init__(self):
        P = np.array(self.P, dtype=object if self.exact else np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"margin matrix must be square, got shape {P.shape}")
        if self.exact:
            P = np.vectorize(Fraction, otypes=[object])(P) if P.size else P
        P.flags.writeable = False
        object.__setattr__(self, "P", P)

    @property
    def m(self) -> int:
        return self.P.shape[0]

    def as_float(self) -> "MarginMatrix":
        if not self.exact:
            return self
        return MarginMatrix(self.P.astype(np.float64), exact=False)

    def as_exact(self) -> "MarginMatrix":
        if self.exact:
            return self
        return MarginMatrix(np.vectorize(Fraction, otypes=[object])(self.P), exact=True)

    def __getitem__(self, key):
        return self.P[key]


def margin_matrix(e: Election, exact: bool | None = None) -> MarginMatrix:
    """Pairwise weight fractions of ``e``.

    Weights are rescaled to integers first, so the exact entries are formed
    from integer counts and the float entries are single correctly-rounded
    divisions.
    """
    scaled, _ = e.integer_weights
    total = sum(scaled)
    pos = e.positions
    beats = pos[:, :, None] < pos[:, None, :]
    if max(scaled) * len(scaled) < 2**62:
        wins = np.tensordot(np.array(scaled, dtype=np.int64), beats.astype(np.int64), axes=1)
    else:
        wins = np.tensordot(np.array(scaled, dtype=object), beats.astype(object), axes=1)
    if use_exact(e, exact):
        P = np.empty((e.m, e.m), dtype=object)
        for a, b in itertools.product(range(e.m), repeat=2):
            P[a, b] = Fraction(int(wins[a, b]), total)
        return MarginMatrix(P, exact=True)
    return MarginMatrix(wins.astype(np.float64) / float(total), exact=False)


def _probs(D):
    return getattr(D, "probs", D)


def rank(e: Election, v: int, a: int, D) -> Fraction | float:
    """Probability that voter ``v`` prefers ``a`` over a draw from ``D``."""
    probs = _probs(D)
    if len(probs) != e.m:
        raise ValueError(f"lottery has {len(probs)} entries, election has {e.m} candidates")
    order = e.rankings[v]
    below = order[order.index(a) + 1:]
    return sum((probs[b] for b in below), start=0 * probs[0])


def avg_rank(e: Election, a: int, D) -> Fraction | float:
    """Weighted mean over voters of :func:`rank`; evaluated voter by voter."""
    total = sum(
        (w * rank(e, v, a, D) for v, w in enumerate(e.weights)),
        start=0 * _probs(D)[0],
    )
    return total / e.total_weight


def avg_rank_from_margins(mm: MarginMatrix, a: int, D) -> Fraction | float:
    """``sum_b D(b) P[a, b]``: the same quantity as :func:`avg_rank` via margins."""
    probs = _probs(D)
    if len(probs) != mm.m:
        raise ValueError(f"lottery has {len(probs)} entries, margins have {mm.m} candidates")
    return sum((probs[b] * mm.P[a, b] for b in range(mm.m)), start=0 * probs[0])


# --------------------------------------------------------------------------
# Tournaments


@dataclass(frozen=True)
class Tournament:
    """Complete directed graph: exactly one of ``(u, v)``, ``(v, u)`` per pair.

    ``ties`` holds the edges whose direction was chosen by tie-break rather
    than by a strict majority.
    """

    m: int
    edges: frozenset
    ties: frozenset = frozenset()

    def __post_init__(self):
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        ties = frozenset((int(u), int(v)) for u, v in self.ties)
        if self.m < 1:
            raise ValueError("a tournament needs at least one vertex")
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < self.m and 0 <= v < self.m):
                raise ValueError(f"edge {u}->{v} out of range")
            if (v, u) in edges:
                raise ValueError(f"both directions present for {{{u}, {v}}}")
        if len(edges) != self.m * (self.m - 1) // 2:
            raise ValueError("tournament must orient every pair exactly once")
        if not ties <= edges:
            raise ValueError("tie flags must refer to edges")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "ties", ties)

    def beats(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.m, self.m), dtype=bool)
        for u, v in self.edges:
            adj[u, v] = True
        return adj


def majority_tournament(mm: MarginMatrix) -> Tournament:
    """Edge ``a -> b`` iff ``P[a, b] > 1/2``; exact ties go to the lower index and are flagged."""
    half = Fraction(1, 2) if mm.exact else 0.5
    edges, ties = set(), set()
    for a, b in itertools.combinations(range(mm.m), 2):
        p = mm.P[a, b]
        if p > half:
            edges.add((a, b))
        elif p < half:
            edges.add((b, a))
        else:
            edges.add((a, b))
            ties.add((a, b))
    return Tournament(mm.m, frozenset(edges), frozenset(ties))


def parse_tournament(text: str) -> Tournament:
    """Parse ``m`` followed by one ``u v`` line per directed edge (``#`` comments allowed)."""
    m = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            values = [int(tok) for tok in tokens]
        except ValueError:
            raise ElectionFormatError(f"expected integers, got {line!r}", lineno) from None
        if m is None:
            if len(values) != 1 or values[0] < 1:
                raise ElectionFormatError("first line must be the vertex count", lineno)
            m = values[0]
            continue
        if len(values) != 2:
            raise ElectionFormatError("edge lines must be 'u v'", lineno)
        u, v = values
        if not (0 <= u < m and 0 <= v < m) or u == v:
            raise ElectionFormatError(f"invalid edge {u} {v}", lineno)
        edges.append((u, v))
    if m is None:
        raise ElectionFormatError("missing vertex count")
    try:
        return Tournament(m, frozenset(edges))
    except ValueError as exc:
        raise ElectionFormatError(str(exc)) from None


def serialize_tournament(T: Tournament) -> str:
    lines = [str(T.m)] + [f"{u} {v}" for u, v in sorted(T.edges)]
    return "\n".join(lines) + "\n"
