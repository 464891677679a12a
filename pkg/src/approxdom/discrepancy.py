"""Expected one-sided discrepancy of the uniform empirical CDF.

For ``k`` i.i.d. uniform samples with order statistics ``X(1) <= ... <= X(k)``
the statistic ``max_j (j/k - X(j))`` equals ``sup_r (F_k(r) - r)`` where
``F_k(r)`` counts samples strictly below ``r``. Its mean ``delta(k)`` sets
the domination level ``1/2 - delta(k)`` reachable by size-``k`` committees.

Three evaluations are provided: an exact rational one built from the
finite-sample survival function of the one-sided statistic, a Monte Carlo
estimate on counter-based random streams, and the closed-form upper bound
obtained from Massart's tail inequality.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

__all__ = [
    "K_EXACT",
    "DiscrepancySample",
    "DeltaResult",
    "AlphaRow",
    "one_sided_discrepancy",
    "batch_discrepancy",
    "survival",
    "survival_pieces",
    "delta_exact",
    "delta_monte_carlo",
    "delta_upper_bound",
    "alpha_table",
]

K_EXACT = 200
MC_CHUNK = 1 << 16
MASSART_CONSTANT = 1.09


@dataclass(frozen=True)
class DiscrepancySample:
    """Sorted sample ``X(1) <= ... <= X(k)`` from ``[0, 1]``."""

    values: tuple

    def __post_init__(self):
        values = tuple(sorted(self.values))
        if not values:
            raise ValueError("a discrepancy sample needs at least one value")
        if values[0] < 0 or values[-1] > 1:
            raise ValueError("sample values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DeltaResult:
    k: int
    value: Fraction | float
    method: str
    ci_halfwidth: float | None = None
    trials: int | None = None

    @property
    def alpha(self):
        return Fraction(1, 2) - self.value if isinstance(self.value, Fraction) else 0.5 - self.value


def one_sided_discrepancy(s) -> Fraction | float:
    """``max_j (j/k - X(j))`` of a sample; always in ``[0, 1]``.

    Exact when the values are :class:`~fractions.Fraction` or integers.
    """
    if not isinstance(s, DiscrepancySample):
        s = DiscrepancySample(tuple(s))
    k = s.k
    if all(isinstance(x, (int, Fraction)) for x in s.values):
        return max(Fraction(j, k) - x for j, x in enumerate(s.values, start=1))
    return float(max(j / k - x for j, x in enumerate(s.values, start=1)))


def batch_discrepancy(X: np.ndarray) -> np.ndarray:
    """Row-wise one-sided discrepancy of a ``(trials, k)`` array of samples."""
    X = np.sort(np.asarray(X, dtype=np.float64), axis=1)
    k = X.shape[1]
    return np.max(np.arange(1, k + 1) / k - X, axis=1)


# --------------------------------------------------------------------------
# Exact rational evaluation
#
# With y = k d the survival function Q(d) = Pr[max_j (j/k - X(j)) >= d] is
#   k^-k * sum_{j=0}^{floor(k - y)} C(k, j) y (k - j - y)^(k - j) (y + j)^(j - 1)
# (Birnbaum-Tingey), an integer-coefficient polynomial in y on every
# interval [i, i+1]. Integrating piecewise gives delta(k) = int_0^1 Q.


def _poly_mul(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _linear_power(c: int, s: int, e: int) -> list[int]:
    """Coefficients of ``(c + s y)^e`` in increasing degree."""
    return [math.comb(e, i) * c ** (e - i) * s**i for i in range(e + 1)]


def _survival_term(k: int, j: int) -> list[int]:
    if j == 0:
        return _linear_power(k, -1, k)
    body = _poly_mul(_linear_power(k - j, -1, k - j), _linear_power(j, 1, j - 1))
    c = math.comb(k, j)
    return [0] + [c * b for b in body]


@lru_cache(maxsize=None)
def survival_pieces(k: int) -> tuple[tuple[int, ...], ...]:
    """Integer polynomials ``p_i(y)`` with ``Q(d) = p_i(k d) / k**k`` for ``k d`` in ``[i, i+1]``."""
    if k < 1:
        raise ValueError("k must be positive")
    pieces: list[tuple[int, ...]] = [()] * k
    acc = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        term = _survival_term(k, k - i - 1)
        for e, c in enumerate(term):
            acc[e] += c
        pieces[i] = tuple(acc)
    return tuple(pieces)


def survival(k: int, d) -> Fraction:
    """Exact ``Pr[max_j (j/k - X(j)) >= d]`` for rational ``d``."""
    d = Fraction(d)
    if d <= 0:
        return Fraction(1)
    if d >= 1:
        return Fraction(0)
    y = k * d
    piece = survival_pieces(k)[min(math.floor(y), k - 1)]
    value = sum((c * y**e for e, c in enumerate(piece)), start=Fraction(0))
    return value / k**k


@lru_cache(maxsize=None)
def _delta_exact_value(k: int) -> Fraction:
    lcm = math.lcm(*range(1, k + 2))
    total = 0
    for i, piece in enumerate(survival_pieces(k)):
        lo, hi = i, i + 1
        for e, c in enumerate(piece):
            if c:
                total += c * (lcm // (e + 1)) * (hi ** (e + 1) - lo ** (e + 1))
    return Fraction(total, lcm * k ** (k + 1))


def delta_exact(k: int) -> DeltaResult:
    """Exact rational ``delta(k)`` for ``1 <= k <= K_EXACT``."""
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if k > K_EXACT:
        raise ValueError(f"exact delta(k) is limited to k <= {K_EXACT}, got {k}")
    return DeltaResult(k, _delta_exact_value(k), "exact")


# --------------------------------------------------------------------------
# Monte Carlo


def _chunk_stream(seed: int, chunk: int) -> np.random.Generator:
    # Philox key = seed; the second counter word indexes the chunk, so each
    # chunk owns a disjoint block of 2**64 counter values.
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, chunk, 0, 0]))


def _chunk_moments(k: int, seed: int, chunk: int, size: int) -> tuple[float, float]:
    X = _chunk_stream(seed, chunk).random((size, k))
    d = batch_discrepancy(X)
    return float(d.sum()), float(np.dot(d, d))


def delta_monte_carlo(k: int, trials: int, seed: int, threads: int = 1) -> DeltaResult:
    """Sample-mean estimate of ``delta(k)`` with a 95% normal confidence half-width.

    Trials are split into fixed chunks of ``MC_CHUNK`` with one counter
    substream each and reduced in chunk order, so the result is bit-identical
    for any ``threads``.
    """
    if k < 1:
        raise ValueError("k must be positive")
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in 64 bits")
    sizes = [MC_CHUNK] * (trials // MC_CHUNK)
    if trials % MC_CHUNK:
        sizes.append(trials % MC_CHUNK)
    jobs = [(k, seed, c, size) for c, size in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            moments = list(pool.map(lambda job: _chunk_moments(*job), jobs))
    else:
        moments = [_chunk_moments(*job) for job in jobs]
    s = sum(m[0] for m in moments)
    ss = sum(m[1] for m in moments)
    mean = s / trials
    if trials > 1:
        var = max(ss - trials * mean * mean, 0.0) / (trials - 1)
        ci = 1.96 * math.sqrt(var / trials)
    else:
        ci = math.inf
    return DeltaResult(k, mean, "monte_carlo", ci_halfwidth=ci, trials=trials)


def delta_upper_bound(k: int) -> float:
    """``(1.09 k^(-1/6) + sqrt(pi/8)) / sqrt(k)``, valid for every ``k >= 1``."""
    if k < 1:
        raise ValueError("k must be positive")
    return (MASSART_CONSTANT * k ** (-1 / 6) + math.sqrt(math.pi / 8)) / math.sqrt(k)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaRow:
    k: int
    alpha: Fraction | float
    delta: Fraction | float
    method: str
    ci: float | None = None


def _k_values(ks) -> list[int]:
    if isinstance(ks, int):
        return list(range(1, ks + 1))
    return [int(k) for k in ks]


def alpha_table(
    ks: int | Iterable[int],
    method: str = "exact",
    trials: int = 10**6,
    seed: int | None = None,
    threads: int = 1,
) -> list[AlphaRow]:
    """Rows ``(k, 1/2 - delta(k))``; every election has an ``alpha``-dominating set of size ``<= k``.

    ``ks`` is either ``k_max`` (meaning ``1..k_max``) or an explicit list.
    """
    rows = []
    for k in _k_values(ks):
        if method == "exact":
            res = delta_exact(k)
            rows.append(AlphaRow(k, res.alpha, res.value, "exact"))
        elif method in ("monte_carlo", "mc"):
            if seed is None:
                raise ValueError("Monte Carlo rows need an explicit seed")
            res = delta_monte_carlo(k, trials, seed, threads=threads)
            rows.append(AlphaRow(k, res.alpha, res.value, "monte_carlo", res.ci_halfwidth))
        elif method == "upper_bound":
            ub = delta_upper_bound(k)
            rows.append(AlphaRow(k, 0.5 - ub, ub, "upper_bound"))
        else:
            raise ValueError(f"unknown method {method!r}")
    return rows


def delta_value(k: int, source: str = "auto", trials: int = 10**6, seed: int = 0) -> Fraction | float:
    """A sound (never underestimated in expectation) value of ``delta(k)``.

    ``source`` is ``exact``, ``mc`` (estimate plus its CI half-width) or
    ``bound``; ``auto`` prefers exact, then Monte Carlo.
    """
    if source == "auto":
        source = "exact" if k <= K_EXACT else "mc"
    if source == "exact":
        return delta_exact(k).value
    if source == "mc":
        res = delta_monte_carlo(k, trials, seed)
        return res.value + res.ci_halfwidth
    if source == "bound":
        return delta_upper_bound(k)
    raise ValueError(f"unknown delta source {source!r}")
