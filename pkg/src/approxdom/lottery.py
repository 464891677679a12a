"""Maximal lotteries: the symmetric margin game, its solvers and a verifier.

A maximal lottery ``x`` is an optimal mixed strategy of the zero-sum game
with payoff ``M[a, b] = P[a, b] - 1/2``. Because ``M`` is skew-symmetric
the game has value 0, which is the same as saying that for every candidate
``a`` the expected fraction of voters preferring ``a`` over ``b ~ x`` is at
most one half. That inequality is what :func:`verify_lottery` checks, and
it is the only contract the solvers are held to; ties and even electorates
can make the maximal lottery non-unique, and the solvers then return
whichever optimum they reach first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from approxdom.election import MarginMatrix
from approxdom.errors import ElectionFormatError, IterationLimitError, SolverError

__all__ = [
    "Lottery",
    "GameMatrix",
    "LotteryReport",
    "game_matrix",
    "solve_maximal_lottery",
    "solve_simplex",
    "solve_mwu",
    "verify_lottery",
    "support",
    "format_lottery",
    "parse_lottery",
]

FLOAT_SUM_TOL = 1e-12
DEFAULT_FLOAT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Lottery:
    """Probability vector over candidates ``0..m-1``.

    Exact lotteries hold :class:`~fractions.Fraction` entries and must sum
    to exactly 1; float lotteries are renormalised when they are within
    ``1e-12`` of summing to 1.
    """

    probs: np.ndarray

    def __post_init__(self):
        raw = list(self.probs)
        exact = all(isinstance(p, (int, Fraction)) and not isinstance(p, bool) for p in raw)
        if not raw:
            raise ValueError("a lottery needs at least one candidate")
        if exact:
            probs = np.array([Fraction(p) for p in raw], dtype=object)
            if any(p < 0 for p in probs):
                raise ValueError("lottery has a negative entry")
            if sum(probs) != 1:
                raise ValueError(f"exact lottery sums to {sum(probs)}, not 1")
        else:
            probs = np.array(raw, dtype=np.float64)
            if np.any(probs < 0) or not np.all(np.isfinite(probs)):
                raise ValueError("lottery has a negative or non-finite entry")
            s = probs.sum()
            if abs(s - 1.0) > FLOAT_SUM_TOL:
                raise ValueError(f"lottery sums to {s!r}, not 1")
            probs = probs / s
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def m(self) -> int:
        return len(self.probs)

    @property
    def exact(self) -> bool:
        return self.probs.dtype == object

    def __len__(self):
        return self.m

    def __getitem__(self, a):
        return self.probs[a]

    def __eq__(self, other):
        if not isinstance(other, Lottery):
            return NotImplemented
        return self.m == other.m and all(p == q for p, q in zip(self.probs, other.probs))

    def __hash__(self):
        return hash(tuple(self.probs))

    def as_float(self) -> "Lottery":
        return self if not self.exact else Lottery(self.probs.astype(np.float64))

    @classmethod
    def uniform(cls, m: int, exact: bool = True) -> "Lottery":
        return cls([Fraction(1, m)] * m if exact else np.full(m, 1.0 / m))

    @classmethod
    def point_mass(cls, m: int, a: int, exact: bool = True) -> "Lottery":
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls([one if c == a else zero for c in range(m)])

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "Lottery":
        total = sum(int(c) for c in counts)
        return cls([Fraction(int(c), total) for c in counts])


@dataclass(frozen=True, eq=False)
class GameMatrix:
    """Skew-symmetric payoff ``M[a, b] = P[a, b] - 1/2`` (zero diagonal)."""

    M: np.ndarray
    exact: bool

    @property
    def m(self) -> int:
        return self.M.shape[0]


def game_matrix(mm: MarginMatrix) -> GameMatrix:
    half = Fraction(1, 2) if mm.exact else 0.5
    M = mm.P - half
    for a in range(mm.m):
        M[a, a] = 0 * half
    if not mm.exact:
        # P[a,b] + P[b,a] = 1 holds only to rounding in float mode.
        M = (M - M.T) / 2
    M.flags.writeable = False
    return GameMatrix(M, mm.exact)


class LotteryReport(NamedTuple):
    worst_candidate: int
    worst_value: Fraction | float
    passed: bool


def verify_lottery(mm: MarginMatrix, x, tol=0) -> LotteryReport:
    """Largest ``sum_b x(b) P[a, b]`` over candidates ``a``, and whether it is ``<= 1/2 + tol``."""
    probs = getattr(x, "probs", np.asarray(x))
    if len(probs) != mm.m:
        raise ValueError(f"lottery has {len(probs)} entries but the election has {mm.m} candidates")
    if mm.exact and probs.dtype == object:
        values = [sum((probs[b] * mm.P[a, b] for b in range(mm.m)), start=Fraction(0)) for a in range(mm.m)]
        half = Fraction(1, 2)
    else:
        values = [float(v) for v in mm.as_float().P @ np.asarray(probs, dtype=np.float64)]
        half = 0.5
    worst = max(range(mm.m), key=lambda a: (values[a], -a))
    return LotteryReport(worst, values[worst], bool(values[worst] <= half + tol))


def support(x, threshold=0) -> frozenset:
    probs = getattr(x, "probs", x)
    return frozenset(a for a, p in enumerate(probs) if p > threshold)


# --------------------------------------------------------------------------
# Simplex backend


def _simplex_max(B: np.ndarray, exact: bool, max_pivots: int) -> np.ndarray:
    """Maximise ``sum(z)`` subject to ``B z <= 1``, ``z >= 0`` for entrywise positive ``B``.

    Dense tableau with Bland's rule; the slack basis is feasible at the
    origin so no phase 1 is needed.
    """
    m = B.shape[0]
    dtype = object if exact else np.float64
    one = Fraction(1) if exact else 1.0
    eps = 0 if exact else 1e-12
    T = np.zeros((m + 1, 2 * m + 1), dtype=dtype)
    if exact:
        T[:] = Fraction(0)
    T[:m, :m] = B
    for i in range(m):
        T[i, m + i] = one
        T[i, -1] = one
    T[m, :m] = one  # reduced costs of the objective
    basis = list(range(m, 2 * m))
    for _ in range(max_pivots):
        entering = next((j for j in range(2 * m) if T[m, j] > eps), None)
        if entering is None:
            break
        best = None
        for i in range(m):
            if T[i, entering] > eps:
                ratio = T[i, -1] / T[i, entering]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            raise SolverError(f"unbounded pivot column {entering}; margin matrix is not a valid game")
        r = best[1]
        pivot = T[r, entering]
        if not exact and abs(pivot) < 1e-14:
            raise SolverError(f"numerical breakdown: pivot {pivot!r} at row {r}, column {entering}")
        T[r] = T[r] / pivot
        col = T[:, entering].copy()
        col[r] = 0
        T -= np.outer(col, T[r])
        basis[r] = entering
    else:
        raise SolverError(f"simplex did not terminate within {max_pivots} pivots")
    z = np.zeros(m, dtype=dtype)
    if exact:
        z[:] = Fraction(0)
    for i, var in enumerate(basis):
        if var < m:
            z[var] = T[i, -1]
    return z


def solve_simplex(mm: MarginMatrix) -> Lottery:
    """Exact (or float, following ``mm``) LP solve of the symmetric margin game."""
    exact = mm.exact
    half = Fraction(1, 2) if exact else 0.5
    # Shifted row-player constraints: sum_a (1 + M[b, a]) z_a <= 1 for every b.
    B = mm.P + half
    for a in range(mm.m):
        B[a, a] = half * 2
    z = _simplex_max(B, exact, max_pivots=50 * mm.m + 100)
    total = sum(z)
    if total <= 0:
        raise SolverError("simplex returned an empty strategy")
    if exact:
        return Lottery([p / total for p in z])
    z = np.clip(z, 0.0, None)
    return Lottery(z / z.sum())


# --------------------------------------------------------------------------
# Multiplicative-weights backend


def _softmax(w: np.ndarray) -> np.ndarray:
    x = np.exp(w - w.max())
    return x / x.sum()


def solve_mwu(
    mm: MarginMatrix,
    tol: float = 1e-6,
    max_iters: int = 2_000_000,
    optimistic: bool = True,
    step: float | None = None,
    check_every: int = 100,
) -> Lottery:
    """Self-play multiplicative weights on the margin game, certified a posteriori.

    With ``optimistic=True`` (the default) the update uses the optimistic
    gradient ``2 g_t - g_{t-1}`` at a constant ``step`` (default 4), whose
    last iterate converges fast enough to certify small tolerances. With
    ``optimistic=False`` plain Hedge runs in epochs of doubling horizon
    ``T`` with step ``sqrt(8 ln m / T)`` and the epoch average is certified.
    Either way the result is returned only once :func:`verify_lottery`
    passes at ``tol``; otherwise :class:`IterationLimitError` is raised.
    """
    if tol <= 0:
        raise ValueError("the iterative backend needs a positive tolerance")
    fm = mm.as_float()
    m = fm.m
    if m == 1:
        return Lottery([1.0])
    M = game_matrix(fm).M
    best_gap = math.inf

    def certify(x):
        nonlocal best_gap
        gap = float((M @ x).max())
        best_gap = min(best_gap, gap)
        return gap <= tol

    used = 0
    if optimistic:
        eta = 4.0 if step is None else step
        w = np.zeros(m)
        g_prev = np.zeros(m)
        while used < max_iters:
            x = _softmax(w + eta * g_prev)
            g = M @ x
            w += eta * g
            g_prev = g
            used += 1
            if used % check_every == 0 and certify(x):
                return Lottery(x / x.sum())
    else:
        horizon = 1024
        while used < max_iters:
            horizon = min(horizon, max_iters - used)
            eta = math.sqrt(8 * math.log(m) / horizon) if step is None else step
            w = np.zeros(m)
            avg = np.zeros(m)
            for _ in range(horizon):
                x = _softmax(w)
                avg += x
                w += eta * (M @ x)
            used += horizon
            avg /= horizon
            if certify(avg):
                return Lottery(avg / avg.sum())
            horizon *= 2
    raise IterationLimitError(
        f"multiplicative weights did not certify tol={tol} within {max_iters} iterations "
        f"(best gap {best_gap:.3g})",
        iterations=used,
        observed=best_gap,
    )


def solve_maximal_lottery(
    mm: MarginMatrix,
    tol=None,
    backend: str = "simplex",
    **kwargs,
) -> Lottery:
    """Compute a maximal lottery and certify it.

    ``backend`` is ``"simplex"`` (authoritative; exact when ``mm`` is exact)
    or ``"mwu"``. ``tol`` defaults to 0 for exact simplex solves and
    ``1e-9`` otherwise. The returned lottery always passes
    ``verify_lottery(mm, x, tol)``.
    """
    if backend == "simplex":
        if tol is None:
            tol = 0 if mm.exact else DEFAULT_FLOAT_TOL
        x = solve_simplex(mm)
    elif backend == "mwu":
        if tol is None:
            tol = DEFAULT_FLOAT_TOL
        x = solve_mwu(mm, tol=tol, **kwargs)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    report = verify_lottery(mm, x, tol)
    if not report.passed:
        raise SolverError(
            f"{backend} output fails verification: candidate {report.worst_candidate} "
            f"reaches {report.worst_value} > 1/2 + {tol}"
        )
    return x


# --------------------------------------------------------------------------
# Text format: one ``candidate probability`` line per candidate


def format_lottery(x: Lottery, rational: bool | None = None) -> str:
    if rational is None:
        rational = x.exact
    lines = []
    for a, p in enumerate(x.probs):
        if rational:
            lines.append(f"{a} {Fraction(p)}")
        else:
            lines.append(f"{a} {float(p):.17g}")
    return "\n".join(lines) + "\n"


def parse_lottery(text: str, m: int | None = None) -> Lottery:
    entries = {}
    exact = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ElectionFormatError("lottery lines must be 'candidate probability'", lineno)
        try:
            a = int(tokens[0])
            if "/" in tokens[1] or tokens[1].isdigit():
                p = Fraction(tokens[1])
            else:
                p = float(tokens[1])
                exact = False
        except (ValueError, ZeroDivisionError):
            raise ElectionFormatError(f"bad lottery line {line!r}", lineno) from None
        if a in entries:
            raise ElectionFormatError(f"candidate {a} listed twice", lineno)
        entries[a] = p
    size = m if m is not None else (max(entries) + 1 if entries else 0)
    if any(not 0 <= a < size for a in entries):
        raise ElectionFormatError(f"lottery mentions a candidate outside 0..{size - 1}")
    zero = Fraction(0) if exact else 0.0
    probs = [entries.get(a, zero) for a in range(size)]
    if not exact:
        probs = [float(p) for p in probs]
    try:
        return Lottery(probs)
    except ValueError as exc:
        raise ElectionFormatError(str(exc)) from None
