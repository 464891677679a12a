"""Command-line front end.

Every command echoes its invocation and seed in ``#`` comment lines so a
printed header is enough to reproduce the output. Exit statuses: 0 success,
1 verification failure, 2 input error, 3 resource-guard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import shlex
import sys
from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from approxdom import committee as cm
from approxdom import discrepancy as ds
from approxdom import generators as gen
from approxdom.election import (
    margin_matrix,
    majority_tournament,
    parse_election,
    parse_preflib,
    parse_tournament,
    serialize_election,
    serialize_tournament,
)
from approxdom.errors import ApproxDomError, AttackError, ElectionFormatError, GuardError, SolverError
from approxdom.lottery import format_lottery, parse_lottery, solve_maximal_lottery, verify_lottery

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"


class _VerificationFailed(Exception):
    pass


def _header(argv, seed=None) -> list[str]:
    line = f"# approxdom {__version__}: {shlex.join(['approxdom', *argv])}"
    out = [line]
    if seed is not None:
        out.append(f"# seed={seed}")
    return out


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_election(path: str, fmt: str):
    text = _read(path)
    if fmt == "preflib" or (fmt == "auto" and path.endswith((".soc", ".toc", ".soi"))):
        return parse_preflib(text)
    return parse_election(text)


def _mode(name: str):
    return {"exact": True, "float": False, "auto": None}[name]


def _num(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return f"{float(x):.12g}"


def _int_count(text: str) -> int:
    value = float(text)
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number or p/q, got {text!r}") from None


def _k_range(text: str) -> list[int]:
    ks = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..", 1)
            ks.extend(range(int(lo), int(hi) + 1))
        else:
            ks.append(int(part))
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError(f"bad k range {text!r}")
    return ks


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


# --------------------------------------------------------------------------


def cmd_solve(args, argv) -> tuple[str, int]:
    e = _load_election(args.election, args.input_format)
    mm = margin_matrix(e, exact=_mode(args.mode))
    x = solve_maximal_lottery(mm, tol=args.tol, backend=args.backend)
    tol = args.tol if args.tol is not None else (0 if mm.exact and args.backend == "simplex" else 1e-9)
    report = verify_lottery(mm, x, tol)
    rational = {"rational": True, "decimal": False, "auto": None}[args.format]
    lines = _header(argv)
    lines.append(format_lottery(x, rational).rstrip("\n"))
    lines.append(
        f"# worst_candidate={report.worst_candidate} worst_value={_num(report.worst_value)} "
        f"tol={tol} pass={str(report.passed).lower()}"
    )
    return "\n".join(lines) + "\n", EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify(args, argv) -> tuple[str, int]:
    e = _load_election(args.election, args.input_format)
    mm = margin_matrix(e, exact=_mode(args.mode))
    x = parse_lottery(_read(args.lottery), m=e.m)
    report = verify_lottery(mm, x, args.tol)
    lines = _header(argv)
    lines.append("worst_candidate,worst_value,tol,pass")
    lines.append(f"{report.worst_candidate},{_num(report.worst_value)},{args.tol},{str(report.passed).lower()}")
    return "\n".join(lines) + "\n", EXIT_OK if report.passed else EXIT_FAIL


def _z_histogram(e, x, args) -> str:
    counts = cm.sample_counts(x, args.k, args.sweep, args.seed)
    z = cm.batch_inflation(e, x, counts)
    edges = np.linspace(0.0, max(float(z.max()), 1e-12), args.bins + 1)
    hist, _ = np.histogram(z, bins=edges)
    buf = io.StringIO()
    buf.write(f"# Z sweep: trials={args.sweep} mean={z.mean():.12g} sd={z.std(ddof=1) if len(z) > 1 else 0:.6g}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_lo", "bin_hi", "count"])
    for lo, hi, n in zip(edges[:-1], edges[1:], hist):
        writer.writerow([f"{lo:.12g}", f"{hi:.12g}", int(n)])
    return buf.getvalue()


def cmd_committee(args, argv) -> tuple[str, int]:
    e = _load_election(args.election, args.input_format)
    mm = margin_matrix(e, exact=_mode(args.mode))
    x = solve_maximal_lottery(mm)
    lines = _header(argv, args.seed)
    if args.sweep:
        return "\n".join(lines) + "\n" + _z_histogram(e, x, args), EXIT_OK
    eta = args.eta
    delta = ds.delta_value(args.k, args.delta_source, trials=args.delta_trials, seed=args.seed)
    exact_margins = mm if mm.exact else margin_matrix(e, exact=True) if e.m * e.num_voters <= 10**6 else mm
    eta_arg = eta if exact_margins.exact else float(eta)
    good = cm.sample_until_good(
        e, x, args.k, eta_arg, args.seed, max_iters=args.max_iters, delta=delta, margins=exact_margins
    )
    alpha = good.alpha
    report = cm.verify_alpha_dominating(good.committee, exact_margins, alpha)
    c = good.committee
    lines.append("# committee: candidate,multiplicity")
    lines.extend(f"{a},{n}" for a, n in c.multiplicities.items())
    lines.append(f"# k={c.k} distinct={len(c.distinct)} iterations={good.iterations}")
    lines.append(f"# Z={_num(good.Z)} delta={_num(good.delta)} eta={eta} threshold={_num(good.threshold)}")
    lines.append(
        f"# worst_candidate={good.worst_candidate} worst_value={_num(good.worst_value)} "
        f"certified={str(good.certified).lower()}"
    )
    lines.append(
        f"# alpha={_num(alpha)} vacuous={str(good.vacuous).lower()} dominating={str(report.passed).lower()}"
    )
    lines.append("excluded,best_member,margin")
    lines.extend(f"{a},{b},{_num(margin)}" for a, b, margin in report.rows())
    ok = good.certified and report.passed
    return "\n".join(lines) + "\n", EXIT_OK if ok else EXIT_FAIL


def cmd_delta(args, argv) -> tuple[str, int]:
    method = {"exact": "exact", "mc": "monte_carlo", "bound": "upper_bound"}[args.method]
    if method == "monte_carlo" and args.seed is None:
        raise ValueError("--method mc needs an explicit --seed")
    rows = ds.alpha_table(args.k, method, trials=args.trials, seed=args.seed, threads=args.threads)
    rational = args.format == "rational" or (args.format == "auto" and method == "exact")
    buf = io.StringIO()
    for line in _header(argv, args.seed if method == "monte_carlo" else None):
        buf.write(line + "\n")
    if method == "monte_carlo":
        buf.write(f"# trials={args.trials}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "alpha", "delta", "method", "ci"])
    for row in rows:
        if rational and isinstance(row.delta, Fraction):
            alpha, delta = str(row.alpha), str(row.delta)
        else:
            alpha, delta = f"{float(row.alpha):.15g}", f"{float(row.delta):.15g}"
        ci = "" if row.ci is None else f"{row.ci:.6g}"
        writer.writerow([row.k, alpha, delta, row.method, ci])
    return buf.getvalue(), EXIT_OK


def cmd_gen(args, argv) -> tuple[str, int]:
    needs_seed = args.kind in ("random", "tournament") or (args.kind == "mcgarvey" and not args.tournament)
    if needs_seed and args.seed is None:
        raise ValueError(f"gen {args.kind} needs an explicit --seed")
    header = [line[2:] for line in _header(argv, args.seed if needs_seed else None)]
    status = EXIT_OK
    if args.kind == "cycle":
        e = gen.condorcet_cycle(args.m)
    elif args.kind == "unanimous":
        e = gen.unanimous(args.m, args.n or 1)
    elif args.kind == "random":
        e = gen.random_election(args.m, args.n, args.seed)
    elif args.kind == "tournament":
        T = gen.random_tournament(args.m, args.seed)
        return "".join(f"# {h}\n" for h in header) + serialize_tournament(T), EXIT_OK
    elif args.kind == "mcgarvey":
        if args.tournament:
            T = parse_tournament(_read(args.tournament))
        else:
            T = gen.random_tournament(args.m, args.seed)
        e = gen.mcgarvey(T)
        realized = majority_tournament(margin_matrix(e))
        ok = realized == T and not realized.ties
        header.append(f"round-trip={'ok' if ok else 'FAILED'}")
        status = EXIT_OK if ok else EXIT_FAIL
    elif args.kind == "adversarial-explicit":
        params = gen.AdversarialParams(args.t, args.a, args.b)
        e = gen.adversarial_election_explicit(params)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.kind)
    return serialize_election(e, comments=header), status


def _margin_rows(attacker, members, t) -> list[list[str]]:
    return [[str(c), str(gen.adversarial_margin(attacker, c, t))] for c in members]


def cmd_attack(args, argv) -> tuple[str, int]:
    params = gen.AdversarialParams(args.t, args.a, args.b)
    rng = cm.make_rng(args.seed)
    if args.committee:
        members = [
            gen.PairCandidate.parse(line)
            for line in _read(args.committee).splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        ]
    else:
        if args.k is None:
            raise ValueError("give --k or --committee")
        members = [gen.random_pair_candidate(params, rng) for _ in range(args.k)]
    attacker = gen.adversarial_attack(members, params, rng, max_retries=args.max_retries)
    floor = params.guaranteed_margin
    buf = io.StringIO()
    for line in _header(argv, args.seed):
        buf.write(line + "\n")
    buf.write(f"# guaranteed margin 1/2 + b/(4t) = {floor} = {float(floor):.6g}\n")
    buf.write(f"# attacker {attacker}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["member", "margin"])
    rows = _margin_rows(attacker, members, params.t)
    writer.writerows(rows)
    ok = all(Fraction(r[1]) >= floor for r in rows)
    return buf.getvalue(), EXIT_OK if ok else EXIT_FAIL


def cmd_brute(args, argv) -> tuple[str, int]:
    e = _load_election(args.election, args.input_format)
    mm = margin_matrix(e, exact=True)
    found = cm.min_dominating_brute(mm, args.alpha, args.k_cap)
    lines = _header(argv)
    if found is None:
        lines.append(f"none (no {args.alpha}-dominating set of size <= {args.k_cap})")
        return "\n".join(lines) + "\n", EXIT_FAIL
    lines.append(f"# size={len(found)} alpha={args.alpha}")
    lines.append(" ".join(map(str, found)))
    return "\n".join(lines) + "\n", EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="approxdom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"approxdom {__version__}")
    parser.add_argument("-o", "--output", help="write to this file instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    def election_args(p):
        p.add_argument("election", help="election file ('-' for stdin)")
        p.add_argument("--input-format", choices=["auto", "native", "preflib"], default="auto")
        p.add_argument("--mode", choices=["auto", "exact", "float"], default="auto")

    p = sub.add_parser("solve", help="compute and verify a maximal lottery")
    election_args(p)
    p.add_argument("--backend", choices=["simplex", "mwu"], default="simplex")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--format", choices=["auto", "rational", "decimal"], default="auto")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="verify a lottery file against an election")
    election_args(p)
    p.add_argument("lottery", help="lottery file: 'candidate probability' lines")
    p.add_argument("--tol", type=float, default=0.0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("committee", help="sample a certified approximately dominating committee")
    election_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eta", type=_fraction, default=Fraction(1))
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--delta-source", choices=["auto", "exact", "mc", "bound"], default="auto")
    p.add_argument("--delta-trials", type=_int_count, default=10**6)
    p.add_argument("--sweep", type=_int_count, default=None, help="emit a Z histogram over this many committees")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--threads", type=int, default=1, help="accepted for uniformity; results never depend on it")
    p.set_defaults(func=cmd_committee)

    p = sub.add_parser("delta", help="tabulate delta(k) and alpha = 1/2 - delta(k) as CSV")
    p.add_argument("--k", type=_k_range, required=True, help="e.g. 2..4, 10, or 2,5,9")
    p.add_argument("--method", choices=["exact", "mc", "bound"], default="exact")
    p.add_argument("--trials", type=_int_count, default=10**6)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=["auto", "rational", "decimal"], default="auto")
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("gen", help="generate an election (or tournament) file")
    p.add_argument("kind", choices=["cycle", "unanimous", "random", "tournament", "mcgarvey", "adversarial-explicit"])
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--tournament", help="tournament file for mcgarvey")
    p.add_argument("--t", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("attack", help="beat a committee in the pair-of-sets election")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--k", type=int, help="size of a random committee to attack")
    p.add_argument("--committee", help="file with one 'A={...};B={...}' line per member")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--max-retries", type=int, default=1000)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("brute", help="smallest alpha-dominating set by exhaustive search")
    p.add_argument("election")
    p.add_argument("--input-format", choices=["auto", "native", "preflib"], default="auto")
    p.add_argument("--alpha", type=_fraction, default=Fraction(1, 2))
    p.add_argument("--k-cap", type=int, required=True)
    p.set_defaults(func=cmd_brute)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, status = args.func(args, argv)
    except ElectionFormatError as exc:
        print(f"approxdom: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GuardError as exc:
        print(f"approxdom: resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (SolverError, AttackError) as exc:
        print(f"approxdom: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError) as exc:
        print(f"approxdom: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ApproxDomError as exc:  # pragma: no cover - defensive
        print(f"approxdom: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
