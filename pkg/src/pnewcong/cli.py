"""Command-line entry point.

    pnewcong newspace --p 3 --k 44 --precision 16 --out p3k44.json
    pnewcong depth-table --archive p3k44.json
    pnewcong verify --archive p3k44.json
    pnewcong report --p 5 --k 32 --precision 15
    pnewcong local c-constant --p 3 --k 44
    pnewcong cancellation --p 5 --k 32

Exit codes: 0 success, 2 when some Hecke block was excluded because it is not
split over Q_p, 3 when the deep-congruence audit fails, 1 on input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cache import ENV_VAR, open_cache
from .congruence import changepoint_table, depth_matrix, sturm_bound
from .eigensolve import archive_dict, read_archive, write_archive
from .local import (
    c_constant,
    equidistribution_interval,
    is_admissible,
    opposite_sign_predicted_depth,
    same_sign_depth,
)
from .modsym import UnsupportedWeight
from .padic import InsufficientPrecision, PadicNumber
from .pipeline import DEFAULT_CUTOFF, good_primes, run_case
from .verify import (
    RecordError,
    an_doubling_check,
    cancellation_from_pairs,
    cancellation_report,
    case_name,
    deep_pairs,
    ingest_linv,
    linv_fixture_path,
    load_cancellation_pairs,
    load_printed_table,
    match_partners,
    parse_linv,
)

log = logging.getLogger("pnewcong")

EXIT_OK, EXIT_INPUT, EXIT_EXCLUDED, EXIT_FAIL = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    N: int
    p: int
    k: int
    M: int
    cutoff: int
    sturm: bool
    cache: str | None
    fmt: str

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("precision must be >= 1")
        if self.cutoff < 2:
            raise ValueError("prime cutoff must be >= 2")


def _config(args) -> RunConfig:
    return RunConfig(args.N, args.p, args.k, args.precision, args.lmax, args.sturm, args.cache,
                     getattr(args, "format", "markdown"))


# ---------------------------------------------------------------------------
# shared steps


class _Case:
    """Eigensystems for one (N, p, k), from an archive or computed afresh."""

    def __init__(self, meta, systems, primes):
        self.meta = meta
        self.systems = systems
        self.primes = primes

    @property
    def exclusions(self):
        return self.meta.get("exclusions", [])


def _load_case(args) -> _Case:
    if getattr(args, "archive", None):
        meta, systems = read_archive(args.archive)
        primes = good_primes(meta["N"], meta["p"], meta["cutoff"])
        return _Case(meta, systems, primes)
    cfg = _config(args)
    res = run_case(cfg.N, cfg.p, cfg.k, cfg.M, cutoff=cfg.cutoff, sturm=cfg.sturm, cache=open_cache(cfg.cache))
    d = archive_dict(res.systems, N=cfg.N, p=cfg.p, k=cfg.k, M=cfg.M, cutoff=res.cutoff,
                     exclusions=res.exclusions)
    meta = {key: d[key] for key in ("N", "p", "k", "M", "cutoff", "exclusions")}
    return _Case(meta, res.systems, res.primes)


def _note_exclusions(case: _Case, out) -> None:
    for ex in case.exclusions:
        print(
            f"note: excluded a Hecke block of sign {ex['sign']:+d}: {ex['degree']} eigenvalue(s) "
            "are not in Q_p, so the splitting assumption fails here",
            file=out,
        )


def _records_path(args, meta):
    if getattr(args, "linv", None):
        return Path(args.linv)
    path = linv_fixture_path(meta["N"], meta["p"], meta["k"])
    return path if path.is_file() else None


def _load_records(args, case: _Case):
    path = _records_path(args, case.meta)
    if path is None:
        return None
    try:
        return ingest_linv(path.read_text(encoding="utf-8"), case.systems)
    except RecordError as exc:
        raise RecordError(f"{path}: {exc}") from exc


def _caption_C(meta):
    try:
        return load_printed_table(meta["N"], meta["p"], meta["k"]).get("caption_C")
    except FileNotFoundError:
        return None


def _C(args, meta) -> int:
    C = c_constant(meta["p"], meta["k"])
    if getattr(args, "caption_C", False):
        cap = _caption_C(meta)
        if cap is not None:
            return cap
    if getattr(args, "C", None) is not None:
        return args.C
    return C


def _c_note(meta) -> str | None:
    C = c_constant(meta["p"], meta["k"])
    cap = _caption_C(meta)
    if cap is not None and cap != C:
        return (f"note: C_{{p,k}} = {C} from the closed formula, but the printed caption "
                f"for this table uses {cap}; pass --caption-C to audit with {cap}")
    return None


def _emit_table(case: _Case, labels, fmt, out) -> None:
    if not case.systems:
        print("(no p-new forms)", file=out)
        return
    table = changepoint_table(case.systems, case.primes, labels)
    if fmt == "csv":
        out.write(table.to_csv())
    else:
        out.write(table.to_markdown())


# ---------------------------------------------------------------------------
# commands


def cmd_newspace(args, out) -> int:
    case = _load_case(args)
    meta = case.meta
    path = args.out or f"{case_name(meta['N'], meta['p'], meta['k'])}_M{meta['M']}.json"
    write_archive(path, case.systems, **{key: meta[key] for key in ("N", "p", "k", "M", "cutoff")},
                  exclusions=[_Excl(e["degree"], e["sign"]) for e in case.exclusions])
    print(f"wrote {len(case.systems)} eigensystem(s) to {path}", file=out)
    _note_exclusions(case, out)
    return EXIT_EXCLUDED if case.exclusions else EXIT_OK


@dataclass(frozen=True)
class _Excl:
    degree: int
    sign: int


def cmd_depth_table(args, out) -> int:
    case = _load_case(args)
    records = None
    try:
        records = _load_records(args, case)
    except RecordError as exc:
        print(f"note: labels not used ({exc})", file=out)
    labels = {r.index: r.vL for r in records} if records else None
    _emit_table(case, labels, args.format, out)
    _note_exclusions(case, out)
    return EXIT_EXCLUDED if case.exclusions else EXIT_OK


def _audit(args, case: _Case, out) -> int | None:
    """Print the audit; None when there are no records."""
    records = _load_records(args, case)
    if records is None:
        print("note: no L-invariant records for this case; verification skipped", file=out)
        return None
    meta = case.meta
    C = _C(args, meta)
    depths = depth_matrix(case.systems, case.primes)
    report = match_partners(case.systems, records, depths, C=C)
    out.write(report.to_text())
    dbl = an_doubling_check(records, meta["p"], meta["k"], C=C)
    print("doubling of admissible valuations: " + ("pass" if dbl.passed else f"fail, odd multiplicity {dbl.witness}"),
          file=out)
    note = _c_note(meta)
    if note:
        print(note, file=out)
    return EXIT_OK if report.passed and dbl.passed else EXIT_FAIL


def cmd_verify(args, out) -> int:
    case = _load_case(args)
    try:
        code = _audit(args, case, out)
    except RecordError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _note_exclusions(case, out)
    if code is None:
        code = EXIT_OK
    if code == EXIT_OK and case.exclusions:
        return EXIT_EXCLUDED
    return code


def _cancellation_lines(args, N, p, k, out) -> None:
    C = _C(args, {"N": N, "p": p, "k": k})
    entries = None
    if getattr(args, "linv", None):
        _, records = parse_linv(Path(args.linv))
        if records and all(r.L is not None for r in records):
            pairing = _pairing_from_args(args)
            if pairing is None:
                print("note: full L values present but no --pairs given; using the shipped list", file=out)
            else:
                entries = cancellation_report(records, pairing, p, k, C=C)
    if entries is None:
        try:
            entries = cancellation_from_pairs(load_cancellation_pairs(N, p, k), p, k, C=C)
        except FileNotFoundError:
            print(f"no cancellation data for N={N} p={p} k={k}", file=out)
            return
    print(f"cancellation [v_p(L_f + L_g), v_p(L_f)] for N={N} p={p} k={k} (-C = {-C}):", file=out)
    print("  " + ", ".join(f"[{e.pair()[0]}, {e.pair()[1]}]" for e in entries), file=out)
    ok = all(e.above_minus_C for e in entries)
    print(f"  every sum valuation > -C: {'yes' if ok else 'no'}", file=out)


def _pairing_from_args(args):
    if not getattr(args, "pairs", None):
        return None
    out = []
    for item in args.pairs.split(","):
        i, _, j = item.partition(":")
        out.append((int(i), int(j)))
    return out


def cmd_cancellation(args, out) -> int:
    try:
        _cancellation_lines(args, args.N, args.p, args.k, out)
    except InsufficientPrecision as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_report(args, out) -> int:
    case = _load_case(args)
    meta = case.meta
    print(f"# N={meta['N']} p={meta['p']} k={meta['k']}  precision {meta['M']}, primes < {meta['cutoff']}",
          file=out)
    print(f"{len(case.systems)} p-new eigensystem(s)", file=out)
    try:
        records = _load_records(args, case)
    except RecordError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    labels = {r.index: r.vL for r in records} if records else None
    print("", file=out)
    _emit_table(case, labels, "markdown", out)
    if case.systems and records is not None:
        table = changepoint_table(case.systems, case.primes, labels)
        pairs = deep_pairs(table)
        if pairs:
            print("two-form classes: " + ", ".join(f"{i}:{j}" for i, j in pairs), file=out)
    print("", file=out)
    code = _audit(args, case, out) if case.systems else None
    print("", file=out)
    _cancellation_lines(args, meta["N"], meta["p"], meta["k"], out)
    _note_exclusions(case, out)
    if code is None or code == EXIT_OK:
        return EXIT_EXCLUDED if case.exclusions else EXIT_OK
    return code


def _padic_arg(text: str, p: int, prec: int) -> PadicNumber:
    return PadicNumber.from_rational(Fraction(text), p, prec)


def cmd_local(args, out) -> int:
    p, k = args.p, args.k
    C = c_constant(p, k)
    if args.query == "c-constant":
        print(C, file=out)
    elif args.query == "admissible":
        print("yes" if is_admissible(args.vL, p, k) else "no", file=out)
    elif args.query == "interval":
        lo, hi = equidistribution_interval(p, k)
        print(f"({lo}, {hi})", file=out)
    elif args.query == "predicted-depth":
        L = _padic_arg(args.L, p, args.L_precision)
        Lp = _padic_arg(args.Lprime, p, args.L_precision)
        try:
            d = opposite_sign_predicted_depth(L, Lp, p, k)
        except InsufficientPrecision as exc:
            print(f"undetermined: {exc}", file=out)
            return EXIT_INPUT
        print("none" if d is None else d, file=out)
    elif args.query == "same-sign-depth":
        L0 = _padic_arg(args.L, p, args.L_precision)
        L1 = _padic_arg(args.Lprime, p, args.L_precision)
        d = same_sign_depth(L0, L1, p, k)
        print("none" if d is None else d, file=out)
    elif args.query == "sturm":
        s = sturm_bound(args.N, p, k)
        print(f"N'={s.Nprime} index={s.index} bound={s.bound}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _space_options(sp, *, archive: bool) -> None:
    sp.add_argument("--N", type=int, default=1, help="tame level, prime to p (default 1)")
    sp.add_argument("--p", type=int, required=not archive)
    sp.add_argument("--k", type=int, required=not archive)
    sp.add_argument("--precision", "-M", type=int, default=16, help="p-adic precision M (default 16)")
    sp.add_argument("--lmax", type=int, default=DEFAULT_CUTOFF, help=f"prime cutoff (default {DEFAULT_CUTOFF})")
    sp.add_argument("--sturm", action="store_true", help="use the Sturm bound as prime cutoff")
    sp.add_argument("--cache", default=None, help=f"cache directory (default ${ENV_VAR})")
    if archive:
        sp.add_argument("--archive", help="read eigensystems from an archive instead of computing")


def _audit_options(sp) -> None:
    sp.add_argument("--linv", help="L-invariant record file (default: shipped fixture)")
    sp.add_argument("--C", type=int, default=None, help="override C_{p,k}")
    sp.add_argument("--caption-C", action="store_true", help="use the printed caption value of C_{p,k}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pnewcong", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("newspace", help="compute p-new eigensystems and write an archive")
    _space_options(sp, archive=False)
    sp.add_argument("--out", "-o", help="archive path")
    sp.set_defaults(func=cmd_newspace)

    sp = sub.add_parser("depth-table", help="changepoint table of congruence depths")
    _space_options(sp, archive=True)
    sp.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    sp.add_argument("--linv", help="record file used to label forms by v_p(L)")
    sp.set_defaults(func=cmd_depth_table)

    sp = sub.add_parser("verify", help="deep-congruence audit against L-invariant records")
    _space_options(sp, archive=True)
    _audit_options(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("report", help="table, audit and cancellation list")
    _space_options(sp, archive=True)
    _audit_options(sp)
    sp.add_argument("--pairs", help="pairing i:j,... for full L values")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("cancellation", help="[v_p(L_f + L_g), v_p(L_f)] list")
    sp.add_argument("--N", type=int, default=1)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--linv", help="record file with full L values")
    sp.add_argument("--pairs", help="pairing i:j,... for full L values")
    sp.add_argument("--C", type=int, default=None)
    sp.add_argument("--caption-C", action="store_true")
    sp.set_defaults(func=cmd_cancellation)

    sp = sub.add_parser("local", help="local queries: C_{p,k}, admissibility, predicted depths")
    sp.add_argument("query", choices=("c-constant", "admissible", "interval", "predicted-depth",
                                      "same-sign-depth", "sturm"))
    sp.add_argument("--N", type=int, default=1)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--vL", type=int)
    sp.add_argument("--L", help="rational approximation of L, e.g. 7/243")
    sp.add_argument("--Lprime", help="rational approximation of the second L")
    sp.add_argument("--L-precision", type=int, default=20)
    sp.set_defaults(func=cmd_local)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which is taken by exclusions here
        return EXIT_INPUT if exc.code == 2 else exc.code
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    if args.command == "local" and args.query == "admissible" and args.vL is None:
        print("error: admissible needs --vL", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "local" and args.query in ("predicted-depth", "same-sign-depth") and not (args.L and args.Lprime):
        print("error: this query needs --L and --Lprime", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args, out)
    except (ValueError, UnsupportedWeight) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
