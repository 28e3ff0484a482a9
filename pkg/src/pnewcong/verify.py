"""L-invariant records, their join with eigensystems, and the deep-congruence audit."""

from __future__ import annotations

import io
import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .congruence import PartitionTable, depth_value
from .local import c_constant
from .padic import AtLeast, InsufficientPrecision, PadicNumber


class RecordError(ValueError):
    pass


class CountMismatch(RecordError):
    pass


class SignMismatch(RecordError):
    pass


class MalformedRecord(RecordError):
    pass


@dataclass(frozen=True)
class LInvariantRecord:
    index: int
    eps: int
    vL: int
    L: PadicNumber | None = None

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise MalformedRecord(f"record {self.index}: eps must be +1 or -1")
        if self.L is not None and self.L.valuation != self.vL:
            raise MalformedRecord(f"record {self.index}: vL {self.vL} disagrees with L")


# ---------------------------------------------------------------------------
# record files
#
# One record per line: ``index eps vL [L_valuation L_mantissa L_precision]``.
# Blank lines and lines starting with '#' are ignored. Header comments of the
# form ``# key: value`` carry metadata (p, k, N, M).


def _lines(source):
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8").splitlines()
    if isinstance(source, str):
        if "\n" not in source and Path(source).exists():
            return Path(source).read_text(encoding="utf-8").splitlines()
        return source.splitlines()
    if isinstance(source, io.IOBase):
        return source.read().splitlines()
    return list(source)


def parse_linv(source) -> tuple[dict, list[LInvariantRecord]]:
    meta, records = {}, []
    p = None
    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if ":" in body:
                key, _, val = body.partition(":")
                meta[key.strip()] = val.strip()
                if key.strip() == "p":
                    p = int(val)
            continue
        parts = line.split()
        try:
            nums = [int(x) for x in parts]
        except ValueError:
            raise MalformedRecord(f"line {lineno}: non-integer field in {line!r}") from None
        if len(nums) not in (3, 6):
            raise MalformedRecord(f"line {lineno}: expected 3 or 6 fields, got {len(nums)}")
        L = None
        if len(nums) == 6:
            if p is None:
                raise MalformedRecord(f"line {lineno}: full L value needs a '# p:' header")
            try:
                L = PadicNumber(p, nums[3], nums[4], nums[5])
            except ValueError as exc:
                raise MalformedRecord(f"line {lineno}: {exc}") from None
        records.append(LInvariantRecord(nums[0], nums[1], nums[2], L))
    idx = [r.index for r in records]
    if len(set(idx)) != len(idx):
        raise MalformedRecord("duplicate record index")
    return meta, records


def ingest_linv(source, systems=None) -> list[LInvariantRecord]:
    """Parse and validate records; with ``systems`` also check count and signs."""
    _, records = parse_linv(source)
    if systems is not None:
        if len(records) != len(systems):
            raise CountMismatch(f"{len(records)} records for {len(systems)} eigensystems")
        by_index = {e.index: e for e in systems}
        for r in records:
            e = by_index.get(r.index)
            if e is None:
                raise MalformedRecord(f"record index {r.index} has no eigensystem")
            if e.eps != r.eps:
                raise SignMismatch(f"record {r.index}: eps {r.eps} but eigensystem has {e.eps}")
    return records


def format_linv(records, meta: dict) -> str:
    lines = [f"# {key}: {val}" for key, val in meta.items()]
    for r in sorted(records, key=lambda r: r.index):
        fields = [r.index, r.eps, r.vL]
        if r.L is not None:
            fields += [r.L.valuation, r.L.mantissa, r.L.precision]
        lines.append(" ".join(str(x) for x in fields))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# shipped fixtures


def _data_dir():
    return resources.files("pnewcong") / "data"


def case_name(N: int, p: int, k: int) -> str:
    return f"N{N}_p{p}_k{k}"


def load_printed_table(N: int, p: int, k: int) -> dict:
    """Transcribed changepoint table: {'rows': [(n, classes or 'distinct')], ...}."""
    path = _data_dir() / "tables" / f"{case_name(N, p, k)}.json"
    d = json.loads(path.read_text(encoding="utf-8"))
    d["rows"] = [(n, body) for n, body in d["rows"]]
    return d


def linv_fixture_path(N: int, p: int, k: int):
    return _data_dir() / "linv" / f"{case_name(N, p, k)}.linv"


def load_cancellation_pairs(N: int, p: int, k: int) -> list[tuple[int, int]]:
    path = _data_dir() / "cancellation" / f"{case_name(N, p, k)}.txt"
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            s, v = line.split()
            out.append((int(s), int(v)))
    return out


def available_fixtures() -> list[tuple[int, int, int]]:
    out = []
    for f in (_data_dir() / "tables").iterdir():
        name = f.name.removesuffix(".json")
        if name.startswith("N"):
            n, p, k = name.split("_")
            out.append((int(n[1:]), int(p[1:]), int(k[1:])))
    return sorted(out)


def printed_partitions(printed: dict) -> list[tuple[int, list]]:
    """Rows of a transcribed table with 'distinct' expanded into singletons."""
    labels = sorted(
        (lab for cls in printed["rows"][0][1] for lab in cls), key=lambda x: -x
    )
    out = []
    for n, body in printed["rows"]:
        if body == "distinct":
            body = [[lab] for lab in labels]
        out.append((n, sorted(sorted(c, key=lambda x: -x) for c in body)))
    return out


# ---------------------------------------------------------------------------
# structural labelling


def structural_labels(table: PartitionTable, printed: dict, *, skip_rows=(), limit: int = 10000) -> list[dict]:
    """All assignments index -> vL making the computed table equal the printed one.

    Equal labels are interchangeable, so assignments are enumerated over
    label values. Signs are not used. Rows listed in ``skip_rows`` are left
    out of the comparison (their changepoint must still be present).
    """
    rows = printed_partitions(printed)
    if [n for n, _ in rows] != table.changepoints:
        return []
    wanted = {n: Counter(tuple(c) for c in classes) for n, classes in rows if n not in skip_rows}
    comp = {n: classes for n, classes in table.rows if n in wanted}
    pool = Counter(lab for cls in rows[0][1] for lab in cls)
    indices = sorted(i for cls in table.rows[0][1] for i in cls)
    if sum(pool.values()) != len(indices):
        return []
    # depth-first leaf order, so that small classes are completed early
    row_ns = sorted(comp)
    class_id = {n: {i: j for j, cls in enumerate(comp[n]) for i in cls} for n in row_ns}
    order = sorted(indices, key=lambda i: tuple(class_id[n][i] for n in row_ns))
    member = {n: {i: cls for cls in comp[n] for i in cls} for n in comp}
    found: list[dict] = []
    assign: dict[int, int] = {}

    def consistent(i) -> bool:
        for n in comp:
            cls = member[n][i]
            if all(j in assign for j in cls):
                key = tuple(sorted((assign[j] for j in cls), key=lambda x: -x))
                used = Counter(
                    tuple(sorted((assign[j] for j in c), key=lambda x: -x))
                    for c in comp[n]
                    if all(j in assign for j in c)
                )
                if used[key] > wanted[n][key]:
                    return False
        return True

    def rec(pos):
        if len(found) >= limit:
            return
        if pos == len(order):
            found.append(dict(assign))
            return
        i = order[pos]
        for lab in sorted(pool, key=lambda x: -x):
            if pool[lab] == 0:
                continue
            pool[lab] -= 1
            assign[i] = lab
            if consistent(i):
                rec(pos + 1)
            del assign[i]
            pool[lab] += 1

    rec(0)
    return found


def records_from_labels(systems, labels: dict) -> list[LInvariantRecord]:
    return [LInvariantRecord(e.index, e.eps, labels[e.index]) for e in sorted(systems, key=lambda e: e.index)]


# ---------------------------------------------------------------------------
# audit


@dataclass
class FormAudit:
    index: int
    eps: int
    vL: int
    required_depth: int
    partners: list
    best: int | None
    measured_depth: object
    clauses: dict

    @property
    def ok(self) -> bool:
        return len(self.partners) == 1


@dataclass
class VerificationReport:
    p: int
    k: int
    N: int
    C: int
    audits: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def unique(self) -> bool:
        return all(len(a.partners) <= 1 for a in self.audits)

    def to_text(self) -> str:
        out = [f"Deep-congruence audit N={self.N} p={self.p} k={self.k} (C={self.C})"]
        if not self.audits:
            out.append("  no admissible forms")
        for a in self.audits:
            partner = "NONE" if not a.partners else ",".join(map(str, a.partners))
            cl = " ".join(f"{key}={_fmt_clause(val)}" for key, val in a.clauses.items())
            out.append(
                f"  form {a.index} eps={a.eps:+d} vL={a.vL}: partner {partner}; "
                f"need depth >= {a.required_depth}, measured {a.measured_depth}; {cl}"
            )
        out.append("PASS" if self.passed else "FAIL: " + "; ".join(self.violations))
        return "\n".join(out) + "\n"


def _fmt_clause(v):
    return "n/a" if v is None else ("pass" if v else "fail")


def _depth_of(depths, i, j):
    return depths[(i, j)] if (i, j) in depths else depths[(j, i)]


def match_partners(systems, records, depths, *, C: int | None = None) -> VerificationReport:
    """For each admissible form, its opposite-sign equal-valuation deep partners."""
    e0 = systems[0]
    p, k, N = e0.p, e0.k, e0.N
    C = c_constant(p, k) if C is None else C
    rec = {r.index: r for r in records}
    report = VerificationReport(p, k, N, C)
    for f in sorted(systems, key=lambda e: e.index):
        rf = rec[f.index]
        if not rf.vL < -C:
            continue
        need = -rf.vL + 1
        partners = []
        best, best_key, best_clauses, best_depth = None, None, {}, None
        for g in systems:
            if g.index == f.index:
                continue
            rg = rec[g.index]
            d = _depth_of(depths, f.index, g.index)
            clauses = {
                "sign": g.eps == -f.eps,
                "vL": rg.vL == rf.vL,
                "cancel": _cancel_clause(rf, rg, C),
                "depth": depth_value(d) >= need,
            }
            if all(v is not False for v in clauses.values()):
                partners.append(g.index)
            key = (sum(v is not False for v in clauses.values()), depth_value(d))
            if best_key is None or key > best_key:
                best, best_key, best_clauses, best_depth = g.index, key, clauses, d
        a = FormAudit(f.index, f.eps, rf.vL, need, partners, best, best_depth, best_clauses)
        report.audits.append(a)
        if not partners:
            failed = [key for key, v in best_clauses.items() if v is False]
            report.violations.append(f"form {f.index} (vL={rf.vL}) has no partner; closest {best} fails {failed}")
        elif len(partners) > 1:
            report.violations.append(f"form {f.index} (vL={rf.vL}) has several partners {partners}")
    return report


def _cancel_clause(rf, rg, C):
    if rf.L is None or rg.L is None:
        return None
    try:
        return (rf.L + rg.L).valuation >= -C
    except InsufficientPrecision as exc:
        if exc.lower_bound >= -C:
            return True
        raise


@dataclass
class DoublingResult:
    passed: bool
    witness: list


def an_doubling_check(records, p: int, k: int, *, C: int | None = None) -> DoublingResult:
    """Every admissible valuation occurs with even multiplicity."""
    C = c_constant(p, k) if C is None else C
    vals = [r.vL if isinstance(r, LInvariantRecord) else int(r) for r in records]
    counts = Counter(v for v in vals if v < -C)
    odd = sorted(v for v, c in counts.items() if c % 2)
    return DoublingResult(not odd, odd)


@dataclass(frozen=True)
class CancellationEntry:
    sum_valuation: object
    vL: int
    above_minus_C: bool

    def pair(self):
        return [self.sum_valuation if not isinstance(self.sum_valuation, AtLeast) else str(self.sum_valuation), self.vL]


def cancellation_report(records, pairing, p: int, k: int, *, C: int | None = None) -> list[CancellationEntry]:
    """[v_p(L_f + L_g), v_p(L_f)] for each matched pair, with the '> -C' flag."""
    C = c_constant(p, k) if C is None else C
    rec = {r.index: r for r in records}
    out = []
    for i, j in pairing:
        a, b = rec[i], rec[j]
        if a.L is None or b.L is None:
            raise InsufficientPrecision(f"pair ({i}, {j}) lacks full L values")
        s = (a.L + b.L).valuation
        out.append(CancellationEntry(s, a.vL, s > -C))
    return sorted(out, key=lambda e: (-e.vL, e.sum_valuation))


def cancellation_from_pairs(pairs, p: int, k: int, *, C: int | None = None) -> list[CancellationEntry]:
    """Entries for recorded (sum valuation, vL) pairs."""
    C = c_constant(p, k) if C is None else C
    return sorted((CancellationEntry(s, v, s > -C) for s, v in pairs), key=lambda e: (-e.vL, e.sum_valuation))


def deep_pairs(table: PartitionTable) -> list[tuple[int, int]]:
    """Two-element classes occurring in some row of the table."""
    return sorted({tuple(c) for _, classes in table.rows for c in classes if len(c) == 2})
