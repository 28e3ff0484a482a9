"""Sturm bounds, congruence depths and changepoint tables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import floor

from .eigensolve import Eigensystem
from .modsym import gamma0_index, prime_factors, primes_up_to
from .padic import AtLeast, vp_int


class PrecisionMismatch(ValueError):
    pass


def depth_value(d) -> int:
    return d.value if isinstance(d, AtLeast) else d


@dataclass(frozen=True)
class SturmData:
    N: int
    p: int
    k: int
    Nprime: int
    index: int
    exact: Fraction
    bound: int

    def primes(self) -> list[int]:
        return [ell for ell in primes_up_to(self.bound) if (self.N * self.p) % ell]


def sturm_bound(N: int, p: int, k: int) -> SturmData:
    """Prime cutoff B(k, N') for forms of level Np.

    N' = (Np) p^2 rad(Np) and I = [SL_2(Z) : Gamma_0(N'p)].
    """
    if N % p == 0:
        raise ValueError("p must not divide N")
    rad = 1
    for q in prime_factors(N * p):
        rad *= q
    nprime = N * p * p * p * rad
    index = gamma0_index(nprime * p)
    b = Fraction(k * index, 12) - Fraction(index - 1, nprime * p)
    return SturmData(N, p, k, nprime, index, b, floor(b))


def depth(e1: Eigensystem, e2: Eigensystem, primes) -> int | AtLeast:
    """min over ell of v_p(a_ell(e1) - a_ell(e2)), computed in Z/p^M."""
    if e1.precision != e2.precision:
        raise PrecisionMismatch(f"precisions differ: {e1.precision} vs {e2.precision}")
    if (e1.p, e1.k, e1.N) != (e2.p, e2.k, e2.N):
        raise ValueError("eigensystems come from different spaces")
    M, p = e1.precision, e1.p
    best = M
    for ell in primes:
        v = vp_int((e1.aell[ell] - e2.aell[ell]) % p**M, p, cap=M)
        best = min(best, v)
        if best == 0:
            break
    return AtLeast(M) if best == M else best


@dataclass(frozen=True)
class PartitionTable:
    """Congruence partitions at each depth where they strictly refine.

    ``rows`` is a list of (n, classes) with classes a tuple of tuples of form
    indices. ``resolved`` is the largest n at which the partition is known.
    """

    p: int
    k: int
    N: int
    rows: tuple
    resolved: int
    labels: dict

    @property
    def changepoints(self) -> list[int]:
        return [n for n, _ in self.rows]

    def partition_at(self, n: int):
        out = None
        for m, classes in self.rows:
            if m <= n:
                out = classes
        return out

    def all_distinct_at(self, n: int) -> bool:
        part = self.partition_at(n)
        return part is not None and all(len(c) == 1 for c in part)

    def label(self, i: int):
        return self.labels.get(i, i)

    def canonical(self) -> list[tuple[int, list]]:
        """Rows as sorted multisets of sorted label classes, for comparison."""
        out = []
        for n, classes in self.rows:
            out.append((n, _canon(classes, self.label)))
        return out

    def to_markdown(self) -> str:
        lines = ["| Depth $p^*$ | $v_p(\\mathcal{L})$ |", "|---|---|"]
        for n, classes in self.rows:
            if all(len(c) == 1 for c in classes) and n > 1:
                body = "all distinct"
            else:
                body = ", ".join("[" + ", ".join(map(str, c)) + "]" for c in _canon(classes, self.label))
            lines.append(f"| {n} | {body} |")
        if not self.all_distinct_at(self.resolved):
            lines.append(f"| >={self.resolved} | (unresolved at precision {self.resolved}) |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["depth", "class", "members", "labels"])
        for n, classes in self.rows:
            for j, c in enumerate(classes):
                w.writerow([n, j, " ".join(map(str, c)), " ".join(str(self.label(i)) for i in c)])
        return buf.getvalue()


def _canon(classes, label):
    return sorted((sorted((label(i) for i in c), key=_label_key) for c in classes),
                  key=lambda c: [_label_key(x) for x in c])


def _label_key(x):
    return (0, -x) if isinstance(x, int) else (1, str(x))


def _partition(systems, primes, n):
    p = systems[0].p
    mod = p**n
    groups: dict[tuple, list[int]] = {}
    for e in systems:
        key = tuple(e.aell[ell] % mod for ell in primes)
        groups.setdefault(key, []).append(e.index)
    return tuple(sorted(tuple(sorted(g)) for g in groups.values()))


def changepoint_table(systems: list[Eigensystem], primes, labels: dict | None = None) -> PartitionTable:
    """Depths at which the mod p^n partition strictly refines, n = 1 .. M."""
    if not systems:
        raise ValueError("no eigensystems")
    M = systems[0].precision
    if any(e.precision != M for e in systems):
        raise PrecisionMismatch("eigensystems carry different precisions")
    primes = list(primes)
    rows = []
    prev = None
    for n in range(1, M + 1):
        part = _partition(systems, primes, n)
        if part != prev:
            rows.append((n, part))
            prev = part
        if all(len(c) == 1 for c in part):
            break
    e = systems[0]
    return PartitionTable(e.p, e.k, e.N, tuple(rows), M, dict(labels or {}))


def depth_matrix(systems: list[Eigensystem], primes) -> dict:
    """Pairwise depths keyed by (index_i, index_j) with i < j."""
    out = {}
    for a, b in combinations(sorted(systems, key=lambda e: e.index), 2):
        out[(a.index, b.index)] = depth(a, b, primes)
    return out


def check_refinement(table: PartitionTable) -> bool:
    """Each row refines the previous one."""
    for (_, coarse), (_, fine) in zip(table.rows, table.rows[1:]):
        owner = {i: j for j, c in enumerate(coarse) for i in c}
        for c in fine:
            if len({owner[i] for i in c}) != 1:
                return False
    return True
