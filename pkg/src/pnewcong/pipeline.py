"""End-to-end computation for one (N, p, k): space, signs, eigensystems, table."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .congruence import PartitionTable, changepoint_table, depth_matrix, sturm_bound
from .eigensolve import al_split, extract, label_systems, smallest_good_prime
from .modsym import build_space, pnew_cuspidal_plus, primes_up_to

log = logging.getLogger(__name__)

DEFAULT_CUTOFF = 300


@dataclass
class CaseResult:
    N: int
    p: int
    k: int
    M: int
    cutoff: int
    sturm: bool
    primes: list
    systems: list
    exclusions: list = field(default_factory=list)
    separating: dict = field(default_factory=dict)
    dims: dict = field(default_factory=dict)

    def table(self, labels: dict | None = None) -> PartitionTable | None:
        if not self.systems:
            return None
        return changepoint_table(self.systems, self.primes, labels)

    def depths(self) -> dict:
        return depth_matrix(self.systems, self.primes)


def good_primes(N: int, p: int, cutoff: int) -> list[int]:
    return [ell for ell in primes_up_to(cutoff) if (N * p) % ell]


def run_case(N: int, p: int, k: int, M: int, *, cutoff: int = DEFAULT_CUTOFF, sturm: bool = False, cache=None) -> CaseResult:
    if sturm:
        cutoff = sturm_bound(N, p, k).bound
    primes = good_primes(N, p, cutoff)
    space = build_space(N, p, k, cache=cache)
    sub = pnew_cuspidal_plus(space)
    plus, minus = al_split(sub)
    log.info("N=%d p=%d k=%d: new dimension %d (+1: %d, -1: %d)", N, p, k, sub.dim, plus.dim, minus.dim)
    systems, exclusions, separating = [], [], {}
    for part in (plus, minus):
        res = extract(part, primes, M)
        systems += res.systems
        exclusions += res.exclusions
        separating[part.sign] = res.separating
    systems = label_systems(systems, smallest_good_prime(N, p))
    return CaseResult(
        N, p, k, M, cutoff, sturm, primes, systems, exclusions, separating,
        {"new": sub.dim, "plus": plus.dim, "minus": minus.dim},
    )
