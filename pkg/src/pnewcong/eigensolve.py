"""Z_p-valued Hecke eigensystems on p-new subspaces, to precision p^M.

For each sign subspace we find a separating operator A with squarefree
characteristic polynomial, take its roots in Z_p, and for each root build a
Hecke eigen-functional Psi on the Manin generators, correct modulo p^W. Then
a_ell = Psi(x T_ell) / Psi(x) for one generator x with Psi(x) a unit. Only a
single generator is pushed through the Heilbronn matrices per prime, so the
cost per ell is one sparse polynomial expansion rather than a full Hecke
matrix.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path

import flint

from . import linalg
from .modsym import (
    ModSymSpace,
    Subspace,
    atkin_lehner_ambient,
    heilbronn_cremona,
    heilbronn_merel,
    is_prime,
    primes_up_to,
)
from .padic import IntPoly, hensel_roots, vp_int

log = logging.getLogger(__name__)

ARCHIVE_FORMAT = "pnewcong-eigensystems"
ARCHIVE_VERSION = 1


class AssumptionViolation(ArithmeticError):
    """Part of a Hecke module is not defined over Z_p.

    ``degree`` counts the eigenvalues (over an algebraic closure) that do not
    lie in Q_p for the offending characteristic-polynomial factor.
    """

    def __init__(self, degree: int, factor=None, sign: int | None = None):
        self.degree = degree
        self.factor = factor
        self.sign = sign
        super().__init__(
            f"Hecke field does not split completely at p: a factor leaves {degree} "
            f"eigenvalue(s) outside Q_p (sign {sign})"
        )


@dataclass(frozen=True)
class Eigensystem:
    p: int
    k: int
    N: int
    index: int
    eps: int
    ap: int
    aell: dict
    precision: int

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        if self.ap * self.ap != self.p ** (self.k - 2):
            raise ValueError("|a_p| must equal p^((k-2)/2)")
        mod = self.p**self.precision
        for ell, a in self.aell.items():
            if not 0 <= a < mod:
                raise ValueError(f"a_{ell} = {a} is not a residue mod p^{self.precision}")

    def with_index(self, index: int) -> "Eigensystem":
        return Eigensystem(self.p, self.k, self.N, index, self.eps, self.ap, self.aell, self.precision)


@dataclass
class EigenResult:
    systems: list
    exclusions: list = field(default_factory=list)
    separating: dict = field(default_factory=dict)


def ap_and_sign(e: Eigensystem) -> tuple[int, int]:
    return -e.eps * e.p ** ((e.k - 2) // 2), e.eps


def ap_from_sign(eps: int, p: int, k: int) -> int:
    return -eps * p ** ((k - 2) // 2)


# ---------------------------------------------------------------------------
# sign splitting


def _sign_part(sub: Subspace, w_rows: flint.fmpq_mat, eps: int) -> Subspace:
    n = sub.ambient.dim
    ident = linalg.identity(n)
    op = w_rows - ident * eps
    basis = linalg.intersect(sub.basis, linalg.left_kernel(op))
    # functionals: phi in the dual with w phi = eps phi
    dual_cols = linalg.intersect(
        sub.dual.transpose(), linalg.right_kernel(op).transpose()
    ).transpose() if sub.dual.ncols() else sub.dual
    tag = "AL+1" if eps == 1 else "AL-1"
    return Subspace(sub.ambient, basis, dual_cols, sub.tags | {tag})


def al_split(sub: Subspace) -> tuple[Subspace, Subspace]:
    """(+1, -1) eigenspaces of w_p on a p-new subspace."""
    w = atkin_lehner_ambient(sub.ambient)
    plus, minus = _sign_part(sub, w, 1), _sign_part(sub, w, -1)
    if plus.dim + minus.dim != sub.dim:
        raise ArithmeticError("w_p does not split the subspace")
    return plus, minus


# ---------------------------------------------------------------------------
# separating operator


def _integer_charpoly(m: flint.fmpq_mat) -> flint.fmpz_poly:
    cp = m.charpoly()
    coeffs = []
    for c in cp.coeffs():
        if c.q != 1:
            raise ArithmeticError("Hecke characteristic polynomial is not integral")
        coeffs.append(int(c.p))
    return flint.fmpz_poly(coeffs)


def _squarefree(f: flint.fmpz_poly) -> bool:
    return f.degree() <= 1 or f.discriminant() != 0


def separating_operator(sub: Subspace, *, max_prime: int = 50):
    """((ell, c) pairs, restricted matrix, integer char poly) for a separating A.

    Search order: T_2, T_5, T_7, ... (primes not dividing the level) up to
    ``max_prime``, then T_a + c*T_b for c in 1, 2, 3.
    """
    space = sub.ambient
    good = [q for q in primes_up_to(max_prime) if space.level % q]
    mats = {}

    def restricted(ell):
        if ell not in mats:
            mats[ell] = linalg.restrict(sub.basis, space.hecke_matrix(ell))
        return mats[ell]

    for ell in good:
        m = restricted(ell)
        f = _integer_charpoly(m)
        if _squarefree(f):
            return ((ell, 1),), m, f
    for i, a in enumerate(good):
        for b in good[i + 1 :]:
            for c in (1, 2, 3):
                m = restricted(a) + restricted(b) * c
                f = _integer_charpoly(m)
                if _squarefree(f):
                    return ((a, 1), (b, c)), m, f
    raise ArithmeticError("no separating Hecke operator found")


# ---------------------------------------------------------------------------
# eigen-functionals


def _primitive_integer_columns(m: flint.fmpq_mat) -> list[list]:
    cols = []
    for j in range(m.ncols()):
        col = [m[i, j] for i in range(m.nrows())]
        den = 1
        for x in col:
            den = den * int(x.q) // gcd(den, int(x.q))
        ints = [int(x * den) for x in col]
        g = 0
        for x in ints:
            g = gcd(g, x)
        cols.append([x // g for x in ints])
    return cols


class _FunctionalLattice:
    """p-saturated lattice of functionals on one sign subspace.

    ``values`` holds one column per basis functional: its values on all Manin
    generators, integral and independent modulo p. ``coords`` expresses the
    same functionals in ambient dual coordinates.
    """

    def __init__(self, sub: Subspace, p: int):
        space = sub.ambient
        self.p = p
        rows, den = space.R_integral
        r_int = flint.fmpz_mat(rows)
        # columns of dual are functionals on the quotient; scale to integers
        dual_cols = _primitive_integer_columns(sub.dual)
        d = flint.fmpz_mat([list(x) for x in zip(*dual_cols)]) if dual_cols else None
        vals = r_int * d  # ngens x r, equals den * R * dual (scaled)
        cols = [[int(vals[i, j]) for i in range(vals.nrows())] for j in range(vals.ncols())]
        coords = [list(c) for c in dual_cols]
        # record the combination so values and coords stay in sync
        cols, coords = _saturate_pair(cols, coords, p)
        self.values = cols
        self.coords = coords
        self.dual_scale = den
        self.dim = len(cols)

    def operator(self, space: ModSymSpace, op: flint.fmpq_mat) -> list[list[int]]:
        """Integral matrix B with op * coords = coords * B (columns convention)."""
        c = flint.fmpq_mat([list(x) for x in zip(*self.coords)])
        image = op * c
        # solve c * B = image using rows: B^T c^T = image^T
        bt = linalg.coordinates(c.transpose(), image.transpose())
        b = bt.transpose()
        out = []
        for i in range(b.nrows()):
            row = []
            for j in range(b.ncols()):
                x = b[i, j]
                if int(x.q) % self.p == 0:
                    raise ArithmeticError("operator is not p-integral on the saturated lattice")
                row.append(x)
            out.append(row)
        return out


def _saturate_pair(cols, coords, p):
    # as linalg.saturate_columns, carrying the ambient coordinates along
    cols = [list(c) for c in cols]
    coords = [[flint.fmpq(x) for x in c] for c in coords]
    while True:
        deps = linalg.fp_left_kernel(cols, p)
        if not deps:
            return cols, coords
        c = deps[0]
        j = next(i for i, x in enumerate(c) if x % p)
        inv = pow(c[j], -1, p)
        c = [x * inv % p for x in c]
        new = [sum(ci * col[r] for ci, col in zip(c, cols)) for r in range(len(cols[0]))]
        newc = [sum((coord[r] * ci for ci, coord in zip(c, coords)), flint.fmpq(0)) for r in range(len(coords[0]))]
        cols[j] = [x // p for x in new]
        coords[j] = [x / p for x in newc]


def _mod_matrix(rows, p, w):
    mod = p**w
    out = []
    for row in rows:
        out.append([int(x.p) * pow(int(x.q), -1, mod) % mod for x in row])
    return out


class EigenFunctional:
    """Psi on the Manin generators with Psi . T_ell = a_ell Psi, modulo p^prec."""

    def __init__(self, space: ModSymSpace, values: list[int], p: int, prec: int):
        self.space = space
        self.p = p
        self.prec = prec
        self.mod = p**prec
        self.values = values
        # evaluation generator: unit value, preferring pure powers of X or Y
        w = space.w
        best = None
        for idx, v in enumerate(values):
            if v % p:
                i, _ = space.gen(idx)
                rank = 0 if i in (0, w) else 1
                if best is None or rank < best[0]:
                    best = (rank, idx)
                    if rank == 0:
                        break
        if best is None:
            raise ArithmeticError("eigen-functional vanishes modulo p")
        self.gen = best[1]
        self.inv = pow(values[self.gen], -1, self.mod)

    def eigenvalue(self, ell: int) -> int:
        space = self.space
        mats = heilbronn_cremona(ell) if space.level % ell else heilbronn_merel(ell)
        image = space.heilbronn_image(self.gen, mats)
        vals = self.values
        acc = 0
        for g, c in image.items():
            acc += c * vals[g]
        return acc * self.inv % self.mod


def _padic_roots(factors, p: int, w: int):
    """Q_p-rational roots (mod p^w) of the factors, plus unsplit degree per factor."""
    roots, missing = [], []
    for g, _mult in factors:
        if g.degree() == 1:
            c0, c1 = (int(c) for c in g.coeffs())
            if c1 % p == 0:
                raise ArithmeticError("separating eigenvalue is not p-integral")
            roots.append(-c0 * pow(c1, -1, p**w) % p**w)
            continue
        found = hensel_roots(IntPoly.from_flint(g), p, w)
        roots.extend(found)
        if len(found) < g.degree():
            missing.append((g, g.degree() - len(found)))
    return roots, missing


def _functionals_for_sign(sub: Subspace, p: int, M: int, *, guard: int = 4, max_doublings: int = 6):
    """Eigen-functionals for the Q_p-rational eigenvalues of the separating operator.

    Returns (list of (root, EigenFunctional), exclusions, separating info).
    """
    space = sub.ambient
    combo, _, f = separating_operator(sub)
    lattice = _FunctionalLattice(sub, p)
    a_amb = sum((space.hecke_matrix(ell) * c for ell, c in combo[1:]), space.hecke_matrix(combo[0][0]) * combo[0][1])
    b = lattice.operator(space, a_amb)
    _, factors = f.factor()
    vdisc = vp_int(int(f.discriminant()), p) if f.degree() > 1 else 0
    w = M + vdisc + guard
    for _ in range(max_doublings):
        roots, missing = _padic_roots(factors, p, w)
        out = []
        for r in roots:
            mod = p**w
            bm = _mod_matrix(b, p, w)
            for i in range(len(bm)):
                bm[i][i] = (bm[i][i] - r) % mod
            # B psi = lambda psi on coordinate columns
            vec, prec, _ = linalg.padic_kernel_vector(bm, p, w)
            if prec < M + 1:
                break
            mod = p**prec
            values = [sum(x * y for x, y in zip(row, vec)) % mod for row in zip(*lattice.values)]
            out.append((r % p**M, EigenFunctional(space, values, p, prec)))
        if len(out) == len(roots):
            break
        w *= 2
        log.info("raising working precision to %d", w)
    else:
        raise ArithmeticError("eigenvector precision did not reach the target")
    exclusions = [AssumptionViolation(d, factor=g, sign=sub.sign) for g, d in missing]
    for exc in exclusions:
        log.warning("%s", exc)
    info = {"operator": combo, "charpoly_degree": f.degree(), "disc_valuation": vdisc, "working_precision": w}
    return out, exclusions, info


def extract(sign_sub: Subspace, primes: list[int], M: int) -> EigenResult:
    """Eigensystems of a sign subspace, plus any assumption exclusions."""
    space = sign_sub.ambient
    p, k = space.p, space.k
    N = space.level // p
    eps = sign_sub.sign
    if eps is None:
        raise ValueError("subspace carries no Atkin-Lehner sign")
    if sign_sub.dim == 0:
        return EigenResult([], [], {})
    bad = [ell for ell in primes if not is_prime(ell) or space.level % ell == 0]
    if bad:
        raise ValueError(f"primes must not divide the level: {bad}")
    funcs, exclusions, info = _functionals_for_sign(sign_sub, p, M)
    mod = p**M
    systems = []
    for _root, psi in funcs:
        aell = {ell: psi.eigenvalue(ell) % mod for ell in primes}
        systems.append(Eigensystem(p, k, N, -1, eps, ap_from_sign(eps, p, k), aell, M))
    return EigenResult(systems, exclusions, info)


def eigensystems(sign_sub: Subspace, primes: list[int], M: int, *, strict: bool = False) -> list[Eigensystem]:
    """Eigensystems of a sign subspace; with ``strict`` an exclusion raises."""
    res = extract(sign_sub, primes, M)
    if strict and res.exclusions:
        raise res.exclusions[0]
    return res.systems


def _digits(a: int, p: int, n: int) -> tuple:
    out = []
    for _ in range(n):
        a, r = divmod(a, p)
        out.append(r)
    return tuple(out)


def label_systems(systems: list[Eigensystem], ell0: int) -> list[Eigensystem]:
    """Stable labels: sort by (eps, a_ell0 residue) and number from 0.

    Residues are compared p-adically, lowest digit first, so the order does
    not depend on the precision once the residues are distinct. Ties go to the
    remaining primes in increasing order.
    """
    if not systems:
        return []
    e0 = systems[0]
    rest = sorted(ell for ell in e0.aell if ell != ell0)

    def key(e):
        return (e.eps,) + tuple(_digits(e.aell[ell], e.p, e.precision) for ell in [ell0] + rest)

    return [e.with_index(i) for i, e in enumerate(sorted(systems, key=key))]


def smallest_good_prime(N: int, p: int) -> int:
    ell = 2
    while not is_prime(ell) or (N * p) % ell == 0:
        ell += 1
    return ell


# ---------------------------------------------------------------------------
# archive


def archive_dict(systems: list[Eigensystem], *, N: int, p: int, k: int, M: int, cutoff, exclusions=()) -> dict:
    return {
        "format": ARCHIVE_FORMAT,
        "version": ARCHIVE_VERSION,
        "N": N,
        "p": p,
        "k": k,
        "M": M,
        "cutoff": cutoff,
        "exclusions": [{"degree": e.degree, "sign": e.sign} for e in exclusions],
        "forms": [
            {
                "index": e.index,
                "eps": e.eps,
                "ap": e.ap,
                "aell": [[ell, a] for ell, a in sorted(e.aell.items())],
            }
            for e in sorted(systems, key=lambda e: e.index)
        ],
    }


def write_archive(path, systems, **meta) -> bytes:
    data = json.dumps(archive_dict(systems, **meta), indent=1, sort_keys=True).encode("ascii") + b"\n"
    Path(path).write_bytes(data)
    return data


def read_archive(path) -> tuple[dict, list[Eigensystem]]:
    d = json.loads(Path(path).read_text(encoding="ascii"))
    if d.get("format") != ARCHIVE_FORMAT:
        raise ValueError(f"{path} is not an eigensystem archive")
    if d.get("version") != ARCHIVE_VERSION:
        raise ValueError(f"unsupported archive version {d.get('version')}")
    systems = [
        Eigensystem(
            d["p"], d["k"], d["N"], f["index"], f["eps"], int(f["ap"]),
            {int(ell): int(a) for ell, a in f["aell"]}, d["M"],
        )
        for f in d["forms"]
    ]
    meta = {key: d[key] for key in ("N", "p", "k", "M", "cutoff")}
    meta["exclusions"] = d.get("exclusions", [])
    return meta, systems
