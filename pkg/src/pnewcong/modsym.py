"""Weight-k modular symbols for Gamma_0(M), M squarefree, in the star = +1 quotient.

Manin symbols are pairs (i, (u:v)) standing for [X^i Y^(k-2-i), (u:v)]. A
2x2 integer matrix m = (a, b, c, d) acts on the right by

    [X^i Y^(k-2-i), (u:v)] . m = [(aX+bY)^i (cX+dY)^(k-2-i), (au+cv : bu+dv)].

Homogeneous polynomials of degree k-2 are stored as coefficient lists indexed
by the exponent of X, so ``P[j]`` is the coefficient of X^j Y^(k-2-j).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd

import flint

from . import linalg

log = logging.getLogger(__name__)

S_MAT = (0, -1, 1, 0)
T_MAT = (0, 1, -1, -1)
TT_MAT = (-1, -1, 1, 0)
STAR_MAT = (-1, 0, 0, 1)


class UnsupportedWeight(ValueError):
    pass


class UnsupportedLevel(ValueError):
    pass


def prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_prime(n: int) -> bool:
    return n >= 2 and prime_factors(n) == [n]


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(n**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
    return [i for i, f in enumerate(sieve) if f]


def gamma0_index(m: int) -> int:
    """[SL_2(Z) : Gamma_0(m)]."""
    out = Fraction(m)
    for q in prime_factors(m):
        out *= Fraction(q + 1, q)
    return int(out)


def xgcd(a: int, b: int):
    """(g, x, y) with a*x + b*y = g >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


class P1:
    """P^1(Z/m) with lexicographically least representatives under unit scaling."""

    def __init__(self, m: int):
        self.m = m
        units = [t for t in range(1, m + 1) if gcd(t, m) == 1] if m > 1 else [1]
        index: dict[tuple[int, int], int] = {}
        reps: list[tuple[int, int]] = []
        for u in range(m):
            for v in range(m):
                if (u, v) in index or gcd(gcd(u, v), m) != 1:
                    continue
                orbit = {((t * u) % m, (t * v) % m) for t in units}
                rep = min(orbit)
                if rep != (u, v):
                    continue
                for pt in orbit:
                    index[pt] = len(reps)
                reps.append(rep)
        if m == 1:
            reps, index = [(0, 0)], {(0, 0): 0}
        self.reps = reps
        self._index = index

    def __len__(self):
        return len(self.reps)

    def index(self, u: int, v: int) -> int:
        """Index of (u:v), or -1 if (u, v) is not a point of P^1(Z/m)."""
        return self._index.get((u % self.m, v % self.m), -1)

    def lift_to_sl2(self, u: int, v: int) -> tuple[int, int, int, int]:
        """(a, b, c, d) in SL_2(Z) with (c, d) = (u, v) mod m."""
        m = self.m
        c, d = u % m, v % m
        if m == 1:
            return (1, 0, 0, 1)
        if c == 0:
            c = m
        t = 0
        while gcd(c, d + t * m) != 1:
            t += 1
        d += t * m
        g, x, y = xgcd(d, -c)  # d*x - c*y = 1
        assert g == 1
        return (x, y, c, d)


def heilbronn_cremona(p: int) -> list[tuple[int, int, int, int]]:
    """Cremona's Heilbronn matrices of determinant p (p an odd prime or 2)."""
    if p == 2:
        return [(1, 0, 0, 2), (2, 0, 0, 1), (2, 1, 0, 1), (1, 0, 1, 2)]
    out = [(1, 0, 0, p)]
    for r in range(-(p // 2), p // 2 + 1):
        x1, x2, y1, y2 = p, -r, 0, 1
        a, b = -p, r
        out.append((x1, x2, y1, y2))
        while b != 0:
            q = _round_div(a, b)
            c = a - b * q
            a, b = -b, c
            x1, x2 = x2, q * x2 - x1
            y1, y2 = y2, q * y2 - y1
            out.append((x1, x2, y1, y2))
    return out


def _round_div(a: int, b: int) -> int:
    # nearest integer to a/b, halves rounded away from zero
    f = Fraction(a, b)
    q = int(abs(f) + Fraction(1, 2))
    return q if f >= 0 else -q


def heilbronn_merel(n: int) -> list[tuple[int, int, int, int]]:
    """Merel's set: ad - bc = n with a > b >= 0 and d > c >= 0."""
    out = []
    for a in range(1, n + 1):
        for b in range(a):
            # c < n / (a - b) keeps d > c possible
            c = 0
            while c * (a - b) < n:
                num = n + b * c
                if num % a == 0:
                    d = num // a
                    if d > c:
                        out.append((a, b, c, d))
                c += 1
    return out


def _linear_power(alpha: int, beta: int, e: int) -> flint.fmpz_poly:
    # (alpha*X + beta*Y)^e with Y = 1
    return flint.fmpz_poly([beta, alpha]) ** e


def apply_monomial(i: int, m: tuple[int, int, int, int], w: int) -> list[int]:
    """Coefficients of (aX+bY)^i (cX+dY)^(w-i), w = k - 2."""
    a, b, c, d = m
    poly = _linear_power(a, b, i) * _linear_power(c, d, w - i)
    coeffs = [int(x) for x in poly.coeffs()]
    return coeffs + [0] * (w + 1 - len(coeffs))


def substitute(poly: list[int], m: tuple[int, int, int, int]) -> list:
    """P(aX+bY, cX+dY) for a homogeneous polynomial P of degree len(poly)-1."""
    w = len(poly) - 1
    a, b, c, d = m
    acc = flint.fmpq_poly([])
    A = [flint.fmpq_poly([1])]
    lin = flint.fmpq_poly([b, a])
    for _ in range(w):
        A.append(A[-1] * lin)
    C = [flint.fmpq_poly([1])]
    lin = flint.fmpq_poly([d, c])
    for _ in range(w):
        C.append(C[-1] * lin)
    for j, coeff in enumerate(poly):
        if coeff:
            acc += A[j] * C[w - j] * _fq(coeff)
    out = [Fraction(int(x.p), int(x.q)) for x in acc.coeffs()]
    return out + [Fraction(0)] * (w + 1 - len(out))


def left_action(g: tuple[int, int, int, int], poly: list) -> list:
    """(gP)(X, Y) = P(dX - bY, -cX + aY)."""
    a, b, c, d = g
    return substitute(poly, (d, -b, -c, a))


def convergents(x: Fraction) -> list[tuple[int, int]]:
    """Continued-fraction convergents p_j/q_j of x, starting with j = 0."""
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0  # p_{-2}/q_{-2}, p_{-1}/q_{-1}
    num, den = x.numerator, x.denominator
    while True:
        a = num // den
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
        num, den = den, num - a * den
        if den == 0:
            return out


class ModSymSpace:
    """The +1 quotient of weight-k modular symbols for Gamma_0(level).

    Relations: x + x.S = 0, x + x.T + x.T^2 = 0, x - x.J = 0 with J the star
    matrix diag(-1, 1). The quotient basis consists of the non-pivot Manin
    generators of the reduced relation matrix.
    """

    def __init__(self, level: int, k: int, *, cache=None):
        if k % 2 or k < 2:
            raise UnsupportedWeight(f"weight {k} is not supported (even k >= 2 only)")
        if any(level % (q * q) == 0 for q in prime_factors(level)):
            raise UnsupportedLevel(f"level {level} is not squarefree")
        self.level = level
        self.k = k
        self.w = k - 2
        self.p1 = P1(level)
        self.npoints = len(self.p1)
        self.ngens = (k - 1) * self.npoints
        self.cache = cache
        self._hecke: dict[int, flint.fmpq_mat] = {}
        self._build_quotient()

    # -- generators -------------------------------------------------------
    def gen_index(self, i: int, pt: int) -> int:
        return i * self.npoints + pt

    def gen(self, idx: int) -> tuple[int, int]:
        return divmod(idx, self.npoints)

    def apply(self, idx: int, m) -> tuple[list[int], int]:
        """x . m for generator x: (polynomial coefficients, point index or -1)."""
        i, pt = self.gen(idx)
        u, v = self.p1.reps[pt]
        a, b, c, d = m
        target = self.p1.index(a * u + c * v, b * u + d * v)
        return apply_monomial(i, m, self.w), target

    # -- presentation -----------------------------------------------------
    def _relations(self) -> list[dict[int, int]]:
        rels = []
        for x in range(self.ngens):
            for mat, sign in ((S_MAT, 1), (STAR_MAT, -1)):
                poly, pt = self.apply(x, mat)
                row = {x: 1}
                for j, c in enumerate(poly):
                    if c:
                        y = self.gen_index(j, pt)
                        row[y] = row.get(y, 0) + sign * c
                rels.append(row)
            row = {x: 1}
            for mat in (T_MAT, TT_MAT):
                poly, pt = self.apply(x, mat)
                for j, c in enumerate(poly):
                    if c:
                        y = self.gen_index(j, pt)
                        row[y] = row.get(y, 0) + c
            rels.append(row)
        uniq = {}
        for r in rels:
            r = {key: val for key, val in r.items() if val}
            if r:
                uniq[tuple(sorted(r.items()))] = r
        return list(uniq.values())

    def _build_quotient(self):
        rels = self._relations()
        n = self.ngens
        mat = flint.fmpq_mat(len(rels), n)
        for i, r in enumerate(rels):
            for j, c in r.items():
                mat[i, j] = c
        red, rank, pivots = linalg.rref(mat)
        pivset = set(pivots)
        free = [j for j in range(n) if j not in pivset]
        col = {g: t for t, g in enumerate(free)}
        # R[g] = coordinates of generator g in the free basis
        R = flint.fmpq_mat(n, len(free))
        for g in free:
            R[g, col[g]] = 1
        for i, g in enumerate(pivots):
            for f in free:
                c = red[i, f]
                if c != 0:
                    R[g, col[f]] = -c
        self.free = free
        self.dim = len(free)
        self.R = R
        self.relation_count = len(rels)

    @cached_property
    def R_integral(self) -> tuple[list[list[int]], int]:
        den = linalg.common_denominator(self.R)
        rows = [[int(x * den) for x in row] for row in self.R.tolist()]
        return rows, den

    # -- reduction --------------------------------------------------------
    def reduce(self, vec: dict[int, object]) -> flint.fmpq_mat:
        """Row vector (1 x dim) of a free-module element {generator: coeff}."""
        out = flint.fmpq_mat(1, self.dim)
        for g, c in vec.items():
            if c:
                for j in range(self.dim):
                    r = self.R[g, j]
                    if r != 0:
                        out[0, j] += r * _fq(c)
        return out

    def reduce_many(self, vecs: list[dict[int, object]]) -> flint.fmpq_mat:
        big = flint.fmpq_mat(len(vecs), self.ngens)
        for i, vec in enumerate(vecs):
            for g, c in vec.items():
                if c:
                    big[i, g] = _fq(c)
        return big * self.R

    # -- operators --------------------------------------------------------
    def heilbronn_image(self, idx: int, mats) -> dict[int, int]:
        """sum over m of x . m for the generator x, as a free-module element."""
        acc: dict[int, flint.fmpz_poly] = {}
        i, pt = self.gen(idx)
        u, v = self.p1.reps[pt]
        w = self.w
        for a, b, c, d in mats:
            target = self.p1.index(a * u + c * v, b * u + d * v)
            if target < 0:
                continue
            poly = _linear_power(a, b, i) * _linear_power(c, d, w - i)
            if target in acc:
                acc[target] += poly
            else:
                acc[target] = poly
        out: dict[int, int] = {}
        for target, poly in acc.items():
            for j, c in enumerate(poly.coeffs()):
                if c:
                    out[self.gen_index(j, target)] = int(c)
        return out

    def hecke_matrix(self, n: int) -> flint.fmpq_mat:
        """T_n (U_n when n | level) on the quotient, for n prime."""
        if n in self._hecke:
            return self._hecke[n]
        key = ("hecke", self.level, self.k, n)
        m = self.cache.get(key) if self.cache is not None else None
        if m is None or m.nrows() != self.dim:
            if gcd(n, self.level) == 1:
                mats = heilbronn_cremona(n)
            else:
                mats = heilbronn_merel(n)
            m = self.reduce_many([self.heilbronn_image(g, mats) for g in self.free])
            if self.cache is not None:
                self.cache.put(key, m)
        self._hecke[n] = m
        return m

    def hecke_matrix_merel(self, n: int) -> flint.fmpq_mat:
        mats = heilbronn_merel(n)
        return self.reduce_many([self.heilbronn_image(g, mats) for g in self.free])

    def star_matrix(self) -> flint.fmpq_mat:
        return self.reduce_many([self.heilbronn_image(g, [STAR_MAT]) for g in self.free])

    # -- boundary ---------------------------------------------------------
    @cached_property
    def cusp_classes(self) -> list[int]:
        """Cusp classes of Gamma_0(level), labelled by d = gcd(denominator, level)."""
        return sorted(d for d in range(1, self.level + 1) if self.level % d == 0)

    def boundary_of_gen(self, idx: int) -> dict[int, int]:
        i, pt = self.gen(idx)
        u, v = self.p1.reps[pt]
        out: dict[int, int] = {}
        cl = self.cusp_classes
        if i == self.w:
            c = cl.index(gcd(u, self.level))
            out[c] = out.get(c, 0) + 1
        if i == 0:
            c = cl.index(gcd(v, self.level))
            out[c] = out.get(c, 0) - 1
        return out

    def boundary_matrix(self) -> flint.fmpq_mat:
        ncusps = len(self.cusp_classes)
        out = flint.fmpq_mat(self.dim, ncusps)
        for r, g in enumerate(self.free):
            for c, val in self.boundary_of_gen(g).items():
                out[r, c] += val
        return out

    # -- general matrices via modular symbols -----------------------------
    def modsym_to_manin(self, poly: list, alpha, beta) -> dict[int, Fraction]:
        """P{alpha, beta} as a free-module element; cusps are Fractions or None for oo."""
        out: dict[int, Fraction] = {}
        self._add_zero_to(out, poly, beta, 1)
        self._add_zero_to(out, poly, alpha, -1)
        return out

    def _add_zero_to(self, out, poly, x, sign):
        # P{0, x} = sum_j P{g_j 0, g_j oo} = sum_j [g_j^{-1} P, (c_j : d_j)]
        if x is None:
            mats = [(1, 0, 0, 1)]
        else:
            mats = [(1, 0, 0, 1)]
            conv = convergents(Fraction(x))
            prev = (1, 0)
            for j, (pj, qj) in enumerate(conv):
                s = -1 if j % 2 == 0 else 1  # (-1)^(j-1)
                mats.append((s * pj, prev[0], s * qj, prev[1]))
                prev = (pj, qj)
        for g in mats:
            a, b, c, d = g
            pt = self.p1.index(c, d)
            q = substitute(poly, g)
            for j, coeff in enumerate(q):
                if coeff:
                    key = self.gen_index(j, pt)
                    out[key] = out.get(key, 0) + sign * coeff

    def action_matrix(self, g, target: "ModSymSpace", scale=1) -> flint.fmpq_mat:
        """Matrix of x -> g.x from this space to ``target``, divided by ``scale``.

        g must carry Gamma_0(level) into Gamma_0(target.level) under conjugation.
        """
        rows = []
        for gen in self.free:
            i, pt = self.gen(gen)
            u, v = self.p1.reps[pt]
            h = self.p1.lift_to_sl2(u, v)
            mono = [0] * (self.w + 1)
            mono[i] = 1
            hp = left_action(h, mono)
            ghp = left_action(g, hp)
            a, b, c, d = _matmul(g, h)
            # g h {0, oo} = {g h 0, g h oo}
            rows.append(target.modsym_to_manin(ghp, _cusp(b, d), _cusp(a, c)))
        m = target.reduce_many(rows)
        if scale != 1:
            m = m * (flint.fmpq(1) / scale)
        return m

    def degeneracy_matrix(self, target: "ModSymSpace", t: int) -> flint.fmpq_mat:
        if self.level % (target.level * t):
            raise ValueError("t * target level must divide the level")
        if t == 1:
            rows = []
            for gen in self.free:
                i, pt = self.gen(gen)
                u, v = self.p1.reps[pt]
                rows.append({target.gen_index(i, target.p1.index(u, v)): 1})
            return target.reduce_many(rows)
        return self.action_matrix((t, 0, 0, 1), target)

    def atkin_lehner_matrix(self, q: int) -> flint.fmpq_mat:
        """w_q for a prime q exactly dividing the level, normalised to an involution."""
        m = self.level
        if m % q or (m // q) % q == 0:
            raise ValueError("q must exactly divide the level")
        g, x, y = xgcd(q, -(m // q))  # q*x - (m/q)*y = 1
        mat = (q * x, y, m, q)
        return self.action_matrix(mat, self, scale=q ** (self.w // 2))


def _fq(x) -> flint.fmpq:
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    return flint.fmpq(x)


def _matmul(g, h):
    a, b, c, d = g
    e, f, gg, hh = h
    return (a * e + b * gg, a * f + b * hh, c * e + d * gg, c * f + d * hh)


def _cusp(num: int, den: int):
    if den == 0:
        return None
    return Fraction(num, den)


# ---------------------------------------------------------------------------
# spaces of level Np and their distinguished subspaces


@dataclass(frozen=True, eq=False)
class Subspace:
    """A Hecke-stable subspace of a modular-symbol quotient.

    ``basis`` holds spanning row vectors in the coordinates of the ambient
    quotient. ``dual`` holds columns: functionals on the ambient quotient that
    vanish on a Hecke-stable complement and restrict to a basis of the dual of
    this subspace. Operators act on rows by v -> v*T and on functionals by
    phi -> T*phi.
    """

    ambient: ModSymSpace
    basis: flint.fmpq_mat
    dual: flint.fmpq_mat
    tags: frozenset

    @property
    def dim(self) -> int:
        return self.basis.nrows()

    @property
    def sign(self) -> int | None:
        for t in ("AL+1", "AL-1"):
            if t in self.tags:
                return 1 if t == "AL+1" else -1
        return None


def build_space(N: int, p: int, k: int, *, cache=None) -> ModSymSpace:
    """The +1 modular-symbol quotient of weight k for Gamma_0(Np)."""
    if k % 2 or k < 4:
        raise UnsupportedWeight(f"weight {k} is not supported (even k >= 4 only)")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if gcd(N, p) != 1:
        raise UnsupportedLevel("N and p must be coprime")
    space = ModSymSpace(N * p, k, cache=cache)
    space.N, space.p = N, p
    return space


def cuspidal_basis(space: ModSymSpace) -> flint.fmpq_mat:
    return linalg.left_kernel(space.boundary_matrix())


def degeneracy_kernel(space: ModSymSpace, basis: flint.fmpq_mat, q: int) -> flint.fmpq_mat:
    """Part of the row space of ``basis`` killed by both degeneracy maps to level/q."""
    lower = ModSymSpace(space.level // q, space.k)
    for t in (1, q):
        d = space.degeneracy_matrix(lower, t)
        basis = linalg.intersect(basis, linalg.left_kernel(d))
    return basis


def new_dual(space: ModSymSpace) -> flint.fmpq_mat:
    """Functionals on the ambient quotient supported on the new part.

    On the new subspace U_q^2 = q^(k-2) for each q | level; on old and
    Eisenstein parts U_q^2 - q^(k-2) is invertible. The kernel of the dual
    operator is therefore the annihilator of the old and Eisenstein parts.
    """
    n = space.dim
    cols = linalg.identity(n)
    for q in prime_factors(space.level):
        u = space.hecke_matrix(q)
        op = u * u - linalg.identity(n) * (q ** (space.k - 2))
        ker = linalg.right_kernel(op)
        cols = linalg.intersect(cols.transpose(), ker.transpose()).transpose()
    return cols


def pnew_cuspidal_plus(space: ModSymSpace) -> Subspace:
    """New cuspidal subspace of the +1 quotient, new at every prime of the level."""
    cache = space.cache
    key_b, key_d = ("new-basis", space.level, space.k), ("new-dual", space.level, space.k)
    basis = cache.get(key_b) if cache is not None else None
    dual = cache.get(key_d) if cache is not None else None
    if basis is None or dual is None or basis.ncols() != space.dim:
        basis = cuspidal_basis(space)
        for q in prime_factors(space.level):
            basis = degeneracy_kernel(space, basis, q)
        dual = new_dual(space)
        if cache is not None:
            cache.put(key_b, basis)
            cache.put(key_d, dual)
    if dual.ncols() != basis.nrows():
        raise ArithmeticError("new subspace and its dual have different dimensions")
    return Subspace(space, basis, dual, frozenset({"cuspidal", "p-new", "star-plus"}))


def hecke_matrix(sub: Subspace, ell: int) -> flint.fmpq_mat:
    """T_ell on ``sub`` in the basis ``sub.basis``."""
    return linalg.restrict(sub.basis, sub.ambient.hecke_matrix(ell))


def atkin_lehner_ambient(space: ModSymSpace, q: int | None = None) -> flint.fmpq_mat:
    q = space.p if q is None else q
    key = ("atkin-lehner", space.level, space.k, q)
    m = space.cache.get(key) if space.cache is not None else None
    if m is None or m.nrows() != space.dim:
        m = space.atkin_lehner_matrix(q)
        if space.cache is not None:
            space.cache.put(key, m)
    return m


def atkin_lehner_matrix(sub: Subspace, q: int | None = None) -> flint.fmpq_mat:
    """w_q (default q = p) on ``sub`` in the basis ``sub.basis``."""
    return linalg.restrict(sub.basis, atkin_lehner_ambient(sub.ambient, q))
