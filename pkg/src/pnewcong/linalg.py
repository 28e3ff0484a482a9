"""Exact linear algebra over Q (flint-backed) and over Z/p^W.

Vectors are rows throughout: a subspace is the row space of a matrix, and an
operator T acts by v -> v*T.
"""

from __future__ import annotations

from fractions import Fraction

import flint

from .padic import INF, vp_int


def qmat(rows, ncols: int | None = None) -> flint.fmpq_mat:
    rows = [list(r) for r in rows]
    if not rows:
        return flint.fmpq_mat(0, ncols or 0)
    return flint.fmpq_mat(rows)


def to_fractions(m: flint.fmpq_mat) -> list[list[Fraction]]:
    return [[Fraction(int(x.p), int(x.q)) for x in row] for row in m.tolist()]


def rref(m: flint.fmpq_mat):
    """Reduced echelon form, rank and pivot columns."""
    r, rank = m.rref()
    pivots = []
    col = 0
    for i in range(rank):
        while r[i, col] == 0:
            col += 1
        pivots.append(col)
        col += 1
    return r, rank, pivots


def left_kernel(m: flint.fmpq_mat) -> flint.fmpq_mat:
    """Basis (as rows) of {v : v*m = 0}, in echelon form."""
    return _kernel_rows(m.transpose())


def right_kernel(m: flint.fmpq_mat) -> flint.fmpq_mat:
    """Basis (as columns) of {x : m*x = 0}."""
    return _kernel_rows(m).transpose()


def _kernel_rows(m: flint.fmpq_mat) -> flint.fmpq_mat:
    # rows spanning {x : m*x = 0}
    ncols = m.ncols()
    if m.nrows() == 0:
        return identity(ncols)
    r, rank, pivots = rref(m)
    free = [j for j in range(ncols) if j not in set(pivots)]
    basis = []
    for f in free:
        v = [0] * ncols
        v[f] = 1
        for i, pc in enumerate(pivots):
            v[pc] = -r[i, f]
        basis.append(v)
    out = qmat(basis, ncols)
    return echelon(out) if basis else out


def echelon(m: flint.fmpq_mat) -> flint.fmpq_mat:
    r, rank, _ = rref(m)
    return qmat([[r[i, j] for j in range(r.ncols())] for i in range(rank)], r.ncols())


def identity(n: int) -> flint.fmpq_mat:
    return qmat([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)


def rows_of(m: flint.fmpq_mat, idx) -> flint.fmpq_mat:
    return qmat([[m[i, j] for j in range(m.ncols())] for i in idx], m.ncols())


def stack(a: flint.fmpq_mat, b: flint.fmpq_mat) -> flint.fmpq_mat:
    rows = [[a[i, j] for j in range(a.ncols())] for i in range(a.nrows())]
    rows += [[b[i, j] for j in range(b.ncols())] for i in range(b.nrows())]
    return qmat(rows, a.ncols())


def intersect(a: flint.fmpq_mat, b: flint.fmpq_mat) -> flint.fmpq_mat:
    """Row-space intersection."""
    if a.nrows() == 0 or b.nrows() == 0:
        return qmat([], a.ncols())
    # x*a = y*b  <=>  (x, -y) in left kernel of [a; b]
    k = left_kernel(stack(a, b))
    if k.nrows() == 0:
        return qmat([], a.ncols())
    coeffs = qmat([[k[i, j] for j in range(a.nrows())] for i in range(k.nrows())], a.nrows())
    return echelon(coeffs * a)


def restrict(basis: flint.fmpq_mat, op: flint.fmpq_mat) -> flint.fmpq_mat:
    """Matrix of op on the invariant row space of ``basis`` (in that basis).

    Raises ValueError if the row space is not invariant.
    """
    image = basis * op
    _, _, piv = rref(basis)
    sub_b = qmat([[basis[i, j] for j in piv] for i in range(basis.nrows())], len(piv))
    sub_i = qmat([[image[i, j] for j in piv] for i in range(image.nrows())], len(piv))
    x = sub_i * sub_b.inv()
    if x * basis != image:
        raise ValueError("subspace is not invariant under the operator")
    return x


def coordinates(basis: flint.fmpq_mat, vectors: flint.fmpq_mat) -> flint.fmpq_mat:
    """Coordinates of rows of ``vectors`` with respect to the rows of ``basis``."""
    _, _, piv = rref(basis)
    sub_b = qmat([[basis[i, j] for j in piv] for i in range(basis.nrows())], len(piv))
    sub_v = qmat([[vectors[i, j] for j in piv] for i in range(vectors.nrows())], len(piv))
    x = sub_v * sub_b.inv()
    if x * basis != vectors:
        raise ValueError("vectors are not in the span")
    return x


def charpoly(m: flint.fmpq_mat) -> flint.fmpq_poly:
    return m.charpoly()


def common_denominator(m: flint.fmpq_mat) -> int:
    den = 1
    for x in m.entries():
        q = int(x.q)
        den = den * q // _gcd(den, q)
    return den


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def integral_rows(m: flint.fmpq_mat) -> list[list[int]]:
    """Rows scaled by the common denominator, as Python ints."""
    den = common_denominator(m)
    return [[int(x * den) for x in row] for row in m.tolist()]


# ---------------------------------------------------------------------------
# Z/p^W arithmetic


def mod_rows(m: flint.fmpq_mat, p: int, w: int) -> list[list[int]]:
    """Reduce a p-integral rational matrix modulo p^w."""
    mod = p**w
    out = []
    for row in m.tolist():
        r = []
        for x in row:
            q = int(x.q)
            if q % p == 0:
                raise ValueError("matrix is not p-integral")
            r.append(int(x.p) * pow(q, -1, mod) % mod)
        out.append(r)
    return out


def fp_rank(rows: list[list[int]], p: int) -> int:
    return len(fp_echelon(rows, p)[1])


def fp_echelon(rows: list[list[int]], p: int):
    """Row echelon form over F_p; returns (rows, pivots)."""
    a = [[x % p for x in r] for r in rows]
    pivots = []
    if not a:
        return a, pivots
    ncols = len(a[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, p)
        a[r] = [x * inv % p for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def fp_left_kernel(rows: list[list[int]], p: int) -> list[list[int]]:
    """Basis of {c : sum_i c_i rows_i = 0 mod p}."""
    n = len(rows)
    if n == 0:
        return []
    aug = [[x % p for x in r] + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(rows)]
    ncols = len(rows[0])
    ech, pivots = fp_echelon(aug, p)
    return [r[ncols:] for r, pc in zip(ech, pivots) if pc >= ncols]


def saturate_columns(cols: list[list[int]], p: int) -> list[list[int]]:
    """p-saturate the lattice spanned by integer column vectors.

    ``cols`` is a list of columns (each a list of ints). Returns columns whose
    reduction mod p is linearly independent and spanning the same Q-space, the
    lattice equal to (Q-span) intersected with Z_(p)^m.
    """
    cols = [list(c) for c in cols]
    while True:
        deps = fp_left_kernel(cols, p)
        if not deps:
            return cols
        c = deps[0]
        j = next(i for i, x in enumerate(c) if x % p)
        inv = pow(c[j], -1, p)
        c = [x * inv % p for x in c]
        new = [sum(ci * col[r] for ci, col in zip(c, cols)) for r in range(len(cols[0]))]
        assert all(x % p == 0 for x in new)
        cols[j] = [x // p for x in new]


def padic_kernel_vector(a: list[list[int]], p: int, w: int):
    """A generator of the kernel of a square matrix over Z_p with 1-dim kernel.

    The matrix is known modulo p^w. Gaussian elimination with minimal-valuation
    (full) pivoting; returns (vector, precision) where the vector has a unit
    coordinate and is correct modulo p^precision.
    """
    mod = p**w
    n = len(a)
    m = [[x % mod for x in row] for row in a]
    rowp = list(range(n))
    colp = list(range(n))
    loss = 0
    for step in range(n - 1):
        best = None
        for i in range(step, n):
            for j in range(step, n):
                x = m[rowp[i]][colp[j]]
                v = vp_int(x, p) if x else INF
                if best is None or v < best[0]:
                    best = (v, i, j)
                    if v == 0:
                        break
            if best[0] == 0:
                break
        v, i, j = best
        if v == INF:
            raise ValueError("kernel has dimension > 1 at this precision")
        rowp[step], rowp[i] = rowp[i], rowp[step]
        colp[step], colp[j] = colp[j], colp[step]
        loss += v
        pr = m[rowp[step]]
        piv = pr[colp[step]]
        unit_inv = pow(piv // p**v, -1, mod)
        for ii in range(step + 1, n):
            row = m[rowp[ii]]
            x = row[colp[step]]
            if not x:
                continue
            # x is divisible by p^v since the pivot had minimal valuation
            f = (x // p**v) * unit_inv % mod
            m[rowp[ii]] = [(y - f * z) % mod for y, z in zip(row, pr)]
    # back substitution with the last column free
    sol = [0] * n
    sol[colp[n - 1]] = 1
    prec = w - loss
    for step in range(n - 2, -1, -1):
        row = m[rowp[step]]
        piv = row[colp[step]]
        v = vp_int(piv, p)
        s = -sum(row[colp[t]] * sol[colp[t]] for t in range(step + 1, n)) % mod
        if s % p**v:
            # inconsistent only beyond the tracked precision
            s -= s % p**v
        sol[colp[step]] = (s // p**v) * pow(piv // p**v, -1, mod) % mod
    # normalise: divide by the coordinate of minimal valuation (lowest index on ties)
    vals = [vp_int(x % p**prec, p) if x % p**prec else INF for x in sol]
    vmin = min(vals)
    if vmin == INF:
        raise ValueError("kernel vector vanished at working precision")
    idx = vals.index(vmin)
    if vmin:
        sol = [x // p**vmin if x % p**vmin == 0 else x for x in sol]
        prec -= vmin
        sol = [x % p**prec for x in sol]
    mp = p**prec
    inv = pow(sol[idx] % mp, -1, mp)
    sol = [x * inv % mp for x in sol]
    return sol, prec, idx
