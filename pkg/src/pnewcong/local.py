"""Semistable parameters (k, L, eps), the constant C_{p,k} and local congruence predicates."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .modsym import is_prime
from .padic import INF, AtLeast, InsufficientPrecision, PadicNumber


class PreconditionViolated(ValueError):
    def __init__(self, clause: str):
        self.clause = clause
        super().__init__(f"precondition failed: {clause}")


class _LInfinity:
    """The point L = oo of P^1 (the crystalline case)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "L_INFINITY"


L_INFINITY = _LInfinity()


def c_constant(p: int, k: int) -> int:
    """floor(log_p((k-2)/(p-1))) + 5, by exact comparison with powers of p."""
    if k <= 2:
        raise ValueError("k must be > 2")
    x = Fraction(k - 2, p - 1)
    j = 0
    while Fraction(p) ** (j + 1) <= x:
        j += 1
    while Fraction(p) ** j > x:
        j -= 1
    return j + 5


def is_admissible(vL, p: int, k: int) -> bool:
    """v_p(L) < -C_{p,k} (strict). L = oo is never admissible."""
    if vL is L_INFINITY:
        return False
    return vL < -c_constant(p, k)


def equidistribution_interval(p: int, k: int) -> tuple[Fraction, int]:
    return Fraction(-k * (p - 1), 2 * (p + 1)), 0


@dataclass(frozen=True)
class SemistableParams:
    p: int
    k: int
    eps: int
    L: object  # PadicNumber or L_INFINITY

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.k % 2 or self.k <= 2:
            raise ValueError("k must be even and > 2")
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        if self.L is not L_INFINITY:
            if not isinstance(self.L, PadicNumber) or self.L.p != self.p:
                raise ValueError("L must be a PadicNumber at p or L_INFINITY")

    @property
    def crystalline(self) -> bool:
        return self.L is L_INFINITY


@dataclass(frozen=True)
class PhiNData:
    """(phi, N, Fil) data of D_{k,L,eps} in the basis (e1, e2).

    ``phi`` is stored as the exponent of varpi (varpi^2 = p) together with the
    scalar in front, exactly as printed; ``phi_matrix`` evaluates it for even
    k. ``fil_line`` is the pair of coordinates spanning Fil^i for 1 <= i <= k-1.
    """

    k: int
    p: int
    phi_scalar: int
    phi_varpi_exponent: int
    monodromy: tuple
    fil_line: tuple

    @property
    def phi_matrix(self) -> tuple:
        if self.phi_varpi_exponent % 2:
            raise ValueError("varpi^odd is not rational")
        c = self.phi_scalar * self.p ** (self.phi_varpi_exponent // 2)
        return ((c, 0), (0, c))

    def fil_dimension(self, i: int) -> int:
        if i <= 0:
            return 2
        if i <= self.k - 1:
            return 1
        return 0

    @property
    def fil_jumps(self) -> tuple:
        # i with Fil^i != Fil^(i+1)
        return tuple(i for i in range(-1, self.k + 1) if self.fil_dimension(i) != self.fil_dimension(i + 1))

    def monodromy_squared_zero(self) -> bool:
        (a, b), (c, d) = self.monodromy
        return (a * a + b * c, a * b + b * d, c * a + d * c, c * b + d * d) == (0, 0, 0, 0)

    def det_phi(self) -> int:
        (a, b), (c, d) = self.phi_matrix
        return a * d - b * c

    def satisfies_monodromy_relation(self) -> bool:
        """Whether N phi = p phi N holds for the stored matrices.

        The matrices are kept as printed; with phi scalar this holds only when
        N = 0. Reported, never enforced.
        """
        phi = self.phi_matrix
        n = self.monodromy
        lhs = _mat_mul(n, phi)
        rhs = _mat_mul(phi, n)
        rhs = tuple(tuple(self.p * x for x in row) for row in rhs)
        return lhs == rhs


def _mat_mul(a, b):
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(2)) for j in range(2)) for i in range(2)
    )


def phi_n_module(params: SemistableParams) -> PhiNData:
    k, p = params.k, params.p
    if params.crystalline:
        return PhiNData(k, p, 1, k - 2, ((0, 0), (0, 0)), (1, 1))
    return PhiNData(k, p, params.eps, k - 2, ((0, 0), (1, 0)), (1, params.L))


def check_phi_n(data: PhiNData, params: SemistableParams) -> list[str]:
    """Invariant violations (empty when the data is consistent)."""
    problems = []
    if not data.monodromy_squared_zero():
        problems.append("N^2 != 0")
    nonzero = any(x for row in data.monodromy for x in row)
    if nonzero == params.crystalline:
        problems.append("N != 0 must hold exactly when L is finite")
    if data.fil_jumps != (0, params.k - 1):
        problems.append(f"filtration jumps {data.fil_jumps}")
    if abs(data.det_phi()) != params.p ** (params.k - 2):
        problems.append("det(phi) != +-p^(k-2)")
    return problems


def same_sign_depth(L0: PadicNumber, L1: PadicNumber, p: int, k: int):
    """h = v_p(L0 - L1) - v_p(L0) when it is at least 2, else None.

    Equal values (to the stored precision) give an ``AtLeast`` bound.
    """
    if k % 2 or not 2 < k < p:
        raise PreconditionViolated("k even with 2 < k < p")
    for L in (L0, L1):
        if L is L_INFINITY or not isinstance(L, PadicNumber):
            raise PreconditionViolated("L0 and L1 finite p-adic numbers")
    n = L0.valuation
    if n == INF:
        raise PreconditionViolated("L0 nonzero")
    if not (-(k // 2) + 2 <= n < 0):
        raise PreconditionViolated("-k/2 + 2 <= v_p(L0) < 0")
    try:
        v = (L0 - L1).valuation
    except InsufficientPrecision as exc:
        return AtLeast(exc.lower_bound - n)
    h = v - n
    return h if h >= 2 else None


def opposite_sign_predicted_depth(L, Lp, p: int, k: int):
    """-v_p(L) + 1 when L, L' are admissible and v_p(L + L') >= -C_{p,k}; else None."""
    if L is L_INFINITY or Lp is L_INFINITY:
        return None
    if not (is_admissible(L.valuation, p, k) and is_admissible(Lp.valuation, p, k)):
        return None
    c = c_constant(p, k)
    try:
        vs = (L + Lp).valuation
    except InsufficientPrecision as exc:
        if exc.lower_bound >= -c:
            vs = exc.lower_bound
        else:
            raise InsufficientPrecision(
                f"v_p(L + L') is only known to be >= {exc.lower_bound}, need to compare with {-c}",
                lower_bound=exc.lower_bound,
            ) from None
    if vs >= -c:
        return -L.valuation + 1
    return None
