"""p-adic valuations, residues, Newton polygons and root lifting over Z_p."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import flint

INF = float("inf")

Valuation = Union[int, float]  # float only for INF


class PadicError(ArithmeticError):
    pass


class NotSquarefree(PadicError):
    pass


class PrecisionExhausted(PadicError):
    pass


class InsufficientPrecision(PadicError):
    """A valuation could not be resolved at the available precision.

    ``lower_bound`` is the absolute precision up to which the quantity is known
    to vanish, so its valuation is at least that.
    """

    def __init__(self, msg: str, lower_bound: int | None = None):
        super().__init__(msg)
        self.lower_bound = lower_bound


@dataclass(frozen=True, order=True)
class AtLeast:
    """An exponent known only as a lower bound, e.g. a depth equal to the precision."""

    value: int

    def __str__(self):
        return f">={self.value}"


def vp(x, p: int) -> Valuation:
    """Exact p-adic valuation of an integer or rational; ``INF`` for zero."""
    x = Fraction(x)
    if x == 0:
        return INF
    num, den = x.numerator, x.denominator
    v = 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def vp_int(n: int, p: int, cap: int | None = None) -> Valuation:
    """Valuation of an integer, optionally capped (returns ``cap`` when p^cap | n)."""
    if n == 0:
        return INF if cap is None else cap
    v = 0
    while n % p == 0:
        n //= p
        v += 1
        if cap is not None and v >= cap:
            return cap
    return v


def residue(x, p: int, m: int) -> int:
    """Image of a p-integral rational in Z/p^m."""
    x = Fraction(x)
    mod = p**m
    if x.denominator % p == 0:
        raise PadicError(f"{x} is not {p}-integral")
    return x.numerator * pow(x.denominator, -1, mod) % mod


@dataclass(frozen=True, eq=False)
class PadicNumber:
    """p^valuation * mantissa, the mantissa a unit known modulo p^precision."""

    p: int
    valuation: Valuation
    mantissa: int
    precision: int

    def __post_init__(self):
        if self.precision < 1:
            raise ValueError("precision must be >= 1")
        if self.valuation == INF:
            object.__setattr__(self, "mantissa", 0)
            return
        m = self.mantissa % self.p**self.precision
        if m % self.p == 0:
            raise ValueError("mantissa must be a p-adic unit")
        object.__setattr__(self, "mantissa", m)

    @classmethod
    def from_rational(cls, x, p: int, precision: int) -> "PadicNumber":
        x = Fraction(x)
        v = vp(x, p)
        if v == INF:
            return cls(p, INF, 0, precision)
        unit = x / Fraction(p) ** v
        return cls(p, v, residue(unit, p, precision), precision)

    @classmethod
    def zero(cls, p: int, precision: int = 1) -> "PadicNumber":
        return cls(p, INF, 0, precision)

    @property
    def is_zero(self) -> bool:
        return self.valuation == INF

    @property
    def absolute_precision(self) -> Valuation:
        return INF if self.is_zero else self.valuation + self.precision

    def to_fraction(self) -> Fraction:
        """The canonical rational representative p^v * mantissa."""
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.p) ** self.valuation * self.mantissa

    def __eq__(self, other):
        if not isinstance(other, PadicNumber):
            return NotImplemented
        if self.p != other.p or self.valuation != other.valuation:
            return False
        if self.is_zero:
            return True
        mod = self.p ** min(self.precision, other.precision)
        return (self.mantissa - other.mantissa) % mod == 0

    def __hash__(self):
        return hash((self.p, self.valuation, self.mantissa % self.p))

    def __neg__(self):
        if self.is_zero:
            return self
        return PadicNumber(self.p, self.valuation, -self.mantissa, self.precision)

    def __add__(self, other: "PadicNumber") -> "PadicNumber":
        if not isinstance(other, PadicNumber) or other.p != self.p:
            return NotImplemented
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        p = self.p
        absprec = int(min(self.absolute_precision, other.absolute_precision))
        base = min(self.valuation, other.valuation)
        # both summands as integers scaled by p^-base, modulo p^(absprec - base)
        width = absprec - base
        mod = p**width
        s = (self.mantissa * p ** (self.valuation - base) + other.mantissa * p ** (other.valuation - base)) % mod
        if s == 0:
            raise InsufficientPrecision(
                f"sum vanishes to absolute precision {absprec}", lower_bound=absprec
            )
        v = vp_int(s, p)
        return PadicNumber(p, base + v, s // p**v, width - v)

    def __sub__(self, other: "PadicNumber") -> "PadicNumber":
        return self + (-other)

    def __mul__(self, other: "PadicNumber") -> "PadicNumber":
        if not isinstance(other, PadicNumber) or other.p != self.p:
            return NotImplemented
        if self.is_zero or other.is_zero:
            return PadicNumber.zero(self.p, min(self.precision, other.precision))
        prec = min(self.precision, other.precision)
        return PadicNumber(
            self.p, self.valuation + other.valuation, self.mantissa * other.mantissa, prec
        )

    def __repr__(self):
        if self.is_zero:
            return f"PadicNumber(0, p={self.p})"
        return (
            f"PadicNumber({self.p}^{self.valuation} * {self.mantissa} "
            f"+ O({self.p}^{self.absolute_precision}))"
        )


@dataclass(frozen=True)
class IntPoly:
    """Dense integer polynomial, coefficients in ascending degree order."""

    coefficients: tuple

    def __init__(self, coefficients: Sequence[int]):
        coeffs = [int(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if len(coeffs) < 2:
            raise ValueError("zero and constant polynomials are not accepted")
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def from_flint(cls, f) -> "IntPoly":
        return cls([int(c) for c in f.coeffs()])

    def to_flint(self) -> flint.fmpz_poly:
        return flint.fmpz_poly(list(self.coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self) -> list:
        return [i * c for i, c in enumerate(self.coefficients)][1:]

    def discriminant(self) -> int:
        return int(self.to_flint().discriminant())


def _lower_hull(points):
    hull = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the segment hull[-2] -> pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def newton_polygon(f: IntPoly, p: int) -> list[tuple[Fraction, int]]:
    """Root valuations of f over C_p as (valuation, multiplicity) pairs.

    Roots at zero are left out. Pairs are sorted by increasing valuation.
    """
    points = [(i, vp(c, p)) for i, c in enumerate(f.coefficients) if c != 0]
    hull = _lower_hull(points)
    segments = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        segments.append((Fraction(y1 - y2, x2 - x1), x2 - x1))
    return sorted(segments)


def _taylor_shift(coeffs: list[int], r: int, scale: int) -> list[int]:
    """Coefficients of g(y) = f(r + scale*y)."""
    g = flint.fmpz_poly(coeffs)
    h = g(flint.fmpz_poly([r, scale]))
    out = [int(c) for c in h.coeffs()]
    return out + [0] * (len(coeffs) - len(out))


def _roots_in_unit_disc(g: list[int], p: int) -> int:
    """Number of roots y (in C_p, with multiplicity) of g with v(y) >= 0."""
    nz = [(i, vp_int(c, p)) for i, c in enumerate(g) if c != 0]
    if not nz:
        raise NotSquarefree("polynomial vanished identically")
    zero_mult = nz[0][0]
    hull = _lower_hull(nz)
    count = zero_mult
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        # segment slope (y2-y1)/(x2-x1) <= 0  <=>  root valuation >= 0
        if y2 <= y1:
            count += x2 - x1
    return count


def hensel_roots(
    f: IntPoly,
    p: int,
    m: int,
    *,
    guard: int = 4,
    ceiling: int = 1024,
) -> list[int]:
    """All roots of f in Z_p, as residues modulo p^m (sorted).

    Residue discs r + p^j Z_p are refined while they contain more than one
    root of f over C_p; a disc centred on Z_p holding exactly one root holds a
    Z_p-root. The search depth starts at m + v_p(disc f) + guard and the guard
    doubles whenever some disc is still unresolved, up to ``ceiling``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    disc = f.discriminant()
    if disc == 0:
        raise NotSquarefree(f"{f} has a repeated factor")
    coeffs = list(f.coefficients)
    vdisc = vp_int(disc, p)
    while True:
        depth = m + vdisc + guard
        if depth > ceiling:
            raise PrecisionExhausted(f"root separation for {f} needs more than {ceiling} digits")
        try:
            roots = _isolate_and_lift(coeffs, p, m, depth)
        except PrecisionExhausted:
            guard *= 2
            continue
        return sorted(roots)


def _isolate_and_lift(coeffs, p, m, depth):
    mod = p**m
    isolated = []  # (centre, j) with exactly one root in centre + p^j Z_p
    stack = [(0, 0)]
    while stack:
        r, j = stack.pop()
        n = _roots_in_unit_disc(_taylor_shift(coeffs, r, p**j), p)
        if n == 0:
            continue
        if n == 1:
            isolated.append((r, j))
            continue
        if j >= depth:
            raise PrecisionExhausted(f"disc {r} + {p}^{j} Z_p still holds {n} roots")
        step = p**j
        for t in range(p):
            stack.append((r + t * step, j + 1))
    return [_lift_isolated(coeffs, p, r, j, m) % mod for r, j in isolated]


def _lift_isolated(coeffs, p, r, j, m):
    """Refine an isolating disc digit by digit until Newton's method applies."""
    f = flint.fmpz_poly(coeffs)
    df = f.derivative()
    while j < m:
        fr, dfr = int(f(r)), int(df(r))
        vf = vp_int(fr, p)
        vd = vp_int(dfr, p)
        if vf != INF and vd != INF and vf > 2 * vd:
            return _newton(f, df, p, r, m, vd)
        if vf == INF:
            return r
        step = p**j
        for t in range(p):
            c = r + t * step
            if _roots_in_unit_disc(_taylor_shift(coeffs, c, p * step), p):
                r = c
                break
        j += 1
    return r


def _newton(f, df, p, r, m, vd):
    # in the Hensel regime v(r - root) = v(f(r)) - v(f'(r)) and v(f'(r)) stays vd
    mod = p ** (m + vd + 1)
    while int(f(r)) % p ** (m + vd):
        u = int(df(r)) // p**vd
        r = (r - (int(f(r)) // p**vd) * pow(u, -1, mod)) % mod
    return r
