"""Exact rationals, outward-rounded dyadic intervals and exact power comparisons.

Every rigorous decision in the package goes through this module.  Rationals are
:class:`fractions.Fraction`.  Irrational scalars (``R**(a/b)``, ``exp``,
``log``) are enclosed in :class:`RInterval` objects whose endpoints are dyadic
rationals rounded outward to a fixed number of significant bits.
"""

from __future__ import annotations

import functools
import math
import os
from fractions import Fraction
from numbers import Rational

import gmpy2

DEFAULT_PRECISION = 128
DEFAULT_PRECISION_CAP = 4096


class IndeterminateError(ArithmeticError):
    """A comparison could not be resolved at the precision cap."""


def precision_cap() -> int:
    return int(os.environ.get("BADLATT_PRECISION_CAP", DEFAULT_PRECISION_CAP))


def as_rational(x) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` / decimal strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        # floats are accepted only when they are exact dyadics the caller meant
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


def rational_to_str(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# dyadic rounding


def floor_log2(x: Fraction) -> int:
    """Largest e with 2**e <= x, for x > 0."""
    n, d = x.numerator, x.denominator
    e = n.bit_length() - d.bit_length()
    if e >= 0:
        if n < (d << e):
            e -= 1
    elif (n << -e) < d:
        e -= 1
    return e


def _scaled_floor(x: Fraction, k: int) -> int:
    n, d = x.numerator, x.denominator
    if k >= 0:
        return (n << k) // d
    return n // (d << -k)


def _from_scaled(m: int, k: int) -> Fraction:
    if k >= 0:
        return Fraction(m, 1 << k)
    return Fraction(m << -k)


def round_down(x: Fraction, bits: int | None) -> Fraction:
    if bits is None or not x:
        return x
    d = x.denominator
    if d & (d - 1) == 0 and abs(x.numerator).bit_length() <= bits:
        return x
    k = bits - 1 - floor_log2(abs(x))
    return _from_scaled(_scaled_floor(x, k), k)


def round_up(x: Fraction, bits: int | None) -> Fraction:
    if bits is None or not x:
        return x
    return -round_down(-x, bits)


# ---------------------------------------------------------------------------
# intervals


def _join_bits(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


class RInterval:
    """Closed interval ``[lo, hi]`` with dyadic endpoints of ``bits`` significant bits.

    ``bits=None`` keeps endpoints as exact rationals (no rounding at all), which
    is used for range bounds of rational polynomials.
    """

    __slots__ = ("lo", "hi", "bits")

    def __init__(self, lo, hi=None, bits: int | None = DEFAULT_PRECISION):
        lo = as_rational(lo)
        hi = lo if hi is None else as_rational(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = round_down(lo, bits)
        self.hi = round_up(hi, bits)
        self.bits = bits

    @classmethod
    def _raw(cls, lo: Fraction, hi: Fraction, bits):
        obj = object.__new__(cls)
        obj.lo, obj.hi, obj.bits = lo, hi, bits
        return obj

    @classmethod
    def exact(cls, lo, hi=None):
        return cls(lo, hi, bits=None)

    # -- inspection ---------------------------------------------------------
    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def rad(self) -> Fraction:
        return (self.hi - self.lo) / 2

    def contains(self, x) -> bool:
        if isinstance(x, RInterval):
            return self.lo <= x.lo and x.hi <= self.hi
        x = as_rational(x)
        return self.lo <= x <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi

    def hull(self, other: "RInterval") -> "RInterval":
        other = _coerce(other)
        return RInterval._raw(min(self.lo, other.lo), max(self.hi, other.hi),
                              _join_bits(self.bits, other.bits))

    def with_bits(self, bits):
        return RInterval(self.lo, self.hi, bits)

    def __repr__(self):
        return f"RInterval({float(self.lo)!r}, {float(self.hi)!r}, bits={self.bits})"

    def __eq__(self, other):
        if not isinstance(other, RInterval):
            return NotImplemented
        return (self.lo, self.hi, self.bits) == (other.lo, other.hi, other.bits)

    def __hash__(self):
        return hash((self.lo, self.hi, self.bits))

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self):
        return RInterval._raw(-self.hi, -self.lo, self.bits)

    def __pos__(self):
        return self

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return RInterval._raw(Fraction(0), max(-self.lo, self.hi), self.bits)

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        bits = _join_bits(self.bits, other.bits)
        return RInterval._raw(round_down(self.lo + other.lo, bits),
                              round_up(self.hi + other.hi, bits), bits)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        bits = _join_bits(self.bits, other.bits)
        return RInterval._raw(round_down(self.lo - other.hi, bits),
                              round_up(self.hi - other.lo, bits), bits)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        bits = _join_bits(self.bits, other.bits)
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        if a >= 0 and c >= 0:
            lo, hi = a * c, b * d
        else:
            ps = (a * c, a * d, b * c, b * d)
            lo, hi = min(ps), max(ps)
        return RInterval._raw(round_down(lo, bits), round_up(hi, bits), bits)

    __rmul__ = __mul__

    def reciprocal(self):
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval contains zero")
        bits = self.bits
        return RInterval._raw(round_down(1 / self.hi, bits), round_up(1 / self.lo, bits), bits)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other * self.reciprocal()

    def sqr(self):
        bits = self.bits
        if self.lo >= 0:
            lo, hi = self.lo * self.lo, self.hi * self.hi
        elif self.hi <= 0:
            lo, hi = self.hi * self.hi, self.lo * self.lo
        else:
            lo, hi = Fraction(0), max(self.lo * self.lo, self.hi * self.hi)
        return RInterval._raw(round_down(lo, bits), round_up(hi, bits), bits)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return (self ** -k).reciprocal()
        if k == 0:
            return RInterval._raw(Fraction(1), Fraction(1), self.bits)
        if k % 2 == 0:
            return self.sqr() ** (k // 2) if k > 2 else self.sqr()
        out = self
        for _ in range(k - 1):
            out = out * self
        return out

    # -- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        if self.bits is None and not (_is_dyadic(self.lo) and _is_dyadic(self.hi)):
            return {"lo": rational_to_str(self.lo), "hi": rational_to_str(self.hi), "bits": None}
        return {"lo": dyadic_to_hex(self.lo), "hi": dyadic_to_hex(self.hi), "bits": self.bits}

    @classmethod
    def from_json(cls, obj: dict) -> "RInterval":
        def parse(s):
            return hex_to_dyadic(s) if "0x" in s else as_rational(s)
        return cls._raw(parse(obj["lo"]), parse(obj["hi"]), obj.get("bits"))


def _coerce(x):
    if isinstance(x, RInterval):
        return x
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return RInterval._raw(x, x, None)
    return NotImplemented


def to_interval(x, bits: int | None = DEFAULT_PRECISION) -> RInterval:
    if isinstance(x, RInterval):
        return x
    return RInterval(x, bits=bits)


def lower(x) -> Fraction:
    return x.lo if isinstance(x, RInterval) else as_rational(x)


def upper(x) -> Fraction:
    return x.hi if isinstance(x, RInterval) else as_rational(x)


def compare(a, b) -> int | None:
    """Exact ordering of two scalars: -1, 0, 1, or ``None`` when intervals overlap."""
    if not isinstance(a, RInterval) and not isinstance(b, RInterval):
        a, b = as_rational(a), as_rational(b)
        return (a > b) - (a < b)
    a, b = _coerce(a), _coerce(b)
    if a.hi < b.lo:
        return -1
    if a.lo > b.hi:
        return 1
    if a.is_point() and b.is_point() and a.lo == b.lo:
        return 0
    return None


def _is_dyadic(x: Fraction) -> bool:
    d = x.denominator
    return d & (d - 1) == 0


def dyadic_to_hex(x: Fraction) -> str:
    """Arbitrary-precision hex float, e.g. ``0x3p-2`` for 3/4."""
    if not _is_dyadic(x):
        raise ValueError(f"{x} is not dyadic")
    sign = "-" if x < 0 else ""
    m, e = abs(x.numerator), -(x.denominator.bit_length() - 1)
    if m:
        tz = (m & -m).bit_length() - 1
        m >>= tz
        e += tz
    return f"{sign}0x{m:x}p{e:+d}"


def hex_to_dyadic(s: str) -> Fraction:
    s = s.strip()
    sign = -1 if s.startswith("-") else 1
    body = s.lstrip("+-")[2:]
    mant, _, exp = body.partition("p")
    if "." in mant:
        ip, fp = mant.split(".")
        m = int(ip + fp or "0", 16)
        e = int(exp or 0) - 4 * len(fp)
    else:
        m, e = int(mant, 16), int(exp or 0)
    return sign * _from_scaled(m, -e)


# ---------------------------------------------------------------------------
# elementary functions of rationals


def iv_from_rational(x, precision: int = DEFAULT_PRECISION) -> RInterval:
    if precision < 2:
        raise ValueError("precision must be at least 2 bits")
    return RInterval(as_rational(x), bits=precision)


def _root_bounds(x: Fraction, b: int, bits: int) -> tuple[Fraction, Fraction]:
    """Dyadic lo <= x**(1/b) <= hi with about ``bits`` significant bits."""
    if b == 1:
        return x, x
    n, d = x.numerator, x.denominator
    e = floor_log2(x)
    k = bits + 4 - e // b
    shift = k * b
    if shift >= 0:
        num, den = n << shift, d
    else:
        num, den = n, d << -shift
    M, rem = divmod(num, den)
    r, exact = gmpy2.iroot(gmpy2.mpz(M), b)
    r = int(r)
    lo = _from_scaled(r, k)
    hi = lo if (exact and rem == 0) else _from_scaled(r + 1, k)
    return lo, hi


@functools.lru_cache(maxsize=65536)
def _pow_cached(base: Fraction, exponent: Fraction, bits: int) -> RInterval:
    if exponent == 0 or base == 1:
        return RInterval._raw(Fraction(1), Fraction(1), bits)
    a, b = abs(exponent.numerator), exponent.denominator
    X = base ** a
    lo, hi = _root_bounds(X, b, bits + 8)
    iv = RInterval(lo, hi, bits)
    if exponent < 0:
        iv = iv.reciprocal()
    return iv


def iv_exp_log_pow(base, exponent, precision: int = DEFAULT_PRECISION) -> RInterval:
    """Enclosure of ``base ** exponent`` = ``exp(exponent * log(base))``.

    Computed as an integer root of an exact rational power, so the enclosure is
    tight (a few ulps) and exact whenever the true value is a dyadic rational.
    """
    base, exponent = as_rational(base), as_rational(exponent)
    if base <= 0:
        raise ValueError("base must be positive")
    return _pow_cached(base, exponent, precision)


iv_pow = iv_exp_log_pow


def iv_sqrt(x, precision: int = DEFAULT_PRECISION) -> RInterval:
    return iv_exp_log_pow(x, Fraction(1, 2), precision)


def _exp_small(y: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    """Bounds on exp(y) for |y| <= 1/4 by Taylor series with remainder."""
    target = Fraction(1, 1 << (bits + 4))
    term, total, k = Fraction(1), Fraction(1), 0
    while True:
        k += 1
        term = term * y / k
        total += term
        # remainder after term k is at most 2*|term|*|y|/(k+1) for |y| <= 1/4
        tail = 2 * abs(term) * abs(y) / (k + 1)
        if tail <= target:
            break
        total = round_down(total, bits + 32)
        term = round_down(term, bits + 32) if term > 0 else round_up(term, bits + 32)
    slack = tail + Fraction(1, 1 << (bits + 2)) * k
    return total - slack, total + slack


def iv_exp(x, precision: int = DEFAULT_PRECISION) -> RInterval:
    """Enclosure of exp(x) for rational x or an RInterval x (monotone hull)."""
    if isinstance(x, RInterval):
        lo = iv_exp(x.lo, precision)
        hi = lo if x.is_point() else iv_exp(x.hi, precision)
        return RInterval._raw(lo.lo, hi.hi, precision)
    x = as_rational(x)
    if x == 0:
        return RInterval._raw(Fraction(1), Fraction(1), precision)
    if x < 0:
        return iv_exp(-x, precision).reciprocal()
    s = max(0, floor_log2(x) + 3)
    work = precision + 2 * s + 16
    y = x / (1 << s)
    lo, hi = _exp_small(y, work)
    iv = RInterval(lo, hi, work)
    for _ in range(s):
        iv = iv.sqr()
    return iv.with_bits(precision)


def _atanh_bounds(z: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    """Bounds on atanh(z) for 0 <= z <= 1/3."""
    if z == 0:
        return Fraction(0), Fraction(0)
    target = Fraction(1, 1 << (bits + 4))
    z2 = z * z
    power, total, j = z, z, 0
    while True:
        j += 1
        power = round_down(power * z2, bits + 32)
        total += power / (2 * j + 1)
        tail = power * z2 / ((2 * j + 3) * (1 - z2))
        if tail <= target:
            break
        total = round_down(total, bits + 32)
    slack = Fraction(j + 2, 1 << (bits + 28))
    return total - slack, total + tail + slack


@functools.lru_cache(maxsize=256)
def _ln2(bits: int) -> RInterval:
    lo, hi = _atanh_bounds(Fraction(1, 3), bits + 8)
    return RInterval(2 * lo, 2 * hi, bits + 4)


def iv_log(x, precision: int = DEFAULT_PRECISION) -> RInterval:
    """Enclosure of the natural log of a positive rational."""
    x = as_rational(x)
    if x <= 0:
        raise ValueError("log of non-positive number")
    if x == 1:
        return RInterval._raw(Fraction(0), Fraction(0), precision)
    k = floor_log2(x)
    m = x / _from_scaled(1, -k)
    work = precision + max(8, abs(k).bit_length() + 8)
    z = (m - 1) / (m + 1)
    lo, hi = _atanh_bounds(z, work)
    out = RInterval(2 * lo, 2 * hi, work) + k * _ln2(work)
    return out.with_bits(precision)


# ---------------------------------------------------------------------------
# exact comparisons


def cmp_power(a, p: int, b, q: int) -> int:
    """Exact sign of ``a**p - b**q`` for positive rationals and integer exponents."""
    a, b = as_rational(a), as_rational(b)
    if a <= 0 or b <= 0:
        raise ValueError("cmp_power requires positive bases")
    lhs, rhs = a ** p, b ** q
    return (lhs > rhs) - (lhs < rhs)


def cmp_rational_powers(a, e, b, f) -> int:
    """Exact sign of ``a**e - b**f`` for positive rationals and rational exponents."""
    e, f = as_rational(e), as_rational(f)
    D = math.lcm(e.denominator, f.denominator)
    return cmp_power(a, int(e * D), b, int(f * D))


def perfect_power_root(n: int) -> tuple[int, int]:
    """Write an integer n >= 2 as c**k with c not a perfect power."""
    if n < 2:
        raise ValueError("base must be an integer >= 2")
    for k in range(n.bit_length(), 1, -1):
        r, exact = gmpy2.iroot(gmpy2.mpz(n), k)
        if exact:
            return int(r), k
    return n, 1


def resolve(fn, precision: int | None = None, cap: int | None = None):
    """Call ``fn(bits)`` with doubling precision until it returns a non-None value."""
    bits = precision or DEFAULT_PRECISION
    cap = cap or precision_cap()
    while True:
        out = fn(bits)
        if out is not None:
            return out
        if bits >= cap:
            raise IndeterminateError(f"unresolved at {bits} bits")
        bits = min(2 * bits, cap)


class PowerSum:
    """Exact value ``sum(coeff * base**exponent)`` with rational coefficients and exponents.

    The base is normalized to an integer that is not a perfect power, so
    ``y**D - base`` is irreducible over Q for every D and the sign of a
    non-zero sum is always decidable by interval refinement.
    """

    __slots__ = ("base", "terms")

    def __init__(self, base: int | None, terms: dict):
        self.base = base
        self.terms = {Fraction(e): Fraction(c) for e, c in terms.items() if c}

    @classmethod
    def power(cls, base: int, exponent, coeff=1) -> "PowerSum":
        c, k = perfect_power_root(int(base))
        return cls(c, {as_rational(exponent) * k: as_rational(coeff)})

    @classmethod
    def rational(cls, value) -> "PowerSum":
        return cls(None, {0: as_rational(value)})

    def _merge_base(self, other: "PowerSum"):
        if self.base is None:
            return other.base
        if other.base is None or other.base == self.base:
            return self.base
        raise TypeError("PowerSums over different bases")

    def __add__(self, other):
        other = _as_powersum(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return PowerSum(self._merge_base(other), terms)

    __radd__ = __add__

    def __neg__(self):
        return PowerSum(self.base, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_powersum(other))

    def __rsub__(self, other):
        return _as_powersum(other) - self

    def __mul__(self, other):
        other = _as_powersum(other)
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                terms[e1 + e2] = terms.get(e1 + e2, 0) + c1 * c2
        return PowerSum(self._merge_base(other), terms)

    __rmul__ = __mul__

    def enclose(self, bits: int = DEFAULT_PRECISION) -> RInterval:
        total = RInterval._raw(Fraction(0), Fraction(0), bits)
        for e, c in self.terms.items():
            if e == 0:
                total = total + RInterval(c, bits=bits + 8)
            else:
                total = total + c * iv_exp_log_pow(self.base, e, bits + 8)
        return total.with_bits(bits)

    def is_zero(self) -> bool:
        if not self.terms:
            return True
        D = math.lcm(*(e.denominator for e in self.terms))
        groups: dict[int, Fraction] = {}
        for e, c in self.terms.items():
            num = int(e * D)
            r = num % D
            groups[r] = groups.get(r, 0) + c * Fraction(self.base or 1) ** ((num - r) // D)
        return all(v == 0 for v in groups.values())

    def sign(self, precision: int = DEFAULT_PRECISION) -> int:
        coeffs = list(self.terms.values())
        if not coeffs:
            return 0
        if all(c > 0 for c in coeffs):
            return 1
        if all(c < 0 for c in coeffs):
            return -1
        if self.is_zero():
            return 0
        bits = precision
        while bits <= 1 << 18:
            iv = self.enclose(bits)
            if iv.lo > 0:
                return 1
            if iv.hi < 0:
                return -1
            bits *= 2
        raise IndeterminateError("PowerSum sign did not resolve")

    def __repr__(self):
        return f"PowerSum(base={self.base}, terms={self.terms})"


def _as_powersum(x) -> PowerSum:
    if isinstance(x, PowerSum):
        return x
    return PowerSum.rational(x)


def float_down(x) -> float:
    """Largest double <= x."""
    x = as_rational(x)
    f = float(x)
    if Fraction(f) > x:
        f = math.nextafter(f, -math.inf)
    return f


def float_up(x) -> float:
    """Smallest double >= x."""
    x = as_rational(x)
    f = float(x)
    if Fraction(f) < x:
        f = math.nextafter(f, math.inf)
    return f
