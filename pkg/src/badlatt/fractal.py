"""Ahlfors-regular measures on the line with exact interval masses.

Two families are provided:

* :class:`Lebesgue` -- Lebesgue measure, on the whole line or restricted to
  a closed interval (alpha = 1);
* :class:`DigitCantor` -- the natural self-similar measure on the set of
  points of [0, 1] whose base-b expansion only uses digits from D
  (alpha = log|D| / log b).

Masses of intervals with rational endpoints are exact rationals.  Powers
``x**alpha`` are irrational in general; :meth:`FractalMeasure.cmp_alpha`
decides ``lhs`` versus ``x**alpha`` exactly when x is a power of the base and
by interval refinement otherwise.
"""

from __future__ import annotations

import functools
import math
from fractions import Fraction

from .arith import (
    DEFAULT_PRECISION,
    IndeterminateError,
    RInterval,
    as_rational,
    cmp_power,
    iv_exp,
    iv_log,
    perfect_power_root,
    precision_cap,
    rational_to_str,
)


def _integer_log(x: Fraction, c: int):
    """k with x == c**k (k may be negative), or None."""
    if x <= 0:
        return None
    num, den = x.numerator, x.denominator
    if den == 1:
        k = 0
        while num % c == 0:
            num //= c
            k += 1
        return k if num == 1 else None
    if num == 1:
        k = 0
        while den % c == 0:
            den //= c
            k += 1
        return -k if den == 1 else None
    return None


class FractalMeasure:
    """Common interface.  Subclasses define the CDF and support tests."""

    kind = "abstract"
    C: Fraction
    rho0: Fraction | None

    # alpha = log(alpha_num) / log(alpha_den); equal entries mean alpha = 1
    alpha_num: int
    alpha_den: int

    @property
    def alpha_is_one(self) -> bool:
        return self.alpha_num == self.alpha_den

    def alpha_float(self) -> float:
        return math.log(self.alpha_num) / math.log(self.alpha_den)

    def alpha_enclosure(self, bits: int = DEFAULT_PRECISION) -> RInterval:
        if self.alpha_is_one:
            return RInterval(1, 1, bits)
        return iv_log(self.alpha_num, bits + 8) / iv_log(self.alpha_den, bits + 8)

    def alpha_power(self, x, bits: int = DEFAULT_PRECISION):
        """``x**alpha``: exact Fraction when available, else an RInterval."""
        x = as_rational(x)
        if x <= 0:
            raise ValueError("alpha_power needs x > 0")
        if self.alpha_is_one:
            return x
        c, s = perfect_power_root(self.alpha_den)
        k = _integer_log(x, c)
        if k is not None and k % s == 0:
            return Fraction(self.alpha_num) ** (k // s)
        return iv_exp(iv_log(x, bits + 16) * self.alpha_enclosure(bits + 16), bits)

    def cmp_alpha(self, lhs, x) -> int:
        """Exact sign of ``lhs - x**alpha`` for rationals lhs >= 0, x > 0."""
        lhs, x = as_rational(lhs), as_rational(x)
        if x <= 0:
            raise ValueError("cmp_alpha needs x > 0")
        if self.alpha_is_one:
            return (lhs > x) - (lhs < x)
        if lhs <= 0:
            return -1
        c, s = perfect_power_root(self.alpha_den)
        k = _integer_log(x, c)
        if k is not None:
            # x**alpha = alpha_num ** (k / s)
            return cmp_power(lhs, s, Fraction(self.alpha_num), k) if k >= 0 else \
                cmp_power(lhs, s, Fraction(1, self.alpha_num), -k)
        bits = DEFAULT_PRECISION
        while True:
            p = self.alpha_power(x, bits)
            if lhs < p.lo:
                return -1
            if lhs > p.hi:
                return 1
            if bits >= precision_cap():
                raise IndeterminateError("cannot compare with x**alpha")
            bits *= 2

    # -- masses ------------------------------------------------------------------
    def cdf(self, x) -> Fraction:
        raise NotImplementedError

    def measure_interval(self, lo, hi) -> Fraction:
        lo, hi = as_rational(lo), as_rational(hi)
        if hi < lo:
            raise ValueError("empty interval")
        return self.cdf(hi) - self.cdf(lo)

    def ball(self, x, r) -> Fraction:
        x, r = as_rational(x), as_rational(r)
        return self.measure_interval(x - r, x + r)

    def in_support(self, x) -> bool:
        raise NotImplementedError

    def supp_intersects(self, lo, hi) -> bool:
        """True iff [lo, hi] contains a point of the support."""
        lo, hi = as_rational(lo), as_rational(hi)
        if self.measure_interval(lo, hi) > 0:
            return True
        # a null closed interval can only touch the support at its endpoints
        return self.in_support(lo) or self.in_support(hi)

    def admissible_I0(self, lo, hi) -> bool:
        """3|I0| <= rho0."""
        return self.rho0 is None or 3 * (as_rational(hi) - as_rational(lo)) <= self.rho0

    # -- Ahlfors data ----------------------------------------------------------
    def ahlfors_ok(self, x, rho) -> tuple[bool, bool]:
        """(lower, upper) halves of C^-1 rho^alpha <= mu(B(x, rho)) <= C rho^alpha."""
        m = self.ball(x, rho)
        lower = self.cmp_alpha(m * self.C, rho) >= 0
        upper = self.cmp_alpha(m / self.C, rho) <= 0
        return lower, upper

    def federer_bound(self, bits: int = DEFAULT_PRECISION):
        """C^2 3^alpha."""
        p = self.alpha_power(3, bits)
        return self.C ** 2 * p

    def decay_constant(self, bits: int = DEFAULT_PRECISION):
        """2^alpha C^2."""
        return self.C ** 2 * self.alpha_power(2, bits)

    def to_json(self) -> dict:
        raise NotImplementedError


class Lebesgue(FractalMeasure):
    """Lebesgue measure on ``support`` (None: the whole line).

    With balls measured by radius, ``mu(B(x, rho)) = 2 rho`` away from the
    boundary, so the Ahlfors constant is 2 (valid up to rho0 = the support
    length when the support is bounded).
    """

    kind = "lebesgue"
    alpha_num = 2
    alpha_den = 2

    def __init__(self, support=None, C=2, rho0=None):
        if support is not None:
            lo, hi = (as_rational(v) for v in support)
            if lo >= hi:
                raise ValueError("empty support")
            support = (lo, hi)
            if rho0 is None:
                rho0 = hi - lo
        self.support = support
        self.C = as_rational(C)
        self.rho0 = None if rho0 is None else as_rational(rho0)

    def cdf(self, x) -> Fraction:
        x = as_rational(x)
        if self.support is None:
            return x
        lo, hi = self.support
        return min(max(x, lo), hi) - lo

    def in_support(self, x) -> bool:
        if self.support is None:
            return True
        lo, hi = self.support
        return lo <= as_rational(x) <= hi

    def support_point_in(self, lo, hi):
        lo, hi = as_rational(lo), as_rational(hi)
        if self.support is None:
            return (lo + hi) / 2
        a, b = max(lo, self.support[0]), min(hi, self.support[1])
        return (a + b) / 2 if a <= b else None

    def to_json(self) -> dict:
        out = {"kind": "lebesgue", "C": rational_to_str(self.C)}
        if self.support is not None:
            out["support"] = [rational_to_str(v) for v in self.support]
        if self.rho0 is not None:
            out["rho0"] = rational_to_str(self.rho0)
        return out


class DigitCantor(FractalMeasure):
    """Uniform self-similar measure on base-b expansions with digits in D."""

    kind = "digit_cantor"

    def __init__(self, base: int, digits, C=None, rho0=1):
        digits = tuple(sorted(set(int(d) for d in digits)))
        if base < 3:
            raise ValueError("base must be at least 3")
        if len(digits) < 2 or digits[0] < 0 or digits[-1] >= base:
            raise ValueError("need at least two digits in range(base)")
        if len(digits) == base:
            raise ValueError("all digits allowed: use Lebesgue measure instead")
        self.base = int(base)
        self.digits = digits
        self.alpha_num = len(digits)
        self.alpha_den = self.base
        self.rho0 = as_rational(rho0)
        self._below = [sum(1 for d in digits if d < t) for t in range(self.base + 1)]
        self.C = as_rational(C) if C is not None else ahlfors_constant(self)

    # -- exact masses --------------------------------------------------------
    def cdf(self, x) -> Fraction:
        """mu([0, x]) by reading the base-b digits of x, summing a geometric tail
        once the digit sequence becomes periodic."""
        x = as_rational(x)
        if x <= 0:
            return Fraction(0)
        if x >= 1:
            return Fraction(1)
        b, d = self.base, len(self.digits)
        num, den = x.numerator, x.denominator
        seen = {}
        total = Fraction(0)
        weight = Fraction(1, d)  # mass of a depth-k cylinder
        k = 0
        while True:
            if num == 0:
                return total
            if num in seen:
                k0, total0, weight0 = seen[num]
                # the block from k0 to k repeats forever, scaled by weight/weight0
                ratio = weight / weight0
                return total0 + (total - total0) / (1 - ratio)
            seen[num] = (k, total, weight)
            num *= b
            digit, num = divmod(num, den)
            total += self._below[digit] * weight
            if digit not in self.digits:
                return total
            weight /= d
            k += 1

    def in_support(self, x) -> bool:
        x = as_rational(x)
        if x < 0 or x > 1:
            return False
        b = self.base
        if x == 1:
            return b - 1 in self.digits
        if self._expansion_ok(x):
            return True
        # b-adic rationals also have an expansion ending in (b-1)(b-1)...
        den = x.denominator
        while den % b == 0:
            den //= b
        if den != 1 or x == 0:
            return False
        return self._expansion_ok(x, alternate=True)

    def _expansion_ok(self, x: Fraction, alternate: bool = False) -> bool:
        b = self.base
        if alternate:
            # x = 0.d1...dk with dk > 0: use 0.d1...(dk - 1)(b-1)(b-1)...
            if b - 1 not in self.digits:
                return False
            digs = []
            num, den = x.numerator, x.denominator
            while num:
                num *= b
                dg, num = divmod(num, den)
                digs.append(dg)
            digs[-1] -= 1
            return all(dg in self.digits for dg in digs)
        num, den = x.numerator, x.denominator
        seen = set()
        while num not in seen:
            seen.add(num)
            num *= b
            dg, num = divmod(num, den)
            if dg not in self.digits:
                return False
            if num == 0:
                return 0 in self.digits
        return True

    def cylinders(self, depth: int):
        """Left endpoints of the depth-k cylinders that carry mass."""
        points = [Fraction(0)]
        scale = Fraction(1)
        for _ in range(depth):
            scale /= self.base
            points = [p + dg * scale for p in points for dg in self.digits]
        return points

    def cylinder_hull(self, left: Fraction, depth: int) -> tuple[Fraction, Fraction]:
        """Smallest interval containing the support inside a depth-k cylinder."""
        size = Fraction(1, self.base ** depth)
        lo = left + size * Fraction(self.digits[0], self.base - 1)
        hi = left + size * Fraction(self.digits[-1], self.base - 1)
        return lo, hi

    def support_point_in(self, lo, hi, max_depth: int = 40):
        """A rational point of the support inside [lo, hi], or None."""
        lo, hi = as_rational(lo), as_rational(hi)
        for p in (lo, hi):
            if self.in_support(p):
                return p
        if self.measure_interval(lo, hi) == 0:
            return None
        frontier = [(Fraction(0), 0)]
        while frontier:
            left, k = frontier.pop(0)
            a, c = self.cylinder_hull(left, k)
            if c < lo or a > hi:
                continue
            if lo <= a <= hi:
                return a
            if lo <= c <= hi:
                return c
            if k >= max_depth:
                continue
            size = Fraction(1, self.base ** (k + 1))
            frontier.extend((left + dg * size, k + 1) for dg in self.digits)
        return None

    def to_json(self) -> dict:
        return {"kind": "digit_cantor", "base": self.base, "digits": list(self.digits),
                "C": rational_to_str(self.C), "rho0": rational_to_str(self.rho0)}


@functools.lru_cache(maxsize=64)
def _ahlfors_search(base: int, digits: tuple, rho0: Fraction, depth: int) -> Fraction:
    mu = DigitCantor(base, digits, C=1, rho0=rho0)
    alpha = mu.alpha_float()
    ext = []
    for left in mu.cylinders(depth):
        ext.extend(mu.cylinder_hull(left, depth))
    ext = sorted(set(ext))
    worst = 1.0
    for x in ext:
        for e in ext:
            rho = abs(x - e)
            if rho == 0 or rho > rho0:
                continue
            m = float(mu.ball(x, rho))
            ra = float(rho) ** alpha
            worst = max(worst, m / ra, ra / m)
        ra = float(rho0) ** alpha
        worst = max(worst, float(mu.ball(x, rho0)) / ra, ra / float(mu.ball(x, rho0)))
    # 1% safety margin, rounded up to a multiple of 1/64
    return Fraction(math.ceil(worst * 1.01 * 64), 64)


def ahlfors_constant(mu: DigitCantor, depth: int = 4) -> Fraction:
    """Ahlfors constant C of a digit Cantor measure, up to radius rho0.

    Centres and radii run over the extreme support points of the depth-k
    cylinders; the extremes of ``mu(B(x, rho)) / rho**alpha`` occur where
    the ball boundary meets such a point.  The maximum of the ratio and its
    reciprocal gets a 1% margin and is rounded up to a multiple of 1/64.
    """
    return _ahlfors_search(mu.base, mu.digits, mu.rho0, depth)


def federer_ratio_bound(mu: FractalMeasure, samples) -> dict:
    """Largest observed ``mu(B(x,3r)) / mu(B(x,r))`` against ``C^2 3^alpha``.

    ``samples`` are ``(x, r)`` pairs with x in the support.  The comparison
    with the bound is exact.
    """
    worst, worst_at, ok = Fraction(0), None, True
    for x, r in samples:
        small = mu.ball(x, r)
        if small == 0:
            raise ValueError(f"ball around {x} has zero mass; centre not in the support")
        ratio = mu.ball(x, 3 * as_rational(r)) / small
        if ratio > worst:
            worst, worst_at = ratio, (as_rational(x), as_rational(r))
        if mu.cmp_alpha(ratio / mu.C ** 2, 3) > 0:
            ok = False
    return {"max_ratio": worst, "argmax": worst_at, "bound": mu.federer_bound(), "within_bound": ok}


def decay_profile(mu: FractalMeasure, B, y, eps_grid) -> list[dict]:
    """``mu(B ∩ B(y, eps)) / mu(B)`` for each eps, with the exact check against
    ``2^alpha C^2 (eps / r_B)^alpha``."""
    lo, hi = (as_rational(v) for v in B)
    y = as_rational(y)
    rB = (hi - lo) / 2
    total = mu.measure_interval(lo, hi)
    if total == 0:
        raise ValueError("ball has zero mass")
    out = []
    for eps in eps_grid:
        eps = as_rational(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        a, b = max(lo, y - eps), min(hi, y + eps)
        m = mu.measure_interval(a, b) if a <= b else Fraction(0)
        ratio = m / total
        ok = ratio == 0 or mu.cmp_alpha(ratio / mu.C ** 2, 2 * eps / rB) <= 0
        out.append({"eps": eps, "ratio": ratio, "within_bound": ok})
    return out


def measure_from_json(obj) -> FractalMeasure:
    if isinstance(obj, FractalMeasure):
        return obj
    kind = obj.get("kind")
    if kind == "lebesgue":
        return Lebesgue(obj.get("support"), obj.get("C", 2), obj.get("rho0"))
    if kind == "digit_cantor":
        return DigitCantor(obj["base"], obj["digits"], obj.get("C"), obj.get("rho0", 1))
    raise ValueError(f"unknown measure kind {kind!r}")


def middle_third(rho0=1, C=None) -> DigitCantor:
    return DigitCantor(3, (0, 2), C=C, rho0=rho0)
