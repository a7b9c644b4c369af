"""Polynomial curves x -> (x, phi_2(x), ..., phi_n(x)) with rational coefficients.

Polynomials are coefficient lists, lowest degree first.  Evaluation is exact
at Fraction arguments and a Horner-scheme enclosure at RInterval arguments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .arith import RInterval, as_rational, rational_to_str
from .exterior import det, rank


# -- polynomial helpers -------------------------------------------------------

def poly_trim(p):
    p = [as_rational(c) for c in p]
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p or [Fraction(0)]


def poly_add(p, q):
    n = max(len(p), len(q))
    return poly_trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def poly_scale(p, c):
    return poly_trim([c * a for a in p])


def poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return poly_trim(out)


def poly_deriv(p):
    return poly_trim([i * p[i] for i in range(1, len(p))]) if len(p) > 1 else [Fraction(0)]


def poly_eval(p, x):
    """Horner evaluation; exact for rationals, an enclosure for intervals."""
    acc = p[-1] if not isinstance(x, RInterval) else RInterval._raw(Fraction(p[-1]), Fraction(p[-1]), x.bits)
    for c in reversed(p[:-1]):
        acc = acc * x + c
    return acc


def poly_is_zero(p) -> bool:
    return all(c == 0 for c in p)


# -- curve model ---------------------------------------------------------------

@dataclass(frozen=True)
class CurveModel:
    """A nondegenerate-by-intent polynomial curve with phi_1(x) = x."""

    components: tuple
    domain: tuple = (Fraction(-100), Fraction(100))
    name: str = ""

    def __post_init__(self):
        comps = tuple(tuple(poly_trim(c)) for c in self.components)
        if not comps:
            raise ValueError("a curve needs at least one component")
        if list(comps[0]) != [0, 1]:
            raise ValueError("the first component must be the identity polynomial x")
        lo, hi = (as_rational(v) for v in self.domain)
        if lo > hi:
            raise ValueError("empty domain")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "domain", (lo, hi))

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max(len(c) - 1 for c in self.components)

    def derivatives(self):
        return tuple(tuple(poly_deriv(list(c))) for c in self.components)

    # -- evaluation ----------------------------------------------------------
    def _check_domain(self, x):
        lo, hi = self.domain
        xl = x.lo if isinstance(x, RInterval) else x
        xh = x.hi if isinstance(x, RInterval) else x
        if xl < lo or xh > hi:
            raise ValueError(f"argument outside the curve domain [{lo}, {hi}]")

    def _arg(self, x):
        return x if isinstance(x, RInterval) else as_rational(x)

    def eval(self, x) -> list:
        x = self._arg(x)
        self._check_domain(x)
        return [poly_eval(list(c), x) for c in self.components]

    def eval_derivative(self, x) -> list:
        x = self._arg(x)
        self._check_domain(x)
        return [poly_eval(list(c), x) for c in self.derivatives()]

    def phi_tilde(self, x) -> list:
        return [Fraction(1)] + self.eval(x)

    def phi_tilde_prime(self, x) -> list:
        return [Fraction(0)] + self.eval_derivative(x)

    def psi(self, x) -> list:
        return self.eval_derivative(x)[1:]

    def contains_interval(self, lo, hi) -> bool:
        return self.domain[0] <= as_rational(lo) and as_rational(hi) <= self.domain[1]

    # -- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "n": self.n,
            "components": [[rational_to_str(c) for c in comp] for comp in self.components],
            "domain": [rational_to_str(v) for v in self.domain],
        }

    @classmethod
    def from_json(cls, obj) -> "CurveModel":
        if isinstance(obj, str):
            return load_curve(obj)
        comps = [[as_rational(c) for c in comp] for comp in obj["components"]]
        if "n" in obj and obj["n"] != len(comps):
            raise ValueError(f"curve declares n={obj['n']} but has {len(comps)} components")
        domain = tuple(obj.get("domain", ("-100", "100")))
        return cls(tuple(tuple(c) for c in comps), domain)


def veronese(n: int, domain=(-100, 100)) -> CurveModel:
    """The curve x -> (x, x^2, ..., x^n)."""
    if n < 1:
        raise ValueError("n must be positive")
    comps = tuple(tuple([0] * k + [1]) for k in range(1, n + 1))
    return CurveModel(comps, tuple(domain), name=f"veronese:{n}")


def load_curve(spec) -> CurveModel:
    """Curve from a preset string ``"veronese:n"``, a JSON dict, or a JSON file path."""
    if isinstance(spec, CurveModel):
        return spec
    if isinstance(spec, dict):
        return CurveModel.from_json(spec)
    if isinstance(spec, str):
        if spec.startswith("veronese:"):
            return veronese(int(spec.split(":", 1)[1]))
        with open(spec) as fh:
            return CurveModel.from_json(json.load(fh))
    raise TypeError(f"cannot load a curve from {spec!r}")


def coefficient_matrix(curve: CurveModel) -> list[list[Fraction]]:
    """Rows are the coefficient vectors of 1, phi_1, ..., phi_n."""
    width = curve.degree + 1
    rows = [[Fraction(1)] + [Fraction(0)] * (width - 1)]
    for comp in curve.components:
        rows.append(list(comp) + [Fraction(0)] * (width - len(comp)))
    return rows


def nondegenerate_check(curve: CurveModel) -> bool:
    """True iff 1, phi_1, ..., phi_n are linearly independent over R."""
    return rank(coefficient_matrix(curve)) == curve.n + 1


def _dot(u, v):
    total = Fraction(0)
    for a, b in zip(u, v):
        total = total + a * as_rational(b)
    return total


def wronskian_pair(curve: CurveModel, a, b, x):
    """``det [[phi~·a, phi~·b], [phi~'·a, phi~'·b]]`` = (phi~ ∧ phi~')·(a ∧ b)."""
    f, fp = curve.phi_tilde(x), curve.phi_tilde_prime(x)
    return det([[_dot(f, a), _dot(f, b)], [_dot(fp, a), _dot(fp, b)]])


def pairing_poly(curve: CurveModel, a) -> list[Fraction]:
    """Coefficients of the polynomial x -> phi~(x)·a."""
    a = [as_rational(v) for v in a]
    out = [a[0]]
    for comp, coef in zip(curve.components, a[1:]):
        out = poly_add(out, poly_scale(list(comp), coef))
    return poly_trim(out)


def wronskian_poly(curve: CurveModel, a, b) -> list[Fraction]:
    """Coefficients of x -> wronskian_pair(curve, a, b, x)."""
    fa, fb = pairing_poly(curve, a), pairing_poly(curve, b)
    return poly_add(poly_mul(fa, poly_deriv(fb)), poly_scale(poly_mul(poly_deriv(fa), fb), -1))


def scale_interval(lo, hi, factor) -> tuple[Fraction, Fraction]:
    """The interval with the same centre and ``factor`` times the length."""
    lo, hi, factor = as_rational(lo), as_rational(hi), as_rational(factor)
    c, h = (lo + hi) / 2, (hi - lo) / 2
    return c - factor * h, c + factor * h
