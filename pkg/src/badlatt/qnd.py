"""Quantitative non-divergence experiments along a curve.

For a diagonal element g_tau = diag(e^{tau_1}, ..., e^{tau_{n+1}}) and the
curve matrices h(x) = g_tau z(x) u(phi(x)) the set

    W(tau, J, delta) = {x in J : h(x) Z^{n+1} has a nonzero vector shorter than delta}

is bracketed by classifying cylinders of the measure with interval lattice
tests.  The module also profiles the sublevel sets of polynomials against a
measure, bounds suprema of the pairings that control the non-divergence
estimates, and checks the coordinate identity relating wedge coordinates of
h(x) v_1 ∧ ... ∧ h(x) v_r to a Wronskian pairing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import DEFAULT_PRECISION, RInterval, as_rational, rational_to_str
from .curves import CurveModel, poly_add, poly_deriv, poly_eval, poly_is_zero, poly_mul, poly_scale, poly_trim, \
    pairing_poly, wronskian_pair
from .exterior import MultiVector, apply_map, primitive_dual, primitive_index, saturate, wedge_all
from .flows import make_gtau, make_u, make_z
from .fractal import DigitCantor, FractalMeasure
from .lattice import SquareMap, find_short


# ---------------------------------------------------------------------------
# cylinders


def _root_pieces(mu: FractalMeasure, lo: Fraction, hi: Fraction):
    """Initial cylinders (left, depth) covering [lo, hi]."""
    if isinstance(mu, DigitCantor):
        b = mu.base
        k = 0
        while Fraction(1, b ** (k + 1)) >= hi - lo and k < 60:
            k += 1
        size = Fraction(1, b ** k)
        out = []
        for left in mu.cylinders(k):
            if left + size >= lo and left <= hi:
                out.append((left, k))
        return out
    return [(lo, 0)]


def _piece_size(mu: FractalMeasure, J, depth: int) -> Fraction:
    if isinstance(mu, DigitCantor):
        return Fraction(1, mu.base ** depth)
    return (J[1] - J[0]) / 2 ** depth


def _children(mu: FractalMeasure, J, left: Fraction, depth: int):
    if isinstance(mu, DigitCantor):
        size = Fraction(1, mu.base ** (depth + 1))
        return [(left + d * size, depth + 1) for d in mu.digits]
    size = _piece_size(mu, J, depth + 1)
    return [(left, depth + 1), (left + size, depth + 1)]


def _clip(mu, J, left, depth):
    size = _piece_size(mu, J, depth)
    a, b = max(left, J[0]), min(left + size, J[1])
    return (a, b) if a <= b else None


def refine(mu: FractalMeasure, J, depth: int, classify):
    """Adaptive cylinder classification.

    ``classify(a, b)`` returns True (the whole piece lies in the set), False
    (disjoint from it) or None.  Undecided pieces are split until ``depth``.
    Returns (mass_in, mass_undecided).  Pieces decided at some depth stay
    decided at every larger depth, so brackets are nested as depth grows.
    """
    J = (as_rational(J[0]), as_rational(J[1]))
    stack = list(_root_pieces(mu, *J))
    inside = undecided = Fraction(0)
    while stack:
        left, k = stack.pop()
        piece = _clip(mu, J, left, k)
        if piece is None:
            continue
        a, b = piece
        mass = mu.measure_interval(a, b)
        if mass == 0:
            continue
        verdict = classify(a, b)
        if verdict is True:
            inside += mass
        elif verdict is None:
            if k >= depth:
                undecided += mass
            else:
                stack.extend(_children(mu, J, left, k))
    return inside, undecided


# ---------------------------------------------------------------------------
# W(tau, J, delta)


@dataclass
class QndExperiment:
    mu: FractalMeasure
    curve: CurveModel
    J: tuple
    tau: tuple
    delta_grid: tuple
    rho: Fraction = Fraction(1)
    cylinder_depth: int = 8
    base: int | None = None          # read tau as log_base exponents when given
    precision: int = DEFAULT_PRECISION
    global_estimate: bool = False

    def __post_init__(self):
        self.J = tuple(as_rational(v) for v in self.J)
        self.tau = tuple(as_rational(t) for t in self.tau)
        self.delta_grid = tuple(sorted(as_rational(d) for d in self.delta_grid))
        self.rho = as_rational(self.rho)
        if len(self.tau) != self.curve.n + 1:
            raise ValueError("tau must have n+1 entries")
        if sum(self.tau) != 0:
            raise ValueError("tau must sum to zero")
        if self.global_estimate and not (self.tau[0] > 0 and all(t < 0 for t in self.tau[2:])):
            raise ValueError("global estimates need tau_1 > 0 and tau_i < 0 for i >= 3")
        if any(d <= 0 for d in self.delta_grid):
            raise ValueError("delta must be positive")
        if not self.J[0] < self.J[1]:
            raise ValueError("J must have positive length")
        if self.cylinder_depth < 0:
            raise ValueError("cylinder depth must be non-negative")
        if isinstance(self.mu, DigitCantor) and self.mu.base ** self.cylinder_depth > 3 ** 14:
            raise ValueError("cylinder depth too large for this base")

    def gtau(self) -> SquareMap:
        return make_gtau(self.tau, self.base, self.precision).enclose(self.precision)

    def matrix(self, x) -> SquareMap:
        """h(x) = g_tau z(x) u(phi(x)) (entries enclosed)."""
        V = make_z(self.curve, x) @ make_u(self.curve.eval(x))
        return self.gtau() @ V


@dataclass
class WMass:
    delta: Fraction
    lo: Fraction
    hi: Fraction
    total: Fraction

    @property
    def gap(self) -> Fraction:
        return self.hi - self.lo

    def to_row(self) -> dict:
        return {"delta": rational_to_str(self.delta), "mass_lo": rational_to_str(self.lo),
                "mass_hi": rational_to_str(self.hi), "gap": float(self.gap),
                "mass_lo_float": float(self.lo), "mass_hi_float": float(self.hi)}


def classify_W(exp: QndExperiment, a, b, delta):
    """True if every x in [a, b] lies in W, False if none does, else None."""
    G = exp.gtau()
    xi = RInterval(as_rational(a), as_rational(b), bits=None)
    H = G @ (make_z(exp.curve, xi) @ make_u(exp.curve.eval(xi)))
    flag, _ = find_short(H, as_rational(delta) ** 2, exp.precision, exact=False, escalate=False)
    return flag


def measure_W(exp: QndExperiment) -> list[WMass]:
    """Mass brackets of W(tau, J, delta) for each delta of the grid."""
    total = exp.mu.measure_interval(*exp.J)
    out = []
    for delta in exp.delta_grid:
        inside, und = refine(exp.mu, exp.J, exp.cylinder_depth,
                             lambda a, b, d=delta: classify_W(exp, a, b, d))
        out.append(WMass(delta, inside, inside + und, total))
    return out


def monte_carlo_W(exp: QndExperiment, delta, samples: int = 200, seed: int = 0) -> Fraction:
    """Share of equally spaced sample points of J that lie in W, weighted by mass.

    Points are cell midpoints of a uniform grid and the weight of each is the
    measure of its cell; used as an independent estimate for Lebesgue runs.
    """
    import random
    rng = random.Random(seed)
    lo, hi = exp.J
    width = (hi - lo) / samples
    total = Fraction(0)
    for i in range(samples):
        a = lo + i * width
        x = a + width * Fraction(rng.randint(1, 63), 64)
        H = exp.matrix(x)
        flag, _ = find_short(H, as_rational(delta) ** 2, exp.precision)
        if flag:
            total += exp.mu.measure_interval(a, a + width)
    return total


def masses_csv(masses) -> str:
    lines = ["delta,mass_lo,mass_hi"]
    lines += [f"{rational_to_str(m.delta)},{rational_to_str(m.lo)},{rational_to_str(m.hi)}" for m in masses]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# fitting


@dataclass
class DecayFit:
    gamma: float
    M: float
    residual: float
    points: int
    consistent: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def fit_decay(deltas, masses, rho=1, saturation=None, tol: float = 1e-3, max_residual: float = 0.5) -> DecayFit:
    """Least-squares fit of log mass = log M + gamma log(delta / rho).

    Points with zero mass are dropped, and so are points at the saturation
    mass (typically mu(J)) since they lie outside the decaying range.  The
    fit is called consistent when gamma > tol and the rms residual is below
    ``max_residual``.
    """
    pts = []
    for d, m in zip(deltas, masses):
        m = float(m)
        if m <= 0:
            continue
        if saturation is not None and m >= float(saturation):
            continue
        pts.append((math.log(float(d) / float(rho)), math.log(m)))
    if len(pts) < 4:
        raise ValueError("need at least 4 grid points with positive, unsaturated mass")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.ptp(xs) == 0:
        raise ValueError("degenerate delta grid")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return DecayFit(float(slope), float(math.exp(intercept)), rms, len(pts),
                    bool(slope > tol and rms < max_residual))


def fit_masses(masses: list[WMass], rho=1, **kw) -> DecayFit:
    """fit_decay on the bracket midpoints of measure_W output."""
    mids = [(m.lo + m.hi) / 2 for m in masses]
    total = masses[0].total if masses else None
    return fit_decay([m.delta for m in masses], mids, rho=rho, saturation=total, **kw)


# ---------------------------------------------------------------------------
# good functions


def _abs_bounds(p, a: Fraction, b: Fraction) -> tuple[Fraction, Fraction]:
    v = poly_eval(list(p), RInterval(a, b, bits=None))
    if v.lo <= 0 <= v.hi:
        return Fraction(0), max(-v.lo, v.hi)
    return min(abs(v.lo), abs(v.hi)), max(abs(v.lo), abs(v.hi))


def sup_abs(p, lo, hi, tol=Fraction(1, 10 ** 6), max_pieces: int = 100_000, points=None) -> RInterval:
    """Enclosure of sup |p| over [lo, hi] (or over the support pieces given by ``points``).

    Branch and bound: the lower end is the best value seen at an evaluated
    point, the upper end the largest interval enclosure still alive.
    """
    lo, hi, tol = as_rational(lo), as_rational(hi), as_rational(tol)
    p = poly_trim(p)
    best = max(abs(poly_eval(p, lo)), abs(poly_eval(p, hi)))
    work = [(lo, hi)]
    count = 0
    while True:
        alive = []
        top = best
        for a, b in work:
            ub = _abs_bounds(p, a, b)[1]
            if ub > best:
                alive.append((a, b, ub))
                top = max(top, ub)
        if top - best <= tol or not alive:
            return RInterval(best, top, bits=None)
        count += len(alive)
        if count > max_pieces:
            raise ArithmeticError(f"sup enclosure [{float(best)}, {float(top)}] did not reach tolerance")
        work = []
        for a, b, _ in alive:
            m = (a + b) / 2
            best = max(best, abs(poly_eval(p, m)))
            work += [(a, m), (m, b)]


@dataclass
class GoodProfile:
    eps: list
    mass_lo: list
    mass_hi: list
    ball_mass: Fraction
    sup_mu: RInterval
    sup_full: RInterval
    fit_mu: tuple                    # (C, alpha) fitted with the mu-sup norm
    fit_full: tuple                  # (C, alpha) fitted with the full sup norm

    def rows(self) -> list[dict]:
        return [{"eps": rational_to_str(e), "mass_lo": rational_to_str(a), "mass_hi": rational_to_str(b),
                 "ratio_mid": float((a + b) / 2 / self.ball_mass)}
                for e, a, b in zip(self.eps, self.mass_lo, self.mass_hi)]


def _fit_template(eps, ratios, norm):
    pts = [(math.log(float(e) / norm), math.log(r)) for e, r in zip(eps, ratios) if r > 0 and r < 1]
    if len(pts) < 2:
        return (float("nan"), float("nan"))
    xs, ys = np.array([p[0] for p in pts]), np.array([p[1] for p in pts])
    alpha, logc = np.polyfit(xs, ys, 1)
    return (float(math.exp(logc)), float(alpha))


def sublevel_mass(p, mu: FractalMeasure, B, eps, depth: int = 12):
    """Bracket of mu{x in B : |p(x)| < eps} at cylinder resolution.

    Level sets of a nonconstant polynomial are finite and the supported
    measures have no atoms, so pieces with sup |p| <= eps count as inside.
    """
    eps = as_rational(eps)
    p = poly_trim(p)
    constant = len(p) == 1

    def classify(a, b):
        low, high = _abs_bounds(p, a, b)
        if high < eps or (high == eps and not constant):
            return True
        if low >= eps:
            return False
        return None

    inside, und = refine(mu, B, depth, classify)
    return inside, inside + und


def good_function_profile(p, mu: FractalMeasure, B, eps_grid, depth: int = 12) -> GoodProfile:
    """Sublevel masses of |p| < eps on B against the template C (eps/||p||)^alpha."""
    B = (as_rational(B[0]), as_rational(B[1]))
    p = poly_trim(p)
    if poly_is_zero(p):
        raise ValueError("p vanishes identically")
    total = mu.measure_interval(*B)
    if total == 0:
        raise ValueError("B carries no mass")
    eps = sorted(as_rational(e) for e in eps_grid)
    lo, hi = [], []
    for e in eps:
        a, b = sublevel_mass(p, mu, B, e, depth)
        lo.append(a)
        hi.append(b)
    full = sup_abs(p, *B)
    sup_mu = _sup_on_support(p, mu, B, depth)
    ratios = [float((a + b) / 2 / total) for a, b in zip(lo, hi)]
    return GoodProfile(eps, lo, hi, total, sup_mu, full,
                       _fit_template(eps, ratios, float(sup_mu.hi)),
                       _fit_template(eps, ratios, float(full.hi)))


def _sup_on_support(p, mu: FractalMeasure, B, depth: int) -> RInterval:
    """sup |p| over supp(mu) ∩ B, bracketed over the depth-k support cylinders."""
    B = (as_rational(B[0]), as_rational(B[1]))
    if not isinstance(mu, DigitCantor):
        a, b = B
        if getattr(mu, "support", None) is not None:
            a, b = max(a, mu.support[0]), min(b, mu.support[1])
        return sup_abs(p, a, b)
    best, top = Fraction(0), Fraction(0)
    size = Fraction(1, mu.base ** depth)
    for left in mu.cylinders(depth):
        a, b = max(left, B[0]), min(left + size, B[1])
        if a > b or mu.measure_interval(a, b) == 0:
            continue
        pt = mu.support_point_in(a, b)
        if pt is not None:
            best = max(best, abs(poly_eval(p, pt)))
        top = max(top, _abs_bounds(p, a, b)[1])
    return RInterval(best, max(best, top), bits=None)


# ---------------------------------------------------------------------------
# sup lower bounds and the coordinate identity


def pairing_polynomial(curve: CurveModel, v) -> list[Fraction]:
    """x -> phi~(x)·v (grade 1) or (phi~(x) ∧ phi~'(x))·omega (grade 2)."""
    d = curve.n + 1
    if isinstance(v, MultiVector):
        if v.grade == 1:
            return pairing_poly(curve, [v.coord((i,)) for i in range(d)])
        if v.grade != 2:
            raise ValueError("only grades 1 and 2 are supported")
        comps = [[Fraction(1)]] + [list(c) for c in curve.components]
        ders = [poly_deriv(c) for c in comps]
        out = [Fraction(0)]
        for (i, j), w in v.coords.items():
            minor = poly_add(poly_mul(comps[i], ders[j]), poly_scale(poly_mul(comps[j], ders[i]), -1))
            out = poly_add(out, poly_scale(minor, w))
        return out
    if len(v) == 2 and all(isinstance(x, (list, tuple)) for x in v):
        return pairing_polynomial(curve, MultiVector.from_vectors(v))
    return pairing_poly(curve, v)


def check_prop_sup_lower_bounds(curve: CurveModel, I0, v, tol=Fraction(1, 10 ** 6)) -> RInterval:
    """Enclosure of sup over I0 of |phi~·v| or |(phi~ ∧ phi~')·(a ∧ b)|."""
    p = pairing_polynomial(curve, v)
    if poly_is_zero(p):
        if isinstance(v, MultiVector) and v.is_zero():
            raise ValueError("v must be nonzero")
        if not isinstance(v, MultiVector) and all(as_rational(x) == 0 for x in _flatten(v)):
            raise ValueError("v must be nonzero")
        return RInterval(0, 0, bits=None)
    return sup_abs(p, I0[0], I0[1], tol)


def _flatten(v):
    for x in v:
        if isinstance(x, (list, tuple)):
            yield from x
        else:
            yield x


@dataclass
class IdentityWitness:
    index: tuple                 # the multi-index I (0-based, contains 0 and 1)
    a: list
    b: list
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def h_matrix_base2(curve: CurveModel, k, x) -> SquareMap:
    """diag(2^{k_i}) z(x) u(phi(x)) with exact rational entries."""
    k = [int(v) for v in k]
    if sum(k) != 0 or len(k) != curve.n + 1:
        raise ValueError("need n+1 integer exponents summing to zero")
    G = SquareMap.diag([Fraction(2) ** e for e in k])
    return G @ (make_z(curve, x) @ make_u(curve.eval(x)))


def coordinate_identity(curve: CurveModel, k, vectors, x) -> IdentityWitness:
    """Coordinate identity for a primitive collection v_1..v_r, r >= 2.

    With tau_i = k_i ln 2 the left side is the coordinate I = {1, 2, i_3, ..}
    of h(x)v_1 ∧ ... ∧ h(x)v_r; the right side is 2^{sum_I k_i} times
    |(phi~ ∧ phi~')·(a ∧ b)| with a ∧ b integral, built from a primitive
    dual completion of the v's.  Both are exact.
    """
    d = curve.n + 1
    vs = [[int(c) for c in v] for v in vectors]
    r = len(vs)
    if not 2 <= r <= d:
        raise ValueError("need 2 <= r <= n+1")
    if primitive_index(vs) != 1:
        raise ValueError("the collection is not primitive")
    x = as_rational(x)
    us = primitive_dual(vs) if r < d else []
    basis = lambda i: [int(j == i) for j in range(d)]  # noqa: E731
    chosen = None
    for extra in itertools.combinations(range(2, d), r - 2):
        P = [basis(i) for i in extra] + us
        if not P or not MultiVector.from_vectors(P).is_zero():
            chosen = extra, P
            break
    if chosen is None:
        raise ArithmeticError("no admissible multi-index")
    extra, P = chosen
    if P:
        idx = primitive_index(P)
        a, b = primitive_dual(saturate(P))
        a = [idx * c for c in a]
    else:
        a, b = basis(0), basis(1)
    I = (0, 1) + tuple(extra)
    H = h_matrix_base2(curve, k, x)
    lhs = abs(apply_map(H, MultiVector.from_vectors(vs)).coord(I))
    scale = Fraction(2) ** sum(int(k[i]) for i in I)
    rhs = scale * abs(wronskian_pair(curve, a, b, x))
    return IdentityWitness(I, a, b, lhs, rhs)


def random_primitive_collection(rng, d: int, r: int, bound: int = 3) -> list[list[int]]:
    """Random primitive r-tuple in Z^d (rejection sampling on the index)."""
    while True:
        vs = [[rng.randint(-bound, bound) for _ in range(d)] for _ in range(r)]
        try:
            if primitive_index(vs) == 1:
                return vs
        except (ValueError, ZeroDivisionError):
            continue
