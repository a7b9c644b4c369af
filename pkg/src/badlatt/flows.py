"""Flow matrices on unimodular lattices and the wedge decomposition of short
integral multivectors.

Conventions
-----------
* ``u(x)`` is upper unitriangular with first row ``(1, x)``.
* ``u1(y)`` carries ``y = (y_2, ..., y_n)`` in row 2, columns 3..n+1.
* ``a(t) = diag(e^t, e^{-r_1 t}, ..., e^{-r_n t})`` and
  ``b(t) = diag(e^{-t/n}, e^t, e^{-t/n}, ..., e^{-t/n})``.

The construction only ever evaluates ``a`` at multiples ``s·beta`` and ``b``
at multiples ``s·beta'`` where ``e^{(1+r_1)beta} = R = e^{(1+1/n)beta'}``.
The diagonal entries are then rational powers of R and are stored exactly as
:class:`~badlatt.arith.PowerSum` values, so lattice decisions are exact.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import (
    DEFAULT_PRECISION,
    IndeterminateError,
    PowerSum,
    RInterval,
    as_rational,
    iv_exp,
    iv_log,
    rational_to_str,
)
from .curves import CurveModel
from .exterior import MultiVector, norm2, wedge, wedge_all, apply_map
from .lattice import SquareMap, enumerate_gram, gram, shortest_vector


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class Weights:
    """Rational weights r_1 >= ... >= r_n > 0 with sum 1."""

    r: tuple

    def __post_init__(self):
        r = tuple(as_rational(x) for x in self.r)
        if not r:
            raise ValueError("weights must be non-empty")
        if sum(r) != 1:
            raise ValueError(f"weights must sum to 1, got {sum(r)}")
        if any(a < b for a, b in zip(r, r[1:])):
            raise ValueError("weights must be sorted in descending order")
        if r[-1] <= 0:
            raise ValueError("the smallest weight must be positive")
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return len(self.r)

    def __iter__(self):
        return iter(self.r)

    def __getitem__(self, i):
        return self.r[i]

    def to_json(self):
        return [rational_to_str(x) for x in self.r]

    @classmethod
    def equal(cls, n: int) -> "Weights":
        return cls(tuple(Fraction(1, n) for _ in range(n)))


@dataclass(frozen=True)
class FlowConfig:
    """Splitting rate R, weights, threshold rate eps and base scale m.

    ``beta = ln R / (1 + r_1)`` and ``beta' = ln R / (1 + 1/n)`` are kept as
    exact rational multiples of ``ln R``; :attr:`beta` and :attr:`beta_prime`
    give interval enclosures.
    """

    weights: Weights
    R: int
    eps: Fraction
    m: int = 1
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        w = self.weights if isinstance(self.weights, Weights) else Weights(tuple(self.weights))
        object.__setattr__(self, "weights", w)
        eps = as_rational(self.eps)
        object.__setattr__(self, "eps", eps)
        if int(self.R) != self.R or self.R < 2:
            raise ValueError("R must be an integer >= 2")
        object.__setattr__(self, "R", int(self.R))
        if not 0 < eps <= w.r[-1] / (3 * w.n):
            raise ValueError(f"eps must satisfy 0 < eps <= r_n/(3n) = {w.r[-1] / (3 * w.n)}")
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.precision < 16:
            raise ValueError("precision must be at least 16 bits")

    @property
    def n(self) -> int:
        return self.weights.n

    @property
    def beta_coeff(self) -> Fraction:
        """beta / ln R."""
        return 1 / (1 + self.weights.r[0])

    @property
    def beta_prime_coeff(self) -> Fraction:
        """beta' / ln R."""
        return 1 / (1 + Fraction(1, self.n))

    @property
    def beta(self) -> RInterval:
        return self.beta_coeff * iv_log(self.R, self.precision)

    @property
    def beta_prime(self) -> RInterval:
        return self.beta_prime_coeff * iv_log(self.R, self.precision)

    def a_exponents(self, s) -> list[Fraction]:
        """log_R of the diagonal of a(s·beta)."""
        s = as_rational(s) * self.beta_coeff
        return [s] + [-ri * s for ri in self.weights.r]

    def b_exponents(self, s) -> list[Fraction]:
        """log_R of the diagonal of b(s·beta')."""
        s = as_rational(s) * self.beta_prime_coeff
        n = self.n
        out = [-s / n, s] + [-s / n] * (n - 1)
        return out

    def H_exponents(self, l: int, q: int) -> list[Fraction]:
        """log_R of the diagonal of b(beta' l) a(beta (q+1))."""
        return [x + y for x, y in zip(self.b_exponents(l), self.a_exponents(q + 1))]

    def threshold_exponent(self, l: int) -> Fraction:
        """log_R of e^{-eps beta l}."""
        return -self.eps * self.beta_coeff * l

    def threshold2(self, l: int) -> PowerSum:
        """Exact squared threshold e^{-2 eps beta l}."""
        return PowerSum.power(self.R, 2 * self.threshold_exponent(l))

    def to_json(self) -> dict:
        return {
            "weights": self.weights.to_json(),
            "R": self.R,
            "eps": rational_to_str(self.eps),
            "m": self.m,
            "precision": self.precision,
        }


# ---------------------------------------------------------------------------
# matrices


def _scalar(x):
    return x if isinstance(x, (RInterval, PowerSum)) else as_rational(x)


def make_u(x) -> SquareMap:
    x = [_scalar(v) for v in x]
    d = len(x) + 1
    M = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for j, v in enumerate(x):
        M[0][j + 1] = v
    return SquareMap(M)


def make_u1(y) -> SquareMap:
    """u1(y) for y = (y_2, ..., y_n); the matrix has size n+1 = len(y) + 2."""
    y = [_scalar(v) for v in y]
    d = len(y) + 2
    M = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for j, v in enumerate(y):
        M[1][j + 2] = v
    return SquareMap(M)


def make_z(curve: CurveModel, x) -> SquareMap:
    return make_u1(curve.psi(x))


def power_diag(R: int, exponents) -> SquareMap:
    return SquareMap.diag([PowerSum.power(R, e) for e in exponents])


def make_a(cfg: FlowConfig, s) -> SquareMap:
    """a(s·beta) with exact entries R^(...)."""
    return power_diag(cfg.R, cfg.a_exponents(s))


def make_b(cfg: FlowConfig, s) -> SquareMap:
    """b(s·beta') with exact entries R^(...)."""
    return power_diag(cfg.R, cfg.b_exponents(s))


def make_gtau(tau, base: int | None = None, precision: int = DEFAULT_PRECISION) -> SquareMap:
    """diag(e^{tau_i}); with ``base`` the tau_i are read as log_base exponents (exact)."""
    tau = [as_rational(t) for t in tau]
    if sum(tau) != 0:
        raise ValueError("tau must sum to zero")
    if base is not None:
        return power_diag(base, tau)
    return SquareMap.diag([iv_exp(t, precision) for t in tau])


def a_real(weights: Weights, t, precision: int = DEFAULT_PRECISION) -> SquareMap:
    """a(t) for an arbitrary rational time t (interval entries)."""
    t = as_rational(t)
    return SquareMap.diag([iv_exp(t, precision)] + [iv_exp(-ri * t, precision) for ri in weights.r])


def b_real(n: int, t, precision: int = DEFAULT_PRECISION) -> SquareMap:
    t = as_rational(t)
    small = iv_exp(-t / n, precision)
    return SquareMap.diag([small, iv_exp(t, precision)] + [small] * (n - 1))


def make_H(cfg: FlowConfig, curve: CurveModel, l: int, q: int, x) -> SquareMap:
    """H_{l,q}(x) = b(beta' l) a(beta(q+1)) z(x) u(phi(x)).

    Exact (PowerSum entries) for rational x; interval entries for interval x.
    """
    if curve.n != cfg.n:
        raise ValueError("curve dimension does not match the weights")
    D = power_diag(cfg.R, cfg.H_exponents(l, q))
    V = make_z(curve, x) @ make_u(curve.eval(x))
    if V.kind() == "interval":
        D = D.enclose(cfg.precision + 16)
    return D @ V


def make_H_fused(cfg: FlowConfig, curve: CurveModel, l: int, q: int, x) -> SquareMap:
    """Same matrix as :func:`make_H`, multiplied factor by factor."""
    return make_b(cfg, l) @ make_a(cfg, q + 1) @ make_z(curve, x) @ make_u(curve.eval(x))


# ---------------------------------------------------------------------------
# conjugation identities


@dataclass
class ConjugationReport:
    """Largest entrywise discrepancy enclosure per identity, over all samples."""

    samples: int
    discrepancy: dict = field(default_factory=dict)
    exact: dict = field(default_factory=dict)

    def max_width(self, name) -> Fraction:
        d = self.discrepancy[name]
        return d.width if isinstance(d, RInterval) else Fraction(0)

    def contains_zero(self, name) -> bool:
        d = self.discrepancy[name]
        return d.lo <= 0 <= d.hi if isinstance(d, RInterval) else d == 0


def _rand_rat(rng: random.Random, lo=-5, hi=5, den=16) -> Fraction:
    return Fraction(rng.randint(lo * den, hi * den), rng.randint(1, den))


def _merge(best, d):
    if best is None:
        return d
    lo = max(best.lo if isinstance(best, RInterval) else best, d.lo if isinstance(d, RInterval) else d)
    hi = max(best.hi if isinstance(best, RInterval) else best, d.hi if isinstance(d, RInterval) else d)
    return RInterval.exact(lo, hi)


def check_conjugations(cfg: FlowConfig, curve: CurveModel | None = None, samples: int = 100,
                       seed: int = 0, t_values=None, x_values=None) -> ConjugationReport:
    """Evaluate both sides of the five conjugation identities on random inputs.

    Times are ``t = s·beta`` with random rational s.  The left-hand sides
    are products of interval matrices ``g(t) M g(-t)``; the right-hand sides
    evaluate the predicted exponentials ``e^{c t}`` directly, so the two
    routes share no intermediate values.  The identity for z(x) is checked
    in exact rational arithmetic.
    """
    rng = random.Random(seed)
    n, bits = cfg.n, cfg.precision
    r = cfg.weights.r
    curve = curve or _default_curve(n)
    beta = cfg.beta
    names = ["a_u", "a_u1", "b_u", "b_u1", "z_u"]
    best = {k: None for k in names}
    exact = {k: True for k in names}

    def exp_iv(t):
        # exp of an interval time enclosure
        return iv_exp(t, bits)

    for k in range(samples):
        s = as_rational(t_values[k]) if t_values else Fraction(rng.randint(0, 64), 16)
        x = [_rand_rat(rng) for _ in range(n)] if not x_values else [as_rational(v) for v in x_values[k]]
        y = [_rand_rat(rng) for _ in range(n - 1)]
        t = s * beta
        # a(t), a(-t) as interval diagonals
        a_pos = SquareMap.diag([exp_iv(t)] + [exp_iv(-ri * t) for ri in r])
        a_neg = SquareMap.diag([exp_iv(-t)] + [exp_iv(ri * t) for ri in r])
        lhs = a_pos @ make_u(x) @ a_neg
        rhs = make_u([exp_iv((1 + ri) * t) * xi for ri, xi in zip(r, x)])
        best["a_u"] = _merge(best["a_u"], lhs.max_abs_diff(rhs, bits))
        if n >= 2:
            lhs = a_pos @ make_u1(y) @ a_neg
            rhs = make_u1([exp_iv((r[i] - r[0]) * t) * y[i - 1] for i in range(1, n)])
            best["a_u1"] = _merge(best["a_u1"], lhs.max_abs_diff(rhs, bits))
        tb = s * cfg.beta_prime
        b_pos = SquareMap.diag([exp_iv(-tb * Fraction(1, n)), exp_iv(tb)] + [exp_iv(-tb * Fraction(1, n))] * (n - 1))
        b_neg = SquareMap.diag([exp_iv(tb * Fraction(1, n)), exp_iv(-tb)] + [exp_iv(tb * Fraction(1, n))] * (n - 1))
        lhs = b_pos @ make_u(x) @ b_neg
        rhs = make_u([exp_iv(-(1 + Fraction(1, n)) * tb) * x[0]] + x[1:])
        best["b_u"] = _merge(best["b_u"], lhs.max_abs_diff(rhs, bits))
        if n >= 2:
            lhs = b_pos @ make_u1(y) @ b_neg
            rhs = make_u1([exp_iv((1 + Fraction(1, n)) * tb) * v for v in y])
            best["b_u1"] = _merge(best["b_u1"], lhs.max_abs_diff(rhs, bits))
        # z(x) u(phi'(x)) z(x)^{-1} = u(e_1), exact
        lo, hi = curve.domain
        xr = lo + (hi - lo) * Fraction(rng.randint(0, 1000), 1000)
        z = make_z(curve, xr)
        lhs = z @ make_u(curve.eval_derivative(xr)) @ z.inverse()
        rhs = make_u([1] + [0] * (n - 1))
        diff = lhs.max_abs_diff(rhs, bits)
        exact["z_u"] = exact["z_u"] and diff == 0
        best["z_u"] = _merge(best["z_u"], diff)
    for k in names:
        if best[k] is None:
            best[k] = Fraction(0)
        if k != "z_u":
            exact[k] = best[k] == 0
    return ConjugationReport(samples, best, exact)


def _default_curve(n):
    from .curves import veronese
    return veronese(n)


# ---------------------------------------------------------------------------
# wedge decomposition


@dataclass(frozen=True)
class CaseA:
    """A short vector of the span lattice with a small second coordinate.

    ``radius2_factor`` is 1 when ``‖a‖ <= rho`` and i when only the
    Minkowski radius ``‖a‖ <= sqrt(i)·rho`` could be met (non-strict mode).
    """

    a: tuple
    coeffs: tuple
    radius2_factor: int = 1


@dataclass(frozen=True)
class CaseB:
    """Splitting ``a_1∧…∧a_i = e_1∧w_im1 + w_i`` with w's supported on e_2..e_{n+1}."""

    w_im1: MultiVector
    w_i: MultiVector


class DecompositionError(ArithmeticError):
    """Neither alternative of the decomposition holds for the given input."""


def split_wedge(a_vectors) -> tuple[MultiVector, MultiVector]:
    """The unique ``(w_im1, w_i)`` with ``a_1∧…∧a_i = e_1∧w_im1 + w_i`` and w's in ⋀W."""
    A = MultiVector.from_vectors(a_vectors)
    d, i = A.dim, A.grade
    lower, rest = {}, {}
    for key, val in A.coords.items():
        if key[0] == 0:
            lower[key[1:]] = val
        else:
            rest[key] = val
    return MultiVector(d, i - 1, lower), MultiVector(d, i, rest)


def _perm_parity(seq) -> int:
    seq = list(seq)
    inv = sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])
    return -1 if inv % 2 else 1


def explicit_expansion(a_vectors) -> dict:
    """Expand a_1∧…∧a_i along a_j = a_{j,1}e_1 + a_{j,2}e_2 + w~_j.

    Returns the four pieces ``w12`` (grade i-2), ``w1``, ``w2`` (grade i-1)
    and ``wt`` (grade i), all supported on e_3..e_{n+1}, with
    ``a^(i) = e1∧e2∧w12 + e1∧w1 + e2∧w2 + wt``.
    """
    vecs = [[as_rational(x) for x in v] for v in a_vectors]
    d, i = len(vecs[0]), len(vecs)
    tails = [MultiVector(d, 1, {(k,): v[k] for k in range(2, d)}) for v in vecs]

    def wedge_tails(skip):
        items = [tails[j] for j in range(i) if j not in skip]
        if not items:
            return MultiVector(d, 0, {(): Fraction(1)})
        return wedge_all(items)

    def zero(g):
        return MultiVector(d, g, {})

    w1, w2 = zero(i - 1), zero(i - 1)
    for j in range(i):
        # moving the e_k factor from slot j to the front costs (-1)^j
        sign = -1 if j % 2 else 1
        rest = wedge_tails({j})
        if vecs[j][0]:
            w1 = w1 + rest.scale(sign * vecs[j][0])
        if vecs[j][1]:
            w2 = w2 + rest.scale(sign * vecs[j][1])
    w12 = zero(i - 2) if i >= 2 else None
    if i >= 2:
        for j in range(i):
            for l in range(i):
                if j == l or not vecs[j][0] or not vecs[l][1]:
                    continue
                order = [j, l] + [k for k in range(i) if k not in (j, l)]
                sign = _perm_parity(order)
                w12 = w12 + wedge_tails({j, l}).scale(sign * vecs[j][0] * vecs[l][1])
    wt = wedge_all(tails)
    return {"w12": w12, "w1": w1, "w2": w2, "wt": wt}


def _shear_norm2(a_vectors, theta) -> Fraction:
    """‖u(theta e_1)(a_1∧…∧a_i)‖²."""
    d = len(a_vectors[0])
    U = make_u([theta] + [0] * (d - 2))
    return norm2(MultiVector.from_vectors([U.apply(v) for v in a_vectors]))


def check_shear_condition(a_vectors, rho, L) -> bool:
    i = len(a_vectors)
    bound = as_rational(rho) ** (2 * i)
    return all(_shear_norm2(a_vectors, th) <= bound for th in (Fraction(0), as_rational(L)))


def wedge_decompose(a_vectors, rho, L, check: bool = True, strict: bool = True):
    """Return :class:`CaseA` or :class:`CaseB` for vectors a_1..a_i with a short shear orbit.

    Precondition: ``‖u(Θe_1)(a_1∧…∧a_i)‖ <= rho^i`` at Θ = 0 and Θ = L.

    CaseA is searched first by exhaustive enumeration of the span lattice
    ``Span_Z(a_1..a_i)`` in the ball of radius rho.  Otherwise (only for
    i >= 2) the wedge is split along e_1 and both norm bounds are verified
    exactly on squares.  :class:`DecompositionError` is raised if neither
    alternative can be certified.

    With ``strict=False`` a last attempt accepts a CaseA vector of length up
    to ``sqrt(i)·rho`` (the Minkowski radius of the span lattice).  There are
    inputs with i >= 2 where only this weaker alternative holds, e.g.
    a_1 = (-1, 0, -2, -1/2), a_2 = (-2, 0, 0, -1), rho = 17/8, L = 1000.
    """
    vecs = [[as_rational(x) for x in v] for v in a_vectors]
    rho, L = as_rational(rho), as_rational(L)
    i, d = len(vecs), len(vecs[0])
    n = d - 1
    if not 1 <= i <= n:
        raise ValueError("need 1 <= i <= n")
    if rho <= 0 or L < 1:
        raise ValueError("need rho > 0 and L >= 1")
    if check and not check_shear_condition(vecs, rho, L):
        raise ValueError("precondition violated: shear orbit of the wedge is not short")
    A = MultiVector.from_vectors(vecs)
    if A.is_zero():
        if i == 1:
            return CaseA(tuple(Fraction(0) for _ in range(d)), (0,))
        return CaseB(MultiVector(d, i - 1, {}), MultiVector(d, i, {}))
    G = gram(vecs)
    found = _search_case_a(vecs, G, rho, L, 1)
    if found is not None:
        return found
    if i == 1:
        raise DecompositionError("no short vector with small second coordinate (i = 1)")
    parts = explicit_expansion(vecs)
    e1 = MultiVector.basis(d, (0,))
    e2 = MultiVector.basis(d, (1,))
    w_im1 = parts["w1"] + (wedge(e2, parts["w12"]) if i >= 2 else MultiVector(d, i - 1, {}))
    w_i = wedge(e2, parts["w2"]) + parts["wt"]
    if wedge(e1, w_im1) + w_i != A:
        raise ArithmeticError("expansion does not reconstruct the wedge")
    ok_lower = norm2(w_im1) <= rho ** (2 * i)
    ok_upper = norm2(w_i) * L <= 16 * n * rho ** (2 * i)
    if ok_lower and ok_upper:
        return CaseB(w_im1, w_i)
    if not strict:
        found = _search_case_a(vecs, G, rho, L, i)
        if found is not None:
            return found
    raise DecompositionError("neither alternative holds for this input")


def _search_case_a(vecs, G, rho, L, factor):
    """Lattice vector a with ‖a‖² <= factor·rho² and a_2²·L <= rho², if any."""
    i, d = len(vecs), len(vecs[0])
    best = None
    for _, c in enumerate_gram(G, factor * rho * rho):
        a = tuple(sum((c[j] * vecs[j][k] for j in range(i)), Fraction(0)) for k in range(d))
        if a[1] ** 2 * L <= rho * rho:
            key = (a[1] ** 2, sum(x * x for x in a))
            if best is None or key < best[0]:
                best = (key, a, c)
    if best is None:
        return None
    return CaseA(best[1], best[2], factor)


# ---------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class OrbitSample:
    t: Fraction
    norm2: object
    witness: tuple | None
    status: str = "ok"


def orbit_trajectory(weights, point, t_grid, precision: int = DEFAULT_PRECISION) -> list[OrbitSample]:
    """Shortest-vector norm² of a(t)u(point)·Z^{n+1} along a grid of times."""
    w = weights if isinstance(weights, Weights) else Weights(tuple(weights))
    pt = [_scalar(v) for v in point]
    if len(pt) != w.n:
        raise ValueError("point dimension does not match the weights")
    out = []
    U = make_u(pt)
    for t in t_grid:
        t = as_rational(t)
        if t < 0:
            raise ValueError("times must be non-negative")
        L = a_real(w, t, precision) @ U
        try:
            val, wit = shortest_vector(L, precision=precision)
            out.append(OrbitSample(t, val, wit))
        except IndeterminateError:
            out.append(OrbitSample(t, None, None, "indeterminate"))
    return out


def orbit_floor(samples) -> Fraction | None:
    """Certified lower bound on the minimum over the sampled times."""
    lows = [s.norm2.lo if isinstance(s.norm2, RInterval) else s.norm2 for s in samples if s.norm2 is not None]
    return min(lows) if lows else None


def trajectory_csv(samples) -> str:
    from .arith import float_down, float_up
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t", "norm2_lo", "norm2_hi", "witness"])
    for s in samples:
        if s.norm2 is None:
            wr.writerow([rational_to_str(s.t), "", "", "indeterminate"])
            continue
        lo = s.norm2.lo if isinstance(s.norm2, RInterval) else s.norm2
        hi = s.norm2.hi if isinstance(s.norm2, RInterval) else s.norm2
        wr.writerow([rational_to_str(s.t), repr(float_down(lo)), repr(float_up(hi)),
                     " ".join(str(c) for c in s.witness)])
    return buf.getvalue()
