"""Lattices L·Z^d given by square bases: exact LLL, Fincke–Pohst enumeration,
shortest vectors and membership in the compact sets K_eps.

A lattice basis is a :class:`SquareMap` whose *columns* generate the
lattice.  Entries may be Fractions, :class:`~badlatt.arith.RInterval`
enclosures, or exact :class:`~badlatt.arith.PowerSum` values (sums of
rational powers of one integer base).  PowerSum entries keep every
comparison decidable: interval enclosures locate the candidates and exact
sign tests settle the ties.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .arith import (
    DEFAULT_PRECISION,
    IndeterminateError,
    PowerSum,
    RInterval,
    as_rational,
    iv_sqrt,
    precision_cap,
)

MAX_DIM = 6


# ---------------------------------------------------------------------------
# square maps


class SquareMap:
    """Square matrix acting on column vectors; its columns span a lattice."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        d = len(rows)
        if any(len(r) != d for r in rows):
            raise ValueError("matrix is not square")
        self.entries = [[_norm_scalar(x) for x in r] for r in rows]

    @classmethod
    def identity(cls, d: int) -> "SquareMap":
        return cls([[Fraction(int(i == j)) for j in range(d)] for i in range(d)])

    @classmethod
    def diag(cls, values) -> "SquareMap":
        values = list(values)
        d = len(values)
        return cls([[values[i] if i == j else Fraction(0) for j in range(d)] for i in range(d)])

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def column(self, j: int) -> list:
        return [row[j] for row in self.entries]

    def kind(self) -> str:
        """'rational', 'powersum' or 'interval' (the widest kind present)."""
        kinds = {type(x) for row in self.entries for x in row}
        if RInterval in kinds:
            return "interval"
        if PowerSum in kinds:
            return "powersum"
        return "rational"

    def __matmul__(self, other: "SquareMap") -> "SquareMap":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        A, B, d = self.entries, other.entries, self.dim
        out = []
        for i in range(d):
            row = []
            for j in range(d):
                s = Fraction(0)
                for k in range(d):
                    a, b = A[i][k], B[k][j]
                    if _nonzero(a) and _nonzero(b):
                        s = _mul(a, b) if _is_exact_zero(s) else s + _mul(a, b)
                row.append(s)
            out.append(row)
        return SquareMap(out)

    def apply(self, c) -> list:
        out = []
        for row in self.entries:
            s = Fraction(0)
            for a, x in zip(row, c):
                if x and _nonzero(a):
                    s = s + a * x
            out.append(s)
        return out

    def transpose(self) -> "SquareMap":
        return SquareMap([list(r) for r in zip(*self.entries)])

    def enclose(self, bits: int = DEFAULT_PRECISION) -> "SquareMap":
        """Entries as Fractions or RIntervals (PowerSums are enclosed)."""
        return SquareMap([[x.enclose(bits) if isinstance(x, PowerSum) else x for x in row]
                          for row in self.entries])

    def midpoint(self) -> list[list[Fraction]]:
        return [[x.mid if isinstance(x, RInterval) else x for x in row] for row in self.enclose().entries]

    def det(self, bits: int = DEFAULT_PRECISION):
        from .exterior import det
        if self.kind() == "powersum":
            return _det_exact(self.entries)
        return det(self.entries)

    def inverse(self) -> "SquareMap":
        if self.kind() != "rational":
            raise TypeError("exact inverse requires rational entries")
        return SquareMap(_rational_inverse(self.entries))

    def max_abs_diff(self, other: "SquareMap", bits: int = DEFAULT_PRECISION):
        """Enclosure of max_ij |self_ij - other_ij| (exact zero when both agree exactly)."""
        best = None
        for ra, rb in zip(self.entries, other.entries):
            for a, b in zip(ra, rb):
                diff = _sub(a, b)
                if isinstance(diff, PowerSum):
                    if diff.is_zero():
                        diff = Fraction(0)
                    else:
                        diff = diff.enclose(bits)
                diff = abs(diff)
                if best is None:
                    best = diff
                elif isinstance(diff, RInterval) or isinstance(best, RInterval):
                    lo = max(_lo(best), _lo(diff))
                    hi = max(_hi(best), _hi(diff))
                    best = RInterval(lo, hi, bits)
                else:
                    best = max(best, diff)
        return best

    def exactly_equal(self, other: "SquareMap") -> bool:
        if self.kind() == "interval" or other.kind() == "interval":
            return False
        return self.max_abs_diff(other) == 0

    def to_json(self, bits: int = DEFAULT_PRECISION) -> list:
        from .arith import rational_to_str
        out = []
        for row in self.enclose(bits).entries:
            out.append([x.to_json() if isinstance(x, RInterval) else rational_to_str(x) for x in row])
        return out

    def __repr__(self):
        return f"SquareMap({self.entries!r})"


def _norm_scalar(x):
    if isinstance(x, (RInterval, PowerSum)):
        if isinstance(x, PowerSum):
            if not x.terms:
                return Fraction(0)
            if set(x.terms) == {Fraction(0)}:
                return x.terms[Fraction(0)]
        return x
    return as_rational(x)


def _is_exact_zero(x) -> bool:
    return isinstance(x, Fraction) and x == 0


def _nonzero(x) -> bool:
    if isinstance(x, Fraction):
        return x != 0
    if isinstance(x, PowerSum):
        return bool(x.terms)
    return True


def _mul(a, b):
    if isinstance(a, PowerSum) and isinstance(b, RInterval):
        a = a.enclose(b.bits or DEFAULT_PRECISION)
    if isinstance(b, PowerSum) and isinstance(a, RInterval):
        b = b.enclose(a.bits or DEFAULT_PRECISION)
    return a * b


def _sub(a, b):
    if isinstance(a, PowerSum) and isinstance(b, RInterval):
        a = a.enclose(b.bits or DEFAULT_PRECISION)
    if isinstance(b, PowerSum) and isinstance(a, RInterval):
        b = b.enclose(a.bits or DEFAULT_PRECISION)
    return a - b


def _lo(x):
    return x.lo if isinstance(x, RInterval) else x


def _hi(x):
    return x.hi if isinstance(x, RInterval) else x


def _det_exact(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    total = Fraction(0)
    for j in range(n):
        if not _nonzero(M[0][j]):
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det_exact(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _rational_inverse(M):
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [x / piv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


# ---------------------------------------------------------------------------
# Gram matrices and LLL


def gram(columns) -> list[list[Fraction]]:
    """Gram matrix of a list of rational vectors."""
    k = len(columns)
    G = [[Fraction(0)] * k for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            s = sum((a * b for a, b in zip(columns[i], columns[j])), Fraction(0))
            G[i][j] = G[j][i] = s
    return G


def _gso(G):
    """Gram–Schmidt data (mu, B) computed from a Gram matrix."""
    k = len(G)
    mu = [[Fraction(0)] * k for _ in range(k)]
    B = [Fraction(0)] * k
    for i in range(k):
        for j in range(i):
            s = G[i][j] - sum((mu[j][m] * mu[i][m] * B[m] for m in range(j)), Fraction(0))
            mu[i][j] = s / B[j]
        B[i] = G[i][i] - sum((mu[i][m] ** 2 * B[m] for m in range(i)), Fraction(0))
        if B[i] <= 0:
            raise ValueError("Gram matrix is not positive definite")
    return mu, B


def lll_gram(G, delta: Fraction = Fraction(3, 4)):
    """Exact LLL on a positive-definite rational Gram matrix.

    Returns ``(T, G')`` with T an integer unimodular matrix (new basis vector
    j is ``sum_i T[i][j] b_i``) and ``G' = T^t G T``.
    """
    k = len(G)
    G = [list(map(Fraction, row)) for row in G]
    T = [[int(i == j) for j in range(k)] for i in range(k)]

    def col_addmul(dst, src, f):
        # b_dst += f * b_src
        for row in T:
            row[dst] += f * row[src]
        for i in range(k):
            G[i][dst] += f * G[i][src]
        for j in range(k):
            G[dst][j] += f * G[src][j]

    def col_swap(a, b):
        for row in T:
            row[a], row[b] = row[b], row[a]
        for row in G:
            row[a], row[b] = row[b], row[a]
        G[a], G[b] = G[b], G[a]

    i = 1
    while i < k:
        mu, B = _gso(G)
        for j in range(i - 1, -1, -1):
            r = round(mu[i][j])
            if r:
                col_addmul(i, j, -r)
                mu, B = _gso(G)
        if B[i] >= (delta - mu[i][i - 1] ** 2) * B[i - 1]:
            i += 1
        else:
            col_swap(i, i - 1)
            i = max(i - 1, 1)
    return T, G


def lll_reduce(vectors) -> list[list]:
    """LLL-reduce a list of independent rational vectors (same lattice, shorter basis)."""
    vecs = [[as_rational(x) for x in v] for v in vectors]
    T, _ = lll_gram(gram(vecs))
    k = len(vecs)
    out = []
    for j in range(k):
        v = [sum((T[i][j] * vecs[i][m] for i in range(k)), Fraction(0)) for m in range(len(vecs[0]))]
        out.append([int(x) if x.denominator == 1 else x for x in v])
    return out


# ---------------------------------------------------------------------------
# enumeration


def enumerate_gram(G, bound: Fraction, strict: bool = False):
    """All nonzero integer c (one of each ±c pair) with c^t G c <= bound.

    Exhaustive Fincke–Pohst enumeration over the exact Cholesky form of G.
    Returns a list of ``(value, c)`` pairs.
    """
    k = len(G)
    mu, B = _gso(G)
    bound = as_rational(bound)
    out = []
    c = [0] * k

    def center(i):
        return -sum((mu[j][i] * c[j] for j in range(i + 1, k)), Fraction(0))

    def rec(i, rem):
        cen = center(i)
        # |c_i - cen|^2 * B[i] <= rem
        lim = rem / B[i]
        s = math.isqrt(lim.numerator // lim.denominator) + 1
        lo, hi = math.floor(cen - s), math.ceil(cen + s)
        for x in range(lo, hi + 1):
            t = (x - cen) ** 2 * B[i]
            if t > rem:
                continue
            c[i] = x
            left = rem - t
            if i == 0:
                if any(c):
                    val = bound - left
                    if not strict or val < bound:
                        out.append((val, tuple(c)))
            else:
                rec(i - 1, left)
        c[i] = 0

    if bound >= 0:
        rec(k - 1, bound)
    # keep one representative of each ±c pair: first nonzero coordinate positive
    seen = []
    for val, vec in out:
        first = next(x for x in vec if x)
        if first > 0:
            seen.append((val, vec))
    return seen


def _columns_rational(L: SquareMap):
    return [[as_rational(x) for x in L.column(j)] for j in range(L.dim)]


def _frob2(M) -> Fraction:
    return sum((x * x for row in M for x in row), Fraction(0))


def _norm2_interval(L: SquareMap, c, bits):
    v = L.apply(c)
    total = Fraction(0)
    for x in v:
        total = total + (x.sqr() if isinstance(x, RInterval) else x * x)
    if isinstance(total, Fraction):
        return total
    return total


def _norm2_exact(L: SquareMap, c):
    v = L.apply(c)
    total = Fraction(0)
    for x in v:
        total = total + x * x
    return total


def _candidates(L: SquareMap, bound_hi: Fraction, bits: int):
    """Coefficient vectors that may satisfy ‖Lc‖² <= bound_hi (superset, proven)."""
    if L.dim > MAX_DIM:
        raise ValueError(f"dimension {L.dim} exceeds enumeration limit {MAX_DIM}")
    Le = L.enclose(bits)
    if Le.kind() == "rational":
        G = gram(_columns_rational(Le))
        T, Gr = lll_gram(G)
        raw = enumerate_gram(Gr, bound_hi)
        return Le, [(_map(T, c)) for _, c in raw]
    d = L.dim
    mid = [[x.mid if isinstance(x, RInterval) else x for x in row] for row in Le.entries]
    rad = [[x.rad if isinstance(x, RInterval) else Fraction(0) for x in row] for row in Le.entries]
    cols = [[mid[i][j] for i in range(d)] for j in range(d)]
    T, Gr = lll_gram(gram(cols))
    # Work in the reduced basis M T, whose perturbation is bounded by rad·|T|,
    # with columns rescaled by a positive diagonal S (roughly their lengths):
    # ‖(L - M) T c‖ <= ‖E S^-1‖ ‖S c‖ <= s ‖M T c‖ with
    # s = ‖E S^-1‖_F ‖(M T S^-1)^-1‖_F, so every c with ‖L T c‖² <= bound
    # has ‖M T c‖² <= bound / (1 - s)².
    scale = [iv_sqrt(Gr[j][j], 32).lo or Fraction(1) for j in range(d)]
    MT = [[sum(mid[i][k] * T[k][j] for k in range(d)) / scale[j] for j in range(d)] for i in range(d)]
    ET = [[sum(rad[i][k] * abs(T[k][j]) for k in range(d)) / scale[j] for j in range(d)] for i in range(d)]
    try:
        kappa2 = _frob2(_rational_inverse(MT))
    except ZeroDivisionError:
        raise IndeterminateError("midpoint basis singular") from None
    s2 = _frob2(ET) * kappa2
    if s2 >= Fraction(1, 4):
        raise IndeterminateError("interval basis too wide to bound the enumeration")
    s_hi = iv_sqrt(s2, 64).hi if s2 else Fraction(0)
    inflated = bound_hi / (1 - s_hi) ** 2
    raw = enumerate_gram(Gr, inflated)
    return Le, [_map(T, c) for _, c in raw]


def _map(T, c):
    k = len(T)
    return tuple(sum(T[i][j] * c[j] for j in range(k)) for i in range(k))


def _upper_bound_shortest(L: SquareMap, bits: int) -> Fraction:
    """Upper bound on the minimum from LLL-reduced midpoint basis columns."""
    Le = L.enclose(bits)
    mid = [[x.mid if isinstance(x, RInterval) else x for x in row] for row in Le.entries]
    cols = [[mid[i][j] for i in range(L.dim)] for j in range(L.dim)]
    T, _ = lll_gram(gram(cols))
    best = None
    for j in range(L.dim):
        c = tuple(T[i][j] for i in range(L.dim))
        hi = _hi(_norm2_interval(Le, c, bits))
        if best is None or hi < best:
            best = hi
    return best


def shortest_vector(L: SquareMap, lower_bound_only: bool = False, precision: int = DEFAULT_PRECISION):
    """Minimal nonzero ‖Lc‖² over integer c, with a coefficient witness c.

    Exact Fraction for rational bases; an RInterval enclosure otherwise, whose
    upper end is attained (up to rounding) by the returned witness.  With
    ``lower_bound_only`` only the lower end of the minimum is returned.
    """
    if not isinstance(L, SquareMap):
        L = SquareMap(L)
    if L.kind() == "rational":
        G = gram(_columns_rational(L))
        T, Gr = lll_gram(G)
        bound = min(Gr[i][i] for i in range(L.dim))
        cands = enumerate_gram(Gr, bound)
        val, c = min(cands, key=lambda vc: (vc[0], _canon_key(_map(T, vc[1]))))
        w = _canonical(_map(T, c))
        return (val, None) if lower_bound_only else (val, w)

    def attempt(bits):
        try:
            ub = _upper_bound_shortest(L, bits)
            Le, cands = _candidates(L, ub, bits)
        except IndeterminateError:
            return None
        lo_best, hi_best, wit = None, None, None
        for c in cands:
            v = _norm2_interval(Le, c, bits)
            lo, hi = _lo(v), _hi(v)
            if lo_best is None or lo < lo_best:
                lo_best = lo
            if hi_best is None or hi < hi_best or (hi == hi_best and _canon_key(c) < _canon_key(wit)):
                hi_best, wit = hi, _canonical(c)
        return RInterval(lo_best, hi_best, bits), wit

    enc, wit = _resolve(attempt, precision)
    return (enc.lo, None) if lower_bound_only else (enc, wit)


def _canonical(c):
    c = tuple(int(x) for x in c)
    first = next((x for x in c if x), 0)
    return c if first >= 0 else tuple(-x for x in c)


def _canon_key(c):
    if c is None:
        return (float("inf"),)
    return (sum(abs(x) for x in c), tuple(-abs(x) for x in c), c)


def _resolve(fn, precision):
    bits, cap = precision, max(precision, precision_cap())
    while True:
        out = fn(bits)
        if out is not None:
            return out
        if bits >= cap:
            raise IndeterminateError(f"lattice computation unresolved at {bits} bits")
        bits = min(2 * bits, cap)


def _threshold_bounds(eps2, bits):
    if isinstance(eps2, PowerSum):
        iv = eps2.enclose(bits)
        return iv.lo, iv.hi
    if isinstance(eps2, RInterval):
        return eps2.lo, eps2.hi
    eps2 = as_rational(eps2)
    return eps2, eps2


def find_short(L: SquareMap, eps2, precision: int = DEFAULT_PRECISION, exact: bool = True,
               escalate: bool = True):
    """Decide whether some nonzero lattice vector has ‖Lc‖² < eps2.

    Returns ``(flag, witness)``: flag True with a witness c when a short
    vector exists, False when none exists, None when undecidable at the
    precision cap (only possible for RInterval inputs).
    """
    if not isinstance(L, SquareMap):
        L = SquareMap(L)
    kind = L.kind()
    if kind == "rational" and not isinstance(eps2, (PowerSum, RInterval)):
        eps2 = as_rational(eps2)
        G = gram(_columns_rational(L))
        T, Gr = lll_gram(G)
        cands = enumerate_gram(Gr, eps2, strict=True)
        if cands:
            val, c = min(cands, key=lambda vc: vc[0])
            return True, _canonical(_map(T, c))
        return False, None
    decidable = exact and kind != "interval" and not isinstance(eps2, RInterval)

    def attempt(bits):
        lo_eps, hi_eps = _threshold_bounds(eps2, bits)
        try:
            Le, cands = _candidates(L, hi_eps, bits)
        except IndeterminateError:
            return None
        undecided = []
        for c in cands:
            v = _norm2_interval(Le, c, bits)
            if _hi(v) < lo_eps:
                return True, _canonical(c)
            if _lo(v) < hi_eps:
                undecided.append(c)
        if not undecided:
            return False, None
        if decidable:
            for c in undecided:
                diff = _as_ps(_norm2_exact(L, c)) - _as_ps(eps2)
                if diff.sign(bits) < 0:
                    return True, _canonical(c)
            return False, None
        return None

    if not escalate:
        out = attempt(precision)
        return out if out is not None else (None, None)
    try:
        return _resolve(attempt, precision)
    except IndeterminateError:
        return None, None


def _as_ps(x):
    return x if isinstance(x, PowerSum) else PowerSum.rational(x)


def in_K_eps(L: SquareMap, eps2, precision: int = DEFAULT_PRECISION):
    """True iff every nonzero vector of L·Z^d has squared norm >= eps2.

    ``eps2`` is the squared threshold.  Returns None when an interval basis
    cannot be resolved at the precision cap.
    """
    flag, _ = find_short(L, eps2, precision)
    if flag is None:
        return None
    return not flag


def minkowski_short(vectors, transform: SquareMap | None = None):
    """Shortest nonzero integer combination of the images ``transform·v_j``.

    Returns ``(coeffs, image)`` where ``image = sum coeffs_j transform·v_j``.
    The shortest vector always satisfies Minkowski's bound
    ``‖image‖ <= sqrt(i) * covol^(1/i)``, which is checked exactly.
    """
    vecs = [[as_rational(x) for x in v] for v in vectors]
    if transform is not None:
        T = transform if isinstance(transform, SquareMap) else SquareMap(transform)
        if T.kind() != "rational":
            raise TypeError("minkowski_short needs a rational transform")
        vecs = [T.apply(v) for v in vecs]
    i = len(vecs)
    G = gram(vecs)
    from .exterior import det, rank
    if rank(vecs) != i:
        raise ValueError("images are linearly dependent")
    Tm, Gr = lll_gram(G)
    bound = min(Gr[j][j] for j in range(i))
    val, c = min(enumerate_gram(Gr, bound), key=lambda vc: vc[0])
    coeffs = _canonical(_map(Tm, c))
    image = [sum((coeffs[j] * vecs[j][m] for j in range(i)), Fraction(0)) for m in range(len(vecs[0]))]
    # Minkowski: ‖v‖^(2i) <= i^i * det(G)
    if val ** i > Fraction(i) ** i * det(G):
        raise ArithmeticError("Minkowski bound violated; enumeration is broken")
    return coeffs, image
