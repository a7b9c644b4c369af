"""Exterior algebra over (n+1)-space and integer-collection utilities.

A :class:`MultiVector` of grade r stores its Plücker coordinates in the
standard basis ``e_I`` indexed by strictly increasing r-subsets ``I``.
Indices are 0-based internally; JSON uses the 1-based ``"1,3"`` convention.

Lattice routines (shortest vectors, membership in K_eps, Minkowski short
vectors) live in :mod:`badlatt.lattice` and are re-exported here.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .arith import RInterval, as_rational, rational_to_str


def _is_zero(x) -> bool:
    if isinstance(x, RInterval):
        return x.lo == 0 and x.hi == 0
    return x == 0


def _zero_like(x):
    return Fraction(0)


def _perm_sign(I, J) -> int:
    """Sign of the shuffle sorting the concatenation I + J (I, J disjoint and sorted)."""
    inv = 0
    for i in I:
        for j in J:
            if i > j:
                inv += 1
    return -1 if inv % 2 else 1


class MultiVector:
    """Element of the r-th exterior power of ``dim``-space.

    ``coords`` maps sorted tuples of 0-based indices to scalars.  Missing keys
    are zero; :meth:`coord` and :meth:`items` expose the full set of
    C(dim, r) coordinates.
    """

    __slots__ = ("dim", "grade", "coords")

    def __init__(self, dim: int, grade: int, coords: dict | None = None):
        if not 0 <= grade <= dim:
            raise ValueError(f"grade {grade} out of range for dimension {dim}")
        self.dim = dim
        self.grade = grade
        self.coords = {}
        for key, val in (coords or {}).items():
            key = tuple(key)
            if len(key) != grade or list(key) != sorted(set(key)) or (key and not 0 <= key[0] <= key[-1] < dim):
                raise ValueError(f"bad index set {key}")
            if not _is_zero(val):
                self.coords[key] = val

    # -- constructors --------------------------------------------------------
    @classmethod
    def vector(cls, v) -> "MultiVector":
        v = [x if isinstance(x, RInterval) else as_rational(x) for x in v]
        return cls(len(v), 1, {(i,): x for i, x in enumerate(v)})

    @classmethod
    def basis(cls, dim: int, index) -> "MultiVector":
        index = tuple(sorted(index))
        return cls(dim, len(index), {index: Fraction(1)})

    @classmethod
    def from_vectors(cls, vectors) -> "MultiVector":
        return wedge_all([cls.vector(v) for v in vectors])

    # -- access --------------------------------------------------------------
    def coord(self, index):
        return self.coords.get(tuple(index), Fraction(0))

    def index_sets(self):
        return itertools.combinations(range(self.dim), self.grade)

    def items(self):
        for I in self.index_sets():
            yield I, self.coord(I)

    def as_vector(self) -> list:
        if self.grade != 1:
            raise ValueError("not a grade-1 element")
        return [self.coord((i,)) for i in range(self.dim)]

    def is_zero(self) -> bool:
        return not self.coords

    # -- linear structure ----------------------------------------------------
    def _check(self, other):
        if not isinstance(other, MultiVector):
            raise TypeError("expected MultiVector")
        if (self.dim, self.grade) != (other.dim, other.grade):
            raise ValueError("dimension or grade mismatch")

    def __add__(self, other):
        self._check(other)
        out = dict(self.coords)
        for k, v in other.coords.items():
            out[k] = out[k] + v if k in out else v
        return MultiVector(self.dim, self.grade, out)

    def __neg__(self):
        return MultiVector(self.dim, self.grade, {k: -v for k, v in self.coords.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return MultiVector(self.dim, self.grade, {k: c * v for k, v in self.coords.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        if not isinstance(other, MultiVector):
            return NotImplemented
        return (self.dim, self.grade) == (other.dim, other.grade) and (self - other).is_zero()

    def __hash__(self):
        return hash((self.dim, self.grade, frozenset(self.coords.items())))

    def __repr__(self):
        body = ", ".join(f"{_key_str(k)}: {v}" for k, v in sorted(self.coords.items()))
        return f"MultiVector(dim={self.dim}, grade={self.grade}, {{{body}}})"

    # -- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        coords = {}
        for k, v in sorted(self.coords.items()):
            coords[_key_str(k)] = v.to_json() if isinstance(v, RInterval) else rational_to_str(v)
        return {"dim": self.dim, "grade": self.grade, "coords": coords}

    @classmethod
    def from_json(cls, obj: dict) -> "MultiVector":
        coords = {}
        for k, v in obj["coords"].items():
            key = tuple(int(s) - 1 for s in k.split(",")) if k else ()
            coords[key] = RInterval.from_json(v) if isinstance(v, dict) else as_rational(v)
        return cls(obj["dim"], obj["grade"], coords)


def _key_str(key) -> str:
    return ",".join(str(i + 1) for i in key)


def wedge(a: MultiVector, b: MultiVector) -> MultiVector:
    """Exterior product a ∧ b."""
    if a.dim != b.dim:
        raise ValueError("ambient dimensions differ")
    if a.grade + b.grade > a.dim:
        raise ValueError(f"grade overflow: {a.grade} + {b.grade} > {a.dim}")
    out: dict = {}
    for I, x in a.coords.items():
        sI = set(I)
        for J, y in b.coords.items():
            if sI.intersection(J):
                continue
            K = tuple(sorted(I + J))
            term = x * y if _perm_sign(I, J) > 0 else -(x * y)
            out[K] = out[K] + term if K in out else term
    return MultiVector(a.dim, a.grade + b.grade, out)


def wedge_all(items) -> MultiVector:
    items = list(items)
    if not items:
        raise ValueError("empty wedge")
    out = items[0]
    for v in items[1:]:
        out = wedge(out, v)
    return out


def dot(a: MultiVector, b: MultiVector):
    """Inner product for which the e_I are orthonormal."""
    a._check(b)
    total = Fraction(0)
    for k, v in a.coords.items():
        w = b.coords.get(k)
        if w is not None:
            total = total + v * w
    return total


def norm2(a: MultiVector):
    total = Fraction(0)
    for v in a.coords.values():
        total = total + (v.sqr() if isinstance(v, RInterval) else v * v)
    return total


# ---------------------------------------------------------------------------
# determinants and matrix actions


def det(M):
    """Determinant of a square matrix of Fractions (Gaussian elimination) or intervals (cofactors)."""
    n = len(M)
    if n == 0:
        return Fraction(1)
    if any(isinstance(x, RInterval) or not isinstance(x, (int, Fraction)) for row in M for x in row):
        return _det_cofactor([list(row) for row in M])
    A = [[Fraction(x) for x in row] for row in M]
    sign = 1
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            sign = -sign
        piv = A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / piv
            if f:
                row_r, row_c = A[r], A[c]
                for k in range(c + 1, n):
                    row_r[k] -= f * row_c[k]
    out = Fraction(sign)
    for i in range(n):
        out *= A[i][i]
    return out


def _det_cofactor(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = Fraction(0)
    for j in range(n):
        if _is_zero(M[0][j]):
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det_cofactor(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def rank(rows) -> int:
    A = [[Fraction(x) for x in row] for row in rows]
    if not A:
        return 0
    m, n = len(A), len(A[0])
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c] / A[r][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        r += 1
        if r == m:
            break
    return r


def _entries(L):
    return L.entries if hasattr(L, "entries") else L


def apply_map(L, v: MultiVector) -> MultiVector:
    """Induced action of L on the exterior power: L(v1∧…∧vr) = Lv1∧…∧Lvr.

    Coordinates are ``(Lv)_I = sum_J det(L[I, J]) v_J``.
    """
    M = _entries(L)
    d = len(M)
    if d != v.dim:
        raise ValueError("dimension mismatch")
    if v.grade == 0:
        return v
    out: dict = {}
    for J, x in v.coords.items():
        cols = [[M[i][j] for j in J] for i in range(d)]
        for I in itertools.combinations(range(d), v.grade):
            minor = det([cols[i] for i in I])
            if _is_zero(minor):
                continue
            term = minor * x
            out[I] = out[I] + term if I in out else term
    return MultiVector(d, v.grade, out)


def mat_vec(L, v):
    M = _entries(L)
    out = []
    for row in M:
        s = Fraction(0)
        for a, b in zip(row, v):
            if not _is_zero(a) and not _is_zero(b):
                s = s + a * b
        out.append(s)
    return out


# ---------------------------------------------------------------------------
# integer collections


def _int_rows(vectors) -> list[list[int]]:
    rows = []
    for v in vectors:
        row = []
        for x in v:
            x = as_rational(x)
            if x.denominator != 1:
                raise ValueError(f"non-integer entry {x}")
            row.append(int(x))
        rows.append(row)
    return rows


def laplace_gram(u, v) -> Fraction:
    """``|det(u_i · v_j)|``, which equals ``|(u1∧…∧ur)·(v1∧…∧vr)|``."""
    if len(u) != len(v):
        raise ValueError("collections must have equal size")
    if u and len(u[0]) != len(v[0]):
        raise ValueError("ambient dimensions differ")
    G = [[sum(Fraction(a) * Fraction(b) for a, b in zip(ui, vj)) for vj in v] for ui in u]
    return abs(det(G))


def maximal_minors(vectors) -> dict:
    """Plücker coordinates of the row collection (nonzero ones only)."""
    return MultiVector.from_vectors(vectors).coords


def is_primitive(vectors) -> bool:
    """True iff the integer span equals the integer points of the real span.

    Equivalent to the gcd of the maximal minors being 1.
    """
    rows = _int_rows(vectors)
    if rank(rows) != len(rows):
        raise ValueError("vectors are linearly dependent")
    g = 0
    for val in maximal_minors(rows).values():
        g = math.gcd(g, int(val))
        if g == 1:
            return True
    return g == 1


def integer_kernel(rows) -> list[list[int]]:
    """Z-basis of ``{x in Z^d : A x = 0}`` for an integer matrix A given by rows.

    Column operations reduce A to ``A V = [B | 0]`` with V unimodular; the
    trailing columns of V span the kernel and extend to a basis of Z^d, so the
    returned collection is primitive.
    """
    A = _int_rows(rows)
    if not A:
        raise ValueError("empty matrix")
    m, d = len(A), len(A[0])
    V = [[int(i == j) for j in range(d)] for i in range(d)]

    def swap(c1, c2):
        for row in A:
            row[c1], row[c2] = row[c2], row[c1]
        for row in V:
            row[c1], row[c2] = row[c2], row[c1]

    def addmul(dst, src, f):
        for row in A:
            row[dst] += f * row[src]
        for row in V:
            row[dst] += f * row[src]

    pivot_col = 0
    for r in range(m):
        if pivot_col >= d:
            break
        while True:
            nz = [c for c in range(pivot_col, d) if A[r][c] != 0]
            if not nz:
                break
            c_min = min(nz, key=lambda c: abs(A[r][c]))
            if c_min != pivot_col:
                swap(c_min, pivot_col)
            done = True
            for c in range(pivot_col + 1, d):
                if A[r][c]:
                    addmul(c, pivot_col, -(A[r][c] // A[r][pivot_col]))
                    if A[r][c]:
                        done = False
            if done:
                break
        if any(A[r][c] for c in range(pivot_col, d)):
            pivot_col += 1
    return [[V[i][c] for i in range(d)] for c in range(pivot_col, d)]


def primitive_dual(vectors, reduce: bool = True) -> list[list[int]]:
    """Primitive collection u1..u_{d-r} orthogonal to a primitive v1..vr.

    For primitive input ``‖v1∧…∧vr‖ = ‖u1∧…∧u_{d-r}‖``.  With ``reduce`` the
    kernel basis is LLL-reduced, which changes neither its span nor its wedge
    up to sign.
    """
    rows = _int_rows(vectors)
    d = len(rows[0])
    if not 1 <= len(rows) < d:
        raise ValueError("need 1 <= r <= n")
    if not is_primitive(rows):
        raise ValueError("input collection is not primitive")
    ker = integer_kernel(rows)
    if reduce and len(ker) > 1:
        from .lattice import lll_reduce
        ker = lll_reduce(ker)
    return ker


def primitive_index(vectors) -> int:
    """Index of Span_Z(v) in Z^d ∩ Span_R(v): the gcd of the maximal minors."""
    g = 0
    for val in maximal_minors(_int_rows(vectors)).values():
        g = math.gcd(g, int(val))
    return g


def saturate(vectors) -> list[list[int]]:
    """A Z-basis of Z^d ∩ Span_R(vectors), for independent integer vectors."""
    rows = _int_rows(vectors)
    ker = integer_kernel(rows)
    if not ker:
        return [[int(i == j) for j in range(len(rows[0]))] for i in range(len(rows[0]))]
    return integer_kernel(ker)


from .lattice import SquareMap, in_K_eps, minkowski_short, shortest_vector  # noqa: E402,F401
