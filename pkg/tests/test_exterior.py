import itertools
import random
from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given, strategies as st

from badlatt.arith import RInterval
from badlatt.exterior import (
    MultiVector,
    SquareMap,
    apply_map,
    det,
    dot,
    integer_kernel,
    is_primitive,
    laplace_gram,
    mat_vec,
    norm2,
    primitive_dual,
    primitive_index,
    rank,
    saturate,
    wedge,
    wedge_all,
)

small = st.integers(-10, 10)


def vec(v):
    return MultiVector.vector(v)


def wedge_of(vectors):
    return MultiVector.from_vectors(vectors)


def minor_oracle(vectors):
    """Plücker coordinates via sympy minors, as a dict keyed by 0-based index tuples."""
    M = sympy.Matrix(vectors)
    r, d = M.shape
    out = {}
    for I in itertools.combinations(range(d), r):
        m = M.extract(list(range(r)), list(I)).det()
        if m != 0:
            out[I] = F(int(m))
    return out


def int_collection(rng, r, d, bound=10):
    while True:
        vs = [[rng.randint(-bound, bound) for _ in range(d)] for _ in range(r)]
        if rank(vs) == r:
            return vs


# -- wedge -------------------------------------------------------------------------

def test_basis_wedge():
    e1, e2 = MultiVector.basis(3, (0,)), MultiVector.basis(3, (1,))
    w = wedge(e1, e2)
    assert w.coord((0, 1)) == 1 and len(w.coords) == 1


def test_wedge_hand_example():
    w = wedge(vec([1, 2, 0]), vec([0, 1, 1]))
    assert w.coords == {(0, 1): 1, (0, 2): 1, (1, 2): 2}


def test_grade_overflow():
    a = wedge(vec([1, 0]), vec([0, 1]))
    with pytest.raises(ValueError):
        wedge(a, vec([1, 1]))


@given(st.lists(small, min_size=4, max_size=4))
def test_alternating(v):
    assert wedge(vec(v), vec(v)).is_zero()


@given(st.lists(small, min_size=4, max_size=4), st.lists(small, min_size=4, max_size=4),
       st.lists(small, min_size=4, max_size=4), small, small)
def test_bilinear_and_antisymmetric(a, b, c, s, t):
    A, B, C = vec(a), vec(b), vec(c)
    assert wedge(s * A + t * B, C) == s * wedge(A, C) + t * wedge(B, C)
    assert wedge(A, B) == -wedge(B, A)


@given(st.integers(0, 10 ** 9))
def test_wedge_matches_minor_oracle(seed):
    rng = random.Random(seed)
    d = rng.randint(2, 5)
    r = rng.randint(1, d)
    vs = [[rng.randint(-9, 9) for _ in range(d)] for _ in range(r)]
    assert wedge_of(vs).coords == minor_oracle(vs)


@given(st.lists(small, min_size=5, max_size=5), st.lists(small, min_size=5, max_size=5))
def test_submultiplicative(u, v):
    assert norm2(wedge(vec(u), vec(v))) <= norm2(vec(u)) * norm2(vec(v))


def test_interval_coordinates():
    a = MultiVector.vector([RInterval(F(1, 3), bits=64), F(1)])
    b = MultiVector.vector([F(0), RInterval(F(1, 7), bits=64)])
    w = wedge(a, b)
    assert w.coord((0, 1)).contains(F(1, 21))


def test_json_roundtrip():
    w = wedge(vec([1, 2, 0]), vec([0, 1, 1]))
    assert MultiVector.from_json(w.to_json()) == w


# -- matrix actions -------------------------------------------------------------------

def test_identity_action():
    w = wedge(vec([1, 2, 3]), vec([0, -1, 4]))
    assert apply_map(SquareMap.identity(3), w) == w


def test_top_grade_is_determinant():
    w = wedge(vec([1, 0]), vec([0, 1]))
    assert apply_map(SquareMap.diag([F(2), F(1, 2)]), w) == w


@given(st.integers(0, 10 ** 9))
def test_apply_map_matches_wedge_of_images(seed):
    rng = random.Random(seed)
    d = rng.randint(2, 5)
    r = rng.randint(1, d)
    L = [[F(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(d)] for _ in range(d)]
    vs = [[rng.randint(-5, 5) for _ in range(d)] for _ in range(r)]
    images = [mat_vec(L, v) for v in vs]
    assert apply_map(L, wedge_of(vs)) == wedge_of(images)


@given(st.integers(0, 10 ** 9))
def test_apply_map_multiplicative(seed):
    rng = random.Random(seed)
    d = rng.randint(2, 4)
    r = rng.randint(1, d)
    L1 = SquareMap([[rng.randint(-4, 4) for _ in range(d)] for _ in range(d)])
    L2 = SquareMap([[rng.randint(-4, 4) for _ in range(d)] for _ in range(d)])
    v = wedge_of([[rng.randint(-4, 4) for _ in range(d)] for _ in range(r)])
    v = v + wedge_of([[rng.randint(-4, 4) for _ in range(d)] for _ in range(r)])
    assert apply_map(L1 @ L2, v) == apply_map(L1, apply_map(L2, v))


@given(st.integers(0, 10 ** 9))
def test_det_against_sympy(seed):
    rng = random.Random(seed)
    d = rng.randint(1, 6)
    M = [[F(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(d)] for _ in range(d)]
    ref = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in M]).det()
    assert det(M) == F(int(ref.p), int(ref.q))


# -- Laplace identity -----------------------------------------------------------------

def test_laplace_examples():
    assert laplace_gram([[1, 0, 0]], [[1, 0, 0]]) == 1
    assert laplace_gram([[1, 0, 0], [0, 1, 0]], [[0, 1, 0], [0, 0, 1]]) == 0


def test_laplace_identity_random():
    rng = random.Random(1)
    for _ in range(300):
        d = rng.randint(2, 5)
        r = rng.randint(1, min(3, d))
        u = [[rng.randint(-10, 10) for _ in range(d)] for _ in range(r)]
        v = [[rng.randint(-10, 10) for _ in range(d)] for _ in range(r)]
        assert laplace_gram(u, v) == abs(dot(wedge_of(u), wedge_of(v)))


# -- primitivity and duals ------------------------------------------------------------

def smith_all_ones(vectors):
    M = sympy.Matrix(vectors)
    from sympy.matrices.normalforms import smith_normal_form
    S = smith_normal_form(M, domain=sympy.ZZ)
    return all(abs(S[i, i]) == 1 for i in range(min(S.shape)))


def test_is_primitive_examples():
    assert is_primitive([[1, 0, 0]])
    assert not is_primitive([[2, 0, 0]])
    assert is_primitive([[2, 1, 0], [1, 1, 1]])
    with pytest.raises(ValueError):
        is_primitive([[1, 2, 3], [2, 4, 6]])


@given(st.integers(0, 10 ** 9))
def test_is_primitive_against_smith(seed):
    rng = random.Random(seed)
    d = rng.randint(2, 5)
    r = rng.randint(1, d - 1)
    vs = int_collection(rng, r, d, 6)
    assert is_primitive(vs) == smith_all_ones(vs)


def check_dual(v, u):
    d = len(v[0])
    assert len(u) == d - len(v)
    assert all(sum(a * b for a, b in zip(vi, uj)) == 0 for vi in v for uj in u)
    assert is_primitive(u)
    assert norm2(wedge_of(v)) == norm2(wedge_of(u))


def test_primitive_dual_examples():
    u = primitive_dual([[1, 0, 0]])
    check_dual([[1, 0, 0]], u)
    u = primitive_dual([[2, 1, 0]])
    check_dual([[2, 1, 0]], u)
    assert norm2(wedge_of(u)) == 5
    e = [[int(i == j) for j in range(4)] for i in range(4)]
    u = primitive_dual(e[:2])
    check_dual(e[:2], u)
    assert sorted(map(tuple, (map(abs, x) for x in u))) == [(0, 0, 0, 1), (0, 0, 1, 0)]


def random_primitive(rng, r, d):
    while True:
        vs = int_collection(rng, r, d, 5)
        if is_primitive(vs):
            return vs


def test_primitive_dual_random():
    rng = random.Random(2)
    for _ in range(150):
        d = rng.randint(2, 5)
        r = rng.randint(1, d - 1)
        v = random_primitive(rng, r, d)
        check_dual(v, primitive_dual(v))


def test_dual_pairing_identity():
    # |(w1..wr)·(v1..vr)| = ‖w1..wr ∧ u1..u_{d-r}‖ for the constructed dual
    rng = random.Random(3)
    for _ in range(150):
        d = rng.randint(2, 5)
        r = rng.randint(1, d - 1)
        v = random_primitive(rng, r, d)
        u = primitive_dual(v)
        w = [[F(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(d)] for _ in range(r)]
        lhs = abs(dot(wedge_of(w), wedge_of(v)))
        top = wedge_of(w + u).coord(tuple(range(d)))
        assert lhs == abs(top)


def test_primitive_dual_rejects_non_primitive():
    with pytest.raises(ValueError):
        primitive_dual([[2, 0, 0]])


@given(st.integers(0, 10 ** 9))
def test_kernel_and_saturation(seed):
    rng = random.Random(seed)
    d = rng.randint(2, 5)
    r = rng.randint(1, d - 1)
    vs = int_collection(rng, r, d, 6)
    ker = integer_kernel(vs)
    assert len(ker) == d - r
    assert all(sum(a * b for a, b in zip(v, k)) == 0 for v in vs for k in ker)
    sat = saturate(vs)
    assert is_primitive(sat) and rank(sat + vs) == r
    # the index of the span in its saturation is the gcd of the maximal minors
    big = wedge_of(vs)
    small_w = wedge_of(sat)
    ratio = {abs(big.coord(I) / small_w.coord(I)) for I in small_w.index_sets() if small_w.coord(I)}
    assert ratio == {primitive_index(vs)}
