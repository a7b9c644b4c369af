"""Shared generators for the test suite."""

from fractions import Fraction as F

from badlatt.flows import _shear_norm2


def _rho_for(vecs, L):
    """Smallest rho in a 17/16 geometric ladder satisfying the shear precondition."""
    i = len(vecs)
    m = max(_shear_norm2(vecs, F(0)), _shear_norm2(vecs, L))
    rho = F(1, 64)
    while rho ** (2 * i) < m:
        rho *= F(17, 16)
    return rho


def constructed_wedge_instance(rng):
    """Random (vectors, rho, L) meeting the shear precondition at Θ = 0 and Θ = L.

    Half the instances are generic small vectors; the other half have
    integer first coordinates and small coordinates on e_2..e_{n+1}, which
    is where the e_1-splitting alternative shows up.
    """
    while True:
        i = rng.randint(1, 3)
        d = rng.randint(i + 1, 5)
        L = F(rng.choice([1, 4, 16, 100, 1000]))
        if rng.random() < 0.5:
            vecs = [[F(rng.randint(-4, 4), rng.randint(1, 2)) for _ in range(d)] for _ in range(i)]
        else:
            D = rng.choice([4, 16, 64])
            vecs = [[F(rng.randint(-3, 3))] + [F(rng.randint(-3, 3), D) for _ in range(d - 1)]
                    for _ in range(i)]
        if max(_shear_norm2(vecs, F(0)), _shear_norm2(vecs, L)) == 0:
            continue
        return vecs, _rho_for(vecs, L), L
