"""Exact and rigorous tools for badly approximable points on curves.

Modules
-------
arith      rationals, outward-rounded intervals, exact sums of powers
exterior   multivectors, wedge products, primitive collections
lattice    square bases, LLL, enumeration, shortest vectors
curves     polynomial curves x -> (x, phi_2(x), ..., phi_n(x))
flows      diagonal flows, conjugation identities, wedge decomposition
fractal    Lebesgue and digit Cantor measures
engine     the interval construction and its certificates
qnd        quantitative non-divergence experiments
cli        command line front end
"""

__version__ = "0.1.0"
