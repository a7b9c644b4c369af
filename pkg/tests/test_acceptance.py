"""Acceptance criteria 1-9.

Each test carries ``@pytest.mark.acceptance(n, title)``; the conftest hook
folds the outcomes into one PASS/FAIL line per criterion in the terminal
summary.  Details worth reading (measured values, runtimes) are attached
with ``record_property``.
"""

import json
import math
import random
import time
from fractions import Fraction as F
from pathlib import Path

import mpmath
import pytest

from badlatt.arith import iv_sqrt
from badlatt.cli import main as cli_main
from badlatt.curves import veronese
from badlatt.engine import (
    EngineConfig,
    ModelRates,
    certify_bad,
    extract_point,
    replay_audit,
    run_construction,
    tq_recursion,
)
from badlatt.exterior import (
    MultiVector,
    dot,
    is_primitive,
    laplace_gram,
    norm2,
    primitive_dual,
    rank,
    wedge,
)
from badlatt.flows import (
    CaseA,
    FlowConfig,
    Weights,
    check_conjugations,
    orbit_floor,
    orbit_trajectory,
    wedge_decompose,
)
from badlatt.fractal import Lebesgue, decay_profile, federer_ratio_bound, middle_third
from badlatt.qnd import (
    QndExperiment,
    fit_masses,
    coordinate_identity,
    measure_W,
    random_primitive_collection,
)

from .helpers import constructed_wedge_instance

CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"


def acceptance(number, title):
    return pytest.mark.acceptance(number, title)


# -- 1: orbit floor and the golden-ratio constant ------------------------------------------------

def golden_cf_oracle(Q):
    """min_{q<=Q} q·||q·phi|| over the convergent denominators (Fibonacci numbers).

    Best approximations of phi are exactly its convergents p/q = F_{k+1}/F_k,
    so the minimum over all q <= Q is attained at one of them.  Also returns
    the value at the largest convergent denominator below Q.
    """
    with mpmath.workdps(60):
        phi = (1 + mpmath.sqrt(5)) / 2
        best = last = None
        a, b = 1, 1
        while a <= Q:
            last = a * abs(a * phi - b)
            best = last if best is None else min(best, last)
            a, b = b, a + b
        return float(best), float(last)


@acceptance(1, "orbit floor separation and golden-ratio constant")
def test_c1_orbit_floor(record_property):
    start = time.perf_counter()
    grid = [F(k, 4) for k in range(0, 101)]
    golden = (1 + iv_sqrt(5, 192)) / 2
    g_floor = orbit_floor(orbit_trajectory(Weights.equal(1), [golden], grid))
    h_floor = orbit_floor(orbit_trajectory(Weights.equal(1), [F(1, 2)], grid))
    record_property("golden_floor", f"{float(g_floor):.4f}")
    record_property("half_floor", f"{float(h_floor):.2e}")
    assert g_floor >= F(1, 2)
    assert h_floor < F(1, 10 ** 4)
    assert time.perf_counter() - start < 10


@acceptance(1, "orbit floor separation and golden-ratio constant")
def test_c1_golden_constant(record_property):
    start = time.perf_counter()
    golden = (1 + iv_sqrt(5, 192)) / 2
    est = certify_bad(golden, [1], 10 ** 5)
    oracle, tail = golden_cf_oracle(10 ** 5)
    elapsed = time.perf_counter() - start
    record_property("c_golden", f"{float(est.lower):.6f}@q={est.argmin_q}")
    record_property("cf_oracle", f"{oracle:.6f}")
    # 1/sqrt(5) is the limit along the convergents, not the minimum
    record_property("largest_convergent_value", f"{tail:.6f}")
    # the brute force and the continued-fraction oracle must agree
    assert abs(float(est.lower) - oracle) < 1e-9
    assert elapsed < 10
    assert abs(float(est.lower) - 0.447) <= 1e-3


# -- 2: t_q induction ------------------------------------------------------------------------------

@acceptance(2, "t_q recursion stays above (6C)^-2 R^alpha")
def test_c2_tq_induction(record_property):
    start = time.perf_counter()
    rates = ModelRates(2 ** 16, 1, 2, 3, 4, F(7, 10))
    cond = rates.conditions()
    # R^alpha >= 21 C^2
    assert rates.R_alpha().lo >= 21 * rates.C ** 2
    assert cond["C3_small"] and cond["geometric_sum"]
    assert rates(0, 0) == rates.R - math.ceil(rates.R_alpha().hi / 16)
    tr = tq_recursion(rates.R, rates, 200)
    floor = rates.floor_value()
    record_property("min_tq", f"{float(min(tr.values)):.2f}")
    record_property("floor", f"{float(floor.hi):.2f}")
    assert tr.nonempty and len(tr.values) == 201
    assert min(tr.values) >= floor.hi
    assert time.perf_counter() - start < 5


# -- 3: exterior algebra -----------------------------------------------------------------------------

def random_primitive(rng, r, d):
    while True:
        vs = [[rng.randint(-5, 5) for _ in range(d)] for _ in range(r)]
        if rank(vs) == r and is_primitive(vs):
            return vs


@acceptance(3, "exterior-algebra identities")
def test_c3_exterior_identities(record_property):
    start = time.perf_counter()
    rng = random.Random(20240)
    for _ in range(1000):
        d = rng.randint(2, 5)
        r = rng.randint(1, min(3, d))
        u = [[rng.randint(-10, 10) for _ in range(d)] for _ in range(r)]
        v = [[rng.randint(-10, 10) for _ in range(d)] for _ in range(r)]
        assert laplace_gram(u, v) == abs(dot(MultiVector.from_vectors(u), MultiVector.from_vectors(v)))
    for _ in range(500):
        d = rng.randint(2, 5)
        v = random_primitive(rng, rng.randint(1, d - 1), d)
        u = primitive_dual(v)
        assert len(u) == d - len(v)
        assert all(sum(a * b for a, b in zip(vi, uj)) == 0 for vi in v for uj in u)
        assert is_primitive(u)
        assert norm2(MultiVector.from_vectors(v)) == norm2(MultiVector.from_vectors(u))
    for _ in range(500):
        d = rng.randint(2, 5)
        r = rng.randint(1, d - 1)
        v = random_primitive(rng, r, d)
        u = primitive_dual(v)
        w = [[F(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(d)] for _ in range(r)]
        lhs = abs(dot(MultiVector.from_vectors(w), MultiVector.from_vectors(v)))
        assert lhs == abs(MultiVector.from_vectors(w + u).coord(tuple(range(d))))
    for _ in range(1000):
        d = rng.randint(2, 5)
        i = rng.randint(1, d - 1)
        j = rng.randint(1, d - i)
        a = MultiVector.from_vectors([[F(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(d)] for _ in range(i)])
        b = MultiVector.from_vectors([[F(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(d)] for _ in range(j)])
        assert norm2(wedge(a, b)) <= norm2(a) * norm2(b)
    elapsed = time.perf_counter() - start
    record_property("seconds", f"{elapsed:.1f}")
    assert elapsed < 30


# -- 4: wedge decomposition --------------------------------------------------------------------------

@acceptance(4, "wedge decomposition on constructed instances")
def test_c4_wedge_decomposition(record_property):
    rng = random.Random(4242)
    counts = {"A": 0, "B": 0}
    for _ in range(300):
        vecs, rho, L = constructed_wedge_instance(rng)
        i, d = len(vecs), len(vecs[0])
        n = d - 1
        res = wedge_decompose(vecs, rho, L)
        if isinstance(res, CaseA):
            counts["A"] += 1
            a = list(res.a)
            combo = [sum(F(c) * v[k] for c, v in zip(res.coeffs, vecs)) for k in range(d)]
            assert combo == a and any(res.coeffs)
            assert all(F(c).denominator == 1 for c in res.coeffs)
            assert res.radius2_factor == 1
            assert sum(x * x for x in a) <= rho * rho
            assert a[1] ** 2 * L <= rho * rho
        else:
            counts["B"] += 1
            assert i >= 2
            e1 = MultiVector.basis(d, (0,))
            assert wedge(e1, res.w_im1) + res.w_i == MultiVector.from_vectors(vecs)
            for mv in (res.w_im1, res.w_i):
                assert all(0 not in key for key, v in mv.coords.items() if v)
            assert norm2(res.w_im1) <= rho ** (2 * i)
            assert norm2(res.w_i) * L <= 16 * n * rho ** (2 * i)
        if i == 1:
            assert isinstance(res, CaseA)
    record_property("caseA", counts["A"])
    record_property("caseB", counts["B"])


# -- 5: conjugation identities -----------------------------------------------------------------------

@acceptance(5, "conjugation identities at 128 bits")
def test_c5_conjugations(record_property):
    cfg = FlowConfig(Weights((F(2, 3), F(1, 3))), 8, F(1, 18), precision=128)
    rep = check_conjugations(cfg, samples=100, seed=5)
    widths = {}
    for k in ("a_u", "a_u1", "b_u", "b_u1", "z_u"):
        assert rep.contains_zero(k), k
        assert rep.max_width(k) < F(1, 2 ** 64), k
        widths[k] = rep.max_width(k)
    assert rep.exact["z_u"]
    worst = max(widths.values())
    record_property("max_width_log2", f"{math.log2(worst):.0f}" if worst else "exact")


# -- 6: fractal measures --------------------------------------------------------------------------

@acceptance(6, "middle-third measure exactness, Ahlfors, Federer, decay")
def test_c6_fractal(record_property):
    mu = middle_third()
    assert mu.measure_interval(0, F(1, 3)) == F(1, 2)
    assert mu.measure_interval(0, F(1, 9)) == F(1, 4)
    assert mu.measure_interval(F(1, 3), F(2, 3)) == 0
    assert mu.measure_interval(F(1, 3) + F(1, 10 ** 9), F(2, 3) - F(1, 10 ** 9)) == 0

    checked = 0
    for k in range(0, 13):
        rho = F(1, 3 ** k)
        depth = min(k, 6)
        centres = {mu.cylinder_hull(left, depth)[j] for left in mu.cylinders(depth) for j in (0, 1)}
        for x in sorted(centres):
            lower, upper = mu.ahlfors_ok(x, rho)
            assert lower and upper, (k, x)
            checked += 1

    rng = random.Random(66)
    samples = [(F(0), F(1, 3 ** k)) for k in range(1, 13)]
    for _ in range(500):
        k = rng.randint(1, 10)
        x = rng.choice(mu.cylinders(min(k, 8)))
        samples.append((x, F(rng.randint(1, 100), 100 * 3 ** rng.randint(1, 10))))
    fed = federer_ratio_bound(mu, samples)
    assert fed["within_bound"]

    violations = 0
    for lo, hi, theta in [((0), 1, F(1, 3)), (0, F(1, 3), F(1, 9)), (F(2, 3), 1, F(5, 6))]:
        prof = decay_profile(mu, (lo, hi), theta, [F(1, 3 ** k) for k in range(1, 10)])
        violations += sum(not p["within_bound"] for p in prof)
    assert violations == 0
    record_property("ahlfors_checks", checked)
    record_property("federer_max_ratio", fed["max_ratio"])


# -- 7: end-to-end construction ---------------------------------------------------------------------

def load_config(name):
    return EngineConfig.from_json(json.loads((CONFIGS / name).read_text()))


@acceptance(7, "end-to-end construction, Lebesgue and middle-third")
def test_c7_construction(record_property):
    start = time.perf_counter()
    cfg = load_config("lebesgue_n1.json")
    assert cfg.R == 16 and cfg.q_max == 8 and cfg.mode == "midpoint"
    assert cfg.flow.eps <= F(1, 3)
    res = run_construction(cfg)
    assert res.nonempty
    cert = extract_point(res, Q=10 ** 4)
    c_est = cert.estimate.lower
    record_property("lebesgue_c_est", f"{float(c_est):.5f}")
    record_property("survivor_floor", f"{float(cert.floor.lo):.4f}")
    ind = res.indeterminate_fraction()

    cantor_cfg = load_config("cantor_n1.json")
    cantor = run_construction(cantor_cfg)
    assert cantor.nonempty
    ccert = extract_point(cantor)
    assert cantor_cfg.measure.in_support(ccert.point)
    record_property("cantor_point", str(ccert.point))
    ind = max(ind, cantor.indeterminate_fraction())
    record_property("indeterminate", f"{ind:.4f}")

    assert c_est >= F(1, 1000)
    assert ind < 0.01
    elapsed = time.perf_counter() - start
    record_property("seconds", f"{elapsed:.0f}")
    assert elapsed < 600


# -- 8: quantitative nondivergence ------------------------------------------------------------------

def qnd_configs():
    rng = random.Random(88)
    out = []
    for k in range(20):
        tau = rng.choice([(1, -1), (2, -2), (3, -3), (F(5, 2), F(-5, 2))])
        grid = sorted({F(1, 2 ** rng.randint(1, 7)) for _ in range(4)} | {F(1), F(2)})
        if k % 2:
            out.append(QndExperiment(middle_third(rho0=3), veronese(1), (0, 1), tau, grid,
                                     cylinder_depth=5))
        else:
            a = F(rng.randint(0, 4), 8)
            J = (a, a + F(rng.randint(2, 4), 8))
            out.append(QndExperiment(Lebesgue((0, 1), C=3, rho0=3), veronese(1), J, tau, grid,
                                     cylinder_depth=6))
    return out


@acceptance(8, "QND monotonicity, coordinate identity, positive decay exponent")
def test_c8_monotone(record_property):
    for exp in qnd_configs():
        masses = measure_W(exp)
        for m in masses:
            assert m.lo <= m.hi
        for a, b in zip(masses, masses[1:]):
            assert a.lo <= b.lo and a.hi <= b.hi


@acceptance(8, "QND monotonicity, coordinate identity, positive decay exponent")
def test_c8_coordinate_identity():
    rng = random.Random(808)
    for _ in range(100):
        n = rng.randint(1, 3)
        r = rng.randint(2, n + 1)
        curve = veronese(n)
        vs = random_primitive_collection(rng, n + 1, r)
        k = [rng.randint(-4, 4) for _ in range(n)]
        k.append(-sum(k))
        x = F(rng.randint(-9, 9), rng.randint(1, 5))
        assert coordinate_identity(curve, k, vs, x).holds


@acceptance(8, "QND monotonicity, coordinate identity, positive decay exponent")
def test_c8_gamma_positive(record_property):
    grid = [F(1, 2 ** k) for k in range(1, 8)] + [F(2)]
    exp = QndExperiment(Lebesgue((0, 1), C=3, rho0=3), veronese(1), (0, 1), (3, -3), grid,
                        cylinder_depth=10)
    fit = fit_masses(measure_W(exp))
    record_property("gamma_hat", f"{fit.gamma:.3f}")
    assert fit.gamma > 0


# -- 9: determinism -----------------------------------------------------------------------------------

@acceptance(9, "construct is bit-identical and the audit log replays")
def test_c9_determinism(tmp_path, record_property):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli_main(["construct", "--config", str(CONFIGS / "cantor_n1.json"), "--out", str(out)]) == 0
        outs.append(out)
    files = sorted(p.name for p in outs[0].iterdir())
    assert files == sorted(p.name for p in outs[1].iterdir())
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    cfg = load_config("cantor_n1.json")
    res = run_construction(cfg)
    assert replay_audit(cfg, res.audit) == res.hashes()
    cert = json.loads((outs[0] / "certificate.json").read_text())
    assert cert["generation_hashes"] == res.hashes()
    record_property("files", len(files))
