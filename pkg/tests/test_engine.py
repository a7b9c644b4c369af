import math
import random
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, strategies as st

from badlatt.arith import RInterval, iv_sqrt
from badlatt.curves import veronese
from badlatt.engine import (
    ConfigError,
    ConstructionFailed,
    EngineConfig,
    RemovalTable,
    Schedule,
    ModelRates,
    beam_indices,
    certify_bad,
    extract_point,
    generation_hash,
    initial_generation,
    measure_too_small,
    partition_R,
    removal_dynamical,
    removal_measure,
    replay_audit,
    run_construction,
    step,
    survivor_floor,
    tq_recursion,
)
from badlatt.flows import FlowConfig, Weights, make_H
from badlatt.fractal import Lebesgue, middle_third
from badlatt.lattice import shortest_vector


def config(measure=None, R=4, q_max=3, eps=F(1, 9), schedule=None, I0=(0, 1), cap=None, mode="midpoint", Q=2000):
    flow = FlowConfig(Weights.equal(1), R, eps)
    return EngineConfig(flow=flow, curve=veronese(1), measure=measure or Lebesgue((0, 1), C=3, rho0=3),
                        I0=I0, q_max=q_max, schedule=schedule or Schedule(), mode=mode,
                        max_intervals=cap, Q=Q)


INACTIVE = Schedule(activation=10 ** 6)


# -- schedule ------------------------------------------------------------------------------

def test_default_schedule_ranges():
    s = Schedule()
    assert list(s.p0_range(16)) == [2, 3, 4]
    assert list(s.p_range(16)) == [1]
    assert s.families(16) == [(0, 2), (0, 3), (0, 4), (12, 1)]
    assert s.families(0) == []


@given(st.integers(1, 400))
def test_schedule_families_stay_in_range(q):
    s = Schedule()
    ps = [p for p, _ in s.families(q) if p]
    for p in ps:
        assert q < 2 * p < 2 * q and (q - p) % 4 == 0
    assert ps == sorted(ps)


def test_schedule_rejects_unsafe_cut():
    with pytest.raises(ConfigError):
        Schedule(cut_div=1)
    assert Schedule.from_json(Schedule(m=2).to_json()) == Schedule(m=2)


# -- partition and measure removal -----------------------------------------------------------

def test_partition_examples():
    assert partition_R([(0, 1)], 4) == [(0, F(1, 4)), (F(1, 4), F(1, 2)), (F(1, 2), F(3, 4)), (F(3, 4), 1)]
    two = partition_R(partition_R([(0, 1)], 3), 3)
    one = partition_R([(0, 1)], 9)
    assert two == one
    with pytest.raises(ValueError):
        partition_R([(0, 1)], 1)


def test_lebesgue_never_removed_by_measure():
    mu = Lebesgue((0, 1), C=3, rho0=3)
    assert not any(removal_measure(partition_R([(0, 1)], 16), mu))


def measure_oracle(mu, lo, hi):
    """mu(I) < (3C)^-1 |I|^alpha with mpmath at 60 digits."""
    with mpmath.workdps(60):
        alpha = mpmath.log(len(mu.digits)) / mpmath.log(mu.base)
        m = mu.measure_interval(lo, hi)
        lhs = mpmath.mpf(m.numerator) / m.denominator
        L = mpmath.mpf((hi - lo).numerator) / (hi - lo).denominator
        C = mpmath.mpf(mu.C.numerator) / mu.C.denominator
        return lhs < L ** alpha / (3 * C)


def test_middle_third_measure_removals():
    mu = middle_third(rho0=3)
    children = partition_R([(0, 1)], 9)
    flags = removal_measure(children, mu)
    assert flags == [measure_oracle(mu, a, b) for a, b in children]
    # the five ninths meeting the first two gaps carry no mass
    zero = [k for k, (a, b) in enumerate(children) if mu.measure_interval(a, b) == 0]
    assert zero == [1, 3, 4, 5, 7]
    assert all(flags[k] for k in zero)


@given(st.integers(0, 10 ** 9))
def test_measure_removal_against_oracle(seed):
    rng = random.Random(seed)
    mu = middle_third(rho0=3)
    k = rng.randint(1, 5)
    R = rng.choice([4, 5, 9, 16])
    a = F(rng.randint(0, R ** k - 1), R ** k)
    b = a + F(1, R ** k)
    assert measure_too_small(mu, a, b) == measure_oracle(mu, a, b)


# -- dynamical removal ---------------------------------------------------------------------

def test_inactive_schedule_removes_nothing():
    cfg = config(schedule=INACTIVE)
    for q in range(6):
        assert removal_dynamical(F(0), F(1, 4), cfg, q) == (None, False)


def test_rational_point_removed_at_modest_depth():
    cfg = config(R=16)
    q = 8
    lo, hi = F(1, 2) - F(1, 2 * 16 ** 9), F(1, 2) + F(1, 2 * 16 ** 9)
    verdict, _ = removal_dynamical(lo, hi, cfg, q)
    assert verdict is not None and verdict["reason"] == "dynamical"
    # oracle: the first tested family already has a short vector at x = 1/2
    p, l = verdict["p"], verdict["l"]
    val, _ = shortest_vector(make_H(cfg.flow, cfg.curve, l, q, F(1, 2)))
    thr = cfg.flow.threshold2(l).enclose(128)
    hi_val = val.hi if isinstance(val, RInterval) else val
    assert hi_val < thr.lo
    assert (p, l) == cfg.schedule.families(q)[0]


# -- steps ----------------------------------------------------------------------------------

def test_lebesgue_inactive_keeps_everything():
    cfg = config(R=5, q_max=3, schedule=INACTIVE)
    res = run_construction(cfg)
    assert [s.kept for s in res.stats] == [5, 25, 125]
    assert all(h == 0 for _, h in res.table.items())


def test_middle_third_first_step():
    mu = middle_third(rho0=3)
    cfg = config(mu, R=9, q_max=1, schedule=INACTIVE)
    gen, audit, stats = step(initial_generation(cfg), cfg, RemovalTable())
    children = partition_R([(0, 1)], 9)
    expected = [c for c in children if not measure_oracle(mu, *c)]
    assert [(r.lo, r.hi) for r in gen.kept()] == expected
    assert stats.removed_measure == 9 - len(expected)
    assert len(audit) == stats.removed_measure


def test_step_is_deterministic():
    cfg = config(R=8, q_max=2)
    a = run_construction(cfg)
    b = run_construction(cfg)
    assert a.hashes() == b.hashes()
    assert a.audit == b.audit


def test_removal_counts_bounded_by_rates():
    cfg = config(R=16, q_max=4)
    res = run_construction(cfg)  # check=True asserts the rate bound at each step
    assert res.nonempty
    for s in res.stats:
        assert s.indeterminate == 0


def test_epsilon_monotonicity():
    # smaller eps gives thresholds e^{-eps beta l} closer to 1, so more removals
    small = run_construction(config(R=16, q_max=4, eps=F(1, 30)))
    large = run_construction(config(R=16, q_max=4, eps=F(1, 3)))
    for gs, gl in zip(small.generations, large.generations):
        ks = {(r.lo, r.hi) for r in gs.kept()}
        kl = {(r.lo, r.hi) for r in gl.kept()}
        assert ks <= kl


def test_diagonal_rates_on_cantor_run():
    # R = 3^6 gives R^alpha = 64 >= 21 C^2 for the middle-third constant C = 101/64
    mu = middle_third()
    assert 64 >= 21 * mu.C ** 2
    cfg = config(mu, R=729, q_max=2, schedule=INACTIVE, I0=(0, F(1, 3)), cap=16)
    res = run_construction(cfg)
    bound = 729 - math.floor(F(64) / (16 * mu.C ** 2))
    for q in range(2):
        assert res.table(q, q) <= bound


def test_beam_indices():
    assert beam_indices(5, None) == [0, 1, 2, 3, 4]
    assert beam_indices(10, 3) == [0, 4, 9]
    assert beam_indices(10, 1) == [0]
    assert len(set(beam_indices(1000, 7))) == 7


# -- audit replay --------------------------------------------------------------------------------

def test_replay_matches_with_and_without_pruning():
    for cap in (None, 20):
        cfg = config(R=8, q_max=3, cap=cap)
        res = run_construction(cfg)
        assert replay_audit(cfg, res.audit) == res.hashes()
        assert generation_hash(0, [cfg.I0]) == res.hashes()[0]


def test_replay_detects_tampering():
    cfg = config(R=8, q_max=3)
    res = run_construction(cfg)
    if res.audit:
        assert replay_audit(cfg, res.audit[1:]) != res.hashes()


# -- configuration ---------------------------------------------------------------------------

def test_config_errors():
    with pytest.raises(ConfigError):
        run_construction(config(middle_third(rho0=3), I0=(F(2, 5), F(3, 5))))
    with pytest.raises(ConfigError):
        run_construction(config(Lebesgue((0, 1), rho0=1), I0=(0, 1)))
    from badlatt.curves import CurveModel
    cfg = config()
    cfg.curve = CurveModel(((0, 1),), domain=(0, 2))
    with pytest.raises(ConfigError):
        cfg.validate()


def test_config_json_roundtrip():
    cfg = config(middle_third(rho0=3), R=9, cap=32)
    again = EngineConfig.from_json(cfg.to_json())
    assert again.to_json() == cfg.to_json()


# -- t_q ------------------------------------------------------------------------------------

def test_tq_examples():
    assert tq_recursion(10, {}, 20).values == [10] * 21
    tr = tq_recursion(10, {(0, 0): 5, (1, 1): 2, (0, 1): 10}, 1)
    assert tr.values == [5, 6] and tr.nonempty
    bad = tq_recursion(4, {(0, 0): 4}, 3)
    assert bad.failed_at == 0 and not bad.nonempty


@given(st.integers(2, 30), st.integers(0, 10 ** 9))
def test_tq_against_direct_formula(R, seed):
    rng = random.Random(seed)
    h = {(p, q): rng.randint(0, 2) for q in range(6) for p in range(q + 1)}
    tr = tq_recursion(R, h, 5)
    t = []
    for q in range(len(tr.values)):
        s = F(R - h[(q, q)])
        for j in range(1, q + 1):
            s -= F(h[(q - j, q)]) / math.prod(t[q - i] for i in range(1, j + 1))
        t.append(s)
    assert t == tr.values


def test_model_preset_holds():
    rates = ModelRates(2 ** 16, 1, 2, 3, 4, F(7, 10))
    assert all(rates.conditions().values())
    tr = tq_recursion(rates.R, rates, 60)
    floor = rates.floor_value()
    assert tr.nonempty and min(tr.values) >= floor.hi


# -- certification ---------------------------------------------------------------------------

def brute_c(x, Q):
    return min(q * abs(q * x - round(q * x)) for q in range(1, Q + 1))


def test_certify_examples():
    est = certify_bad(F(1, 2), [1], 10)
    assert est.value == 0 and est.argmin_q == 2
    est = certify_bad(F(1, 3), [F(1, 2), F(1, 2)], 20, curve=veronese(2))
    assert est.upper == 0 and est.argmin_q == 9


def test_certify_golden_against_mpmath():
    g = (1 + iv_sqrt(5, 192)) / 2
    est = certify_bad(g, [1], 2000)
    with mpmath.workdps(100):
        ref = brute_c((1 + mpmath.sqrt(5)) / 2, 2000)
        assert mpmath.mpf(est.lower.numerator) / est.lower.denominator <= ref
        assert ref <= mpmath.mpf(est.upper.numerator) / est.upper.denominator
    assert abs(float(est.lower) - (3 - 5 ** 0.5) / 2) < 1e-12


@given(st.fractions(min_value=0, max_value=3, max_denominator=500), st.integers(1, 300))
def test_certify_rational_against_brute_force(x, Q):
    est = certify_bad(x, [1], Q)
    assert est.value == brute_c(x, Q)


# -- extraction -----------------------------------------------------------------------------

def test_extract_leftmost_without_removals():
    cfg = config(R=4, q_max=4, schedule=INACTIVE)
    cert = extract_point(run_construction(cfg))
    assert [c[1] for c in cert.chain] == [0] * 5
    assert [c[2] - c[1] for c in cert.chain] == [F(1, 4 ** q) for q in range(5)]


def test_extract_in_cantor_support():
    cfg = config(middle_third(rho0=3), R=9, q_max=3, cap=64)
    res = run_construction(cfg)
    cert = extract_point(res)
    assert cfg.measure.in_support(cert.point)
    lo, hi = cert.chain[-1][1:]
    assert lo <= cert.point <= hi
    assert cert.to_json()["config_sha256"]


def test_extract_fails_on_empty_construction():
    cfg = config(R=4, q_max=2)
    res = run_construction(cfg)
    res.failed_at = 1
    with pytest.raises(ConstructionFailed):
        extract_point(res)


def test_survivor_floor_is_half_threshold_square():
    cfg = config(R=16, q_max=8)
    fl = survivor_floor(cfg)
    l = max(l for q in range(8) for _, l in cfg.schedule.families(q))
    # e^{-2 eps beta l} with beta = ln 16 for n = 1... beta = ln R / 2
    ref = math.exp(-2 * float(cfg.flow.eps) * math.log(16) / 2 * l) / 2
    assert abs(float(fl.mid) - ref) < 1e-12


def test_interval_mode_small_run():
    cfg = config(R=8, q_max=3, mode="interval")
    res = run_construction(cfg)
    mid = run_construction(config(R=8, q_max=3))
    for gi, gm in zip(res.generations, mid.generations):
        assert {(r.lo, r.hi) for r in gi.kept()} <= {(r.lo, r.hi) for r in gm.kept()}
