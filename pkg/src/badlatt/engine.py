"""Cantor-type construction of badly approximable points on a curve.

Starting from an interval I0, every kept interval is split into R equal
closed subintervals.  A child is removed when it carries too little mass
(the measure family, p = q) or when the lattice

    H_{l,q}(x) Z^{n+1},   H_{l,q}(x) = b(beta' l) a(beta (q+1)) z(x) u(phi(x)),

evaluated at the child midpoint has a nonzero vector shorter than
e^{-eps beta l} (the dynamical families p = 0 and p = q - 4l).  The number
of removals charged to each family is tallied per ancestor to give the
removal rates h_{p,q}, and :func:`tq_recursion` turns a rate table into the
quantities t_q whose positivity guarantees a nonempty limit set.

All removal decisions are exact: masses are rationals compared with
``|I|**alpha`` through :meth:`FractalMeasure.cmp_alpha`, and lattice entries
are :class:`~badlatt.arith.PowerSum` values, so threshold comparisons never
depend on rounding.  Only the interval mode, which certifies a whole child
instead of its midpoint, works with enclosures.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import (
    DEFAULT_PRECISION,
    IndeterminateError,
    RInterval,
    as_rational,
    iv_exp,
    iv_log,
    precision_cap,
    rational_to_str,
)
from .curves import CurveModel, load_curve, scale_interval
from .flows import FlowConfig, Weights, make_H
from .fractal import DigitCantor, FractalMeasure, measure_from_json
from .lattice import find_short, shortest_vector

log = logging.getLogger(__name__)

MODES = ("midpoint", "interval")
STRATEGIES = ("leftmost", "max_measure")


class ConfigError(ValueError):
    """A run configuration violates a precondition of the construction."""


class ConstructionFailed(RuntimeError):
    """Some generation became empty."""

    def __init__(self, q: int, message: str = ""):
        super().__init__(message or f"generation {q} is empty")
        self.q = q


# ---------------------------------------------------------------------------
# schedule


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class Schedule:
    """Which l are tested at step q.

    The p = 0 family tests ``max(m, ceil(q/lo_div)) <= l <= floor(q/hi_div)``;
    the family p = q - step*l tests ``m <= l <= ceil(q/cut_div) - 1``.  No
    dynamical test runs before step ``activation``.
    """

    m: int = 1
    lo_div: int = 8
    hi_div: int = 4
    cut_div: int = 8
    step: int = 4
    activation: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("schedule base m must be >= 1")
        if min(self.lo_div, self.hi_div, self.cut_div, self.step) < 1:
            raise ConfigError("schedule divisors must be positive")
        if self.activation < 0:
            raise ConfigError("activation must be non-negative")
        # p = q - step*l must stay in (q/2, q) for every tested l
        for q in range(1, 8 * self.cut_div * self.step + 1):
            for l in self.p_range(q):
                p = q - self.step * l
                if not 2 * p > q or not p < q:
                    raise ConfigError(f"l_cut({q}) = {self.l_cut(q)} lets p = {p} leave (q/2, q)")

    def l_min(self, q: int) -> int:
        return max(self.m, _ceil_div(q, self.lo_div))

    def l_max(self, q: int) -> int:
        return q // self.hi_div

    def l_cut(self, q: int) -> int:
        return _ceil_div(q, self.cut_div) - 1

    def p0_range(self, q: int) -> range:
        return range(self.l_min(q), self.l_max(q) + 1)

    def p_range(self, q: int) -> range:
        return range(self.m, self.l_cut(q) + 1)

    def families(self, q: int) -> list[tuple[int, int]]:
        """(p, l) pairs in priority order: p = 0 first, then increasing p."""
        if q < 1 or q < self.activation:
            return []
        out = [(0, l) for l in self.p0_range(q)]
        out += [(q - self.step * l, l) for l in reversed(self.p_range(q))]
        return out

    def to_json(self) -> dict:
        return {"m": self.m, "lo_div": self.lo_div, "hi_div": self.hi_div, "cut_div": self.cut_div,
                "step": self.step, "activation": self.activation}

    @classmethod
    def from_json(cls, obj) -> "Schedule":
        return cls(**(obj or {}))


# ---------------------------------------------------------------------------
# configuration


@dataclass
class EngineConfig:
    flow: FlowConfig
    curve: CurveModel
    measure: FractalMeasure
    I0: tuple
    q_max: int
    schedule: Schedule = field(default_factory=Schedule)
    mode: str = "midpoint"
    max_intervals: int | None = 512
    strategy: str = "leftmost"
    Q: int = 10_000

    def __post_init__(self):
        lo, hi = (as_rational(v) for v in self.I0)
        self.I0 = (lo, hi)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}")
        if self.q_max < 0:
            raise ConfigError("q_max must be non-negative")
        if self.max_intervals is not None and self.max_intervals < 1:
            raise ConfigError("max_intervals must be positive")

    @property
    def R(self) -> int:
        return self.flow.R

    def validate(self) -> None:
        lo, hi = self.I0
        if not lo < hi:
            raise ConfigError("I0 must have positive length")
        if self.curve.n != self.flow.n:
            raise ConfigError(f"curve has n={self.curve.n} but the weights have n={self.flow.n}")
        a, b = scale_interval(lo, hi, 3 ** (self.flow.n + 1))
        if not self.curve.contains_interval(a, b):
            raise ConfigError(f"the curve domain must contain the enlarged interval [{a}, {b}]")
        if self.measure.measure_interval(lo, hi) == 0:
            raise ConfigError(f"I0 = [{lo}, {hi}] carries no mass")
        if not self.measure.admissible_I0(lo, hi):
            raise ConfigError(f"3|I0| = {3 * (hi - lo)} exceeds rho0 = {self.measure.rho0}")

    def admissibility(self) -> dict:
        """Reported (not enforced) conditions on I0."""
        lo, hi = self.I0
        mu = self.measure
        mass = mu.measure_interval(lo, hi)
        half = (hi - lo) / 2
        centre = (lo + hi) / 2
        return {
            "mass": rational_to_str(mass),
            "centre_in_support": mu.in_support(centre),
            "mass_lower_ok": mu.cmp_alpha(mass * mu.C, half) >= 0,
            "mass_upper_ok": mu.cmp_alpha(mass / mu.C, half) <= 0,
            "length_ok": mu.admissible_I0(lo, hi),
        }

    def to_json(self) -> dict:
        return {
            "weights": self.flow.weights.to_json(),
            "R": self.flow.R,
            "eps": rational_to_str(self.flow.eps),
            "m": self.flow.m,
            "precision": self.flow.precision,
            "curve": self.curve.to_json(),
            "measure": self.measure.to_json(),
            "I0": [rational_to_str(v) for v in self.I0],
            "q_max": self.q_max,
            "schedule": self.schedule.to_json(),
            "mode": self.mode,
            "max_intervals": self.max_intervals,
            "strategy": self.strategy,
            "Q": self.Q,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EngineConfig":
        weights = Weights(tuple(obj["weights"]))
        sched = dict(obj.get("schedule") or {})
        m = int(obj.get("m", sched.get("m", 1)))
        sched["m"] = m
        flow = FlowConfig(weights, int(obj["R"]), as_rational(obj["eps"]), m=m,
                          precision=int(obj.get("precision", DEFAULT_PRECISION)))
        curve = load_curve(obj.get("curve", f"veronese:{weights.n}"))
        measure = measure_from_json(obj.get("measure", {"kind": "lebesgue"}))
        return cls(flow=flow, curve=curve, measure=measure, I0=tuple(obj.get("I0", (0, 1))),
                   q_max=int(obj["q_max"]), schedule=Schedule.from_json(sched),
                   mode=obj.get("mode", "midpoint"), max_intervals=obj.get("max_intervals", 512),
                   strategy=obj.get("strategy", "leftmost"), Q=int(obj.get("Q", 10_000)))


def config_digest(obj: dict) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# records


@dataclass
class IntervalRecord:
    id: int
    lo: Fraction
    hi: Fraction
    parent: int | None
    ancestors: tuple = ()          # ids of the ancestors in generations 0..q-1
    status: str = "kept"           # kept | removed | pruned
    reason: dict | None = None

    @property
    def kept(self) -> bool:
        return self.status == "kept"

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def to_json(self) -> dict:
        out = {"id": self.id, "lo": rational_to_str(self.lo), "hi": rational_to_str(self.hi),
               "parent": self.parent, "status": self.status}
        if self.reason is not None:
            out["reason"] = self.reason
        return out


@dataclass
class Generation:
    q: int
    records: list

    def kept(self) -> list:
        return [r for r in self.records if r.kept]

    def by_id(self) -> dict:
        return {r.id: r for r in self.records}

    def digest(self) -> str:
        return generation_hash(self.q, [(r.lo, r.hi) for r in self.kept()])


def generation_hash(q: int, intervals) -> str:
    payload = json.dumps([q, [[rational_to_str(a), rational_to_str(b)] for a, b in intervals]])
    return hashlib.sha256(payload.encode()).hexdigest()


class RemovalTable:
    """h[p, q] = max over J in generation p of the removals of family (p, q) below J."""

    def __init__(self):
        self.h: dict[tuple[int, int], int] = {}

    def record(self, p: int, q: int, per_ancestor: dict) -> None:
        self.h[(p, q)] = max(per_ancestor.values(), default=0)

    def __getitem__(self, pq) -> int:
        return self.h.get(tuple(pq), 0)

    def __call__(self, p: int, q: int) -> int:
        return self.h.get((p, q), 0)

    def items(self):
        return sorted(self.h.items(), key=lambda kv: (kv[0][1], kv[0][0]))

    def to_csv(self) -> str:
        lines = ["p,q,h"]
        lines += [f"{p},{q},{h}" for (p, q), h in self.items()]
        return "\n".join(lines) + "\n"

    def trend_lines(self) -> list[dict]:
        """log h_{p,q} / (q + 1 - p) for p < q, for inspection of growth rates."""
        out = []
        for (p, q), h in self.items():
            if p < q and h > 0:
                out.append({"p": p, "q": q, "h": h, "log_rate": math.log(h) / (q + 1 - p)})
        return out


# ---------------------------------------------------------------------------
# splitting and removal tests


def partition_R(intervals, R: int) -> list[tuple[Fraction, Fraction]]:
    """Split each closed interval (lo, hi) into R equal closed pieces."""
    if R < 2:
        raise ValueError("R must be at least 2")
    out = []
    for lo, hi in intervals:
        lo, hi = as_rational(lo), as_rational(hi)
        step = (hi - lo) / R
        out.extend((lo + k * step, lo + (k + 1) * step) for k in range(R))
    return out


def measure_too_small(mu: FractalMeasure, lo, hi):
    """True iff mu([lo, hi]) < (3C)^-1 |hi - lo|^alpha; None if undecidable."""
    mass = mu.measure_interval(lo, hi)
    try:
        return mu.cmp_alpha(3 * mu.C * mass, as_rational(hi) - as_rational(lo)) < 0
    except IndeterminateError:
        return None


def removal_measure(children, mu: FractalMeasure) -> list:
    """Flags for the measure family; None marks an undecidable comparison."""
    return [measure_too_small(mu, lo, hi) for lo, hi in children]


def _classify(H, thr2, precision: int) -> dict:
    """Compare the shortest vector of H Z^d with the squared threshold thr2.

    Returns a dict with ``short`` (True/False/None), ``regime`` and the
    witness.  ``certain`` means the minimum is below thr2/9, so the threshold
    survives the factor-3 inflation from a point to its whole interval;
    ``boundary`` removals lie between thr2/9 and thr2; ``near`` keeps lie
    between thr2 and 9 thr2.
    """
    try:
        val, wit = shortest_vector(H, precision=precision)
    except IndeterminateError:
        val, wit = None, None
    if val is None:
        flag, wit = find_short(H, thr2, precision)
        return {"short": flag, "regime": "boundary" if flag else None, "witness": wit}
    lo = val.lo if isinstance(val, RInterval) else val
    hi = val.hi if isinstance(val, RInterval) else val
    t = thr2.enclose(precision)
    if hi < t.lo:
        short = True
    elif lo >= t.hi:
        short = False
    else:
        short, w2 = find_short(H, thr2, precision)
        if short:
            wit = w2
    regime = None
    if short:
        regime = "certain" if hi < t.lo / 9 else "boundary"
    elif short is False and lo < 9 * t.hi:
        regime = "near"
    return {"short": short, "regime": regime, "witness": wit, "norm2": (lo, hi)}


def removal_dynamical(lo, hi, cfg: EngineConfig, q: int):
    """First family (p, l) whose test removes the child [lo, hi], else None.

    The test evaluates H_{l,q} at the midpoint.  In interval mode a child
    that passes every midpoint test is additionally certified over the whole
    interval; when the enclosure cannot certify membership the child is
    removed as ``uncertified``.  The returned dict (or None for a kept child)
    carries the family, the reason and the inflation regime; kept children
    report ``near`` through the second return value.
    """
    flow, curve = cfg.flow, cfg.curve
    x = (as_rational(lo) + as_rational(hi)) / 2
    near = False
    fams = cfg.schedule.families(q)
    for p, l in fams:
        H = make_H(flow, curve, l, q, x)
        res = _classify(H, flow.threshold2(l), flow.precision)
        if res["short"] is None:
            return {"p": p, "l": l, "reason": "indeterminate", "regime": None}, near
        if res["short"]:
            return {"p": p, "l": l, "reason": "dynamical", "regime": res["regime"],
                    "witness": list(res["witness"]) if res["witness"] is not None else None}, near
        near = near or res["regime"] == "near"
    if cfg.mode == "interval":
        xi = RInterval(as_rational(lo), as_rational(hi), bits=None)
        for p, l in fams:
            H = make_H(flow, curve, l, q, xi)
            flag, wit = find_short(H, flow.threshold2(l), flow.precision, exact=False, escalate=False)
            if flag is not False:
                return {"p": p, "l": l, "reason": "uncertified",
                        "regime": "certain" if flag else None}, near
    return None, near


# ---------------------------------------------------------------------------
# the construction


@dataclass
class StepStats:
    q: int
    children: int = 0
    removed_measure: int = 0
    removed_dynamical: int = 0
    indeterminate: int = 0
    uncertified: int = 0
    certain: int = 0
    boundary: int = 0
    kept_near: int = 0
    pruned: int = 0
    kept: int = 0
    digest: str = ""

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConstructionResult:
    config: EngineConfig
    generations: list            # Generation 0 .. last
    table: RemovalTable
    audit: list                  # one dict per removed child
    stats: list                  # StepStats per step
    failed_at: int | None = None

    @property
    def nonempty(self) -> bool:
        return self.failed_at is None

    def hashes(self) -> list[str]:
        return [g.digest() for g in self.generations]

    def indeterminate_fraction(self) -> float:
        total = sum(s.children for s in self.stats)
        bad = sum(s.indeterminate for s in self.stats)
        return bad / total if total else 0.0


def initial_generation(cfg: EngineConfig) -> Generation:
    lo, hi = cfg.I0
    return Generation(0, [IntervalRecord(0, lo, hi, None, ())])


def beam_indices(k: int, cap: int | None) -> list[int]:
    """Indices of at most ``cap`` evenly spread items out of k (always keeps the first)."""
    if cap is None or k <= cap:
        return list(range(k))
    if cap == 1:
        return [0]
    return [(i * (k - 1)) // (cap - 1) for i in range(cap)]


def step(gen: Generation, cfg: EngineConfig, table: RemovalTable, next_id: int = 0):
    """Build generation q+1 from generation q.

    Returns ``(next_generation, audit_entries, stats)`` and records the
    removal rates of step q in ``table``.
    """
    q = gen.q
    mu = cfg.measure
    stats = StepStats(q + 1)
    parents = gen.kept()
    children = []
    for par in parents:
        anc = par.ancestors + (par.id,)
        for lo, hi in partition_R([(par.lo, par.hi)], cfg.R):
            children.append(IntervalRecord(next_id, lo, hi, par.id, anc))
            next_id += 1
    stats.children = len(children)

    audit = []
    counts: dict[int, dict[int, int]] = {}

    def charge(p, rec):
        bucket = counts.setdefault(p, {})
        key = rec.ancestors[p]
        bucket[key] = bucket.get(key, 0) + 1

    for rec in children:
        small = measure_too_small(mu, rec.lo, rec.hi)
        if small is not False:
            rec.status = "removed"
            rec.reason = {"family": [q, None], "reason": "measure" if small else "indeterminate"}
            charge(q, rec)
            stats.removed_measure += 1
            stats.indeterminate += small is None
        else:
            verdict, near = removal_dynamical(rec.lo, rec.hi, cfg, q)
            if verdict is None:
                stats.kept_near += near
                continue
            rec.status = "removed"
            rec.reason = {"family": [verdict["p"], verdict["l"]], "reason": verdict["reason"],
                          "regime": verdict["regime"]}
            if verdict.get("witness") is not None:
                rec.reason["witness"] = verdict["witness"]
            charge(verdict["p"], rec)
            stats.removed_dynamical += 1
            stats.indeterminate += verdict["reason"] == "indeterminate"
            stats.uncertified += verdict["reason"] == "uncertified"
            stats.certain += verdict["regime"] == "certain"
            stats.boundary += verdict["regime"] == "boundary"
        audit.append({"q": q, **rec.to_json()})

    for p, per_anc in counts.items():
        table.record(p, q, per_anc)
    for p in range(q + 1):
        if (p, q) not in table.h:
            table.h[(p, q)] = 0

    survivors = [r for r in children if r.kept]
    keep = set(beam_indices(len(survivors), cfg.max_intervals))
    for i, rec in enumerate(survivors):
        if i not in keep:
            rec.status = "pruned"
            stats.pruned += 1
    if stats.pruned:
        log.info("step %d: pruned %d of %d survivors to the beam cap %d",
                 q, stats.pruned, len(survivors), cfg.max_intervals)
    nxt = Generation(q + 1, children)
    stats.kept = len(nxt.kept())
    stats.digest = nxt.digest()
    return nxt, audit, stats


def check_invariants(gen: Generation, cfg: EngineConfig) -> None:
    """Lengths, disjoint interiors and the mass lower bound of kept intervals."""
    length = (cfg.I0[1] - cfg.I0[0]) / Fraction(cfg.R) ** gen.q
    kept = sorted(gen.kept(), key=lambda r: r.lo)
    for r in kept:
        assert r.hi - r.lo == length, "kept interval has the wrong length"
        if gen.q > 0:
            assert measure_too_small(cfg.measure, r.lo, r.hi) is False, "kept interval is too light"
    for a, b in zip(kept, kept[1:]):
        assert a.hi <= b.lo, "kept intervals overlap"


def run_construction(cfg: EngineConfig, check: bool = True) -> ConstructionResult:
    """Run steps 0 .. q_max - 1, producing generations 0 .. q_max."""
    cfg.validate()
    gen = initial_generation(cfg)
    table = RemovalTable()
    result = ConstructionResult(cfg, [gen], table, [], [])
    next_id = 1
    for q in range(cfg.q_max):
        gen, audit, stats = step(gen, cfg, table, next_id)
        next_id += stats.children
        result.generations.append(gen)
        result.audit.extend(audit)
        result.stats.append(stats)
        log.info("generation %d: %d children, %d kept", q + 1, stats.children, stats.kept)
        if check:
            check_invariants(gen, cfg)
            _check_rates(gen, table, q)
        if stats.kept == 0:
            result.failed_at = q + 1
            break
    return result


def _check_rates(gen: Generation, table: RemovalTable, q: int) -> None:
    per: dict[tuple[int, int], int] = {}
    for r in gen.records:
        if r.status == "removed":
            p = r.reason["family"][0]
            key = (p, r.ancestors[p])
            per[key] = per.get(key, 0) + 1
    for (p, _), c in per.items():
        assert c <= table(p, q), "per-parent removals exceed the recorded rate"


def replay_audit(cfg: EngineConfig, audit) -> list[str]:
    """Generation hashes rebuilt from I0, the audit log and the beam rule alone."""
    removed: dict[int, set] = {}
    for e in audit:
        if "q" not in e:
            continue
        removed.setdefault(int(e["q"]), set()).add((as_rational(e["lo"]), as_rational(e["hi"])))
    kept = [cfg.I0]
    hashes = [generation_hash(0, kept)]
    for q in range(cfg.q_max):
        gone = removed.get(q, set())
        survivors = [c for c in partition_R(kept, cfg.R) if c not in gone]
        kept = [survivors[i] for i in beam_indices(len(survivors), cfg.max_intervals)]
        hashes.append(generation_hash(q + 1, kept))
        if not kept:
            break
    return hashes


# ---------------------------------------------------------------------------
# the t_q recursion


@dataclass
class TqTrace:
    values: list
    failed_at: int | None = None

    @property
    def nonempty(self) -> bool:
        return self.failed_at is None and all(t > 0 for t in self.values)

    def to_csv(self) -> str:
        lines = ["q,t_q,t_q_float"]
        lines += [f"{q},{rational_to_str(t)},{float(t):.12g}" for q, t in enumerate(self.values)]
        return "\n".join(lines) + "\n"


def tq_recursion(R: int, h, q_max: int) -> TqTrace:
    """t_q = R - h(q,q) - sum_{j=1}^q h(q-j,q) / prod_{i=1}^j t_{q-i}, exactly.

    ``h`` is a :class:`RemovalTable`, a dict keyed by (p, q), or a callable
    h(p, q).  The recursion stops (``failed_at = q``) when t_q <= 0, since a
    later step would divide by it.
    """
    if isinstance(h, dict):
        table = h
        h = lambda p, q: table.get((p, q), 0)  # noqa: E731
    values: list[Fraction] = []
    for q in range(q_max + 1):
        t = Fraction(R - h(q, q))
        prod = Fraction(1)
        for j in range(1, q + 1):
            prod *= values[q - j]
            hv = h(q - j, q)
            if hv:
                t -= Fraction(hv) / prod
        values.append(t)
        if t <= 0:
            return TqTrace(values, q)
    return TqTrace(values)


def _ceil_power(coeff: Fraction, base: int, exponent: RInterval) -> int:
    """ceil(coeff * base**x) for x given by shrinking enclosures ``exponent(bits)``."""
    bits = DEFAULT_PRECISION
    while True:
        v = coeff * iv_exp(iv_log(base, bits + 16) * exponent(bits + 16), bits)
        lo, hi = math.ceil(v.lo), math.ceil(v.hi)
        if lo == hi and not (v.lo == lo and v.hi != lo):
            return lo
        if bits >= precision_cap():
            raise IndeterminateError("ceiling of a power is undecidable")
        bits *= 2


def _alpha(alpha_num: int, alpha_den: int):
    if alpha_num == alpha_den:
        return lambda bits: RInterval(1, 1, bits)
    return lambda bits: iv_log(alpha_num, bits) / iv_log(alpha_den, bits)


@dataclass
class ModelRates:
    """Model removal rates h_{q,q} = R - ceil((4C)^-2 R^alpha) and
    h_{p,q} = ceil(C3 R^{alpha (1 - eta3)(q + 1 - p)}) for p < q."""

    R: int
    C: Fraction
    alpha_num: int
    alpha_den: int
    C3: Fraction
    eta3: Fraction

    def __post_init__(self):
        self.C, self.C3, self.eta3 = (as_rational(v) for v in (self.C, self.C3, self.eta3))
        a = _alpha(self.alpha_num, self.alpha_den)
        self._hqq = self.R - _ceil_power(1 / (16 * self.C ** 2), self.R, a)
        self._cache: dict[int, int] = {}

    def R_alpha(self, bits: int = DEFAULT_PRECISION) -> RInterval:
        a = _alpha(self.alpha_num, self.alpha_den)
        return iv_exp(iv_log(self.R, bits + 16) * a(bits + 16), bits)

    def __call__(self, p: int, q: int) -> int:
        if p == q:
            return self._hqq
        k = q + 1 - p
        if k not in self._cache:
            a = _alpha(self.alpha_num, self.alpha_den)
            self._cache[k] = _ceil_power(self.C3, self.R, lambda b: a(b) * ((1 - self.eta3) * k))
        return self._cache[k]

    def conditions(self, bits: int = DEFAULT_PRECISION) -> dict:
        """The two smallness conditions, decided with enclosures of R^{eta3 alpha}."""
        a = _alpha(self.alpha_num, self.alpha_den)
        x = iv_exp(iv_log(self.R, bits + 16) * a(bits + 16) * self.eta3, bits)
        small = self.C3 / x
        ratio = 36 * self.C ** 2 / x
        return {
            "C3_small": small.hi <= 1 / (32 * self.C ** 2),
            # sum_{j>=1} ratio^j <= 1  iff  ratio <= 1/2
            "geometric_sum": ratio.hi <= Fraction(1, 2),
        }

    def floor_value(self, bits: int = DEFAULT_PRECISION) -> RInterval:
        """(6C)^-2 R^alpha."""
        return self.R_alpha(bits) / (36 * self.C ** 2)


# ---------------------------------------------------------------------------
# extraction and certification


@dataclass
class BadEstimate:
    """c = min_q max_i q^{r_i} ||q x_i||, stored through its exact D-th power.

    ``c_pow`` is c**D (a Fraction for rational points, an RInterval
    enclosure otherwise) and ``value`` is c itself: a Fraction when D = 1
    and the point is rational, else an RInterval.
    """

    c_pow: object
    root: int
    value: object
    argmin_q: int

    @property
    def lower(self) -> Fraction:
        return self.value.lo if isinstance(self.value, RInterval) else self.value

    @property
    def upper(self) -> Fraction:
        return self.value.hi if isinstance(self.value, RInterval) else self.value

    def to_json(self) -> dict:
        enc = lambda v: v.to_json() if isinstance(v, RInterval) else rational_to_str(v)  # noqa: E731
        return {"c_est": enc(self.value), "c_est_float": float(self.lower), "root": self.root,
                "c_pow": enc(self.c_pow), "argmin_q": self.argmin_q}


def _dist_bounds(lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    """Bounds of the distance to Z over [lo, hi]."""
    k = math.floor(lo)
    if hi >= k + 1:
        return Fraction(0), Fraction(1, 2)
    f = lambda y: min(y - k, k + 1 - y)  # noqa: E731
    a, b = f(lo), f(hi)
    top = Fraction(1, 2) if lo <= k + Fraction(1, 2) <= hi else max(a, b)
    return min(a, b), top


def certify_bad(x, weights, Q: int, curve: CurveModel | None = None) -> BadEstimate:
    """min over 1 <= q <= Q of max_i q^{r_i} dist(q x_i, Z).

    ``x`` is a point of R^n (rationals or RIntervals), or a scalar parameter
    when ``curve`` is given (then the point is phi(x)), or a scalar when
    n = 1.  Comparisons use D-th powers with D the common denominator of the
    weights, so the minimum is exact for rational points; interval points
    give an enclosure of the minimum.
    """
    if Q < 1:
        raise ValueError("Q must be at least 1")
    w = weights if isinstance(weights, Weights) else Weights(tuple(weights))
    if curve is not None:
        point = curve.eval(x)
    elif isinstance(x, (list, tuple)):
        point = list(x)
    else:
        point = [x]
    if len(point) != w.n:
        raise ValueError("point dimension does not match the weights")
    D = math.lcm(*(r.denominator for r in w.r))
    expo = [int(r * D) for r in w.r]
    exact = not any(isinstance(v, RInterval) for v in point)

    if exact:
        pts = [as_rational(v) for v in point]
        nums = [v.numerator for v in pts]
        dens = [v.denominator for v in pts]
        best, arg = None, 1
        for q in range(1, Q + 1):
            worst = None
            for a, b, e in zip(nums, dens, expo):
                rmd = (q * a) % b
                d = Fraction(min(rmd, b - rmd), b)
                v = q ** e * d ** D
                if worst is None or v > worst:
                    worst = v
            if best is None or worst < best:
                best, arg = worst, q
                if best == 0:
                    break
        value = best if D == 1 else _root_enclosure(best, best, D)
        return BadEstimate(best, D, value, arg)

    pts = [v if isinstance(v, RInterval) else RInterval(v, v, bits=None) for v in point]
    best_lo = best_hi = None
    arg = 1
    for q in range(1, Q + 1):
        wl = wh = Fraction(0)
        for v, e in zip(pts, expo):
            dl, dh = _dist_bounds(q * v.lo, q * v.hi)
            f = Fraction(q ** e)
            wl, wh = max(wl, f * dl ** D), max(wh, f * dh ** D)
        if best_hi is None or wh < best_hi:
            best_hi, arg = wh, q
        if best_lo is None or wl < best_lo:
            best_lo = wl
    c_pow = RInterval(best_lo, best_hi, bits=None)
    value = c_pow if D == 1 else _root_enclosure(best_lo, best_hi, D)
    return BadEstimate(c_pow, D, value, arg)


def _root_enclosure(lo: Fraction, hi: Fraction, D: int) -> RInterval:
    from .arith import _root_bounds
    a = _root_bounds(lo, D, DEFAULT_PRECISION)[0] if lo > 0 else Fraction(0)
    b = _root_bounds(hi, D, DEFAULT_PRECISION)[1] if hi > 0 else Fraction(0)
    return RInterval(a, b, DEFAULT_PRECISION)


@dataclass
class Certificate:
    chain: list                  # (q, lo, hi) for q = 0 .. q_final
    midpoint: Fraction
    point: Fraction              # the point fed to certify_bad (in the support)
    estimate: BadEstimate
    floor: RInterval             # delta^2 / 2 at the largest tested l
    tq: TqTrace
    table: RemovalTable
    hashes: list
    stats: list
    admissibility: dict
    config: dict

    def to_json(self) -> dict:
        cfg = self.config
        return {
            "config": cfg,
            "config_sha256": config_digest(cfg),
            "chain": [{"q": q, "lo": rational_to_str(a), "hi": rational_to_str(b)} for q, a, b in self.chain],
            "midpoint": rational_to_str(self.midpoint),
            "point": rational_to_str(self.point),
            "bad_estimate": self.estimate.to_json(),
            "survivor_floor": self.floor.to_json(),
            "survivor_floor_float": float(self.floor.lo),
            "tq": [rational_to_str(t) for t in self.tq.values],
            "tq_nonempty": self.tq.nonempty,
            "removal_rates": [{"p": p, "q": q, "h": h} for (p, q), h in self.table.items()],
            "rate_trends": self.table.trend_lines(),
            "generation_hashes": self.hashes,
            "stats": [s.to_json() for s in self.stats],
            "admissibility": self.admissibility,
        }


def survivor_floor(cfg: EngineConfig, bits: int = DEFAULT_PRECISION) -> RInterval:
    """delta^2/2 with delta = e^{-eps beta l} at the largest l tested by the run.

    For n = 1 a lattice a(t)u(x)Z^2 whose orbit stays in K_delta for every t
    has q||qx|| >= delta^2/2 for all q; survivors only see finitely many
    times, so this is a reference scale rather than a guarantee.
    """
    ls = [l for q in range(cfg.q_max) for _, l in cfg.schedule.families(q)]
    l = max(ls, default=0)
    return cfg.flow.threshold2(l).enclose(bits) / 2


def extract_point(result: ConstructionResult, strategy: str | None = None, Q: int | None = None) -> Certificate:
    """Nested chain ending in a kept interval of the last generation."""
    cfg = result.config
    strategy = strategy or cfg.strategy
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    if not result.nonempty:
        raise ConstructionFailed(result.failed_at, f"construction failed at generation {result.failed_at}")
    last = result.generations[-1]
    kept = sorted(last.kept(), key=lambda r: r.lo)
    if strategy == "leftmost":
        leaf = kept[0]
    else:
        mu = cfg.measure
        leaf = max(kept, key=lambda r: (mu.measure_interval(r.lo, r.hi), -r.lo))
    chain = []
    rec = leaf
    for g in reversed(result.generations):
        chain.append((g.q, rec.lo, rec.hi))
        if rec.parent is None:
            break
        rec = result.generations[g.q - 1].by_id()[rec.parent]
    chain.reverse()
    for (_, a, b), (_, c, d) in zip(chain, chain[1:]):
        assert a <= c and d <= b and (a, b) != (c, d), "chain is not strictly nested"
    mid = leaf.midpoint
    point = mid
    if isinstance(cfg.measure, DigitCantor):
        point = cfg.measure.support_point_in(leaf.lo, leaf.hi)
        if point is None:
            raise ConstructionFailed(last.q, "final interval misses the support")
    est = certify_bad(point, cfg.flow.weights, Q or cfg.Q, curve=cfg.curve)
    return Certificate(
        chain=chain, midpoint=mid, point=point, estimate=est, floor=survivor_floor(cfg),
        tq=tq_recursion(cfg.R, result.table, len(result.generations) - 2),
        table=result.table, hashes=result.hashes(), stats=result.stats,
        admissibility=cfg.admissibility(), config=cfg.to_json(),
    )
