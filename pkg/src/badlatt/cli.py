"""Command line front end.

Subcommands write their artifacts into ``--out`` (default: the current
directory).  Every file carries the full configuration and its sha256, and
no file contains timestamps, so reruns with the same inputs are
byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from fractions import Fraction

from .arith import RInterval, as_rational, iv_sqrt, rational_to_str
from .curves import load_curve
from .engine import (
    ConfigError,
    ConstructionFailed,
    EngineConfig,
    ModelRates,
    certify_bad,
    config_digest,
    extract_point,
    run_construction,
    tq_recursion,
)
from .flows import Weights, orbit_floor, orbit_trajectory, trajectory_csv
from .fractal import measure_from_json
from .qnd import QndExperiment, fit_masses, masses_csv, measure_W

log = logging.getLogger("badlatt")


# ---------------------------------------------------------------------------
# helpers


def parse_number(text: str, precision: int = 128):
    """A rational ("3/7", "0.25"), "golden" or "sqrt:k" (an enclosure of sqrt k)."""
    text = text.strip()
    if text == "golden":
        root5 = iv_sqrt(5, precision)
        return (root5 + 1) / 2
    if text.startswith("sqrt:"):
        return iv_sqrt(as_rational(text[5:]), precision)
    return as_rational(text)


def _jsonable(x):
    if isinstance(x, RInterval):
        return x.to_json()
    if isinstance(x, Fraction):
        return rational_to_str(x)
    return x


def _header(config: dict) -> list[str]:
    return [f"# config: {json.dumps(config, sort_keys=True)}", f"# config_sha256: {config_digest(config)}"]


def _write(out: str, name: str, text: str) -> str:
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _write_csv(out: str, name: str, config: dict, body: str) -> str:
    return _write(out, name, "\n".join(_header(config)) + "\n" + body)


def _write_json(out: str, name: str, obj: dict) -> str:
    return _write(out, name, json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n")


def _load_json(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# subcommands


def cmd_construct(args) -> int:
    raw = _load_json(args.config)
    if args.precision:
        raw["precision"] = args.precision
    if args.mode:
        raw["mode"] = args.mode
    raw["seed"] = args.seed
    try:
        cfg = EngineConfig.from_json(raw)
        result = run_construction(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = cfg.to_json()
    config["seed"] = args.seed
    digest = config_digest(config)

    lines = [json.dumps({"type": "config", "config": config, "config_sha256": digest}, sort_keys=True)]
    lines += [json.dumps({"type": "removal", **e}, sort_keys=True) for e in result.audit]
    _write(args.out, "audit.jsonl", "\n".join(lines) + "\n")
    _write_csv(args.out, "removals.csv", config, result.table.to_csv())
    tq = tq_recursion(cfg.R, result.table, max(len(result.generations) - 2, 0))
    _write_csv(args.out, "tq.csv", config, tq.to_csv())

    if not result.nonempty:
        _write_json(args.out, "certificate.json", {
            "config": config, "config_sha256": digest, "nonempty": False,
            "failed_at": result.failed_at, "generation_hashes": result.hashes(),
            "stats": [s.to_json() for s in result.stats]})
        print(f"construction failed: generation {result.failed_at} is empty", file=sys.stderr)
        return 1
    try:
        cert = extract_point(result)
    except ConstructionFailed as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return 1
    body = cert.to_json()
    body["config"] = config
    body["config_sha256"] = digest
    body["nonempty"] = True
    body["indeterminate_fraction"] = result.indeterminate_fraction()
    _write_json(args.out, "certificate.json", body)
    print(f"nonempty through generation {cfg.q_max}; point {rational_to_str(cert.point)}; "
          f"c_est >= {float(cert.estimate.lower):.6g} (argmin q = {cert.estimate.argmin_q})")
    return 0


def cmd_certify(args) -> int:
    raw = _load_json(args.config)
    x = args.x if args.x is not None else raw.get("x")
    if x is None:
        print("error: --x is required", file=sys.stderr)
        return 2
    weights = Weights(tuple(args.weights.split(",") if args.weights else raw.get("weights", ["1"])))
    curve_spec = args.curve or raw.get("curve")
    curve = load_curve(curve_spec) if curve_spec else None
    Q = args.Q or int(raw.get("Q", 10_000))
    precision = args.precision or int(raw.get("precision", 128))
    point = parse_number(str(x), precision)
    est = certify_bad(point, weights, Q, curve=curve)
    config = {"x": str(x), "weights": weights.to_json(), "curve": curve.to_json() if curve else None,
              "Q": Q, "precision": precision, "seed": args.seed}
    body = {"config": config, "config_sha256": config_digest(config), **est.to_json()}
    _write_json(args.out, "certify.json", body)
    print(f"c_est in [{float(est.lower):.9g}, {float(est.upper):.9g}] at q = {est.argmin_q}")
    return 0


def cmd_flow(args) -> int:
    raw = _load_json(args.config)
    weights = Weights(tuple(args.weights.split(",") if args.weights else raw.get("weights", ["1"])))
    precision = args.precision or int(raw.get("precision", 128))
    xs = args.x.split(";") if args.x else raw.get("x")
    if xs is None:
        print("error: --x is required", file=sys.stderr)
        return 2
    if isinstance(xs, str):
        xs = xs.split(";")
    point = [parse_number(str(v), precision) for v in (xs if isinstance(xs, list) else [xs])]
    t_max = as_rational(args.t_max if args.t_max is not None else raw.get("t_max", 25))
    t_step = as_rational(args.t_step if args.t_step is not None else raw.get("t_step", "1/4"))
    steps = int(t_max / t_step)
    grid = [k * t_step for k in range(steps + 1)]
    samples = orbit_trajectory(weights, point, grid, precision)
    config = {"x": [str(v) for v in xs], "weights": weights.to_json(), "t_max": rational_to_str(t_max),
              "t_step": rational_to_str(t_step), "precision": precision, "seed": args.seed}
    _write_csv(args.out, "trajectory.csv", config, trajectory_csv(samples))
    floor = orbit_floor(samples)
    _write_json(args.out, "flow.json", {"config": config, "config_sha256": config_digest(config),
                                        "floor_norm2": rational_to_str(floor) if floor is not None else None})
    print(f"orbit floor (norm^2 lower bound) = {float(floor) if floor is not None else float('nan'):.6g}")
    return 0


def cmd_qnd(args) -> int:
    raw = _load_json(args.config)
    if args.precision:
        raw["precision"] = args.precision
    try:
        curve = load_curve(raw.get("curve", "veronese:1"))
        exp = QndExperiment(
            mu=measure_from_json(raw.get("measure", {"kind": "lebesgue"})),
            curve=curve,
            J=tuple(raw.get("J", (0, 1))),
            tau=tuple(raw["tau"]),
            delta_grid=tuple(raw["delta_grid"]),
            rho=raw.get("rho", 1),
            cylinder_depth=int(raw.get("cylinder_depth", 8)),
            base=raw.get("base"),
            precision=int(raw.get("precision", 128)),
            global_estimate=bool(raw.get("global_estimate", False)),
        )
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    masses = measure_W(exp)
    config = dict(raw)
    config["seed"] = args.seed
    _write_csv(args.out, "qnd.csv", config, masses_csv(masses))
    summary = {"config": config, "config_sha256": config_digest(config),
               "rows": [m.to_row() for m in masses],
               "max_gap_share": max(float(m.gap / m.total) for m in masses) if masses[0].total else None}
    # brackets wider than 5% of mu(J) call for a deeper cylinder resolution
    summary["flagged"] = summary["max_gap_share"] is None or summary["max_gap_share"] >= 0.05
    try:
        summary["fit"] = fit_masses(masses, rho=exp.rho).to_json()
    except ValueError as exc:
        summary["fit"] = {"error": str(exc)}
    _write_json(args.out, "qnd.json", summary)
    for m in masses:
        print(f"delta={rational_to_str(m.delta)}: mass in [{float(m.lo):.6g}, {float(m.hi):.6g}]")
    return 0


def _read_h_csv(path: str) -> dict:
    table = {}
    with open(path) as fh:
        rows = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(io.StringIO("".join(rows))):
        table[(int(row["p"]), int(row["q"]))] = int(row["h"])
    return table


def cmd_tq(args) -> int:
    raw = _load_json(args.config)
    q_max = args.q_max if args.q_max is not None else int(raw.get("q_max", 200))
    preset = args.preset or raw.get("preset")
    if preset == "model":
        p = raw.get("model", {})
        rates = ModelRates(R=int(args.R or raw.get("R", 2 ** 16)), C=p.get("C", 1),
                           alpha_num=int(p.get("alpha_num", 2)), alpha_den=int(p.get("alpha_den", 3)),
                           C3=p.get("C3", 4), eta3=p.get("eta3", "7/10"))
        R, h = rates.R, rates
        extra = {"conditions": rates.conditions(), "floor": rates.floor_value().to_json()}
        config = {"preset": "model", "R": R, "q_max": q_max, "C": rational_to_str(rates.C),
                  "alpha_num": rates.alpha_num, "alpha_den": rates.alpha_den,
                  "C3": rational_to_str(rates.C3), "eta3": rational_to_str(rates.eta3)}
    else:
        R = int(args.R or raw.get("R", 0))
        if R < 2:
            print("error: --R is required", file=sys.stderr)
            return 2
        h_path = args.h or raw.get("h")
        h = _read_h_csv(h_path) if h_path else {}
        extra = {}
        config = {"R": R, "q_max": q_max, "h": {f"{p},{q}": v for (p, q), v in sorted(h.items())}}
    config["seed"] = args.seed
    trace = tq_recursion(R, h, q_max)
    _write_csv(args.out, "tq.csv", config, trace.to_csv())
    summary = {"config": config, "config_sha256": config_digest(config), "nonempty": trace.nonempty,
               "failed_at": trace.failed_at, "min_t": rational_to_str(min(trace.values)), **extra}
    _write_json(args.out, "tq.json", summary)
    print(f"t_q positive for all q <= {q_max}: {trace.nonempty}; min t_q = {float(min(trace.values)):.6g}")
    return 0 if trace.nonempty else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--precision", type=int, help="working precision in bits")
    common.add_argument("--mode", choices=("midpoint", "interval"), help="removal test mode")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed recorded with the run")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="badlatt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="run the interval construction")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("certify", parents=[common], help="estimate the badly approximable constant")
    p.add_argument("--x", help='parameter: rational, "golden" or "sqrt:k"')
    p.add_argument("--weights", help="comma-separated weights, e.g. 1/2,1/2")
    p.add_argument("--curve", help='curve preset such as "veronese:2" or a JSON file')
    p.add_argument("--Q", type=int, help="largest denominator q")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("flow", parents=[common], help="shortest vectors along a diagonal orbit")
    p.add_argument("--x", help="point coordinates separated by ';'")
    p.add_argument("--weights", help="comma-separated weights")
    p.add_argument("--t-max", dest="t_max")
    p.add_argument("--t-step", dest="t_step")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("qnd", parents=[common], help="mass brackets of the non-divergence sets")
    p.set_defaults(func=cmd_qnd)

    p = sub.add_parser("tq", parents=[common], help="evaluate the t_q recursion")
    p.add_argument("--R", type=int)
    p.add_argument("--h", help="CSV with columns p,q,h")
    p.add_argument("--preset", choices=("model",))
    p.add_argument("--q-max", dest="q_max", type=int)
    p.set_defaults(func=cmd_tq)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
