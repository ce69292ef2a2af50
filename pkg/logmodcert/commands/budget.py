#!/usr/bin/env python3
"""
lmc budget sweep|bootstrap

Scalar bound budget: sweep the weak-log envelope over a log t-grid with the
m-selection rule, and iterate the exponent bootstrap.
"""

import logging
import math
from typing import Sequence

from logmodcert import cli
from logmodcert.bounds import (
    DEFAULT_T_RANGE,
    POINTS_PER_DECADE,
    SWEEP_HEADER,
    ApproxSchedule,
    bootstrap_exponents,
    certify_weak_logmod,
    choose_m,
    lower_envelope,
    stability_exponent,
)
from logmodcert.errors import UsageError

log = logging.getLogger(__name__)

ACTIONS = ("sweep", "bootstrap")


# ==========================================
# ACTIONS
# ==========================================
def action_sweep(ctx: cli.RunContext) -> int:
    sched = ApproxSchedule(
        n=int(ctx.get("n", 2)),
        B=float(ctx.get("B", 2.0)),
        D=float(ctx.get("D", 2.0)),
        p=float(ctx.get("p", 1.0)),
        C4=float(ctx.get("C4", 1.0)),
    )
    t_range = cli.parse_floats(ctx.get("t_range")) or list(DEFAULT_T_RANGE)
    if len(t_range) != 2 or not 0 < t_range[0] < t_range[1] < 0.5:
        raise UsageError("❌ --t-range needs two separations 0 < t_min < t_max < 1/2")
    gamma = ctx.get("gamma")
    cert = certify_weak_logmod(
        sched,
        gamma=None if gamma is None else float(gamma),
        t_range=t_range,
        improved=bool(ctx.get("improved", False)),
        points_per_decade=int(ctx.get("points_per_decade", POINTS_PER_DECADE)),
    )
    ctx.write_csv(
        str(ctx.get("csv", "sweep.csv")),
        SWEEP_HEADER,
        cert.rows,
        plot={"x_column": 1, "y_columns": [6, 7], "labels": ["envelope", "weighted"], "logscale": "xy"},
    )
    log.info(f"🔎 weak log constant c={cert.c:.4g}, slope {cert.slope:.3f} vs -gamma={-cert.gamma:.3f}")
    metrics = {**cert.to_dict(), "schedule": sched.to_dict(), "points": len(cert.rows)}
    return ctx.finish(cert.passed, metrics, cert.to_dict())


def action_bootstrap(ctx: cli.RunContext) -> int:
    gamma_init = float(ctx.get("gamma_init", 0.5))
    target = float(ctx.get("target", 1.0))
    seq = bootstrap_exponents(gamma_init, target)
    ctx.write_csv("bootstrap.csv", ["step", "gamma"], [[i, g] for i, g in enumerate(seq)],
                  plot={"x_column": 1, "y_columns": [2], "labels": ["gamma"], "logscale": "y"})
    metrics = {"exponents": seq, "steps": len(seq) - 1, "final": seq[-1]}
    if ctx.get("beta") is not None:
        metrics["stability_exponent"] = stability_exponent(float(ctx.get("n", 2)), float(ctx.get("beta")),
                                                           float(ctx.get("r", 1.0)))
    return ctx.finish(seq[-1] > target, metrics)


# ==========================================
# SELFTEST
# ==========================================
def selftest(ctx: cli.RunContext) -> int:
    checks = {
        "bootstrap from 1/2 past 3/2 takes 3 steps": bootstrap_exponents(0.5, 1.5) == [0.5, 0.75, 1.3125, 3.03515625],
        "m selection floors at m0 + 1 = 8": choose_m(1e-2, 0.9, 2.0, 7) == 8,
        "stability exponent (2, 1, 2) is 1/3": math.isclose(stability_exponent(2.0, 1.0, 2.0), 1.0 / 3.0),
        "lower envelope at delta = 1 is -C/(2m)": math.isclose(lower_envelope(10.0, 1.0, 1.0), -0.05),
        "default gamma for n = 2, p = 1 is 1/7": math.isclose(ApproxSchedule(n=2, B=1.0, D=2.0).gamma, 1.0 / 7.0),
    }
    return cli.selftest_report(ctx, checks)


def build_parser() -> cli.CliParser:
    parser = cli.make_parser("lmc budget", "Approximation bound budget and exponent bootstrap.", ACTIONS)
    parser.add_argument("--D", type=float, help="Schedule exponent, delta = m^{-2D} (default: 2).")
    parser.add_argument("--gamma", type=float, help="Target exponent in (0, 1) (default: p / (p + 2n + 2)).")
    parser.add_argument("--B", type=float, help="Bound B on the potential (default: 2).")
    parser.add_argument("--n", type=int, help="Complex dimension (default: 2).")
    parser.add_argument("--p", type=float, help="Integrability exponent p (default: 1).")
    parser.add_argument("--C4", type=float, help="Constant of the improved m-selection route (default: 1).")
    parser.add_argument("--improved", action="store_true", default=None, help="Use the improved m-selection route (sweep).")
    parser.add_argument("--t-range", help="Separation range t_min,t_max (default: 1e-12,1e-2).")
    parser.add_argument("--points-per-decade", type=int, help="Grid density of the sweep (default: 40).")
    parser.add_argument("--csv", help="Sweep CSV name under --out (default: sweep.csv).")
    parser.add_argument("--gamma-init", type=float, help="Initial exponent of the bootstrap (default: 0.5).")
    parser.add_argument("--target", type=float, help="Exponent the bootstrap must exceed (default: 1).")
    parser.add_argument("--beta", type=float, help="Measure exponent for the stability exponent (bootstrap).")
    parser.add_argument("--r", type=float, help="Integrability exponent r for the stability exponent (default: 1).")
    return parser


def main(argv: Sequence[str]) -> int:
    actions = {"sweep": action_sweep, "bootstrap": action_bootstrap}
    return cli.dispatch(build_parser(), argv, "budget", actions, selftest)


if __name__ == "__main__":
    import sys

    logging.basicConfig(level="INFO", format="[%(levelname)s] %(message)s")
    raise SystemExit(main(sys.argv[1:]))
