#!/usr/bin/env python3
"""
lmc blowup check|calibrate

check      chart round trips, fiber-distance route bounds against the chart
           grid oracle, and the pullback-to-base modulus transfer on a field
calibrate  fit the route constants K1, K2, K3 on the chart grid (n = q = 2)
"""

import json
import logging
import math
from typing import Any, Dict, Sequence

import numpy as np

from logmodcert import cli
from logmodcert.blowup import (
    DEFAULT_ROUTE_CONSTANTS,
    ChartGrid,
    blowup_forward,
    blowup_lift,
    calibrate_route_constants,
    fiber_distance_upper,
    jacobian_constant,
    lift_jacobian_norm,
    measure_pullback_modulus,
    transfer_logmod,
    transfer_scale,
    verify_fiber_bounds,
)
from logmodcert.errors import ObstacleContactError, UsageError
from logmodcert.gridfield import GridField, load_field
from logmodcert.lab import inverse_log_power

log = logging.getLogger(__name__)

ACTIONS = ("check", "calibrate")
ROUND_TRIP_RTOL = 1e-12


# ==========================================
# HELPERS
# ==========================================
def calibration_filename(n: int, q: int) -> str:
    return f"calibration_n{n}_q{q}.json"


def resolve_nq(ctx: cli.RunContext) -> tuple:
    n, q = int(ctx.get("n", 2)), int(ctx.get("q", 2))
    if not 2 <= q <= n:
        raise UsageError(f"❌ Need 2 <= q <= n, got n={n}, q={q}")
    return n, q


def make_grid(ctx: cli.RunContext) -> ChartGrid:
    return ChartGrid(s_max=float(ctx.get("s_max", 1.0)), n_s=int(ctx.get("grid_ns", 65)),
                     n_theta=int(ctx.get("grid_ntheta", 64)))


def default_field() -> GridField:
    """|log|x||^{-2} on a box clear of the center {x = 0} of the planar blowup."""
    return GridField.from_function(lambda p: inverse_log_power(p, 2.0), [0.05, -0.2], [0.45, 0.2], 129)


def round_trip_error(n: int, q: int, samples: int, seed: int) -> float:
    """Worst relative error of forward(lift(a)) over random complex points off V."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        chart, x_j, v, tail = blowup_lift(a, q)
        back = blowup_forward(chart, x_j, v, tail)
        worst = max(worst, float(np.linalg.norm(back - a) / np.linalg.norm(a)))
    return worst


def load_constants(ctx: cli.RunContext, n: int, q: int) -> Dict[str, Any]:
    path = ctx.get("calibration")
    if path is None:
        return {"constants": list(DEFAULT_ROUTE_CONSTANTS), "source": "default"}
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    if int(raw.get("n", n)) != n or int(raw.get("q", q)) != q:
        raise UsageError(f"❌ Calibration {path} is for n={raw.get('n')}, q={raw.get('q')}")
    return {"constants": [float(c) for c in raw["constants"]], "source": path}


# ==========================================
# ACTIONS
# ==========================================
def action_check(ctx: cli.RunContext) -> int:
    n, q = resolve_nq(ctx)
    M = float(ctx.get("M", 2.0))
    rt = round_trip_error(n, q, int(ctx.get("round_trips", 10_000)), ctx.seed)
    log.info(f"🔎 chart round trip: worst relative error {rt:.3g}")

    cal = load_constants(ctx, n, q)
    constants = cal["constants"]
    fiber: Dict[str, Any] = {"skipped": True}
    if n == 2 and q == 2:
        fiber = verify_fiber_bounds(make_grid(ctx), constants, n_pairs=int(ctx.get("pairs", 2000)),
                                    seed=ctx.seed + 1, workers=ctx.threads)
    else:
        log.warning(f"⚠️ No chart grid oracle for n={n}, q={q}; fiber bounds not checked")

    u = load_field(ctx.get("field")) if ctx.get("field") else default_field()
    C_pb = ctx.get("c_pullback")
    if C_pb is None:
        measured = measure_pullback_modulus(u, M, seed=ctx.seed)
        C_pb = measured["C_pullback"]
        log.info(f"🔎 measured pullback constant {C_pb:.4g} over {measured['pairs']} chart pairs")
    _, transfer = transfer_logmod(u, M, float(C_pb), q=min(q, u.ndim), constants=constants,
                                  n_pairs=int(ctx.get("transfer_pairs", 10_000)), seed=ctx.seed)

    passed = rt <= ROUND_TRIP_RTOL and transfer["passed"] and fiber.get("passed", True)
    metrics = {
        "round_trip_error": rt,
        "constants": constants,
        "constants_source": cal["source"],
        "fiber": fiber,
        "transfer": transfer,
        "C_pullback": float(C_pb),
        "M": M,
    }
    certificate = {"C_base": transfer["C_base"], "M": M, "t0": transfer_scale(constants)}
    return ctx.finish(passed, metrics, certificate)


def action_calibrate(ctx: cli.RunContext) -> int:
    n, q = resolve_nq(ctx)
    if (n, q) != (2, 2):
        raise UsageError("❌ The chart grid oracle models n = q = 2 only")
    grid = make_grid(ctx)
    calibration = calibrate_route_constants(grid, n_pairs=int(ctx.get("pairs", 2000)), seed=ctx.seed,
                                            workers=ctx.threads)
    ctx.write_json(calibration_filename(n, q), calibration)
    check = verify_fiber_bounds(grid, calibration["constants"], n_pairs=int(ctx.get("pairs", 2000)),
                                seed=ctx.seed + 1, workers=ctx.threads)
    return ctx.finish(check["passed"], {"calibration": calibration, "holdout": check})


# ==========================================
# SELFTEST
# ==========================================
def selftest(ctx: cli.RunContext) -> int:
    a = np.array([0.3 + 0.1j, -0.2j, 1.0])
    try:
        blowup_lift([0.0, 0.0, 1.0], 2)
        contact = False
    except ObstacleContactError:
        contact = True
    near = np.array([1e-3, 2e-3j, 0.5])
    checks = {
        "forward(lift(a)) returns a": round_trip_error(3, 2, 100, ctx.seed) <= ROUND_TRIP_RTOL,
        "points on the center have no lift": contact,
        "lift Jacobian within K dist^-2": lift_jacobian_norm(near, 2) <= jacobian_constant(3, 2) * np.linalg.norm(near[:2]) ** -2,
        "identical points have fiber distance 0": fiber_distance_upper(a, a, 2) == 0.0,
        "default transfer scale is 4^-8": math.isclose(transfer_scale(DEFAULT_ROUTE_CONSTANTS), 4.0 ** -8),
    }
    return cli.selftest_report(ctx, checks)


def build_parser() -> cli.CliParser:
    parser = cli.make_parser("lmc blowup", "Blowup charts and pullback modulus transfer.", ACTIONS)
    parser.add_argument("--n", type=int, help="Ambient complex dimension (default: 2).")
    parser.add_argument("--q", type=int, help="Codimension of the center (default: 2).")
    parser.add_argument("--M", type=float, help="Log exponent of the pullback modulus (default: 2).")
    parser.add_argument("--field", help="Base field (CSV or GF01 binary) on a real slice clear of the center.")
    parser.add_argument("--c-pullback", type=float, help="Pullback constant (default: measured on chart pairs).")
    parser.add_argument("--calibration", help="Calibration JSON written by 'blowup calibrate'.")
    parser.add_argument("--pairs", type=int, help="Chart pairs for calibration and oracle checks (default: 2000).")
    parser.add_argument("--transfer-pairs", type=int, help="Random base pairs for the transfer check (default: 10000).")
    parser.add_argument("--round-trips", type=int, help="Random round-trip points (default: 10000).")
    parser.add_argument("--s-max", type=float, help="Chart grid half-width in s (default: 1).")
    parser.add_argument("--grid-ns", type=int, help="Chart grid nodes in s, odd (default: 65).")
    parser.add_argument("--grid-ntheta", type=int, help="Chart grid nodes in theta (default: 64).")
    return parser


def main(argv: Sequence[str]) -> int:
    actions = {"check": action_check, "calibrate": action_calibrate}
    return cli.dispatch(build_parser(), argv, "blowup", actions, selftest)


if __name__ == "__main__":
    import sys

    logging.basicConfig(level="INFO", format="[%(levelname)s] %(message)s")
    raise SystemExit(main(sys.argv[1:]))
