#!/usr/bin/env python3
"""
lmc chain build|verify|random

Build, re-verify and stress-test safe polygonal chains around flats of
codimension >= 2.
"""

import json
import logging
import math
from typing import List, Sequence

import numpy as np

from logmodcert import cli
from logmodcert.chains import (
    PolygonalChain,
    build_safe_chain,
    certify_random_instances,
    chain_constant,
    classify_waypoint,
    verify_chain,
)
from logmodcert.errors import UsageError
from logmodcert.geometry import Arrangement, coordinate_subspace, dist_to_affine, load_arrangement

log = logging.getLogger(__name__)

ACTIONS = ("build", "verify", "random")


# ==========================================
# HELPERS
# ==========================================
def z_axis_instance() -> Arrangement:
    """The k = 1 instance: the z-axis {x1 = x2 = 0} in R^3."""
    return Arrangement([coordinate_subspace(3, [0, 1])])


def resolve_arrangement(ctx: cli.RunContext) -> Arrangement:
    raw = ctx.get("arrangement")
    if raw is None:
        return z_axis_instance()
    if isinstance(raw, dict):
        return Arrangement.from_dict(raw)
    return load_arrangement(raw)


def resolve_point(ctx: cli.RunContext, key: str, default: Sequence[float], dim: int) -> np.ndarray:
    value = cli.parse_floats(ctx.get(key))
    point = np.asarray(default if value is None else value, dtype=float)
    if point.shape[0] != dim:
        raise UsageError(f"❌ --{key} must have {dim} coordinates")
    return point


# ==========================================
# ACTIONS
# ==========================================
def action_build(ctx: cli.RunContext) -> int:
    arrangement = resolve_arrangement(ctx)
    m = arrangement.ambient_dim
    x = resolve_point(ctx, "x", [1.0] + [0.0] * (m - 1), m)
    y = resolve_point(ctx, "y", [-1.0] + [0.0] * (m - 2) + [0.5], m)
    chain, cert = build_safe_chain(x, y, arrangement, samples_per_segment=int(ctx.get("samples", 1000)))
    ctx.write_json("chain.json", {"chain": chain.to_dict(), "certificate": cert.to_dict(), "arrangement": arrangement.to_dict()})
    metrics = {
        "vertices": len(chain),
        "length": cert.measured_length,
        "length_bound": cert.length_bound,
        "min_clearance_ratio": cert.measured_min_clearance_ratio,
    }
    return ctx.finish(cert.passed, metrics, cert.to_dict())


def action_verify(ctx: cli.RunContext) -> int:
    path = ctx.get("chain")
    if path is None:
        raise UsageError("❌ chain verify needs --chain <chain.json>")
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    chain = PolygonalChain.from_dict(raw["chain"])
    if ctx.get("arrangement") is None and "arrangement" in raw:
        arrangement = Arrangement.from_dict(raw["arrangement"])
    else:
        arrangement = resolve_arrangement(ctx)
    C = ctx.get("constant")
    C = chain_constant(len(arrangement)) if C is None else float(C)
    cert = verify_chain(chain, arrangement, C, samples_per_segment=int(ctx.get("samples", 1000)))
    metrics = {"length": cert.measured_length, "length_bound": cert.length_bound,
               "min_clearance_ratio": cert.measured_min_clearance_ratio}
    return ctx.finish(cert.passed, metrics, cert.to_dict())


def action_random(ctx: cli.RunContext) -> int:
    m_values: List[int] = cli.parse_ints(ctx.get("m", "3,4,5,6"))
    k_values: List[int] = cli.parse_ints(ctx.get("k", "1,2,3"))
    if min(m_values) < 3:
        raise UsageError("❌ Random instances need m >= 3 (flats of codimension >= 2 with room to detour)")
    n = int(ctx.get("instances", 10_000))
    summary = certify_random_instances(m_values, k_values, n, ctx.seed, workers=ctx.threads)
    log.info(f"🔎 {summary['instances']} instances, {summary['failures']} failures")
    return ctx.finish(summary["failures"] == 0, summary)


# ==========================================
# SELFTEST
# ==========================================
def selftest(ctx: cli.RunContext) -> int:
    z_axis = coordinate_subspace(3, [0, 1])
    w, case = classify_waypoint([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], z_axis)
    _, cert = build_safe_chain([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], z_axis_instance())
    checks = {
        "distance to the z-axis of (3,4,5) is 5": math.isclose(dist_to_affine([3, 4, 5], z_axis), 5.0),
        "point on the flat has distance 0": dist_to_affine([0, 0, 7], z_axis) == 0.0,
        "C_1 = 6 and C_2 = 80": chain_constant(1) == 6.0 and chain_constant(2) == 80.0,
        "coincident endpoints need no detour": case == 1 and np.array_equal(w, [1.0, 0.0, 0.0]),
        "chain through the z-axis is certified": cert.passed,
    }
    return cli.selftest_report(ctx, checks)


def build_parser() -> cli.CliParser:
    parser = cli.make_parser("lmc chain", "Safe polygonal chains around arrangements of flats.", ACTIONS)
    parser.add_argument("--arrangement", help="Arrangement JSON (default: the z-axis in R^3).")
    parser.add_argument("--x", help="Start point, comma-separated.")
    parser.add_argument("--y", help="End point, comma-separated.")
    parser.add_argument("--chain", help="Chain JSON written by 'chain build' (verify).")
    parser.add_argument("--constant", type=float, help="Clearance constant C (verify; default: C_k for k flats).")
    parser.add_argument("--samples", type=int, help="Clearance samples per segment, 0 for exact (default: 1000).")
    parser.add_argument("--m", help="Ambient dimensions for random instances (default: 3,4,5,6).")
    parser.add_argument("--k", help="Flat counts for random instances (default: 1,2,3).")
    parser.add_argument("--instances", type=int, help="Number of random instances (default: 10000).")
    return parser


def main(argv: Sequence[str]) -> int:
    actions = {"build": action_build, "verify": action_verify, "random": action_random}
    return cli.dispatch(build_parser(), argv, "chain", actions, selftest)


if __name__ == "__main__":
    import sys

    logging.basicConfig(level="INFO", format="[%(levelname)s] %(message)s")
    raise SystemExit(main(sys.argv[1:]))
