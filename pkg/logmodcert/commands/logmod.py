#!/usr/bin/env python3
"""
lmc logmod propagate|verify

Propagate a local log^alpha modulus to a global one (convex, unit-shrink or
ball-minus-arrangement) and check bounds against synthetic pseudometrics.
"""

import json
import logging
import math
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from logmodcert import cli
from logmodcert.errors import ParameterError, UsageError
from logmodcert.geometry import Arrangement, ConvexDomain, coordinate_subspace
from logmodcert.logmod import (
    LogModulus,
    PseudometricSpec,
    convex_series_constant,
    discrete_pseudometric,
    dyadic_integral_bound,
    dyadic_sum,
    geometric_series_constant,
    lipschitz_log_constant,
    lipschitz_pseudometric,
    log_point_pseudometric,
    log_uniform_pair_sampler,
    measure_local_modulus,
    planted_violation_scale,
    propagate_ball_minus_arrangement,
    propagate_convex,
    propagate_convex_unit,
    unit_shrink_series_constant,
    verify_logmod,
    zero_pseudometric,
)

log = logging.getLogger(__name__)

ACTIONS = ("propagate", "verify")
MODES = ("convex", "unit", "arrangement")

DEFAULT_PROBLEMS: Dict[str, Dict[str, Any]] = {
    "convex": {
        "domain": {"ambient_dim": 2, "ball": {"center": [0.0, 0.0], "radius": 0.5}},
        "pseudometric": {"kind": "log-point", "q": [0.1, 0.0]},
        "alpha": 1.0,
        "D": 2.0,
    },
    "unit": {
        "domain": {"ambient_dim": 2, "ball": {"center": [0.0, 0.0], "radius": 0.5}},
        "pseudometric": {"kind": "lipschitz", "K": 1.0, "cap": 1.0},
        "alpha": 2.0,
    },
    "arrangement": {
        "domain": {"ambient_dim": 2, "ball": {"center": [0.0, 0.0], "radius": 1.0}},
        "arrangement": {"ambient_dim": 2, "subspaces": [{"base": [0.3, 0.1], "directions": []}]},
        "pseudometric": {"kind": "log-point", "q": [0.3, 0.1]},
        "alpha": 1.0,
        "D": 2.0,
        "variant": "i",
    },
}


# ==========================================
# HELPERS
# ==========================================
def load_problem(ctx: cli.RunContext, mode: str) -> Dict[str, Any]:
    problem = dict(DEFAULT_PROBLEMS[mode])
    raw = ctx.get("params")
    if raw is not None:
        if isinstance(raw, str):
            with open(raw, "r", encoding="utf-8") as f:
                raw = json.load(f)
        if not isinstance(raw, dict):
            raise UsageError("❌ --params must hold a JSON object")
        problem.update(raw)
    return problem


def pseudometric_from_dict(raw: Dict[str, Any], domain: ConvexDomain,
                           bound: Optional[LogModulus] = None) -> Tuple[PseudometricSpec, Optional[float]]:
    """Synthetic pseudometric by kind; the planted kind also returns its violating separation."""
    kind = raw.get("kind", "zero")
    if kind == "zero":
        return zero_pseudometric(domain), None
    if kind == "lipschitz":
        return lipschitz_pseudometric(float(raw.get("K", 1.0)), float(raw.get("cap", 1.0)), domain), None
    if kind == "log-point":
        return log_point_pseudometric(raw["q"], domain), None
    if kind == "discrete":
        return discrete_pseudometric(float(raw.get("scale", 1.0)), domain), None
    if kind == "planted":
        if bound is None:
            raise ParameterError("❌ A planted violator needs the bound it should break")
        sep = float(raw.get("separation", 1e-3))
        scale = planted_violation_scale(bound, sep, float(raw.get("factor", 2.0)))
        return discrete_pseudometric(scale, domain), sep
    raise ParameterError(f"❌ Unknown pseudometric kind '{kind}'")


def local_modulus(problem: Dict[str, Any], d: PseudometricSpec, domain: ConvexDomain,
                  obstacles: Optional[Arrangement], seed: int) -> LogModulus:
    """Given C0, or the exact constant for Lipschitz pseudometrics, else measured."""
    alpha = float(problem["alpha"])
    D = float(problem.get("D", 1.0))
    if "C0" in problem:
        return LogModulus(float(problem["C0"]), alpha, validity="clearance", D=D)
    raw = problem["pseudometric"]
    if raw.get("kind") == "lipschitz":
        C0 = lipschitz_log_constant(float(raw.get("K", 1.0)), float(raw.get("cap", 1.0)), alpha)
        return LogModulus(C0, alpha, validity="clearance", D=D)
    return measure_local_modulus(d, domain, alpha, D, n_pairs=int(problem.get("local_pairs", 10_000)),
                                 seed=seed, obstacles=obstacles)


def propagate(mode: str, problem: Dict[str, Any], d: PseudometricSpec, domain: ConvexDomain,
              obstacles: Optional[Arrangement], local: LogModulus) -> LogModulus:
    if mode == "convex":
        return propagate_convex(d, domain, local, float(problem.get("D", 2.0)))
    if mode == "unit":
        return propagate_convex_unit(d, domain, local)
    return propagate_ball_minus_arrangement(d, domain, obstacles, local,
                                            variant=problem.get("variant", "i"), D=float(problem.get("D", 2.0)))


def run_verification(ctx: cli.RunContext, d: PseudometricSpec, bound: LogModulus, domain: ConvexDomain,
                     obstacles: Optional[Arrangement], extra_pairs=()) -> Dict[str, Any]:
    sampler = log_uniform_pair_sampler(domain, t_min=float(ctx.get("t_min", 1e-12)),
                                       t_max=min(1.0, domain.diameter_bound()), obstacles=obstacles)
    return verify_logmod(d, bound, sampler, n_pairs=int(ctx.get("pairs", 10_000)), seed=ctx.seed,
                         extra_pairs=extra_pairs, obstacles=obstacles, workers=ctx.threads)


def _mode(ctx: cli.RunContext) -> str:
    mode = ctx.get("mode", "convex")
    if mode not in MODES:
        raise UsageError(f"❌ --mode must be one of {', '.join(MODES)}")
    return mode


def _setting(problem: Dict[str, Any]) -> Tuple[ConvexDomain, Optional[Arrangement]]:
    domain = ConvexDomain.from_dict(problem["domain"])
    obstacles = Arrangement.from_dict(problem["arrangement"]) if problem.get("arrangement") else None
    return domain, obstacles


# ==========================================
# ACTIONS
# ==========================================
def action_propagate(ctx: cli.RunContext) -> int:
    mode = _mode(ctx)
    problem = load_problem(ctx, mode)
    domain, obstacles = _setting(problem)
    d, _ = pseudometric_from_dict(problem["pseudometric"], domain)
    local = local_modulus(problem, d, domain, obstacles, ctx.seed)
    glob = propagate(mode, problem, d, domain, obstacles, local)
    log.info(f"🔎 {mode} propagation: C={glob.constant_C:.6g}, alpha={glob.exponent_alpha:g}")
    verification = run_verification(ctx, d, glob, domain, obstacles)
    ctx.write_json("logmod.json", {
        "C": glob.constant_C,
        "alpha": glob.exponent_alpha,
        "local": local.to_dict(),
        "certificate": glob.certificate,
        "verification": verification,
    })
    metrics = {"C": glob.constant_C, "alpha": glob.exponent_alpha, "C0": local.constant_C,
               "worst_ratio": verification["worst_ratio"], "violation_count": verification["violation_count"]}
    return ctx.finish(verification["passed"], metrics, glob.to_dict())


def action_verify(ctx: cli.RunContext) -> int:
    mode = _mode(ctx)
    problem = load_problem(ctx, mode)
    domain, obstacles = _setting(problem)
    raw = ctx.get("bound")
    if raw is not None:
        if isinstance(raw, str):
            with open(raw, "r", encoding="utf-8") as f:
                raw = json.load(f)
        bound = LogModulus(float(raw["C"]), float(raw["alpha"]))
    else:
        d0, _ = pseudometric_from_dict(problem["pseudometric"], domain)
        bound = propagate(mode, problem, d0, domain, obstacles, local_modulus(problem, d0, domain, obstacles, ctx.seed))
    metric = {"kind": "planted", "separation": 1e-3} if ctx.get("planted") else problem["pseudometric"]
    d, sep = pseudometric_from_dict(metric, domain, bound)
    extra = ()
    if sep is not None:
        center, r = domain.chebyshev_center()
        if sep >= r:
            raise ParameterError(f"❌ Planted separation {sep:g} does not fit in the domain")
        step = np.zeros(domain.ambient_dim)
        step[0] = sep
        extra = [(center - step / 2, center + step / 2)]
    verification = run_verification(ctx, d, bound, domain, obstacles, extra)
    return ctx.finish(verification["passed"], verification, {"C": bound.constant_C, "alpha": bound.exponent_alpha})


# ==========================================
# SELFTEST
# ==========================================
def selftest(ctx: cli.RunContext) -> int:
    ball = ConvexDomain.ball([0.0, 0.0], 0.5)
    sampler = log_uniform_pair_sampler(ball, t_min=1e-6, t_max=0.9)
    zero_check = verify_logmod(zero_pseudometric(ball), LogModulus(1.0, 1.0), sampler, 200, ctx.seed)
    try:
        unit_shrink_series_constant(1.0, 1.0, 1.0 + 1e-7)
        guard = False
    except ParameterError:
        guard = True
    checks = {
        "geometric series D=2, alpha=1 sums to 2": math.isclose(geometric_series_constant(2.0, 1.0), 2.0),
        "convex C1 = 3 for B=C0=1, M=3, D=2, alpha=1": math.isclose(convex_series_constant(1, 1, 3, 2.0, 1.0), 3.0),
        "unit-shrink C1 = 1/log 2 at alpha=2": math.isclose(unit_shrink_series_constant(1, 1, 2.0), 1.0 / math.log(2.0)),
        "dyadic sum below its integral (L=5, alpha=2)": dyadic_sum(5.0, 2.0) <= dyadic_integral_bound(5.0, 2.0),
        "zero pseudometric has worst ratio 0": zero_check["worst_ratio"] == 0.0,
        "alpha near 1 is rejected": guard,
        "point obstacle has codimension 2": coordinate_subspace(2, [0, 1]).codim == 2,
    }
    return cli.selftest_report(ctx, checks)


def build_parser() -> cli.CliParser:
    parser = cli.make_parser("lmc logmod", "Local-to-global propagation of log moduli.", ACTIONS)
    parser.add_argument("--mode", choices=MODES, help="Propagation setting (default: convex).")
    parser.add_argument("--params", help="Problem JSON: domain, arrangement, pseudometric, alpha, D, C0, variant.")
    parser.add_argument("--bound", help="LogModulus JSON {C, alpha} to verify (verify; default: propagate first).")
    parser.add_argument("--planted", action="store_true", default=None, help="Verify against a planted violator (verify).")
    parser.add_argument("--pairs", type=int, help="Sampled pairs for verification (default: 10000).")
    parser.add_argument("--t-min", type=float, help="Smallest sampled separation (default: 1e-12).")
    return parser


def main(argv: Sequence[str]) -> int:
    actions = {"propagate": action_propagate, "verify": action_verify}
    return cli.dispatch(build_parser(), argv, "logmod", actions, selftest)


if __name__ == "__main__":
    import sys

    logging.basicConfig(level="INFO", format="[%(levelname)s] %(message)s")
    raise SystemExit(main(sys.argv[1:]))
