#!/usr/bin/env python3
"""
lmc lab jensen|mass|mollify|campanato|fitmod

Grid experiments on toy potentials. Every action takes either --field (CSV
or GF01 binary) or a generated field (--kind, --lo, --hi, --nodes and the
profile parameters); --planted swaps in node-scale random jumps.
"""

import logging
import math
from typing import Any, Dict, List, Sequence

import numpy as np

from logmodcert import cli
from logmodcert.errors import UsageError
from logmodcert.gridfield import GridField, load_field, save_field
from logmodcert.lab import (
    EXPONENT_SLACK,
    FIELD_LIBRARY,
    campanato_distance_check,
    fit_log_modulus,
    jensen_exponent,
    lelong_profile,
    mean_ball,
    mollify,
    planted_jump_field,
    sup_ball,
)

log = logging.getLogger(__name__)

ACTIONS = ("jensen", "mass", "mollify", "campanato", "fitmod")
JENSEN_TARGET = 2.0 / 3.0
FIT_TOLERANCE = 0.1

DEFAULT_FIELDS: Dict[str, Dict[str, Any]] = {
    "jensen": {"kind": "clipped-log", "lo": [-3.0, -3.0], "hi": [3.0, 3.0], "nodes": 512},
    "mass": {"kind": "clipped-log", "lo": [-0.25, -0.25], "hi": [0.25, 0.25], "nodes": 1025},
    "mollify": {"kind": "clipped-log", "lo": [-0.5, -0.5], "hi": [0.5, 0.5], "nodes": 256},
    "campanato": {"kind": "radial-log-power", "lo": [-0.125, -0.125], "hi": [0.125, 0.125], "nodes": 513,
                  "c": 1e-3, "power": 4.0},
    "fitmod": {"kind": "inverse-log-power", "lo": [-1e-3, -1e-3], "hi": [1e-3, 1e-3], "nodes": 257, "power": 3.0},
}


# ==========================================
# FIELDS
# ==========================================
def build_field(ctx: cli.RunContext, action: str) -> GridField:
    """Field from --field, else generated from the action's defaults overridden by flags."""
    path = ctx.get("field")
    if path is not None:
        return load_field(path)
    profile = dict(DEFAULT_FIELDS[action])
    for key in ("kind", "nodes", "c", "power", "cutoff", "floor"):
        if ctx.get(key) is not None:
            profile[key] = ctx.get(key)
    for key in ("lo", "hi"):
        if ctx.get(key) is not None:
            profile[key] = cli.parse_floats(ctx.get(key))
    lo, hi, nodes = profile["lo"], profile["hi"], int(profile["nodes"])
    if len(lo) != len(hi):
        raise UsageError("❌ --lo and --hi need the same number of coordinates")
    if ctx.get("planted"):
        return planted_jump_field(lo, hi, nodes, ctx.seed)

    kind = profile["kind"]
    if kind not in FIELD_LIBRARY:
        raise UsageError(f"❌ Unknown field kind '{kind}' (choose from {', '.join(FIELD_LIBRARY)})")
    h = (hi[0] - lo[0]) / (nodes - 1)
    kwargs = {
        "clipped-log": {"floor": float(profile.get("floor", -1.0))},
        "log": {"cutoff": float(profile.get("cutoff", 0.5 * h))},
        "log-log": {},
        "radial-log-power": {"c": float(profile.get("c", 1e-3)), "power": float(profile.get("power", 4.0))},
        "inverse-log-power": {"power": float(profile.get("power", 3.0))},
    }[kind]
    fn = FIELD_LIBRARY[kind]
    u = GridField.from_function(lambda p: fn(p, **kwargs), lo, hi, nodes)
    log.info(f"🔎 {kind} field on {nodes}^{len(lo)} nodes, h={u.h:.3g}")
    return u


def maybe_save(ctx: cli.RunContext, u: GridField) -> None:
    name = ctx.get("save_field")
    if name is not None:
        save_field(u, ctx.path(name))
        ctx.artifacts.append(name)


def eps_ladder(top: float, bottom: float, per_decade: int) -> List[float]:
    count = int(round(math.log10(top / bottom) * per_decade))
    return [top * 10.0 ** (-k / per_decade) for k in range(count + 1)]


# ==========================================
# ACTIONS
# ==========================================
def action_jensen(ctx: cli.RunContext) -> int:
    u = build_field(ctx, "jensen")
    maybe_save(ctx, u)
    k_lo = cli.parse_floats(ctx.get("k_lo")) or [-1.0] * u.ndim
    k_hi = cli.parse_floats(ctx.get("k_hi")) or [1.0] * u.ndim
    fit = jensen_exponent(u, k_lo, k_hi, scales=cli.parse_floats(ctx.get("scales")))
    ctx.write_csv("jensen.csv", ["s", "gap"], zip(fit["scales"], fit["gaps"]),
                  plot={"x_column": 1, "y_columns": [2], "labels": ["gap"], "logscale": "xy"})
    target = JENSEN_TARGET - EXPONENT_SLACK
    log.info(f"🔎 Jensen exponent {fit['exponent']:.3f} (target >= {target:.3f})")
    return ctx.finish(fit["exponent"] >= target, {**fit, "target": target})


def action_mass(ctx: cli.RunContext) -> int:
    u = build_field(ctx, "mass")
    maybe_save(ctx, u)
    x = cli.parse_floats(ctx.get("x")) or [0.0] * u.ndim
    eps = cli.parse_floats(ctx.get("eps")) or eps_ladder(0.1, 1e-3, 4)
    profile = lelong_profile(u, x, eps, omega_weight=float(ctx.get("omega_weight", 1.0)))
    ctx.write_csv("mass.csv", ["eps", "lambda", "lambda_log"],
                  zip(profile["eps"], profile["lambda"], profile["lambda_log"]),
                  plot={"x_column": 1, "y_columns": [3], "labels": ["lambda |log eps|"], "logscale": "x"})
    expect = ctx.get("expect", "bounded")
    if expect == "positive":
        passed = profile["positive_mass"]
    else:
        passed = profile["bounded"] and not profile["positive_mass"]
    if profile["positive_mass"]:
        log.warning("⚠️ Positive Lelong-type mass detected at x")
    return ctx.finish(passed, {**profile, "expect": expect})


def action_mollify(ctx: cli.RunContext) -> int:
    u = build_field(ctx, "mollify")
    maybe_save(ctx, u)
    eps_list = cli.parse_floats(ctx.get("eps"))
    if eps_list is None:
        eps_list = [e for e in (0.1 * 2.0 ** -k for k in range(8)) if e >= 2.0 * u.h]
    theta = float(ctx.get("theta", 0.0))
    rows = []
    for eps in sorted(eps_list, reverse=True):
        _, rep = mollify(u, eps, theta)
        rows.append(rep)
    ctx.write_csv("mollify.csv", ["eps", "sup_diff", "modulus", "curvature_defect", "defect_log"],
                  [[r["eps"], r["sup_diff"], r["modulus"], r["curvature_defect"], r["defect_log"]] for r in rows],
                  plot={"x_column": 1, "y_columns": [2, 3, 5], "labels": ["sup diff", "modulus", "defect |log eps|"],
                        "logscale": "x"})
    within = all(r["sup_diff"] <= r["modulus"] + 1e-12 for r in rows)
    monotone = all(b["sup_diff"] <= a["sup_diff"] + 1e-12 for a, b in zip(rows, rows[1:]))
    defect_max = max(r["defect_log"] for r in rows)
    bound = float(ctx.get("defect_bound", 1.0))
    metrics = {"rows": rows, "sup_diff_within_modulus": within, "monotone": monotone,
               "max_defect_log": defect_max, "defect_bound": bound}
    return ctx.finish(within and defect_max <= bound, metrics)


def action_campanato(ctx: cli.RunContext) -> int:
    u = build_field(ctx, "campanato")
    maybe_save(ctx, u)
    M = float(ctx.get("M", 2.0))
    C0 = ctx.get("C0")
    if C0 is None:
        C0 = float(ctx.get("c", DEFAULT_FIELDS["campanato"]["c"]))
    t_range = cli.parse_floats(ctx.get("t_range")) or [2.0 ** -8, 2.0 ** -4]
    rep = campanato_distance_check(
        u,
        theta_const=float(ctx.get("theta", 0.0)),
        delta=float(ctx.get("delta", 1.0)),
        M=M,
        C0=float(C0),
        base=cli.parse_floats(ctx.get("base")),
        t_range=(t_range[0], t_range[1]),
    )
    ctx.write_csv("campanato.csv", ["t", "sup_distance", "ball_average"],
                  zip(rep["scales"], rep["sup_distance"], rep["ball_averages"]),
                  plot={"x_column": 1, "y_columns": [2, 3], "labels": ["sup d", "d_r"], "logscale": "xy"})
    certificate = {"C_final": rep["C_final"], "C5": rep["C5"], "dyadic_ok": rep["dyadic_ok"], "exponent": rep["exponent"], "M": M}
    return ctx.finish(rep["passed"], rep, certificate)


def action_fitmod(ctx: cli.RunContext) -> int:
    u = build_field(ctx, "fitmod")
    maybe_save(ctx, u)
    fit = fit_log_modulus(u, scales=cli.parse_floats(ctx.get("scales")))
    ctx.write_csv("fitmod.csv", ["t", "omega"], zip(fit["scales"], fit["omegas"]),
                  plot={"x_column": 1, "y_columns": [2], "labels": ["omega"], "logscale": "xy"})
    log.info(f"🔎 fitted C={fit['C']:.4g}, M {fit['M_report']}")
    expect = ctx.get("expect_M")
    passed = expect is None or abs(fit["M"] - float(expect)) <= FIT_TOLERANCE
    return ctx.finish(passed, fit, {"C": fit["C"], "M": fit["M_report"]})


# ==========================================
# SELFTEST
# ==========================================
def selftest(ctx: cli.RunContext) -> int:
    const = GridField(np.zeros(2), np.ones(2), np.full((129, 129), 2.5))
    quad = GridField.from_function(lambda p: np.sum(p ** 2, axis=-1), [-1.0, -1.0], [1.0, 1.0], 201)
    r = 0.5
    mean_quad = mean_ball(quad, [0.0, 0.0], r)
    checks = {
        "constant field: sup = mean = constant": sup_ball(const, [0.5, 0.5], 0.2) == 2.5
        and math.isclose(mean_ball(const, [0.5, 0.5], 0.2), 2.5),
        "mean of |x|^2 over B(0, r) is r^2 d/(d+2)": abs(mean_quad - r ** 2 * 2 / 4) < 5e-3,
        "sup >= mean": sup_ball(quad, [0.1, 0.0], r) >= mean_ball(quad, [0.1, 0.0], r),
        "constant field has M = inf": fit_log_modulus(const)["M"] == math.inf,
    }
    return cli.selftest_report(ctx, checks)


def build_parser() -> cli.CliParser:
    parser = cli.make_parser("lmc lab", "Grid experiments: Jensen gap, Lelong mass, mollification, distances.", ACTIONS)
    parser.add_argument("--field", help="Input field (CSV or GF01 binary); default: a generated field.")
    parser.add_argument("--kind", help=f"Generated field kind ({', '.join(FIELD_LIBRARY)}).")
    parser.add_argument("--lo", help="Lower box corner, comma-separated.")
    parser.add_argument("--hi", help="Upper box corner, comma-separated.")
    parser.add_argument("--nodes", type=int, help="Nodes per axis of the generated field.")
    parser.add_argument("--c", type=float, help="Amplitude of radial-log-power fields.")
    parser.add_argument("--power", type=float, help="Exponent of radial-log-power / inverse-log-power fields.")
    parser.add_argument("--cutoff", type=float, help="Radius cutoff of log fields (default: h/2).")
    parser.add_argument("--floor", type=float, help="Floor of clipped-log fields (default: -1).")
    parser.add_argument("--planted", action="store_true", default=None, help="Use node-scale random jumps instead.")
    parser.add_argument("--save-field", help="Also store the field under --out (.csv, else GF01 binary).")
    parser.add_argument("--k-lo", help="Inner box K lower corner (jensen; default: -1,...).")
    parser.add_argument("--k-hi", help="Inner box K upper corner (jensen; default: 1,...).")
    parser.add_argument("--scales", help="Explicit scales, comma-separated (jensen, fitmod).")
    parser.add_argument("--x", help="Center of the mass balls (mass; default: origin).")
    parser.add_argument("--eps", help="Radii, comma-separated (mass, mollify).")
    parser.add_argument("--omega-weight", type=float, help="Weight of the volume term (mass; default: 1).")
    parser.add_argument("--expect", choices=("bounded", "positive"), help="Expected mass profile (mass).")
    parser.add_argument("--theta", type=float, help="Constant curvature term theta (mollify, campanato).")
    parser.add_argument("--defect-bound", type=float, help="Bound on defect |log eps| (mollify; default: 1).")
    parser.add_argument("--delta", type=float, help="Positivity shift of the conformal factor (campanato; default: 1).")
    parser.add_argument("--M", type=float, help="Log exponent M of the hypothesis (campanato; default: 2).")
    parser.add_argument("--C0", type=float, help="Hypothesis constant (campanato; default: --c).")
    parser.add_argument("--t-range", help="Distance fit range t_min,t_max (campanato; default: 2^-8,2^-4).")
    parser.add_argument("--base", help="Base point of the distance (campanato; default: origin).")
    parser.add_argument("--expect-M", type=float, help="Expected fitted exponent, +/- 0.1 (fitmod).")
    return parser


def main(argv: Sequence[str]) -> int:
    actions = {
        "jensen": action_jensen,
        "mass": action_mass,
        "mollify": action_mollify,
        "campanato": action_campanato,
        "fitmod": action_fitmod,
    }
    return cli.dispatch(build_parser(), argv, "lab", actions, selftest)


if __name__ == "__main__":
    import sys

    logging.basicConfig(level="INFO", format="[%(levelname)s] %(message)s")
    raise SystemExit(main(sys.argv[1:]))
