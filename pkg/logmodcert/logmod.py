"""
Local-to-global propagation of log^alpha moduli for B-pseudometrics.

A local bound d(x, y) <= C0 / |log|x - y||^alpha, valid on pairs that are
close relative to their clearance from the boundary (and obstacles), is
turned into a bound valid for every pair with |x - y| < 1 on:

- a bounded convex domain, same exponent (``propagate_convex``, D > 1);
- a bounded convex domain, exponent lowered by one (``propagate_convex_unit``, D = 1);
- a ball minus an arrangement of flats of codimension >= 2, chamber by
  chamber (``propagate_ball_minus_arrangement``).

Every derived constant is recorded in the returned certificate.
``verify_logmod`` checks a bound against a concrete pseudometric.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from logmodcert import config
from logmodcert.chains import build_safe_chain
from logmodcert.errors import CodimensionError, ObstacleContactError, ParameterError
from logmodcert.geometry import Arrangement, ConvexDomain, as_point, chambers, hyperplane_containing, segment_closest_point
from logmodcert.parallel import chunk_ranges, execute_items

log = logging.getLogger(__name__)

UNIT_ALPHA_GUARD = 1e-6       # propagate_convex_unit needs alpha >= 1 + guard
VERIFY_RATIO_SLACK = 1e-6
LOG2 = math.log(2.0)

Evaluator = Callable[[np.ndarray, np.ndarray], float]
BatchEvaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]
PairSampler = Callable[[np.random.Generator, int], Tuple[np.ndarray, np.ndarray]]


# ==========================================
# DATA TYPES
# ==========================================
@dataclass
class PseudometricSpec:
    evaluator: Evaluator
    quasi_triangle_B: float = 1.0
    domain: Union[ConvexDomain, Tuple[ConvexDomain, Arrangement], None] = None
    batch_evaluator: Optional[BatchEvaluator] = None
    name: str = "custom"

    def __post_init__(self):
        if not self.quasi_triangle_B >= 1.0:
            raise ParameterError(f"❌ Quasi-triangle constant B must be >= 1, got {self.quasi_triangle_B}")

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))

    def distances(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        if self.batch_evaluator is not None:
            return np.asarray(self.batch_evaluator(X, Y), dtype=float)
        return np.array([self.evaluator(x, y) for x, y in zip(X, Y)], dtype=float)


@dataclass
class LogModulus:
    """d(x, y) <= C / |log|x - y||^alpha on the pairs named by ``validity``."""

    constant_C: float
    exponent_alpha: float
    validity: str = "all"
    D: float = 1.0
    certificate: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.constant_C > 0:
            raise ParameterError(f"❌ Modulus constant must be positive, got {self.constant_C}")
        if not self.exponent_alpha > 0:
            raise ParameterError(f"❌ Modulus exponent must be positive, got {self.exponent_alpha}")
        if self.validity not in ("all", "clearance"):
            raise ParameterError(f"❌ Unknown validity '{self.validity}'")

    def bound(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """C / |log t|^alpha; 0 at t = 0 and +inf for t >= 1."""
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(arr.shape, np.inf)
        inside = (arr > 0) & (arr < 1)
        out[inside] = self.constant_C / np.abs(np.log(arr[inside])) ** self.exponent_alpha
        out[arr <= 0] = 0.0
        return float(out[0]) if np.ndim(t) == 0 else out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "C": self.constant_C,
            "alpha": self.exponent_alpha,
            "validity": self.validity,
            "D": self.D,
            "certificate": self.certificate,
        }


# ==========================================
# SERIES ORACLES
# ==========================================
def geometric_series_constant(D: float, alpha: float) -> float:
    """Closed form of sum_{j>=1} D^{-(j-1) alpha}."""
    if D <= 1:
        raise ParameterError(f"❌ Geometric series needs D > 1, got {D}")
    return 1.0 / (1.0 - D ** (-alpha))


def _geometric_terms(q: float, start: int) -> float:
    # terms until q^j drops below 1e-18 of the leading term
    n = 1 if q == 0 else int(min(5_000_000, math.ceil(math.log(1e-18) / math.log(q)) + 1))
    j = np.arange(start, start + n, dtype=float)
    return math.fsum((q ** j).tolist())


def geometric_series_sum(D: float, alpha: float) -> float:
    """Numeric summation of sum_{j>=1} D^{-(j-1) alpha}."""
    if D <= 1:
        raise ParameterError(f"❌ Geometric series needs D > 1, got {D}")
    return _geometric_terms(D ** (-alpha), 0)


def convex_series_constant(B: float, C0: float, M: int, D: float, alpha: float) -> float:
    """C1 = B^2 C0 M / (D^alpha - 1)."""
    if D <= 1:
        raise ParameterError(f"❌ Convex propagation needs D > 1, got {D}")
    return B * B * C0 * M / (D ** alpha - 1.0)


def convex_series_sum(B: float, C0: float, M: int, D: float, alpha: float) -> float:
    """Numeric summation of B^2 C0 M sum_{j>=1} D^{-j alpha} (the telescoped chain series)."""
    if D <= 1:
        raise ParameterError(f"❌ Convex propagation needs D > 1, got {D}")
    return B * B * C0 * M * _geometric_terms(D ** (-alpha), 1)


def unit_shrink_series_constant(B: float, C0: float, alpha: float) -> float:
    """C1 = B C0 / ((alpha - 1) log 2)."""
    _check_unit_alpha(alpha)
    return B * C0 / ((alpha - 1.0) * LOG2)


def unit_shrink_series_sum(B: float, C0: float, alpha: float) -> float:
    """
    (B C0 / log 2) int_1^inf t^{-alpha} dt by quadrature, i.e. the integral
    comparison with |log delta| scaled to 1 (substituting t = e^s).
    """
    _check_unit_alpha(alpha)
    value, _ = quad(lambda s: math.exp((1.0 - alpha) * s), 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return B * C0 * value / LOG2


def dyadic_sum(L: float, alpha: float, n_terms: int = 200_000) -> float:
    """sum_{j>=1} (L + j log 2)^{-alpha}; the tail past n_terms is bounded by its integral."""
    if L <= 0:
        raise ParameterError(f"❌ Dyadic sum needs L > 0, got {L}")
    _check_unit_alpha(alpha)
    j = np.arange(1, n_terms + 1, dtype=float)
    head = math.fsum(((L + j * LOG2) ** (-alpha)).tolist())
    return head + dyadic_integral_bound(L + n_terms * LOG2, alpha)


def dyadic_integral_bound(L: float, alpha: float) -> float:
    """(1/log 2) int_L^inf t^{-alpha} dt."""
    _check_unit_alpha(alpha)
    return L ** (1.0 - alpha) / ((alpha - 1.0) * LOG2)


def _check_unit_alpha(alpha: float) -> None:
    if alpha <= 1:
        raise ParameterError(f"❌ Unit-shrink propagation needs alpha > 1, got {alpha}")
    if alpha < 1.0 + UNIT_ALPHA_GUARD:
        raise ParameterError(f"❌ alpha={alpha} is within {UNIT_ALPHA_GUARD} of the pole at 1")


# ==========================================
# PROPAGATION
# ==========================================
def _domain_scale(U: ConvexDomain) -> Tuple[np.ndarray, float, float, float]:
    a, r = U.chebyshev_center()
    Delta = max(1.0, U.diameter_bound())
    return a, r, Delta, r / Delta


def _log_abs(t: float) -> float:
    return abs(math.log(t))


def propagate_convex(d: PseudometricSpec, U: ConvexDomain, local: LogModulus, D: float) -> LogModulus:
    """
    Global modulus on a convex domain from a local one valid on pairs with
    |x - y|^D <= min(dist(x, dU), dist(y, dU)), D > 1.

    The center a is the Chebyshev center (largest clearance r). Domains of
    diameter Delta > 1 are handled through r_eff = r / Delta, which enters
    the chunk counts M (x side) and M_y (y side, taken at doubled scale).
    Pairs at separations beyond the near regime are covered by chaining
    pieces of length (r_eff/2)^{1/D}; the returned C is the largest of the
    near constant B (C1 + C2), the local C0 and the far constant.
    """
    if D <= 1:
        raise ParameterError(f"❌ Convex propagation needs D > 1, got {D}")
    B, C0, alpha = d.quasi_triangle_B, local.constant_C, local.exponent_alpha
    a, r, Delta, r_eff = _domain_scale(U)

    M = math.floor(1.0 / r_eff) + 1
    C1 = convex_series_constant(B, C0, M, D, alpha)
    M_y = math.floor(2.0 / r_eff) + 1
    C2 = 2.0 ** alpha * convex_series_constant(B, C0, M_y, D, alpha)
    near = B * (C1 + C2)

    piece_log = _log_abs(r_eff / 2.0)
    n1 = math.ceil(0.5 ** (1.0 - 1.0 / D) * r_eff ** (-1.0 / D))
    n2 = math.ceil((Delta - 0.5) / (r_eff / 2.0) ** (1.0 / D)) if Delta > 1 else 0
    n_max = max(n1, n2)
    S = B * (C1 / LOG2 ** alpha + B * n_max * C0 * D ** alpha / piece_log ** alpha)
    far = 2.0 * B * S * piece_log ** alpha

    C = max(near, C0, far)
    cert = {
        "mode": "convex",
        "center": a.tolist(),
        "r": r,
        "r_eff": r_eff,
        "diameter_scale": Delta,
        "M": M,
        "M_y": M_y,
        "C1": C1,
        "C2": C2,
        "C_near": near,
        "C_far": far,
        "n_max": n_max,
        "B": B,
        "C0": C0,
        "alpha": alpha,
        "D": D,
    }
    log.debug(f"convex propagation: r={r:.4g}, M={M}, C1={C1:.4g}, C2={C2:.4g}, C={C:.4g}")
    return LogModulus(C, alpha, validity="all", D=D, certificate=cert)


def propagate_convex_unit(d: PseudometricSpec, U: ConvexDomain, local: LogModulus) -> LogModulus:
    """
    D = 1 version: local bound with exponent alpha > 1 on pairs with
    |x - y| <= min clearance gives a global bound with exponent alpha - 1.
    The dyadic chain toward the center is summed against the integral
    (B C0 / log 2) int t^{-alpha} dt, giving C1 = B C0 / ((alpha - 1) log 2)
    per chunk.
    """
    B, C0, alpha = d.quasi_triangle_B, local.constant_C, local.exponent_alpha
    _check_unit_alpha(alpha)
    a, r, Delta, r_eff = _domain_scale(U)
    closed = unit_shrink_series_constant(B, C0, alpha)

    M = math.ceil(1.0 / r_eff)
    C1 = (B * M if M > 1 else 1.0) * closed
    M_y = math.ceil(2.0 / r_eff)
    C2 = 2.0 ** (alpha - 1.0) * (B * M_y if M_y > 1 else 1.0) * closed
    near = B * (C1 + C2)

    beta = alpha - 1.0
    piece_log = _log_abs(r_eff / 2.0)
    n1 = math.ceil(1.0 / r_eff)
    n2 = math.ceil((Delta - 0.5) / (r_eff / 2.0)) if Delta > 1 else 0
    n_max = max(n1, n2)
    S = B * (C1 / LOG2 ** beta + B * n_max * C0 / piece_log ** alpha)
    far = 2.0 * B * S * piece_log ** beta

    C = max(near, C0, far)
    cert = {
        "mode": "unit",
        "center": a.tolist(),
        "r": r,
        "r_eff": r_eff,
        "diameter_scale": Delta,
        "M": M,
        "M_y": M_y,
        "C1_closed_form": closed,
        "C1": C1,
        "C2": C2,
        "C_near": near,
        "C_far": far,
        "n_max": n_max,
        "B": B,
        "C0": C0,
        "alpha_local": alpha,
        "alpha": beta,
        "D": 1.0,
    }
    log.debug(f"unit propagation: r={r:.4g}, M={M}, C1={C1:.4g}, C={C:.4g}")
    return LogModulus(C, beta, validity="all", D=1.0, certificate=cert)


def propagate_ball_minus_arrangement(
    d: PseudometricSpec,
    ball: ConvexDomain,
    arrangement: Optional[Arrangement],
    local: LogModulus,
    variant: str = "i",
    D: float = 2.0,
) -> LogModulus:
    """
    Global modulus on ball minus N. Each flat is enclosed in a hyperplane,
    the ball is cut into convex chambers, and each chamber is handled by
    the convex propagation (variant "i", D > 1, same exponent) or the
    unit-shrink propagation (variant "ii", D = 1, local exponent alpha + 1).
    A segment crosses at most p hyperplanes, so C = B^2 C_ch (p + 1)^2.
    """
    if variant not in ("i", "ii"):
        raise ParameterError(f"❌ Unknown arrangement variant '{variant}' (expected 'i' or 'ii')")
    if arrangement is None or len(arrangement) == 0:
        log.info("⚠️ Empty arrangement, falling back to the convex case on the ball")
        if variant == "i":
            return propagate_convex(d, ball, local, D)
        return propagate_convex_unit(d, ball, local)
    for idx, N in enumerate(arrangement):
        if N.codim < 2:
            raise CodimensionError(f"❌ Obstacle #{idx} has codimension {N.codim} < 2")

    hyperplanes = [hyperplane_containing(N) for N in arrangement]
    cells = chambers(ball, hyperplanes)
    per_chamber: List[Dict[str, Any]] = []
    for cell in cells:
        if variant == "i":
            mod = propagate_convex(d, cell, local, D)
        else:
            mod = propagate_convex_unit(d, cell, local)
        per_chamber.append({"signs": list(cell.signs), "r": mod.certificate["r"], "C": mod.constant_C})
    C_ch = max(entry["C"] for entry in per_chamber)
    p = len(arrangement)
    B = d.quasi_triangle_B
    C = B * B * C_ch * (p + 1) ** 2
    alpha = local.exponent_alpha if variant == "i" else local.exponent_alpha - 1.0
    cert = {
        "mode": "arrangement",
        "variant": variant,
        "p": p,
        "chambers": per_chamber,
        "C_chambers": C_ch,
        "hyperplanes": [{"normal": n.tolist(), "offset": b} for n, b in hyperplanes],
        "B": B,
        "C0": local.constant_C,
        "alpha_local": local.exponent_alpha,
        "alpha": alpha,
        "D": D if variant == "i" else 1.0,
    }
    log.info(f"🔎 {len(cells)} chambers, C_chambers={C_ch:.4g}, C={C:.4g}")
    return LogModulus(C, alpha, validity="all", D=cert["D"], certificate=cert)


def segment_chamber_crossings(x: Sequence[float], y: Sequence[float],
                              hyperplanes: Sequence[Tuple[np.ndarray, float]]) -> int:
    """Number of hyperplanes the open segment (x, y) crosses."""
    x, y = as_point(x), as_point(y)
    crossings = 0
    for normal, offset in hyperplanes:
        sx = float(np.dot(normal, x) - offset)
        sy = float(np.dot(normal, y) - offset)
        if sx * sy < 0:
            crossings += 1
    return crossings


def case3_detour_lengths(
    x: Sequence[float],
    y: Sequence[float],
    arrangement: Arrangement,
    eps_list: Sequence[float],
) -> List[Dict[str, float]]:
    """
    For a segment through an obstacle point f(t_j), chain around it from
    f(t_j - eps) to f(t_j + eps) and report the chain length, which stays
    below C |f(t_j + eps) - f(t_j - eps)| and so shrinks linearly in eps.
    """
    x, y = as_point(x), as_point(y)
    hit = None
    for N in arrangement:
        t, dist = segment_closest_point(x, y, N)
        if dist <= config.EPS_GEO and 0.0 < t < 1.0:
            hit = t if hit is None else min(hit, t)
    if hit is None:
        raise ParameterError("❌ Segment does not pass through the arrangement")
    direction = y - x
    rows = []
    for eps in eps_list:
        a = x + (hit - eps) * direction
        b = x + (hit + eps) * direction
        chain, cert = build_safe_chain(a, b, arrangement, samples_per_segment=0)
        rows.append({
            "eps": float(eps),
            "separation": float(np.linalg.norm(b - a)),
            "length": chain.length(),
            "length_bound": cert.length_bound,
            "passed": cert.passed,
        })
    return rows


# ==========================================
# SAMPLING AND VERIFICATION
# ==========================================
def _random_directions(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1)[:, None]


def log_uniform_pair_sampler(
    domain: ConvexDomain,
    t_min: float = 1e-12,
    t_max: Optional[float] = None,
    obstacles: Optional[Arrangement] = None,
    min_obstacle_clearance: float = 1e-9,
) -> PairSampler:
    """Pairs with x uniform in the domain and |x - y| log-uniform in [t_min, t_max]."""
    t_max = domain.diameter_bound() if t_max is None else t_max

    def sample(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        xs: List[np.ndarray] = []
        ys: List[np.ndarray] = []
        count = 0
        while count < n:
            batch = max(2 * (n - count), 64)
            X = domain.sample_interior(rng, batch)
            t = np.exp(rng.uniform(math.log(t_min), math.log(t_max), size=batch))
            Y = X + t[:, None] * _random_directions(rng, batch, domain.ambient_dim)
            keep = domain.contains_many(Y, strict=True)
            if obstacles is not None:
                keep &= obstacles.dists(X) > min_obstacle_clearance
                keep &= obstacles.dists(Y) > min_obstacle_clearance
            xs.append(X[keep])
            ys.append(Y[keep])
            count += int(np.sum(keep))
        return np.vstack(xs)[:n], np.vstack(ys)[:n]

    return sample


def _pair_clearance(domain: ConvexDomain, obstacles: Optional[Arrangement], P: np.ndarray) -> np.ndarray:
    clearance = domain.slacks(P)
    if obstacles is not None:
        clearance = np.minimum(clearance, obstacles.dists(P))
    return clearance


def measure_local_modulus(
    d: PseudometricSpec,
    domain: ConvexDomain,
    alpha: float,
    D: float,
    n_pairs: int = 10_000,
    seed: int = 0,
    obstacles: Optional[Arrangement] = None,
    t_min: float = 1e-12,
) -> LogModulus:
    """
    Empirical C0: max of d(x, y) |log|x - y||^alpha over sampled pairs
    with |x - y|^D <= min clearance (boundary and obstacles).
    """
    rng = np.random.default_rng(seed)
    sampler = log_uniform_pair_sampler(domain, t_min=t_min, t_max=min(1.0, domain.diameter_bound()), obstacles=obstacles)
    X, Y = sampler(rng, n_pairs)
    t = np.linalg.norm(X - Y, axis=1)
    clearance = np.minimum(_pair_clearance(domain, obstacles, X), _pair_clearance(domain, obstacles, Y))
    ok = (t > 0) & (t < 1) & (t ** D <= clearance)
    if not np.any(ok):
        raise ParameterError("❌ No sampled pair satisfies the local clearance condition")
    vals = d.distances(X[ok], Y[ok]) * np.abs(np.log(t[ok])) ** alpha
    C0 = float(np.max(vals))
    log.debug(f"local modulus over {int(np.sum(ok))} pairs: C0={C0:.4g}")
    return LogModulus(max(C0, np.finfo(float).tiny), alpha, validity="clearance", D=D,
                      certificate={"pairs": int(np.sum(ok)), "measured": True})


def verify_logmod(
    d: PseudometricSpec,
    bound: LogModulus,
    sampler: PairSampler,
    n_pairs: int,
    seed: int,
    extra_pairs: Sequence[Tuple[Sequence[float], Sequence[float]]] = (),
    obstacles: Optional[Arrangement] = None,
    workers: int = 1,
) -> Dict[str, Any]:
    """
    Worst ratio d(x, y) |log|x - y||^alpha / C over sampled pairs (plus
    ``extra_pairs``). Pairs at separation 0 or >= 1 are outside every log
    bound and are skipped. Passes iff the worst ratio is <= 1 + 1e-6.
    """
    if n_pairs < 1:
        raise ParameterError(f"❌ n_pairs must be >= 1, got {n_pairs}")
    rng = np.random.default_rng(seed)
    X, Y = sampler(rng, n_pairs)
    if len(extra_pairs):
        X = np.vstack([X, np.array([p[0] for p in extra_pairs], dtype=float)])
        Y = np.vstack([Y, np.array([p[1] for p in extra_pairs], dtype=float)])
    if obstacles is not None:
        touching = (obstacles.dists(X) <= config.EPS_GEO) | (obstacles.dists(Y) <= config.EPS_GEO)
        if np.any(touching):
            raise ObstacleContactError(f"❌ {int(np.sum(touching))} sampled points lie on the obstacles")

    t = np.linalg.norm(X - Y, axis=1)
    valid = np.flatnonzero((t > 0) & (t < 1))
    chunks = chunk_ranges(len(valid), workers * 4)

    def evaluate(rng_chunk: range) -> np.ndarray:
        idx = valid[rng_chunk.start:rng_chunk.stop]
        return d.distances(X[idx], Y[idx])

    values = np.concatenate(execute_items(chunks, evaluate, workers=workers)) if len(valid) else np.zeros(0)
    ratios = values * np.abs(np.log(t[valid])) ** bound.exponent_alpha / bound.constant_C
    violations = int(np.sum(ratios > 1.0 + VERIFY_RATIO_SLACK))
    if len(ratios):
        worst = int(np.argmax(ratios))
        worst_ratio = float(ratios[worst])
        worst_pair = [X[valid[worst]].tolist(), Y[valid[worst]].tolist()]
    else:
        worst_ratio, worst_pair = 0.0, None
    passed = worst_ratio <= 1.0 + VERIFY_RATIO_SLACK
    if passed:
        log.info(f"✅ log-modulus verified on {len(valid)} pairs, worst ratio {worst_ratio:.4g}")
    else:
        log.info(f"❌ {violations} violations on {len(valid)} pairs, worst ratio {worst_ratio:.4g}")
    return {
        "pairs": int(len(valid)),
        "skipped": int(len(t) - len(valid)),
        "violation_count": violations,
        "worst_ratio": worst_ratio,
        "worst_pair": worst_pair,
        "passed": bool(passed),
    }


def validate_pseudometric(
    d: PseudometricSpec,
    domain: ConvexDomain,
    n_samples: int = 1000,
    seed: int = 0,
    chain_length: int = 4,
    rtol: float = 1e-9,
) -> Dict[str, Any]:
    """Check zero diagonal, symmetry and the B-chain inequality on sampled points."""
    rng = np.random.default_rng(seed)
    P = domain.sample_interior(rng, n_samples * chain_length)
    X = P[:n_samples]
    Y = P[n_samples:2 * n_samples]
    diag = d.distances(X, X)
    dxy = d.distances(X, Y)
    dyx = d.distances(Y, X)
    tuples = P.reshape(n_samples, chain_length, domain.ambient_dim)
    lhs = d.distances(tuples[:, 0], tuples[:, -1])
    rhs = sum(d.distances(tuples[:, j], tuples[:, j + 1]) for j in range(chain_length - 1))
    scale = np.maximum(1.0, np.abs(rhs))
    report = {
        "nonzero_diagonal": int(np.sum(np.abs(diag) > rtol)),
        "asymmetric": int(np.sum(np.abs(dxy - dyx) > rtol * np.maximum(1.0, np.abs(dxy)))),
        "negative": int(np.sum(dxy < 0)),
        "chain_violations": int(np.sum(lhs > d.quasi_triangle_B * rhs + rtol * scale)),
    }
    report["passed"] = not any(report.values())
    return report


# ==========================================
# SYNTHETIC PSEUDOMETRICS
# ==========================================
def zero_pseudometric(domain: Optional[ConvexDomain] = None) -> PseudometricSpec:
    return PseudometricSpec(
        evaluator=lambda x, y: 0.0,
        batch_evaluator=lambda X, Y: np.zeros(len(X)),
        domain=domain,
        name="zero",
    )


def lipschitz_pseudometric(K: float, cap: float, domain: Optional[ConvexDomain] = None) -> PseudometricSpec:
    """d(x, y) = min(cap, K |x - y|), a metric."""

    def batch(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.minimum(cap, K * np.linalg.norm(np.atleast_2d(X) - np.atleast_2d(Y), axis=1))

    return PseudometricSpec(
        evaluator=lambda x, y: float(batch(x, y)[0]),
        batch_evaluator=batch,
        domain=domain,
        name="lipschitz",
    )


def lipschitz_log_constant(K: float, cap: float, alpha: float) -> float:
    """sup over 0 < t < 1 of min(cap, K t) |log t|^alpha."""

    def neg(logt: float) -> float:
        t = math.exp(logt)
        return -min(cap, K * t) * abs(logt) ** alpha

    grid = np.linspace(-700.0, -1e-9, 20001)
    values = np.minimum(cap, K * np.exp(grid)) * np.abs(grid) ** alpha
    best = int(np.argmax(values))
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(float(values[best]), float(-res.fun)) * (1.0 + 1e-9)


def log_point_profile(x: np.ndarray, q: np.ndarray) -> np.ndarray:
    """u = min(1, 1/|log|x - q||), 0 at q."""
    r = np.linalg.norm(np.atleast_2d(x) - q, axis=1)
    with np.errstate(divide="ignore"):
        inv = np.where(r > 0, 1.0 / np.abs(np.log(np.where(r > 0, r, 0.5))), 0.0)
    return np.minimum(1.0, inv)


def log_point_pseudometric(q: Sequence[float], domain: Optional[ConvexDomain] = None) -> PseudometricSpec:
    q = as_point(q)

    def batch(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.abs(log_point_profile(X, q) - log_point_profile(Y, q))

    return PseudometricSpec(
        evaluator=lambda x, y: float(batch(x, y)[0]),
        batch_evaluator=batch,
        domain=domain,
        name="log-point",
    )


def discrete_pseudometric(scale: float, domain: Optional[ConvexDomain] = None) -> PseudometricSpec:
    """d(x, y) = scale for x != y."""

    def batch(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.where(np.any(np.atleast_2d(X) != np.atleast_2d(Y), axis=1), scale, 0.0)

    return PseudometricSpec(
        evaluator=lambda x, y: float(batch(x, y)[0]),
        batch_evaluator=batch,
        domain=domain,
        name="discrete",
    )


def planted_violation_scale(bound: LogModulus, separation: float, factor: float = 2.0) -> float:
    """Scale of a discrete metric that breaks ``bound`` by ``factor`` at the given separation."""
    return factor * bound.constant_C / abs(math.log(separation)) ** bound.exponent_alpha
