"""
Blowups of C^n along coordinate centers V = {x_1 = ... = x_q = 0}.

Chart maps are exact rational formulas on complex vectors. The fiber
distance oracle is a graph-geodesic on a chart grid of the real slice for
n = q = 2 (a Möbius band with coordinates (s, theta), image
s (cos theta, sin theta), metric ds^2 + (1 + s^2) dtheta^2).
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from logmodcert import config
from logmodcert.errors import DimensionMismatchError, DomainError, ObstacleContactError, ParameterError
from logmodcert.gridfield import GridField
from logmodcert.lab import GEODESIC_STENCIL
from logmodcert.parallel import chunk_ranges, execute_items

log = logging.getLogger(__name__)

DEFAULT_ROUTE_CONSTANTS = (3.0, 12.0, 4.0)
CALIBRATION_MARGIN = 1.05
ORACLE_RTOL = 0.03
PASS_FRACTION = 0.999


# ==========================================
# CHART MAPS
# ==========================================
@dataclass(frozen=True)
class BlowupChart:
    n: int
    q: int
    j: int  # 1-based chart index, v_j = 1 on the chart

    def __post_init__(self):
        if not 2 <= self.q <= self.n:
            raise ParameterError(f"❌ Center codimension must satisfy 2 <= q <= n, got q={self.q}, n={self.n}")
        if not 1 <= self.j <= self.q:
            raise ParameterError(f"❌ Chart index must lie in 1..{self.q}, got {self.j}")


def blowup_forward(chart: BlowupChart, x_j: complex, v: Sequence[complex], tail: Sequence[complex] = ()) -> np.ndarray:
    """(v_1 x_j / v_j, ..., v_q x_j / v_j, tail)."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    tail = np.asarray(tail, dtype=complex).reshape(-1)
    if v.shape[0] != chart.q or tail.shape[0] != chart.n - chart.q:
        raise DimensionMismatchError(f"❌ Chart point does not match n={chart.n}, q={chart.q}")
    vj = v[chart.j - 1]
    if vj == 0:
        raise ParameterError(f"❌ v_{chart.j} = 0 lies outside chart {chart.j}")
    return np.concatenate([v * (x_j / vj), tail])


def blowup_lift(a: Sequence[complex], q: int) -> Tuple[BlowupChart, complex, np.ndarray, np.ndarray]:
    """Unique preimage of a point off V, in the chart of its largest leading coordinate."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    lead = a[:q]
    if np.linalg.norm(lead) <= config.EPS_GEO:
        raise ObstacleContactError("❌ Point lies on the blowup center")
    j = int(np.argmax(np.abs(lead))) + 1
    x_j = complex(lead[j - 1])
    return BlowupChart(a.shape[0], q, j), x_j, lead / x_j, a[q:].copy()


def dist_to_center(a: Sequence[complex], q: int) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=complex).reshape(-1)[:q]))


def project_to_center(a: Sequence[complex], q: int) -> np.ndarray:
    a = np.array(a, dtype=complex).reshape(-1)
    a[:q] = 0
    return a


def lift_jacobian_norm(a: Sequence[complex], q: int) -> float:
    """Operator norm of the complex Jacobian of a -> (x_j, v, tail) in the lifted chart."""
    chart, x_j, v, _ = blowup_lift(a, q)
    a = np.asarray(a, dtype=complex).reshape(-1)
    j = chart.j - 1
    J = np.eye(a.shape[0], dtype=complex)
    for i in range(q):
        if i == j:
            continue
        J[i, i] = 1.0 / x_j
        J[i, j] = -a[i] / x_j ** 2
    return float(np.linalg.norm(J, 2))


def jacobian_constant(n: int, q: int) -> float:
    """K with |D lift(a)| <= K dist(a, V)^{-2} whenever dist(a, V) <= 1."""
    return math.sqrt(n) + math.sqrt(2.0 * q * (q - 1))


def case2_projection_ratios(a: Sequence[complex], b: Sequence[complex], q: int) -> Tuple[float, float]:
    """(|a_V - b_V| / |a - b|, |a - a_V| / |a - b|^{1/4})."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    sep = float(np.linalg.norm(a - b))
    if sep == 0:
        return 0.0, 0.0
    aV, bV = project_to_center(a, q), project_to_center(b, q)
    return float(np.linalg.norm(aV - bV)) / sep, float(np.linalg.norm(a - aV)) / sep ** 0.25


# ==========================================
# FIBER DISTANCE BOUNDS
# ==========================================
def route_shapes(a: Sequence[complex], b: Sequence[complex], q: int) -> Dict[str, float]:
    """Unit-constant values of the applicable routes (chart line, derivative, projection)."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    sep = float(np.linalg.norm(a - b))
    da, db = dist_to_center(a, q), dist_to_center(b, q)
    near = min(da, db)
    shapes: Dict[str, float] = {}
    if near <= config.EPS_GEO:
        shapes["chart_line"] = sep
    else:
        shapes["derivative"] = max(da ** -2, db ** -2) * sep
    if near ** 2 <= sep ** 0.5:
        shapes["projection"] = sep ** 0.25
    return shapes


ROUTES = ("chart_line", "derivative", "projection")


def fiber_distance_upper(a: Sequence[complex], b: Sequence[complex], q: int = 2,
                         constants: Sequence[float] = DEFAULT_ROUTE_CONSTANTS) -> float:
    """Smallest applicable route bound on the fiber distance between a and b."""
    if np.allclose(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex), rtol=0.0, atol=0.0):
        return 0.0
    K = dict(zip(ROUTES, constants))
    return min(K[name] * value for name, value in route_shapes(a, b, q).items())


# ==========================================
# CHART GRID ORACLE
# ==========================================
class ChartGrid:
    """Graph-geodesic model of the blown-up real plane (n = q = 2 real slice)."""

    def __init__(self, s_max: float = 1.0, n_s: int = 65, n_theta: int = 64):
        if n_s < 3 or n_s % 2 == 0:
            raise ParameterError(f"❌ n_s must be odd and >= 3 so that s = 0 is a grid line, got {n_s}")
        if n_theta < 4:
            raise ParameterError(f"❌ n_theta must be >= 4, got {n_theta}")
        self.s_max = float(s_max)
        self.n_s = n_s
        self.n_theta = n_theta
        self.s = np.linspace(-s_max, s_max, n_s)
        self.hs = float(self.s[1] - self.s[0])
        self.h_theta = math.pi / n_theta
        self.divisor = np.arange(n_theta) + (n_s // 2) * n_theta
        self.graph = self._build()

    @property
    def size(self) -> int:
        return self.n_s * self.n_theta

    @property
    def snap_error(self) -> float:
        return 0.5 * math.sqrt(self.hs ** 2 + (1.0 + self.s_max ** 2) * self.h_theta ** 2)

    def _build(self) -> csr_matrix:
        I, K = np.meshgrid(np.arange(self.n_s), np.arange(self.n_theta), indexing="ij")
        I, K = I.reshape(-1), K.reshape(-1)
        src, dst, wts = [], [], []
        for di, dk in GEODESIC_STENCIL:
            ti, tk = I + di, K + dk
            wrap = (tk >= self.n_theta) | (tk < 0)
            ti = np.where(wrap, self.n_s - 1 - ti, ti)
            tk = tk % self.n_theta
            ok = (ti >= 0) & (ti < self.n_s)
            s_mid = self.s[I[ok]] + 0.5 * di * self.hs
            w = np.sqrt((di * self.hs) ** 2 + (1.0 + s_mid ** 2) * (dk * self.h_theta) ** 2)
            src.append(I[ok] * self.n_theta + K[ok])
            dst.append(ti[ok] * self.n_theta + tk[ok])
            wts.append(w)
        src, dst, wts = np.concatenate(src), np.concatenate(dst), np.concatenate(wts)
        # wrap-around edges can be generated from both ends
        key = np.minimum(src, dst) * self.size + np.maximum(src, dst)
        _, first = np.unique(key, return_index=True)
        return csr_matrix((wts[first], (src[first], dst[first])), shape=(self.size, self.size))

    def image(self, node: int) -> np.ndarray:
        i, k = divmod(int(node), self.n_theta)
        th = k * self.h_theta
        return self.s[i] * np.array([math.cos(th), math.sin(th)])

    def lift_node(self, a: Sequence[float]) -> Optional[int]:
        """Nearest chart node over a real point, or None when a snaps onto the divisor."""
        a = np.asarray(a, dtype=float).reshape(-1)
        r = float(np.linalg.norm(a))
        if r > self.s_max + self.hs:
            raise DomainError(f"❌ Point {a.tolist()} lies outside the chart grid")
        if r < 0.5 * self.hs:
            return None
        th, s = math.atan2(a[1], a[0]), r
        if th < 0:
            th, s = th + math.pi, -s
        k = int(round(th / self.h_theta))
        if k >= self.n_theta:
            k, s = k - self.n_theta, -s
        i = int(np.clip(round((s + self.s_max) / self.hs), 0, self.n_s - 1))
        return i * self.n_theta + k

    def fiber_distances(self, pairs: Sequence[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
        """
        Chained fiber distance per pair: the smaller of the direct chart
        geodesic and the route through the exceptional divisor. The fiber
        over a point of V is the whole divisor.
        """
        nodes = [(self.lift_node(a), self.lift_node(b)) for a, b in pairs]
        sources = sorted({n for ab in nodes for n in ab if n is not None})
        if not sources:
            return np.zeros(len(pairs))
        row = {n: i for i, n in enumerate(sources)}
        dist = np.atleast_2d(dijkstra(self.graph, directed=False, indices=sources))
        to_divisor = np.min(dist[:, self.divisor], axis=1)
        out = np.empty(len(pairs))
        for idx, (na, nb) in enumerate(nodes):
            if na is None and nb is None:
                out[idx] = 0.0
            elif na is None or nb is None:
                out[idx] = to_divisor[row[nb if na is None else na]]
            else:
                out[idx] = min(dist[row[na], nb], to_divisor[row[na]] + to_divisor[row[nb]])
        return out

    def fiber_distance(self, a: Sequence[float], b: Sequence[float]) -> float:
        return float(self.fiber_distances([(np.asarray(a, dtype=float), np.asarray(b, dtype=float))])[0])


def sample_chart_pairs(rng: np.random.Generator, grid: ChartGrid, n_pairs: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Mix of generic pairs, pairs near V, pairs with an endpoint on V and close pairs."""
    radius = 0.9 * grid.s_max
    min_sep = 4.0 * max(grid.hs, grid.h_theta)
    near_hi = max(0.3 * radius, 2.0 * min_sep)
    close_hi = max(0.1, 2.0 * min_sep)

    def disk(r_lo: float, r_hi: float, log_radius: bool) -> np.ndarray:
        r = math.exp(rng.uniform(math.log(r_lo), math.log(r_hi))) if log_radius else radius * math.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * math.pi)
        return r * np.array([math.cos(phi), math.sin(phi)])

    pairs: List[Tuple[np.ndarray, np.ndarray]] = []
    attempts = 0
    while len(pairs) < n_pairs:
        attempts += 1
        if attempts > 100 * n_pairs:
            raise ParameterError("❌ Could not sample separated chart pairs; grid too coarse")
        kind = len(pairs) % 6
        if kind in (0, 1):
            a, b = disk(0, 0, False), disk(0, 0, False)
        elif kind in (2, 3):
            a, b = disk(min_sep, near_hi, True), disk(min_sep, near_hi, True)
        elif kind == 4:
            a, b = np.zeros(2), disk(min_sep, radius, True)
        else:
            a = disk(0, 0, False)
            step = math.exp(rng.uniform(math.log(min_sep), math.log(close_hi)))
            phi = rng.uniform(0.0, 2.0 * math.pi)
            b = a + step * np.array([math.cos(phi), math.sin(phi)])
        if np.linalg.norm(a - b) < min_sep or np.linalg.norm(b) > radius:
            continue
        pairs.append((a, b))
    return pairs


ORACLE_BATCH = 256


def _pair_batches(pairs, workers: int):
    chunks = max(1, workers, math.ceil(len(pairs) / ORACLE_BATCH))
    return [pairs[r.start:r.stop] for r in chunk_ranges(len(pairs), chunks) if len(r)]


def calibrate_route_constants(grid: ChartGrid, n_pairs: int = 2000, seed: int = 0,
                              workers: int = 1) -> Dict[str, Any]:
    """K_i = 1.05 * max(oracle / route shape) over the pairs where route i applies."""
    rng = np.random.default_rng(seed)
    pairs = sample_chart_pairs(rng, grid, n_pairs)
    oracle = np.concatenate(execute_items(_pair_batches(pairs, workers), grid.fiber_distances, workers))
    ratios: Dict[str, float] = {name: 0.0 for name in ROUTES}
    counts: Dict[str, int] = {name: 0 for name in ROUTES}
    for (a, b), d in zip(pairs, oracle):
        for name, shape in route_shapes(a, b, 2).items():
            counts[name] += 1
            if shape > 0:
                ratios[name] = max(ratios[name], d / shape)
    constants = []
    for name, default in zip(ROUTES, DEFAULT_ROUTE_CONSTANTS):
        if counts[name]:
            constants.append(CALIBRATION_MARGIN * ratios[name])
        else:
            log.warning(f"⚠️ No sampled pair uses the {name} route; keeping K={default}")
            constants.append(default)
    log.info(f"🔎 Calibrated route constants K1={constants[0]:.4g}, K2={constants[1]:.4g}, K3={constants[2]:.4g}")
    return {
        "n": 2,
        "q": 2,
        "constants": constants,
        "route_pairs": counts,
        "pairs": len(pairs),
        "seed": seed,
        "grid": {"s_max": grid.s_max, "n_s": grid.n_s, "n_theta": grid.n_theta},
    }


def verify_fiber_bounds(grid: ChartGrid, constants: Sequence[float] = DEFAULT_ROUTE_CONSTANTS,
                        n_pairs: int = 2000, seed: int = 1, workers: int = 1) -> Dict[str, Any]:
    """
    Compare fiber_distance_upper with the oracle. A miss is an oracle value
    above the bound by more than twice the snap error plus 3%.
    """
    rng = np.random.default_rng(seed)
    pairs = sample_chart_pairs(rng, grid, n_pairs)
    oracle = np.concatenate(execute_items(_pair_batches(pairs, workers), grid.fiber_distances, workers))
    bounds = np.array([fiber_distance_upper(a, b, 2, constants) for a, b in pairs])
    excess = oracle - bounds - (2.0 * grid.snap_error + ORACLE_RTOL * oracle)
    misses = int(np.sum(excess > 0))
    fraction_ok = 1.0 - misses / len(pairs)
    passed = fraction_ok >= PASS_FRACTION
    log.info(f"{'✅' if passed else '❌'} fiber bounds: {misses} misses over {len(pairs)} pairs")
    return {
        "pairs": len(pairs),
        "misses": misses,
        "fraction_ok": fraction_ok,
        "worst_excess": float(np.max(excess)),
        "passed": bool(passed),
    }


# ==========================================
# TRANSFER
# ==========================================
def transfer_scale(constants: Sequence[float]) -> float:
    """Separation below which every route bound is at most |a - b|^{1/8}."""
    K1, K2, K3 = constants
    return min(K1 ** -2, K2 ** -4, K3 ** -8, 0.5)


def transfer_constant(C_pullback: float, M: float, constants: Sequence[float] = DEFAULT_ROUTE_CONSTANTS,
                      osc: float = 1.0) -> float:
    """
    Base constant from a pullback constant. Below t0 the fiber distance is
    at most |a - b|^{1/8}, so the three-term split costs 3 * 8^M; above t0
    the oscillation is absorbed by |log t0|^M.
    """
    if M <= 0:
        raise ParameterError(f"❌ M must be positive, got {M}")
    if C_pullback < 0 or osc < 0:
        raise ParameterError("❌ Constants must be nonnegative")
    t0 = transfer_scale(constants)
    return max(3.0 * 8.0 ** M * C_pullback, osc * abs(math.log(t0)) ** M)


def compose_transfer(C_pullback: float, M: float, constants_seq: Sequence[Sequence[float]],
                     osc: float = 1.0) -> List[float]:
    """Constants after each of successive blowups, innermost first."""
    out, C = [], C_pullback
    for constants in reversed(list(constants_seq)):
        C = transfer_constant(C, M, constants, osc)
        out.append(C)
    return out


def _center_clearance(u: GridField, q: int) -> float:
    gap = np.maximum(np.maximum(u.lo[:q], 0.0), np.maximum(-u.hi[:q], 0.0))
    return float(np.linalg.norm(gap))


def _route_bound(sep: np.ndarray, da: np.ndarray, db: np.ndarray, constants: Sequence[float]) -> np.ndarray:
    """Vectorized fiber_distance_upper from separations and center clearances."""
    K = dict(zip(ROUTES, constants))
    near = np.minimum(da, db)
    with np.errstate(divide="ignore"):
        derivative = K["derivative"] * np.maximum(da, config.EPS_GEO) ** -2.0 * sep
        derivative = np.maximum(derivative, K["derivative"] * np.maximum(db, config.EPS_GEO) ** -2.0 * sep)
    F = np.where(near <= config.EPS_GEO, K["chart_line"] * sep, derivative)
    projection = near ** 2 <= np.sqrt(sep)
    return np.where(projection, np.minimum(F, K["projection"] * sep ** 0.25), F)


def _grid_pairs(u: GridField, n_pairs: int, seed: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Axis-neighbour node pairs plus random pairs at log-uniform separations: (a, b, |u(a) - u(b)|)."""
    pts = u.points()
    A, B, diffs = [], [], []
    for axis in range(u.ndim):
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[axis], hi[axis] = slice(0, -1), slice(1, None)
        ok = u.mask[tuple(lo)] & u.mask[tuple(hi)]
        A.append(pts[tuple(lo)][ok])
        B.append(pts[tuple(hi)][ok])
        diffs.append(np.abs(u.values[tuple(hi)] - u.values[tuple(lo)])[ok])

    rng = np.random.default_rng(seed)
    free = np.argwhere(u.mask)
    t_hi = min(0.5, float(np.linalg.norm(u.hi - u.lo)))
    ra, rb, rd = [], [], []
    for _ in range(n_pairs if free.size and t_hi > u.h else 0):
        ia = tuple(free[rng.integers(len(free))])
        d = rng.normal(size=u.ndim)
        t = math.exp(rng.uniform(math.log(u.h), math.log(t_hi)))
        ib = u.nearest_index(pts[ia] + t * d / np.linalg.norm(d))
        if ib == ia or not u.mask[ib]:
            continue
        ra.append(pts[ia])
        rb.append(pts[ib])
        rd.append(abs(u.values[ia] - u.values[ib]))
    if ra:
        A.append(np.asarray(ra))
        B.append(np.asarray(rb))
        diffs.append(np.asarray(rd))
    if not A:
        empty = np.zeros((0, u.ndim))
        return empty, empty, np.zeros(0)
    return np.concatenate(A), np.concatenate(B), np.concatenate(diffs)


def transfer_logmod(
    u: GridField,
    M: float,
    C_pullback: float,
    q: int = 2,
    constants: Sequence[float] = DEFAULT_ROUTE_CONSTANTS,
    n_pairs: int = 10_000,
    seed: int = 0,
) -> Tuple[float, Dict[str, Any]]:
    """
    C_base from C_pullback, then a check on all axis-neighbour pairs plus
    random pairs at log-uniform separations. ``u`` lives on a real slice
    with V = {x_1 = ... = x_q = 0}.

    Pairs whose route bound F on the fiber distance is below 1 must satisfy
    the pullback-derived bound |u(a) - u(b)| <= 3 C_pullback |log F|^{-M};
    below t0 this is at most 3 8^M C_pullback |log|a - b||^{-M}. The other
    pairs are checked against C_base |log|a - b||^{-M}.
    """
    if q > u.ndim:
        raise DimensionMismatchError(f"❌ q={q} exceeds the field dimension {u.ndim}")
    if _center_clearance(u, q) < u.h:
        raise DomainError("❌ Grid touches the blowup center")
    vals = u.values[u.mask]
    osc = float(np.max(vals) - np.min(vals)) if vals.size else 0.0
    C_base = transfer_constant(C_pullback, M, constants, osc)

    A, B, diff = _grid_pairs(u, n_pairs, seed)
    sep = np.linalg.norm(A - B, axis=1)
    keep = (sep > 0) & (sep < 1)
    A, B, diff, sep = A[keep], B[keep], diff[keep], sep[keep]
    F = _route_bound(sep, np.linalg.norm(A[:, :q], axis=1), np.linalg.norm(B[:, :q], axis=1), constants)
    near = F < 1.0
    with np.errstate(divide="ignore"):
        bound = np.where(
            near,
            3.0 * C_pullback * np.abs(np.log(np.where(near, F, 0.5))) ** -M,
            C_base * np.abs(np.log(sep)) ** -M,
        )
    excess = diff - bound * (1.0 + 1e-9)
    ratio = np.divide(diff, bound, out=np.where(diff > 0, np.inf, 0.0), where=bound > 0)

    violations = int(np.sum(excess > 1e-15))
    worst_ratio = float(np.max(ratio)) if ratio.size else 0.0
    worst_pair = None
    if ratio.size:
        k = int(np.argmax(ratio))
        worst_pair = [A[k].tolist(), B[k].tolist()]
    passed = violations == 0
    log.info(f"{'✅' if passed else '❌'} transfer check: C_base={C_base:.4g}, {int(np.sum(near))} pullback-scale "
             f"pairs, worst ratio {worst_ratio:.4g}")
    return C_base, {
        "C_base": C_base,
        "C_near": 3.0 * 8.0 ** M * C_pullback,
        "osc": osc,
        "t0": transfer_scale(constants),
        "pairs": int(sep.size),
        "near_pairs": int(np.sum(near)),
        "near_violations": int(np.sum(excess[near] > 1e-15)),
        "violation_count": violations,
        "worst_ratio": worst_ratio,
        "worst_pair": worst_pair,
        "passed": bool(passed),
    }


def measure_pullback_modulus(
    u: GridField,
    M: float,
    n_pairs: int = 4000,
    seed: int = 0,
    t_range: Tuple[float, float] = (1e-6, 0.25),
) -> Dict[str, Any]:
    """
    Empirical C with |u o f(p) - u o f(p')| <= C |log d(p, p')|^{-M} for
    chart pairs of a 2D real-slice field; chart separations use the local
    line element sqrt(ds^2 + (1 + s^2) dtheta^2).
    """
    if u.ndim != 2:
        raise ParameterError("❌ Pullback moduli are measured on 2D real slices")
    interp = RegularGridInterpolator(u.axes(), np.where(u.mask, u.values, np.nan),
                                     bounds_error=False, fill_value=np.nan)
    rng = np.random.default_rng(seed)
    base = u.lo + rng.uniform(size=(n_pairs, 2)) * (u.hi - u.lo)
    s = np.linalg.norm(base, axis=1)
    th = np.arctan2(base[:, 1], base[:, 0])
    step = np.exp(rng.uniform(math.log(t_range[0]), math.log(t_range[1]), size=n_pairs))
    psi = rng.uniform(0.0, 2.0 * math.pi, size=n_pairs)
    s2 = s + step * np.cos(psi)
    th2 = th + step * np.sin(psi) / np.sqrt(1.0 + s ** 2)
    moved = np.stack([s2 * np.cos(th2), s2 * np.sin(th2)], axis=1)
    du = np.abs(interp(moved) - interp(base))
    ok = np.isfinite(du)
    C = float(np.max(du[ok] * np.abs(np.log(step[ok])) ** M)) if np.any(ok) else 0.0
    return {"C_pullback": C, "M": M, "pairs": int(np.sum(ok))}
