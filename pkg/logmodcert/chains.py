"""
Safe polygonal chains around arrangements of flats of codimension >= 2.

``waypoint_single_subspace`` builds the three-case detour around one flat;
``build_safe_chain`` runs the induction over the flats of an arrangement,
quadrupling the vertex count per flat, and ``verify_chain`` checks the
length and clearance inequalities of the resulting certificate.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from logmodcert import config
from logmodcert.errors import CodimensionError, DimensionMismatchError, ObstacleContactError, ParameterError
from logmodcert.geometry import (
    AffineSubspace,
    Arrangement,
    as_point,
    complement_basis,
    segment_closest_point,
)
from logmodcert.parallel import execute_items

log = logging.getLogger(__name__)

BASE_CONSTANT = 6.0           # C_1: covers the detour's length factor 3 and clearance factor 2
CLEARANCE_PASS_RATIO = 1.0 - 1e-8
EXACT_FALLBACK_RATIO = 1.1    # sampled ratio below this triggers exact segment clearance
RANDOM_LAYOUTS = ("uniform", "crossing", "waypoint")


# ==========================================
# DATA TYPES
# ==========================================
class PolygonalChain:
    def __init__(self, vertices: Sequence[Sequence[float]]):
        arr = np.atleast_2d(np.asarray(vertices, dtype=float))
        if arr.shape[0] < 2:
            raise ParameterError("❌ A polygonal chain needs at least 2 vertices")
        self.vertices = arr
        self.ambient_dim = arr.shape[1]

    def __len__(self) -> int:
        return self.vertices.shape[0]

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.vertices[-1]

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    def length(self) -> float:
        return float(np.sum(self.segment_lengths()))

    def dedup(self) -> "PolygonalChain":
        """Drop consecutive repeated vertices (keeps at least the two endpoints)."""
        keep = [self.vertices[0]]
        for v in self.vertices[1:]:
            if not np.array_equal(v, keep[-1]):
                keep.append(v)
        if len(keep) == 1:
            keep.append(self.vertices[-1])
        return PolygonalChain(keep)

    def to_dict(self) -> Dict[str, Any]:
        return {"ambient_dim": self.ambient_dim, "vertices": self.vertices.tolist()}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "PolygonalChain":
        return cls(raw["vertices"])


@dataclass
class ChainCertificate:
    clearance_constant: float
    length_bound: float
    measured_length: float
    measured_min_clearance_ratio: float
    passed: bool
    exact_clearance: bool = False
    cases: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ==========================================
# SINGLE-FLAT DETOUR
# ==========================================
def _check_endpoints(x: np.ndarray, y: np.ndarray, N: AffineSubspace) -> Tuple[float, float]:
    if x.shape[0] != N.ambient_dim or y.shape[0] != N.ambient_dim:
        raise DimensionMismatchError(f"❌ Endpoints must live in R^{N.ambient_dim}")
    if N.codim < 2:
        raise CodimensionError(f"❌ Obstacle has codimension {N.codim} < 2")
    dx, dy = N.dist(x), N.dist(y)
    if min(dx, dy) <= config.EPS_GEO:
        raise ObstacleContactError("❌ Chain endpoint lies on the obstacle")
    return dx, dy


def classify_waypoint(x: Sequence[float], y: Sequence[float], N: AffineSubspace, r: float = 1.0) -> Tuple[np.ndarray, int]:
    """
    Detour waypoint and the case that produced it:

    1. the segment already keeps clearance R/(2r), or it is parallel to N: w = x;
    2. the line through x, y meets N: lift its meeting point off the
       hyperplane spanned by N and y - x by R/r;
    3. skew line: lift the foot of the common perpendicular by R/r.

    R is the smaller endpoint clearance.
    """
    x, y = as_point(x), as_point(y)
    if r < 1:
        raise ParameterError(f"❌ Detour parameter r must be >= 1, got {r}")
    dx, dy = _check_endpoints(x, y, N)
    R = min(dx, dy)
    sep = float(np.linalg.norm(y - x))
    if sep <= config.EPS_GEO:
        return x.copy(), 1
    _, clearance = segment_closest_point(x, y, N)
    if clearance >= R / (2.0 * r):
        return x.copy(), 1

    u = N.normal_component(x - N.base_point)
    v = N.normal_component(y - x)
    vv = float(np.dot(v, v))
    if vv <= (config.RANK_TOL * sep) ** 2:
        # parallel to N: clearance is constant and equals dist(x, N) >= R
        return x.copy(), 1
    t_line = -float(np.dot(u, v)) / vv
    w_line = x + t_line * (y - x)
    line_dist = float(np.linalg.norm(u + t_line * v))

    if line_dist >= config.EPS_GEO * sep:
        # skew: w2 - w1 is the common perpendicular, orthogonal to N and to y - x
        perp = N.normal_component(w_line - N.base_point)
        line_dir = (y - x) / sep
        perp = perp - np.dot(perp, line_dir) * line_dir
        norm = float(np.linalg.norm(perp))
        if norm > config.RANK_TOL * max(sep, 1.0):
            log.debug(f"waypoint case 3 (skew), t={t_line:.4f}, line clearance {line_dist:.3e}")
            return w_line + (R / r) * perp / norm, 3

    t0 = float(np.clip(t_line, 0.0, 1.0))
    w0 = x + t0 * (y - x)
    normal = complement_basis(np.vstack([N.directions, (y - x)[None, :]]), N.ambient_dim)[0]
    log.debug(f"waypoint case 2 (line meets N) at t={t0:.4f}")
    return w0 + (R / r) * normal, 2


def waypoint_single_subspace(x: Sequence[float], y: Sequence[float], N: AffineSubspace, r: float = 1.0) -> np.ndarray:
    return classify_waypoint(x, y, N, r)[0]


# ==========================================
# RECURSIVE SAFE CHAIN
# ==========================================
def chain_constant(k: int) -> float:
    """C_1 = 6 and C_{k+1} = 8 (C_k + 4^k)."""
    if k < 1:
        raise ParameterError(f"❌ Chain constant needs k >= 1, got {k}")
    C = BASE_CONSTANT
    for k0 in range(1, k):
        C = 8.0 * (C + 4.0 ** k0)
    return C


def _lift_off(p: np.ndarray, N: AffineSubspace, target: float) -> Tuple[np.ndarray, bool]:
    d = N.dist(p)
    if d >= target:
        return p, False
    if d > config.EPS_GEO:
        direction = N.normal_component(p - N.base_point) / d
    else:
        direction = N.complement_basis()[0]
    return p + (target - d) * direction, True


def _refine_around(
    prev: np.ndarray,
    Nk: AffineSubspace,
    A: float,
    C0: float,
    cases: Dict[str, int],
) -> np.ndarray:
    """One induction step: route the chain ``prev`` (safe for the earlier flats) around Nk."""
    lift = A / (4.0 * C0)
    lifted = [_lift_off(a, Nk, lift) for a in prev]
    out: List[np.ndarray] = [lifted[0][0]]
    for s in range(len(prev) - 1):
        b0, lifted0 = lifted[s]
        b4, lifted4 = lifted[s + 1]
        t, clearance = segment_closest_point(b0, b4, Nk)
        if clearance >= lift:
            cases["1"] += 1
            out.extend([b4, b4, b4, b4])
        elif lifted0 or lifted4:
            cases["2"] += 1
            q = waypoint_single_subspace(b0, b4, Nk, r=1.0)
            out.extend([q, q, q, b4])
        else:
            cases["3"] += 1
            xi0 = b0 + t * (b4 - b0)
            b2, _ = _lift_off(xi0, Nk, lift)
            b1 = waypoint_single_subspace(b0, b2, Nk, r=1.0)
            b3 = waypoint_single_subspace(b2, b4, Nk, r=1.0)
            out.extend([b1, b2, b3, b4])
    return np.array(out)


def build_safe_chain(
    x: Sequence[float],
    y: Sequence[float],
    arrangement: Arrangement,
    samples_per_segment: int = 1000,
) -> Tuple[PolygonalChain, ChainCertificate]:
    """
    Chain from x to y with 4^k + 1 vertices (k flats) such that
    C dist(xi, N) >= min(dist(x, N), dist(y, N)) on the chain and
    L <= C |x - y|, with C = chain_constant(k).
    """
    x = as_point(x, arrangement.ambient_dim)
    y = as_point(y, arrangement.ambient_dim)
    arrangement.require_codim(2)
    for N in arrangement:
        _check_endpoints(x, y, N)

    cases = {"1": 0, "2": 0, "3": 0}
    w, case = classify_waypoint(x, y, arrangement[0], r=1.0)
    cases[str(case)] += 1
    vertices = np.array([x, w, w, w, y])
    C = BASE_CONSTANT
    for k0 in range(1, len(arrangement)):
        prefix = Arrangement(arrangement.subspaces[: k0 + 1])
        A = min(prefix.dist(x), prefix.dist(y))
        vertices = _refine_around(vertices, arrangement[k0], A, C, cases)
        C = 8.0 * (C + 4.0 ** k0)
        log.debug(f"step {k0 + 1}: {len(vertices)} vertices, C={C:g}")

    chain = PolygonalChain(vertices)
    cert = verify_chain(chain, arrangement, C, samples_per_segment=samples_per_segment)
    cert.cases = cases
    return chain, cert


# ==========================================
# VERIFICATION
# ==========================================
def verify_chain(
    chain: PolygonalChain,
    arrangement: Arrangement,
    C: float,
    samples_per_segment: int = 1000,
) -> ChainCertificate:
    """
    Measure the chain's length and its minimum of C dist(xi, N) / R over the
    chain, R being the smaller endpoint clearance. Clearance is sampled
    (``samples_per_segment`` points per segment); when the sampled ratio is
    within 10% of failing, or sampling is disabled (0), the exact segment
    clearance is used instead.
    """
    if chain.ambient_dim != arrangement.ambient_dim:
        raise DimensionMismatchError("❌ Chain and arrangement live in different dimensions")
    x, y = chain.start, chain.end
    R = min(arrangement.dist(x), arrangement.dist(y))
    length = chain.length()
    length_bound = C * float(np.linalg.norm(y - x))

    exact = samples_per_segment <= 0
    if R <= 0.0:
        ratio = 0.0
    elif not exact:
        t = np.linspace(0.0, 1.0, samples_per_segment)
        starts = chain.vertices[:-1]
        steps = np.diff(chain.vertices, axis=0)
        pts = (starts[:, None, :] + t[None, :, None] * steps[:, None, :]).reshape(-1, chain.ambient_dim)
        ratio = C * float(np.min(arrangement.dists(pts))) / R
        exact = ratio < EXACT_FALLBACK_RATIO
        if exact:
            log.debug(f"sampled clearance ratio {ratio:.4f} near the threshold, switching to exact")
    if R > 0.0 and exact:
        clearance = min(
            segment_closest_point(a, b, N)[1]
            for a, b in zip(chain.vertices[:-1], chain.vertices[1:])
            for N in arrangement
        )
        ratio = C * clearance / R

    passed = length <= length_bound + config.EPS_GEO and ratio >= CLEARANCE_PASS_RATIO
    return ChainCertificate(
        clearance_constant=float(C),
        length_bound=length_bound,
        measured_length=length,
        measured_min_clearance_ratio=float(ratio),
        passed=bool(passed),
        exact_clearance=bool(exact),
    )


# ==========================================
# RANDOMIZED CERTIFICATION
# ==========================================
def random_arrangement(rng: np.random.Generator, m: int, k: int) -> Arrangement:
    """k random flats in R^m, each of codimension >= 2."""
    flats = []
    for _ in range(k):
        dim = int(rng.integers(0, m - 1))
        base = rng.uniform(-1.0, 1.0, size=m)
        dirs = rng.normal(size=(dim, m))
        flats.append(AffineSubspace(base, dirs))
    return Arrangement(flats)


def _clear_endpoints(rng: np.random.Generator, arrangement: Arrangement, m: int) -> Tuple[np.ndarray, np.ndarray]:
    while True:
        x, y = rng.uniform(-2.0, 2.0, size=(2, m))
        if min(arrangement.dist(x), arrangement.dist(y)) > 1e-6:
            return x, y


def _crossing_endpoints(rng: np.random.Generator, arrangement: Arrangement, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Endpoints whose segment passes through a random point of the first flat."""
    N = arrangement[0]
    while True:
        p = N.base_point + rng.uniform(-1.0, 1.0, size=N.dim) @ N.directions
        d = rng.normal(size=m)
        d /= np.linalg.norm(d)
        x = p - rng.uniform(0.2, 2.0) * d
        y = p + rng.uniform(0.2, 2.0) * d
        if min(arrangement.dist(x), arrangement.dist(y)) > 1e-6:
            return x, y


def random_layout(rng: np.random.Generator, m: int, k: int) -> Tuple[Arrangement, np.ndarray, np.ndarray, str]:
    """
    Random arrangement and endpoints in one of three layouts:

    - ``uniform``: endpoints uniform in [-2, 2]^m;
    - ``crossing``: the segment x y passes through the first flat;
    - ``waypoint``: as ``crossing``, and the second flat passes through
      the detour waypoint around the first one (k >= 2).

    Uniform layouts almost never bring a chain vertex within the detour
    clearance of a flat, the other two always do.
    """
    arrangement = random_arrangement(rng, m, k)
    choices = RANDOM_LAYOUTS if k >= 2 else RANDOM_LAYOUTS[:2]
    layout = choices[int(rng.integers(0, len(choices)))]
    if layout == "uniform":
        x, y = _clear_endpoints(rng, arrangement, m)
        return arrangement, x, y, layout
    x, y = _crossing_endpoints(rng, arrangement, m)
    if layout == "waypoint":
        w, _ = classify_waypoint(x, y, arrangement[0], r=1.0)
        flats = list(arrangement.subspaces)
        flats[1] = AffineSubspace(w, flats[1].directions)
        moved = Arrangement(flats)
        if min(moved.dist(x), moved.dist(y)) > 1e-6:
            return moved, x, y, layout
        layout = "crossing"
    return arrangement, x, y, layout


def _random_instance(item: Tuple[int, int, np.random.SeedSequence]) -> Dict[str, Any]:
    m, k, seq = item
    rng = np.random.default_rng(seq)
    arrangement, x, y, layout = random_layout(rng, m, k)
    _, cert = build_safe_chain(x, y, arrangement, samples_per_segment=0)
    sep = float(np.linalg.norm(y - x))
    return {
        "passed": cert.passed,
        "layout": layout,
        "length_ratio": cert.measured_length / (cert.clearance_constant * sep) if sep > 0 else 0.0,
        "clearance_ratio": cert.measured_min_clearance_ratio,
        "cases": cert.cases,
    }


def certify_random_instances(
    m_values: Sequence[int],
    k_values: Sequence[int],
    n_instances: int,
    seed: int,
    workers: int = 1,
) -> Dict[str, Any]:
    """Build and verify chains on random instances; every instance gets its own seed."""
    seqs = np.random.SeedSequence(seed).spawn(n_instances)
    items = [
        (int(m_values[i % len(m_values)]), int(k_values[(i // len(m_values)) % len(k_values)]), seqs[i])
        for i in range(n_instances)
    ]
    results = execute_items(items, _random_instance, workers=workers)
    cases = {"1": 0, "2": 0, "3": 0}
    layouts = {name: 0 for name in RANDOM_LAYOUTS}
    for res in results:
        layouts[res["layout"]] += 1
        for key, count in res["cases"].items():
            cases[key] += count
    failures = sum(1 for res in results if not res["passed"])
    return {
        "instances": n_instances,
        "failures": failures,
        "max_length_ratio": max(res["length_ratio"] for res in results),
        "min_clearance_ratio": min(res["clearance_ratio"] for res in results),
        "cases": cases,
        "layouts": layouts,
    }
