"""
Affine flats, arrangements of flats, convex domains and chamber cells.

Flats keep an orthonormal direction basis so every distance query is the
norm of a projection residual. Convex domains are a ball, an intersection
of half-spaces, or both.
"""

import json
import logging
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize

from logmodcert import config
from logmodcert.errors import CodimensionError, DimensionMismatchError, DomainError, ParameterError

log = logging.getLogger(__name__)

CHAMBER_MIN_RADIUS = 1e-9  # cells thinner than this are treated as empty


# ==========================================
# HELPERS
# ==========================================
def as_point(p: Sequence[float], dim: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(f"❌ Expected a point in R^{dim}, got dimension {arr.shape[0]}")
    return arr


def orthonormalize(vectors: np.ndarray, dim: int, drop_dependent: bool = False) -> np.ndarray:
    """
    Modified Gram-Schmidt (two passes) over the rows of ``vectors``.

    Dependent rows raise ParameterError unless ``drop_dependent`` is set,
    in which case they are skipped.
    """
    vectors = np.asarray(vectors, dtype=float).reshape(-1, dim) if np.size(vectors) else np.zeros((0, dim))
    basis: List[np.ndarray] = []
    for v in vectors:
        scale = np.linalg.norm(v)
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w -= np.dot(w, b) * b
        norm = np.linalg.norm(w)
        if scale == 0.0 or norm <= config.RANK_TOL * scale:
            if drop_dependent:
                continue
            raise ParameterError("❌ Direction vectors are linearly dependent")
        basis.append(w / norm)
    return np.array(basis).reshape(len(basis), dim)


def complement_basis(vectors: np.ndarray, dim: int) -> np.ndarray:
    """
    Orthonormal basis of the orthogonal complement of span(vectors), built
    by running Gram-Schmidt over e_1, ..., e_m in order. The first row is
    the lexicographically first complement direction.
    """
    span = orthonormalize(vectors, dim, drop_dependent=True)
    target = dim - span.shape[0]
    out: List[np.ndarray] = []
    for i in range(dim):
        if len(out) == target:
            break
        w = np.zeros(dim)
        w[i] = 1.0
        for _ in range(2):
            for b in list(span) + out:
                w -= np.dot(w, b) * b
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            out.append(w / norm)
    return np.array(out).reshape(len(out), dim)


# ==========================================
# FLATS
# ==========================================
class AffineSubspace:
    """Affine flat ``base_point + span(directions)`` in R^m."""

    def __init__(self, base_point: Sequence[float], directions: Sequence[Sequence[float]] = ()):
        base = as_point(base_point)
        dim = base.shape[0]
        dirs = orthonormalize(np.asarray(directions, dtype=float), dim)
        gram = dirs @ dirs.T
        if dirs.shape[0] and np.max(np.abs(gram - np.eye(dirs.shape[0]))) > config.ORTHO_TOL:
            raise ParameterError("❌ Could not orthonormalize direction basis")
        base.setflags(write=False)
        dirs.setflags(write=False)
        self.base_point = base
        self.directions = dirs
        self.ambient_dim = dim

    def __repr__(self) -> str:
        return f"AffineSubspace(dim={self.dim}, ambient_dim={self.ambient_dim})"

    @property
    def dim(self) -> int:
        return self.directions.shape[0]

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.dim

    def _check(self, p: Sequence[float]) -> np.ndarray:
        return as_point(p, self.ambient_dim)

    def project(self, p: Sequence[float]) -> np.ndarray:
        p = self._check(p)
        rel = p - self.base_point
        return self.base_point + self.directions.T @ (self.directions @ rel)

    def normal_component(self, v: Sequence[float]) -> np.ndarray:
        """Component of a vector orthogonal to the flat's directions."""
        v = self._check(v)
        return v - self.directions.T @ (self.directions @ v)

    def dist(self, p: Sequence[float]) -> float:
        p = self._check(p)
        return float(np.linalg.norm(self.normal_component(p - self.base_point)))

    def contains(self, p: Sequence[float], tol: Optional[float] = None) -> bool:
        tol = config.EPS_GEO if tol is None else tol
        return self.dist(p) <= tol

    def complement_basis(self) -> np.ndarray:
        return complement_basis(self.directions, self.ambient_dim)

    def to_dict(self) -> Dict[str, Any]:
        return {"base": self.base_point.tolist(), "directions": self.directions.tolist()}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "AffineSubspace":
        return cls(raw["base"], raw.get("directions", []))


def coordinate_subspace(dim: int, zero_coords: Sequence[int], base: Optional[Sequence[float]] = None) -> AffineSubspace:
    """Flat {x_i = base_i for i in zero_coords} (0-based indices)."""
    base = np.zeros(dim) if base is None else as_point(base, dim)
    free = [i for i in range(dim) if i not in set(zero_coords)]
    return AffineSubspace(base, np.eye(dim)[free])


def dist_to_affine(p: Sequence[float], N: AffineSubspace) -> float:
    return N.dist(p)


def hyperplane_containing(N: AffineSubspace) -> Tuple[np.ndarray, float]:
    """Hyperplane {x : normal . x = offset} that contains N."""
    if N.codim < 1:
        raise CodimensionError("❌ A full-dimensional flat is not contained in a hyperplane")
    normal = N.complement_basis()[0]
    return normal, float(np.dot(normal, N.base_point))


def segment_closest_point(a: Sequence[float], b: Sequence[float], N: AffineSubspace) -> Tuple[float, float]:
    """
    Parameter t in [0, 1] of the point of [a, b] closest to N and its
    distance. Exact: the squared distance is a convex quadratic in t.
    """
    a = N._check(a)
    b = N._check(b)
    u = N.normal_component(a - N.base_point)
    v = N.normal_component(b - a)
    vv = float(np.dot(v, v))
    t = 0.0 if vv <= 0.0 else float(np.clip(-np.dot(u, v) / vv, 0.0, 1.0))
    return t, float(np.linalg.norm(u + t * v))


def segment_clearance(a: Sequence[float], b: Sequence[float], N: AffineSubspace) -> float:
    return segment_closest_point(a, b, N)[1]


def dist_to_segment(p: Sequence[float], a: Sequence[float], b: Sequence[float]) -> float:
    p, a, b = as_point(p), as_point(a), as_point(b)
    v = b - a
    vv = float(np.dot(v, v))
    t = 0.0 if vv == 0.0 else float(np.clip(np.dot(p - a, v) / vv, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * v)))


class Arrangement:
    """Finite union of affine flats sharing one ambient dimension."""

    def __init__(self, subspaces: Sequence[AffineSubspace]):
        subspaces = list(subspaces)
        if not subspaces:
            raise ParameterError("❌ An arrangement needs at least one subspace")
        dims = {s.ambient_dim for s in subspaces}
        if len(dims) != 1:
            raise DimensionMismatchError(f"❌ Subspaces live in different ambient dimensions: {sorted(dims)}")
        self.subspaces = subspaces
        self.ambient_dim = dims.pop()

    def __len__(self) -> int:
        return len(self.subspaces)

    def __iter__(self) -> Iterator[AffineSubspace]:
        return iter(self.subspaces)

    def __getitem__(self, idx: int) -> AffineSubspace:
        return self.subspaces[idx]

    def dist(self, p: Sequence[float]) -> float:
        return min(s.dist(p) for s in self.subspaces)

    def dists(self, points: np.ndarray) -> np.ndarray:
        """Vectorized distance of each row of ``points`` to the union."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.ambient_dim:
            raise DimensionMismatchError(f"❌ Expected points in R^{self.ambient_dim}, got R^{points.shape[1]}")
        out = np.full(points.shape[0], np.inf)
        for s in self.subspaces:
            rel = points - s.base_point
            resid = rel - (rel @ s.directions.T) @ s.directions
            out = np.minimum(out, np.linalg.norm(resid, axis=1))
        return out

    def require_codim(self, min_codim: int = 2) -> None:
        for idx, s in enumerate(self.subspaces):
            if s.codim < min_codim:
                raise CodimensionError(f"❌ Subspace #{idx} has codimension {s.codim} < {min_codim}")

    def to_dict(self) -> Dict[str, Any]:
        return {"ambient_dim": self.ambient_dim, "subspaces": [s.to_dict() for s in self.subspaces]}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "Arrangement":
        arrangement = cls([AffineSubspace.from_dict(s) for s in raw.get("subspaces", [])])
        if "ambient_dim" in raw and int(raw["ambient_dim"]) != arrangement.ambient_dim:
            raise DimensionMismatchError(
                f"❌ ambient_dim {raw['ambient_dim']} does not match subspaces in R^{arrangement.ambient_dim}"
            )
        return arrangement


# ==========================================
# CONVEX DOMAINS
# ==========================================
def _halfspace_chebyshev(normals: np.ndarray, offsets: np.ndarray, dim: int,
                         bounds: Optional[List[Tuple[float, float]]] = None) -> Tuple[np.ndarray, float]:
    # maximize r s.t. n_i . c + r <= b_i  (unit normals)
    cost = np.zeros(dim + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([normals, np.ones((normals.shape[0], 1))])
    var_bounds = (bounds or [(None, None)] * dim) + [(0, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=offsets, bounds=var_bounds, method="highs")
    if res.status == 3:
        raise DomainError("❌ Half-space domain is unbounded")
    if res.status != 0:
        return np.zeros(dim), -np.inf
    return res.x[:dim], float(res.x[-1])


def _min_slack(p: np.ndarray, center: Optional[np.ndarray], radius: Optional[float],
               normals: np.ndarray, offsets: np.ndarray) -> float:
    slack = np.inf
    if center is not None:
        slack = radius - float(np.linalg.norm(p - center))
    if normals.shape[0]:
        slack = min(slack, float(np.min(offsets - normals @ p)))
    return slack


def chebyshev(center: Optional[np.ndarray], radius: Optional[float], normals: np.ndarray,
              offsets: np.ndarray, dim: int) -> Tuple[np.ndarray, float]:
    """Center and radius of the largest ball inside ball ∩ half-spaces."""
    if normals.shape[0] == 0:
        return center.copy(), float(radius)
    if center is None:
        return _halfspace_chebyshev(normals, offsets, dim)

    # Ball with half-spaces: start from the LP on the circumscribed box,
    # then solve the smooth problem with the exact ball constraint.
    box = [(c - radius, c + radius) for c in center]
    start, _ = _halfspace_chebyshev(normals, offsets, dim, bounds=box)
    if not np.all(np.isfinite(start)):
        start = center.copy()
    r0 = max(_min_slack(start, center, radius, normals, offsets), 0.0)

    def neg_r(z: np.ndarray) -> float:
        return -z[-1]

    constraints = [
        {"type": "ineq", "fun": lambda z: offsets - normals @ z[:dim] - z[-1]},
        {"type": "ineq", "fun": lambda z: (radius - z[-1]) ** 2 - np.dot(z[:dim] - center, z[:dim] - center)},
        {"type": "ineq", "fun": lambda z: radius - z[-1]},
        {"type": "ineq", "fun": lambda z: z[-1]},
    ]
    res = minimize(neg_r, np.append(start, r0), method="SLSQP", constraints=constraints,
                   options={"maxiter": 200, "ftol": 1e-12})
    candidates = [start, center]
    if np.all(np.isfinite(res.x)):
        candidates.insert(0, res.x[:dim])
    best = max(candidates, key=lambda c: _min_slack(c, center, radius, normals, offsets))
    return best.copy(), float(_min_slack(best, center, radius, normals, offsets))


class ConvexDomain:
    """
    Bounded convex domain given by an optional ball and half-spaces
    ``normal . x <= offset``. Normals are stored with unit length.
    """

    def __init__(
        self,
        ambient_dim: int,
        center: Optional[Sequence[float]] = None,
        radius: Optional[float] = None,
        normals: Optional[Sequence[Sequence[float]]] = None,
        offsets: Optional[Sequence[float]] = None,
        signs: Optional[Tuple[int, ...]] = None,
    ):
        self.ambient_dim = int(ambient_dim)
        if (center is None) != (radius is None):
            raise ParameterError("❌ A ball needs both center and radius")
        self.center = None if center is None else as_point(center, self.ambient_dim)
        self.radius = None if radius is None else float(radius)
        if self.radius is not None and not self.radius > 0:
            raise DomainError(f"❌ Ball radius must be positive, got {self.radius}")
        normals = np.zeros((0, self.ambient_dim)) if normals is None or len(normals) == 0 else np.asarray(normals, dtype=float)
        offsets = np.zeros(0) if offsets is None or len(offsets) == 0 else np.asarray(offsets, dtype=float).reshape(-1)
        if normals.shape[0] and normals.shape[1] != self.ambient_dim:
            raise DimensionMismatchError(f"❌ Half-space normals must live in R^{self.ambient_dim}")
        if normals.shape[0] != offsets.shape[0]:
            raise ParameterError("❌ Each half-space needs one normal and one offset")
        norms = np.linalg.norm(normals, axis=1)
        if np.any(norms == 0):
            raise ParameterError("❌ Half-space normal must be nonzero")
        self.normals = normals / norms[:, None] if normals.shape[0] else normals
        self.offsets = offsets / norms if offsets.shape[0] else offsets
        if self.center is None and self.normals.shape[0] == 0:
            raise DomainError("❌ A convex domain needs a ball or at least one half-space")
        self.signs = signs
        self._cheb = chebyshev(self.center, self.radius, self.normals, self.offsets, self.ambient_dim)
        if not self._cheb[1] > config.EPS_GEO:
            raise DomainError("❌ Convex domain has empty interior")
        self._bbox: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __repr__(self) -> str:
        kind = "ball" if self.normals.shape[0] == 0 else ("polytope" if self.center is None else "ball∩halfspaces")
        return f"ConvexDomain({kind}, ambient_dim={self.ambient_dim})"

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "ConvexDomain":
        center = as_point(center)
        return cls(center.shape[0], center=center, radius=radius)

    @classmethod
    def from_halfspaces(cls, normals: Sequence[Sequence[float]], offsets: Sequence[float]) -> "ConvexDomain":
        normals = np.asarray(normals, dtype=float)
        return cls(normals.shape[1], normals=normals, offsets=offsets)

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "ConvexDomain":
        lo, hi = as_point(lo), as_point(hi)
        dim = lo.shape[0]
        eye = np.eye(dim)
        return cls(dim, normals=np.vstack([eye, -eye]), offsets=np.concatenate([hi, -lo]))

    def min_slack(self, p: Sequence[float]) -> float:
        return _min_slack(as_point(p, self.ambient_dim), self.center, self.radius, self.normals, self.offsets)

    def contains(self, p: Sequence[float], tol: Optional[float] = None) -> bool:
        tol = config.EPS_GEO if tol is None else tol
        return self.min_slack(p) >= -tol

    def slacks(self, points: np.ndarray) -> np.ndarray:
        """Signed boundary clearance of each row (negative outside)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        slack = np.full(points.shape[0], np.inf)
        if self.center is not None:
            slack = self.radius - np.linalg.norm(points - self.center, axis=1)
        if self.normals.shape[0]:
            slack = np.minimum(slack, np.min(self.offsets[None, :] - points @ self.normals.T, axis=1))
        return slack

    def contains_many(self, points: np.ndarray, strict: bool = False) -> np.ndarray:
        slack = self.slacks(points)
        return slack > 0 if strict else slack >= -config.EPS_GEO

    def dist_to_boundary(self, p: Sequence[float]) -> float:
        """Distance from a point of the closure to the boundary (exact)."""
        slack = self.min_slack(p)
        if slack < -config.EPS_GEO:
            raise DomainError(f"❌ Point lies outside the domain (slack {slack:.3e})")
        return max(slack, 0.0)

    def chebyshev_center(self) -> Tuple[np.ndarray, float]:
        return self._cheb[0].copy(), self._cheb[1]

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._bbox is not None:
            return self._bbox
        dim = self.ambient_dim
        if self.center is not None:
            lo, hi = self.center - self.radius, self.center + self.radius
        else:
            lo, hi = np.full(dim, -np.inf), np.full(dim, np.inf)
        if self.normals.shape[0]:
            bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(h) else h) for l, h in zip(lo, hi)]
            lo, hi = lo.copy(), hi.copy()
            for i in range(dim):
                for sign in (1.0, -1.0):
                    cost = np.zeros(dim)
                    cost[i] = sign
                    res = linprog(cost, A_ub=self.normals, b_ub=self.offsets, bounds=bounds, method="highs")
                    if res.status == 3:
                        raise DomainError("❌ Convex domain is unbounded")
                    if res.status == 0:
                        if sign > 0:
                            lo[i] = res.x[i]
                        else:
                            hi[i] = res.x[i]
        self._bbox = (lo, hi)
        return self._bbox

    def diameter_bound(self) -> float:
        lo, hi = self.bounding_box()
        diag = float(np.linalg.norm(hi - lo))
        if self.radius is not None:
            return min(2.0 * self.radius, diag)
        return diag

    def sample_interior(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo, hi = self.bounding_box()
        out: List[np.ndarray] = []
        count = 0
        while count < n:
            batch = rng.uniform(lo, hi, size=(max(2 * (n - count), 64), self.ambient_dim))
            keep = batch[self.contains_many(batch, strict=True)]
            out.append(keep)
            count += keep.shape[0]
        return np.vstack(out)[:n]

    def to_dict(self) -> Dict[str, Any]:
        raw: Dict[str, Any] = {"ambient_dim": self.ambient_dim}
        if self.center is not None:
            raw["ball"] = {"center": self.center.tolist(), "radius": self.radius}
        if self.normals.shape[0]:
            raw["halfspaces"] = [{"normal": n.tolist(), "offset": float(b)} for n, b in zip(self.normals, self.offsets)]
        return raw

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ConvexDomain":
        ball = raw.get("ball")
        halfspaces = raw.get("halfspaces", [])
        return cls(
            int(raw["ambient_dim"]),
            center=None if ball is None else ball["center"],
            radius=None if ball is None else ball["radius"],
            normals=[h["normal"] for h in halfspaces],
            offsets=[h["offset"] for h in halfspaces],
        )


def dist_to_boundary(p: Sequence[float], U: ConvexDomain) -> float:
    return U.dist_to_boundary(p)


# ==========================================
# CHAMBERS
# ==========================================
def chambers(ball: ConvexDomain, hyperplanes: Sequence[Tuple[Sequence[float], float]]) -> List[ConvexDomain]:
    """
    Open cells of ``ball`` minus the hyperplanes, split one hyperplane at a
    time by sign. Cells whose inscribed radius is below CHAMBER_MIN_RADIUS
    are empty. Each returned cell records its sign vector (+1 means
    normal . x > offset).
    """
    dim = ball.ambient_dim
    cells: List[Tuple[np.ndarray, np.ndarray, Tuple[int, ...]]] = [(ball.normals, ball.offsets, ())]
    for normal, offset in hyperplanes:
        normal = as_point(normal, dim)
        scale = np.linalg.norm(normal)
        if scale == 0:
            raise ParameterError("❌ Hyperplane normal must be nonzero")
        normal, offset = normal / scale, float(offset) / scale
        split = []
        for normals, offsets, signs in cells:
            for sign in (-1, 1):
                child_n = np.vstack([normals, -normal if sign > 0 else normal])
                child_b = np.append(offsets, -offset if sign > 0 else offset)
                _, radius = chebyshev(ball.center, ball.radius, child_n, child_b, dim)
                if radius > CHAMBER_MIN_RADIUS:
                    split.append((child_n, child_b, signs + (sign,)))
        cells = split
    log.debug(f"{len(cells)} chambers from {len(hyperplanes)} hyperplanes")
    return [
        ConvexDomain(dim, center=ball.center, radius=ball.radius, normals=n, offsets=b, signs=s)
        for n, b, s in cells
    ]


def locate_chamber(cells: Sequence[ConvexDomain], p: Sequence[float]) -> int:
    """Index of the cell with the largest slack at p (-1 if p is in none)."""
    slacks = [cell.min_slack(p) for cell in cells]
    best = int(np.argmax(slacks))
    return best if slacks[best] >= -config.EPS_GEO else -1


# ==========================================
# JSON IO
# ==========================================
def load_arrangement(path: str) -> Arrangement:
    with open(path, "r", encoding="utf-8") as f:
        return Arrangement.from_dict(json.load(f))


def load_domain(path: str) -> ConvexDomain:
    with open(path, "r", encoding="utf-8") as f:
        return ConvexDomain.from_dict(json.load(f))
