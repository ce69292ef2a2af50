"""
Grid-level checks on GridField samples: ball sup/mean, the Jensen gap and
its exponent, Lelong mass ratios, mollification with its curvature defect,
the conformal-distance (Campanato) check and log-modulus fitting.

Balls are node sets {node : |node - x| <= r}. Masked nodes are left out of
every ball and every stencil.
"""

import logging
import math
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, stats
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from logmodcert.errors import DomainError, HypothesisError, ParameterError
from logmodcert.gridfield import GridField

log = logging.getLogger(__name__)

MIN_FIT_SCALES = 4
EXPONENT_SLACK = 0.1
DYADIC_SLACK = 1.1            # fine-scale dyadic differences may exceed the coarse-scale C5 by 10%
LELONG_GROWTH_LIMIT = 1.25
LELONG_MASS_THRESHOLD = 0.1   # fraction of 2 pi flagged as positive mass
DENOM_MIN_WEIGHT = 0.5        # mollified nodes need half the kernel weight on unmasked nodes
GEODESIC_STENCIL = ((1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1))


# ==========================================
# BALLS
# ==========================================
@lru_cache(maxsize=64)
def _footprint(radius_nodes: float, ndim: int, strict: bool) -> np.ndarray:
    R = int(math.floor(radius_nodes + 1e-9))
    ax = np.arange(-R, R + 1)
    grids = np.meshgrid(*([ax] * ndim), indexing="ij")
    dist = np.sqrt(sum(g.astype(float) ** 2 for g in grids))
    return dist < radius_nodes - 1e-12 if strict else dist <= radius_nodes + 1e-9


def ball_footprint(radius: float, h: float, ndim: int, strict: bool = False) -> np.ndarray:
    """Boolean stencil of grid offsets k with |k| h <= radius (< radius if strict)."""
    return _footprint(round(radius / h, 12), ndim, strict)


def _check_ball_inside(u: GridField, x: np.ndarray, radius: float, pad: float = 0.0) -> None:
    tol = 1e-9 * u.h
    if np.any(x - radius - pad < u.lo - tol) or np.any(x + radius + pad > u.hi + tol):
        raise DomainError(f"❌ Ball of radius {radius:g} around {x.tolist()} exits the grid box")


def _ball_block(u: GridField, x: Sequence[float], radius: float) -> Tuple[Tuple[slice, ...], np.ndarray]:
    x = np.asarray(x, dtype=float).reshape(-1)
    i_lo = np.maximum(np.ceil((x - radius - u.lo) / u.h - 1e-9).astype(int), 0)
    i_hi = np.minimum(np.floor((x + radius - u.lo) / u.h + 1e-9).astype(int), np.asarray(u.shape) - 1)
    block = tuple(slice(a, b + 1) for a, b in zip(i_lo, i_hi))
    axes = [u.lo[i] + u.h * np.arange(s.start, s.stop) for i, s in enumerate(block)]
    grids = np.meshgrid(*axes, indexing="ij")
    dist = np.sqrt(sum((g - c) ** 2 for g, c in zip(grids, x)))
    return block, dist <= radius * (1.0 + 1e-12)


def _ball_values(u: GridField, x: Sequence[float], radius: float) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if radius < u.h * (1.0 - 1e-9):
        raise ParameterError(f"❌ Ball radius {radius:g} is below the grid spacing {u.h:g}")
    _check_ball_inside(u, x, radius)
    block, inside = _ball_block(u, x, radius)
    sel = inside & u.mask[block]
    if not np.any(sel):
        raise DomainError("❌ No unmasked nodes in the ball")
    return u.values[block][sel]


def sup_ball(u: GridField, x: Sequence[float], s: float) -> float:
    return float(np.max(_ball_values(u, x, s)))


def mean_ball(u: GridField, x: Sequence[float], r: float) -> float:
    return float(np.mean(_ball_values(u, x, r)))


def _crop(u: GridField, region: Optional[Tuple[slice, ...]], margin: int) -> Tuple[Tuple[slice, ...], Tuple[slice, ...]]:
    """Crop around ``region`` with a margin; returns (crop, region inside the crop)."""
    if region is None:
        region = tuple(slice(0, n) for n in u.shape)
    crop = tuple(slice(max(0, s.start - margin), min(n, s.stop + margin)) for s, n in zip(region, u.shape))
    inner = tuple(slice(s.start - c.start, s.stop - c.start) for s, c in zip(region, crop))
    return crop, inner


def sup_filter(u: GridField, s: float, region: Optional[Tuple[slice, ...]] = None) -> np.ndarray:
    """Ball sup at every node of ``region`` (masked nodes never win)."""
    fp = ball_footprint(s, u.h, u.ndim)
    crop, inner = _crop(u, region, fp.shape[0] // 2)
    vals = np.where(u.mask[crop], u.values[crop], -np.inf)
    return ndimage.maximum_filter(vals, footprint=fp, mode="constant", cval=-np.inf)[inner]


def mean_filter(u: GridField, r: float, region: Optional[Tuple[slice, ...]] = None) -> np.ndarray:
    fp = ball_footprint(r, u.h, u.ndim).astype(float)
    crop, inner = _crop(u, region, fp.shape[0] // 2)
    mask = u.mask[crop]
    num = ndimage.convolve(np.where(mask, u.values[crop], 0.0), fp, mode="constant", cval=0.0)
    den = ndimage.convolve(mask.astype(float), fp, mode="constant", cval=0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return (num / den)[inner]


def modulus_of_continuity(u: GridField, r: float) -> float:
    """omega_u(r): largest u(y) - u(x) over unmasked nodes with |x - y| <= r."""
    sup = sup_filter(u, r)
    diff = np.where(u.mask, sup - u.values, -np.inf)
    return float(max(np.max(diff), 0.0))


# ==========================================
# JENSEN GAP
# ==========================================
def _box_region(u: GridField, k_lo: np.ndarray, k_hi: np.ndarray) -> Tuple[slice, ...]:
    i_lo = np.ceil((k_lo - u.lo) / u.h - 1e-9).astype(int)
    i_hi = np.floor((k_hi - u.lo) / u.h + 1e-9).astype(int)
    return tuple(slice(int(a), int(b) + 1) for a, b in zip(i_lo, i_hi))


def jensen_margin(u: GridField, k_lo: Sequence[float], k_hi: Sequence[float]) -> float:
    """r0 = margin / 4, the margin being the distance from K to the box boundary."""
    k_lo, k_hi = np.asarray(k_lo, dtype=float), np.asarray(k_hi, dtype=float)
    margin = float(min(np.min(k_lo - u.lo), np.min(u.hi - k_hi)))
    if margin <= 0:
        raise DomainError("❌ Inner box K must lie strictly inside the grid box")
    return margin / 4.0


def jensen_gap(u: GridField, k_lo: Sequence[float], k_hi: Sequence[float], s: float) -> float:
    """Grid estimate of int_K |sup_{B(x, s)} u - u(x)| dx (Lebesgue measure)."""
    r0 = jensen_margin(u, k_lo, k_hi)
    if s >= r0 ** 3:
        raise ParameterError(f"❌ Scale s={s:g} must be below r0^3={r0 ** 3:g}")
    if s < u.h * (1.0 - 1e-9):
        raise ParameterError(f"❌ Scale s={s:g} is below the grid spacing {u.h:g}")
    region = _box_region(u, np.asarray(k_lo, dtype=float), np.asarray(k_hi, dtype=float))
    sup = sup_filter(u, s, region)
    keep = u.mask[region]
    return float(np.sum(np.abs(sup - u.values[region])[keep]) * u.h ** u.ndim)


def _fit(x: np.ndarray, y: np.ndarray) -> Dict[str, Any]:
    res = stats.linregress(x, y)
    half = float(stats.t.ppf(0.975, len(x) - 2) * res.stderr) if len(x) > 2 else math.inf
    return {"slope": float(res.slope), "intercept": float(res.intercept), "stderr": float(res.stderr), "half_width": half}


def dyadic_scales(top: float, count: int) -> List[float]:
    return [top * 2.0 ** (-k) for k in range(count)]


def jensen_exponent(
    u: GridField,
    k_lo: Sequence[float],
    k_hi: Sequence[float],
    scales: Optional[Sequence[float]] = None,
    count: int = MIN_FIT_SCALES,
) -> Dict[str, Any]:
    """Fit gap(s) ~ C s^a over a dyadic ladder of scales and report a with a 95% interval."""
    if scales is None:
        scales = dyadic_scales(0.9 * jensen_margin(u, k_lo, k_hi) ** 3, count)
    scales = sorted(float(s) for s in scales)
    if len(scales) < MIN_FIT_SCALES:
        raise ParameterError(f"❌ Exponent fits need at least {MIN_FIT_SCALES} scales")
    gaps = [jensen_gap(u, k_lo, k_hi, s) for s in scales]
    monotone = all(b >= a - 1e-12 for a, b in zip(gaps, gaps[1:]))
    positive = np.array(gaps) > 0
    if np.sum(positive) < MIN_FIT_SCALES:
        exponent, fit = math.inf, {"stderr": 0.0, "half_width": 0.0}
    else:
        fit = _fit(np.log(np.array(scales)[positive]), np.log(np.array(gaps)[positive]))
        exponent = fit["slope"]
    log.debug(f"jensen gaps {gaps} -> exponent {exponent:.3f}")
    return {
        "scales": scales,
        "gaps": gaps,
        "exponent": exponent,
        "ci": [exponent - fit["half_width"], exponent + fit["half_width"]],
        "monotone": monotone,
    }


# ==========================================
# LAPLACIAN AND LELONG MASS
# ==========================================
def _interior(shape: Tuple[int, ...], width: int = 1) -> np.ndarray:
    inner = np.zeros(shape, dtype=bool)
    inner[tuple(slice(width, n - width) for n in shape)] = True
    return inner


def discrete_laplacian(u: GridField) -> Tuple[np.ndarray, np.ndarray]:
    """(2d+1)-point Laplacian and the nodes where its stencil is fully unmasked."""
    cross = ndimage.generate_binary_structure(u.ndim, 1)
    valid = _interior(u.shape) & ndimage.binary_erosion(u.mask, structure=cross, border_value=0)
    filled = np.where(u.mask, u.values, 0.0)
    lap = ndimage.laplace(filled, mode="nearest") / u.h ** 2
    return lap, valid


def laplacian_mass(u: GridField, x: Sequence[float], eps: float,
                   lap: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> float:
    """Sum of the discrete Laplacian times h^d over the valid nodes of B(x, eps)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_ball_inside(u, x, eps, pad=u.h)
    lap_arr, valid = discrete_laplacian(u) if lap is None else lap
    block, inside = _ball_block(u, x, eps)
    sel = inside & valid[block]
    return float(np.sum(lap_arr[block][sel]) * u.h ** u.ndim)


def lelong_ratio(v: GridField, x: Sequence[float], eps: float, omega_weight: float = 1.0,
                 lap: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> float:
    """eps^{-2n+2} (Laplacian mass of B(x, eps) + omega_weight vol(B(x, eps))), d = 2n."""
    if v.ndim % 2:
        raise ParameterError(f"❌ Lelong ratios need an even real dimension, got {v.ndim}")
    if eps < 2.0 * v.h * (1.0 - 1e-9):
        raise ParameterError(f"❌ eps={eps:g} is below twice the grid spacing ({2 * v.h:g})")
    n = v.ndim // 2
    mass = laplacian_mass(v, x, eps, lap)
    _, inside = _ball_block(v, np.asarray(x, dtype=float), eps)
    volume = float(np.sum(inside)) * v.h ** v.ndim
    return eps ** (-2 * n + 2) * (mass + omega_weight * volume)


def lelong_profile(v: GridField, x: Sequence[float], eps_list: Sequence[float],
                   omega_weight: float = 1.0) -> Dict[str, Any]:
    """
    lambda(eps) and lambda |log eps| along eps_list. ``bounded`` holds when
    the per-decade sup of lambda |log eps| grows by less than 25% from one
    decade to the next (toward small eps); ``positive_mass`` flags a
    Lelong-type point mass (unbounded, with lambda >= 0.1 * 2 pi at every eps).
    """
    lap = discrete_laplacian(v)
    eps_sorted = sorted((float(e) for e in eps_list), reverse=True)
    lam = [lelong_ratio(v, x, e, omega_weight, lap) for e in eps_sorted]
    weighted = [l * abs(math.log(e)) for l, e in zip(lam, eps_sorted)]
    decades: Dict[int, float] = {}
    for e, w in zip(eps_sorted, weighted):
        key = int(math.floor(math.log10(e) + 1e-9))
        decades[key] = max(decades.get(key, -math.inf), w)
    sups = [decades[k] for k in sorted(decades, reverse=True)]
    growth = 0.0
    for prev, cur in zip(sups, sups[1:]):
        if prev > 1e-300:
            growth = max(growth, cur / prev)
        elif cur > 1e-300:
            growth = math.inf
    bounded = len(sups) < 2 or growth < LELONG_GROWTH_LIMIT
    positive = not bounded and min(lam) / (2.0 * math.pi) > LELONG_MASS_THRESHOLD
    return {
        "eps": eps_sorted,
        "lambda": lam,
        "lambda_log": weighted,
        "decade_sups": sups,
        "max_growth": growth,
        "bounded": bool(bounded),
        "positive_mass": bool(positive),
    }


# ==========================================
# MOLLIFICATION
# ==========================================
def bump_kernel(eps: float, h: float, ndim: int) -> np.ndarray:
    """Normalized weights exp(-1/(1 - |zeta|^2/eps^2)) on offsets with |zeta| < eps."""
    fp = ball_footprint(eps, h, ndim, strict=True)
    R = fp.shape[0] // 2
    ax = np.arange(-R, R + 1) * h
    grids = np.meshgrid(*([ax] * ndim), indexing="ij")
    t = sum(g ** 2 for g in grids) / eps ** 2
    with np.errstate(divide="ignore", over="ignore"):
        w = np.where(fp, np.exp(-1.0 / np.where(fp, 1.0 - t, 1.0)), 0.0)
    return w / np.sum(w)


def _second_differences(values: np.ndarray, h: float) -> Dict[Tuple[int, int], np.ndarray]:
    d = values.ndim
    out: Dict[Tuple[int, int], np.ndarray] = {}
    for i in range(d):
        out[(i, i)] = (np.roll(values, -1, i) - 2.0 * values + np.roll(values, 1, i)) / h ** 2
        for j in range(i + 1, d):
            pp = np.roll(np.roll(values, -1, i), -1, j)
            pm = np.roll(np.roll(values, -1, i), 1, j)
            mp = np.roll(np.roll(values, 1, i), -1, j)
            mm = np.roll(np.roll(values, 1, i), 1, j)
            out[(i, j)] = (pp - pm - mp + mm) / (4.0 * h ** 2)
    return out


def complex_hessian_min_eig(u: GridField) -> Tuple[np.ndarray, np.ndarray]:
    """
    Smallest eigenvalue of the discrete complex Hessian and the nodes where
    it is defined. Real coordinates pair as z_j = x_{2j} + i x_{2j+1};
    n = 1 gives Laplacian / 4, n = 2 the 2x2 Hermitian matrix.
    """
    if u.ndim not in (2, 4):
        raise ParameterError(f"❌ Complex Hessians are supported for n = 1, 2 (real dim {u.ndim})")
    filled = np.where(u.mask, u.values, 0.0)
    valid = _interior(u.shape) & ndimage.binary_erosion(u.mask, structure=np.ones((3,) * u.ndim, dtype=bool), border_value=0)
    dd = _second_differences(filled, u.h)
    if u.ndim == 2:
        return 0.25 * (dd[(0, 0)] + dd[(1, 1)]), valid
    a = 0.25 * (dd[(0, 0)] + dd[(1, 1)])
    c = 0.25 * (dd[(2, 2)] + dd[(3, 3)])
    b_re = 0.25 * (dd[(0, 2)] + dd[(1, 3)])
    b_im = 0.25 * (dd[(0, 3)] - dd[(1, 2)])
    return 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b_re ** 2 + b_im ** 2), valid


def curvature_defect(u: GridField, theta_const: float = 0.0) -> float:
    """-min over valid nodes of the smallest complex-Hessian eigenvalue of u + theta_const."""
    eig, valid = complex_hessian_min_eig(u)
    if not np.any(valid):
        raise DomainError("❌ No node has a complete Hessian stencil")
    return float(-np.min(eig[valid] + theta_const))


def mollify(u: GridField, eps: float, theta_const: float = 0.0) -> Tuple[GridField, Dict[str, Any]]:
    """
    Masked convolution with the bump kernel. Only nodes at distance >= eps
    from the box boundary (and with most kernel weight on unmasked nodes)
    are kept in the result's mask.
    """
    if eps < 2.0 * u.h * (1.0 - 1e-9):
        raise ParameterError(f"❌ eps={eps:g} is too small for grid spacing {u.h:g}")
    kernel = bump_kernel(eps, u.h, u.ndim)
    R = kernel.shape[0] // 2
    num = ndimage.convolve(np.where(u.mask, u.values, 0.0), kernel, mode="constant", cval=0.0)
    den = ndimage.convolve(u.mask.astype(float), kernel, mode="constant", cval=0.0)
    valid = _interior(u.shape, R) & (den > DENOM_MIN_WEIGHT)
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(valid, num / den, np.nan)
    smooth = GridField(u.lo, u.hi, values, valid, u.sup_bound)
    both = valid & u.mask
    sup_diff = float(np.max(np.abs(values[both] - u.values[both]))) if np.any(both) else 0.0
    defect = curvature_defect(smooth, theta_const)
    report = {
        "eps": eps,
        "sup_diff": sup_diff,
        "modulus": modulus_of_continuity(u, eps),
        "curvature_defect": defect,
        "defect_log": defect * abs(math.log(eps)),
    }
    return smooth, report


# ==========================================
# CONFORMAL DISTANCE (CAMPANATO ITERATION)
# ==========================================
def _fill_from_neighbours(values: np.ndarray, valid: np.ndarray, passes: int = 3) -> Tuple[np.ndarray, np.ndarray]:
    ring = np.ones((3,) * values.ndim)
    ring[(1,) * values.ndim] = 0.0
    values = np.where(valid, values, 0.0)
    valid = valid.copy()
    for _ in range(passes):
        if np.all(valid):
            break
        total = ndimage.convolve(np.where(valid, values, 0.0), ring, mode="constant", cval=0.0)
        count = ndimage.convolve(valid.astype(float), ring, mode="constant", cval=0.0)
        take = ~valid & (count > 0)
        values = np.where(take, total / np.where(count > 0, count, 1.0), values)
        valid = valid | take
    return values, valid


def conformal_factor(u: GridField, theta_const: float, delta: float) -> np.ndarray:
    """rho = Laplacian(u)/4 + theta_const + delta; masked nodes take their neighbours' mean."""
    lap, valid = discrete_laplacian(u)
    rho, filled = _fill_from_neighbours(0.25 * lap + theta_const + delta, valid)
    if not np.all(filled):
        raise DomainError("❌ Conformal factor undefined on an isolated masked region")
    return rho


def geodesic_distances(u: GridField, rho: np.ndarray, base_index: Tuple[int, int]) -> np.ndarray:
    """Shortest-path distance from a node on the 16-neighbour graph with weights |dx| (sqrt(rho_i) + sqrt(rho_j)) / 2."""
    ny, nx = u.shape
    ids = np.arange(ny * nx).reshape(ny, nx)
    root = np.sqrt(rho)
    src, dst, wts = [], [], []
    for di, dj in GEODESIC_STENCIL:
        a = ids[max(0, -di):ny - max(0, di), max(0, -dj):nx - max(0, dj)]
        b = ids[max(0, -di) + di:ny - max(0, di) + di, max(0, -dj) + dj:nx - max(0, dj) + dj]
        ra = root.reshape(-1)[a.reshape(-1)]
        rb = root.reshape(-1)[b.reshape(-1)]
        src.append(a.reshape(-1))
        dst.append(b.reshape(-1))
        wts.append(u.h * math.hypot(di, dj) * 0.5 * (ra + rb))
    graph = csr_matrix((np.concatenate(wts), (np.concatenate(src), np.concatenate(dst))), shape=(ny * nx, ny * nx))
    dist = dijkstra(graph, directed=False, indices=ids[base_index])
    return dist.reshape(ny, nx)


def _node_radius(u: GridField, base: np.ndarray) -> np.ndarray:
    return np.sqrt(sum((g - c) ** 2 for g, c in zip(np.meshgrid(*u.axes(), indexing="ij"), base)))


def campanato_distance_check(
    u: GridField,
    theta_const: float,
    delta: float,
    M: float,
    C0: float,
    base: Optional[Sequence[float]] = None,
    t_range: Tuple[float, float] = (2.0 ** -8, 2.0 ** -4),
) -> Dict[str, Any]:
    """
    1. check omega_u(t) <= C0 |log t|^{-2M} on dyadic scales 2h..16h;
    2. build the conformal factor rho and require rho > 0;
    3. geodesic distance d from the base node;
    4. dyadic ball averages d_r at the base and their differences; C5 is
       fitted on the coarser half of the window and every difference must
       stay below DYADIC_SLACK * C5 |log t|^{-(M-1)};
    5. fit sup_{|x - x0| <= t} d against |log t| over the fixed t-range.

    Passes when the dyadic bound holds and the fitted exponent is >= M - 1 - 0.1.
    """
    if u.ndim != 2:
        raise ParameterError("❌ The distance check runs on 2D charts only")
    if not 0 < t_range[0] < t_range[1] < 1:
        raise ParameterError(f"❌ Invalid t-range {t_range}")

    hyp_scales = [u.h * 2.0 ** k for k in range(1, 5)]
    hyp_ratios = [modulus_of_continuity(u, t) * abs(math.log(t)) ** (2 * M) / C0 for t in hyp_scales]
    if max(hyp_ratios) > 1.0 + 1e-9:
        raise HypothesisError(
            f"❌ Modulus hypothesis fails: omega(t)|log t|^(2M)/C0 reaches {max(hyp_ratios):.4g}"
        )

    rho = conformal_factor(u, theta_const, delta)
    if np.min(rho) <= 0:
        raise HypothesisError(f"❌ Nonpositive conformal factor (min {np.min(rho):.4g})")

    base = np.zeros(2) if base is None else np.asarray(base, dtype=float)
    base_index = u.nearest_index(base)
    base = u.lo + u.h * np.asarray(base_index)
    dist = geodesic_distances(u, rho, base_index)
    radius = _node_radius(u, base)

    scales = []
    t = t_range[1]
    while t >= t_range[0] * (1 - 1e-12):
        scales.append(t)
        t /= 2.0
    scales = sorted(scales)
    if len(scales) < MIN_FIT_SCALES:
        raise ParameterError(f"❌ t-range {t_range} holds fewer than {MIN_FIT_SCALES} dyadic scales")
    for t in scales:
        _check_ball_inside(u, base, t)
    sups = [float(np.max(dist[radius <= t * (1 + 1e-12)])) for t in scales]
    averages = [float(np.mean(dist[radius <= t * (1 + 1e-12)])) for t in scales]
    diffs = [abs(b - a) for a, b in zip(averages, averages[1:])]
    weighted = [dd * abs(math.log(t)) ** (M - 1) for dd, t in zip(diffs, scales[1:])]
    coarse = weighted[len(weighted) // 2:]
    C5 = max(coarse)
    dyadic_ratios = [w / C5 if C5 > 0 else (0.0 if w == 0 else math.inf) for w in weighted]
    dyadic_ok = max(dyadic_ratios) <= DYADIC_SLACK

    fit = _fit(np.log(np.abs(np.log(scales))), np.log(sups))
    exponent = -fit["slope"]
    C_final = max(s * abs(math.log(t)) ** (M - 1) for s, t in zip(sups, scales))
    passed = dyadic_ok and exponent >= M - 1 - EXPONENT_SLACK
    log.info(f"{'✅' if passed else '❌'} geodesic exponent {exponent:.3f} (target >= {M - 1 - EXPONENT_SLACK:.2f}), "
             f"dyadic ratio {max(dyadic_ratios):.3f}")
    return {
        "hypothesis_max_ratio": max(hyp_ratios),
        "min_rho": float(np.min(rho)),
        "scales": scales,
        "sup_distance": sups,
        "ball_averages": averages,
        "dyadic_differences": diffs,
        "C5": C5,
        "dyadic_ratios": dyadic_ratios,
        "dyadic_ok": bool(dyadic_ok),
        "exponent": exponent,
        "ci": [exponent - fit["half_width"], exponent + fit["half_width"]],
        "C_final": C_final,
        "passed": bool(passed),
    }


# ==========================================
# LOG-MODULUS FIT
# ==========================================
def fit_log_modulus(
    u: GridField,
    m_grid: Optional[Sequence[float]] = None,
    scales: Optional[Sequence[float]] = None,
) -> Dict[str, Any]:
    """
    Fit omega_u(t) ~ C |log t|^{-M} over dyadic separations. Constant fields
    give M = inf. A fit beyond M_max, the largest grid value below
    0.9 * mean |log t|, is not resolvable from power-law decay and is
    reported as saturated ("≥ M_max").
    """
    if scales is None:
        limit = min(0.5, 0.25 * float(np.min(u.hi - u.lo)))
        scales = [u.h * 2.0 ** k for k in range(1, 6) if u.h * 2.0 ** k <= limit]
    scales = sorted(float(t) for t in scales)
    if len(scales) < MIN_FIT_SCALES:
        raise ParameterError(f"❌ Need at least {MIN_FIT_SCALES} separations below the box size")
    if scales[-1] >= 1:
        raise ParameterError("❌ Separations must stay below 1")
    m_grid = np.arange(0.5, 40.5, 0.5) if m_grid is None else np.asarray(m_grid, dtype=float)
    omegas = [modulus_of_continuity(u, t) for t in scales]
    logs = np.abs(np.log(scales))
    resolvable = m_grid[m_grid <= 0.9 * float(np.mean(logs))]
    M_max = float(np.max(resolvable)) if resolvable.size else float(np.min(m_grid))
    if max(omegas) <= 0:
        return {"C": 0.0, "M": math.inf, "M_report": "inf", "M_max": M_max, "saturated": False,
                "scales": scales, "omegas": omegas, "ci": [math.inf, math.inf]}
    positive = np.array(omegas) > 0
    fit = _fit(np.log(logs[positive]), np.log(np.array(omegas)[positive]))
    M = -fit["slope"]
    saturated = M > M_max
    return {
        "C": math.exp(fit["intercept"]),
        "M": M,
        "M_report": f"≥ {M_max:g}" if saturated else f"{M:.3f}",
        "M_max": M_max,
        "saturated": bool(saturated),
        "scales": scales,
        "omegas": omegas,
        "ci": [M - fit["half_width"], M + fit["half_width"]],
    }


# ==========================================
# TEST FIELDS
# ==========================================
def _radius(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(points, axis=-1)


def clipped_log(points: np.ndarray, floor: float = -1.0) -> np.ndarray:
    """max(log|z|, floor)."""
    r = _radius(points)
    with np.errstate(divide="ignore"):
        return np.maximum(np.log(r), floor)


def log_abs(points: np.ndarray, cutoff: float) -> np.ndarray:
    """log(max(|z|, cutoff)): a discretized unit point mass at 0."""
    return np.log(np.maximum(_radius(points), cutoff))


def log_log(points: np.ndarray) -> np.ndarray:
    """-log(-log|z|) near 0 (|z| < 1/e), zero Lelong number with mass ~ 2 pi / |log eps|."""
    r = np.maximum(_radius(points), 1e-300)
    return -np.log(np.maximum(-np.log(r), 1.0))


def radial_log_power(points: np.ndarray, c: float, power: float) -> np.ndarray:
    """c (1 + |log|z||)^{-power}, 0 at the origin."""
    r = _radius(points)
    with np.errstate(divide="ignore"):
        return np.where(r > 0, c * (1.0 + np.abs(np.log(np.where(r > 0, r, 1.0)))) ** (-power), 0.0)


def inverse_log_power(points: np.ndarray, power: float) -> np.ndarray:
    """min(1, |log|x||^{-power}), 0 at the origin."""
    r = _radius(points)
    with np.errstate(divide="ignore"):
        lg = np.abs(np.log(np.where(r > 0, r, 1.0)))
        return np.where(r > 0, np.minimum(1.0, np.where(lg > 0, lg, 1e-300) ** (-power)), 0.0)


def planted_jump_field(lo: Sequence[float], hi: Sequence[float], n: int, seed: int = 0) -> GridField:
    """Jumps between neighbouring nodes at grid scale (random 0/1 values)."""
    rng = np.random.default_rng(seed)
    ndim = len(lo)
    values = rng.integers(0, 2, size=(n,) * ndim).astype(float)
    return GridField(lo, hi, values, sup_bound=1.0)


FIELD_LIBRARY: Dict[str, Callable[..., np.ndarray]] = {
    "clipped-log": clipped_log,
    "log": log_abs,
    "log-log": log_log,
    "radial-log-power": radial_log_power,
    "inverse-log-power": inverse_log_power,
}
