import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logmodcert.errors import CodimensionError, DimensionMismatchError, DomainError, ParameterError
from logmodcert.geometry import (
    AffineSubspace,
    Arrangement,
    ConvexDomain,
    chambers,
    coordinate_subspace,
    dist_to_affine,
    dist_to_boundary,
    dist_to_segment,
    hyperplane_containing,
    load_arrangement,
    locate_chamber,
    segment_closest_point,
)

coords = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)


def z_axis():
    return coordinate_subspace(3, [0, 1])


# ==========================================
# FLATS
# ==========================================
def test_distance_to_z_axis():
    assert math.isclose(dist_to_affine([3, 4, 5], z_axis()), 5.0)
    assert dist_to_affine([0, 0, -2], z_axis()) == 0.0


def test_distance_to_line_in_r4():
    N = coordinate_subspace(4, [0, 1, 2])
    assert math.isclose(dist_to_affine([1, 1, 0, 0], N), math.sqrt(2.0))


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        dist_to_affine([1, 2], z_axis())


def test_dependent_directions_rejected():
    with pytest.raises(ParameterError):
        AffineSubspace([0, 0, 0], [[1, 0, 0], [2, 0, 0]])


def test_directions_are_orthonormalized():
    N = AffineSubspace([0, 0, 0], [[1, 1, 0], [1, 0, 0]])
    assert np.allclose(N.directions @ N.directions.T, np.eye(2), atol=1e-12)
    assert N.codim == 1


@given(st.lists(coords, min_size=3, max_size=3))
@settings(max_examples=200)
def test_projection_is_idempotent_and_zero_distance(p):
    N = AffineSubspace([0.5, -1.0, 0.25], [[1.0, 2.0, 0.0]])
    q = N.project(p)
    assert N.dist(q) <= 1e-10
    assert np.allclose(N.project(q), q, atol=1e-12)


@given(st.lists(coords, min_size=3, max_size=3), st.lists(coords, min_size=3, max_size=3),
       st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=200)
def test_distance_to_flat_is_convex_along_segments(a, b, t):
    N = AffineSubspace([0.1, 0.2, 0.3], [[0.0, 1.0, 1.0]])
    a, b = np.array(a), np.array(b)
    eta = t * a + (1 - t) * b
    assert N.dist(eta) <= t * N.dist(a) + (1 - t) * N.dist(b) + 1e-10


def test_segment_closest_point_is_exact():
    t, d = segment_closest_point([1, 0, 0], [-1, 0, 1], z_axis())
    assert math.isclose(t, 0.5) and d == pytest.approx(0.0, abs=1e-15)
    t, d = segment_closest_point([1, 0, 0], [1, 1, 0], z_axis())
    assert t == 0.0 and math.isclose(d, 1.0)
    assert math.isclose(dist_to_segment([0, 1], [-1, 0], [1, 0]), 1.0)


# ==========================================
# HYPERPLANES
# ==========================================
def test_hyperplane_containing_z_axis():
    normal, offset = hyperplane_containing(z_axis())
    assert np.allclose(normal, [1, 0, 0]) and offset == 0.0


def test_hyperplane_containing_point():
    normal, offset = hyperplane_containing(AffineSubspace([1.0, 2.0]))
    assert np.allclose(normal, [1, 0]) and math.isclose(offset, 1.0)


def test_hyperplane_containing_diagonal_line():
    N = AffineSubspace([0.0, 0.0, 1.0], [[1.0, 1.0, 0.0]])
    normal, offset = hyperplane_containing(N)
    for s in np.linspace(-3, 3, 7):
        p = N.base_point + s * N.directions[0]
        assert abs(np.dot(normal, p) - offset) < 1e-10


def test_full_dimensional_flat_has_no_hyperplane():
    with pytest.raises(CodimensionError):
        hyperplane_containing(AffineSubspace([0, 0], np.eye(2)))


# ==========================================
# ARRANGEMENTS
# ==========================================
def test_arrangement_requires_consistent_dimension():
    with pytest.raises(DimensionMismatchError):
        Arrangement([z_axis(), coordinate_subspace(4, [0, 1])])
    with pytest.raises(ParameterError):
        Arrangement([])


def test_arrangement_codim_check():
    plane = coordinate_subspace(3, [0])
    with pytest.raises(CodimensionError):
        Arrangement([z_axis(), plane]).require_codim(2)


def test_arrangement_dists_match_scalar(tmp_path):
    A = Arrangement([coordinate_subspace(4, [0, 1]), coordinate_subspace(4, [2, 3])])
    pts = np.random.default_rng(0).normal(size=(20, 4))
    assert np.allclose(A.dists(pts), [A.dist(p) for p in pts])
    path = tmp_path / "a.json"
    path.write_text(json.dumps(A.to_dict()))
    B = load_arrangement(str(path))
    assert len(B) == 2 and np.allclose(B.dists(pts), A.dists(pts))


def test_arrangement_rejects_wrong_ambient_dim():
    raw = {"ambient_dim": 4, "subspaces": [z_axis().to_dict()]}
    with pytest.raises(DimensionMismatchError):
        Arrangement.from_dict(raw)


# ==========================================
# CONVEX DOMAINS
# ==========================================
def test_ball_boundary_distance():
    U = ConvexDomain.ball([0, 0, 0], 1.0)
    assert math.isclose(dist_to_boundary([0, 0, 0], U), 1.0)
    assert math.isclose(dist_to_boundary([0.25, 0, 0], U), 0.75)
    with pytest.raises(DomainError):
        dist_to_boundary([2, 0, 0], U)


def test_square_boundary_distance():
    U = ConvexDomain.box([0, 0], [1, 1])
    assert math.isclose(dist_to_boundary([0.3, 0.4], U), 0.3)
    center, r = U.chebyshev_center()
    assert np.allclose(center, [0.5, 0.5], atol=1e-8) and math.isclose(r, 0.5, rel_tol=1e-8)


@given(st.floats(0.0, 1.0), st.lists(st.floats(-0.6, 0.6), min_size=2, max_size=2),
       st.lists(st.floats(-0.6, 0.6), min_size=2, max_size=2))
@settings(max_examples=200)
def test_boundary_distance_is_concave(t, a, b):
    U = ConvexDomain(2, center=[0, 0], radius=1.0, normals=[[1, 1]], offsets=[0.5])
    a, b = np.array(a), np.array(b)
    if not (U.contains(a) and U.contains(b)):
        return
    mid = t * a + (1 - t) * b
    assert U.dist_to_boundary(mid) >= t * U.dist_to_boundary(a) + (1 - t) * U.dist_to_boundary(b) - 1e-10


def test_domain_validation():
    with pytest.raises(DomainError):
        ConvexDomain.from_halfspaces([[1, 0]], [1.0])
    with pytest.raises(DomainError):
        ConvexDomain.box([0, 0], [0, 1])
    with pytest.raises(ParameterError):
        ConvexDomain(2, center=[0, 0])


def test_domain_round_trip_and_sampling():
    U = ConvexDomain(2, center=[0, 0], radius=1.0, normals=[[0, 1]], offsets=[0.2])
    V = ConvexDomain.from_dict(U.to_dict())
    pts = V.sample_interior(np.random.default_rng(1), 100)
    assert pts.shape == (100, 2)
    assert np.all(U.contains_many(pts, strict=True))
    assert V.diameter_bound() <= 2.0 + 1e-12


# ==========================================
# CHAMBERS
# ==========================================
def test_chambers_counts():
    disk = ConvexDomain.ball([0, 0], 1.0)
    assert len(chambers(disk, [])) == 1
    assert len(chambers(disk, [([1, 0], 0.0)])) == 2
    lines = [([1, 0], 0.1), ([0, 1], -0.2), ([1, 1], 0.3)]
    assert len(chambers(disk, lines)) == 7


def test_every_point_lies_in_one_chamber():
    disk = ConvexDomain.ball([0, 0], 1.0)
    lines = [([1, 0], 0.1), ([0, 1], -0.2), ([1, 1], 0.3)]
    cells = chambers(disk, lines)
    rng = np.random.default_rng(3)
    for p in disk.sample_interior(rng, 300):
        inside = [cell.min_slack(p) > 1e-9 for cell in cells]
        assert sum(inside) == 1
        assert locate_chamber(cells, p) == inside.index(True)
