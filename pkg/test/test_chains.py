import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from logmodcert.chains import (
    PolygonalChain,
    build_safe_chain,
    certify_random_instances,
    chain_constant,
    classify_waypoint,
    random_layout,
    verify_chain,
    waypoint_single_subspace,
)
from logmodcert.errors import CodimensionError, ObstacleContactError, ParameterError
from logmodcert.geometry import Arrangement, coordinate_subspace, dist_to_segment, segment_clearance

point3 = st.lists(st.floats(min_value=-2.0, max_value=2.0, allow_nan=False), min_size=3, max_size=3)


def z_axis():
    return coordinate_subspace(3, [0, 1])


def sampled_min_clearance(a, b, N, samples=1000):
    t = np.linspace(0.0, 1.0, samples)[:, None]
    pts = np.asarray(a) + t * (np.asarray(b) - np.asarray(a))
    return min(N.dist(p) for p in pts)


# ==========================================
# SINGLE-FLAT DETOUR
# ==========================================
def test_coincident_endpoints_need_no_detour():
    w, case = classify_waypoint([1, 2, 3], [1, 2, 3], z_axis())
    assert case == 1 and np.array_equal(w, [1, 2, 3])


def test_segment_through_axis_lifts_off_plane():
    x, y = np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])
    w, case = classify_waypoint(x, y, z_axis())
    assert case == 2
    assert np.allclose(np.abs(w), [0, 1, 0])
    N = z_axis()
    for a, b in ((x, w), (w, y)):
        assert 2.0 * sampled_min_clearance(a, b, N, 10_000) >= 1.0 - 1e-12
    assert np.linalg.norm(x - w) + np.linalg.norm(w - y) <= 3.0 * np.linalg.norm(x - y)


def test_clear_segment_keeps_start():
    x, y = [1.0, 0, 0], [1.0, 1.0, 0]
    w, case = classify_waypoint(x, y, z_axis())
    assert case == 1 and np.array_equal(w, x)
    assert sampled_min_clearance(x, y, z_axis()) >= 0.5


def test_skew_segment_uses_common_perpendicular():
    x, y = [1.0, -1.0, 0.0], [0.0, 1.0, 1.0]
    w, case = classify_waypoint(x, y, coordinate_subspace(3, [0, 1]))
    assert case == 3
    R = min(z_axis().dist(x), z_axis().dist(y))
    assert 2.0 * min(segment_clearance(x, w, z_axis()), segment_clearance(w, y, z_axis())) >= R - 1e-12


@given(point3, point3, st.sampled_from([1.0, 2.0, 5.0]))
@settings(max_examples=300, deadline=None)
def test_detour_inequalities(x, y, r):
    N = z_axis()
    x, y = np.array(x), np.array(y)
    assume(N.dist(x) > 1e-3 and N.dist(y) > 1e-3)
    w = waypoint_single_subspace(x, y, N, r)
    R = min(N.dist(x), N.dist(y))
    sep = np.linalg.norm(x - y)
    assert np.linalg.norm(x - w) + np.linalg.norm(w - y) <= 3.0 * sep + 1e-10
    clearance = min(segment_clearance(x, w, N), segment_clearance(w, y, N))
    assert 2.0 * r * clearance >= R - 1e-9
    for a, b in ((x, w), (w, y)):
        for t in np.linspace(0.0, 1.0, 11):
            xi = a + t * (b - a)
            assert R >= r * dist_to_segment(xi, x, y) - 1e-9


def test_detour_errors():
    with pytest.raises(ObstacleContactError):
        waypoint_single_subspace([0, 0, 1], [1, 0, 0], z_axis())
    with pytest.raises(CodimensionError):
        waypoint_single_subspace([1, 0, 0], [0, 1, 0], coordinate_subspace(3, [0]))
    with pytest.raises(ParameterError):
        waypoint_single_subspace([1, 0, 0], [0, 1, 0], z_axis(), r=0.5)


# ==========================================
# SAFE CHAINS
# ==========================================
def test_chain_constants():
    assert chain_constant(1) == 6.0
    assert chain_constant(2) == 80.0
    assert chain_constant(3) == 8.0 * (80.0 + 16.0)
    with pytest.raises(ParameterError):
        chain_constant(0)


def test_trivial_chain():
    A = Arrangement([z_axis(), coordinate_subspace(3, [1, 2], base=[0, 0, 5])])
    chain, cert = build_safe_chain([1, 1, 1], [1, 1, 1], A)
    assert len(chain) == 4 ** 2 + 1
    assert chain.length() == 0.0 and cert.passed


def test_chain_around_z_axis():
    chain, cert = build_safe_chain([1, 0, 0], [-1, 0, 0], Arrangement([z_axis()]))
    assert len(chain) == 5
    assert cert.clearance_constant == 6.0
    assert cert.measured_length <= 3.0 * 2.0 + 1e-12
    assert cert.measured_min_clearance_ratio >= 1.0
    assert cert.passed and cert.cases == {"1": 0, "2": 1, "3": 0}


def test_two_planes_in_r4_random_pairs():
    A = Arrangement([coordinate_subspace(4, [0, 1]), coordinate_subspace(4, [2, 3])])
    rng = np.random.default_rng(11)
    for _ in range(200):
        x, y = rng.uniform(-1, 1, size=(2, 4))
        chain, cert = build_safe_chain(x, y, A, samples_per_segment=0)
        assert len(chain) == 17
        assert cert.clearance_constant == 80.0
        assert cert.passed, cert
        assert chain.dedup().length() <= chain.length() + 1e-12


def test_chain_rejects_bad_input():
    with pytest.raises(ObstacleContactError):
        build_safe_chain([0, 0, 3], [1, 0, 0], Arrangement([z_axis()]))
    with pytest.raises(CodimensionError):
        build_safe_chain([1, 0, 0], [0, 1, 0], Arrangement([coordinate_subspace(3, [0])]))


def test_verify_chain_pass_and_fail():
    far = PolygonalChain([[5, 0, 0], [5, 1, 0]])
    assert verify_chain(far, Arrangement([z_axis()]), 1.0).passed
    through = PolygonalChain([[1, 0, 0], [-1, 0, 0]])
    cert = verify_chain(through, Arrangement([z_axis()]), 6.0)
    assert not cert.passed
    assert cert.measured_min_clearance_ratio == pytest.approx(0.0, abs=1e-12)
    assert cert.exact_clearance


def test_chain_serialization():
    chain = PolygonalChain([[0, 0], [1, 1], [1, 1], [2, 0]])
    again = PolygonalChain.from_dict(chain.to_dict())
    assert np.array_equal(again.vertices, chain.vertices)
    assert len(chain.dedup()) == 3
    assert math.isclose(chain.dedup().length(), chain.length())
    with pytest.raises(ParameterError):
        PolygonalChain([[0, 0]])


def test_random_instances_small():
    summary = certify_random_instances([3, 4], [1, 2], 60, seed=5, workers=2)
    assert summary["instances"] == 60
    assert summary["failures"] == 0
    assert summary["max_length_ratio"] <= 1.0 + 1e-6
    assert summary["min_clearance_ratio"] >= 1.0 - 1e-8


def layout_instance(wanted, m=3, k=2, seed=0):
    rng = np.random.default_rng(seed)
    while True:
        arrangement, x, y, layout = random_layout(rng, m, k)
        if layout == wanted:
            return arrangement, x, y


def test_crossing_layout_meets_first_flat():
    arrangement, x, y = layout_instance("crossing", m=4)
    assert segment_clearance(x, y, arrangement[0]) <= 1e-9
    _, case = classify_waypoint(x, y, arrangement[0])
    assert case == 2
    _, cert = build_safe_chain(x, y, arrangement, samples_per_segment=0)
    assert cert.passed and cert.cases["2"] >= 1


def test_waypoint_layout_puts_second_flat_on_detour():
    arrangement, x, y = layout_instance("waypoint")
    w, _ = classify_waypoint(x, y, arrangement[0])
    assert arrangement[1].dist(w) <= 1e-9
    assert min(arrangement.dist(x), arrangement.dist(y)) > 1e-6
    _, cert = build_safe_chain(x, y, arrangement, samples_per_segment=0)
    assert cert.passed and cert.cases["2"] >= 1


def test_random_instances_reach_lifted_case():
    summary = certify_random_instances([3, 4], [1, 2], 60, seed=5, workers=2)
    assert summary["cases"]["1"] > 0 and summary["cases"]["2"] > 0
    assert summary["layouts"]["crossing"] > 0 and summary["layouts"]["waypoint"] > 0
    assert sum(summary["layouts"].values()) == 60


def test_random_instances_are_reproducible():
    a = certify_random_instances([3], [1, 2], 10, seed=9, workers=1)
    b = certify_random_instances([3], [1, 2], 10, seed=9, workers=3)
    assert a == b


@pytest.mark.slow
def test_random_instances_full():
    summary = certify_random_instances([3, 4, 5, 6], [1, 2, 3], 2000, seed=0, workers=4)
    assert summary["failures"] == 0
    assert min(summary["cases"].values()) > 0
