import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from efpp.config import ExperimentConfig
from efpp.geodesic import (
    OutsideBoxError, PathCost, edge_dominated, geodesic, passage_times, path_time, perturbation_gap,
)
from efpp.geometry import BoxRegion
from efpp.oracle import OracleSizeError, brute_force_geodesic, complete_graph_dijkstra, exhaustive_min_time
from efpp.poisson import EmptySampleError, PoissonSample, SeedPolicy, read_points, sample_poisson
from efpp.verify import random_instance


def line_sample(pts):
    return PoissonSample.from_points(np.asarray(pts, dtype=float))


def test_path_time_examples():
    assert path_time([[0.0, 0.0]], 2) == 0.0
    assert path_time([[0.0, 0.0], [2.0, 0.0]], 2) == 4.0
    assert path_time([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]], 2) == 5.0
    with pytest.raises(ValueError):
        path_time(np.empty((0, 2)), 2)


def test_path_cost_fields():
    c = PathCost.of([[0.0, 0.0], [3.0, 4.0], [3.0, 5.0]], 1.5)
    assert c.total == pytest.approx(5**1.5 + 1)
    assert c.max_edge == 5.0


def test_three_collinear_points_use_middle():
    s = line_sample([[0, 0], [1, 0], [2, 0]])
    g = geodesic(s, [0, 0], [2, 0], 2.0)
    assert g.total == 2.0
    assert g.path.tolist() == [[0, 0], [1, 0], [2, 0]]
    b = brute_force_geodesic(s, [0, 0], [2, 0], 2.0)
    assert b.path.tolist() == g.path.tolist()
    e = brute_force_geodesic(s, [0, 0], [2, 0], 2.0, exhaustive=True)
    assert e.total == 2.0


def test_two_points_direct_edge():
    g = geodesic(line_sample([[0, 0], [2, 0]]), [0, 0], [2, 0], 2.0)
    assert g.total == 4.0
    assert len(g.path) == 2


def test_endpoints_map_to_nearest_points():
    s = line_sample([[0, 0], [1, 0.2], [2, 0]])
    g = geodesic(s, [-0.3, 0.1], [2.2, -0.1], 2.0)
    assert g.qx.tolist() == [0, 0] and g.qy.tolist() == [2, 0]
    assert np.array_equal(g.path[0], g.qx) and np.array_equal(g.path[-1], g.qy)
    assert g.total == pytest.approx(path_time(g.path, 2.0), rel=1e-12)
    assert geodesic(s, [0.1, 0], [0.05, 0.0], 2.0).total == 0.0


def test_exact_tie_prefers_fewer_hops():
    # right angle at (1, 1): both routes cost 4 when alpha = 2
    s = line_sample([[0, 0], [1, 1], [2, 0]])
    g = geodesic(s, [0, 0], [2, 0], 2.0)
    assert len(g.path) == 2
    assert len(brute_force_geodesic(s, [0, 0], [2, 0], 2.0).path) == 2


def test_errors():
    empty = sample_poisson(BoxRegion(np.zeros(2), np.zeros(2)), 1.0, 0)
    with pytest.raises(EmptySampleError):
        geodesic(empty, [0, 0], [0, 0], 2)
    s = line_sample([[0, 0], [1, 0]])
    with pytest.raises(OutsideBoxError):
        geodesic(s, [0, 0], [50, 0], 2)
    with pytest.raises(ValueError):
        geodesic(s, [0, 0], [1, 0], 1.0)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_matches_dense_dijkstra(d, alpha):
    rng = np.random.default_rng([d, int(alpha * 10)])
    for _ in range(100):
        sample, x, y = random_instance(rng, d, 60)
        fast = geodesic(sample, x, y, alpha)
        slow = brute_force_geodesic(sample, x, y, alpha)
        assert fast.total == pytest.approx(slow.total, rel=1e-12, abs=0)
        assert fast.indices.tolist() == slow.indices.tolist()


@pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0, 4.0])
def test_pruning_does_not_change_result(alpha):
    s = sample_poisson(BoxRegion.from_bounds([-5, -6], [40, 6]), 1.0, SeedPolicy(31))
    on = geodesic(s, [0, 0], [32, 0], alpha, prune=True)
    off = geodesic(s, [0, 0], [32, 0], alpha, prune=False)
    assert on.total == off.total
    assert on.indices.tolist() == off.indices.tolist()
    assert on.settled <= off.settled


def test_dense_dijkstra_matches_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(60):
        sample, _, _ = random_instance(rng, 2, 8)
        alpha = float(rng.choice([1.5, 2.0, 3.0]))
        dist, _ = complete_graph_dijkstra(sample.points, 0, alpha)
        for dst in range(len(sample)):
            best, _ = exhaustive_min_time(sample.points, 0, dst, alpha)
            assert dist[dst] == pytest.approx(best, rel=1e-12)


def test_oracle_size_guards():
    pts = np.random.default_rng(0).random((10, 2))
    with pytest.raises(OracleSizeError):
        exhaustive_min_time(pts, 0, 1, 2.0)
    with pytest.raises(OracleSizeError):
        complete_graph_dijkstra(np.zeros((2001, 2)), 0, 2.0)


def test_passage_times_match_single_runs():
    s = sample_poisson(BoxRegion.from_bounds([0, 0], [30, 20]), 1.0, SeedPolicy(32))
    ys = np.random.default_rng(2).uniform([0, 0], [30, 20], size=(15, 2))
    multi = passage_times(s, [3, 3], ys, 1.5)
    single = [geodesic(s, [3, 3], y, 1.5).total for y in ys]
    assert np.allclose(multi, single, rtol=1e-12, atol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1.5, 2.0, 3.0]))
def test_symmetry_and_triangle_inequality(seed, alpha):
    s = sample_poisson(BoxRegion.from_bounds([0, 0], [15, 10]), 1.0, SeedPolicy(seed))
    if len(s) == 0:
        return
    x, y, z = np.random.default_rng(seed).uniform([0, 0], [15, 10], size=(3, 2))
    txy = geodesic(s, x, y, alpha).total
    tyx = geodesic(s, y, x, alpha).total
    assert txy == pytest.approx(tyx, rel=1e-12, abs=1e-300)
    txz = geodesic(s, x, z, alpha).total
    tyz = geodesic(s, y, z, alpha).total
    assert txz <= (txy + tyz) * (1 + 1e-12)


def test_edge_dominated_examples():
    s = line_sample([[0, 0], [4, 0], [2, 0]])
    assert edge_dominated([0, 0], [4, 0], s, 2.0)
    t = line_sample([[0, 0], [4, 0]])
    assert not edge_dominated([0, 0], [4, 0], t, 2.0)
    # a far third point is no help
    u = line_sample([[0, 0], [4, 0], [2, 3]])
    assert not edge_dominated([0, 0], [4, 0], u, 2.0)


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_edge_dominated_never_hits_oracle_edges(alpha):
    rng = np.random.default_rng(int(alpha * 7))
    for _ in range(40):
        sample, x, y = random_instance(rng, 2, 40, n_min=5)
        g = brute_force_geodesic(sample, x, y, alpha)
        for a, b in zip(g.path[:-1], g.path[1:]):
            assert not edge_dominated(a, b, sample, alpha)


def test_edge_dominated_is_exact_two_hop_check():
    rng = np.random.default_rng(9)
    for _ in range(200):
        pts = rng.uniform(0, 5, size=(12, 2))
        s = line_sample(pts)
        alpha = float(rng.choice([1.5, 2.0, 3.0]))
        a, b = pts[0], pts[1]
        ell = np.linalg.norm(a - b)
        rest = pts[2:]
        direct = np.linalg.norm(rest - a, axis=1) ** alpha + np.linalg.norm(rest - b, axis=1) ** alpha
        assert edge_dominated(a, b, s, alpha) == bool(np.any(direct <= ell**alpha))


def test_perturbation_examples():
    s = sample_poisson(BoxRegion.from_bounds([-16, -23], [80, 23]), 1.0, SeedPolicy(33))
    x, y = np.array([1.0, 2.0]), np.array([40.0, -3.0])
    qy = s.points[s.nearest_index(y)]
    gap, bound = perturbation_gap(s, x, y, y, 1.5)
    assert gap == 0.0
    assert bound == pytest.approx((2 * np.linalg.norm(qy - y)) ** 1.5)
    gap, bound = perturbation_gap(s, x, y, qy, 1.5)
    assert gap == 0.0 and gap <= bound


def test_perturbation_random():
    s = sample_poisson(BoxRegion.from_bounds([-16, -23], [80, 23]), 1.0, SeedPolicy(34))
    rng = np.random.default_rng(3)
    for _ in range(100):
        x, y = rng.uniform([-14, -20], [78, 20], size=(2, 2))
        y2 = y + rng.normal(size=2) * 3
        gap, bound = perturbation_gap(s, x, y, y2, 1.5)
        assert gap <= bound * (1 + 1e-9)


def test_boundary_flag():
    s = sample_poisson(BoxRegion.from_bounds([0, 0], [40, 40]), 1.0, SeedPolicy(35))
    assert geodesic(s, [0.5, 20], [20, 20], 1.5).touches_boundary
    assert not geodesic(s, [10, 20], [30, 20], 1.5).touches_boundary


def test_max_edge_diagnostic():
    """Long edges (beyond c psi(n)^(1/alpha)) are rare.

    The oracle calibration in scripts/max_edge_calibration.py keeps the ratio
    below 1 at n = 32, so c = 4 leaves a wide margin.
    """
    cfg = ExperimentConfig(n_grid=(128,), alpha=1.5)
    n, c = 128, 4.0
    limit = c * math.sqrt(n) ** (1 / 1.5)
    long = 0
    reps = 30
    for i in range(reps):
        s = sample_poisson(cfg.box(n), 1.0, SeedPolicy(36, i, stream=n))
        long += geodesic(s, [0, 0], [n, 0], 1.5).max_edge > limit
    assert long / reps <= 0.05


def test_geodesic_dump(tmp_path):
    s = line_sample([[0, 0], [1, 0], [2, 0]])
    g = geodesic(s, [0, 0], [2, 0], 2.0)
    g.dump(tmp_path / "g.txt", 2.0)
    meta, pts = read_points(tmp_path / "g.txt")
    assert (tmp_path / "g.txt").read_text().startswith("# efpp-geodesic total=2.0 alpha=2.0\n")
    assert np.array_equal(pts, g.path)
