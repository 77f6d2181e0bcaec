import math
import numpy as np
import pytest
import shapely
from shapely.geometry import Point
from src.geometry.shapes import NOISE, Polygon, alpha_shape, convex_hull, dbscan, dbscan_params, polygon_area
from src.utils.errors import DegenerateHull, NotSimple


def brute_hull_vertices(points: np.ndarray) -> set[tuple[float, float]]:
    """endpoints of every pair with all other points strictly to its left"""
    found = set()
    for i, a in enumerate(points):
        for j, b in enumerate(points):
            if i == j:
                continue
            cross = (b[0] - a[0]) * (points[:, 1] - a[1]) - (b[1] - a[1]) * (points[:, 0] - a[0])
            cross[[i, j]] = 1.0
            if np.all(cross > 0):
                found.update({tuple(a), tuple(b)})
    return found


def naive_dbscan_cores(points: np.ndarray, k: int, eps: float) -> tuple[np.ndarray, list[set[int]]]:
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    near = d <= eps
    core = near.sum(axis=1) >= k
    components, seen = [], set()
    for start in np.flatnonzero(core):
        if start in seen:
            continue
        stack, component = [int(start)], set()
        while stack:
            i = stack.pop()
            if i in component:
                continue
            component.add(i)
            stack.extend(int(j) for j in np.flatnonzero(near[i] & core) if j not in component)
        seen |= component
        components.append(component)
    return core, components


# region polygon
def test_polygon_area_square_and_hole():
    square = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]])
    assert polygon_area(Polygon(square)) == 4.0
    assert polygon_area(Polygon(square[::-1])) == 4.0
    hole = np.array([[0.5, 0.5], [0.5, 1.0], [1.0, 1.0], [1.0, 0.5]])
    assert polygon_area(Polygon(square, [hole])) == pytest.approx(3.75)


def test_polygon_area_rejects_bad_rings():
    with pytest.raises(NotSimple):
        polygon_area(Polygon(np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])))
    with pytest.raises(NotSimple):
        polygon_area(Polygon(np.array([[0.0, 0.0], [1.0, 1.0]])))


def test_polygon_dict_round_trip():
    polygon = Polygon(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    again = Polygon.from_dict(polygon.to_dict())
    np.testing.assert_array_equal(again.vertices, polygon.vertices)
# endregion


# region hull
def test_convex_hull_square_with_inner_and_edge_points():
    points = [[1, 1], [0, 0], [2, 0], [2, 2], [0, 2], [1, 0], [0.5, 1.5]]
    hull = convex_hull(points)
    np.testing.assert_array_equal(hull.vertices, [[0, 0], [2, 0], [2, 2], [0, 2]])


def test_convex_hull_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(100):
        points = rng.standard_normal((50, 2))
        hull = convex_hull(points)
        assert {tuple(v) for v in hull.vertices} == brute_hull_vertices(points)
        x, y = hull.vertices[:, 0], hull.vertices[:, 1]
        assert np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)) > 0


def test_convex_hull_degenerate():
    with pytest.raises(DegenerateHull):
        convex_hull([[0, 0], [1, 1]])
    with pytest.raises(DegenerateHull):
        convex_hull([[0, 0], [1, 1], [2, 2], [3, 3]])
# endregion


# region dbscan
def test_dbscan_params():
    assert dbscan_params(28946, 1.0, 1.0)[0] == 50
    assert dbscan_params(40, 1.0, 1.0)[0] == 3
    k, eps = dbscan_params(100, 1.0, 1.0)
    assert k == 5
    assert dbscan_params(100, 2.0, 3.0)[1] == pytest.approx(6 * eps)


def test_dbscan_eps_for_the_minimum_k():
    k, eps = dbscan_params(40, 1.0, 1.0)
    assert eps == pytest.approx(3 / math.sqrt(40 * math.pi))


def test_dbscan_agrees_with_naive_cores():
    rng = np.random.default_rng(1)
    for _ in range(100):
        points = np.vstack([
            rng.normal(0.0, 0.3, (90, 2)),
            rng.normal(5.0, 0.3, (90, 2)),
            rng.uniform(-3, 8, (20, 2)),
        ])
        k, eps = 5, 0.5

        labels = dbscan(points, k, eps)
        core, components = naive_dbscan_cores(points, k, eps)

        for component in components:
            assert len({labels[i] for i in component}) == 1
            assert labels[next(iter(component))] != NOISE
        assert len({int(c) for c in labels if c != NOISE}) == len(components)
        d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
        for i in np.flatnonzero(~core):
            near_cores = np.flatnonzero((d[i] <= eps) & core)
            if len(near_cores) == 0:
                assert labels[i] == NOISE
            else:
                assert labels[i] in {labels[j] for j in near_cores}


def test_dbscan_noise_is_order_independent():
    rng = np.random.default_rng(6)
    points = np.vstack([rng.normal(0.0, 0.3, (100, 2)), rng.uniform(-4, 4, (40, 2))])
    order = rng.permutation(len(points))

    labels = dbscan(points, 5, 0.4)
    shuffled = np.empty_like(labels)
    shuffled[order] = dbscan(points[order], 5, 0.4)

    np.testing.assert_array_equal(labels == NOISE, shuffled == NOISE)
    assert len(set(labels) - {NOISE}) == len(set(shuffled) - {NOISE})
# endregion


# region alpha shape
def test_alpha_shape_of_a_grid_is_the_square():
    rng = np.random.default_rng(2)
    grid = np.array([[x, y] for x in range(10) for y in range(10)], dtype=float)
    shape = alpha_shape(grid + rng.uniform(-1e-3, 1e-3, grid.shape))
    assert not shape.degenerate
    assert len(shape.polygons) == 1
    assert shape.area == pytest.approx(81.0, abs=0.5)


def test_alpha_shape_holds_every_point_and_matches_sampled_area():
    rng = np.random.default_rng(3)
    points = rng.uniform(-1, 1, (300, 2))
    points = points[np.linalg.norm(points, axis=1) <= 1.0]

    shape = alpha_shape(points)
    region = shape.to_shapely()

    assert all(region.buffer(1e-9).covers(Point(p)) for p in points)
    samples = rng.uniform(-1, 1, (1_000_000, 2))
    inside = np.mean(shapely.contains_xy(region, samples[:, 0], samples[:, 1]))
    assert shape.area == pytest.approx(4.0 * inside, rel=0.02)


def test_alpha_shape_of_dense_uniform_points_has_no_holes():
    points = np.random.default_rng(7).uniform(-1, 1, (1500, 2))

    shape = alpha_shape(points)

    assert len(shape.polygons) == 1
    assert shape.polygons[0].holes == []
    assert shape.area > 0.9 * polygon_area(convex_hull(points))


def test_alpha_shape_follows_a_c_shaped_region():
    rng = np.random.default_rng(4)
    angle = rng.uniform(np.pi / 3, 5 * np.pi / 3, 2000)
    radius = np.sqrt(rng.uniform(9.0, 25.0, 2000))
    points = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    band = 16.0 * np.pi * 2 / 3

    shape = alpha_shape(points)

    assert not shape.degenerate
    assert shape.polygons[0].holes == []
    assert 0.8 * band < shape.area < 0.6 * polygon_area(convex_hull(points))


def test_alpha_area_never_exceeds_the_hull():
    rng = np.random.default_rng(5)
    for _ in range(20):
        points = rng.standard_normal((80, 2)) * rng.uniform(0.1, 3.0, 2)
        assert alpha_shape(points).area <= polygon_area(convex_hull(points)) + 1e-9


def test_alpha_shape_of_too_few_points_is_empty():
    shape = alpha_shape([[0, 0], [1, 1]])
    assert shape.degenerate
    assert shape.polygons == []
    assert shape.area == 0.0
    assert alpha_shape([[0, 0], [1, 1], [2, 2]]).degenerate
# endregion
