"""
Test file for the spatial module.
"""

###########
# Imports #
###########

# Python imports #

import sys
sys.path.append(".")

# Dependencies #

import numpy as np
import pytest
from scipy import stats

# Local imports #

# Import objects to test
from sinr_velocity._common import ParameterError, GeometryError, make_rng
from sinr_velocity.spatial import (
    Window,
    PointSet,
    ConePartition,
    ConeNeighborIndex,
    sample_ppp,
    palm_condition,
    cone_index,
    nearest_in_cone
)

from sinr_velocity.analysis import nn_cone_cdf

# Import test tools
from tests._common import check_value

#############
# Constants #
#############

partition = ConePartition(6)
small_window = Window.centered(10., 10.)

#########
# Tests #
#########

def test_window_contains():
    window = Window.strip(100., 60.)
    assert window.contains(np.array([0., 30.]))
    assert not window.contains(np.array([-1e-9, 0.]))
    assert list(window.contains(np.array([[50., 0.], [101., 0.]]))) == [True, False]
    check_value(6000., window.area)

def test_degenerate_window():
    with pytest.raises(ParameterError):
        Window(0., 0., -1., 1.)

def test_partition_needs_five_cones():
    with pytest.raises(ParameterError):
        ConePartition(4)

def test_cone_index_boundaries():
    vertex = np.zeros(2)
    half_angle = partition.half_angle
    assert cone_index(partition, vertex, np.array([1., 0.])) == 0
    # Intervals are lower-inclusive
    assert cone_index(partition, vertex, np.array([np.cos(-half_angle), np.sin(-half_angle)])) == 0
    assert cone_index(partition, vertex, np.array([np.cos(half_angle), np.sin(half_angle)])) == 1
    assert cone_index(partition, vertex, np.array([-1., 0.])) == 3
    assert cone_index(partition, vertex, np.array([0., -1.])) == 5

def test_cone_index_of_coincident_points():
    with pytest.raises(GeometryError):
        cone_index(partition, np.array([1., 2.]), np.array([1., 2.]))

def test_sample_ppp_count():
    rng = make_rng(0, 0, 0)
    counts = [len(sample_ppp(2., small_window, rng)) for _ in range(200)]
    check_value(200., np.mean(counts), 0.05)

def test_sample_ppp_inside_window():
    ps = sample_ppp(1., Window.strip(30., 20.), make_rng(1))
    assert np.all(ps.window.contains(ps.points))
    assert ps.tagged_index is None

def test_palm_condition():
    ps = sample_ppp(1., small_window, make_rng(2))
    palm = palm_condition(ps, np.zeros(2))
    assert len(palm) == len(ps) + 1
    assert np.array_equal(palm.tagged_point, np.zeros(2))
    with pytest.raises(GeometryError):
        palm_condition(palm, np.zeros(2))
    with pytest.raises(ParameterError):
        palm_condition(ps, np.array([20., 0.]))

def test_nearest_in_cone():
    points = np.array([[1., 0.], [2., 0.1], [0.5, 2.], [-1., 0.], [0., 0.]])
    ps = PointSet(points, 1., small_window, tagged_index=4)
    position, distance = nearest_in_cone(ps, np.zeros(2), 0, partition)
    assert np.array_equal(position, [1., 0.])
    check_value(1., distance)
    position, distance = nearest_in_cone(ps, np.zeros(2), 3, partition)
    assert np.array_equal(position, [-1., 0.])
    assert nearest_in_cone(ps, np.zeros(2), 4, partition) is None

def test_nearest_in_cone_ties():
    points = np.array([[1., 0.5], [1., -0.5], [0., 0.]])
    ps = PointSet(points, 1., small_window)
    position, _ = nearest_in_cone(ps, np.zeros(2), 0, partition)
    assert np.array_equal(position, [1., -0.5])

def test_neighbor_index_matches_brute_force():
    ps = sample_ppp(1., small_window, make_rng(3))
    index = ConeNeighborIndex(ps.points, partition)
    distances, indices = index.table(ps.points)
    for point_index in range(0, len(ps), 7):
        for cone_k in range(partition.m):
            neighbor = nearest_in_cone(ps, ps.points[point_index], cone_k, partition)
            if neighbor is None:
                assert indices[point_index, cone_k] == -1
                assert np.isinf(distances[point_index, cone_k])
            else:
                assert abs(distances[point_index, cone_k] - neighbor[1]) < 1e-12

def test_neighbor_index_max_radius():
    ps = sample_ppp(1., small_window, make_rng(4))
    bounded = ConeNeighborIndex(ps.points, partition, max_radius=1.)
    unbounded = ConeNeighborIndex(ps.points, partition)
    bounded_distances, _ = bounded.table(ps.points)
    unbounded_distances, _ = unbounded.table(ps.points)
    near = unbounded_distances <= 1.
    assert np.all(bounded_distances[near] == unbounded_distances[near])
    assert np.all(np.isinf(bounded_distances[~near]))

def test_neighbor_index_without_points():
    index = ConeNeighborIndex(np.empty((0, 2)), partition)
    assert index.nearest(np.zeros(2), 0) is None

def test_cone_sweep():
    angles = make_rng(30).uniform(-np.pi, np.pi, 100000)
    cones = partition.cone_of_vectors(np.cos(angles), np.sin(angles))
    counts = np.bincount(cones, minlength=partition.m)
    assert len(counts) == partition.m
    for count in counts:
        check_value(len(angles) / partition.m, count, 0.03)

    # Each direction lies in exactly one cone, the one it is assigned to
    for angle, cone_k in zip(angles[:5000], cones[:5000]):
        memberships = [partition.contains_angle(k, angle) for k in range(partition.m)]
        assert sum(memberships) == 1
        assert memberships[cone_k]

def test_palm_nearest_neighbor_law():
    rng = make_rng(31)
    window = Window.centered(12., 12.)
    distances = []
    nb_others = []
    for _ in range(2000):
        ps = palm_condition(sample_ppp(1., window, rng), np.zeros(2))
        neighbor = nearest_in_cone(ps, ps.tagged_point, 0, partition)
        distances.append(neighbor[1])
        nb_others.append(len(ps) - 1)

    assert stats.kstest(distances, lambda r: nn_cone_cdf(r, 1., partition.m)).pvalue > 1e-3
    check_value(window.area, np.mean(nb_others), 0.01)
