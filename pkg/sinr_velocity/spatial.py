"""
Module to sample Poisson point processes and answer nearest neighbor in cone queries.

Notes
-----
The plane is approximated by a rectangular window. Cones are equal-angle cones
with half-open, lower-inclusive angular intervals, cone 0 being symmetric about
the positive x-axis.
"""

###########
# Imports #
###########

# Python imports #

import logging

# Dependencies #

import numpy as np
from scipy.spatial import cKDTree

# Local imports #

from sinr_velocity._common import (
    ParameterError,
    GeometryError,
    check_positive
)

#############
# Constants #
#############

logger = logging.getLogger(__name__)

# Minimal number of cones, ensures 2 * phi < pi / 2
MIN_NB_CONES = 5

# Absorbs the rounding of atan2 on exact boundary directions
ANGLE_ROUNDING = 1e-12

# Number of neighbors fetched by the first KD-tree query
INITIAL_NB_NEIGHBORS = 16

###########
# Classes #
###########

class Window:
    """
    Rectangular window surrogate for the infinite plane.

    Parameters
    ----------
    x_min : float
        Left boundary.
    x_max : float
        Right boundary.
    y_min : float
        Bottom boundary.
    y_max : float
        Top boundary.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __init__(self, x_min: float, x_max: float, y_min: float, y_max: float):
        if not (x_min < x_max and y_min < y_max):
            raise ParameterError(
                f"Degenerate window [{x_min}, {x_max}] x [{y_min}, {y_max}].")
        self.x_min = float(x_min)
        self.x_max = float(x_max)
        self.y_min = float(y_min)
        self.y_max = float(y_max)

    @classmethod
    def centered(cls, width: float, height: float) -> "Window":
        """
        Create a window of the given size centered on the origin.
        """

        return cls(-width / 2, width / 2, -height / 2, height / 2)

    @classmethod
    def strip(cls, length: float, height: float) -> "Window":
        """
        Create a window starting at x = 0 and symmetric about the x-axis.
        """

        return cls(0., length, -height / 2, height / 2)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> np.ndarray:
        return np.array([(self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2])

    def contains(self, points: np.ndarray) -> np.ndarray | bool:
        """
        Check if the points lie inside the window (boundaries included).

        Parameters
        ----------
        points : np.ndarray
            One point of shape (2,) or an array of shape (n, 2).

        Returns
        -------
        np.ndarray | bool
            Boolean mask, or a single boolean for one point.
        """

        points = np.asarray(points, dtype=float)
        inside = (points[..., 0] >= self.x_min) & (points[..., 0] <= self.x_max) & \
            (points[..., 1] >= self.y_min) & (points[..., 1] <= self.y_max)
        if inside.ndim == 0:
            return bool(inside)
        return inside

class PointSet:
    """
    Realization of node positions in a window, with an optional tagged point.

    Parameters
    ----------
    points : np.ndarray
        Array of shape (n, 2).
    intensity : float
        Intensity of the process in points per unit area.
    window : Window
        Observation window.
    tagged_index : int | None, optional
        Index of the Palm-conditioned point, by default None
    """

    points: np.ndarray
    intensity: float
    window: Window
    tagged_index: int | None

    def __init__(self, points: np.ndarray, intensity: float, window: Window, tagged_index: int | None = None):
        check_positive("intensity", intensity)
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if not np.all(window.contains(points)):
            raise ParameterError("All points must lie inside the window.")
        if tagged_index is not None and not 0 <= tagged_index < len(points):
            raise ParameterError(
                f"Tagged index {tagged_index} is not valid for {len(points)} points.")
        self.points = points
        self.intensity = float(intensity)
        self.window = window
        self.tagged_index = tagged_index

    def __len__(self) -> int:
        return len(self.points)

    @property
    def tagged_point(self) -> np.ndarray:
        if self.tagged_index is None:
            raise ParameterError("This point set has no tagged point.")
        return self.points[self.tagged_index]

class ConePartition:
    """
    Partition of the plane into m equal-angle cones about a vertex.

    Parameters
    ----------
    m : int
        Number of cones, at least 5.
    """

    m: int

    def __init__(self, m: int):
        if int(m) != m or m < MIN_NB_CONES:
            raise ParameterError(
                f"The number of cones must be an integer greater or equal to {MIN_NB_CONES}, got {m}.")
        self.m = int(m)

    @property
    def half_angle(self) -> float:
        return np.pi / self.m

    @property
    def boundary_angles(self) -> np.ndarray:
        """
        Array of shape (m, 2) containing the half-open intervals [lower, upper) of each cone.
        """

        centers = 2 * np.pi * np.arange(self.m) / self.m
        return np.column_stack((centers - self.half_angle, centers + self.half_angle))

    def cone_of_vectors(self, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        """
        Compute the cone index of direction vectors, without degeneracy check.

        Parameters
        ----------
        dx : np.ndarray
            X components.
        dy : np.ndarray
            Y components.

        Returns
        -------
        np.ndarray
            Integer cone indices.
        """

        angle = np.mod(np.arctan2(dy, dx) + self.half_angle, 2 * np.pi)
        ratio = angle / (2 * self.half_angle)
        return np.mod(np.floor(ratio + ANGLE_ROUNDING).astype(int), self.m)

    def contains_angle(self, cone_k: int, angle: float) -> bool:
        """
        Check if an angle lies in the interval of the given cone.
        """

        lower = 2 * np.pi * cone_k / self.m - self.half_angle
        shifted = np.mod(angle - lower, 2 * np.pi)
        return bool(shifted < 2 * self.half_angle + ANGLE_ROUNDING)

class ConeNeighborIndex:
    """
    KD-tree index answering nearest neighbor in cone queries over a fixed set of points.

    Parameters
    ----------
    points : np.ndarray
        Array of shape (n, 2).
    partition : ConePartition
        Cone partition.
    max_radius : float | None, optional
        Cones without point within this radius are reported empty, by default None
    """

    def __init__(self, points: np.ndarray, partition: ConePartition, max_radius: float | None = None):
        self.points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.partition = partition
        self.max_radius = max_radius
        self.tree = cKDTree(self.points) if len(self.points) > 0 else None

    def table(self, query_points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Compute the nearest neighbor of each query point in each of its cones.

        Parameters
        ----------
        query_points : np.ndarray
            Array of shape (q, 2). Indexed points coinciding with a query point are skipped.

        Returns
        -------
        tuple[np.ndarray, np.ndarray]
            Distances of shape (q, m), infinite for empty cones, and neighbor indices
            of shape (q, m), -1 for empty cones.
        """

        query_points = np.asarray(query_points, dtype=float).reshape(-1, 2)
        nb_queries = len(query_points)
        m = self.partition.m
        distances = np.full((nb_queries, m), np.inf)
        indices = np.full((nb_queries, m), -1, dtype=int)
        if self.tree is None or nb_queries == 0:
            return distances, indices

        nb_points = len(self.points)
        upper_bound = np.inf if self.max_radius is None else self.max_radius
        pending = np.arange(nb_queries)
        k = INITIAL_NB_NEIGHBORS
        while pending.size > 0:
            k_used = min(k, nb_points)
            neighbor_distances, neighbor_indices = self.tree.query(
                query_points[pending], k=k_used, distance_upper_bound=upper_bound)
            neighbor_distances = np.asarray(neighbor_distances).reshape(len(pending), k_used)
            neighbor_indices = np.asarray(neighbor_indices).reshape(len(pending), k_used)

            # Missing neighbors are reported with index nb_points
            valid = (neighbor_indices < nb_points) & (neighbor_distances > 0)
            safe_indices = np.where(valid, neighbor_indices, 0)
            offsets = self.points[safe_indices] - query_points[pending][:, None, :]
            cones = self.partition.cone_of_vectors(offsets[..., 0], offsets[..., 1])

            for cone_k in range(m):
                in_cone = valid & (cones == cone_k)
                found = in_cone.any(axis=1)
                first = np.argmax(in_cone, axis=1)
                rows = pending[found]
                distances[rows, cone_k] = neighbor_distances[found, first[found]]
                indices[rows, cone_k] = neighbor_indices[found, first[found]]

            # A row is settled when every cone is filled or no further neighbor exists
            exhausted = (k_used >= nb_points) | ~np.isfinite(neighbor_distances[:, -1])
            settled = np.all(indices[pending] >= 0, axis=1) | exhausted
            pending = pending[~settled]
            k *= 4

        return distances, indices

    def nearest(self, x: np.ndarray, cone_k: int) -> tuple[int, float] | None:
        """
        Nearest indexed point in the cone x + C_k.

        Returns
        -------
        tuple[int, float] | None
            Index and distance of the neighbor, None if the cone is empty.
        """

        distances, indices = self.table(np.asarray(x, dtype=float)[None, :])
        if indices[0, cone_k] < 0:
            return None
        return int(indices[0, cone_k]), float(distances[0, cone_k])

#############
# Functions #
#############

def sample_ppp(intensity: float, window: Window, rng: np.random.Generator) -> PointSet:
    """
    Sample a homogeneous Poisson point process in a window.

    Parameters
    ----------
    intensity : float
        Intensity in points per unit area.
    window : Window
        Sampling window.
    rng : np.random.Generator
        Random stream.

    Returns
    -------
    PointSet
        Sampled points, without tagged point.
    """

    check_positive("intensity", intensity)

    # Draw the number of points then their uniform positions
    nb_points = rng.poisson(intensity * window.area)
    while True:
        x_array = rng.uniform(window.x_min, window.x_max, nb_points)
        y_array = rng.uniform(window.y_min, window.y_max, nb_points)
        points = np.column_stack((x_array, y_array))
        if len(np.unique(points, axis=0)) == nb_points:
            break
        logger.warning("Coincident points sampled, drawing the positions again.")
    logger.debug("Sampled %d points in a window of area %g.", nb_points, window.area)

    return PointSet(points, intensity, window)

def palm_condition(ps: PointSet, location: np.ndarray) -> PointSet:
    """
    Add a tagged point at the given location (Slivnyak).

    Parameters
    ----------
    ps : PointSet
        Original point set.
    location : np.ndarray
        Location of the added point.

    Returns
    -------
    PointSet
        Point set with the added point tagged.
    """

    location = np.asarray(location, dtype=float)
    if not ps.window.contains(location):
        raise ParameterError(
            f"The location {tuple(location)} is outside of the window.")
    if len(ps) > 0 and np.any(np.all(ps.points == location, axis=1)):
        raise GeometryError(
            f"The location {tuple(location)} coincides with an existing point.")

    points = np.vstack((ps.points, location[None, :]))

    return PointSet(points, ps.intensity, ps.window, tagged_index=len(points) - 1)

def cone_index(partition: ConePartition, vertex: np.ndarray, target: np.ndarray) -> int:
    """
    Compute the index of the cone about the vertex containing the target.

    Parameters
    ----------
    partition : ConePartition
        Cone partition.
    vertex : np.ndarray
        Vertex of the cones.
    target : np.ndarray
        Target point.

    Returns
    -------
    int
        Index of the cone.

    Raises
    ------
    GeometryError
        Raise error if the target coincides with the vertex.
    """

    offset = np.asarray(target, dtype=float) - np.asarray(vertex, dtype=float)
    if offset[0] == 0 and offset[1] == 0:
        raise GeometryError("The direction from a point to itself is undefined.")

    return int(partition.cone_of_vectors(offset[0], offset[1]))

def nearest_in_cone(
        ps: PointSet,
        x: np.ndarray,
        cone_k: int,
        partition: ConePartition) -> tuple[np.ndarray, float] | None:
    """
    Find the nearest point of the set in the translated cone x + C_k.

    Parameters
    ----------
    ps : PointSet
        Point set.
    x : np.ndarray
        Vertex of the cone, a point of the set or any location.
    cone_k : int
        Index of the cone.
    partition : ConePartition
        Cone partition.

    Returns
    -------
    tuple[np.ndarray, float] | None
        Coordinates and distance of the neighbor, None if the cone is empty.
        Ties are broken by the lexicographic order of the coordinates.
    """

    x = np.asarray(x, dtype=float)
    offsets = ps.points - x[None, :]
    distances = np.hypot(offsets[:, 0], offsets[:, 1])
    candidates = distances > 0
    candidates[candidates] = partition.cone_of_vectors(
        offsets[candidates, 0], offsets[candidates, 1]) == cone_k
    if not candidates.any():
        return None

    candidate_indices = np.flatnonzero(candidates)
    order = np.lexsort((ps.points[candidate_indices, 1],
                        ps.points[candidate_indices, 0],
                        distances[candidate_indices]))
    best = candidate_indices[order[0]]

    return ps.points[best].copy(), float(distances[best])
