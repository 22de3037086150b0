"""Reactive layer: closed-loop unicycle navigation inside a freespace
component, unforeseen-obstacle discovery, contract monitoring, and the
command maps for gripping and model-space control.

The controller tracks a geodesic vector field: the shortest path to the
goal inside the (discovery-updated) component, recomputed on each
discovery, followed by a unicycle tracking law. A diffeomorphism-based
controller can be swapped in through the Diffeomorphism/pushforward
interface; the default diffeomorphism is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Point, Polygon
from shapely.ops import nearest_points, unary_union

from . import geometry
from .geometry import FreespaceComponent, FreespaceDecomposition, Pose2, wrap_angle
from .world import Disk, RobotSpec, World

CONTROL_DT = 0.05
GOAL_POS_TOL = 0.05
GOAL_HEADING_TOL = 0.15
WAYPOINT_TOL = 0.1
K_V = 1.0
K_OMEGA = 2.5
# Margins tried when eroding the navigation region for waypoint clearance.
PATH_MARGINS = (0.05, 0.02, 0.005, 1e-3)

DiscoveredObstacle = Disk


class ReactiveError(RuntimeError):
    pass


@dataclass(frozen=True)
class UnicycleCommand:
    v: float
    omega: float


@dataclass(frozen=True)
class ContractStatus:
    satisfied: bool
    reason: str | None = None       # goal-unreachable | robot-outside-component | timeout

    @staticmethod
    def ok() -> "ContractStatus":
        return ContractStatus(True)

    @staticmethod
    def violated(reason: str) -> "ContractStatus":
        return ContractStatus(False, reason)


@dataclass
class Diffeomorphism:
    """Forward map to a model environment with its Jacobian."""

    forward: callable               # (x, y) -> np.ndarray shape (2,)
    jacobian: callable              # (x, y) -> np.ndarray shape (2, 2)

    @staticmethod
    def identity() -> "Diffeomorphism":
        eye = np.eye(2)
        return Diffeomorphism(forward=lambda x, y: np.array([x, y]),
                              jacobian=lambda x, y: eye)


def sense(world: World, pose: Pose2, sensor_range: float,
          already: frozenset = frozenset()) -> list[Disk]:
    """Hidden disks whose boundary lies within sensor range and that have
    not been discovered yet. Idempotent per obstacle."""
    if sensor_range <= 0:
        raise ReactiveError("sensor range must be positive")
    out = []
    for disk in world.hidden_obstacles:
        if disk.center in already:
            continue
        if math.dist(disk.center, pose.xy) - disk.radius <= sensor_range:
            out.append(disk)
    return out


def monitor_contract(decomp: FreespaceDecomposition, pose: Pose2, goal) -> ContractStatus:
    """Satisfied iff the pose and the goal share a freespace component."""
    c_robot = geometry.locate_component(decomp, pose.xy if isinstance(pose, Pose2) else pose)
    if c_robot is None:
        return ContractStatus.violated("robot-outside-component")
    gxy = goal.xy if isinstance(goal, Pose2) else tuple(goal)
    c_goal = geometry.locate_component(decomp, gxy)
    if c_goal != c_robot:
        return ContractStatus.violated("goal-unreachable")
    return ContractStatus.ok()


def pushforward(diffeo: Diffeomorphism, pose: Pose2, model_velocity,
                v_max: float | None = None) -> np.ndarray:
    """Physical planar velocity realizing a model-space velocity:
    the inverse Jacobian applied to it, clamped preserving direction."""
    J = np.asarray(diffeo.jacobian(pose.x, pose.y), dtype=float)
    det = np.linalg.det(J)
    if abs(det) < 1e-12:
        raise ReactiveError(f"singular diffeomorphism Jacobian at {pose.xy}")
    u = np.linalg.solve(J, np.asarray(model_velocity, dtype=float))
    if v_max is not None:
        norm = float(np.linalg.norm(u))
        if norm > v_max:
            u = u * (v_max / norm)
    return u


def grip_transform(theta: float, object_radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Jacobian of the gripping contact and its inverse: maps (v, omega)
    to the planar velocity of the pair center one object radius ahead of
    the robot center."""
    if object_radius <= 0:
        raise ReactiveError("grip transform is singular for zero object radius")
    c, s = math.cos(theta), math.sin(theta)
    T = np.array([[c, -object_radius * s], [s, object_radius * c]])
    T_inv = np.array([[c, s], [-s / object_radius, c / object_radius]])
    return T, T_inv


def subtract_discoveries(region: Polygon, discovered, body_radius: float) -> list[Polygon]:
    """Freespace region minus discovered disks dilated by the body radius."""
    if not discovered:
        return [region]
    holes = unary_union([geometry.disk_polygon(d.center, d.radius + body_radius)
                         for d in discovered])
    return geometry._as_polygons(region.difference(holes))


def navigation_region(region: Polygon, discovered, body_radius: float,
                      position) -> Polygon | None:
    """The discovery-updated part of the component containing `position`."""
    pt = Point(position)
    for part in subtract_discoveries(region, discovered, body_radius):
        if part.buffer(1e-9).covers(pt):
            return part
    return None


class GeodesicController:
    """Waypoint follower along the shortest path to the goal inside a
    navigation region. Waypoints are computed in a margin-eroded copy of
    the region so tracked paths keep boundary clearance."""

    def __init__(self, region: Polygon, start, goal, v_max: float, omega_max: float):
        self.region = region
        self.goal = (float(goal[0]), float(goal[1]))
        self.v_max = v_max
        self.omega_max = omega_max
        self.path = self._plan_path(start)
        if self.path is None:
            raise ReactiveError("no path to goal inside the navigation region")
        self.index = 1

    def _plan_path(self, start):
        p_start, p_goal = Point(start), Point(self.goal)
        for margin in PATH_MARGINS:
            shrunk = self.region.buffer(-margin)
            for part in geometry._as_polygons(shrunk):
                fat = part.buffer(margin * 0.5)
                if not fat.covers(p_goal):
                    continue
                if fat.covers(p_start):
                    path = geometry.shortest_path(fat, start, self.goal)
                    if path is not None:
                        return path
                else:
                    # Boundary-hugging start: a path seeded there would
                    # follow the ring, and chords between ring vertices cut
                    # through the obstacle. Route from the projection into
                    # the eroded region so clearance grows immediately.
                    proj = nearest_points(part, p_start)[0]
                    if p_start.distance(proj) <= 2 * margin:
                        path = geometry.shortest_path(
                            fat, (proj.x, proj.y), self.goal)
                        if path is not None:
                            return [tuple(start)] + path
        return geometry.shortest_path(self.region, start, self.goal)

    def remaining_length(self, position) -> float:
        tail = self.path[self.index:]
        if not tail:
            return math.dist(position, self.goal)
        return math.dist(position, tail[0]) + geometry.path_length(tail)

    def step(self, pose: Pose2) -> UnicycleCommand:
        # Advance past reached waypoints (the final one needs goal tolerance).
        while self.index < len(self.path) - 1 and \
                math.dist(pose.xy, self.path[self.index]) < WAYPOINT_TOL:
            self.index += 1
        target = self.path[min(self.index, len(self.path) - 1)]
        d_total = self.remaining_length(pose.xy)
        err = wrap_angle(math.atan2(target[1] - pose.y, target[0] - pose.x) - pose.theta)
        v = K_V * max(0.0, math.cos(err)) * min(d_total, self.v_max / K_V)
        v = min(v, self.v_max)
        # Never step out of the region: clamp by boundary clearance, but
        # only when the proposed step would actually leave — tangential
        # motion along the boundary must stay live or the follower can
        # deadlock a millimeter from an obstacle.
        clearance = float(self.region.exterior.distance(Point(pose.xy)))
        for hole in self.region.interiors:
            clearance = min(clearance, float(hole.distance(Point(pose.xy))))
        step = v * CONTROL_DT
        if step > clearance - 1e-3:
            nxt = Point(pose.x + step * math.cos(pose.theta),
                        pose.y + step * math.sin(pose.theta))
            if not self.region.covers(nxt):
                v = max(0.0, (clearance - 1e-3) / CONTROL_DT)
        omega = float(np.clip(K_OMEGA * err, -self.omega_max, self.omega_max))
        return UnicycleCommand(v=v, omega=omega)


def control_step(component: FreespaceComponent, discovered, goal: Pose2,
                 pose: Pose2, spec: RobotSpec,
                 _cache: dict = {}) -> UnicycleCommand:
    """One reactive command toward a goal in the same component.

    Stateless interface over a cached controller; raises when the updated
    component no longer connects pose and goal."""
    key = (component.id, component.surface_id,
           tuple(sorted((d.center, d.radius) for d in discovered)),
           (round(goal.x, 6), round(goal.y, 6)))
    ctrl = _cache.get(key)
    region = navigation_region(component.region, discovered, spec.radius, pose.xy)
    if region is None:
        raise ReactiveError("contract violated: robot left the component")
    if not region.buffer(1e-9).covers(Point(goal.xy)):
        raise ReactiveError("contract violated: goal unreachable after discoveries")
    if ctrl is None:
        ctrl = GeodesicController(region, pose.xy, goal.xy, spec.v_max, spec.omega_max)
        _cache.clear()
        _cache[key] = ctrl
    return ctrl.step(pose)


def integrate_unicycle(pose: Pose2, cmd: UnicycleCommand, dt: float = CONTROL_DT) -> Pose2:
    return Pose2(pose.x + cmd.v * math.cos(pose.theta) * dt,
                 pose.y + cmd.v * math.sin(pose.theta) * dt,
                 pose.theta + cmd.omega * dt)
