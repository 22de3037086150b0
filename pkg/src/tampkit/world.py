"""2.5D semiplanar world model: polygonal objects with heights and
support relations, the robot capability envelope, and full world
configurations with validation.

Worlds and configurations are immutable values; mutation helpers return
new objects.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from shapely.geometry import Point, Polygon

from .geometry import (
    GeometryError,
    Pose2,
    disk_polygon,
    place_polygon,
    polygon_from_rings,
    rings_from_polygon,
    validate_polygon,
)

ROBOT_ID = "R"
GROUND_ID = "ground"


class WorldError(ValueError):
    """Scenario schema or invariant violation."""


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def polygon(self) -> Polygon:
        return disk_polygon(self.center, self.radius)


@dataclass(frozen=True)
class WorldObject:
    id: str
    footprint: Polygon              # local frame
    z_base: float = 0.0
    height: float = 0.0
    movable: bool = False
    disk_radius: float = 0.0        # reactive disk abstraction, movable only

    def __post_init__(self):
        if self.height < 0:
            raise WorldError(f"object {self.id}: negative height")
        validate_polygon(self.footprint)
        if self.movable:
            circum = circumradius(self.footprint)
            if self.disk_radius <= 0 or self.disk_radius < 0.99 * circum:
                raise WorldError(
                    f"object {self.id}: disk_radius {self.disk_radius} does not "
                    f"cover footprint circumradius {circum:.4f}")


def circumradius(footprint: Polygon) -> float:
    coords = np.asarray(footprint.exterior.coords)
    return float(np.max(np.linalg.norm(coords, axis=1)))


@dataclass(frozen=True)
class RobotSpec:
    radius: float
    footprint: Polygon
    jump_dz_max: float = 1.0
    jump_gap_max: float = 0.4
    v_max: float = 1.5
    omega_max: float = 3.0

    def __post_init__(self):
        for name in ("radius", "jump_dz_max", "jump_gap_max", "v_max", "omega_max"):
            if getattr(self, name) <= 0:
                raise WorldError(f"robot {name} must be positive")
        if circumradius(self.footprint) > self.radius + 1e-9:
            raise WorldError("robot footprint circumradius exceeds its disk radius")

    @staticmethod
    def disk(radius: float, **kw) -> "RobotSpec":
        shape = Point(0, 0).buffer(radius * 0.995, quad_segs=8)
        return RobotSpec(radius=radius, footprint=shape, **kw)


@dataclass(frozen=True)
class GoalConstraint:
    variable: str                   # e.g. "pose(R)" or "atop(R,platform_2)"
    target: object                  # Pose2 / (x, y) / 0 / 1
    tol: float = 0.05

    def __post_init__(self):
        if self.tol <= 0:
            raise WorldError("goal tolerance must be positive")


@dataclass(frozen=True)
class GoalSpec:
    constraints: tuple[GoalConstraint, ...]

    def __post_init__(self):
        if not self.constraints:
            raise WorldError("goal needs at least one constraint")


@dataclass(frozen=True)
class Configuration:
    """One full assignment of robot and object placements plus grasp status."""

    robot_pose: Pose2
    robot_surface: str
    object_poses: dict          # id -> (Pose2, surface id); treat as immutable
    grasped: tuple | None = None    # (object id, relative Pose2)

    def placement_of(self, oid: str):
        if oid == ROBOT_ID:
            return (self.robot_pose, self.robot_surface)
        if oid == GROUND_ID:
            return (Pose2(0, 0, 0), GROUND_ID)
        return self.object_poses.get(oid)

    def grasped_id(self) -> str | None:
        return self.grasped[0] if self.grasped else None


class World:
    """Immutable world: workspace, objects, robot spec, initial configuration."""

    ROBOT_ID = ROBOT_ID
    GROUND_ID = GROUND_ID

    def __init__(self, workspace: Polygon, objects: list[WorldObject],
                 robot: RobotSpec, initial: Configuration,
                 hidden_obstacles: tuple[Disk, ...] = (),
                 sensor_range: float = 3.0):
        self.workspace = validate_polygon(workspace)
        ground = WorldObject(id=GROUND_ID, footprint=self.workspace)
        self.objects = {GROUND_ID: ground}
        for obj in objects:
            if obj.id in self.objects or obj.id == ROBOT_ID:
                raise WorldError(f"duplicate or reserved object id {obj.id!r}")
            self.objects[obj.id] = obj
        self.robot = robot
        self.hidden_obstacles = tuple(hidden_obstacles)
        self.sensor_range = sensor_range
        self.validate_configuration(initial)
        self.initial = initial
        for disk in self.hidden_obstacles:
            if math.dist(disk.center, initial.robot_pose.xy) < disk.radius + robot.radius:
                raise WorldError("hidden obstacle overlaps the initial robot disk")

    # -- accessors used by the geometry layer ------------------------------

    def object_ids(self) -> list[str]:
        return list(self.objects.keys())

    def movable_ids(self) -> list[str]:
        return [oid for oid, o in self.objects.items() if o.movable]

    def footprint_at(self, oid: str, pose: Pose2) -> Polygon:
        if oid == ROBOT_ID:
            return place_polygon(self.robot.footprint, pose)
        if oid == GROUND_ID:
            return self.workspace
        return place_polygon(self.objects[oid].footprint, pose)

    def surface_geometry(self, surface_id: str, config: Configuration):
        """Top polygon of the surface object (world frame) and its top z."""
        if surface_id == GROUND_ID:
            return self.workspace, 0.0
        placement = config.placement_of(surface_id)
        if placement is None:
            raise WorldError(f"unknown surface {surface_id!r}")
        return self.footprint_at(surface_id, placement[0]), self.top_z(surface_id, config)

    def top_z(self, oid: str, config: Configuration, _depth: int = 0) -> float:
        if oid == GROUND_ID:
            return 0.0
        if _depth > 4:
            raise WorldError("support cycle detected")
        placement = config.placement_of(oid)
        if placement is None:
            raise WorldError(f"object {oid!r} has no placement")
        return self.top_z(placement[1], config, _depth + 1) + self.objects[oid].height

    # -- validation --------------------------------------------------------

    def validate_configuration(self, config: Configuration) -> None:
        for oid in self.objects:
            if oid == GROUND_ID:
                continue
            if config.placement_of(oid) is None:
                raise WorldError(f"configuration missing placement for {oid!r}")
        for oid, (pose, surface) in config.object_poses.items():
            if oid not in self.objects:
                raise WorldError(f"configuration references unknown object {oid!r}")
            if surface not in self.objects:
                raise WorldError(f"object {oid!r} rests on unknown surface {surface!r}")
            depth = self._stack_depth(surface, config)
            if depth > 1:
                raise WorldError(f"object {oid!r}: stacking deeper than one level")
        if config.robot_surface not in self.objects:
            raise WorldError(f"robot on unknown surface {config.robot_surface!r}")
        if config.grasped is not None:
            gid = config.grasped[0]
            if gid not in self.objects or not self.objects[gid].movable:
                raise WorldError(f"grasped object {gid!r} unknown or not movable")
            if config.placement_of(gid)[1] != config.robot_surface:
                raise WorldError("grasped object must share the robot's surface")
        self._check_overlaps(config)

    def _stack_depth(self, oid: str, config: Configuration) -> int:
        if oid == GROUND_ID:
            return 0
        return 1 + self._stack_depth(config.placement_of(oid)[1], config)

    def _check_overlaps(self, config: Configuration) -> None:
        by_surface: dict[str, list[tuple[str, Polygon]]] = {}
        for oid in self.objects:
            if oid == GROUND_ID:
                continue
            pose, surface = config.placement_of(oid)
            by_surface.setdefault(surface, []).append((oid, self.footprint_at(oid, pose)))
        by_surface.setdefault(config.robot_surface, []).append(
            (ROBOT_ID, self.footprint_at(ROBOT_ID, config.robot_pose)))
        for surface, entries in by_surface.items():
            for i in range(len(entries)):
                for j in range(i + 1, len(entries)):
                    a_id, a = entries[i]
                    b_id, b = entries[j]
                    if a.intersection(b).area > 1e-9:
                        raise WorldError(
                            f"footprints of {a_id!r} and {b_id!r} overlap on {surface!r}")

    # -- rebuilding --------------------------------------------------------

    def with_configuration(self, config: Configuration) -> "World":
        w = World.__new__(World)
        w.__dict__.update(self.__dict__)
        w.objects = dict(self.objects)
        self.validate_configuration(config)
        w.initial = config
        return w

    def with_known_disks(self, disks: list[Disk], surface: str = GROUND_ID) -> "World":
        """Fold discovered disks into the world as static known obstacles."""
        w = World.__new__(World)
        w.__dict__.update(self.__dict__)
        w.objects = dict(self.objects)
        poses = dict(self.initial.object_poses)
        for i, d in enumerate(disks):
            oid = f"_discovered_{len(w.objects)}_{i}"
            shape = Point(0, 0).buffer(d.radius, quad_segs=12)
            w.objects[oid] = WorldObject(id=oid, footprint=shape)
            poses[oid] = (Pose2(d.center[0], d.center[1], 0.0), surface)
        w.hidden_obstacles = tuple(
            h for h in self.hidden_obstacles
            if not any(math.dist(h.center, d.center) < 1e-9 for d in disks))
        w.initial = replace(self.initial, object_poses=poses)
        return w


def support_candidates(world: World, config: Configuration, pose: Pose2,
                       z_from: float) -> list[tuple[str, float]]:
    """Surfaces whose top polygon horizontally contains `pose`, with signed
    height difference from z_from. The ground is always a candidate when
    the pose is inside the workspace."""
    out = []
    pt = Point(pose.x, pose.y)
    for oid in world.objects:
        poly, z_top = world.surface_geometry(oid, config)
        if poly.covers(pt):
            out.append((oid, z_top - z_from))
    return out


def apply_pose(world: World, config: Configuration, oid: str,
               pose: Pose2, surface: str) -> Configuration:
    """New configuration with one object (or the robot) re-placed."""
    if oid == ROBOT_ID:
        new = replace(config, robot_pose=pose, robot_surface=surface)
    else:
        if oid not in world.objects or oid == GROUND_ID:
            raise WorldError(f"cannot re-place {oid!r}")
        poses = dict(config.object_poses)
        poses[oid] = (pose, surface)
        new = replace(config, object_poses=poses)
    world.validate_configuration(new)
    return new


# -- scenario (de)serialization -------------------------------------------


def _pose_from(value, path: str) -> Pose2:
    if not isinstance(value, (list, tuple)) or len(value) not in (2, 3):
        raise WorldError(f"{path}: pose must be [x, y] or [x, y, theta]")
    return Pose2(*([float(v) for v in value] + [0.0] * (3 - len(value))))


def load_world(document: dict) -> tuple[World, GoalSpec]:
    """Parse and validate a scenario document; raises WorldError with the
    offending JSON path on schema or invariant violations."""
    try:
        workspace = polygon_from_rings(document["workspace"])
    except KeyError:
        raise WorldError("$.workspace: missing") from None
    except GeometryError as exc:
        raise WorldError(f"$.workspace: {exc}") from None

    rdoc = document.get("robot")
    if not isinstance(rdoc, dict) or "radius" not in rdoc or "start" not in rdoc:
        raise WorldError("$.robot: needs at least radius and start")
    kw = {k: float(rdoc[k]) for k in
          ("jump_dz_max", "jump_gap_max", "v_max", "omega_max") if k in rdoc}
    if "footprint" in rdoc:
        robot = RobotSpec(radius=float(rdoc["radius"]),
                          footprint=polygon_from_rings(rdoc["footprint"]), **kw)
    else:
        robot = RobotSpec.disk(float(rdoc["radius"]), **kw)
    start_pose = _pose_from(rdoc["start"].get("pose"), "$.robot.start.pose")
    start_surface = rdoc["start"].get("surface", GROUND_ID)

    objects, poses = [], {}
    for i, odoc in enumerate(document.get("objects", [])):
        path = f"$.objects[{i}]"
        try:
            obj = WorldObject(
                id=odoc["id"],
                footprint=polygon_from_rings(odoc["rings"]),
                z_base=float(odoc.get("z_base", 0.0)),
                height=float(odoc.get("height", 0.0)),
                movable=bool(odoc.get("movable", False)),
                disk_radius=float(odoc.get("disk_radius", 0.0)),
            )
        except KeyError as exc:
            raise WorldError(f"{path}: missing key {exc}") from None
        except (GeometryError, WorldError) as exc:
            raise WorldError(f"{path}: {exc}") from None
        objects.append(obj)
        poses[obj.id] = (_pose_from(odoc.get("pose"), f"{path}.pose"),
                         odoc.get("surface", GROUND_ID))

    grasped = None
    if document.get("grasped"):
        gdoc = document["grasped"]
        grasped = (gdoc["id"], _pose_from(gdoc["relative_pose"], "$.grasped.relative_pose"))
    initial = Configuration(robot_pose=start_pose, robot_surface=start_surface,
                            object_poses=poses, grasped=grasped)

    goal_doc = document.get("goal")
    if not goal_doc:
        raise WorldError("$.goal: missing or empty")
    constraints = []
    for i, gdoc in enumerate(goal_doc):
        target = gdoc.get("target")
        if isinstance(target, (list, tuple)):
            target = tuple(float(v) for v in target)
        constraints.append(GoalConstraint(variable=gdoc["variable"], target=target,
                                          tol=float(gdoc.get("tol", 0.05))))
    goal = GoalSpec(constraints=tuple(constraints))

    hidden = tuple(Disk(center=tuple(h["center"]), radius=float(h["radius"]))
                   for h in document.get("hidden_obstacles", []))
    try:
        world = World(workspace=workspace, objects=objects, robot=robot,
                      initial=initial, hidden_obstacles=hidden,
                      sensor_range=float(document.get("sensor_range", 3.0)))
    except WorldError as exc:
        raise WorldError(f"$: {exc}") from None
    return world, goal


def serialize_world(world: World, goal: GoalSpec) -> dict:
    """Scenario document for the current world; inverse of load_world."""
    doc = {
        "workspace": rings_from_polygon(world.workspace),
        "robot": {
            "radius": world.robot.radius,
            "footprint": rings_from_polygon(world.robot.footprint),
            "jump_dz_max": world.robot.jump_dz_max,
            "jump_gap_max": world.robot.jump_gap_max,
            "v_max": world.robot.v_max,
            "omega_max": world.robot.omega_max,
            "start": {
                "pose": [world.initial.robot_pose.x, world.initial.robot_pose.y,
                         world.initial.robot_pose.theta],
                "surface": world.initial.robot_surface,
            },
        },
        "objects": [],
        "goal": [],
        "hidden_obstacles": [
            {"center": list(d.center), "radius": d.radius} for d in world.hidden_obstacles
        ],
        "sensor_range": world.sensor_range,
    }
    for oid, obj in world.objects.items():
        if oid == GROUND_ID:
            continue
        pose, surface = world.initial.object_poses[oid]
        doc["objects"].append({
            "id": oid,
            "rings": rings_from_polygon(obj.footprint),
            "pose": [pose.x, pose.y, pose.theta],
            "surface": surface,
            "z_base": obj.z_base,
            "height": obj.height,
            "movable": obj.movable,
            "disk_radius": obj.disk_radius,
        })
    for c in goal.constraints:
        target = list(c.target) if isinstance(c.target, tuple) else c.target
        doc["goal"].append({"variable": c.variable, "target": target, "tol": c.tol})
    if world.initial.grasped is not None:
        gid, rel = world.initial.grasped
        doc["grasped"] = {"id": gid, "relative_pose": [rel.x, rel.y, rel.theta]}
    return doc


def load_world_file(path) -> tuple[World, GoalSpec]:
    with open(path) as fh:
        return load_world(json.load(fh))
