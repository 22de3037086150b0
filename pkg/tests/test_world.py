import json
import math

import pytest
from shapely.geometry import Point, box

from tampkit import bench
from tampkit.geometry import Pose2
from tampkit.world import (GROUND_ID, ROBOT_ID, Configuration, Disk,
                           GoalConstraint, GoalSpec, RobotSpec, World,
                           WorldError, WorldObject, load_world,
                           serialize_world)

from conftest import empty_world, world_with_objects


def _block(oid, side, **kw):
    half = side / 2
    return WorldObject(id=oid, footprint=box(-half, -half, half, half),
                       movable=True, disk_radius=half * math.sqrt(2) * 1.01, **kw)


def test_movable_requires_covering_disk_radius():
    with pytest.raises(WorldError):
        WorldObject(id="b", footprint=box(-1, -1, 1, 1), movable=True,
                    disk_radius=0.5)


def test_robot_footprint_must_fit_disk():
    with pytest.raises(WorldError):
        RobotSpec(radius=0.2, footprint=box(-1, -1, 1, 1))


def test_goal_rejects_nonpositive_tol():
    with pytest.raises(WorldError):
        GoalConstraint("pose(R)", (1, 1), 0.0)
    with pytest.raises(WorldError):
        GoalSpec(())


def test_duplicate_object_id_rejected():
    b = _block("b", 0.5)
    with pytest.raises(WorldError):
        world_with_objects([b, b], {"b": (Pose2(5, 5, 0), GROUND_ID)})


def test_reserved_robot_id_rejected():
    b = _block(ROBOT_ID, 0.5)
    with pytest.raises(WorldError):
        world_with_objects([b], {ROBOT_ID: (Pose2(5, 5, 0), GROUND_ID)})


def test_overlapping_footprints_rejected():
    a, b = _block("a", 1.0), _block("b", 1.0)
    with pytest.raises(WorldError, match="overlap"):
        world_with_objects([a, b], {"a": (Pose2(5, 5, 0), GROUND_ID),
                                    "b": (Pose2(5.3, 5, 0), GROUND_ID)})


def test_missing_placement_rejected():
    b = _block("b", 0.5)
    with pytest.raises(WorldError, match="missing placement"):
        world_with_objects([b], {})


def test_deep_stacking_rejected():
    a, b, c = _block("a", 2.0, height=0.2), _block("b", 1.0, height=0.2), \
        _block("c", 0.4, height=0.2)
    with pytest.raises(WorldError, match="stacking"):
        world_with_objects(
            [a, b, c], {"a": (Pose2(5, 5, 0), GROUND_ID),
                        "b": (Pose2(5, 5, 0), "a"), "c": (Pose2(5, 5, 0), "b")})


def test_top_z_stacks_heights():
    a = _block("a", 2.0, height=0.4)
    b = _block("b", 1.0, height=0.3)
    w = world_with_objects([a, b], {"a": (Pose2(5, 5, 0), GROUND_ID),
                                    "b": (Pose2(5, 5, 0), "a")})
    assert w.top_z("a", w.initial) == pytest.approx(0.4)
    assert w.top_z("b", w.initial) == pytest.approx(0.7)
    assert w.top_z(GROUND_ID, w.initial) == 0.0


def test_surface_geometry_of_object_is_placed_footprint():
    a = _block("a", 2.0, height=0.4)
    w = world_with_objects([a], {"a": (Pose2(5, 5, 0.0), GROUND_ID)})
    poly, z = w.surface_geometry("a", w.initial)
    assert z == pytest.approx(0.4)
    assert poly.symmetric_difference(box(4, 4, 6, 6)).area < 1e-9


def test_hidden_obstacle_cannot_cover_start():
    with pytest.raises(WorldError, match="hidden obstacle"):
        empty = empty_world()
        World(empty.workspace, [], empty.robot, empty.initial,
              hidden_obstacles=(Disk(center=(1.0, 1.0), radius=0.5),))


def test_with_known_disks_adds_static_obstacles():
    w = empty_world()
    w2 = w.with_known_disks([Disk(center=(5, 5), radius=0.4)])
    added = [oid for oid in w2.object_ids() if oid.startswith("_discovered")]
    assert len(added) == 1
    pose, surface = w2.initial.object_poses[added[0]]
    assert surface == GROUND_ID and pose.xy == (5.0, 5.0)
    assert not w.object_ids() == w2.object_ids()  # original untouched


def test_grasped_object_must_share_surface():
    b = _block("b", 0.5)
    table = WorldObject(id="t", footprint=box(-1, -1, 1, 1), height=0.4)
    w = world_with_objects(
        [b, table], {"b": (Pose2(8, 8, 0), "t"),
                     "t": (Pose2(8, 8, 0), GROUND_ID)})
    bad = Configuration(robot_pose=Pose2(1, 1, 0), robot_surface=GROUND_ID,
                        object_poses=w.initial.object_poses,
                        grasped=("b", Pose2(0, 0, 0)))
    with pytest.raises(WorldError, match="surface"):
        w.validate_configuration(bad)


# -- serialization -----------------------------------------------------------


@pytest.mark.parametrize("family,params", [
    ("known-env", {"n_obstacles": 6}),
    ("doorways", {"n_doorways": 2, "n_objects": 3}),
    ("platforms", {"n_platforms": 3}),
    ("unknown-env", {"n_hidden": 3}),
])
def test_serialize_round_trip(family, params):
    w, g = bench.make_scenario(family, params, seed=4)
    doc = serialize_world(w, g)
    w2, g2 = load_world(json.loads(json.dumps(doc)))
    assert w2.object_ids() == w.object_ids()
    assert g2 == g
    assert w2.sensor_range == w.sensor_range
    assert len(w2.hidden_obstacles) == len(w.hidden_obstacles)
    assert w2.initial.robot_pose.distance_to(w.initial.robot_pose) < 1e-9
    for oid, (pose, surface) in w.initial.object_poses.items():
        p2, s2 = w2.initial.object_poses[oid]
        assert s2 == surface and p2.distance_to(pose) < 1e-9
        assert abs(p2.theta - pose.theta) < 1e-9
    # geometry survives to within serialization rounding
    for oid in w.object_ids():
        if oid == GROUND_ID:
            continue
        assert w2.objects[oid].footprint.symmetric_difference(
            w.objects[oid].footprint).area < 1e-9
    # and a re-serialization is byte-identical
    assert json.dumps(serialize_world(w2, g2), sort_keys=True) == \
        json.dumps(doc, sort_keys=True)


def test_load_world_rejects_garbage():
    with pytest.raises(WorldError):
        load_world({"robot": {}})
