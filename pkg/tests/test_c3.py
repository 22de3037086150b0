import json
import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import box

from tampkit import bench, c3
from tampkit.c3 import (ContractError, GRASP_STANDOFF, Plan, SymbolicState,
                        action, atop_var, cheap_requirements,
                        config_from_state, effects, entails, eval_variable,
                        grasping_var, mount_offset, pair_center, pair_radius,
                        parse_variable, plan_from_json, plan_to_json, pose_var,
                        relpose_var, robot_pose_for_grasp, state_from_config)
from tampkit.geometry import Pose2
from tampkit.world import (GROUND_ID, ROBOT_ID, Configuration, GoalConstraint,
                           GoalSpec, WorldError, WorldObject)

from conftest import empty_world, world_with_objects


def _block(oid, side, **kw):
    half = side / 2
    return WorldObject(id=oid, footprint=box(-half, -half, half, half),
                       movable=True, disk_radius=half * math.sqrt(2) * 1.01,
                       **kw)


@pytest.fixture
def block_world():
    b = _block("b", 0.5, height=0.3)
    return world_with_objects([b], {"b": (Pose2(5, 5, 0), GROUND_ID)})


def test_parse_variable_round_trip():
    v = parse_variable("atop(R, table)")
    assert v.kind == "atop" and v.args == ("R", "table")
    with pytest.raises(ValueError):
        parse_variable("speed(R)")


def test_symbolic_state_immutable_and_assign():
    s = SymbolicState({pose_var("R"): Pose2(1, 1, 0)})
    s2 = s.assign({atop_var("R", GROUND_ID): 1})
    assert s.get(atop_var("R", GROUND_ID)) is None
    assert s2.get(atop_var("R", GROUND_ID)) == 1
    s3 = s2.assign({atop_var("R", GROUND_ID): None})
    assert s3 == s


def test_grasp_exclusivity_enforced():
    s = SymbolicState({grasping_var("a"): 1})
    with pytest.raises(ContractError, match="multiple simultaneous grasps"):
        s.assign({grasping_var("b"): 1})


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=8))
def test_grasp_exclusivity_property(sequence):
    """Any sequence of grasp toggles leaves at most one active grasp."""
    s = SymbolicState()
    for oid in sequence:
        active = [v for v, val in s.items() if v.kind == "grasping" and val == 1]
        updates = {grasping_var(a.args[1]): None for a in active}
        updates[grasping_var(oid)] = 1
        s = s.assign(updates)
        assert sum(1 for v, val in s.items()
                   if v.kind == "grasping" and val == 1) <= 1


def test_eval_variable_on_configuration(block_world):
    cfg = block_world.initial
    assert eval_variable(cfg, pose_var("b")) == Pose2(5, 5, 0)
    assert eval_variable(cfg, atop_var("b", GROUND_ID)) == 1
    assert eval_variable(cfg, atop_var("b", "b")) == 0
    assert eval_variable(cfg, grasping_var("b")) == 0
    with pytest.raises(WorldError):
        eval_variable(cfg, relpose_var("b"))


def test_state_config_round_trip(block_world):
    cfg = block_world.initial
    state = state_from_config(block_world, cfg)
    back = config_from_state(block_world, state)
    assert back.robot_pose == cfg.robot_pose
    assert back.robot_surface == cfg.robot_surface
    assert back.object_poses == cfg.object_poses
    assert back.grasped == cfg.grasped


def test_state_config_round_trip_with_grasp(block_world):
    cfg = Configuration(
        robot_pose=c3.robot_pose_for_grasp(block_world, "b", (5, 5), 0.0),
        robot_surface=GROUND_ID,
        object_poses={"b": (Pose2(5, 5, 0), GROUND_ID)},
        grasped=("b", Pose2(0, 0, 0.25)))
    state = state_from_config(block_world, cfg)
    back = config_from_state(block_world, state)
    assert back.grasped == cfg.grasped


def test_entails_pose_tolerance():
    s = SymbolicState({pose_var("R"): Pose2(2.0, 2.0, 0.1)})
    assert entails(s, GoalSpec((GoalConstraint("pose(R)", (2.1, 2.0), 0.2),)))
    assert not entails(s, GoalSpec((GoalConstraint("pose(R)", (2.5, 2.0), 0.2),)))
    # unassigned variables never certify
    assert not entails(s, GoalSpec((GoalConstraint("atop(R,ground)", 1, 0.5),)))


def test_entails_heading_band():
    s = SymbolicState({pose_var("R"): Pose2(0, 0, 0.3)})
    near = GoalSpec((GoalConstraint("pose(R)", Pose2(0, 0, 0.3), 0.1),))
    far = GoalSpec((GoalConstraint("pose(R)", Pose2(0, 0, 0.3 + math.pi / 2), 0.1),))
    assert entails(s, near)
    assert not entails(s, far)


def test_pair_geometry(block_world):
    rho = block_world.objects["b"].disk_radius
    r = block_world.robot.radius
    assert mount_offset(block_world, "b") == pytest.approx(rho + r)
    assert pair_radius(block_world, "b") >= max(rho, r)
    # pair disk covers both bodies
    pc = pair_center(block_world, "b", (5, 5), 0.0)
    pr = pair_radius(block_world, "b")
    robot = robot_pose_for_grasp(block_world, "b", (5, 5), 0.0)
    assert math.dist(pc, (5, 5)) + rho <= pr + 1e-9
    assert math.dist(pc, robot.xy) + r <= pr + 1e-9


def test_robot_pose_for_grasp_contact_distance(block_world):
    p = robot_pose_for_grasp(block_world, "b", (5, 5), math.pi / 4,
                             extra=GRASP_STANDOFF)
    assert math.dist(p.xy, (5, 5)) == pytest.approx(
        mount_offset(block_world, "b") + GRASP_STANDOFF)
    assert p.theta == pytest.approx(math.pi / 4)


# -- action contracts --------------------------------------------------------


def test_cheap_requirements_move_blocked_while_grasping(block_world):
    state = state_from_config(block_world, block_world.initial)
    grasping = state.assign({grasping_var("b"): 1})
    mv = action("move", base=GROUND_ID, obj=ROBOT_ID,
                p_target=Pose2(2, 2, 0))
    assert cheap_requirements(mv, state, block_world)
    assert not cheap_requirements(mv, grasping, block_world)


def test_cheap_requirements_jump_height_threshold():
    tall = WorldObject(id="t", footprint=box(-1, -1, 1, 1), height=5.0)
    low = WorldObject(id="l", footprint=box(-1, -1, 1, 1), height=0.15)
    w = world_with_objects(
        [tall, low], {"t": (Pose2(7, 7, 0), GROUND_ID),
                      "l": (Pose2(3, 3, 0), GROUND_ID)})
    up_low = action("jump", frm=GROUND_ID, to="l", p_target=Pose2(3, 3, 0))
    up_tall = action("jump", frm=GROUND_ID, to="t", p_target=Pose2(7, 7, 0))
    near_low = state_from_config(
        w, replace(w.initial, robot_pose=Pose2(2.9, 3.0, 0.0)))
    near_tall = state_from_config(
        w, replace(w.initial, robot_pose=Pose2(6.9, 7.0, 0.0)))
    assert cheap_requirements(up_low, near_low, w)
    assert not cheap_requirements(up_tall, near_tall, w)
    # same geometry, but out of hop range
    far = state_from_config(w, w.initial)
    assert not cheap_requirements(up_low, far, w)


def test_effects_grasp_then_release_round_trip(block_world):
    state = state_from_config(block_world, block_world.initial)
    g = action("grasp", base=GROUND_ID, obj="b", p_target=Pose2(5, 5, 0),
               p_mount=Pose2(0, 0, 0.0))
    after = effects(g, state, block_world)
    assert after.get(grasping_var("b")) == 1
    rel = action("release", base=GROUND_ID, obj="b",
                 p_robot=robot_pose_for_grasp(block_world, "b", (5, 5), 0.0,
                                              extra=GRASP_STANDOFF),
                 p_obj=Pose2(5, 5, 0))
    final = effects(rel, after, block_world)
    assert final.get(grasping_var("b")) in (None, 0)
    assert final.get(pose_var("b")) == Pose2(5, 5, 0)


def test_effects_push_moves_object_and_robot(block_world):
    state = state_from_config(block_world, block_world.initial)
    g = action("grasp", base=GROUND_ID, obj="b", p_target=Pose2(5, 5, 0),
               p_mount=Pose2(0, 0, 0.0))
    after = effects(g, state, block_world)
    push = action("push", base=GROUND_ID, obj="b", p_target=Pose2(7, 5, 0))
    end = effects(push, after, block_world)
    assert end.get(pose_var("b")).distance_to(Pose2(7, 5, 0)) < 1e-9
    # robot stays mounted: contact distance preserved
    d = end.get(pose_var(ROBOT_ID)).distance_to(end.get(pose_var("b")))
    assert d == pytest.approx(mount_offset(block_world, "b"), abs=1e-6)


# -- plan serialization ------------------------------------------------------


def test_plan_json_round_trip(block_world):
    state = state_from_config(block_world, block_world.initial)
    g = action("grasp", base=GROUND_ID, obj="b", p_target=Pose2(5, 5, 0),
               p_mount=Pose2(0, 0, 0.5))
    after = effects(g, state, block_world)
    plan = Plan(steps=[g], expected_states=[after])
    doc = plan_to_json(plan)
    back = plan_from_json(json.loads(json.dumps(doc)))
    assert len(back) == 1
    assert back.steps[0].name == "grasp"
    assert back.steps[0].p("p_mount").theta == pytest.approx(0.5)
    assert back.expected_states[0].get(grasping_var("b")) == 1


def test_action_rejects_unknown_schema():
    with pytest.raises(ValueError):
        action("teleport", p_target=Pose2(0, 0, 0))
