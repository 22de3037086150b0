"""Symbolic states as variable-value constraint sets and the five action
schemas (move, jump, grasp, release, push) with requirement and effect
functions.

Requirements split into a cheap algebraic part and an expensive geometric
part delegated to a feasibility backend; the planner exploits the split
for lazy checking.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from types import MappingProxyType

from .geometry import Pose2, wrap_angle
from .world import (
    GROUND_ID,
    ROBOT_ID,
    Configuration,
    GoalSpec,
    World,
    WorldError,
)

# Internal replay tolerance (numerical noise), distinct from user-facing
# goal tolerances.
REPLAY_TOL = 1e-6
HEADING_GOAL_TOL = 0.15

SCHEMAS = ("move", "jump", "grasp", "release", "push")
_VAR_RE = re.compile(r"^(pose|atop|grasping|relative_pose)\(([^)]*)\)$")


class ContractError(RuntimeError):
    """Effects applied to a state that does not meet the requirements."""


@dataclass(frozen=True)
class Variable:
    kind: str                       # pose | atop | grasping | relative_pose
    args: tuple[str, ...]

    def __str__(self):
        return f"{self.kind}({','.join(self.args)})"


def pose_var(oid: str) -> Variable:
    return Variable("pose", (oid,))


def atop_var(oid: str, surface: str) -> Variable:
    return Variable("atop", (oid, surface))


def grasping_var(oid: str) -> Variable:
    return Variable("grasping", (ROBOT_ID, oid))


def relpose_var(oid: str) -> Variable:
    return Variable("relative_pose", (ROBOT_ID, oid))


def parse_variable(text: str) -> Variable:
    m = _VAR_RE.match(text.replace(" ", ""))
    if not m:
        raise ValueError(f"cannot parse variable {text!r}")
    return Variable(m.group(1), tuple(m.group(2).split(",")))


class SymbolicState:
    """Immutable map from variables to values; unassigned variables are
    inactive constraints."""

    __slots__ = ("_a",)

    def __init__(self, assignments: dict[Variable, object] | None = None):
        self._a = MappingProxyType(dict(assignments or {}))

    def get(self, v: Variable, default=None):
        return self._a.get(v, default)

    def items(self):
        return self._a.items()

    def assign(self, updates: dict[Variable, object]) -> "SymbolicState":
        merged = dict(self._a)
        for v, val in updates.items():
            if val is None:
                merged.pop(v, None)
            else:
                merged[v] = val
        out = SymbolicState(merged)
        grasps = [v for v, val in merged.items() if v.kind == "grasping" and val == 1]
        if len(grasps) > 1:
            raise ContractError(f"multiple simultaneous grasps: {grasps}")
        return out

    def __eq__(self, other):
        return isinstance(other, SymbolicState) and dict(self._a) == dict(other._a)

    def __repr__(self):
        parts = ", ".join(f"{v}={val}" for v, val in sorted(
            self._a.items(), key=lambda kv: str(kv[0])))
        return f"SymbolicState({parts})"


@dataclass(frozen=True)
class ActionInstance:
    name: str
    params: tuple                   # ((key, value), ...) in schema order

    def __post_init__(self):
        if self.name not in SCHEMAS:
            raise ValueError(f"unknown schema {self.name!r}")

    def p(self, key: str):
        for k, v in self.params:
            if k == key:
                return v
        raise KeyError(key)

    def __str__(self):
        args = ", ".join(f"{k}={_fmt(v)}" for k, v in self.params)
        return f"{self.name}({args})"


def _fmt(v):
    if isinstance(v, Pose2):
        return f"({v.x:.3f},{v.y:.3f},{v.theta:.3f})"
    return str(v)


def action(name: str, **params) -> ActionInstance:
    return ActionInstance(name, tuple(params.items()))


@dataclass
class Plan:
    steps: list[ActionInstance]
    expected_states: list[SymbolicState]

    def __len__(self):
        return len(self.steps)


# -- variable evaluation on configurations ---------------------------------


def eval_variable(config: Configuration, v: Variable):
    """Evaluate a variable's constraint function on a full configuration."""
    if v.kind == "pose":
        placement = config.placement_of(v.args[0])
        if placement is None:
            raise WorldError(f"unknown object in {v}")
        return placement[0]
    if v.kind == "atop":
        placement = config.placement_of(v.args[0])
        if placement is None:
            raise WorldError(f"unknown object in {v}")
        return 1 if placement[1] == v.args[1] else 0
    if v.kind == "grasping":
        return 1 if config.grasped_id() == v.args[1] else 0
    if v.kind == "relative_pose":
        if config.grasped_id() != v.args[1]:
            raise WorldError(f"{v} queried while not grasping {v.args[1]!r}")
        return config.grasped[1]
    raise ValueError(f"unknown variable kind {v.kind!r}")


def state_from_config(world: World, config: Configuration) -> SymbolicState:
    """Fully instantiated symbolic state describing one configuration."""
    a: dict[Variable, object] = {}
    a[pose_var(ROBOT_ID)] = config.robot_pose
    a[atop_var(ROBOT_ID, config.robot_surface)] = 1
    for oid, (pose, surface) in config.object_poses.items():
        a[pose_var(oid)] = pose
        a[atop_var(oid, surface)] = 1
    if config.grasped is not None:
        gid, rel = config.grasped
        a[grasping_var(gid)] = 1
        a[relpose_var(gid)] = rel
    return SymbolicState(a)


def config_from_state(world: World, state: SymbolicState) -> Configuration:
    """Reconstruct a full configuration from a complete symbolic state."""
    robot_pose = state.get(pose_var(ROBOT_ID))
    if robot_pose is None:
        raise WorldError("state does not assign the robot pose")
    robot_surface = _surface_of(state, ROBOT_ID)
    poses = {}
    for oid in world.objects:
        if oid == GROUND_ID:
            continue
        pose = state.get(pose_var(oid))
        if pose is None:
            raise WorldError(f"state does not assign pose({oid})")
        poses[oid] = (pose, _surface_of(state, oid))
    grasped = None
    for v, val in state.items():
        if v.kind == "grasping" and val == 1:
            rel = state.get(relpose_var(v.args[1]))
            grasped = (v.args[1], rel if rel is not None else Pose2(0, 0, 0))
    return Configuration(robot_pose=robot_pose, robot_surface=robot_surface,
                         object_poses=poses, grasped=grasped)


def _surface_of(state: SymbolicState, oid: str) -> str:
    for v, val in state.items():
        if v.kind == "atop" and v.args[0] == oid and val == 1:
            return v.args[1]
    raise WorldError(f"state does not place {oid!r} atop anything")


# -- goal entailment -------------------------------------------------------


def entails(state: SymbolicState, goal: GoalSpec) -> bool:
    """True iff every goal constraint is assigned and within tolerance.
    Unassigned (inactive) variables never certify a goal."""
    for c in goal.constraints:
        v = parse_variable(c.variable)
        val = state.get(v)
        if val is None:
            return False
        if isinstance(val, Pose2):
            target = c.target
            if isinstance(target, Pose2):
                target = (target.x, target.y, target.theta)
            if math.dist((val.x, val.y), target[:2]) > c.tol:
                return False
            if len(target) == 3 and abs(wrap_angle(val.theta - target[2])) > HEADING_GOAL_TOL:
                return False
        elif val != c.target:
            return False
    return True


# -- action schemas --------------------------------------------------------


def mount_offset(world: World, obj_id: str) -> float:
    """Contact distance between robot center and grasped object center."""
    return world.objects[obj_id].disk_radius + world.robot.radius


def pair_radius(world: World, obj_id: str) -> float:
    return world.objects[obj_id].disk_radius + world.robot.radius


def pair_center(world: World, obj_id: str, obj_pos: tuple[float, float],
                heading: float) -> tuple[float, float]:
    """Center of the circumscribed robot-object disk, given the object
    position and the robot heading toward it. The pair center sits one
    robot radius behind the object center."""
    r = world.robot.radius
    return (obj_pos[0] - r * math.cos(heading), obj_pos[1] - r * math.sin(heading))


# Clearance added to the contact distance for approach and release poses,
# so the robot center stays strictly outside the dilated footprint.
GRASP_STANDOFF = 0.02


def robot_pose_for_grasp(world: World, obj_id: str, obj_pos, heading: float,
                         extra: float = 0.0) -> Pose2:
    d = mount_offset(world, obj_id) + extra
    return Pose2(obj_pos[0] - d * math.cos(heading),
                 obj_pos[1] - d * math.sin(heading), heading)


def cheap_requirements(act: ActionInstance, state: SymbolicState, world: World) -> bool:
    """Algebraic/threshold part of g: atop and grasp status, jump
    thresholds. No geometric feasibility calls."""
    name = act.name
    grasped = _grasped_in(state)
    if name == "move":
        if act.p("obj") != ROBOT_ID or grasped is not None:
            return False
        return state.get(atop_var(ROBOT_ID, act.p("base"))) == 1
    if name == "jump":
        if grasped is not None:
            return False
        if state.get(atop_var(ROBOT_ID, act.p("frm"))) != 1:
            return False
        pose = state.get(pose_var(ROBOT_ID))
        target: Pose2 = act.p("p_target")
        if pose is None or pose.distance_to(target) > world.robot.jump_gap_max:
            return False
        config = config_from_state(world, state)
        dz = world.top_z(act.p("to"), config) - world.top_z(act.p("frm"), config)
        return abs(dz) <= world.robot.jump_dz_max + REPLAY_TOL
    if name == "grasp":
        obj = act.p("obj")
        if grasped is not None or not world.objects[obj].movable:
            return False
        base = act.p("base")
        return (state.get(atop_var(ROBOT_ID, base)) == 1
                and state.get(atop_var(obj, base)) == 1)
    if name == "release":
        obj = act.p("obj")
        if grasped != obj:
            return False
        base = act.p("base")
        if state.get(atop_var(obj, base)) != 1:
            return False
        d = act.p("p_robot").distance_to(act.p("p_obj"))
        return abs(d - mount_offset(world, obj)) <= 0.05
    if name == "push":
        obj = act.p("obj")
        return grasped == obj and state.get(atop_var(obj, act.p("base"))) == 1
    raise ValueError(name)


def _grasped_in(state: SymbolicState) -> str | None:
    for v, val in state.items():
        if v.kind == "grasping" and val == 1:
            return v.args[1]
    return None


def requirements(act: ActionInstance, state: SymbolicState, feas) -> bool:
    """Full g: cheap checks plus delegated geometric feasibility."""
    world = feas.world
    if not cheap_requirements(act, state, world):
        return False
    return geometric_requirements(act, state, feas)


def geometric_requirements(act: ActionInstance, state: SymbolicState, feas) -> bool:
    """The expensive part of g: the isfeasible queries."""
    world = feas.world
    name = act.name
    r = world.robot.radius
    if name == "move":
        return feas.isfeasible(
            state.get(pose_var(ROBOT_ID)), act.p("p_target"), act.p("base"), r,
            state, ignore=frozenset({ROBOT_ID}))
    if name == "jump":
        return True
    if name == "grasp":
        obj = act.p("obj")
        approach = robot_pose_for_grasp(
            world, obj, state.get(pose_var(obj)).xy, act.p("p_mount").theta,
            extra=GRASP_STANDOFF)
        ok = feas.isfeasible(
            state.get(pose_var(ROBOT_ID)), approach, act.p("base"), r,
            state, ignore=frozenset({ROBOT_ID}))
        if not ok:
            return False
        if state.get(pose_var(obj)).distance_to(act.p("p_target")) > REPLAY_TOL:
            return _pair_feasible(act, state, feas, state.get(pose_var(obj)),
                                  act.p("p_target"))
        return True
    if name == "release":
        obj = act.p("obj")
        return _pair_feasible(act, state, feas, state.get(pose_var(obj)), act.p("p_obj"))
    if name == "push":
        obj = act.p("obj")
        return _pair_feasible(act, state, feas, state.get(pose_var(obj)), act.p("p_target"))
    raise ValueError(name)


def _pair_feasible(act, state, feas, p_from: Pose2, p_to: Pose2) -> bool:
    world = feas.world
    obj = act.p("obj")
    heading = _travel_heading(p_from, p_to)
    c_from = Pose2(*pair_center(world, obj, p_from.xy, heading), heading)
    c_to = Pose2(*pair_center(world, obj, p_to.xy, heading), heading)
    return feas.isfeasible(c_from, c_to, act.p("base"), pair_radius(world, obj),
                           state, ignore=frozenset({ROBOT_ID, obj}))


def _travel_heading(p_from: Pose2, p_to: Pose2) -> float:
    if p_from.distance_to(p_to) < REPLAY_TOL:
        return p_from.theta
    return math.atan2(p_to.y - p_from.y, p_to.x - p_from.x)


def effects(act: ActionInstance, state: SymbolicState, world: World) -> SymbolicState:
    """Apply f for one action; raises ContractError when the cheap
    requirements do not hold. The input state is unchanged."""
    if not cheap_requirements(act, state, world):
        raise ContractError(f"effects of {act} applied with unmet requirements")
    name = act.name
    if name == "move":
        return state.assign({pose_var(ROBOT_ID): act.p("p_target")})
    if name == "jump":
        return state.assign({
            pose_var(ROBOT_ID): act.p("p_target"),
            atop_var(ROBOT_ID, act.p("frm")): 0,
            atop_var(ROBOT_ID, act.p("to")): 1,
        })
    if name == "grasp":
        obj = act.p("obj")
        mount = robot_pose_for_grasp(
            world, obj, act.p("p_target").xy, act.p("p_mount").theta)
        return state.assign({
            grasping_var(obj): 1,
            relpose_var(obj): act.p("p_mount"),
            pose_var(obj): act.p("p_target"),
            pose_var(ROBOT_ID): mount,
        })
    if name == "release":
        obj = act.p("obj")
        return state.assign({
            grasping_var(obj): 0,
            relpose_var(obj): None,
            pose_var(obj): act.p("p_obj"),
            pose_var(ROBOT_ID): act.p("p_robot"),
        })
    if name == "push":
        obj = act.p("obj")
        p_from = state.get(pose_var(obj))
        target: Pose2 = act.p("p_target")
        heading = _travel_heading(p_from, target)
        d = mount_offset(world, obj)
        robot = Pose2(target.x - d * math.cos(heading),
                      target.y - d * math.sin(heading), heading)
        return state.assign({pose_var(obj): target, pose_var(ROBOT_ID): robot})
    raise ValueError(name)


# -- plan serialization ----------------------------------------------------


def _value_to_json(v):
    if isinstance(v, Pose2):
        return {"pose": [v.x, v.y, v.theta]}
    return v


def _value_from_json(v):
    if isinstance(v, dict) and "pose" in v:
        return Pose2(*v["pose"])
    return v


def plan_to_json(plan: Plan) -> dict:
    return {
        "steps": [
            {"schema": a.name, "params": {k: _value_to_json(v) for k, v in a.params}}
            for a in plan.steps
        ],
        "expected_states": [
            [[str(v), _value_to_json(val)] for v, val in sorted(
                s.items(), key=lambda kv: str(kv[0]))]
            for s in plan.expected_states
        ],
    }


def plan_from_json(doc: dict) -> Plan:
    steps = [
        ActionInstance(s["schema"],
                       tuple((k, _value_from_json(v)) for k, v in s["params"].items()))
        for s in doc["steps"]
    ]
    states = [
        SymbolicState({parse_variable(name): _value_from_json(val) for name, val in entries})
        for entries in doc["expected_states"]
    ]
    return Plan(steps=steps, expected_states=states)


def save_plan(plan: Plan, path) -> None:
    with open(path, "w") as fh:
        json.dump(plan_to_json(plan), fh, indent=2)


def load_plan(path) -> Plan:
    with open(path) as fh:
        return plan_from_json(json.load(fh))
