"""Headless execution simulator.

Runs a plan against the ground-truth world in a plan-execute-monitor
loop: each action is executed by the reactive layer at a fixed control
period, hidden obstacles are discovered by a range sensor, and a
violated reachability contract triggers replanning with the discoveries
folded in as known obstacles.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, replace

from shapely.geometry import Point

from . import c3, geometry, planner, reactive
from .c3 import ActionInstance, Plan, SymbolicState
from .geometry import FreespaceDecomposition, Pose2, wrap_angle
from .planner import PlannerConfig, PlannerStats
from .reactive import CONTROL_DT, ContractStatus, GeodesicController, UnicycleCommand
from .world import GROUND_ID, ROBOT_ID, Configuration, Disk, GoalSpec, World

TRACE_COLUMNS = ("t", "x", "y", "theta", "surface", "v", "omega", "grasped", "event")

# Heading mismatch beyond which a push re-mounts the grasp before tracking.
REMOUNT_TOL = 0.3

# Tracking watchdog: if the tracked point moves less than STALL_EPS over
# STALL_WINDOW simulated seconds, the path is replanned in place.
STALL_WINDOW = 2.0
STALL_EPS = 0.01


class SimulationError(RuntimeError):
    pass


@dataclass
class SimConfig:
    action_timeout: float = 60.0    # wall-clock cap per action, simulated seconds
    max_replans: int = 5
    pos_tol: float = 0.01           # navigation convergence, tighter than goal tol
    heading_tol: float = 0.05
    push_tol: float = 0.02


@dataclass
class TraceRow:
    t: float
    x: float
    y: float
    theta: float
    surface: str
    v: float
    omega: float
    grasped: str
    event: str


@dataclass
class ExecutionTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for r in self.rows:
                w.writerow([f"{r.t:.3f}", f"{r.x:.6f}", f"{r.y:.6f}",
                            f"{r.theta:.6f}", r.surface, f"{r.v:.6f}",
                            f"{r.omega:.6f}", r.grasped, r.event])


@dataclass
class ExecutionResult:
    success: bool
    replans: int
    sim_time: float
    reason: str | None
    discovered: list[Disk]
    final_config: Configuration
    plan: Plan | None
    plan_stats: list[PlannerStats]
    wall_time_s: float = 0.0

    def to_json(self) -> dict:
        return {
            "success": self.success,
            "replans": self.replans,
            "sim_time_s": round(self.sim_time, 3),
            "reason": self.reason,
            "discovered": [{"center": list(d.center), "radius": d.radius}
                           for d in self.discovered],
            "plan_len": len(self.plan) if self.plan is not None else None,
            "expansions": sum(s.expansions for s in self.plan_stats),
            "plan_time_s": round(sum(s.total_time_s for s in self.plan_stats), 6),
            "wall_time_s": round(self.wall_time_s, 6),
        }


# -- gait primitives -------------------------------------------------------


def apply_primitive(world: World, config: Configuration, name: str,
                    **kw) -> Configuration:
    """Discrete effect of one gait primitive on a configuration.

    Walk/PushWalk displace continuously during execution; here they set
    the commanded end pose. Mount/Dismount toggle the grasp, JumpUp and
    JumpAcross teleport between surfaces.
    """
    if name == "Walk":
        return replace(config, robot_pose=kw["pose"])
    if name == "PushWalk":
        pose: Pose2 = kw["pose"]
        obj = kw["obj"]
        d = c3.mount_offset(world, obj)
        poses = dict(config.object_poses)
        old_theta = poses[obj][0].theta
        poses[obj] = (Pose2(pose.x + d * math.cos(pose.theta),
                            pose.y + d * math.sin(pose.theta), old_theta),
                      poses[obj][1])
        return replace(config, robot_pose=pose, object_poses=poses)
    if name == "Mount":
        obj = kw["obj"]
        obj_pose = config.object_poses[obj][0]
        heading = kw["p_mount"].theta
        robot = c3.robot_pose_for_grasp(world, obj, obj_pose.xy, heading)
        return replace(config, robot_pose=robot, grasped=(obj, kw["p_mount"]))
    if name == "Dismount":
        if config.grasped is None:
            raise SimulationError("Dismount without a grasp")
        return replace(config, robot_pose=kw["p_robot"], grasped=None)
    if name in ("JumpUp", "JumpAcross"):
        return replace(config, robot_pose=kw["pose"], robot_surface=kw["to"])
    raise SimulationError(f"unknown primitive {name!r}")


# -- the engine ------------------------------------------------------------


class Simulator:
    def __init__(self, world: World, goal: GoalSpec, planner_cfg: PlannerConfig,
                 sim_cfg: SimConfig | None = None):
        self.base = world
        self.goal = goal
        self.pcfg = planner_cfg
        self.scfg = sim_cfg or SimConfig()
        self.config = world.initial
        self.discovered: list[Disk] = []
        self._seen: set = set()
        self.trace = ExecutionTrace()
        self.t = 0.0

    # -- bookkeeping -------------------------------------------------------

    def _row(self, v: float = 0.0, omega: float = 0.0, event: str = "") -> None:
        p = self.config.robot_pose
        self.trace.append(TraceRow(self.t, p.x, p.y, p.theta,
                                   self.config.robot_surface, v, omega,
                                   self.config.grasped_id() or "", event))

    def _set_robot(self, pose: Pose2) -> None:
        if self.config.grasped is not None:
            obj = self.config.grasped[0]
            d = c3.mount_offset(self.base, obj)
            poses = dict(self.config.object_poses)
            old = poses[obj][0]
            poses[obj] = (Pose2(pose.x + d * math.cos(pose.theta),
                                pose.y + d * math.sin(pose.theta), old.theta),
                          poses[obj][1])
            self.config = replace(self.config, robot_pose=pose, object_poses=poses)
        else:
            self.config = replace(self.config, robot_pose=pose)

    def known_world(self) -> World:
        """The robot's model: the base world with every discovered disk
        folded in as a static obstacle, at the current configuration."""
        if not self.discovered:
            return self.base.with_configuration(self.config)
        w = self.base.with_known_disks(list(self.discovered))
        poses = dict(self.config.object_poses)
        for oid, placement in w.initial.object_poses.items():
            poses.setdefault(oid, placement)
        return w.with_configuration(replace(self.config, object_poses=poses))

    def _sense(self) -> bool:
        new = reactive.sense(self.base, self.config.robot_pose,
                             self.base.sensor_range, already=frozenset(self._seen))
        for d in new:
            self.discovered.append(d)
            self._seen.add(d.center)
            self._row(event="discover")
        return bool(new)

    def _extras(self, surface: str) -> list:
        if surface != GROUND_ID:
            return []
        return [d.polygon() for d in self.discovered]

    # -- reactive navigation -----------------------------------------------

    def _freespace(self, surface: str, radius: float, ignore: frozenset):
        comps = geometry.free_space(self.base, surface, radius,
                                    config=self.config, ignore=ignore,
                                    extra_obstacles=self._extras(surface))
        return FreespaceDecomposition(comps)

    def _track(self, goal_xy, surface: str, radius: float, ignore: frozenset,
               center_of, steer) -> ContractStatus:
        """Shared discover-monitor-steer loop.

        `center_of()` reads the tracked point (robot or pair center) off
        the configuration; `steer(controller)` issues one command and
        integrates it. Returns when the tracked point converges, the
        contract breaks, or the action times out.
        """
        deadline = self.t + self.scfg.action_timeout
        controller = None
        stall_t, stall_p = self.t, center_of()
        while True:
            if self._sense():
                controller = None
            if self.t - stall_t > STALL_WINDOW:
                if math.dist(center_of(), stall_p) < STALL_EPS:
                    # Wedged against the region boundary: replan the
                    # tracked path from the current position.
                    controller = None
                stall_t, stall_p = self.t, center_of()
            if controller is None:
                decomp = self._freespace(surface, radius, ignore)
                status = reactive.monitor_contract(decomp, Pose2(*center_of(), 0.0),
                                                   Pose2(*goal_xy, 0.0))
                if not status.satisfied:
                    self._row(event="violation")
                    return status
                cid = geometry.locate_component(decomp, center_of())
                try:
                    controller = GeodesicController(
                        decomp.component(cid).region, center_of(), goal_xy,
                        self.base.robot.v_max, self.base.robot.omega_max)
                except reactive.ReactiveError:
                    self._row(event="violation")
                    return ContractStatus.violated("goal-unreachable")
            done = steer(controller)
            self.t += CONTROL_DT
            if done:
                return ContractStatus.ok()
            if self.t > deadline:
                self._row(event="timeout")
                return ContractStatus.violated("timeout")

    def _navigate(self, target: Pose2, surface: str,
                  ignore: frozenset = frozenset({ROBOT_ID})) -> ContractStatus:
        def steer(controller: GeodesicController) -> bool:
            pose = self.config.robot_pose
            cmd = controller.step(pose)
            self._set_robot(reactive.integrate_unicycle(pose, cmd))
            self._row(v=cmd.v, omega=cmd.omega)
            return math.dist(self.config.robot_pose.xy, target.xy) <= self.scfg.pos_tol

        status = self._track(target.xy, surface, self.base.robot.radius,
                             ignore, lambda: self.config.robot_pose.xy, steer)
        if status.satisfied:
            self._align(target.theta)
        return status

    def _align(self, theta: float) -> None:
        while abs(wrap_angle(theta - self.config.robot_pose.theta)) > self.scfg.heading_tol:
            err = wrap_angle(theta - self.config.robot_pose.theta)
            omega = max(-self.base.robot.omega_max,
                        min(self.base.robot.omega_max, reactive.K_OMEGA * err))
            pose = self.config.robot_pose
            self._set_robot(reactive.integrate_unicycle(
                pose, UnicycleCommand(0.0, omega)))
            self._row(omega=omega)
            self.t += CONTROL_DT

    def _push_to(self, act: ActionInstance, target: Pose2) -> ContractStatus:
        """Drive a grasped object's center along the pair-freespace path.

        The object center is the tracked output (exactly feedback
        linearizable through the gripping Jacobian); the circumscribed
        pair disk keeps both bodies collision-free as long as the pair
        center stays in the pair freespace.
        """
        obj = act.p("obj")
        surface = act.p("base")
        world = self.base
        rho = world.objects[obj].disk_radius
        r = world.robot.radius
        pair_r = c3.pair_radius(world, obj)
        obj_xy = self.config.object_poses[obj][0].xy
        h0 = c3._travel_heading(self.config.object_poses[obj][0], target)
        h_cur = self.config.robot_pose.theta
        dth = wrap_angle(h0 - h_cur)
        if abs(dth) > REMOUNT_TOL:
            # The grasp heading disagrees with the push direction, so the
            # pair disk would start misaligned with the corridor the push
            # was planned through. Walk around the object at standoff and
            # re-attach facing the travel direction; the sweep is checked
            # against the robot freespace before committing.
            decomp = self._freespace(surface, r, frozenset({ROBOT_ID}))
            arc = [h_cur + f * dth for f in (0.2, 0.4, 0.6, 0.8, 1.0)]
            spots = [c3.robot_pose_for_grasp(world, obj, obj_xy, h,
                                             extra=c3.GRASP_STANDOFF)
                     for h in arc]
            comps = {geometry.locate_component(decomp, p.xy) for p in spots}
            if None in comps or len(comps) > 1:
                self._row(event="violation")
                return ContractStatus.violated("robot-outside-component")
            self.t += (rho + r) * abs(dth) / world.robot.v_max
            self.config = apply_primitive(world, self.config, "Mount",
                                          obj=obj, p_mount=Pose2(0.0, 0.0, h0))
        heading_f = c3._travel_heading(self.config.object_poses[obj][0], target)
        goal_pair = c3.pair_center(world, obj, target.xy, heading_f)

        def obj_center():
            return self.config.object_poses[obj][0].xy

        def pair_of(pose: Pose2):
            return (pose.x + rho * math.cos(pose.theta),
                    pose.y + rho * math.sin(pose.theta))

        def steer(controller: GeodesicController) -> bool:
            pose = self.config.robot_pose
            cur = obj_center()
            # Pure pursuit on the object center toward the pair path,
            # each pair waypoint shifted one robot radius along travel.
            pc = pair_of(pose)
            while controller.index < len(controller.path) - 1 and \
                    math.dist(pc, controller.path[controller.index]) < reactive.WAYPOINT_TOL:
                controller.index += 1
            i = min(controller.index, len(controller.path) - 1)
            wp = controller.path[i]
            if i == len(controller.path) - 1:
                obj_wp = (target.x, target.y)
            else:
                nxt = controller.path[min(i + 1, len(controller.path) - 1)]
                phi = math.atan2(nxt[1] - wp[1], nxt[0] - wp[0]) \
                    if math.dist(wp, nxt) > 1e-9 else pose.theta
                obj_wp = (wp[0] + r * math.cos(phi), wp[1] + r * math.sin(phi))
            err = (obj_wp[0] - cur[0], obj_wp[1] - cur[1])
            dist = math.hypot(*err)
            speed = min(reactive.K_V * dist, world.robot.v_max)
            if dist > 1e-9:
                v_obj = (err[0] / dist * speed, err[1] / dist * speed)
            else:
                v_obj = (0.0, 0.0)
            _, T_inv = reactive.grip_transform(pose.theta, rho + r)
            v = T_inv[0, 0] * v_obj[0] + T_inv[0, 1] * v_obj[1]
            omega = T_inv[1, 0] * v_obj[0] + T_inv[1, 1] * v_obj[1]
            # Uniform scaling keeps the commanded object velocity direction
            # while respecting actuation limits and pair clearance.
            pt = Point(pc)
            clearance = float(controller.region.exterior.distance(pt))
            for hole in controller.region.interiors:
                clearance = min(clearance, float(hole.distance(pt)))
            step = math.hypot(v, rho * omega) * CONTROL_DT
            s = 1.0
            if abs(v) > world.robot.v_max:
                s = min(s, world.robot.v_max / abs(v))
            if abs(omega) > world.robot.omega_max:
                s = min(s, world.robot.omega_max / abs(omega))
            if step * s > clearance - 1e-3:
                # Clamp by pair clearance only for steps that would exit
                # the region; boundary-parallel pushes must stay live.
                nxt = reactive.integrate_unicycle(
                    pose, UnicycleCommand(s * v, s * omega))
                if not controller.region.covers(Point(pair_of(nxt))):
                    s = min(s, max(0.0, clearance - 1e-3) / step) \
                        if step > 1e-12 else s
            v, omega = s * v, s * omega
            self._set_robot(reactive.integrate_unicycle(pose, UnicycleCommand(v, omega)))
            self._row(v=v, omega=omega)
            return math.dist(obj_center(), target.xy) <= self.scfg.push_tol

        return self._track(goal_pair, surface, pair_r,
                           frozenset({ROBOT_ID, obj}),
                           lambda: pair_of(self.config.robot_pose), steer)

    # -- one action --------------------------------------------------------

    def _execute(self, act: ActionInstance) -> ContractStatus:
        self._row(event=f"{act.name}-start")
        name = act.name
        world = self.base
        if name == "move":
            status = self._navigate(act.p("p_target"), act.p("base"))
        elif name == "jump":
            target: Pose2 = act.p("p_target")
            self._align(math.atan2(target.y - self.config.robot_pose.y,
                                   target.x - self.config.robot_pose.x)
                        if math.dist(target.xy, self.config.robot_pose.xy) > 1e-9
                        else target.theta)
            self.config = apply_primitive(world, self.config,
                                          "JumpUp", pose=target, to=act.p("to"))
            self.t += CONTROL_DT
            status = ContractStatus.ok()
        elif name == "grasp":
            obj = act.p("obj")
            approach = c3.robot_pose_for_grasp(
                world, obj, self.config.object_poses[obj][0].xy,
                act.p("p_mount").theta, extra=c3.GRASP_STANDOFF)
            status = self._navigate(approach, act.p("base"))
            if status.satisfied:
                self.config = apply_primitive(world, self.config, "Mount",
                                              obj=obj, p_mount=act.p("p_mount"))
                self.t += CONTROL_DT
                if self.config.object_poses[obj][0].distance_to(
                        act.p("p_target")) > self.scfg.push_tol:
                    status = self._push_to(act, act.p("p_target"))
        elif name == "push":
            status = self._push_to(act, act.p("p_target"))
        elif name == "release":
            self.config = apply_primitive(world, self.config, "Dismount",
                                          p_robot=act.p("p_robot"))
            poses = dict(self.config.object_poses)
            obj = act.p("obj")
            poses[obj] = (act.p("p_obj"), poses[obj][1])
            self.config = replace(self.config, object_poses=poses)
            self.t += CONTROL_DT
            status = ContractStatus.ok()
        else:
            raise SimulationError(f"unknown action {name!r}")
        if status.satisfied:
            self._row(event=f"{name}-end")
        return status

    def _snap_to(self, expected: SymbolicState) -> None:
        """Close the residual tracking error by snapping to the planned
        post-state; every snap is below the navigation tolerance."""
        # Frame the snap in the base world: expected states predate any
        # obstacles discovered after their plan was made.
        cfg = c3.config_from_state(self.base, expected)
        poses = {oid: pl for oid, pl in cfg.object_poses.items()
                 if oid in self.base.objects}
        self.config = Configuration(robot_pose=cfg.robot_pose,
                                    robot_surface=cfg.robot_surface,
                                    object_poses=poses, grasped=cfg.grasped)

    # -- the loop ----------------------------------------------------------

    def run(self, plan_: Plan | None = None) -> ExecutionResult:
        t0 = time.perf_counter()
        stats: list[PlannerStats] = []
        replans = 0
        reason = None
        if plan_ is None:
            plan_, st = planner.plan(self.known_world(), self.goal, self.pcfg)
            stats.append(st)
        self._row(event="start")
        while plan_ is not None:
            interrupted = False
            for i, act in enumerate(plan_.steps):
                status = self._execute(act)
                if status.satisfied:
                    self._snap_to(plan_.expected_states[i + 1])
                    continue
                replans += 1
                reason = status.reason
                if replans > self.scfg.max_replans:
                    plan_ = None
                    break
                cfg = replace(self.pcfg, rng_seed=self.pcfg.rng_seed + replans)
                plan_, st = planner.plan(self.known_world(), self.goal, cfg)
                stats.append(st)
                interrupted = True
                break
            if not interrupted:
                break
        self._row(event="end")
        if plan_ is None:
            success = False
            reason = reason or "planner-failure"
        else:
            state = c3.state_from_config(self.base, self.config)
            success = c3.entails(state, self.goal)
            reason = None if success else "goal-missed"
        return ExecutionResult(success=success, replans=replans, sim_time=self.t,
                               reason=reason, discovered=list(self.discovered),
                               final_config=self.config, plan=plan_,
                               plan_stats=stats,
                               wall_time_s=time.perf_counter() - t0)


def simulate(world: World, goal: GoalSpec, mode: str = "global", seed: int = 0,
             plan_: Plan | None = None, planner_cfg: PlannerConfig | None = None,
             sim_cfg: SimConfig | None = None) -> tuple[ExecutionResult, ExecutionTrace]:
    pcfg = planner_cfg or PlannerConfig()
    pcfg = replace(pcfg, mode=mode, rng_seed=seed)
    engine = Simulator(world, goal, pcfg, sim_cfg)
    result = engine.run(plan_)
    return result, engine.trace


def save_result(result: ExecutionResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result.to_json(), fh, indent=2)
        fh.write("\n")
