"""Benchmark harness: scenario generators for the four experiment
families, the seeded benchmark driver with a paired local/global
protocol, and CSV/JSON aggregation with nearest-rank percentile bands.
"""

from __future__ import annotations

import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from shapely.geometry import Point, Polygon, box

from . import c3, geometry, planner, sim
from .geometry import Pose2
from .planner import PlannerConfig
from .world import (GROUND_ID, Configuration, Disk, GoalConstraint, GoalSpec,
                    RobotSpec, World, WorldObject, circumradius)

FAMILIES = ("known-env", "doorways", "platforms", "unknown-env", "toy", "file")

RESULT_METRICS = ("expansions", "mean_expansion_s", "plan_time_s",
                  "samples", "plan_len", "replans")


class BenchError(RuntimeError):
    pass


def derive_seed(*parts) -> int:
    """Deterministic seed from heterogeneous parts (no process salt)."""
    return zlib.crc32("|".join(str(p) for p in parts).encode())


def _rng(*parts) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(derive_seed(*parts)))


def _square(side: float) -> Polygon:
    h = side / 2
    return box(-h, h * -1, h, h)


def _block(oid: str, side: float, height: float = 0.0) -> WorldObject:
    shape = _square(side)
    return WorldObject(id=oid, footprint=shape, height=height, movable=True,
                      disk_radius=circumradius(shape))


# -- known environment -----------------------------------------------------

KNOWN_ROOM = 10.0
KNOWN_ROBOT_R = 0.2
KNOWN_BLOCK_SIDE = 0.5
KNOWN_GOAL = (8.6, 1.4)
KNOWN_GOAL_TOL = 0.3


def _convex_obstacle(rng: np.random.Generator) -> Polygon:
    """Random convex polygon: 4-7 vertices on a circle of circumradius
    U(0.3, 0.9), irregular angular spacing."""
    n = int(rng.integers(4, 8))
    c = rng.uniform(0.3, 0.9)
    while True:
        angles = np.sort(rng.uniform(0.0, 2 * math.pi, n))
        if np.min(np.diff(np.concatenate([angles, [angles[0] + 2 * math.pi]]))) > 0.3:
            break
    pts = [(c * math.cos(a), c * math.sin(a)) for a in angles]
    return Polygon(pts)


def _reaches(world: World, radius: float, ignore: frozenset, a, b) -> bool:
    comps = geometry.free_space(world, GROUND_ID, radius, ignore=ignore)
    decomp = geometry.FreespaceDecomposition(comps)
    ca = geometry.locate_component(decomp, a)
    return ca is not None and ca == geometry.locate_component(decomp, b)


def _known_env_solvable(world: World) -> bool:
    """Structural audit: the robot can reach a grasp approach of the
    block, and the robot-block pair can reach the goal position."""
    r = world.robot.radius
    block = world.objects["block"]
    block_pos = world.initial.object_poses["block"][0]
    start = world.initial.robot_pose.xy
    standoff = block.disk_radius + r + c3.GRASP_STANDOFF + 0.01
    approach_ok = any(
        _reaches(world, r, frozenset({"R"}), start,
                 (block_pos.x - standoff * math.cos(a),
                  block_pos.y - standoff * math.sin(a)))
        for a in np.linspace(0, 2 * math.pi, 16, endpoint=False))
    if not approach_ok:
        return False
    pr = block.disk_radius + r
    heading = math.atan2(KNOWN_GOAL[1] - block_pos.y, KNOWN_GOAL[0] - block_pos.x)
    c_from = c3.pair_center(world, "block", block_pos.xy, heading)
    c_to = c3.pair_center(world, "block", KNOWN_GOAL, heading)
    return _reaches(world, pr, frozenset({"R", "block"}), c_from, c_to)


def gen_known_env(n_obstacles: int, seed: int) -> tuple[World, GoalSpec]:
    if not 0 <= n_obstacles <= 20:
        raise BenchError("n_obstacles must be in 0..20")
    for attempt in range(32):
        rng = _rng("known-env", n_obstacles, seed, attempt)
        world = _try_known_env(n_obstacles, rng)
        if world is not None and _known_env_solvable(world):
            goal = GoalSpec((GoalConstraint("pose(block)", KNOWN_GOAL,
                                            KNOWN_GOAL_TOL),))
            return world, goal
    raise BenchError(f"known-env generation failed (n={n_obstacles}, seed={seed})")


def _try_known_env(n: int, rng: np.random.Generator) -> World | None:
    room = box(0, 0, KNOWN_ROOM, KNOWN_ROOM)
    start = Pose2(1.0, 1.0, 0.0)
    block_pos = Pose2(float(rng.uniform(1.8, 4.0)), float(rng.uniform(6.0, 8.5)), 0.0)
    keep_clear = [Point(start.xy).buffer(KNOWN_ROBOT_R + 0.15),
                  Point(block_pos.xy).buffer(KNOWN_BLOCK_SIDE + 0.3),
                  Point(KNOWN_GOAL).buffer(KNOWN_BLOCK_SIDE + 0.4)]
    obstacles: list[tuple[Polygon, Pose2]] = []
    tries = 0
    while len(obstacles) < n:
        tries += 1
        if tries > 400:
            return None
        shape = _convex_obstacle(rng)
        pose = Pose2(float(rng.uniform(1.0, 9.0)), float(rng.uniform(1.0, 9.0)), 0.0)
        placed = geometry.place_polygon(shape, pose)
        if not room.contains(placed):
            continue
        if any(placed.buffer(0.08).intersects(p) for p in keep_clear):
            continue
        if any(placed.buffer(0.08).intersects(geometry.place_polygon(s, p))
               for s, p in obstacles):
            continue
        obstacles.append((shape, pose))
    objects = [_block("block", KNOWN_BLOCK_SIDE, height=0.6)]
    poses = {"block": (block_pos, GROUND_ID)}
    for i, (shape, pose) in enumerate(obstacles):
        oid = f"obstacle_{i}"
        objects.append(WorldObject(id=oid, footprint=shape, height=0.5))
        poses[oid] = (pose, GROUND_ID)
    initial = Configuration(robot_pose=start, robot_surface=GROUND_ID,
                            object_poses=poses)
    try:
        return World(room, objects,
                     RobotSpec.disk(KNOWN_ROBOT_R, jump_dz_max=0.2), initial)
    except Exception:
        return None


# -- doorways --------------------------------------------------------------

DOOR_ROOM = 12.0
DOOR_ROBOT_R = 0.25
DOOR_WIDTH = 6 * DOOR_ROBOT_R           # 3x robot diameter
DOOR_WALL_T = 0.3
DOOR_BLOCK_SIDE = 0.65

# Doorway center locations 1-5 and two free-space locations 6-7.
DOOR_LOCATIONS = {
    1: (6.0, 9.0), 2: (4.95, 6.0), 3: (7.65, 6.0), 4: (3.0, 3.0), 5: (9.0, 3.0),
    6: (10.0, 9.0), 7: (1.5, 9.0),
}
# Heading of the corridor through each doorway (push-through direction).
DOOR_AXES = {1: 0.0, 2: math.pi / 2, 3: -math.pi / 2, 4: 0.0, 5: 0.0}


def _wall_segments(n_doorways: int) -> list[Polygon]:
    """Walls in their quoted order of addition, with the doorways that
    exist for this count left open."""
    t = DOOR_WALL_T / 2
    w = DOOR_WIDTH / 2
    walls: list[Polygon] = []

    def v_wall(x, y0, y1, doors):
        spans, y = [], y0
        for dc in sorted(doors):
            spans.append((y, dc - w))
            y = dc + w
        spans.append((y, y1))
        for a, b in spans:
            if b - a > 1e-9:
                walls.append(box(x - t, a, x + t, b))

    def h_wall(y, x0, x1, doors):
        spans, x = [], x0
        for dc in sorted(doors):
            spans.append((x, dc - w))
            x = dc + w
        spans.append((x, x1))
        for a, b in spans:
            if b - a > 1e-9:
                walls.append(box(a, y - t, b, y + t))

    # Vertical wall with doorway 1.
    v_wall(6.0, 0.0, DOOR_ROOM, [DOOR_LOCATIONS[1][1]])
    # Horizontal wall with doorways 2 and 3; spans only the left half
    # until doorway 3 exists.
    if n_doorways == 2:
        h_wall(6.0, 0.0, 6.0 - t, [DOOR_LOCATIONS[2][0]])
    elif n_doorways >= 3:
        # Two halves that butt against the vertical wall without overlap.
        h_wall(6.0, 0.0, 6.0 - t, [DOOR_LOCATIONS[2][0]])
        h_wall(6.0, 6.0 + t, DOOR_ROOM, [DOOR_LOCATIONS[3][0]])
    # Center walls with doorways 4 and 5 (lower half).
    if n_doorways >= 4:
        v_wall(3.0, 0.0, 6.0 - t, [DOOR_LOCATIONS[4][1]])
    if n_doorways >= 5:
        v_wall(9.0, 0.0, 6.0 - t, [DOOR_LOCATIONS[5][1]])
    return walls


def gen_doorways(n_doorways: int, n_objects: int, seed: int) -> tuple[World, GoalSpec]:
    if not 1 <= n_doorways <= 5:
        raise BenchError("n_doorways must be in 1..5")
    if not 0 <= n_objects <= 7:
        raise BenchError("n_objects must be in 0..7")
    rng = _rng("doorways", n_doorways, n_objects, seed)
    room = box(0, 0, DOOR_ROOM, DOOR_ROOM)
    objects: list[WorldObject] = []
    poses = {}
    for i, wall in enumerate(_wall_segments(n_doorways)):
        oid = f"wall_{i}"
        objects.append(WorldObject(id=oid, footprint=wall, height=0.5))
        poses[oid] = (Pose2(0.0, 0.0, 0.0), GROUND_ID)
    # Blockers first: every existing doorway gets one, in random order.
    doors = list(range(1, n_doorways + 1))
    rng.shuffle(doors)
    free = [loc for loc in range(1, 8) if loc > n_doorways]
    rng.shuffle(free)
    slots = doors[:n_objects] + free[:max(0, n_objects - n_doorways)]
    for j, loc in enumerate(slots):
        oid = f"object_{j}"
        objects.append(_block(oid, DOOR_BLOCK_SIDE, height=0.6))
        x, y = DOOR_LOCATIONS[loc]
        poses[oid] = (Pose2(x, y, 0.0), GROUND_ID)
    initial = Configuration(robot_pose=Pose2(1.0, 1.0, 0.0),
                            robot_surface=GROUND_ID, object_poses=poses)
    world = World(room, objects,
                  RobotSpec.disk(DOOR_ROBOT_R, jump_dz_max=0.2), initial)
    goal = GoalSpec((GoalConstraint("pose(R)", (10.5, 1.5), 0.3),))
    return world, goal


# -- platforms -------------------------------------------------------------

PLAT_STRIP = 3.0
PLAT_DEPTH = 6.0
PLAT_STEP = 2.0                 # height difference between adjacent levels
PLAT_BLOCK_H = 1.0
PLAT_BLOCK_SIDE = 0.5
PLAT_ROBOT = dict(jump_dz_max=1.0, jump_gap_max=0.8)
PLAT_ROBOT_R = 0.15


def gen_platforms(n_platforms: int, seed: int) -> tuple[World, GoalSpec]:
    if not 2 <= n_platforms <= 6:
        raise BenchError("n_platforms must be in 2..6")
    rng = _rng("platforms", n_platforms, seed)
    width = PLAT_STRIP * (n_platforms + 1)
    room = box(0, 0, width, PLAT_DEPTH)
    objects: list[WorldObject] = []
    poses = {}
    for k in range(1, n_platforms + 1):
        oid = f"platform_{k}"
        strip = box(PLAT_STRIP * k, 0, PLAT_STRIP * (k + 1), PLAT_DEPTH)
        objects.append(WorldObject(id=oid, footprint=strip,
                                   height=PLAT_STEP * k))
        poses[oid] = (Pose2(0.0, 0.0, 0.0), GROUND_ID)
    # One block per level (ground counts as level 0), random spawn on the
    # interior of its level's walkable strip.
    start = Pose2(1.0, 1.0, 0.0)
    for k in range(n_platforms):
        oid = f"block_{k}"
        objects.append(_block(oid, PLAT_BLOCK_SIDE, height=PLAT_BLOCK_H))
        surface = GROUND_ID if k == 0 else f"platform_{k}"
        while True:
            x = float(rng.uniform(PLAT_STRIP * k + 0.9, PLAT_STRIP * k + 2.1))
            y = float(rng.uniform(0.9, PLAT_DEPTH - 0.9))
            if k > 0 or math.dist((x, y), start.xy) > 1.2:
                break
        poses[oid] = (Pose2(x, y, 0.0), surface)
    initial = Configuration(robot_pose=start, robot_surface=GROUND_ID,
                            object_poses=poses)
    world = World(room, objects, RobotSpec.disk(PLAT_ROBOT_R, **PLAT_ROBOT),
                  initial)
    goal = GoalSpec((GoalConstraint(f"atop(R,platform_{n_platforms})", 1),))
    return world, goal


# -- unknown environment ---------------------------------------------------

UNK_ROOM = 12.0
UNK_ROBOT_R = 0.25
UNK_HALL_X = 9.0                # hallway spans x in [9, 12]
UNK_WALL_Y = (5.85, 6.15)
UNK_DOOR_X = (4.0, 5.5)         # doorway in the interior wall, crate-parked
UNK_GOAL = (10.5, 11.0)
UNK_SENSOR = 3.0


def _unknown_env_base() -> tuple[list[WorldObject], dict]:
    y0, y1 = UNK_WALL_Y
    walls = [box(0.0, y0, UNK_DOOR_X[0], y1),
             box(UNK_DOOR_X[1], y0, UNK_HALL_X, y1)]
    objects = [WorldObject(id=f"wall_{i}", footprint=w, height=0.5)
               for i, w in enumerate(walls)]
    poses = {o.id: (Pose2(0.0, 0.0, 0.0), GROUND_ID) for o in objects}
    crate = _block("crate", 0.65, height=0.6)
    objects.append(crate)
    poses["crate"] = (Pose2((UNK_DOOR_X[0] + UNK_DOOR_X[1]) / 2, 6.0, 0.0),
                      GROUND_ID)
    return objects, poses


def gen_unknown_env(n_hidden: int, seed: int,
                    blocked: bool = False) -> tuple[World, GoalSpec]:
    """Hallway map: cheapest route runs up the right hallway; a movable
    crate parks in the only doorway of the interior wall. Hidden disks go
    in the hallway; `blocked` swaps in a single wall-to-wall disk."""
    if not 0 <= n_hidden <= 8:
        raise BenchError("n_hidden must be in 0..8")
    objects, poses = _unknown_env_base()
    room = box(0, 0, UNK_ROOM, UNK_ROOM)
    start = Pose2(1.0, 1.0, 0.0)
    robot = RobotSpec.disk(UNK_ROBOT_R, jump_dz_max=0.2)
    goal = GoalSpec((GoalConstraint("pose(R)", UNK_GOAL, 0.3),))
    if blocked:
        # Seal the wall gap: the disk spans to within half a robot
        # diameter of the wall end on one side and the room wall on the
        # other, so the cheap route is discovered closed at sensor range.
        rng = _rng("unknown-env-blocked", seed)
        cx = float(rng.uniform(10.35, 10.65))
        cy = float(6.0 + rng.uniform(-0.1, 0.1))
        hidden = (Disk(center=(cx, cy), radius=1.2),)
    else:
        hidden = _separated_disks(n_hidden, seed, robot.radius)
    initial = Configuration(robot_pose=start, robot_surface=GROUND_ID,
                            object_poses=poses)
    world = World(room, objects, robot, initial, hidden_obstacles=hidden,
                  sensor_range=UNK_SENSOR)
    return world, goal


def _separated_disks(n: int, seed: int, robot_r: float) -> tuple[Disk, ...]:
    """Hidden disks in the hallway, well separated: pairwise clearance and
    clearance to walls/boundary exceed one robot diameter plus margin."""
    sep = 2 * robot_r + 0.3
    wall = box(UNK_DOOR_X[1], UNK_WALL_Y[0], UNK_HALL_X, UNK_WALL_Y[1])
    for attempt in range(64):
        rng = _rng("unknown-env", n, seed, attempt)
        disks: list[Disk] = []
        tries = 0
        while len(disks) < n and tries < 400:
            tries += 1
            r = float(rng.uniform(0.2, 0.3))
            x = float(rng.uniform(UNK_HALL_X + r + sep, UNK_ROOM - r - sep))
            y = float(rng.uniform(2.5, 10.0))
            d = Disk(center=(x, y), radius=r)
            if Point(x, y).distance(wall) < r + sep:
                continue
            if any(math.dist(d.center, e.center) < d.radius + e.radius + sep
                   for e in disks):
                continue
            disks.append(d)
        if len(disks) == n:
            return tuple(disks)
    raise BenchError(f"could not separate {n} hidden disks (seed={seed})")


# -- staircase toy problem -------------------------------------------------


def gen_toy(seed: int = 0) -> tuple[World, GoalSpec]:
    """Minimal two-level problem: reach the top of a tall table by first
    pushing a cart against it and jumping via the cart."""
    room = box(0, 0, 6.0, 6.0)
    table = WorldObject(id="table", footprint=box(4.5, 2.0, 6.0, 4.0),
                        height=2.0)
    cart = _block("cart", 0.5, height=1.0)
    initial = Configuration(
        robot_pose=Pose2(1.0, 3.0, 0.0), robot_surface=GROUND_ID,
        object_poses={"table": (Pose2(0.0, 0.0, 0.0), GROUND_ID),
                      "cart": (Pose2(1.8, 3.0, 0.0), GROUND_ID)})
    world = World(room, [table, cart],
                  RobotSpec.disk(0.15, jump_dz_max=1.0, jump_gap_max=0.8),
                  initial)
    goal = GoalSpec((GoalConstraint("atop(R,table)", 1),))
    return world, goal


# -- dispatch --------------------------------------------------------------


def make_scenario(family: str, params: dict, seed: int) -> tuple[World, GoalSpec]:
    if family == "known-env":
        return gen_known_env(int(params.get("n_obstacles", 0)), seed)
    if family == "doorways":
        return gen_doorways(int(params.get("n_doorways", 1)),
                            int(params.get("n_objects", 0)), seed)
    if family == "platforms":
        return gen_platforms(int(params.get("n_platforms", 2)), seed)
    if family == "unknown-env":
        return gen_unknown_env(int(params.get("n_hidden", 0)), seed,
                               blocked=bool(int(params.get("blocked", 0))))
    if family == "toy":
        return gen_toy(seed)
    if family == "file":
        from .world import load_world_file
        return load_world_file(params["path"])
    raise BenchError(f"unknown family {family!r}")


# -- driver ----------------------------------------------------------------


@dataclass
class BenchmarkRecord:
    family: str
    params: dict
    mode: str
    seed: int
    success: bool
    expansions: int
    mean_expansion_s: float
    plan_time_s: float
    samples: int
    plan_len: int | None
    replans: int | None

    def row(self, param_keys: list[str]) -> list:
        return ([self.family] + [self.params.get(k, "") for k in param_keys]
                + [self.mode, self.seed, int(self.success), self.expansions,
                   f"{self.mean_expansion_s:.6g}", f"{self.plan_time_s:.6g}",
                   self.samples,
                   "" if self.plan_len is None else self.plan_len,
                   "" if self.replans is None else self.replans])


def _nearest_rank(sorted_vals: list[float], pct: float) -> float:
    if not sorted_vals:
        return float("nan")
    idx = max(0, math.ceil(pct / 100.0 * len(sorted_vals)) - 1)
    return sorted_vals[idx]


def summarize(records: list[BenchmarkRecord]) -> dict:
    groups: dict[tuple, list[BenchmarkRecord]] = {}
    for r in records:
        key = (r.family, tuple(sorted(r.params.items())), r.mode)
        groups.setdefault(key, []).append(r)
    out = {}
    for (family, params, mode), rs in sorted(groups.items(), key=str):
        entry = {"family": family, "params": dict(params), "mode": mode,
                 "trials": len(rs),
                 "success_rate": sum(r.success for r in rs) / len(rs)}
        for metric in RESULT_METRICS:
            vals = sorted(float(getattr(r, metric))
                          for r in rs if getattr(r, metric) is not None)
            if not vals:
                continue
            entry[metric] = {
                "mean": sum(vals) / len(vals),
                "p5": _nearest_rank(vals, 5),
                "median": _nearest_rank(vals, 50),
                "p95": _nearest_rank(vals, 95),
            }
        key_str = f"{family}|{json.dumps(dict(params), sort_keys=True)}|{mode}"
        out[key_str] = entry
    return out


def _one_trial(args) -> BenchmarkRecord:
    family, params, mode, world_seed, plan_seed, pcfg_kw, execute = args
    world, goal = make_scenario(family, params, world_seed)
    cfg = PlannerConfig(mode=mode, rng_seed=plan_seed, **pcfg_kw)
    if execute:
        result, _trace = sim.simulate(world, goal, mode=mode, seed=plan_seed,
                                      planner_cfg=cfg)
        stats = result.plan_stats[0] if result.plan_stats else None
        return BenchmarkRecord(
            family=family, params=params, mode=mode, seed=world_seed,
            success=result.success,
            expansions=sum(s.expansions for s in result.plan_stats),
            mean_expansion_s=(stats.mean_expansion_s if stats else 0.0),
            plan_time_s=sum(s.total_time_s for s in result.plan_stats),
            samples=sum(s.samples_drawn for s in result.plan_stats),
            plan_len=(len(result.plan) if result.plan else None),
            replans=result.replans)
    plan_, stats = planner.plan(world, goal, cfg)
    return BenchmarkRecord(
        family=family, params=params, mode=mode, seed=world_seed,
        success=stats.success, expansions=stats.expansions,
        mean_expansion_s=stats.mean_expansion_s,
        plan_time_s=stats.total_time_s, samples=stats.samples_drawn,
        plan_len=stats.plan_length, replans=None)


def run_benchmark(family: str, grid: list[dict], modes: list[str], trials: int,
                  master_seed: int, jobs: int = 1, local_repeats: int = 1,
                  execute: bool = False,
                  planner_kw: dict | None = None) -> list[BenchmarkRecord]:
    """Paired protocol: each cell runs `trials` Global worlds; Local mode
    then attempts each Global-solved world `local_repeats` times with its
    own derived seeds."""
    if not grid:
        raise BenchError("empty parameter grid")
    # Desk-scale default: a greedier weight keeps deep rearrangement
    # instances (doorways, platforms) inside the trial budget.
    pcfg_kw = {"heuristic_weight": 3.0, "max_expansions": 12000}
    pcfg_kw.update(planner_kw or {})
    records: list[BenchmarkRecord] = []
    global_jobs, local_jobs = [], []
    for ci, params in enumerate(grid):
        for t in range(trials):
            ws = derive_seed(master_seed, family, ci, t)
            if "global" in modes:
                global_jobs.append((family, params, "global", ws,
                                    derive_seed(ws, "global"), pcfg_kw, execute))
    global_records = _run_jobs(global_jobs, jobs)
    records.extend(global_records)
    solved = {(tuple(sorted(r.params.items())), r.seed): r.success
              for r in global_records}
    if "local" in modes:
        for ci, params in enumerate(grid):
            pk = tuple(sorted(params.items()))
            for t in range(trials):
                ws = derive_seed(master_seed, family, ci, t)
                if "global" in modes and not solved.get((pk, ws), False):
                    continue
                for j in range(local_repeats):
                    local_jobs.append((family, params, "local", ws,
                                       derive_seed(ws, "local", j), pcfg_kw,
                                       execute))
        records.extend(_run_jobs(local_jobs, jobs))
    return records


def _run_jobs(job_list: list, jobs: int) -> list[BenchmarkRecord]:
    if jobs <= 1 or len(job_list) <= 1:
        return [_one_trial(a) for a in job_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one_trial, job_list))


# -- file formats ----------------------------------------------------------


def param_keys(records: list[BenchmarkRecord]) -> list[str]:
    keys: list[str] = []
    for r in records:
        for k in r.params:
            if k not in keys:
                keys.append(k)
    return keys


def write_records_csv(records: list[BenchmarkRecord], path) -> None:
    import csv as _csv
    keys = param_keys(records)
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["family"] + keys + ["mode", "seed", "success", "expansions",
                                        "mean_expansion_s", "plan_time_s",
                                        "samples", "plan_len", "replans"])
        for r in records:
            w.writerow(r.row(keys))


def write_summary(records: list[BenchmarkRecord], path) -> None:
    with open(path, "w") as fh:
        json.dump(summarize(records), fh, indent=2, sort_keys=True)
        fh.write("\n")
