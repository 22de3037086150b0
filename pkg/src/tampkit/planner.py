"""Deliberative layer: parameter sampling over an implicit planning
graph, lazy best-first search, and the two feasibility backends.

The local backend certifies motions by collision-checking a swept hull
along the straight line (bounded-length, fine-grained primitives). The
global backend certifies motions by connected-component membership in a
cached freespace decomposition, which is the reachability contract the
reactive layer honors.
"""

from __future__ import annotations

import logging
import math
import time
import zlib
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np
from shapely.geometry import Point
from shapely.ops import unary_union

from . import c3, geometry
from .c3 import (
    ActionInstance,
    Plan,
    SymbolicState,
    action,
    atop_var,
    pose_var,
)
from .geometry import (
    FreespaceComponent,
    FreespaceDecomposition,
    Pose2,
    dilate,
    disk_polygon,
    erode,
    locate_component,
    set_distance,
    uniform_point_in_polygon,
)
from .world import GROUND_ID, ROBOT_ID, GoalSpec, World

logger = logging.getLogger(__name__)

POSE_QUANTUM = 1e-3
ANGLE_QUANTUM = 1e-2


@dataclass
class PlannerConfig:
    mode: str = "global"                # "local" | "global"
    samples_per_action: int = 50
    max_expansions: int = 2000
    heuristic_weight: float = 1.5
    rng_seed: int = 0
    time_budget: float = 60.0
    # Maximum length of one local-mode motion primitive; the local
    # baseline plans over fine-grained straight-line steps.
    local_max_step: float = 3.0

    def __post_init__(self):
        if self.mode not in ("local", "global"):
            raise ValueError(f"unknown planner mode {self.mode!r}")
        if self.samples_per_action < 1:
            raise ValueError("samples_per_action must be >= 1")
        if self.heuristic_weight < 1.0:
            raise ValueError("heuristic_weight must be >= 1")


@dataclass
class PlannerStats:
    success: bool = False
    expansions: int = 0
    mean_expansion_s: float = 0.0
    total_time_s: float = 0.0
    samples_drawn: int = 0
    plan_length: int | None = None
    lazy_checks: int = 0
    lazy_failures: int = 0


def quantize_pose(pose: Pose2) -> tuple[int, int, int]:
    return (round(pose.x / POSE_QUANTUM), round(pose.y / POSE_QUANTUM),
            round(pose.theta / ANGLE_QUANTUM))


def state_key(state: SymbolicState) -> tuple:
    parts = []
    for v, val in state.items():
        if isinstance(val, Pose2):
            parts.append((str(v), quantize_pose(val)))
        else:
            parts.append((str(v), val))
    return tuple(sorted(parts))


# -- feasibility backends --------------------------------------------------


class FeasibilityBackend:
    def __init__(self, world: World):
        self.world = world

    def isfeasible(self, p1: Pose2, p2: Pose2, surface: str, radius: float,
                   state: SymbolicState, ignore: frozenset) -> bool:
        raise NotImplementedError

    def point_feasible(self, p, surface: str, radius: float,
                       state: SymbolicState, ignore: frozenset) -> bool:
        raise NotImplementedError


class LocalBackend(FeasibilityBackend):
    """Straight-line swept-hull collision checking, bounded step length."""

    def __init__(self, world: World, max_step: float = math.inf):
        super().__init__(world)
        self.max_step = max_step

    def isfeasible(self, p1, p2, surface, radius, state, ignore):
        if p1.distance_to(p2) > self.max_step:
            return False
        config = c3.config_from_state(self.world, state)
        d1 = disk_polygon(p1.xy, radius)
        d2 = disk_polygon(p2.xy, radius)
        hull = unary_union([d1, d2]).convex_hull
        return not geometry.collision_check(hull, config, self.world,
                                            ignore=ignore, surface_id=surface)

    def point_feasible(self, p, surface, radius, state, ignore):
        xy = p.xy if isinstance(p, Pose2) else tuple(p)
        config = c3.config_from_state(self.world, state)
        return not geometry.collision_check(disk_polygon(xy, radius), config,
                                            self.world, ignore=ignore,
                                            surface_id=surface)


class GlobalBackend(FeasibilityBackend):
    """Connected-component reachability over a cached freespace
    decomposition, recomputed whenever a relevant object pose changes."""

    def __init__(self, world: World):
        super().__init__(world)
        self._cache: dict[tuple, list[FreespaceComponent]] = {}
        self.decompositions = 0
        self.decomposition_time = 0.0

    def _key(self, surface, radius, state, ignore):
        placements = []
        for oid in self.world.object_ids():
            # The surface object's own pose locates its top region, so it
            # must key the cache along with everything resting on it.
            if oid in ignore or oid == GROUND_ID:
                continue
            pose = state.get(pose_var(oid))
            if pose is None:
                continue
            placements.append((oid, quantize_pose(pose), c3._surface_of(state, oid)))
        return (surface, round(radius / POSE_QUANTUM), frozenset(ignore),
                tuple(sorted(placements)))

    def components(self, surface, radius, state, ignore) -> list[FreespaceComponent]:
        key = self._key(surface, radius, state, ignore)
        comps = self._cache.get(key)
        if comps is None:
            t0 = time.perf_counter()
            config = c3.config_from_state(self.world, state)
            comps = geometry.free_space(self.world, surface, radius,
                                        config=config, ignore=ignore)
            self.decomposition_time += time.perf_counter() - t0
            self.decompositions += 1
            self._cache[key] = comps
        return comps

    def isfeasible(self, p1, p2, surface, radius, state, ignore):
        comps = self.components(surface, radius, state, ignore)
        decomp = FreespaceDecomposition(comps)
        c1 = locate_component(decomp, p1.xy)
        c2 = locate_component(decomp, p2.xy)
        return c1 is not None and c1 == c2

    def point_feasible(self, p, surface, radius, state, ignore):
        xy = p.xy if isinstance(p, Pose2) else tuple(p)
        comps = self.components(surface, radius, state, ignore)
        return locate_component(FreespaceDecomposition(comps), xy) is not None


def make_backend(world: World, config: PlannerConfig) -> FeasibilityBackend:
    if config.mode == "local":
        return LocalBackend(world, max_step=config.local_max_step)
    return GlobalBackend(world)


def local_isfeasible(p1: Pose2, p2: Pose2, state: SymbolicState, world: World,
                     surface: str | None = None, radius: float | None = None,
                     ignore: frozenset = frozenset({ROBOT_ID})) -> bool:
    """Swept-hull straight-line feasibility for the robot disk."""
    surface = surface or c3._surface_of(state, ROBOT_ID)
    radius = radius if radius is not None else world.robot.radius
    return LocalBackend(world).isfeasible(p1, p2, surface, radius, state, ignore)


def global_isfeasible(p1: Pose2, p2: Pose2, radius: float, state: SymbolicState,
                      world: World, surface: str | None = None,
                      ignore: frozenset = frozenset({ROBOT_ID})) -> bool:
    """Connected-component feasibility for a disk body of given radius."""
    surface = surface or c3._surface_of(state, ROBOT_ID)
    return GlobalBackend(world).isfeasible(p1, p2, surface, radius, state, ignore)


def component_adjacency(decomp: FreespaceDecomposition, robot) -> dict:
    """Pairs of components a jump can traverse: small enough gap and
    height difference. Symmetric, irreflexive; fills decomp.adjacency."""
    adj = {}
    comps = decomp.components
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            a, b = comps[i], comps[j]
            if abs(a.z - b.z) > robot.jump_dz_max:
                continue
            gap = set_distance(a.region, b.region)
            if gap <= robot.jump_gap_max:
                adj[(a.id, b.id)] = gap
                adj[(b.id, a.id)] = gap
    decomp.adjacency.update(adj)
    return adj


# -- parameter sampling ----------------------------------------------------


def _stable_hash(obj) -> int:
    """Process-independent hash; Python's hash() is salted per run."""
    return zlib.crc32(repr(obj).encode())


def _rng_for(cfg: PlannerConfig, schema: str, salt: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([cfg.rng_seed & 0xFFFFFFFF, _stable_hash(schema),
                                salt & 0xFFFFFFFF]))


def sample_parameters(schema: str, world: World, state: SymbolicState,
                      cfg: PlannerConfig, rng: np.random.Generator,
                      backend: FeasibilityBackend | None = None) -> list[tuple]:
    """Draw parameter tuples for one schema at the given state."""
    backend = backend or make_backend(world, cfg)
    sampler = _Sampler(world, cfg, backend)
    if schema == "move":
        return [(p,) for p in sampler.move_targets(state, rng)]
    if schema == "jump":
        return sampler.jump_candidates(state, rng)
    if schema == "grasp":
        return [(h,) for h in sampler.grasp_headings(rng)]
    if schema == "push":
        grasped = c3._grasped_in(state)
        if grasped is None:
            return []
        return [(p,) for p in sampler.push_targets(state, grasped, rng)]
    if schema == "release":
        return [()]
    raise ValueError(schema)


class _Sampler:
    """Per-planner sampling helper; draws are deterministic functions of
    the planner seed and the (surface, object-placement) situation."""

    def __init__(self, world: World, cfg: PlannerConfig, backend: FeasibilityBackend):
        self.world = world
        self.cfg = cfg
        self.backend = backend
        self.samples_drawn = 0

    def _regions(self, state: SymbolicState, surface: str, radius: float,
                 ignore: frozenset):
        """Sampleable regions on a surface: freespace components in global
        mode, the eroded surface polygon in local mode."""
        if isinstance(self.backend, GlobalBackend):
            comps = self.backend.components(surface, radius, state, ignore)
            return [c.region for c in comps]
        config = c3.config_from_state(self.world, state)
        poly, _ = self.world.surface_geometry(surface, config)
        return erode(poly, radius)

    def _sample_regions(self, regions, n, rng):
        if not regions:
            return []
        areas = np.array([r.area for r in regions])
        weights = areas / areas.sum()
        out = []
        for _ in range(n):
            region = regions[rng.choice(len(regions), p=weights)]
            pt = uniform_point_in_polygon(region, rng)
            self.samples_drawn += 1
            if pt is not None:
                out.append(pt)
        return out

    def move_targets(self, state, rng) -> list[Pose2]:
        surface = c3._surface_of(state, ROBOT_ID)
        regions = self._regions(state, surface, self.world.robot.radius,
                                frozenset({ROBOT_ID}))
        pts = self._sample_regions(regions, self.cfg.samples_per_action, rng)
        return [Pose2(x, y, rng.uniform(-math.pi, math.pi)) for x, y in pts]

    def grasp_headings(self, rng) -> list[float]:
        # A fixed coarse fan keeps axis-aligned approaches (corridors,
        # doorways) reachable at low sample counts; extras are random.
        n = max(1, self.cfg.samples_per_action // 8)
        self.samples_drawn += 8 + n
        fan = [k * math.pi / 4 - math.pi for k in range(8)]
        return fan + list(rng.uniform(-math.pi, math.pi, size=n))

    def push_targets(self, state, obj: str, rng) -> list[Pose2]:
        surface = c3._surface_of(state, obj)
        radius = c3.pair_radius(self.world, obj)
        regions = self._regions(state, surface, radius, frozenset({ROBOT_ID, obj}))
        n = max(4, self.cfg.samples_per_action // 4)
        pts = self._sample_regions(regions, n, rng)
        # Push targets are object positions; the pair center trails one
        # robot radius behind, so shift samples from pair space.
        r = self.world.robot.radius
        out = []
        cur = state.get(pose_var(obj))
        for x, y in pts:
            h = math.atan2(y - cur.y, x - cur.x) if (x, y) != cur.xy else cur.theta
            out.append(Pose2(x + r * math.cos(h), y + r * math.sin(h), cur.theta))
        return out

    def jump_candidates(self, state, rng) -> list[tuple[str, str, Pose2, Pose2]]:
        """(frm, to, p_target, approach) tuples across reachable surface
        pairs; targets lie within the jump gap of the launch region and
        approaches are the nearest launch poses."""
        world = self.world
        robot = world.robot
        frm = c3._surface_of(state, ROBOT_ID)
        config = c3.config_from_state(world, state)
        z_from = world.top_z(frm, config)
        launch_regions = self._regions(state, frm, robot.radius, frozenset({ROBOT_ID}))
        if not launch_regions:
            return []
        launch_union = unary_union(launch_regions)
        out = []
        n_per_surface = max(2, self.cfg.samples_per_action // 4)
        for to in world.objects:
            if to == frm:
                continue
            try:
                z_to = world.top_z(to, config)
            except Exception:
                continue
            if abs(z_to - z_from) > robot.jump_dz_max:
                continue
            land_regions = self._regions(state, to, robot.radius,
                                         frozenset({ROBOT_ID}))
            band = unary_union(
                [r.buffer(robot.jump_gap_max) for r in launch_regions])
            for region in land_regions:
                strip = region.intersection(band)
                if strip.is_empty or strip.area <= 0:
                    continue
                polys = geometry._as_polygons(strip)
                pts = self._sample_regions(polys, n_per_surface, rng)
                for x, y in pts:
                    near = launch_union.boundary.interpolate(
                        launch_union.boundary.project(Point(x, y)))
                    gap = math.dist((near.x, near.y), (x, y))
                    if gap > robot.jump_gap_max - 2e-3:
                        continue
                    heading = math.atan2(y - near.y, x - near.x)
                    # Pull the launch pose slightly inside the region.
                    lx = near.x - 1e-3 * math.cos(heading)
                    ly = near.y - 1e-3 * math.sin(heading)
                    out.append((frm, to, Pose2(x, y, heading), Pose2(lx, ly, heading)))
        return out


# -- search ----------------------------------------------------------------


@dataclass
class _Node:
    state: SymbolicState
    key: tuple
    g: float
    depth: int
    parent: "_Node | None" = None
    act: ActionInstance | None = None


class _DistanceField:
    """Geodesic distance-to-goal over the static freespace (movables
    removed), rasterized on a coarse grid.  Movables can always be
    relocated, so this underestimates travel while still giving the
    search a gradient through doorways and around fixed walls."""

    RES = 0.1

    def __init__(self, world: World, target_xy: tuple[float, float],
                 radius: float):
        import shapely
        from scipy.sparse.csgraph import dijkstra
        from scipy.sparse import coo_matrix

        movable = set(world.movable_ids())
        blockers = []
        for oid in world.object_ids():
            if oid in movable or oid == GROUND_ID:
                continue
            placement = world.initial.placement_of(oid)
            if placement is None or placement[1] != GROUND_ID:
                continue
            blockers.append(dilate(world.footprint_at(oid, placement[0]), radius))
        free = unary_union(erode(world.workspace, radius))
        if blockers:
            free = free.difference(unary_union(blockers))

        minx, miny, maxx, maxy = world.workspace.bounds
        res = self.RES
        nx = max(2, int(math.ceil((maxx - minx) / res)))
        ny = max(2, int(math.ceil((maxy - miny) / res)))
        xs = minx + (np.arange(nx) + 0.5) * res
        ys = miny + (np.arange(ny) + 0.5) * res
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        open_mask = shapely.contains_xy(free, gx.ravel(), gy.ravel())
        open_mask = open_mask.reshape(nx, ny)
        self._origin = (minx, miny)
        self._shape = (nx, ny)

        idx = -np.ones((nx, ny), dtype=np.int64)
        idx[open_mask] = np.arange(open_mask.sum())
        rows, cols, costs = [], [], []
        for dx, dy, c in ((1, 0, res), (0, 1, res),
                          (1, 1, res * math.sqrt(2)), (1, -1, res * math.sqrt(2))):
            a = idx[max(0, -dx):nx - max(0, dx), max(0, -dy):ny - max(0, dy)]
            b = idx[max(0, dx):nx + min(0, dx) or nx, max(0, dy):ny + min(0, dy) or ny]
            ok = (a >= 0) & (b >= 0)
            rows.append(a[ok]); cols.append(b[ok])
            costs.append(np.full(ok.sum(), c))
        n = int(open_mask.sum())
        if n == 0:
            self._field = np.full((nx, ny), np.inf)
            return
        graph = coo_matrix(
            (np.concatenate(costs), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n))
        src = self._cell(target_xy)
        field = np.full((nx, ny), np.inf)
        if idx[src] >= 0:
            dist = dijkstra(graph, directed=False, indices=idx[src])
            field[open_mask] = dist
        else:
            # Goal cell rasterized as blocked: seed from the nearest open
            # cell instead.
            open_cells = np.argwhere(open_mask)
            d2 = ((open_cells[:, 0] - src[0]) ** 2
                  + (open_cells[:, 1] - src[1]) ** 2)
            near = tuple(open_cells[int(np.argmin(d2))])
            dist = dijkstra(graph, directed=False, indices=idx[near])
            field[open_mask] = dist
        self._field = field

    def _cell(self, p) -> tuple[int, int]:
        i = int((p[0] - self._origin[0]) / self.RES)
        j = int((p[1] - self._origin[1]) / self.RES)
        return (min(max(i, 0), self._shape[0] - 1),
                min(max(j, 0), self._shape[1] - 1))

    def distance(self, p) -> float | None:
        """Geodesic distance in meters, or None off the field."""
        v = self._field[self._cell(p)]
        return float(v) if np.isfinite(v) else None


class Planner:
    def __init__(self, world: World, goal: GoalSpec, cfg: PlannerConfig):
        self.world = world
        self.goal = goal
        self.cfg = cfg
        self.backend = make_backend(world, cfg)
        self.sampler = _Sampler(world, cfg, self.backend)
        self.stats = PlannerStats()
        self._banned: set[tuple] = set()       # (parent key, action)
        self._edge_memo: dict[tuple, bool] = {}
        self._goal_targets = self._positional_targets()
        self._atop_targets = self._surface_targets()
        self._sample_cache: dict[tuple, list] = {}
        self._fields = {}
        for v, t in self._goal_targets:
            oid = v.args[0]
            radius = (world.robot.radius if oid == ROBOT_ID
                      else c3.pair_radius(world, oid))
            try:
                self._fields[v] = _DistanceField(world, t[:2], radius)
            except Exception:
                logger.debug("distance field unavailable for %s", v, exc_info=True)

    # heuristic: largest remaining positional error over goal constraints
    def _positional_targets(self):
        targets = []
        for gc in self.goal.constraints:
            v = c3.parse_variable(gc.variable)
            if v.kind == "pose" and isinstance(gc.target, (tuple, Pose2)):
                t = gc.target
                if isinstance(t, Pose2):
                    t = (t.x, t.y, t.theta)
                targets.append((v, tuple(t)))
        return targets

    def _surface_targets(self):
        """atop goals contribute distance-to-surface terms."""
        out = []
        for gc in self.goal.constraints:
            v = c3.parse_variable(gc.variable)
            if v.kind == "atop" and gc.target == 1:
                poly, z = self.world.surface_geometry(v.args[1], self.world.initial)
                out.append((v, v.args[0], poly, z))
        return out

    def heuristic(self, state: SymbolicState) -> float:
        h = 0.0
        for v, t in self._goal_targets:
            val = state.get(v)
            if isinstance(val, Pose2):
                d = None
                field = self._fields.get(v)
                if field is not None and c3._surface_of(state, v.args[0]) == GROUND_ID:
                    d = field.distance(val.xy)
                h = max(h, d if d is not None else math.dist(val.xy, t[:2]))
        for v, oid, poly, z_goal in self._atop_targets:
            if state.get(v) == 1:
                continue
            pose = state.get(pose_var(oid))
            if pose is None:
                continue
            term = float(poly.exterior.distance(Point(pose.xy))) + 1.0
            world = self.world
            robot = world.robot
            config = c3.config_from_state(world, state)
            surf = c3._surface_of(state, oid)
            z_cur = world.top_z(surf, config)
            dz = max(0.0, z_goal - z_cur)
            if dz > 0:
                # Each jump closes at most jump_dz_max of height and costs
                # a handful of actions.
                term += 4.0 * math.ceil(dz / robot.jump_dz_max - 1e-9)
            if dz > robot.jump_dz_max:
                # A bridge object must be staged: reward moving some
                # mountable movable toward the goal.
                best = None
                for mid in world.movable_ids():
                    if world.objects[mid].height > robot.jump_dz_max:
                        continue
                    mpose = state.get(pose_var(mid))
                    if mpose is None:
                        continue
                    d = float(poly.exterior.distance(Point(mpose.xy)))
                    if best is None or d < best:
                        best = d
                term += best if best is not None else 10.0
            h = max(h, term)
        return h

    # -- successor generation ---------------------------------------------

    def _situation_key(self, state: SymbolicState) -> tuple:
        parts = [("robot_surface", c3._surface_of(state, ROBOT_ID)),
                 ("grasped", c3._grasped_in(state))]
        for oid in self.world.movable_ids():
            pose = state.get(pose_var(oid))
            parts.append((oid, quantize_pose(pose) if pose else None,
                          c3._surface_of(state, oid)))
        return tuple(parts)

    def _cached_samples(self, state: SymbolicState) -> dict:
        key = self._situation_key(state)
        cached = self._sample_cache.get(key)
        if cached is None:
            salt = _stable_hash(key)
            # In global mode any in-component target is reachable, so
            # free-roaming move samples add nothing: moves exist only to
            # line up jumps and to hit positional goals.
            cached = {
                "move": (self.sampler.move_targets(
                    state, _rng_for(self.cfg, "move", salt))
                    if self.cfg.mode == "local" else []),
                "jump": self.sampler.jump_candidates(
                    state, _rng_for(self.cfg, "jump", salt)),
                "grasp": self.sampler.grasp_headings(
                    _rng_for(self.cfg, "grasp", salt)),
            }
            grasped = c3._grasped_in(state)
            cached["push"] = (
                self.sampler.push_targets(
                    state, grasped, _rng_for(self.cfg, "push", salt))
                if grasped else [])
            # Goal bias: positional goal targets join the candidate pool
            # (their feasibility is still checked like any other sample).
            for v, t in self._goal_targets:
                theta = t[2] if len(t) == 3 else 0.0
                if v.args[0] == ROBOT_ID:
                    cached["move"].append(Pose2(t[0], t[1], theta))
                elif v.args[0] == grasped:
                    cur = state.get(pose_var(grasped))
                    cached["push"].append(Pose2(t[0], t[1], cur.theta))
            if grasped is not None:
                cached["push"].extend(self._bridge_targets(state, grasped))
            self._sample_cache[key] = cached
        return cached

    def _workspace_interior(self):
        """Workspace eroded by the robot radius, for cheap containment
        filtering of pose-local candidates."""
        if not hasattr(self, "_ws_interior"):
            parts = erode(self.world.workspace, self.world.robot.radius)
            self._ws_interior = unary_union(parts) if parts else Point()
        return self._ws_interior

    def _bridge_targets(self, state: SymbolicState, obj: str) -> list[Pose2]:
        """Push targets parked against the wall of a higher surface, close
        enough that the pushed object's top bridges a jump onto it.
        Candidate surfaces are those out of direct jump range from the
        object's base but within range from the object's top."""
        out = []
        world = self.world
        robot = world.robot
        spec = world.objects[obj]
        rho = spec.disk_radius
        cur = state.get(pose_var(obj))
        if spec.height > robot.jump_dz_max:
            return out          # the object top itself is unreachable
        base = c3._surface_of(state, obj)
        config = c3.config_from_state(world, state)
        z_base = world.top_z(base, config)
        # Standoff placing the eroded object top roughly mid jump range.
        d = rho / math.sqrt(2) - 2 * robot.radius + 0.6 * robot.jump_gap_max
        d = max(d, rho * 0.2)
        for sid in world.object_ids():
            if sid in (obj, base, GROUND_ID):
                continue
            try:
                z_top = world.top_z(sid, config)
            except Exception:
                continue
            if z_top - z_base <= robot.jump_dz_max:
                continue        # directly jumpable, no bridge needed
            if z_top - (z_base + spec.height) > robot.jump_dz_max:
                continue        # out of range even from the object top
            placement = config.placement_of(sid)
            if placement is None:
                continue
            poly = world.footprint_at(sid, placement[0])
            boundary = poly.exterior
            base = boundary.project(Point(cur.xy))
            for offs in (0.0, -0.6, 0.6):
                pt = boundary.interpolate(base + offs)
                away = (cur.x - pt.x, cur.y - pt.y)
                norm = math.hypot(*away)
                if norm < 1e-9:
                    continue
                out.append(Pose2(pt.x + away[0] / norm * d,
                                 pt.y + away[1] / norm * d, cur.theta))
        return out

    def successors(self, node: _Node):
        state = node.state
        world = self.world
        samples = self._cached_samples(state)
        surface = c3._surface_of(state, ROBOT_ID)
        robot_pose = state.get(pose_var(ROBOT_ID))
        grasped = c3._grasped_in(state)
        cands: list[tuple[ActionInstance, float]] = []

        if grasped is None:
            targets = list(samples["move"])
            cap = self.cfg.local_max_step
            in_cap = sum(1 for p in targets
                         if robot_pose.distance_to(p) <= cap)
            if self.cfg.mode == "local" and in_cap < 2:
                # Pose-local rescue fan: the step cap means far-field
                # samples are unreachable, so when the cached draw leaves
                # the pose stranded, add short hops around it; these
                # depend on the pose, bypassing the situation cache.
                interior = self._workspace_interior()
                for i in range(8):
                    th = i * math.pi / 4
                    for rad in (self.cfg.local_max_step,
                                self.cfg.local_max_step / 2):
                        p = Pose2(robot_pose.x + rad * math.cos(th),
                                  robot_pose.y + rad * math.sin(th), th)
                        if interior.contains(Point(p.xy)):
                            targets.append(p)
            for p in targets:
                cands.append((action("move", base=surface, obj=ROBOT_ID, p_target=p),
                              robot_pose.distance_to(p) + 1.0))
            for frm, to, p_target, approach in samples["jump"]:
                if frm != surface:
                    continue
                cands.append((action("move", base=surface, obj=ROBOT_ID,
                                     p_target=approach),
                              robot_pose.distance_to(approach) + 1.0))
                cands.append((action("jump", frm=frm, to=to, p_target=p_target),
                              robot_pose.distance_to(p_target) + 1.0))
            for oid in world.movable_ids():
                if state.get(atop_var(oid, surface)) != 1:
                    continue
                opose = state.get(pose_var(oid))
                for heading in samples["grasp"]:
                    mount = c3.robot_pose_for_grasp(world, oid, opose.xy, heading)
                    cands.append(
                        (action("grasp", base=surface, obj=oid, p_target=opose,
                                p_mount=Pose2(0, 0, heading)),
                         robot_pose.distance_to(mount) + 1.0))
        else:
            opose = state.get(pose_var(grasped))
            targets = list(samples["push"])
            # Straight-ahead candidates along the current pair heading: the
            # pair already stands at that orientation, so these stay
            # pushable through passages too tight for a turn in place.
            # They depend on the robot's heading, so they bypass the
            # situation cache.
            theta = robot_pose.theta
            ux, uy = math.cos(theta), math.sin(theta)
            targets += [Pose2(opose.x + d * ux, opose.y + d * uy, opose.theta)
                        for d in (0.5, 1.0, 2.0, 4.0, 8.0)]
            if self.cfg.mode == "local":
                # Waypoints toward each far sample, capped to the step
                # bound: long hauls chain through these regardless of the
                # heading the grasp happened to sample.
                cap = 0.95 * self.cfg.local_max_step
                for far in samples["push"]:
                    d = opose.distance_to(far)
                    if d > cap:
                        targets.append(Pose2(
                            opose.x + cap * (far.x - opose.x) / d,
                            opose.y + cap * (far.y - opose.y) / d,
                            opose.theta))
            for p in targets:
                cands.append((action("push", base=surface, obj=grasped, p_target=p),
                              opose.distance_to(p) + 1.0))
            p_robot = c3.robot_pose_for_grasp(world, grasped, opose.xy,
                                              robot_pose.theta,
                                              extra=c3.GRASP_STANDOFF)
            cands.append((action("release", base=surface, obj=grasped,
                                 p_robot=p_robot, p_obj=opose), 1.0))

        out = []
        for act, cost in cands:
            if (node.key, act) in self._banned:
                continue
            if not c3.cheap_requirements(act, state, world):
                continue
            if not self._step_within_cap(act, state):
                continue
            # Component-membership reachability is a pair of point queries
            # against a cached decomposition, so in global mode it joins
            # the cheap generation-time filters; local mode defers its
            # expensive swept-volume checks to goal-pop validation.
            if (isinstance(self.backend, GlobalBackend)
                    and not self._edge_feasible(node, act)):
                continue
            try:
                nxt = c3.effects(act, state, world)
            except c3.ContractError:
                continue
            out.append((act, nxt, cost))
        return out

    def _step_within_cap(self, act: ActionInstance, state: SymbolicState) -> bool:
        """Local mode caps every motion at local_max_step; the length test
        is pure arithmetic, so over-long edges are pruned at generation
        instead of being banned one restart at a time."""
        if self.cfg.mode != "local":
            return True
        cap = self.cfg.local_max_step
        if act.name == "move":
            return state.get(pose_var(ROBOT_ID)).distance_to(act.p("p_target")) <= cap
        if act.name == "grasp":
            obj = act.p("obj")
            approach = c3.robot_pose_for_grasp(
                self.world, obj, state.get(pose_var(obj)).xy,
                act.p("p_mount").theta, extra=c3.GRASP_STANDOFF)
            if state.get(pose_var(ROBOT_ID)).distance_to(approach) > cap:
                return False
            return state.get(pose_var(obj)).distance_to(act.p("p_target")) <= cap
        if act.name == "push":
            obj = act.p("obj")
            return state.get(pose_var(obj)).distance_to(act.p("p_target")) <= cap
        return True

    # -- lazy validation ---------------------------------------------------

    def _edge_feasible(self, parent: _Node, act: ActionInstance) -> bool:
        memo_key = (parent.key, act)
        if memo_key in self._edge_memo:
            return self._edge_memo[memo_key]
        self.stats.lazy_checks += 1
        ok = c3.geometric_requirements(act, parent.state, self.backend)
        if act.name == "jump" and ok:
            ok = self.backend.point_feasible(
                act.p("p_target").xy, act.p("to"), self.world.robot.radius,
                parent.state, frozenset({ROBOT_ID}))
        self._edge_memo[memo_key] = ok
        return ok

    def _validate_path(self, node: _Node) -> tuple:
        """Check every not-yet-validated edge on the path to `node`.
        Returns (True, None) or (False, offending parent node)."""
        chain = []
        n = node
        while n.parent is not None:
            chain.append(n)
            n = n.parent
        for n in reversed(chain):
            if not self._edge_feasible(n.parent, n.act):
                self.stats.lazy_failures += 1
                self._banned.add((n.parent.key, n.act))
                return False, n.parent
        return True, None

    # -- main loop ---------------------------------------------------------

    def plan(self) -> tuple[Plan | None, PlannerStats]:
        cfg = self.cfg
        world = self.world
        t_start = time.perf_counter()
        init_state = c3.state_from_config(world, world.initial)
        root = _Node(state=init_state, key=state_key(init_state), g=0.0, depth=0)
        if c3.entails(init_state, self.goal):
            self.stats.success = True
            self.stats.plan_length = 0
            self.stats.total_time_s = time.perf_counter() - t_start
            return Plan(steps=[], expected_states=[init_state]), self.stats

        # Lazy loop: search to the first goal-entailing node with cheap
        # checks only, then validate the whole path geometrically.  A
        # failed edge is banned and the search restarts on the pruned
        # graph; samples and geometric checks are memoized, so restarts
        # re-walk a cached graph.
        self._expansion_time = 0.0
        while (self.stats.expansions < cfg.max_expansions
               and time.perf_counter() - t_start <= cfg.time_budget):
            node = self._search_once(root, t_start)
            if node is None:
                break
            ok, _bad_parent = self._validate_path(node)
            if ok:
                plan = self._extract_plan(node)
                self.stats.success = True
                self.stats.plan_length = len(plan)
                self._finish(t_start, self._expansion_time)
                return plan, self.stats

        self._finish(t_start, self._expansion_time)
        return None, self.stats

    def _search_once(self, root: _Node, t_start: float) -> _Node | None:
        """One weighted-A* pass over the currently-unbanned graph; returns
        the first goal-entailing node popped, or None on exhaustion or
        budget expiry."""
        cfg = self.cfg
        counter = 0
        open_heap = []
        best_g = {root.key: 0.0}
        h0 = self.heuristic(root.state)
        heappush(open_heap, (cfg.heuristic_weight * h0, h0, 0, counter, root))

        while open_heap:
            if (self.stats.expansions >= cfg.max_expansions
                    or time.perf_counter() - t_start > cfg.time_budget):
                return None
            _, _, _, _, node = heappop(open_heap)
            if node.g > best_g.get(node.key, math.inf) + 1e-12:
                continue
            if c3.entails(node.state, self.goal):
                return node

            t0 = time.perf_counter()
            succ = self.successors(node)
            self._expansion_time += time.perf_counter() - t0
            self.stats.expansions += 1
            for act, nxt_state, cost in succ:
                key = state_key(nxt_state)
                g = node.g + cost
                if g >= best_g.get(key, math.inf) - 1e-12:
                    continue
                best_g[key] = g
                h = self.heuristic(nxt_state)
                counter += 1
                child = _Node(state=nxt_state, key=key, g=g, depth=node.depth + 1,
                              parent=node, act=act)
                heappush(open_heap,
                         (g + cfg.heuristic_weight * h, h, child.depth, counter,
                          child))
        return None

    def _finish(self, t_start, expansion_time):
        self.stats.total_time_s = time.perf_counter() - t_start
        self.stats.samples_drawn = self.sampler.samples_drawn
        if self.stats.expansions:
            self.stats.mean_expansion_s = expansion_time / self.stats.expansions

    def _extract_plan(self, node: _Node) -> Plan:
        steps, states = [], [node.state]
        n = node
        while n.parent is not None:
            steps.append(n.act)
            n = n.parent
            states.append(n.state)
        return Plan(steps=steps[::-1], expected_states=states[::-1])


def plan(world: World, goal: GoalSpec, cfg: PlannerConfig) -> tuple[Plan | None, PlannerStats]:
    """Search for a plan reaching the goal; returns (plan-or-None, stats)."""
    return Planner(world, goal, cfg).plan()


def validate_plan(world: World, plan_: Plan, goal: GoalSpec, mode: str = "global",
                  cfg: PlannerConfig | None = None) -> tuple[bool, str]:
    """Replay a plan with full, non-lazy requirement checks.

    Returns (ok, report); the report names the first failing step."""
    cfg = cfg or PlannerConfig(mode=mode)
    backend = make_backend(world, cfg)
    if len(plan_.expected_states) != len(plan_.steps) + 1:
        raise ValueError("malformed plan: expected_states must have steps+1 entries")
    state = plan_.expected_states[0]
    for i, act in enumerate(plan_.steps):
        if not c3.cheap_requirements(act, state, world):
            return False, f"step {i} ({act}): requirements not met"
        if not c3.geometric_requirements(act, state, backend):
            return False, f"step {i} ({act}): geometric feasibility failed"
        state = c3.effects(act, state, world)
        if not _states_close(state, plan_.expected_states[i + 1]):
            return False, f"step {i} ({act}): effects diverge from expected state"
    if not c3.entails(state, goal):
        return False, "final state does not entail the goal"
    return True, "ok"


def _states_close(a: SymbolicState, b: SymbolicState, tol: float = c3.REPLAY_TOL) -> bool:
    da, db = dict(a.items()), dict(b.items())
    if set(map(str, da)) != set(map(str, db)):
        return False
    for v, val in da.items():
        other = db[v]
        if isinstance(val, Pose2) and isinstance(other, Pose2):
            if (val.distance_to(other) > tol
                    or abs(geometry.wrap_angle(val.theta - other.theta)) > tol):
                return False
        elif val != other:
            return False
    return True
