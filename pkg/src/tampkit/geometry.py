"""2D polygon geometry for planning: offsets, booleans, freespace
decomposition, swept hulls, and shortest paths inside polygons.

All coordinates are double-precision meters. Boolean results are snapped
to a 1e-9 m grid to break near-degenerate overlaps. Disk offsets
approximate arcs with chords at max sagitta 1e-3 m; dilation pads the
radius by the sagitta so it never under-includes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely import affinity
from shapely.errors import GEOSException
from shapely.geometry import LineString, MultiPolygon, Point, Polygon
from shapely.ops import unary_union

SNAP_GRID = 1e-9
ARC_SAGITTA = 1e-3
# Interpolated placements used to build a swept hull.
SWEEP_STEPS = 16


class GeometryError(ValueError):
    """Invalid or numerically unresolvable geometric input."""


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    t = math.fmod(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    elif t > math.pi:
        t -= 2.0 * math.pi
    return t


@dataclass(frozen=True)
class Pose2:
    """Planar pose: position in meters, heading in radians."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise GeometryError(f"non-finite pose ({self.x}, {self.y}, {self.theta})")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def distance_to(self, other: "Pose2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def interpolate(self, other: "Pose2", t: float) -> "Pose2":
        """Point at fraction t along the SE(2) geodesic to `other`."""
        dth = wrap_angle(other.theta - self.theta)
        return Pose2(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
            self.theta + t * dth,
        )


def polygon_from_rings(rings: list[list[tuple[float, float]]]) -> Polygon:
    """Build a validated polygon from an exterior ring plus optional holes."""
    if not rings:
        raise GeometryError("polygon needs at least an exterior ring")
    poly = Polygon(rings[0], rings[1:])
    return validate_polygon(poly)


def rings_from_polygon(poly: Polygon) -> list[list[tuple[float, float]]]:
    rings = [[(float(x), float(y)) for x, y in poly.exterior.coords[:-1]]]
    for hole in poly.interiors:
        rings.append([(float(x), float(y)) for x, y in hole.coords[:-1]])
    return rings


def validate_polygon(poly: Polygon) -> Polygon:
    """Check the polygon invariants; returns the polygon oriented CCW."""
    if poly.is_empty or not isinstance(poly, Polygon):
        raise GeometryError("empty or non-polygonal geometry")
    if not poly.is_valid:
        raise GeometryError(f"invalid polygon: {shapely.is_valid_reason(poly)}")
    if poly.area <= 0.0:
        raise GeometryError("degenerate polygon with zero area")
    return shapely.geometry.polygon.orient(poly)


def _as_polygons(geom) -> list[Polygon]:
    """Flatten a shapely result into a list of nonempty polygons."""
    if geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    if isinstance(geom, MultiPolygon):
        return [g for g in geom.geoms if not g.is_empty and g.area > 0]
    # GeometryCollection from snapping: keep polygonal parts only.
    polys = []
    for g in getattr(geom, "geoms", []):
        polys.extend(_as_polygons(g))
    return polys


def _snap(geom):
    return shapely.set_precision(geom, SNAP_GRID)


def _quad_segs(r: float) -> int:
    """Segments per quarter arc so the chord sagitta stays below tolerance."""
    if r <= ARC_SAGITTA:
        return 4
    alpha = 2.0 * math.acos(1.0 - ARC_SAGITTA / r)
    return max(4, math.ceil((math.pi / 2.0) / alpha))


def erode(poly: Polygon, r: float) -> list[Polygon]:
    """Centers of a disk of radius r that keep the disk inside `poly`.

    Conservative: chord approximation of the inner offset never
    over-includes. May split into several polygons or be empty.
    """
    if r < 0:
        raise GeometryError("erosion radius must be nonnegative")
    poly = validate_polygon(poly)
    if r == 0:
        return [poly]
    return _as_polygons(poly.buffer(-r, quad_segs=_quad_segs(r)))


def dilate(poly: Polygon, r: float) -> Polygon:
    """Minkowski sum of `poly` with a closed disk of radius r.

    Conservative: the radius is padded by the arc sagitta so the chord
    approximation never under-includes the true sum.
    """
    if r < 0:
        raise GeometryError("dilation radius must be nonnegative")
    poly = validate_polygon(poly)
    if r == 0:
        return poly
    out = poly.buffer(r + ARC_SAGITTA, quad_segs=_quad_segs(r))
    return _as_polygons(out)[0]


def disk_polygon(center: tuple[float, float], r: float) -> Polygon:
    """Chord-approximated disk, padded so it contains the true disk."""
    if r <= 0:
        raise GeometryError("disk radius must be positive")
    return Point(center).buffer(r + ARC_SAGITTA, quad_segs=_quad_segs(r))


def boolean(a, b, op: str) -> list[Polygon]:
    """Set operation on polygon sets: union, difference, or intersection."""
    ga = _snap(unary_union([validate_polygon(p) for p in _iter_polys(a)]))
    gb = _snap(unary_union([validate_polygon(p) for p in _iter_polys(b)]))
    try:
        if op == "union":
            out = ga.union(gb)
        elif op == "difference":
            out = ga.difference(gb)
        elif op == "intersection":
            out = ga.intersection(gb)
        else:
            raise GeometryError(f"unknown boolean op {op!r}")
        return _as_polygons(_snap(out))
    except GEOSException as exc:  # pragma: no cover - robustness escape hatch
        raise GeometryError(f"unresolvable boolean overlap: {exc}") from exc


def _iter_polys(obj) -> list[Polygon]:
    if isinstance(obj, Polygon):
        return [obj]
    if isinstance(obj, MultiPolygon):
        return list(obj.geoms)
    return list(obj)


def place_polygon(shape: Polygon, pose: Pose2) -> Polygon:
    """Rigidly place a local-frame polygon at a world pose."""
    moved = affinity.rotate(shape, pose.theta, origin=(0, 0), use_radians=True)
    return affinity.translate(moved, pose.x, pose.y)


@dataclass
class FreespaceComponent:
    """One connected polygonal region of collision-free body centers."""

    id: int
    region: Polygon
    surface_id: str
    z: float

    @property
    def anchor(self) -> tuple[float, float]:
        """Lowest-leftmost vertex; the deterministic ordering key."""
        coords = np.asarray(self.region.exterior.coords)
        i = np.lexsort((coords[:, 1], coords[:, 0]))[0]
        return (float(coords[i, 0]), float(coords[i, 1]))


@dataclass
class FreespaceDecomposition:
    components: list[FreespaceComponent]
    adjacency: dict[tuple[int, int], float] = field(default_factory=dict)

    def component(self, cid: int) -> FreespaceComponent:
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)


def components_from_regions(regions: list[Polygon], surface_id: str, z: float,
                            start_id: int = 0) -> list[FreespaceComponent]:
    """Wrap regions as components, ids assigned by lowest-leftmost vertex."""
    comps = [FreespaceComponent(-1, r, surface_id, z) for r in regions]
    comps.sort(key=lambda c: c.anchor)
    for i, c in enumerate(comps):
        c.id = start_id + i
    return comps


def free_space(world, surface_id: str, body_radius: float, config=None,
               ignore: frozenset = frozenset(), extra_obstacles=()) -> list[FreespaceComponent]:
    """Connected components of collision-free placements of a disk body.

    Erodes the surface's top polygon by the body radius and subtracts the
    dilated footprint of every non-ignored object resting on the surface.
    `extra_obstacles` are additional polygons (e.g. discovered disks) that
    are subtracted after their own dilation.
    """
    if body_radius <= 0:
        raise GeometryError("body radius must be positive")
    config = config if config is not None else world.initial
    surface_poly, z_top = world.surface_geometry(surface_id, config)
    regions = erode(surface_poly, body_radius)
    if not regions:
        return []
    obstacles = []
    for oid in world.object_ids():
        if oid in ignore or oid == surface_id:
            continue
        placement = config.placement_of(oid)
        if placement is None or placement[1] != surface_id:
            continue
        obstacles.append(dilate(world.footprint_at(oid, placement[0]), body_radius))
    for extra in extra_obstacles:
        obstacles.append(dilate(extra, body_radius))
    if obstacles:
        free = _snap(unary_union(regions)).difference(_snap(unary_union(obstacles)))
        regions = _as_polygons(free)
    return components_from_regions(regions, surface_id, z_top)


def locate_component(decomp: FreespaceDecomposition, p, surface_id: str | None = None):
    """Id of the component containing point p, or None."""
    pt = Point(p)
    for c in decomp.components:
        if surface_id is not None and c.surface_id != surface_id:
            continue
        if c.region.covers(pt):
            return c.id
    return None


def set_distance(a: Polygon, b: Polygon) -> float:
    """Minimum Euclidean distance between two closed polygonal sets."""
    if a.is_empty or b.is_empty:
        raise GeometryError("set_distance requires nonempty polygons")
    return float(a.distance(b))


def swept_hull(shape: Polygon, frm: Pose2, to: Pose2) -> Polygon:
    """Polygon containing `shape` at every pose on the SE(2) geodesic.

    Convex hull of the shape vertices at interpolated poses, audited for
    containment; on audit failure (concave shapes under rotation) falls
    back to the union of placements dilated by the largest inter-pose
    vertex displacement. Always a conservative over-approximation.
    """
    shape = validate_polygon(shape)
    if frm.x == to.x and frm.y == to.y and frm.theta == to.theta:
        return place_polygon(shape, frm)
    poses = [frm.interpolate(to, i / SWEEP_STEPS) for i in range(SWEEP_STEPS + 1)]
    placements = [place_polygon(shape, p) for p in poses]
    hull = unary_union(placements).convex_hull
    # Between consecutive sample poses a vertex at radius r traces an arc
    # (rotation) superposed on a line (translation); its deviation from the
    # sampled chord is bounded by the arc sagitta r*(dtheta_step)^2/8.
    dth = abs(wrap_angle(to.theta - frm.theta)) / SWEEP_STEPS
    max_r = float(np.max(np.linalg.norm(np.asarray(shape.exterior.coords), axis=1)))
    sagitta = max_r * dth * dth / 8.0
    if sagitta > 0.0:
        hull = hull.buffer(sagitta + SNAP_GRID, quad_segs=4)
    audit = hull.buffer(SNAP_GRID * 10)
    if all(audit.covers(pl) for pl in placements):
        return hull
    # Fallback: pad each placement by the worst vertex displacement
    # between consecutive interpolated poses.
    max_disp = 0.0
    for p0, p1 in zip(placements, placements[1:]):
        c0 = np.asarray(p0.exterior.coords)
        c1 = np.asarray(p1.exterior.coords)
        max_disp = max(max_disp, float(np.max(np.linalg.norm(c1 - c0, axis=1))))
    padded = [pl.buffer(max_disp, quad_segs=8) for pl in placements]
    return _as_polygons(unary_union(padded).buffer(0))[0]


def collision_check(p: Polygon, config, world, ignore: frozenset = frozenset(),
                    surface_id: str | None = None) -> bool:
    """True iff `p` hits a non-ignored footprint on the surface or exits it."""
    known = set(world.object_ids()) | {world.ROBOT_ID}
    unknown = set(ignore) - known
    if unknown:
        raise GeometryError(f"unknown ignore ids: {sorted(unknown)}")
    surface_id = surface_id if surface_id is not None else config.robot_surface
    surface_poly, _ = world.surface_geometry(surface_id, config)
    # Small allowance so chord-padded disks at exactly the eroded
    # clearance do not spuriously register as leaving the surface.
    if not surface_poly.buffer(2 * ARC_SAGITTA).covers(p):
        return True
    for oid in world.object_ids():
        if oid in ignore or oid == surface_id:
            continue
        placement = config.placement_of(oid)
        if placement is None or placement[1] != surface_id:
            continue
        foot = world.footprint_at(oid, placement[0])
        if p.intersection(foot).area > 1e-12:
            return True
    return False


def enclosing_hull(components: list[FreespaceComponent]) -> Polygon:
    """Convex hull of the vertices of all components."""
    if not components:
        raise GeometryError("enclosing_hull requires at least one component")
    return unary_union([c.region for c in components]).convex_hull


def uniform_point_in_polygon(poly: Polygon, rng: np.random.Generator,
                             max_tries: int = 256) -> tuple[float, float] | None:
    """Rejection-sample a point uniformly inside the polygon."""
    minx, miny, maxx, maxy = poly.bounds
    for _ in range(max_tries):
        x = rng.uniform(minx, maxx)
        y = rng.uniform(miny, maxy)
        if poly.covers(Point(x, y)):
            return (x, y)
    return None


def shortest_path(region: Polygon, start, goal) -> list[tuple[float, float]] | None:
    """Shortest polyline from start to goal inside a polygon with holes.

    Visibility graph over the region vertices plus the two endpoints,
    searched with Dijkstra. Returns None when no path exists (e.g. the
    endpoints fall in different parts of a multi-part region).
    """
    start = (float(start[0]), float(start[1]))
    goal = (float(goal[0]), float(goal[1]))
    fat = region.buffer(1e-9)
    if not (fat.covers(Point(start)) and fat.covers(Point(goal))):
        return None
    if fat.covers(LineString([start, goal])):
        return [start, goal]
    nodes = [start, goal]
    nodes.extend((float(x), float(y)) for x, y in region.exterior.coords[:-1])
    for hole in region.interiors:
        nodes.extend((float(x), float(y)) for x, y in hole.coords[:-1])
    n = len(nodes)
    pts = np.asarray(nodes)
    # All candidate segments in one vectorized coverage query.
    ii, jj = np.triu_indices(n, k=1)
    segs = shapely.linestrings(np.stack([pts[ii], pts[jj]], axis=1))
    shapely.prepare(fat)
    visible = shapely.covers(fat, segs)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    lengths = np.linalg.norm(pts[ii] - pts[jj], axis=1)
    for i, j, ok, d in zip(ii, jj, visible, lengths):
        if ok:
            adj[i].append((j, float(d)))
            adj[j].append((i, float(d)))
    dist = [math.inf] * n
    prev = [-1] * n
    dist[0] = 0.0
    pq = [(0.0, 0)]
    while pq:
        d, u = heapq.heappop(pq)
        if d > dist[u]:
            continue
        if u == 1:
            break
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v] - 1e-15:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(pq, (nd, v))
    if not math.isfinite(dist[1]):
        return None
    path = []
    u = 1
    while u != -1:
        path.append(nodes[u])
        u = prev[u]
    return path[::-1]


def path_length(path: list[tuple[float, float]]) -> float:
    return float(sum(math.dist(a, b) for a, b in zip(path, path[1:])))
