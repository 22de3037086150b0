"""Shared fixtures and oracle helpers for the test suite."""
from __future__ import annotations

import math

import numpy as np
import pytest
import shapely
from shapely.geometry import box

from tampkit.geometry import Pose2
from tampkit.world import (GROUND_ID, Configuration, GoalConstraint, GoalSpec,
                           RobotSpec, World, WorldObject)


def empty_world(side: float = 10.0, robot_r: float = 0.3,
                start=(1.0, 1.0, 0.0)) -> World:
    robot = RobotSpec.disk(robot_r, jump_dz_max=0.2)
    initial = Configuration(robot_pose=Pose2(*start),
                            robot_surface=GROUND_ID, object_poses={})
    return World(box(0, 0, side, side), [], robot, initial)


def world_with_objects(objects: list[WorldObject], poses: dict,
                       side: float = 10.0, robot_r: float = 0.3,
                       start=(1.0, 1.0, 0.0), **world_kw) -> World:
    robot = RobotSpec.disk(robot_r, jump_dz_max=0.2)
    initial = Configuration(robot_pose=Pose2(*start),
                            robot_surface=GROUND_ID, object_poses=dict(poses))
    return World(box(0, 0, side, side), objects, robot, initial, **world_kw)


def pose_goal(x: float, y: float, tol: float = 0.3) -> GoalSpec:
    return GoalSpec((GoalConstraint("pose(R)", (x, y), tol),))


# -- independent freespace membership oracle --------------------------------

GRID_RES = 0.01


def snap_to_grid(pts: np.ndarray, res: float = GRID_RES) -> np.ndarray:
    """Snap query points to the membership grid's cell centers."""
    return (np.floor(pts / res) + 0.5) * res


def oracle_membership(world: World, pts: np.ndarray, config=None,
                      radius: float | None = None) -> np.ndarray:
    """Grid-membership oracle for ground freespace at GRID_RES resolution.

    A cell center is free iff a robot disk centered there fits inside the
    workspace and clears every object footprint on the ground. Built from
    raw point-polygon distances only — none of the offset machinery under
    test is involved.
    """
    config = config if config is not None else world.initial
    r = world.robot.radius if radius is None else radius
    centers = snap_to_grid(np.asarray(pts, dtype=float))
    points = shapely.points(centers)
    ws = world.workspace
    free = shapely.contains_xy(ws, centers[:, 0], centers[:, 1])
    free &= shapely.distance(points, ws.boundary) >= r
    for oid in world.object_ids():
        placement = config.placement_of(oid)
        if placement is None or placement[1] != GROUND_ID:
            continue
        foot = world.footprint_at(oid, placement[0])
        free &= shapely.distance(points, foot) >= r
    return free


def flood_fill_labels(world: World, config=None, radius: float | None = None,
                      res: float = 0.02):
    """Full-grid connectivity oracle: labeled free-cell components.

    Returns (labels array, x0, y0, res); labels 0 = blocked.
    """
    from scipy import ndimage

    config = config if config is not None else world.initial
    r = world.robot.radius if radius is None else radius
    x0, y0, x1, y1 = world.workspace.bounds
    xs = np.arange(x0 + res / 2, x1, res)
    ys = np.arange(y0 + res / 2, y1, res)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    points = shapely.points(pts)
    ws = world.workspace
    free = shapely.contains_xy(ws, pts[:, 0], pts[:, 1])
    free &= shapely.distance(points, ws.boundary) >= r
    for oid in world.object_ids():
        placement = config.placement_of(oid)
        if placement is None or placement[1] != GROUND_ID:
            continue
        foot = world.footprint_at(oid, placement[0])
        free &= shapely.distance(points, foot) >= r
    mask = free.reshape(len(xs), len(ys))
    labels, _ = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    return labels, x0 + res / 2, y0 + res / 2, res


def label_at(labels, x0, y0, res, p) -> int:
    i = int(round((p[0] - x0) / res))
    j = int(round((p[1] - y0) / res))
    if 0 <= i < labels.shape[0] and 0 <= j < labels.shape[1]:
        return int(labels[i, j])
    return 0
