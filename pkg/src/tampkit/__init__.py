"""Task-and-motion-planning toolkit: contract-based hierarchical planner,
reactive execution layer, headless simulator, and benchmark harness."""

from .geometry import Pose2
from .world import (Configuration, Disk, GoalConstraint, GoalSpec, RobotSpec,
                    World, WorldObject, load_world, load_world_file,
                    serialize_world)
from .c3 import ActionInstance, Plan, SymbolicState, action
from .planner import PlannerConfig, PlannerStats, plan, validate_plan
from .sim import ExecutionResult, ExecutionTrace, SimConfig, simulate

__all__ = [
    "Pose2", "Configuration", "Disk", "GoalConstraint", "GoalSpec",
    "RobotSpec", "World", "WorldObject", "load_world", "load_world_file",
    "serialize_world", "ActionInstance", "Plan", "SymbolicState", "action",
    "PlannerConfig", "PlannerStats", "plan", "validate_plan",
    "ExecutionResult", "ExecutionTrace", "SimConfig", "simulate",
]

__version__ = "0.1.0"
