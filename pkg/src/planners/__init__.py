"""
Tree planners.

- distributed: one tree per robot, beliefs fused with neighbors (DKF)
- central: one tree over the joint state with a centralized Kalman filter
"""

from src.planners.central import build_central_plan, build_central_tree, centralized_kf_update
from src.planners.context import PlanningContext
from src.planners.distributed import OpCounters, build_trees, extend
from src.planners.team_path import (
    build_plan_result,
    extract_team_plan,
    replay_cost_oracle,
    resolve_team_path,
)
from src.planners.tree import Tree, TreeNode, admissible_neighbor_nodes, init_tree

__all__ = [
    "PlanningContext",
    "Tree",
    "TreeNode",
    "OpCounters",
    "init_tree",
    "admissible_neighbor_nodes",
    "extend",
    "build_trees",
    "extract_team_plan",
    "resolve_team_path",
    "build_plan_result",
    "replay_cost_oracle",
    "centralized_kf_update",
    "build_central_tree",
    "build_central_plan",
]
