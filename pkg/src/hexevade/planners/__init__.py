"""Online planners: the UCB1 tree-search baseline over primitive moves and
the macro-trajectory planner over high-payoff waypoints."""
from .pomcp import PlanNode, PlanResult, PomcpConfig, PomcpPlanner, pomcp_plan, rollout, ucb1_select
from .tlppo import LppoGraph, TlppoConfig, TlppoPlanner, build_lppo_graph, root_candidates, tlppo_plan

__all__ = [
    "PlanNode",
    "PlanResult",
    "PomcpConfig",
    "PomcpPlanner",
    "pomcp_plan",
    "rollout",
    "ucb1_select",
    "LppoGraph",
    "TlppoConfig",
    "TlppoPlanner",
    "build_lppo_graph",
    "root_candidates",
    "tlppo_plan",
]
