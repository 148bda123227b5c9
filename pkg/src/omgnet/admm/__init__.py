"""Distributed step solution by node-edge ADMM over cluster controllers."""
from .engine import ENGINES, AdmmProblem, AdmmTrace, ClusterController, build_problem, run_admm
from .messages import InProcessTransport, Message, MessageKind, Transport
from .partition import ClusterPartition, TaskSchedule, assign_tasks
from .tasks import (
    EdgeData,
    EdgeState,
    NodeData,
    NodeState,
    edge_dual,
    edge_primal,
    edge_update,
    node_dual,
    node_primal,
    node_update,
)

__all__ = [
    "ENGINES", "AdmmProblem", "AdmmTrace", "ClusterController", "build_problem", "run_admm",
    "InProcessTransport", "Message", "MessageKind", "Transport",
    "ClusterPartition", "TaskSchedule", "assign_tasks",
    "EdgeData", "EdgeState", "NodeData", "NodeState",
    "edge_dual", "edge_primal", "edge_update", "node_dual", "node_primal", "node_update",
]
