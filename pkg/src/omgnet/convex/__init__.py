"""Deterministic convex-programming primitives."""
from .lp import EpigraphLP, LPResult, solve_lp, TOL_FEAS, TOL_OPT
from .qp import BoxQP2, solve_box_qp2, edge_qp
from .prox import NodeProx, prox_node, prox_edge, TIE_MIN_ABS, TIE_LOW, TIE_HIGH

__all__ = [
    "EpigraphLP", "LPResult", "solve_lp", "TOL_FEAS", "TOL_OPT",
    "BoxQP2", "solve_box_qp2", "edge_qp",
    "NodeProx", "prox_node", "prox_edge", "TIE_MIN_ABS", "TIE_LOW", "TIE_HIGH",
]
