"""Multi-period simulation: scenarios, rollouts, baselines and metrics."""
from .scenario import Scenario, sample_laplace_scenario, load_csv_scenario, write_csv_scenario
from .rollout import RunResult, simulate, POLICIES, FEASIBILITY_TOL
from .offline import offline_clairvoyant, MAX_OFFLINE_SIZE
from .metrics import Summary, SummaryRow, metrics, savings_pct
from .io import write_trajectory, read_trajectory, write_summary, read_summary, trajectory_paths

__all__ = [
    "Scenario", "sample_laplace_scenario", "load_csv_scenario", "write_csv_scenario",
    "RunResult", "simulate", "POLICIES", "FEASIBILITY_TOL",
    "offline_clairvoyant", "MAX_OFFLINE_SIZE",
    "Summary", "SummaryRow", "metrics", "savings_pct",
    "write_trajectory", "read_trajectory", "write_summary", "read_summary", "trajectory_paths",
]
