"""Online modified greedy control for networked storage.

Submodules: :mod:`grid` (network), :mod:`devices` (storage and costs),
:mod:`params` (offline parameter selection), :mod:`convex` (LP, QP and
proximal solvers), :mod:`omg` (per-step programs), :mod:`admm` (distributed
step solution), :mod:`sim` (rollouts and baselines), :mod:`config` and
:mod:`cli`.
"""
from .admm import ClusterPartition, run_admm
from .devices import BusSpec, CostModel, PriceSchedule, StorageParams
from .errors import OMGError
from .grid import Grid, star_grid
from .omg import StepInput, StepSolution, check_thresholds, greedy_step, no_storage_step, omg_step
from .params import AlgorithmParams, psd_certificates, select_max_w, select_min_s
from .sim import Scenario, metrics, offline_clairvoyant, sample_laplace_scenario, simulate

__version__ = "0.1.0"

__all__ = [
    "ClusterPartition", "run_admm",
    "BusSpec", "CostModel", "PriceSchedule", "StorageParams",
    "OMGError",
    "Grid", "star_grid",
    "StepInput", "StepSolution", "check_thresholds", "greedy_step", "no_storage_step", "omg_step",
    "AlgorithmParams", "psd_certificates", "select_max_w", "select_min_s",
    "Scenario", "metrics", "offline_clairvoyant", "sample_laplace_scenario", "simulate",
]
