"""Summary statistics across policies run on one scenario."""
from typing import NamedTuple

from ..errors import ContractError

__all__ = ["SummaryRow", "Summary", "metrics", "savings_pct"]


class SummaryRow(NamedTuple):
    policy: str
    total_cost: float
    avg_cost: float
    savings_pct: float
    bound: float
    lower_bound: float


class Summary(NamedTuple):
    rows: list
    bound: float
    lower_bound: float
    upper_bound: float

    def row(self, policy):
        for r in self.rows:
            if r.policy == policy:
                return r
        raise KeyError(policy)


def savings_pct(cost, reference):
    """Percentage saved relative to ``reference`` (0 when the reference is 0)."""
    if reference == 0:
        return 0.0
    return 100.0 * (reference - cost) / reference


def metrics(results, params):
    """Savings, sub-optimality bound and cost bracket for a set of runs.

    ``results`` maps policy name to :class:`RunResult` (all on one
    scenario). Costs are per-period averages. The bracket on the optimal
    average cost is ``[max(offline, omg - bound), omg]`` where ``bound`` is
    the sum of the per-bus ``M / W``; missing runs are skipped.
    """
    if not results:
        raise ContractError("metrics needs at least one run")
    horizons = {r.T for r in results.values()}
    if len(horizons) != 1:
        raise ContractError("all runs must share one scenario horizon")
    bound = float(sum(p.bound for p in params)) if params else float("nan")
    ref = results.get("no_storage")
    omg = results.get("omg")
    offline = results.get("offline")
    upper = omg.avg_cost if omg is not None else float("nan")
    candidates = []
    if offline is not None:
        candidates.append(offline.avg_cost)
    if omg is not None and params:
        candidates.append(omg.avg_cost - bound)
    lower = max(candidates) if candidates else float("nan")
    rows = []
    for name, res in results.items():
        sav = savings_pct(res.avg_cost, ref.avg_cost) if ref is not None else float("nan")
        rows.append(SummaryRow(name, res.total_cost, res.avg_cost, sav, bound, lower))
    return Summary(rows, bound, lower, upper)
