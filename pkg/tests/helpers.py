"""Random instance generators shared by the tests."""
import numpy as np

from omgnet.convex import TIE_MIN_ABS, BoxQP2, edge_qp, prox_node
from omgnet.devices import BusSpec, CostModel, PriceSchedule, StorageParams
from omgnet.grid import Grid
from omgnet.omg import StepInput
from omgnet.params import select_max_w, select_min_s


def random_lp(rng):
    """Bounded random LP with at most 12 constraints (including finite bounds)."""
    kind = rng.integers(3)
    if kind < 2:
        n = int(rng.integers(2, 5))
        m = 12 - 2 * n
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(-1, 1, n)
        b = A @ x0 + rng.uniform(0, 1, m)
        lb, ub = -2.0 * np.ones(n), 2.0 * np.ones(n)
        A_eq = b_eq = None
        if kind == 1 and n > 2:
            A_eq = rng.normal(size=(1, n))
            b_eq = A_eq @ x0
    else:
        n = 10
        lb = rng.uniform(-1, 0, n)
        ub = np.full(n, np.inf)
        w = rng.uniform(0.5, 1.5, n)
        x0 = lb + rng.uniform(0, 0.5, n)
        r = rng.normal(size=n)
        A = np.vstack([w, r])
        b = np.array([w @ x0 + rng.uniform(0, 2), r @ x0 + rng.uniform(0, 1)])
        A_eq = b_eq = None
    return dict(c=rng.normal(size=n), A_ub=A, b_ub=b, A_eq=A_eq, b_eq=b_eq, lb=lb, ub=ub)


def random_box_qp(rng):
    """Either an edge subproblem or a generic PD/PSD quadratic with a range row."""
    if rng.random() < 0.5:
        B = rng.uniform(0.2, 3.0)
        F = rng.uniform(0.0, 2.0)
        return edge_qp(B, F, rng.normal(size=2), rng.normal(size=2) * 2)
    L = rng.normal(size=(2, 2))
    Q = L @ L.T + (rng.uniform(0.05, 1.0) if rng.random() < 0.8 else 0.0) * np.eye(2)
    if rng.random() < 0.2:
        v = rng.normal(size=2)
        Q = np.outer(v, v) + 0.1 * np.eye(2)
    g = rng.normal(size=2)
    lo = rng.uniform(-2, 0.5)
    hi = lo + rng.uniform(0, 2)
    return BoxQP2(Q, rng.normal(size=2) * 2, g, lo, hi)


def qp_radius(qp):
    """Box half-width containing the minimiser: the row bounds the coordinate
    along g, and curvature across g bounds the other one."""
    nrm = np.linalg.norm(qp.g)
    gn = qp.g / nrm
    p = np.array([-gn[1], gn[0]])
    a_max = max(abs(qp.lo), abs(qp.hi)) / nrm
    b_max = (np.linalg.norm(qp.Q, 2) * a_max + np.linalg.norm(qp.q)) / (p @ qp.Q @ p)
    return 1.5 * max(a_max, b_max) + 1.0


def prox_of(inst, tie=TIE_MIN_ABS):
    """Call prox_node on a :func:`random_node` instance."""
    return prox_node((inst["slopes"], inst["intercepts"]), inst["bps"], inst["coef"],
                     (inst["umin"], inst["umax"], inst["mu_c"], inst["mu_d"]), inst["delta"],
                     inst["signs"], inst["centers"], inst["rho"], tie)


def random_cost_lines(rng, price=1.0):
    """Random convex piecewise-linear cost: (slopes, intercepts, breakpoints)."""
    k = int(rng.integers(1, 4))
    slopes = np.sort(rng.uniform(-3, 2, k)) * price
    bps = np.sort(rng.uniform(-1.5, 1.5, k - 1))
    if k > 1 and np.min(np.diff(np.concatenate([[-9], bps]))) < 0.05:
        bps = np.linspace(-1, 1, k - 1)
    # intercepts making the pieces meet at the breakpoints, g(0) = offset
    off = rng.uniform(-0.5, 0.5)
    c = np.empty(k)
    k0 = int(np.searchsorted(bps, 0.0, side="right"))
    c[k0] = off
    for j in range(k0 + 1, k):
        c[j] = c[j - 1] + (slopes[j - 1] - slopes[j]) * bps[j - 1]
    for j in range(k0 - 1, -1, -1):
        c[j] = c[j + 1] + (slopes[j + 1] - slopes[j]) * bps[j]
    return slopes, c, bps


def random_node(rng, degree=None, lossy=None):
    """Random node subproblem as keyword arguments for the oracle and prox_node."""
    d = int(rng.integers(0, 3)) if degree is None else degree
    lossy = rng.random() < 0.4 if lossy is None else lossy
    umax = rng.uniform(0.2, 2.0)
    umin = -rng.uniform(0.2, 2.0)
    if rng.random() < 0.1:
        umin = umax = rng.choice([umin, 0.0, umax])
    mu_c = rng.uniform(0.7, 1.0) if lossy else 1.0
    mu_d = rng.uniform(0.7, 1.0) if lossy else 1.0
    slopes, intercepts, bps = random_cost_lines(rng)
    return dict(
        coef=float(rng.normal() * 1.5), umin=float(umin), umax=float(umax), mu_c=mu_c, mu_d=mu_d,
        slopes=slopes, intercepts=intercepts, bps=bps, delta=float(rng.normal()),
        signs=rng.choice([-1.0, 1.0], d), centers=rng.normal(size=d), rho=float(rng.uniform(0.2, 5)),
    )


def node_objective(inst, u, v, fhat):
    """Node subproblem objective at storage control u with grid power v."""
    r = v - inst["delta"] + float(np.dot(inst["signs"], fhat))
    g = float(np.max(inst["slopes"] * r + inst["intercepts"]))
    pen = float(np.sum((np.asarray(fhat) - inst["centers"]) ** 2))
    return inst["coef"] * u + g + 0.5 * inst["rho"] * pen


def random_tree_grid(rng, n, extra_edges=0, flow_limit=None):
    """Random spanning tree on ``n`` buses plus ``extra_edges`` chords."""
    edges = []
    for j in range(1, n):
        i = int(rng.integers(0, j))
        edges.append((i, j) if rng.random() < 0.5 else (j, i))
    pairs = {tuple(sorted(e)) for e in edges}
    for _ in range(extra_edges):
        free = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in pairs]
        if not free:
            break
        a, b = free[int(rng.integers(0, len(free)))]
        pairs.add((a, b))
        edges.append((a, b))
    m = len(edges)
    B = rng.uniform(0.5, 3.0, m)
    F = rng.uniform(0.05, 1.0, m) if flow_limit is None else np.full(m, flow_limit)
    return Grid(n, edges, B, F)


def random_storage(rng, lossy=None):
    """Random storage satisfying the frequent-acting condition."""
    cap = rng.uniform(2.0, 20.0)
    s_min = rng.uniform(0.0, 2.0)
    u_max = rng.uniform(0.05, 0.4) * cap
    u_min = -rng.uniform(0.05, 0.4) * cap
    lam = float(rng.choice([1.0, 0.999, rng.uniform(0.9, 1.0)]))
    lossy = rng.random() < 0.3 if lossy is None else lossy
    mu = (rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0)) if lossy else (1.0, 1.0)
    return StorageParams(s_min, s_min + cap, u_min, u_max, lam=lam, mu_c=mu[0], mu_d=mu[1])


def random_bus(rng, lossy=None):
    """Random storage with either the shortfall cost or a convex piecewise cost."""
    sp = random_storage(rng, lossy)
    if rng.random() < 0.5:
        hi = float(rng.choice([1.0, rng.uniform(1.0, 4.0)]))
        cost = CostModel.shortfall((1.0, hi))
        prices = PriceSchedule(1.0, hi if hi > 1.0 else None)
    else:
        k = int(rng.integers(2, 4))
        slopes = np.sort(rng.uniform(-3.0, 1.0, k))
        slopes[0] = min(slopes[0], -0.2)
        bps = np.sort(rng.uniform(-1.0, 1.0, k - 1))
        bps += np.arange(k - 1) * 0.05
        cost = CostModel(tuple(slopes), tuple(bps), offset=float(rng.uniform(-0.5, 0.5)))
        prices = PriceSchedule()
    return BusSpec(sp, cost, prices)


def random_case(rng, n=None, extra_edges=None, strategy=None):
    """Random grid, buses, params and one feasible step input."""
    n = int(rng.integers(2, 9)) if n is None else n
    extra = int(rng.integers(0, 2)) if extra_edges is None else extra_edges
    grid = random_tree_grid(rng, n, extra)
    buses = [random_bus(rng) for _ in range(n)]
    strategy = strategy or ("maxW" if rng.random() < 0.5 else "minS")
    params = tuple(strategy_params(b, strategy) for b in buses)
    s = np.array([rng.uniform(b.storage.s_min, b.storage.s_max) for b in buses])
    delta = rng.laplace(0.0, 0.5, n)
    price = np.array([rng.uniform(*b.cost.price_support) for b in buses])
    return grid, buses, StepInput(0, s, delta, price, params)


def strategy_params(bus, strategy):
    sg = bus.subgradient_bounds()
    if strategy == "maxW":
        return select_max_w(bus.storage, sg)
    return select_min_s(bus.storage, sg)
