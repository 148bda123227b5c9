"""Experiment configuration files.

The format is INI-style text read with :mod:`configparser`. Sections and keys
(lists are comma separated)::

    [grid]
    kind = star            ; star | edges
    n = 5
    edges = 1-0, 2-0       ; tail-head pairs, only with kind = edges
    susceptance = 1.0      ; scalar or one value per edge
    flow_limit = 0.149

    [bus]                  ; defaults for every bus
    s_min = 0
    s_max = 10
    u_min = -1
    u_max = 1
    lam = 1
    mu_c = 1
    mu_d = 1
    s_init = 0
    cost = shortfall       ; shortfall | zero | pwl
    slopes = -1, 0         ; pwl only
    breakpoints = 0        ; pwl only
    priced = true, false   ; pwl only
    price_support = 1, 3
    prices = constant      ; constant | day_night
    price = 1              ; constant price, or night price for day_night
    peak_price = 3
    periods_per_day = 24
    peak_start = 7
    peak_end = 18

    [bus.2]                ; overrides for bus 2
    s_max = 20

    [params]
    strategy = maxW        ; maxW | minS | explicit
    gamma = -1             ; explicit only, scalar or per bus
    w = 8

    [scenario]
    source = laplace       ; laplace | csv
    sigma = 0.149
    T = 1000
    seed = 0
    path = data.csv        ; csv only, relative to the config file

    [policies]
    run = no_storage, greedy, omg, offline

    [step]
    t = 0                  ; period used by the step and admm-trace commands
    s = 5                  ; storage levels (default: initial levels)

    [admm]
    rho = 100
    tol_primal = 1e-6
    tol_dual = 1e-6        ; default: tol_primal
    tol_obj = 1e-8
    max_iter = 20000
    partition = single     ; single | per_element | labels
    labels = 0, 0, 1       ; node labels, only with partition = labels
    engine = compiled      ; compiled | messages

    [output]
    dir = out
"""
import configparser
from dataclasses import dataclass, field, replace
import os

import numpy as np

from .admm.partition import ClusterPartition
from .devices import BusSpec, CostModel, PriceSchedule, StorageParams
from .errors import ConfigError, OMGError
from .grid import Grid, star_grid
from .params import AlgorithmParams, select_max_w, select_min_s, suboptimality_M, validate_params
from .sim.scenario import load_csv_scenario, sample_laplace_scenario

__all__ = ["ExperimentConfig", "ScenarioConfig", "AdmmConfig", "parse_config", "parse_config_string",
           "STRATEGIES", "ALL_POLICIES"]

STRATEGIES = ("maxW", "minS", "explicit")
ALL_POLICIES = ("no_storage", "greedy", "omg", "offline")

_SCHEMA = {
    "grid": {"kind", "n", "edges", "susceptance", "flow_limit"},
    "bus": {"s_min", "s_max", "u_min", "u_max", "lam", "mu_c", "mu_d", "s_init", "cost",
            "slopes", "breakpoints", "priced", "price_support", "prices", "price",
            "peak_price", "periods_per_day", "peak_start", "peak_end"},
    "params": {"strategy", "gamma", "w"},
    "scenario": {"source", "sigma", "t", "seed", "path"},
    "policies": {"run"},
    "step": {"t", "s"},
    "admm": {"rho", "tol_primal", "tol_dual", "tol_obj", "max_iter", "partition", "labels", "engine"},
    "output": {"dir"},
}
_REQUIRED = ("grid",)

_BUS_DEFAULTS = {
    "s_min": "0", "s_max": "10", "u_min": "-1", "u_max": "1", "lam": "1", "mu_c": "1",
    "mu_d": "1", "cost": "shortfall", "prices": "constant", "price": "1",
    "periods_per_day": "24", "peak_start": "7", "peak_end": "18",
}


@dataclass(frozen=True)
class ScenarioConfig:
    source: str = "laplace"
    sigma: float = 0.149
    T: int = 1000
    seed: int = 0
    path: str = None


@dataclass(frozen=True)
class AdmmConfig:
    rho: float = 100.0
    tol_primal: float = 1e-6
    tol_obj: float = 1e-8
    max_iter: int = 20000
    partition: str = "single"
    labels: tuple = None
    engine: str = "compiled"
    tol_dual: float = None

    def build_partition(self, grid):
        if self.partition == "single":
            return ClusterPartition.single(grid)
        if self.partition == "per_element":
            return ClusterPartition.per_element(grid)
        return ClusterPartition.edge_to_head(grid, self.labels)


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: network, buses, parameter strategy and run settings."""

    grid: Grid
    buses: tuple
    strategy: str = "maxW"
    explicit: tuple = None        # ((gamma, w), ...) per bus for the explicit strategy
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    policies: tuple = None        # None: command default
    step_t: int = 0
    step_s: tuple = None
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    out_dir: str = "out"
    base_dir: str = "."

    def params(self):
        """One :class:`AlgorithmParams` per bus under the configured strategy."""
        out = []
        for i, bus in enumerate(self.buses):
            sg = bus.subgradient_bounds()
            if self.strategy == "maxW":
                out.append(select_max_w(bus.storage, sg))
            elif self.strategy == "minS":
                out.append(select_min_s(bus.storage, sg))
            else:
                gamma, w = self.explicit[i]
                prm = AlgorithmParams(gamma, w, suboptimality_M(bus.storage, gamma) / w)
                out.append(prm)
        return tuple(out)

    def build_scenario(self, seed=None):
        sc = self.scenario
        if sc.source == "csv":
            path = sc.path if os.path.isabs(sc.path) else os.path.join(self.base_dir, sc.path)
            return load_csv_scenario(path, buses=self.buses)
        seed = sc.seed if seed is None else seed
        return sample_laplace_scenario(self.grid, sc.T, sc.sigma, seed, self.buses)

    def with_overrides(self, seed=None, rho=None, tol=None, policies=None, out_dir=None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, scenario=replace(cfg.scenario, seed=int(seed)))
        if rho is not None or tol is not None:
            adm = cfg.admm
            if rho is not None:
                if not rho > 0:
                    raise ConfigError("rho must be positive", "admm.rho")
                adm = replace(adm, rho=float(rho))
            if tol is not None:
                if not tol > 0:
                    raise ConfigError("tolerance must be positive", "admm.tol_primal")
                adm = replace(adm, tol_primal=float(tol))
            cfg = replace(cfg, admm=adm)
        if policies:
            cfg = replace(cfg, policies=_policies(",".join(policies), "policies.run"))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=out_dir)
        return cfg


def _floats(text, key):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"expected numbers, got {text!r}", key) from None
    if not vals:
        raise ConfigError("empty list", key)
    return vals


def _float(text, key):
    vals = _floats(text, key)
    if len(vals) != 1:
        raise ConfigError(f"expected one number, got {text!r}", key)
    return vals[0]


def _int(text, key):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", key) from None


def _bools(text, key):
    out = []
    for x in text.split(","):
        x = x.strip().lower()
        if x in ("true", "yes", "1"):
            out.append(True)
        elif x in ("false", "no", "0"):
            out.append(False)
        else:
            raise ConfigError(f"expected true/false, got {x!r}", key)
    return tuple(out)


def _choice(text, options, key):
    if text not in options:
        raise ConfigError(f"expected one of {', '.join(options)}, got {text!r}", key)
    return text


def _per(values, n, key):
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise ConfigError(f"expected 1 or {n} values, got {len(values)}", key)
    return values


def _policies(text, key):
    names = tuple(x.strip() for x in text.split(",") if x.strip())
    for p in names:
        _choice(p, ALL_POLICIES, key)
    if not names:
        raise ConfigError("no policies listed", key)
    return tuple(dict.fromkeys(names))


def _check_keys(cp, n):
    for sec in cp.sections():
        base = "bus" if sec.startswith("bus.") else sec
        if base not in _SCHEMA:
            raise ConfigError("unknown section", sec)
        if sec.startswith("bus."):
            idx = sec[4:]
            if not idx.isdigit() or not 0 <= int(idx) < n:
                raise ConfigError(f"bus index must be in 0..{n - 1}", sec)
        for k in cp[sec]:
            if k not in _SCHEMA[base]:
                raise ConfigError("unknown key", f"{sec}.{k}")
    for sec in _REQUIRED:
        if not cp.has_section(sec):
            raise ConfigError("missing section", sec)


def _build_grid(sec):
    kind = _choice(sec.get("kind", "star"), ("star", "edges"), "grid.kind")
    if "n" not in sec:
        raise ConfigError("missing key", "grid.n")
    n = _int(sec["n"], "grid.n")
    B = _floats(sec.get("susceptance", "1"), "grid.susceptance")
    F = _floats(sec.get("flow_limit", "1"), "grid.flow_limit")
    try:
        if kind == "star":
            if "edges" in sec:
                raise ConfigError("edges are implied by kind = star", "grid.edges")
            g = star_grid(n, 1.0, 1.0)
            edges = g.edges
        else:
            edges = []
            for tok in sec.get("edges", "").split(","):
                if not tok.strip():
                    continue
                parts = tok.split("-")
                if len(parts) != 2:
                    raise ConfigError(f"edge {tok.strip()!r} is not tail-head", "grid.edges")
                edges.append((_int(parts[0].strip(), "grid.edges"), _int(parts[1].strip(), "grid.edges")))
        m = len(edges)
        return Grid(n, edges, np.array(_per(B, m, "grid.susceptance") if m else ()),
                    np.array(_per(F, m, "grid.flow_limit") if m else ()))
    except ConfigError:
        raise
    except OMGError as exc:
        raise ConfigError(str(exc), "grid") from None


def _build_bus(values, sec_name):
    def g(k):
        return values.get(k)

    def num(k):
        return _float(g(k), f"{sec_name}.{k}")

    try:
        sp = StorageParams(num("s_min"), num("s_max"), num("u_min"), num("u_max"),
                           lam=num("lam"), mu_c=num("mu_c"), mu_d=num("mu_d"))
        schedule = _choice(g("prices"), ("constant", "day_night"), f"{sec_name}.prices")
        if schedule == "constant":
            prices = PriceSchedule(base=num("price"))
        else:
            prices = PriceSchedule(base=num("price"),
                                   peak=num("peak_price") if g("peak_price") else 3.0,
                                   periods_per_day=_int(g("periods_per_day"), f"{sec_name}.periods_per_day"),
                                   peak_start=_int(g("peak_start"), f"{sec_name}.peak_start"),
                                   peak_end=_int(g("peak_end"), f"{sec_name}.peak_end"))
        support = (_floats(g("price_support"), f"{sec_name}.price_support")
                   if g("price_support") else prices.support)
        if len(support) != 2:
            raise ConfigError("expected two numbers", f"{sec_name}.price_support")
        kind = _choice(g("cost"), ("shortfall", "zero", "pwl"), f"{sec_name}.cost")
        if kind == "shortfall":
            cost = CostModel.shortfall(support)
        elif kind == "zero":
            cost = CostModel.zero()
        else:
            if not g("slopes"):
                raise ConfigError("missing key", f"{sec_name}.slopes")
            slopes = _floats(g("slopes"), f"{sec_name}.slopes")
            bps = _floats(g("breakpoints"), f"{sec_name}.breakpoints") if g("breakpoints") else ()
            priced = _bools(g("priced"), f"{sec_name}.priced") if g("priced") else None
            cost = CostModel(slopes, bps, priced, support)
        s_init = num("s_init") if g("s_init") else None
        return BusSpec(sp, cost, prices, s_init=s_init)
    except ConfigError:
        raise
    except OMGError as exc:
        raise ConfigError(str(exc), sec_name) from None


def parse_config_string(text, base_dir="."):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config ({exc.__class__.__name__}: {exc})") from None
    if not cp.has_section("grid"):
        raise ConfigError("missing section", "grid")
    grid = _build_grid(cp["grid"])
    n = grid.n
    _check_keys(cp, n)

    base = dict(_BUS_DEFAULTS)
    if cp.has_section("bus"):
        base.update(cp["bus"])
    buses = []
    for i in range(n):
        vals = dict(base)
        name = f"bus.{i}"
        if cp.has_section(name):
            vals.update(cp[name])
        buses.append(_build_bus(vals, name if cp.has_section(name) else "bus"))

    kw = {}
    if cp.has_section("params"):
        sec = cp["params"]
        strategy = _choice(sec.get("strategy", "maxW"), STRATEGIES, "params.strategy")
        kw["strategy"] = strategy
        if strategy == "explicit":
            for k in ("gamma", "w"):
                if k not in sec:
                    raise ConfigError("missing key (explicit strategy)", f"params.{k}")
            gam = _per(_floats(sec["gamma"], "params.gamma"), n, "params.gamma")
            ws = _per(_floats(sec["w"], "params.w"), n, "params.w")
            kw["explicit"] = tuple(zip(gam, ws))
            for i, (bus, (gm, w)) in enumerate(zip(buses, kw["explicit"])):
                try:
                    prm = AlgorithmParams(gm, w, 0.0)
                    validate_params(prm, bus.storage, bus.subgradient_bounds())
                except OMGError as exc:
                    raise ConfigError(f"bus {i}: {exc}", "params") from None
        elif "gamma" in sec or "w" in sec:
            raise ConfigError("gamma and w are only used with strategy = explicit", "params")
    if cp.has_section("scenario"):
        sec = cp["scenario"]
        source = _choice(sec.get("source", "laplace"), ("laplace", "csv"), "scenario.source")
        sigma = _float(sec.get("sigma", "0.149"), "scenario.sigma")
        if not sigma > 0:
            raise ConfigError("must be positive", "scenario.sigma")
        T = _int(sec.get("t", "1000"), "scenario.T")
        if T < 1:
            raise ConfigError("must be at least 1", "scenario.T")
        path = sec.get("path")
        if source == "csv" and not path:
            raise ConfigError("missing key (csv source)", "scenario.path")
        kw["scenario"] = ScenarioConfig(source, sigma, T, _int(sec.get("seed", "0"), "scenario.seed"), path)
    if cp.has_section("policies") and "run" in cp["policies"]:
        kw["policies"] = _policies(cp["policies"]["run"], "policies.run")
    if cp.has_section("step"):
        sec = cp["step"]
        kw["step_t"] = _int(sec.get("t", "0"), "step.t")
        if "s" in sec:
            s = _per(_floats(sec["s"], "step.s"), n, "step.s")
            for i, (lvl, bus) in enumerate(zip(s, buses)):
                if not bus.storage.s_min <= lvl <= bus.storage.s_max:
                    raise ConfigError(f"level {lvl} for bus {i} outside storage bounds", "step.s")
            kw["step_s"] = s
    if cp.has_section("admm"):
        sec = cp["admm"]
        rho = _float(sec.get("rho", "100"), "admm.rho")
        if not rho > 0:
            raise ConfigError("must be positive", "admm.rho")
        part = _choice(sec.get("partition", "single"), ("single", "per_element", "labels"), "admm.partition")
        labels = None
        if part == "labels":
            if "labels" not in sec:
                raise ConfigError("missing key (labels partition)", "admm.labels")
            labels = tuple(int(x) for x in _per(_floats(sec["labels"], "admm.labels"), n, "admm.labels"))
            if min(labels) < 0:
                raise ConfigError("labels must be non-negative", "admm.labels")
        max_iter = _int(sec.get("max_iter", "20000"), "admm.max_iter")
        if max_iter < 1:
            raise ConfigError("must be at least 1", "admm.max_iter")
        tols = {}
        for key, default in (("tol_primal", "1e-6"), ("tol_dual", None), ("tol_obj", "1e-8")):
            if default is None and key not in sec:
                tols[key] = None
                continue
            tols[key] = _float(sec.get(key, default), f"admm.{key}")
            if not tols[key] > 0:
                raise ConfigError("tolerance must be positive", f"admm.{key}")
        kw["admm"] = AdmmConfig(
            rho, tols["tol_primal"], tols["tol_obj"], max_iter, part, labels,
            _choice(sec.get("engine", "compiled"), ("compiled", "messages"), "admm.engine"),
            tols["tol_dual"])
    if cp.has_section("output"):
        kw["out_dir"] = cp["output"].get("dir", "out")
    return ExperimentConfig(grid, tuple(buses), base_dir=base_dir, **kw)


def parse_config(path):
    """Read and validate an experiment file; errors name the offending key."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config ({exc.strerror})", str(path)) from None
    return parse_config_string(text, base_dir=os.path.dirname(os.path.abspath(path)))
