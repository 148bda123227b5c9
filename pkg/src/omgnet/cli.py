"""Command line front-end: ``omgnet <command> --config FILE``.

Commands
--------
params      per-bus shift, weight and bound
step        one step of each policy at a chosen period (debug dump)
simulate    rollouts with trajectory and summary CSVs
compare     all requested policies on one scenario plus metrics
admm-trace  per-iteration ADMM trace for one step

Errors exit nonzero and print ``error[<category>]: <message>`` on stderr.
"""
import argparse
import csv
from dataclasses import replace
import os
import sys

import numpy as np

from .admm import run_admm
from .config import ALL_POLICIES, parse_config
from .errors import ConfigError, OMGError
from .omg import StepInput, StepModel, check_thresholds, greedy_step, no_storage_step, omg_step
from .sim import metrics, offline_clairvoyant, simulate, write_summary, write_trajectory

__all__ = ["main", "build_parser", "EXIT_CODES"]

EXIT_CODES = {
    "error": 1,
    "config": 2,
    "grid": 3,
    "model": 3,
    "params": 4,
    "certificate": 4,
    "scenario": 5,
    "feasibility": 6,
    "lp": 7,
    "convergence": 8,
    "sync": 9,
    "partition": 9,
    "contract": 10,
}
COMMANDS = ("params", "step", "simulate", "compare", "admm-trace")


def _f(x):
    return repr(float(x))


def _emit(rows, header, path=None, stream=None):
    """Write CSV rows to ``path`` (if given) and echo them to ``stream``."""
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    if stream is not None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _out_dir(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def cmd_params(cfg, out):
    """Both selection strategies, plus the configured explicit pair if any."""
    rows = []
    for strategy in ("maxW", "minS") + (("explicit",) if cfg.strategy == "explicit" else ()):
        for i, p in enumerate(replace(cfg, strategy=strategy).params()):
            rows.append((i, p.strategy, _f(p.gamma), _f(p.w), _f(p.bound)))
    _emit(rows, ("bus", "strategy", "gamma", "w", "bound"),
          os.path.join(_out_dir(cfg), "params.csv"), out)


def _step_input(cfg, params):
    scen = cfg.build_scenario()
    t = cfg.step_t
    if not 0 <= t < scen.T:
        raise ConfigError(f"period {t} outside the scenario horizon 0..{scen.T - 1}", "step.t")
    s = np.array(cfg.step_s if cfg.step_s is not None else [b.initial_level for b in cfg.buses])
    return StepInput(t, s, scen.delta[t], scen.price[t], params)


def cmd_step(cfg, out):
    params = cfg.params()
    inp = _step_input(cfg, params)
    model = StepModel(cfg.grid, cfg.buses)
    solvers = {"omg": omg_step, "greedy": greedy_step, "no_storage": no_storage_step}
    rows, flows = [], []
    for name in cfg.policies or ("omg",):
        if name not in solvers:
            continue
        sol = solvers[name](cfg.grid, cfg.buses, inp, model=model)
        fires = [""] * cfg.grid.n
        if name == "omg":
            rep = check_thresholds(inp, sol, cfg.buses)
            fires = ["low" if lo else "high" if hi else "none"
                     for lo, hi in zip(rep.fires_low, rep.fires_high)]
            out.write(f"thresholds: {'ok' if rep.ok else 'violated ' + str(rep.violations)}\n")
        for i in range(cfg.grid.n):
            rows.append((name, i, _f(inp.s[i]), _f(sol.u[i]), _f(sol.r[i]), _f(sol.theta[i]),
                         _f(sol.grid_power[i]), fires[i], _f(sol.stage_cost), _f(sol.objective)))
        flows.extend((name, e, _f(sol.f[e])) for e in range(cfg.grid.m))
    d = _out_dir(cfg)
    _emit(rows, ("policy", "bus", "s", "u", "r", "theta", "grid_power", "threshold", "stage_cost",
                 "objective"), os.path.join(d, "step.csv"), out)
    _emit(flows, ("policy", "edge", "f"), os.path.join(d, "step_flows.csv"), out)


def _run_policies(cfg, names):
    params = cfg.params()
    scen = cfg.build_scenario()
    model = StepModel(cfg.grid, cfg.buses)
    results = {}
    for name in names:
        if name == "offline":
            results[name] = offline_clairvoyant(cfg.grid, cfg.buses, scen, model=model)
        else:
            results[name] = simulate(cfg.grid, cfg.buses, params, scen, name, model=model)
    return results, metrics(results, params)


def _print_summary(summary, out):
    _emit([(r.policy, _f(r.total_cost), _f(r.avg_cost), _f(r.savings_pct), _f(r.bound),
            _f(r.lower_bound)) for r in summary.rows],
          ("policy", "total_cost", "avg_cost", "savings_pct", "bound", "lower_bound"), None, out)


def cmd_simulate(cfg, out):
    results, summary = _run_policies(cfg, cfg.policies or ("omg",))
    d = _out_dir(cfg)
    for name, res in results.items():
        write_trajectory(res, os.path.join(d, name))
    write_summary(summary, os.path.join(d, "summary.csv"))
    _print_summary(summary, out)


def cmd_compare(cfg, out):
    results, summary = _run_policies(cfg, cfg.policies or ALL_POLICIES)
    write_summary(summary, os.path.join(_out_dir(cfg), "summary.csv"))
    _print_summary(summary, out)


def cmd_admm_trace(cfg, out):
    params = cfg.params()
    inp = _step_input(cfg, params)
    a = cfg.admm
    sol, trace = run_admm(cfg.grid, cfg.buses, inp, rho=a.rho, tol_primal=a.tol_primal,
                          tol_dual=a.tol_dual, tol_obj=a.tol_obj, max_iter=a.max_iter,
                          partition=a.build_partition(cfg.grid), engine=a.engine,
                          raise_on_max_iter=False)
    rows = [(k, _f(obj), _f(res), _f(dres), inter, intra)
            for k, obj, res, dres, inter, intra in trace.rows()]
    _emit(rows, ("iteration", "objective", "primal_residual", "dual_residual",
                 "inter_cluster_messages", "intra_cluster_messages"),
          os.path.join(_out_dir(cfg), "admm_trace.csv"))
    state = "converged" if trace.converged else "stopped at max_iter"
    out.write(f"{state} after {trace.iterations} iterations: objective {_f(sol.objective)}, "
              f"residual {_f(trace.primal_residual[-1])}\n")
    if not trace.converged:
        return EXIT_CODES["convergence"]
    return 0


_HANDLERS = {
    "params": cmd_params,
    "step": cmd_step,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "admm-trace": cmd_admm_trace,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="omgnet", description="Online storage control on power networks.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, metavar="PATH", help="experiment file")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    ap.add_argument("--policy", action="append", metavar="NAME", choices=ALL_POLICIES,
                    help="policy to run; repeat for several")
    ap.add_argument("--seed", type=int, metavar="N", help="scenario seed override")
    ap.add_argument("--rho", type=float, metavar="X", help="ADMM penalty override")
    ap.add_argument("--tol", type=float, metavar="X", help="ADMM primal residual tolerance override")
    return ap


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config).with_overrides(
            seed=args.seed, rho=args.rho, tol=args.tol, policies=args.policy, out_dir=args.out)
        code = _HANDLERS[args.command](cfg, out)
    except OMGError as exc:
        sys.stderr.write(f"error[{exc.category}]: {exc}\n")
        return EXIT_CODES.get(exc.category, 1)
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
