"""Cost savings on a five-bus star with lossy storage.

Each bus sees i.i.d. Laplace net supply (standard deviation 0.149) and can
trade with the hub over lines limited to 0.149. We compare the four
policies over 1000 periods, for a flat shortfall price and for a day/night
price that is three times higher from 7 to 18.
"""
import numpy as np

from omgnet import metrics, offline_clairvoyant, sample_laplace_scenario, select_max_w, simulate
from omgnet.fixtures import star_experiment

SEEDS = range(5)

for day_night in (False, True):
    print("\nday/night prices" if day_night else "\nflat prices")
    print(" capacity   greedy    omg  offline   (savings vs no storage, %)")
    for cap in (0.5, 1.0, 2.0, 4.0):
        grid, buses = star_experiment(cap, day_night=day_night)
        params = tuple(select_max_w(b.storage, b.subgradient_bounds()) for b in buses)
        rows = []
        for seed in SEEDS:
            scen = sample_laplace_scenario(grid, 1000, 0.149, seed, buses)
            runs = {p: simulate(grid, buses, params, scen, p) for p in ("no_storage", "greedy", "omg")}
            runs["offline"] = offline_clairvoyant(grid, buses, scen)
            m = metrics(runs, params)
            rows.append([m.row(p).savings_pct for p in ("greedy", "omg", "offline")])
        g, o, off = np.mean(rows, axis=0)
        print(f"{cap:9.1f} {g:8.1f} {o:6.1f} {off:8.1f}")
