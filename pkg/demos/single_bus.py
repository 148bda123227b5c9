"""One storage unit, one step at a time.

The fixture bus holds 0..10 units, moves at most 1 per period and pays for
shortfall at unit price. Parameter selection gives a shift of -1 and a weight
of 8, so the added term (s - 1)/8 * u makes a nearly full store discharge
and a nearly empty one charge, while levels in between stay idle.
"""
import numpy as np

from omgnet import Grid, StepInput, check_thresholds, omg_step, psd_certificates, select_max_w
from omgnet.fixtures import fixture_bus

bus = fixture_bus()
prm = select_max_w(bus.storage, bus.subgradient_bounds())
print(f"shift {prm.gamma}, weight {prm.w}, bound on the average-cost gap {prm.bound}")
print("certificates:", "ok" if psd_certificates(prm, bus.storage).ok else "failed")

grid = Grid(1)
print("\n level  net supply   u      r      fires")
for s in (0.0, 0.5, 5.0, 9.5, 10.0):
    for delta in (-0.4, 0.4):
        inp = StepInput(0, [s], [delta], [1.0], (prm,))
        sol = omg_step(grid, [bus], inp)
        rep = check_thresholds(inp, sol, [bus])
        fires = "low" if rep.fires_low[0] else "high" if rep.fires_high[0] else "-"
        print(f"{s:6.1f} {delta:10.1f} {sol.u[0]:6.2f} {sol.r[0]:6.2f}   {fires}")

# a larger store earns a proportionally smaller gap
for cap in (10.0, 20.0, 40.0, 80.0):
    b = fixture_bus(s_max=cap)
    p = select_max_w(b.storage, b.subgradient_bounds())
    print(f"capacity {cap:5.0f}: weight {p.w:5.1f}, bound {p.bound:.5f}")
