"""
Capacity limits and unmet demand
================================

When a car park fills, late arrivals are turned away and the occupancy curve
flattens at capacity.  The TNL model handles that with a per-day share τ of
the demand that fits.  Conditioning on the morning's readings gives an
estimate of how many cars did not find a space.
"""

import numpy as np

from parkcast import TnParams, condition_tnl
from parkcast.clock import format_hhmm, hhmm_to_slot
from parkcast.simulator import SimConfig, day_seed, simulate_day

theta = TnParams.from_values(0.289, 0.053, 0.778, 0.128)
m, initial = 2000, 40
capacity = initial + int(0.8 * m)  # room for about 80% of the day's cars

#############################################################################
# A saturated day
# ---------------

day = simulate_day(SimConfig(theta, m, capacity, initial), rng=np.random.default_rng(day_seed(5, 0, 0)))
print("max occupancy", day.max_occupancy, "of", capacity, "- rejected", day.rejected)

# we only see the counter up to 08:00
h = hhmm_to_slot("08:00")
fit = condition_tnl(day.occupancy[:h], theta, capacity, h)
print(f"beta0 {fit.beta0:.1f}  beta1 {fit.beta1:.1f}  tau {fit.tau_i:.3f}  full at {format_hhmm(fit.t_L)}")
print(f"estimated excess {fit.excess:.0f}  vs simulated {day.rejected}")

#############################################################################
# Over many days
# --------------
# The estimate tracks the simulator's own rejection count.

rel = []
for d in range(30):
    sim = simulate_day(SimConfig(theta, m, capacity, initial), rng=np.random.default_rng(day_seed(5, 0, d)))
    est = condition_tnl(sim.occupancy[:h], theta, capacity, h).excess
    rel.append((est - sim.rejected) / sim.rejected)
rel = np.array(rel)
print(f"relative error: median {np.median(rel):+.3f}, worst {np.abs(rel).max():.3f}")

# The afternoon forecast from the same fit runs low: in the simulator each
# rejected car cancels the next departure, so the car park stays full longer
# than the rescaled departure curve assumes.
print("forecast at 12:00, 17:00, 21:00:", np.round(fit.prediction[[23, 33, 41]]))
print("observed                     :", day.occupancy[[23, 33, 41]])
