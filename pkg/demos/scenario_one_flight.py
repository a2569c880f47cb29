"""
A single closed-loop flight of the vertical ascent scenario.

The vehicle climbs on a prescribed acceleration profile while the inner loop
holds altitude and pitch and the outer loop keeps downrange at zero. Gusts are
turned off here so the run shows the controller's nominal behaviour; flip
``wind.gusts_enabled`` to see the adaptive estimates chase turbulence.

    python demos/scenario_one_flight.py [output-dir]
"""

import sys
from pathlib import Path

import numpy as np

from pitchtrack import load_config, run_flight
from pitchtrack.plots import write_flight_plots

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_scenario_one")
out.mkdir(parents=True, exist_ok=True)

cfg = load_config(None, ["wind.gusts_enabled=false"])
log, metrics = run_flight(cfg)

print(f"flight ended at t = {log.t_end:.2f} s ({'burnout' if log.burnout else log.reason})")
print(f"final altitude {log['x'][-1] / 1e3:.3f} km, downrange {log['z'][-1]:.3f} m")
print(f"RMSE: x {metrics.rmse_x_m:.4f} m, theta {metrics.rmse_theta_deg:.4f} deg, z {metrics.rmse_z_m:.4f} m")

# The aerodynamic torque changes all through the climb, so the estimate lags
# it a little; compare the lag with the torque itself.
t = log["t"]
for t_mark in (1.0, 5.0, 20.0, 60.0):
    k = np.searchsorted(t, t_mark)
    true, hat = log["tau_true"][k], log["tau_hat"][k]
    print(f"  t = {t_mark:>4.0f} s: tau_a {true:10.1f} N m, estimate off by {hat - true:+8.2f} N m")

peak_q = np.argmax(log["qbar"])
print(f"max dynamic pressure {log['qbar'][peak_q] / 1e3:.1f} kPa at t = {t[peak_q]:.1f} s, "
      f"Mach {log['mach'][peak_q]:.2f}")

csv_path = out / "flight.csv"
log.to_csv(csv_path, extras=True)
write_flight_plots(csv_path, out / "plots")
print(f"telemetry and plots written to {out}")
