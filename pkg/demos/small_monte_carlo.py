"""
A short robustness campaign with dispersed mass, inertia, centre of gravity,
centre of pressure and aerodynamic coefficients, with gusts on.

The full campaign is 100 runs; ten are enough to see the spread and take a
few minutes on one core. Pass a run count and a worker count to change that.

    python demos/small_monte_carlo.py [n_runs] [workers]
"""

import sys

from pitchtrack import SimConfig, run_monte_carlo

n_runs = int(sys.argv[1]) if len(sys.argv) > 1 else 10
workers = int(sys.argv[2]) if len(sys.argv) > 2 else 1


def progress(i, r):
    status = "stable" if r.stable else f"UNSTABLE: {r.reason}"
    print(f"run {i:3d}  RMSE z {r.rmse_z_m:8.4f} m  theta {r.rmse_theta_deg:7.4f} deg  {status}")


summary = run_monte_carlo(SimConfig(), n_runs=n_runs, workers=workers, progress=progress)
print()
print(summary.format_table())

worst = max(range(summary.n_runs), key=lambda i: summary.runs[i].rmse_z_m)
d = summary.dispersions[worst]
print(f"\nworst downrange tracking: run {worst} (mass x{d.m:.3f}, x_cp x{d.x_cp:.3f}, c_l x{d.cl:.3f})")
