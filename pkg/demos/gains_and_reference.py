"""
Controller design numbers and the two reference trajectories, without flying.

The outer loop gains come from an LQR design on the integrator-augmented double
integrator. The inner gains fix two double poles, one per axis, and their
separation from the outer loop is what lets the cascade be treated as two
independent designs.
"""

import numpy as np

from pitchtrack import InnerGains, integrate_profile, lqr_design, scenario_I, scenario_II

outer = lqr_design(np.diag([5.0, 1.0, 1.0]), 60.0)
print(f"outer gains: k_z={outer.k_z:.4f}  k_zdot={outer.k_zdot:.4f}  k_i={outer.k_i:.4f}")
outer_poles = np.linalg.eigvals(outer.closed_loop())
print("outer poles:", ", ".join(f"{p:.3f}" for p in sorted(outer_poles, key=lambda p: p.real)))

inner = InnerGains()
for name, k1, k2 in (("x", inner.k1x, inner.k2x), ("theta", inner.k1theta, inner.k2theta)):
    # error dynamics e'' + (k1 + k2) e' + (1 + k1 k2) e = 0
    poles = np.roots([1.0, k1 + k2, 1.0 + k1 * k2])
    print(f"inner {name:>5} poles:", ", ".join(f"{p.real:.2f}" for p in poles))

slowest_inner = min(-np.roots([1.0, inner.k1x + inner.k2x, 1.0 + inner.k1x * inner.k2x]).real)
fastest_outer = max(-outer_poles.real)
print(f"time-scale ratio (slowest inner / fastest outer): {slowest_inner / fastest_outer:.1f}")

for label, profile in (("I", scenario_I(103.0)), ("II", scenario_II(103.0))):
    ref = integrate_profile(profile, 0.01)
    end = ref(103.0)
    print(f"scenario {label}: x_d(t_f)={end.x_d / 1e3:.3f} km, xdot_d(t_f)={end.xdot_d:.1f} m/s, "
          f"max z_d={np.max(ref.samples['z_d']):.1f} m, max zdot_d={np.max(ref.samples['zdot_d']):.1f} m/s")
