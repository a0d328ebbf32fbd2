"""Optimal-time steering of a double integrator.

Steering from rest at the origin to rest at unit distance trades travel
time against control energy: c(tau) = tau + 12 / tau^3, minimized at
tau* = sqrt(6). The package finds this minimizer numerically, and the
resulting closed-form trajectory reproduces the target state.
"""

import math

import numpy as np

from lqdmp import (control_at, cost_fixed_time, double_integrator,
                   optimal_steer, state_at)

sys_ = double_integrator(1)
x0, x1 = np.array([0.0, 0.0]), np.array([1.0, 0.0])

print("fixed-time costs along the way:")
for tau in (1.0, 2.0, math.sqrt(6), 3.0, 4.0):
    print(f"  tau = {tau:6.4f}   c = {cost_fixed_time(sys_, x0, x1, tau):.6f}")

res = optimal_steer(sys_, x0, x1, tau_max=10.0, tol=1e-8)
print(f"\noptimal arrival time  {res.tau_star:.8f}   (sqrt 6 = {math.sqrt(6):.8f})")
print(f"optimal cost          {res.cost:.8f}   (4 sqrt6 / 3 = {4 * math.sqrt(6) / 3:.8f})")

print("\ntrajectory samples (t, position, velocity, control):")
for t in np.linspace(0, res.tau_star, 6):
    p, v = state_at(sys_, res, t)
    print(f"  {t:5.3f}  {p:+.4f}  {v:+.4f}  {control_at(sys_, res, t)[0]:+.4f}")
print(f"\nendpoint error {np.abs(state_at(sys_, res, res.tau_star) - x1).max():.1e}")
