#!/usr/bin/env python3
"""Simulate the Lorenz flow map and inspect its observation structure.

Walks through the basic dynamical-system layer: building an invertible
flow map from a vector field, checking forward/backward round trips,
reading off delay windows of past observations, and verifying that the
delay map commutes with time shifts.
"""

import numpy as np

from gsync import (CoordinateProjection, check_equivariance, delay_window,
                   lorenz_system, tangent_norm_bounds)

lorenz = lorenz_system(h=0.01, substeps=8)
obs = CoordinateProjection([0], phase_dim=3)

print("Integrating 4000 steps (40 time units) from (0, 1, 1.05)...")
traj = lorenz.trajectory([0.0, 1.0, 1.05], 4000)
pts = traj.points
print(f"  u range: [{pts[:, 0].min():+.2f}, {pts[:, 0].max():+.2f}]")
print(f"  v range: [{pts[:, 1].min():+.2f}, {pts[:, 1].max():+.2f}]")
print(f"  w range: [{pts[:, 2].min():+.2f}, {pts[:, 2].max():+.2f}]")

m = pts[2500]
rt = np.linalg.norm(lorenz.inverse_step(lorenz.step(m)) - m)
print(f"\nforward/backward round trip at an attractor point: {rt:.2e}")

print("\nDelay window (7 past u-observations) at the same point:")
win = delay_window(lorenz, obs, m, 7)
print("  " + "  ".join(f"{v:+.4f}" for v in win[:, 0]))

err = check_equivariance(lorenz, obs, m, t=3, window=50)
print(f"\nshift/orbit equivariance defect over a 101-entry window: {err:.2e}")

sup_f, sup_i = tangent_norm_bounds(lorenz, pts[2000:4000:10])
print(f"\nsampled tangent-map norms: |T phi| <= {sup_f:.4f}, "
      f"|T phi^-1| <= {sup_i:.4f}")
print(f"  (1 / |T phi^-1| = {1.0 / sup_i:.4f}, the ceiling any contraction")
print("   constant must stay under for the differentiability certificate)")
