#!/usr/bin/env python3
"""Closed-form cigar geometry: the identities every solver test leans on.

Walks the exact evaluators: conformal density, curvature, Ricci potential,
the arc-length parameterization, and the self-similar family with its
freezing pullback.
"""

import numpy as np

from cigarflow import cigar

print("=" * 72)
print("The cigar soliton g_c = (dx^2 + dy^2) / (1 + r^2)")
print("=" * 72)

rows = [0.0, 0.5, 1.0, 2.0, 5.0, 100.0]
print(f"\n{'r':>8} {'w0=1/(1+r^2)':>14} {'R_c':>10} {'f0':>10} {'s=arcsinh r':>12}")
for r in rows:
    print(f"{r:8.2f} {cigar.cigar_density(r):14.6f} {cigar.cigar_scalar_curvature(r):10.6f} "
          f"{cigar.cigar_potential(r):10.6f} {cigar.arc_length(r):12.6f}")

r = np.logspace(-3, 3, 1000)
s = cigar.arc_length(r)
print("\nIdentities over 1000 log-spaced radii in [1e-3, 1e3]:")
print(f"  max |log w0 + f0|                  = "
      f"{np.max(np.abs(cigar.cigar_potential(r) + np.log(cigar.cigar_density(r)))):.3e}")
print(f"  max rel |f0 - 2 log cosh s|        = "
      f"{np.max(np.abs(cigar.cigar_potential(r) - cigar.cigar_potential_arclength(s)) / cigar.cigar_potential(r)):.3e}")
print(f"  max rel |R_c - 4 cosh^-2 s|        = "
      f"{np.max(np.abs(cigar.cigar_scalar_curvature(r) - cigar.cigar_curvature_arclength(s)) / cigar.cigar_scalar_curvature(r)):.3e}")
print(f"  max rel |sinh(arcsinh r) - r|      = "
      f"{np.max(np.abs(cigar.radius_of(s) - r) / r):.3e}")

print("\nThe evolving family 1/(e^{4t} + r^2) and its freezing dilation:")
print(f"{'t':>6} {'density(0,0)':>14} {'R(origin)':>10} {'pullback residual':>18}")
rng = np.random.default_rng(1)
a, b = rng.uniform(-3, 3, 200), rng.uniform(-3, 3, 200)
for t in (0.0, 0.25, 0.5, 1.0):
    xa, xb = cigar.soliton_pullback(a, b, t)
    resid = np.max(np.abs(np.exp(4 * t) * cigar.soliton_density(xa, xb, t)
                          - cigar.cigar_density(np.hypot(a, b))))
    print(f"{t:6.2f} {cigar.soliton_density(0.0, 0.0, t):14.6f} "
          f"{cigar.soliton_scalar_curvature(0.0, t):10.6f} {resid:18.3e}")

print("\nThe tip sinks like e^{-4t} while the pulled-back metric never moves:")
print("that frozen picture is exactly the gauge the flow engine steps in.")
