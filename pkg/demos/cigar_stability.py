#!/usr/bin/env python3
"""Stability of the cigar, at desk scale.

A perturbed cigar flows to t = 5; after normalizing (rescale so the log
factor vanishes at the origin) the profile collapses onto the static cigar.
The width estimator stays pinned near the cigar's asymptotic circumference
2 pi throughout: finite width is the mechanism that forces the cigar limit.
"""

import numpy as np

from cigarflow.scenarios import parse_config, run_scenario

config = parse_config({
    "name": "stability-demo",
    "grid": {"kind": "radial", "n": 129, "s_max": 8.0},
    "initial": {"type": "perturbed_cigar", "amplitude": 0.3, "center": 2.0, "width": 0.5},
    "stepping": {"safety": 0.9, "t_end": 5.0, "record_interval": 0.5, "s_report": 4.0},
})

result = run_scenario(config)
dist = dict(result.dist_trace)

print("perturbed cigar (bump 0.3 at s=2), normalized distance to the cigar")
print("on |s| <= 4, and the width estimate:\n")
print(f"{'t':>5} {'dist to cigar':>14} {'width bound':>12} {'width/2pi':>10}")
for rec in result.records:
    print(f"{rec.t:5.2f} {dist[rec.t]:14.6e} {rec.width_bound:12.6f} "
          f"{rec.width_bound / (2 * np.pi):10.6f}")

print(f"\ncontraction dist(5)/dist(0.5) = {dist[5.0] / dist[0.5]:.2e}")
print(f"width stayed within [{min(r.width_bound for r in result.records):.4f}, "
      f"{max(r.width_bound for r in result.records):.4f}]; 2 pi = {2 * np.pi:.4f}")
print(f"coordinate scale grew to e^{{{result.final_state.log_scale:.2f}}} "
      "(the co-moving frame absorbed it)")
