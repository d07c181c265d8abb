#!/usr/bin/env python3
"""Width and circumference-at-infinity estimators.

Level lengths of the radial coordinate: L(c) = 2 pi c e^{u~(c)/2}.  Their
supremum upper-bounds the metric width; the tail mean estimates the
circumference at infinity.  The cigar saturates at 2 pi; a scaled cigar at
2 pi sqrt(scale); the flat plane never saturates and is flagged unbounded.
"""

import numpy as np

from cigarflow.geometry import width_report
from cigarflow.scenarios import build_scenario, parse_config

def conformal_state(initial):
    return build_scenario(parse_config({
        "name": "width-demo",
        "grid": {"kind": "radial", "n": 257, "s_max": 8.0},
        "initial": initial,
        "stepping": {"safety": 0.9, "t_end": 0.1, "record_interval": 0.1},
    })).conformal

cases = [
    ("cigar", {"type": "exact_cigar"}, 2 * np.pi),
    ("cigar x 2", {"type": "scaled_cigar", "scale": 2.0}, 2 * np.pi * np.sqrt(2)),
    ("cigar x 1/2", {"type": "scaled_cigar", "scale": 0.5}, 2 * np.pi / np.sqrt(2)),
    ("bumped cigar", {"type": "perturbed_cigar", "amplitude": 0.3,
                      "center": 2.0, "width": 0.5}, None),
    ("flat plane", {"type": "flat"}, None),
]

print(f"{'metric':>14} {'width bound':>12} {'C_inf est':>12} {'bounded':>8} {'expected':>10}")
for name, initial, expected in cases:
    rep = width_report(conformal_state(initial))
    exp = f"{expected:10.5f}" if expected else "       ---"
    print(f"{name:>14} {rep.width_bound:12.5f} {rep.cinf_estimate:12.5f} "
          f"{str(rep.bounded):>8} {exp}")

print("\nA few level lengths of the cigar itself (exact: 2 pi r / sqrt(1+r^2)):")
state = conformal_state({"type": "exact_cigar"})
from cigarflow.geometry import level_length
for c in (0.5, 1.0, 2.0, 10.0, 100.0):
    exact = 2 * np.pi * c / np.sqrt(1 + c * c)
    print(f"  L(r={c:6.1f}) = {level_length(state, c):10.6f}   exact {exact:10.6f}")
