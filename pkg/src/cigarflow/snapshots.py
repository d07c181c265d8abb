"""Text snapshots of a FlowState with exact (bit-level) resume.

Format, one item per line, all floats as 17-significant-digit decimals
(which round-trip float64 exactly, so a resumed run reproduces the unbroken
run's diagnostics bit for bit):

    cigarflow-snapshot 1
    grid radial 129 8.0
    frame comoving
    scalar t 0.5
    scalar log_scale ...
    ... more scalars ...
    array u_tilde <n>          # log conformal factor in the stepped frame
    <n value lines>
    array potential <n>        # Ricci potential in the stepped frame
    ... more arrays (initial-data snapshot and accumulators) ...
    checksum <fsum of every value above>

The checksum is the exact floating-point sum (math.fsum) of every scalar
and array value in file order; a load with any corrupted digit is refused.
"""

from __future__ import annotations

import math

import numpy as np

from cigarflow.flow import Accumulators, FlowState, InitialData
from cigarflow.geometry import EUCLIDEAN, CartesianGrid, ConformalState, RadialGrid

__all__ = ["save_snapshot", "load_snapshot", "SnapshotError"]

FORMAT_TAG = "cigarflow-snapshot"
FORMAT_VERSION = "1"

_SCALARS = [
    "t",
    "log_scale",
    "potential_slope",
    "u_slope",
    "v_integral",
    "curvature_origin",
    "sup_u_tilde0",
    "res_poisson0",
    "sup_potential_gap",
    "sup_log_u0",
    "sup_grad_log_u0",
]
_ARRAYS = [
    "u_tilde",
    "potential",
    "init_u_tilde0",
    "init_log_u0",
    "init_potential0",
    "init_w0",
    "acc_phi",
    "acc_f_fixed",
]


class SnapshotError(ValueError):
    """Unreadable, version-mismatched, or corrupted snapshot."""


def _fmt(x):
    return format(float(x), ".17g")


def _state_items(state):
    scalars = {
        "t": state.t,
        "log_scale": state.log_scale,
        "potential_slope": state.potential_slope,
        "u_slope": state.conformal.edge_slope,
        "v_integral": state.acc.v_integral,
        "curvature_origin": state.acc.curvature_origin,
        "sup_u_tilde0": state.init.sup_u_tilde0,
        "res_poisson0": state.init.res_poisson0,
        "sup_potential_gap": state.init.sup_potential_gap,
        "sup_log_u0": state.init.sup_log_u0,
        "sup_grad_log_u0": state.init.sup_grad_log_u0,
    }
    arrays = {
        "u_tilde": state.conformal.log_factor,
        "potential": state.potential,
        "init_u_tilde0": state.init.u_tilde0,
        "init_log_u0": state.init.log_u0,
        "init_potential0": state.init.potential0,
        "init_w0": state.init.w0,
        "acc_phi": state.acc.phi,
        "acc_f_fixed": state.acc.f_fixed,
    }
    return scalars, arrays


def save_snapshot(state, path):
    """Write the full resume state as decimal text with a trailing checksum."""
    scalars, arrays = _state_items(state)
    grid = state.grid
    values = []
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}"]
    if grid.kind == "radial":
        lines.append(f"grid radial {grid.n} {_fmt(grid.s_max)}")
    else:
        lines.append(f"grid cartesian {grid.n} {_fmt(grid.extent)}")
    lines.append(f"frame {state.frame}")
    for name in _SCALARS:
        x = scalars[name]
        values.append(float(x))
        lines.append(f"scalar {name} {_fmt(x)}")
    for name in _ARRAYS:
        arr = np.asarray(arrays[name], dtype=float).ravel()
        lines.append(f"array {name} {arr.size}")
        for x in arr:
            values.append(float(x))
            lines.append(_fmt(x))
    lines.append(f"checksum {_fmt(math.fsum(values))}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_snapshot(path):
    """Read a snapshot back into a FlowState; refuses corrupted files."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SnapshotError("empty snapshot file")
    tag = lines[0].split()
    if len(tag) != 2 or tag[0] != FORMAT_TAG:
        raise SnapshotError("not a cigarflow snapshot")
    if tag[1] != FORMAT_VERSION:
        raise SnapshotError(f"snapshot version {tag[1]} not supported (expected {FORMAT_VERSION})")

    idx = 1
    values = []

    def take():
        nonlocal idx
        if idx >= len(lines):
            raise SnapshotError("truncated snapshot")
        line = lines[idx]
        idx += 1
        return line

    parts = take().split()
    if parts[0] != "grid":
        raise SnapshotError("missing grid line")
    if parts[1] == "radial":
        grid = RadialGrid(int(parts[2]), float(parts[3]))
        shape = (grid.n,)
    elif parts[1] == "cartesian":
        grid = CartesianGrid(int(parts[2]), float(parts[3]))
        shape = (grid.n, grid.n)
    else:
        raise SnapshotError(f"unknown grid kind {parts[1]!r}")

    parts = take().split()
    if parts[0] != "frame" or len(parts) != 2:
        raise SnapshotError("missing frame line")
    frame = parts[1]

    scalars = {}
    for name in _SCALARS:
        parts = take().split()
        if parts[:2] != ["scalar", name] or len(parts) != 3:
            raise SnapshotError(f"expected scalar {name}")
        scalars[name] = float(parts[2])
        values.append(scalars[name])

    arrays = {}
    for name in _ARRAYS:
        parts = take().split()
        if parts[:2] != ["array", name] or len(parts) != 3:
            raise SnapshotError(f"expected array {name}")
        size = int(parts[2])
        if size != int(np.prod(shape)):
            raise SnapshotError(f"array {name} has size {size}, grid expects {np.prod(shape)}")
        data = np.empty(size)
        for k in range(size):
            data[k] = float(take())
            values.append(data[k])
        arrays[name] = data.reshape(shape)

    parts = take().split()
    if parts[0] != "checksum" or len(parts) != 2:
        raise SnapshotError("missing checksum line")
    if _fmt(math.fsum(values)) != parts[1]:
        raise SnapshotError("checksum mismatch: snapshot is corrupted")

    conformal = ConformalState(grid, EUCLIDEAN, arrays["u_tilde"], scalars["u_slope"])
    init = InitialData(
        u_tilde0=arrays["init_u_tilde0"],
        log_u0=arrays["init_log_u0"],
        potential0=arrays["init_potential0"],
        w0=arrays["init_w0"],
        sup_u_tilde0=scalars["sup_u_tilde0"],
        res_poisson0=scalars["res_poisson0"],
        sup_potential_gap=scalars["sup_potential_gap"],
        sup_log_u0=scalars["sup_log_u0"],
        sup_grad_log_u0=scalars["sup_grad_log_u0"],
    )
    acc = Accumulators(
        v_integral=scalars["v_integral"],
        curvature_origin=scalars["curvature_origin"],
        phi=arrays["acc_phi"],
        f_fixed=arrays["acc_f_fixed"],
    )
    return FlowState(
        conformal=conformal,
        potential=arrays["potential"],
        potential_slope=scalars["potential_slope"],
        t=scalars["t"],
        log_scale=scalars["log_scale"],
        frame=frame,
        init=init,
        acc=acc,
    )
