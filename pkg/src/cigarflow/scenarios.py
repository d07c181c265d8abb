"""Declarative scenario configs and initial-data construction.

A scenario is a JSON file with explicit keys (unknown keys are errors, not
warnings: silent typos are how irreproducible experiments happen):

    {
      "name": "perturbed_relax",
      "grid": {"kind": "radial", "n": 129, "s_max": 8.0},
      "initial": {"type": "perturbed_cigar", "amplitude": 0.3,
                  "center": 2.0, "width": 0.5},
      "stepping": {"safety": 0.9, "t_end": 5.0, "record_interval": 0.25},
      "output": {"directory": "runs/perturbed", "snapshot_interval": 2.5},
      "seed": 0
    }

Initial-data families (all conformal factors against the cigar background):

    exact_cigar       u0 = 1
    scaled_cigar      u0 = scale (constant)
    perturbed_cigar   log u0 = A exp(-(s - s0)^2 / (2 sigma^2)); optional
                      "random_bumps": k adds k seeded Gaussian bumps, which
                      is what the config-level seed feeds
    flat              the flat plane, u0 = 1/w0
    custom_table      explicit log u0 node values (radial only)

Bumps are smooth and specified in arc length, so sup |log u0| and the
gradient bound that the stability theory assumes are finite by construction;
`build_scenario` evaluates and reports both, plus sup |f0 - f(0)|.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from cigarflow import cigar
from cigarflow.flow import (
    COMOVING,
    FIXED,
    Accumulators,
    FlowState,
    InitialData,
    fixed_fields,
    run,
)
from cigarflow.geometry import (
    EUCLIDEAN,
    ConformalState,
    grid_from_spec,
    metric_laplacian,
    solve_initial_potential,
)

__all__ = [
    "ScenarioConfig",
    "ConfigError",
    "load_config",
    "parse_config",
    "build_scenario",
    "run_scenario",
    "manufactured_solution_error",
    "verify_scenario",
    "VerifyReport",
]


class ConfigError(ValueError):
    """Malformed or rejected scenario configuration."""


_GRID_KEYS = {"radial": {"kind", "n", "s_max"}, "cartesian": {"kind", "n", "extent"}}
_INITIAL_KEYS = {
    "exact_cigar": set(),
    "scaled_cigar": {"scale"},
    "perturbed_cigar": {"amplitude", "center", "width", "random_bumps"},
    "flat": set(),
    "custom_table": {"log_u0"},
}
_STEPPING_KEYS = {"safety", "t_end", "record_interval", "frame", "s_report"}
_OUTPUT_KEYS = {"directory", "snapshot_interval"}
_TOP_KEYS = {"name", "grid", "initial", "stepping", "output", "seed"}


@dataclass
class ScenarioConfig:
    name: str
    grid: dict
    initial: dict
    safety: float
    t_end: float
    record_interval: float
    frame: str | None = None           # None = comoving on radial, fixed on cartesian
    s_report: float = 4.0
    output_directory: str | None = None
    snapshot_interval: float | None = None
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False)


def _require_keys(section, allowed, where):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _power_of_two_plus_one(n):
    return n >= 2 and (n - 1) & (n - 2) == 0


def parse_config(data):
    """Validate a config dict and return a ScenarioConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _require_keys(data, _TOP_KEYS, "config")
    for key in ("name", "grid", "initial", "stepping"):
        if key not in data:
            raise ConfigError(f"config is missing required key {key!r}")

    grid = data["grid"]
    kind = grid.get("kind")
    if kind not in _GRID_KEYS:
        raise ConfigError(f"grid.kind must be 'radial' or 'cartesian', got {kind!r}")
    _require_keys(grid, _GRID_KEYS[kind], "grid")
    n = int(grid["n"])
    if not _power_of_two_plus_one(n):
        raise ConfigError(f"grid.n must be a power of two plus one for refinement studies, got {n}")

    initial = data["initial"]
    itype = initial.get("type")
    if itype not in _INITIAL_KEYS:
        raise ConfigError(f"unknown initial.type {itype!r}")
    _require_keys(set(initial) - {"type"}, _INITIAL_KEYS[itype], f"initial ({itype})")
    if itype == "scaled_cigar" and not (float(initial["scale"]) > 0):
        raise ConfigError("scaled_cigar.scale must be positive")
    if itype == "perturbed_cigar":
        if not (float(initial["width"]) > 0):
            raise ConfigError("perturbed_cigar.width must be positive")
        if not np.isfinite(float(initial["amplitude"])):
            raise ConfigError("perturbed_cigar.amplitude must be finite")
    if itype == "custom_table" and kind != "radial":
        raise ConfigError("custom_table initial data is radial only")

    stepping = data["stepping"]
    _require_keys(stepping, _STEPPING_KEYS, "stepping")
    for key in ("safety", "t_end", "record_interval"):
        if key not in stepping:
            raise ConfigError(f"stepping is missing required key {key!r}")
    frame = stepping.get("frame")
    if frame not in (None, COMOVING, FIXED):
        raise ConfigError(f"stepping.frame must be 'comoving' or 'fixed', got {frame!r}")
    if frame == COMOVING and kind == "cartesian":
        raise ConfigError("co-moving stepping is radial only")

    output = data.get("output", {})
    _require_keys(output, _OUTPUT_KEYS, "output")

    return ScenarioConfig(
        name=str(data["name"]),
        grid=dict(grid),
        initial=dict(initial),
        safety=float(stepping["safety"]),
        t_end=float(stepping["t_end"]),
        record_interval=float(stepping["record_interval"]),
        frame=frame,
        s_report=float(stepping.get("s_report", 4.0)),
        output_directory=output.get("directory"),
        snapshot_interval=(
            float(output["snapshot_interval"]) if "snapshot_interval" in output else None
        ),
        seed=int(data.get("seed", 0)),
        raw=data,
    )


def load_config(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON in {path}: {err}") from err
    return parse_config(data)


def _gaussian_bump(s, amplitude, center, width):
    return amplitude * np.exp(-((s - center) ** 2) / (2.0 * width**2))


def _gaussian_bump_slope(s, amplitude, center, width):
    return -amplitude * (s - center) / width**2 * np.exp(-((s - center) ** 2) / (2.0 * width**2))


def _initial_log_u0(config, grid, f0_cigar):
    """log u0 on the grid plus its analytic d/ds slope at the outer edge."""
    itype = config.initial["type"]
    if grid.kind == "radial":
        s = grid.s
        s_edge = grid.s_max
    else:
        s = np.arcsinh(np.sqrt(grid.r2))
        s_edge = None  # cartesian edges are Dirichlet, no slope needed

    if itype == "exact_cigar":
        return np.zeros_like(s), 0.0
    if itype == "flat":
        # log u0 = f0 node for node, so u~0 = log u0 - f0 is exactly zero
        slope = 2.0 * np.tanh(s_edge) if s_edge is not None else 0.0
        return f0_cigar.copy(), slope
    if itype == "scaled_cigar":
        lam = float(config.initial["scale"])
        return np.full_like(s, np.log(lam)), 0.0
    if itype == "perturbed_cigar":
        amp = float(config.initial["amplitude"])
        center = float(config.initial["center"])
        width = float(config.initial["width"])
        values = _gaussian_bump(s, amp, center, width)
        slope = _gaussian_bump_slope(s_edge, amp, center, width) if s_edge is not None else 0.0
        k = int(config.initial.get("random_bumps", 0))
        if k:
            rng = np.random.default_rng(config.seed)
            for _ in range(k):
                a = amp * rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
                c = rng.uniform(0.5, 0.8 * float(np.max(s)))
                w = width * rng.uniform(0.5, 1.5)
                values = values + _gaussian_bump(s, a, c, w)
                if s_edge is not None:
                    slope += _gaussian_bump_slope(s_edge, a, c, w)
        return values, float(slope)
    if itype == "custom_table":
        values = np.asarray(config.initial["log_u0"], dtype=float)
        if values.shape != s.shape:
            raise ConfigError(
                f"custom_table.log_u0 has {values.size} values, grid has {s.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigError("custom_table.log_u0 contains non-finite values (unbounded tail?)")
        slope = float(
            (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * grid.h)
        )
        return values, slope
    raise ConfigError(f"unknown initial type {itype!r}")


def build_scenario(config):
    """Construct the t = 0 FlowState: initial metric, curvature, potential,
    conserved field, and the hypothesis report values.

    Raises ConfigError when the data fails the boundedness hypotheses
    (non-finite log u0, curvature, or potential gap).
    """
    grid = grid_from_spec(config.grid)
    if grid.kind == "radial":
        f0_cigar = cigar.cigar_potential_arclength(grid.s)
    else:
        f0_cigar = np.log1p(grid.r2)
    log_u0, logu_slope = _initial_log_u0(config, grid, f0_cigar)
    u_slope = logu_slope - 2.0 * np.tanh(grid.s_max) if grid.kind == "radial" else 0.0
    u_tilde0 = log_u0 - f0_cigar

    conformal = ConformalState(grid, EUCLIDEAN, u_tilde0.copy(), u_slope)
    curvature0 = conformal.curvature
    if not np.all(np.isfinite(curvature0)):
        raise ConfigError("initial curvature is not finite; data violates the hypotheses")

    potential0, f_slope = solve_initial_potential(conformal)
    if f_slope is None:
        f_slope = 0.0
    res0 = float(np.max(np.abs(metric_laplacian(potential0, conformal, f_slope) - curvature0)))

    gap = np.max(np.abs(f0_cigar - potential0))
    if not np.isfinite(gap):
        raise ConfigError("sup |f0 - f(0)| is not finite; data violates the hypotheses")

    grad_sq = _log_u0_gradient_sq(grid, log_u0, u_tilde0, logu_slope)
    init = InitialData(
        u_tilde0=u_tilde0.copy(),
        log_u0=log_u0.copy(),
        potential0=potential0.copy(),
        w0=u_tilde0 + potential0,
        sup_u_tilde0=float(np.max(u_tilde0)),
        res_poisson0=res0,
        sup_potential_gap=float(gap),
        sup_log_u0=float(np.max(np.abs(log_u0))),
        sup_grad_log_u0=float(np.sqrt(np.max(grad_sq))),
    )
    acc = Accumulators(
        v_integral=0.0,
        curvature_origin=float(
            curvature0[grid.origin_index] if grid.kind == "cartesian" else curvature0[0]
        ),
        phi=np.zeros_like(u_tilde0),
        f_fixed=potential0.copy(),
    )
    frame = config.frame
    if frame is None:
        frame = COMOVING if grid.kind == "radial" else FIXED
    return FlowState(
        conformal=conformal,
        potential=potential0.copy(),
        potential_slope=float(f_slope),
        t=0.0,
        log_scale=0.0,
        frame=frame,
        init=init,
        acc=acc,
    )


def _log_u0_gradient_sq(grid, log_u0, u_tilde0, edge_slope):
    """|d log u0|^2 in the initial metric g(0) = e^{u~0} g_E."""
    if grid.kind == "radial":
        d = np.empty_like(log_u0)
        d[0] = 0.0
        d[1:-1] = (log_u0[2:] - log_u0[:-2]) / (2.0 * grid.h)
        d[-1] = edge_slope
        return np.exp(-u_tilde0) * (d / grid.cosh_s) ** 2
    gx, gy = np.gradient(log_u0, grid.h, edge_order=2)
    return np.exp(-u_tilde0) * (gx**2 + gy**2)


def run_scenario(config, snapshot_times=(), snapshot_hook=None, progress=None):
    """build_scenario + run with the config's stepping parameters."""
    state = build_scenario(config)
    return run(
        state,
        config.t_end,
        safety=config.safety,
        record_interval=config.record_interval,
        s_report=config.s_report,
        snapshot_times=snapshot_times,
        snapshot_hook=snapshot_hook,
        progress=progress,
    )


def manufactured_solution_error(n, s_max, safety, t_end, frame=None):
    """Max fixed-frame error of the cigar-data run against the exact family.

    This is the calibration yardstick: conservation and identity tolerances
    for other scenarios at the same resolution are multiples of it.
    """
    cfg = parse_config({
        "name": "manufactured",
        "grid": {"kind": "radial", "n": int(n), "s_max": float(s_max)},
        "initial": {"type": "exact_cigar"},
        "stepping": {"safety": float(safety), "t_end": float(t_end),
                     "record_interval": float(t_end)},
    })
    if frame is not None:
        cfg.frame = frame
    result = run_scenario(cfg)
    state = result.final_state
    exact = cigar.soliton_log_factor(state.grid.r, state.t)
    return float(np.max(np.abs(fixed_fields(state)["u_tilde"] - exact))), result


# ---------------------------------------------------------------------------
# invariant verification
# ---------------------------------------------------------------------------

# res_poisson growth allowance: 10 x initial residual + K h^2 (K calibrated
# once on soliton runs, frozen with a wide margin)
POISSON_DRIFT_K = 1.0

# sup h may rise by at most this much per unit time between records
H_MONOTONE_TOL = 1e-8

SUP_GROWTH_TOL = 1e-8


@dataclass
class VerifyReport:
    name: str
    checks: list            # (check name, passed, detail)
    result: object          # RunResult
    ok: bool

    def lines(self):
        out = [f"scenario {self.name}: {'PASS' if self.ok else 'FAIL'}"]
        for name, passed, detail in self.checks:
            out.append(f"  [{'ok' if passed else 'FAIL'}] {name}: {detail}")
        return out


def verify_scenario(config):
    """Run the scenario and check every trajectory invariant.

    The conservation tolerance is 5x the manufactured-solution error of a
    companion cigar-data run at the same resolution and horizon (for the
    Cartesian flat scenario, where nothing evolves, it is rounding-level).
    """
    state0 = build_scenario(config)
    result = run_scenario(config)
    checks = []

    records = result.records
    finite = all(rec.finite for rec in records)
    checks.append(("records finite, no abort",
                   finite and not result.aborted,
                   result.abort_message or f"{len(records)} records"))

    h = state0.grid.h
    if state0.grid.kind == "radial":
        err_ms, _ = manufactured_solution_error(
            config.grid["n"], config.grid["s_max"], config.safety, config.t_end,
            frame=config.frame,
        )
        tol_w = 5.0 * err_ms
    elif config.initial["type"] == "flat":
        err_ms = None
        tol_w = 1e-12  # the flat plane is an exact fixed point
    else:
        # no exact reference on Cartesian grids; report the drift ungated
        err_ms = None
        tol_w = np.inf
    drift = max(rec.w_drift for rec in records)
    checks.append((
        "conservation of w",
        drift <= tol_w,
        f"max drift {drift:.3e} vs tol {tol_w:.3e}"
        + (f" (5 x manufactured error {err_ms:.3e})" if err_ms is not None else ""),
    ))

    sup0 = records[0].sup_u_tilde
    worst = max(rec.sup_u_tilde - sup0 for rec in records)
    checks.append(("maximum principle sup u~",
                   worst <= SUP_GROWTH_TOL,
                   f"max rise {worst:.3e} vs tol {SUP_GROWTH_TOL:.1e}"))

    rises = [
        b.sup_h - a.sup_h - H_MONOTONE_TOL * (b.t - a.t) - 1e-12
        for a, b in zip(records, records[1:])
    ]
    worst_h = max(rises) if rises else 0.0
    checks.append(("sup h non-increasing",
                   worst_h <= 0.0,
                   f"worst inter-record rise {worst_h:.3e}"))

    res0 = state0.init.res_poisson0
    tol_p = 10.0 * res0 + POISSON_DRIFT_K * h**2
    worst_p = max(rec.res_poisson for rec in records)
    checks.append(("potential identity Lap_g f = R",
                   worst_p <= tol_p,
                   f"max residual {worst_p:.3e} vs tol {tol_p:.3e}"))

    sup_r0 = abs(records[0].sup_R)
    d0_proxy = max(rec.sup_grad_sq for rec in records)
    bound = sup_r0 + d0_proxy + 1e-6
    worst_r = max(max(abs(rec.sup_R), abs(rec.inf_R)) for rec in records)
    checks.append(("curvature stays within the observed bound",
                   worst_r <= bound,
                   f"sup |R| {worst_r:.4f} vs bound {bound:.4f}"))

    ok = all(passed for _, passed, _ in checks)
    return VerifyReport(config.name, checks, result, ok)
