"""Closed-form geometry of the cigar soliton and its self-similar family.

The cigar metric on the plane is g_c = (dx^2 + dy^2) / (1 + x^2 + y^2).
Everything here is an exact, pure evaluation: conformal density, scalar
curvature, Ricci potential, the arc-length parameterization s = arcsinh(r),
and the time-dependent family 1/(e^{4t} + x^2 + y^2) together with the
dilation that pulls it back to the static cigar.  These evaluators are the
oracle for every discrete operator and time integrator in the package, so
they deliberately contain no caching and no cleverness beyond overflow-safe
formulas for large arguments.

Key identities (each unit-tested to 1e-12):

    log w0(r) + f0(r) = 0          w0 = 1/(1+r^2),  f0 = log(1+r^2)
    f0 = 2 log cosh s              s  = arcsinh(r)
    R_c = 4 w0 = 4 / cosh^2 s
    e^{4t} * family(phi_t(a,b), t) = w0(|(a,b)|)
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "cigar_density",
    "cigar_scalar_curvature",
    "cigar_potential",
    "arc_length",
    "radius_of",
    "log_cosh",
    "cigar_potential_arclength",
    "cigar_density_arclength",
    "cigar_curvature_arclength",
    "soliton_density",
    "soliton_log_factor",
    "soliton_scalar_curvature",
    "soliton_potential",
    "soliton_pullback",
]

# exp(x) overflows float64 just above x = 709.78
_EXP_MAX = 709.0


def _radial(r, name="r"):
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError(f"{name} must be finite")
    if np.any(r < 0):
        raise ValueError(f"{name} must be non-negative")
    return r


def cigar_density(r):
    """Conformal density w0(r) = 1/(1+r^2) of the cigar versus the flat plane.

    Strictly decreasing, w0(0) = 1.  Underflows to 0 for r beyond ~1e154
    (double-precision r^2 overflow); callers sample well inside that.
    """
    r = _radial(r)
    return 1.0 / (1.0 + r * r)


def cigar_scalar_curvature(r):
    """Scalar curvature R_c(r) = 4/(1+r^2) = 4 * cigar_density(r)."""
    return 4.0 * cigar_density(r)


def cigar_potential(r):
    """Ricci potential f0(r) = log(1+r^2); satisfies log w0 + f0 = 0."""
    r = _radial(r)
    return np.log1p(r * r)


def arc_length(r):
    """Geodesic distance s from the tip: s = arcsinh(r) = log(r + sqrt(1+r^2)).

    numpy's arcsinh already evaluates the log form without cancellation for
    r >> 1 (it tends to log(2r)), which matters because the width and tail
    estimators sample radii out to ~1e3 and beyond.
    """
    r = _radial(r)
    return np.arcsinh(r)


def radius_of(s):
    """Inverse of arc_length: r = sinh(s)."""
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("s must be finite")
    if np.any(s < 0):
        raise ValueError("s must be non-negative")
    return np.sinh(s)


def log_cosh(s):
    """log(cosh(s)) to full relative precision over the whole double range.

    Uses log1p(2 sinh^2(s/2)), which is exact near 0 (the additive form
    |s| + log1p(e^{-2|s|}) - log 2 cancels catastrophically there), and
    switches to that additive form where sinh would overflow.
    """
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    small = np.minimum(a, 350.0)
    exact = np.log1p(2.0 * np.sinh(0.5 * small) ** 2)
    asym = a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)
    return np.where(a < 350.0, exact, asym)


def cigar_potential_arclength(s):
    """f0 expressed in arc length: f0 = 2 log cosh s."""
    return 2.0 * log_cosh(s)


def cigar_density_arclength(s):
    """w0 in arc length: w0 = cosh^{-2} s (via exp(-2 log cosh s), no overflow)."""
    return np.exp(-2.0 * log_cosh(s))


def cigar_curvature_arclength(s):
    """R_c in arc length: 4 cosh^{-2} s."""
    return 4.0 * cigar_density_arclength(s)


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("t must be finite")
    if np.any(4.0 * t > _EXP_MAX):
        raise OverflowError(
            "e^{4t} overflows double precision; rescale time (4t must stay below ~709)"
        )
    return t


def soliton_density(x, y, t):
    """Density of the evolving family, 1/(e^{4t} + x^2 + y^2).

    At t = 0 this is the static cigar density.  Raises OverflowError when
    e^{4t} is not representable.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("point coordinates must be finite")
    t = _check_time(t)
    return np.exp(soliton_log_factor(np.hypot(x, y), t))


def soliton_log_factor(r, t):
    """log of the family density at radius r: -log(e^{4t} + r^2).

    Evaluated as -logaddexp(4t, 2 log r) so that neither e^{4t} nor r^2 is
    formed directly; exact at r = 0.
    """
    r = _radial(r)
    t = _check_time(t)
    with np.errstate(divide="ignore"):
        two_log_r = np.where(r > 0, 2.0 * np.log(np.where(r > 0, r, 1.0)), -np.inf)
    return -np.logaddexp(4.0 * t, two_log_r)


def soliton_scalar_curvature(r, t):
    """Scalar curvature of the family: 4 e^{4t}/(e^{4t} + r^2) = 4/(1 + r^2 e^{-4t}).

    Equals 4 at the origin for every t.
    """
    r = _radial(r)
    t = _check_time(t)
    return 4.0 / (1.0 + r * r * np.exp(-4.0 * t))


def soliton_potential(r, t):
    """Ricci potential of the family: log(e^{4t} + r^2) = -soliton_log_factor."""
    return -soliton_log_factor(r, t)


def soliton_pullback(a, b, t):
    """Dilation phi_t(a, b) = (e^{2t} a, e^{2t} b).

    Pulling the family back by phi_t freezes it:
    e^{4t} * soliton_density(phi_t(a,b), t) = cigar_density(|(a,b)|).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("point coordinates must be finite")
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("t must be finite")
    if np.any(2.0 * np.abs(t) > _EXP_MAX):
        raise OverflowError("e^{2t} overflows double precision")
    scale = np.exp(2.0 * t)
    xa, xb = scale * a, scale * b
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(xb))):
        raise OverflowError("pullback coordinates overflow double precision")
    return xa, xb
