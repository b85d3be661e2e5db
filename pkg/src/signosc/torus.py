"""Candidate invariant tori: boundary curves, surface charts, meshes.

For index n the torus is the union of two graph charts over the strip
between the boundary curves

    y_n^{+-}(phi0) = +-nT/2 + P1(phi0) - P2(T)/T,

which live on the switching plane.  The chart heights Psi_n^{+-} come from
eliminating the flight time from the lateral-flow solutions; both charts
vanish on the boundary curves, so the two graphs close up into a single
surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .forcing import PeriodicForcing
from .flow import State

SURFACE_TOL = 1e-9  # classification band around the closed surface

__all__ = [
    "SURFACE_TOL",
    "TorusSpec",
    "TorusMesh",
    "y_boundary",
    "chart_height",
    "closure_check",
    "build_mesh",
    "contains",
    "nesting_check",
]


@dataclass(frozen=True)
class TorusSpec:
    """Data of the index-n candidate torus for one forcing."""
    n: int
    forcing: PeriodicForcing

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("torus index must be a positive integer")

    @property
    def period(self) -> float:
        return self.forcing.period


def y_boundary(spec: TorusSpec, sign: int, phi0):
    """Boundary curve y_n^sign(phi0) on the switching plane (vectorized)."""
    f = spec.forcing
    T = f.period
    return sign * spec.n * T / 2.0 + f.P1(phi0) - f.P2_T / T


def chart_height(spec: TorusSpec, sign: int, phi0, y0):
    """Chart height x = Psi_n^sign(phi0, y0) (vectorized).

    The inner P2 argument leaves [0, T], so the full periodic-extension
    evaluator is required here.
    """
    f = spec.forcing
    n, T = spec.n, f.period
    s = float(sign)
    phi0 = np.asarray(phi0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    P1_0 = f.P1(phi0)
    arg = n * T / 2.0 + s * y0 - s * P1_0 + s * f.P2_T / T + phi0
    val = (s * n * n * T * T - s * 4.0 * y0 * y0
           - 8.0 * f.P2(arg)
           + 4.0 * f.P2_T * (n + s * f.P2_T / (T * T))
           - 4.0 * P1_0 * (s * P1_0 - s * 2.0 * y0)
           + 8.0 * f.P2(phi0)) / 8.0
    return val if val.ndim else float(val)


def chart_height_from_flow(spec: TorusSpec, sign: int, phi0, y0):
    """Chart height via the eliminated flight time (independent cross-check).

    Solving the section equations of the boundary-curve flow for the
    flight time t gives

        t = nT/2 - sign*P2(T)/T + sign*(P1(phi0) - y0)
        x = -sign*t^2/2 + (nT/2 - sign*P2(T)/T)*t + P2(phi0) - P2(phi0 - t)

    where the whole expression is mirrored through sign.
    """
    f = spec.forcing
    n, T = spec.n, f.period
    s = float(sign)
    phi0 = np.asarray(phi0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    c = n * T / 2.0 - s * f.P2_T / T
    t = c + s * (f.P1(phi0) - y0)
    val = -s * t * t / 2.0 + s * c * t + f.P2(phi0) - f.P2(phi0 - t)
    return val if val.ndim else float(val)


def closure_check(spec: TorusSpec, n_y: int = 256) -> float:
    """Max over both charts of |Psi(0, y0) - Psi(T, y0)| on a y0 grid."""
    y_lo = y_boundary(spec, -1, 0.0)
    y_hi = y_boundary(spec, +1, 0.0)
    y0 = np.linspace(y_lo, y_hi, n_y)
    worst = 0.0
    for sign in (+1, -1):
        d = np.abs(chart_height(spec, sign, 0.0, y0)
                   - chart_height(spec, sign, spec.period, y0))
        worst = max(worst, float(d.max()))
    return worst


@dataclass
class TorusMesh:
    """Discretized torus: both charts on a (phi0, y-fraction) grid."""
    spec: TorusSpec
    phi: np.ndarray          # (n_phi,)
    y: np.ndarray            # (n_phi, n_y), shared by both charts
    x_plus: np.ndarray       # (n_phi, n_y)
    x_minus: np.ndarray      # (n_phi, n_y)
    resolution: tuple[int, int] = field(init=False)

    def __post_init__(self):
        self.resolution = (len(self.phi), self.y.shape[1])

    def rows(self):
        """Long-format rows (sign, i, j, phi, x, y)."""
        n_phi, n_y = self.resolution
        for sign, xs in ((+1, self.x_plus), (-1, self.x_minus)):
            for i in range(n_phi):
                for j in range(n_y):
                    yield (sign, i, j, float(self.phi[i]),
                           float(xs[i, j]), float(self.y[i, j]))

    def triangles(self):
        """Triangle soup over both charts: ((phi,x,y), (phi,x,y), (phi,x,y))."""
        n_phi, n_y = self.resolution
        for xs in (self.x_plus, self.x_minus):
            for i in range(n_phi - 1):
                for j in range(n_y - 1):
                    q = [(float(self.phi[a]), float(xs[a, b]), float(self.y[a, b]))
                         for a, b in ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))]
                    yield (q[0], q[1], q[2])
                    yield (q[0], q[2], q[3])


def build_mesh(spec: TorusSpec, n_phi: int, n_y: int) -> TorusMesh:
    """Sample both charts on a rectangular (phi0, y-fraction) grid."""
    if n_phi < 2 or n_y < 2:
        raise ValueError("mesh resolution must be at least 2x2")
    phi = np.linspace(0.0, spec.period, n_phi)
    y_lo = y_boundary(spec, -1, phi)
    y_hi = y_boundary(spec, +1, phi)
    u = np.linspace(0.0, 1.0, n_y)
    y = y_lo[:, None] + (y_hi - y_lo)[:, None] * u[None, :]
    pp = np.broadcast_to(phi[:, None], y.shape)
    x_plus = chart_height(spec, +1, pp.ravel(), y.ravel()).reshape(y.shape)
    x_minus = chart_height(spec, -1, pp.ravel(), y.ravel()).reshape(y.shape)
    return TorusMesh(spec, phi, y, x_plus, x_minus)


def contains(spec: TorusSpec, s: State, tol: float = SURFACE_TOL) -> str:
    """Classify a state against the closed surface: 'inside'|'on'|'outside'."""
    y_lo = y_boundary(spec, -1, s.phi)
    y_hi = y_boundary(spec, +1, s.phi)
    if s.y < y_lo - tol or s.y > y_hi + tol:
        return "outside"
    y = min(max(s.y, y_lo), y_hi)
    x_lo = chart_height(spec, -1, s.phi, y)
    x_hi = chart_height(spec, +1, s.phi, y)
    if s.x > x_hi + tol or s.x < x_lo - tol:
        return "outside"
    on_chart = s.x >= x_hi - tol or s.x <= x_lo + tol
    on_band_edge = s.y <= y_lo + tol or s.y >= y_hi - tol
    if on_chart or on_band_edge:
        return "on"
    return "inside"


def contains_many(spec: TorusSpec, phi, x, y, tol: float = SURFACE_TOL) -> np.ndarray:
    """Vectorized containment: 1 inside, 0 on, -1 outside."""
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    y_lo = y_boundary(spec, -1, phi)
    y_hi = y_boundary(spec, +1, phi)
    out = np.full(phi.shape, -1, dtype=int)
    band = (y >= y_lo - tol) & (y <= y_hi + tol)
    if band.any():
        yc = np.clip(y[band], y_lo[band], y_hi[band])
        x_lo = chart_height(spec, -1, phi[band], yc)
        x_hi = chart_height(spec, +1, phi[band], yc)
        xb = x[band]
        inside_x = (xb <= x_hi + tol) & (xb >= x_lo - tol)
        strict = (inside_x & (xb < x_hi - tol) & (xb > x_lo + tol)
                  & (y[band] > y_lo[band] + tol) & (y[band] < y_hi[band] - tol))
        sub = np.full(xb.shape, -1, dtype=int)
        sub[inside_x] = 0
        sub[strict] = 1
        out[band] = sub
    return out


def nesting_check(inner: TorusSpec, outer: TorusSpec,
                  n_phi: int = 64, n_y: int = 33) -> bool:
    """True iff every mesh vertex of the inner torus is inside-or-on the outer."""
    mesh = build_mesh(inner, n_phi, n_y)
    pp = np.broadcast_to(mesh.phi[:, None], mesh.y.shape).ravel()
    for xs in (mesh.x_plus, mesh.x_minus):
        cls = contains_many(outer, pp, xs.ravel(), mesh.y.ravel())
        if (cls < 0).any():
            return False
    return True
