"""Independent brute-force checks for the closed-form machinery.

Deliberately simple and slower than the production path: a fixed-step RK4
integrator with bisection event location, dense-grid scans of the
certification inequalities, and composite quadrature for the primitives.
Nothing here shares code with the closed-form flow beyond the State type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forcing import PeriodicForcing
from .flow import State, DegenerateCrossing, Y_DEGENERATE

__all__ = [
    "OracleConfig",
    "rk_evolve",
    "scan_conditions",
    "quad_primitives",
]


@dataclass(frozen=True)
class OracleConfig:
    rk_step: float = 1e-3
    event_bisection_tol: float = 1e-13
    grid_resolution: tuple[int, int] = (2000, 2000)
    quadrature_rule: str = "simpson"  # "simpson" | "midpoint"

    def __post_init__(self):
        if self.rk_step <= 0 or self.event_bisection_tol <= 0:
            raise ValueError("steps and tolerances must be positive")
        if self.quadrature_rule not in ("simpson", "midpoint"):
            raise ValueError("quadrature_rule must be 'simpson' or 'midpoint'")


def _rk4_step(f: PeriodicForcing, sgn: float, t: float, x: float, y: float,
              h: float) -> tuple[float, float]:
    """One classic RK4 step of x' = y, y' = -sgn + p(t).

    Steps are split at forcing discontinuities, so the right endpoint must
    see the left limit of p; the end-stage time is nudged inward for that.
    """
    p = f.p_scalar
    k1x = y
    k1y = -sgn + p(t)
    k2x = y + 0.5 * h * k1y
    k2y = -sgn + p(t + 0.5 * h)
    k3x = y + 0.5 * h * k2y
    k3y = k2y  # same time node as k2
    k4x = y + h * k3y
    k4y = -sgn + p(t + h * (1.0 - 1e-9))
    x1 = x + h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
    y1 = y + h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
    return x1, y1


def _split_times(f: PeriodicForcing, t0: float, t1: float) -> list[float]:
    """Forcing discontinuity times inside (t0, t1), ascending."""
    discs = f.discontinuities
    if not discs:
        return []
    T = f.period
    out = []
    k = math.floor(t0 / T)
    while k * T <= t1:
        for b in discs:
            t = k * T + b
            if t0 < t < t1:
                out.append(t)
        k += 1
    return sorted(out)


def rk_evolve(f: PeriodicForcing, s0: State, duration: float,
              config: OracleConfig | None = None) -> np.ndarray:
    """Fixed-step RK4 trajectory; rows (t, phi, x, y).

    Steps are split at forcing discontinuities and at located switching
    events, so the integrand is smooth within every step taken.
    """
    cfg = config or OracleConfig()
    h = cfg.rk_step
    t, x, y = 0.0, s0.x, s0.y
    phi0 = s0.phi
    if abs(x) > 0.0:
        sgn = math.copysign(1.0, x)
    else:
        if abs(y) <= Y_DEGENERATE:
            raise DegenerateCrossing(f"start on Sigma with |y|={abs(y):.3e}")
        sgn = math.copysign(1.0, y)
    rows = [(t, phi0 + t, x, y)]
    # step edges: uniform grid plus discontinuity times; the integrand is
    # p(phi0 + t), so the jumps sit at t = kT + b - phi0
    edges = list(np.arange(h, duration, h)) + [duration]
    jumps = [s - phi0 for s in _split_times(f, phi0, phi0 + duration)]
    edges = sorted(set(edges).union(s for s in jumps if 0.0 < s < duration))
    idx = 0
    while idx < len(edges):
        t_next = edges[idx]
        step = t_next - t
        if step <= 0.0:
            idx += 1
            continue
        x1, y1 = _rk4_step(f, sgn, phi0 + t, x, y, step)
        if x1 * sgn >= 0.0:
            t, x, y = t_next, x1, y1
            rows.append((t, phi0 + t, x, y))
            idx += 1
            continue
        # bisection on the step fraction for the switching event
        lo, hi = 0.0, step
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            xm, _ = _rk4_step(f, sgn, phi0 + t, x, y, mid)
            if xm * sgn < 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo < cfg.event_bisection_tol:
                break
        t_ev = 0.5 * (lo + hi)
        _, y_ev = _rk4_step(f, sgn, phi0 + t, x, y, t_ev)
        if abs(y_ev) <= Y_DEGENERATE:
            raise DegenerateCrossing(
                f"event at t={t + t_ev:.6g} with |y|={abs(y_ev):.3e}")
        t = t + t_ev
        x, y = 0.0, y_ev
        sgn = -sgn
        rows.append((t, phi0 + t, x, y))
        # the remainder up to t_next is re-processed on the new side
    return np.array(rows)


def scan_conditions(f: PeriodicForcing, n: int,
                    resolution: tuple[int, int] = (2000, 2000)) -> dict:
    """Dense-grid margins of the two certification inequalities.

    No rigor claimed; returns the worst observed margins and, for the
    second condition, the grid point achieving it.
    """
    T = f.period
    nT = n * T
    n_phi, n_t = resolution
    phis = np.linspace(0.0, T, n_phi)
    m1 = n * T * T / 2.0 - np.max(np.abs(T * f.P1(phis) - f.P2_T))

    ts = np.linspace(0.0, nT, n_t + 2)[1:-1]  # interior of (0, nT)
    h = 0.5 * T * ts * (nT - ts)
    P2_phi = f.P2(phis)
    worst = math.inf
    witness = (0.0, 0.0)
    block = max(1, int(4e6 // len(ts)))
    for j0 in range(0, n_phi, block):
        pj = phis[j0:j0 + block]
        fv = (ts[:, None] * f.P2_T + T * P2_phi[j0:j0 + block][None, :]
              - T * f.P2(ts[:, None] + pj[None, :]))
        slack = h[:, None] - np.abs(fv)
        i, j = np.unravel_index(np.argmin(slack), slack.shape)
        if slack[i, j] < worst:
            worst = float(slack[i, j])
            witness = (float(pj[j]), float(ts[i]))
    return {
        "cond1_margin": float(m1),
        "cond2_margin": worst,
        "cond2_witness_phi0": witness[0],
        "cond2_witness_t": witness[1],
        "violation": bool(m1 <= 0.0 or worst <= 0.0),
    }


def _composite(fun, a: float, b: float, panels: int, rule: str) -> float:
    if b == a:
        return 0.0
    xs, h = np.linspace(a, b, panels + 1, retstep=True)
    if rule == "midpoint":
        return float(np.sum(fun(xs[:-1] + 0.5 * h)) * h)
    # pieces are split at jumps of the integrand, which take their right
    # segment's value; the right edge must see the left limit instead
    xs = xs.copy()
    xs[-1] = b - 1e-9 * (b - a)
    vals = fun(xs)
    return float(h / 3.0 * (vals[0] + vals[-1]
                            + 4.0 * np.sum(vals[1:-1:2])
                            + 2.0 * np.sum(vals[2:-2:2])))


def quad_primitives(f: PeriodicForcing, t: float,
                    config: OracleConfig | None = None,
                    panels_per_piece: int = 64) -> tuple[float, float]:
    """(P1(t), P2(t)) by composite quadrature on [0, t].

    The interval is split at forcing discontinuities so each composite rule
    only ever sees a smooth integrand.
    """
    cfg = config or OracleConfig()
    rule = cfg.quadrature_rule
    sign = 1.0
    if t < 0.0:
        # integrate on [t, 0] and negate
        sign = -1.0
    lo, hi = min(0.0, t), max(0.0, t)
    cuts = [lo] + _split_times(f, lo, hi) + [hi]

    def P1_quad(s):
        # P1 at arbitrary points, each by its own piecewise-aligned rule
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s_arr)
        for i, si in enumerate(s_arr):
            l, hgh = min(0.0, si), max(0.0, si)
            sgn = 1.0 if si >= 0.0 else -1.0
            acc = 0.0
            pcs = [l] + _split_times(f, l, hgh) + [hgh]
            for a, b in zip(pcs, pcs[1:]):
                acc += _composite(f.p, a, b, panels_per_piece, rule)
            out[i] = sgn * acc
        return out

    P1_val = 0.0
    for a, b in zip(cuts, cuts[1:]):
        P1_val += _composite(f.p, a, b, panels_per_piece, rule)
    P2_val = 0.0
    for a, b in zip(cuts, cuts[1:]):
        P2_val += _composite(P1_quad, a, b, panels_per_piece, rule)
    return sign * P1_val, sign * P2_val
