"""Closed-form flow of phi' = 1, x' = y, y' = -sign(x) + p(phi).

On each side of the switching plane Sigma = {x = 0} the system is linear
in the primitives of p and integrates in closed form:

    x-branch "+" (x >= 0):  x(t) = -t^2/2 + x0 + t*(y0 - P1(phi0)) - P2(phi0) + P2(t+phi0)
                            y(t) = -t + y0 - P1(phi0) + P1(t+phi0)
    x-branch "-" (x <= 0):  same with +t^2/2 and +t.

Trajectories concatenate these branch solutions at transversal crossings
of Sigma.  Crossing times are located by a bounded-curvature grid scan
(|x''| <= 1 + sup|p|) followed by bracketed root polishing.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .forcing import PeriodicForcing

X_TOL = 1e-12       # |x| at a refined crossing
Y_DEGENERATE = 1e-9  # below this |y| a crossing is not transversal

__all__ = [
    "X_TOL",
    "Y_DEGENERATE",
    "DegenerateStart",
    "DegenerateCrossing",
    "State",
    "FlowSegment",
    "Trajectory",
    "flow_plus",
    "flow_minus",
    "branch_flow",
    "next_crossing",
    "evolve",
    "time_T_map",
]


class DegenerateStart(ValueError):
    """Initial state on Sigma with |y| too small to pick a branch."""


class DegenerateCrossing(RuntimeError):
    """Trajectory reached Sigma with |y| <= Y_DEGENERATE (sliding candidate)."""


@dataclass(frozen=True)
class State:
    """A point (phi, x, y) of the extended phase space."""
    phi: float
    x: float
    y: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.phi, self.x, self.y)


def branch_flow(f: PeriodicForcing, branch: int, t: float, s0: State) -> State:
    """Advance s0 by time t along one lateral branch (+1 for x>=0, -1 for x<=0)."""
    phi0, x0, y0 = s0.phi, s0.x, s0.y
    P1_0 = f.P1_scalar(phi0)
    P2_0 = f.P2_scalar(phi0)
    phi1 = t + phi0
    x1 = (-branch * t * t / 2.0 + x0 + t * (y0 - P1_0)
          - P2_0 + f.P2_scalar(phi1))
    y1 = -branch * t + y0 - P1_0 + f.P1_scalar(phi1)
    return State(phi1, x1, y1)


def flow_plus(f: PeriodicForcing, t: float, s0: State) -> State:
    return branch_flow(f, +1, t, s0)


def flow_minus(f: PeriodicForcing, t: float, s0: State) -> State:
    return branch_flow(f, -1, t, s0)


def _branch_x(f: PeriodicForcing, branch: int, s0: State, ts: np.ndarray) -> np.ndarray:
    """Vectorized x-component along a branch at durations ts."""
    phi0, x0, y0 = s0.phi, s0.x, s0.y
    P1_0 = f.P1_scalar(phi0)
    P2_0 = f.P2_scalar(phi0)
    return (-branch * ts * ts / 2.0 + x0 + ts * (y0 - P1_0)
            - P2_0 + f.P2(ts + phi0))


def _refine_root(xfun, dxfun, a: float, b: float) -> float:
    """Root of xfun in [a, b] polished to |x| <= X_TOL."""
    t = brentq(xfun, a, b, xtol=1e-15, rtol=8.9e-16)
    # Newton polish; brentq already leaves |x| near rounding level.
    for _ in range(5):
        fx = xfun(t)
        if abs(fx) <= X_TOL:
            break
        d = dxfun(t)
        if d == 0.0:
            break
        t -= fx / d
    return t


def next_crossing(f: PeriodicForcing, branch: int, s0: State,
                  horizon: float) -> float | None:
    """Smallest t in (0, horizon] where the branch flow reaches x = 0.

    The scan step honours |x''| <= 1 + sup|p|, so a transversal crossing
    cannot be skipped; cells whose endpoint values are too small to exclude
    a hidden double root are subdivided.
    """
    if horizon <= 0.0:
        return None
    on_sigma = abs(s0.x) <= X_TOL
    if on_sigma and abs(s0.y) <= Y_DEGENERATE:
        raise DegenerateStart(f"start on Sigma with |y|={abs(s0.y):.3e} <= {Y_DEGENERATE}")
    A = 1.0 + f.sup_p  # curvature bound on x
    h = f.period / 64.0
    if on_sigma:
        h = min(h, abs(s0.y) / (2.0 * A))
    h = min(h, horizon)

    phi0, x0, y0 = s0.phi, s0.x, s0.y
    P1_0 = f.P1_scalar(phi0)
    P2_0 = f.P2_scalar(phi0)
    slope = y0 - P1_0

    def xfun(t: float) -> float:
        return (-branch * t * t / 2.0 + x0 + t * slope
                - P2_0 + f.P2_scalar(t + phi0))

    def dxfun(t: float) -> float:
        return -branch * t + slope + f.P1_scalar(t + phi0)

    interior_sign = float(branch)  # sign x keeps while the branch is valid

    def descend(a: float, b: float, xa: float, xb: float, depth: int) -> float | None:
        """First root in (a, b]; endpoint values have interior sign."""
        if interior_sign * xb <= 0.0:
            return _refine_root(xfun, dxfun, a, b)
        if min(interior_sign * xa, interior_sign * xb) > A * (b - a) ** 2 / 2.0:
            return None  # a dip to zero would force a smaller endpoint value
        if depth >= 60 or b - a < 1e-15 * max(1.0, abs(b)):
            return None
        mid = 0.5 * (a + b)
        xm = xfun(mid)
        if interior_sign * xm <= 0.0:
            return _refine_root(xfun, dxfun, a, mid)
        hit = descend(a, mid, xa, xm, depth + 1)
        if hit is not None:
            return hit
        return descend(mid, b, xm, xb, depth + 1)

    # Walk the horizon in blocks so long crossing-free stretches stay cheap.
    block = 2048
    t_lo = 0.0
    x_lo = x0 if not on_sigma else 0.0
    first_cell = True
    while t_lo < horizon:
        n_cells = min(block, max(1, int(math.ceil((horizon - t_lo) / h))))
        ts = t_lo + h * np.arange(1, n_cells + 1)
        ts[-1] = min(ts[-1], horizon)
        xs = _branch_x(f, branch, s0, ts)
        for i in range(n_cells):
            t_hi = float(ts[i])
            x_hi = float(xs[i])
            if first_cell and on_sigma:
                # Leaving Sigma: x ~ y0*t near 0, skip the trivial root at t=0.
                if interior_sign * x_hi <= 0.0:
                    # step bound should prevent this; fall back to bisection
                    # on [eps, t_hi] where x has the interior sign
                    eps = t_hi
                    while eps > 1e-300:
                        eps *= 0.5
                        if interior_sign * xfun(eps) > 0.0:
                            return _refine_root(xfun, dxfun, eps, t_hi)
                    return None
            else:
                hit = descend(t_lo, t_hi, x_lo, x_hi, 0)
                if hit is not None and hit > 1e-300:
                    return hit
            first_cell = False
            t_lo, x_lo = t_hi, x_hi
        if ts[-1] >= horizon:
            break
        t_lo = float(ts[-1])
    return None


@dataclass(frozen=True)
class FlowSegment:
    """One branch arc of a trajectory, valid for local time in [0, duration]."""
    branch: int
    start_state: State
    duration: float
    end_state: State


class Trajectory:
    """Concatenated closed-form segments with their Sigma-crossing events."""

    def __init__(self, forcing: PeriodicForcing, segments: list[FlowSegment],
                 events: list[tuple[float, float]]):
        self.forcing = forcing
        self.segments = segments
        self.events = events  # (time since start, crossing velocity)
        self._starts = [0.0]
        for seg in segments:
            self._starts.append(self._starts[-1] + seg.duration)

    @property
    def duration(self) -> float:
        return self._starts[-1]

    @property
    def final_state(self) -> State:
        return self.segments[-1].end_state

    def eval(self, t: float) -> State:
        """State at time t in [0, duration] using the stored closed forms."""
        if not 0.0 <= t <= self.duration * (1.0 + 1e-12) + 1e-12:
            raise ValueError(f"t={t} outside [0, {self.duration}]")
        i = min(bisect_right(self._starts, t) - 1, len(self.segments) - 1)
        seg = self.segments[i]
        return branch_flow(self.forcing, seg.branch, t - self._starts[i], seg.start_state)

    def sample(self, step: float) -> np.ndarray:
        """Sample (t, phi, x, y, branch, is_event) rows at spacing <= step.

        Event times are always included.
        """
        rows = []
        f = self.forcing
        for i, seg in enumerate(self.segments):
            t0 = self._starts[i]
            n = max(1, int(math.ceil(seg.duration / step)))
            ts = np.linspace(0.0, seg.duration, n + 1)
            if i < len(self.segments) - 1:
                ts = ts[:-1]  # next segment starts with this junction state
            phi0, x0, y0 = seg.start_state.as_tuple()
            P1_0 = f.P1_scalar(phi0)
            P2_0 = f.P2_scalar(phi0)
            xs = (-seg.branch * ts * ts / 2.0 + x0 + ts * (y0 - P1_0)
                  - P2_0 + f.P2(ts + phi0))
            ys = -seg.branch * ts + y0 - P1_0 + f.P1(ts + phi0)
            for t_loc, x, y in zip(ts, xs, ys):
                is_event = i > 0 and t_loc == 0.0
                rows.append((t0 + t_loc, phi0 + t_loc, x, y, seg.branch, is_event))
        s = self.final_state
        rows.append((self.duration, s.phi, s.x, s.y, self.segments[-1].branch, bool(self.events and abs(self.duration - self.events[-1][0]) < 1e-12)))
        return np.array(rows)


def _initial_branch(s0: State) -> int:
    if abs(s0.x) > X_TOL:
        return 1 if s0.x > 0.0 else -1
    if abs(s0.y) <= Y_DEGENERATE:
        raise DegenerateStart(
            f"start on Sigma with |y|={abs(s0.y):.3e} <= {Y_DEGENERATE}")
    return 1 if s0.y > 0.0 else -1


def evolve(f: PeriodicForcing, s0: State, duration: float) -> Trajectory:
    """Concatenated flow of the full system over [0, duration]."""
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    branch = _initial_branch(s0)
    if abs(s0.x) <= X_TOL:
        s0 = State(s0.phi, 0.0, s0.y)
    segments: list[FlowSegment] = []
    events: list[tuple[float, float]] = []
    t_done = 0.0
    state = s0
    while t_done < duration:
        remaining = duration - t_done
        t_star = next_crossing(f, branch, state, remaining)
        if t_star is None:
            end = branch_flow(f, branch, remaining, state)
            segments.append(FlowSegment(branch, state, remaining, end))
            t_done = duration
            break
        end = branch_flow(f, branch, t_star, state)
        end = State(end.phi, 0.0, end.y)  # snap the refined crossing onto Sigma
        if abs(end.y) <= Y_DEGENERATE:
            raise DegenerateCrossing(
                f"crossing at t={t_done + t_star:.6g} with |y|={abs(end.y):.3e}")
        segments.append(FlowSegment(branch, state, t_star, end))
        t_done += t_star
        events.append((t_done, end.y))
        state = end
        branch = 1 if end.y > 0.0 else -1
    return Trajectory(f, segments, events)


def time_T_map(f: PeriodicForcing, s0: State) -> State:
    """Stroboscopic map: advance one forcing period from the phi = 0 section."""
    if abs(s0.phi) > 1e-12:
        raise ValueError("time-T map is defined on the section phi = 0")
    return evolve(f, s0, f.period).final_state
