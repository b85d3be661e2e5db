"""T-periodic forcing terms with exact first and second antiderivatives.

A forcing p is represented either as a piecewise polynomial on [0, T)
(segments are right-open; tabulated data with step or linear interpolation
is normalized to this form) or as a finite sin/cos series.  Both families
admit closed-form antiderivatives, so the evaluators

    P1(t) = int_0^t p,      P2(t) = int_0^t P1

are exact up to rounding.  Evaluation on all of R uses the periodic shift
identities

    P1(t + kT) = P1(t) + k*P1(T)
    P2(t + kT) = P2(t) + k*P1(T)*t + (k^2-k)/2*T*P1(T) + k*P2(T)

which hold for every integer k.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass

import numpy as np

AVG_TOL = 1e-12  # relative gate for the vanishing-average property

__all__ = [
    "AVG_TOL",
    "PeriodicForcing",
    "square_wave",
    "sawtooth",
    "sinusoid",
    "load_forcing",
]


def _poly_antiderivative(coefs: np.ndarray, constant: float) -> np.ndarray:
    """Antiderivative of an ascending-power polynomial, fixed constant term."""
    out = np.empty(len(coefs) + 1)
    out[0] = constant
    out[1:] = coefs / np.arange(1, len(coefs) + 1)
    return out


def _real_roots_in(coefs: np.ndarray, lo: float, hi: float) -> list[float]:
    """Real roots of an ascending-power polynomial inside [lo, hi]."""
    c = np.trim_zeros(np.asarray(coefs, dtype=float), trim="b")
    if len(c) <= 1:
        return []
    roots = np.roots(c[::-1])
    out = []
    for r in roots:
        if abs(r.imag) < 1e-9 * (1.0 + abs(r.real)):
            x = float(r.real)
            if lo - 1e-12 <= x <= hi + 1e-12:
                out.append(min(max(x, lo), hi))
    return out


def _trig_roots(T: float, k: np.ndarray, a: np.ndarray, b: np.ndarray) -> list[float]:
    """Roots in [0, T] of c0 + sum a_k sin(w k t) + b_k cos(w k t).

    Substituting z = exp(i w t) turns the series into a Laurent polynomial;
    its roots on the unit circle give the zeros, found via the companion
    matrix and polished by Newton steps.
    """
    K = int(k.max(initial=0))
    if K == 0:
        return []
    coef = np.zeros(2 * K + 1, dtype=complex)  # coef[j] multiplies z^(j-K)
    for kk, ak, bk in zip(k, a, b):
        kk = int(kk)
        if kk == 0:
            coef[K] += bk
        else:
            coef[K + kk] += (bk - 1j * ak) / 2.0
            coef[K - kk] += (bk + 1j * ak) / 2.0
    c = np.trim_zeros(coef, trim="b")
    if len(c) <= 1:
        return []
    roots = np.roots(c[::-1])
    w = 2.0 * math.pi / T
    out = []
    for z in roots:
        if abs(abs(z) - 1.0) > 1e-7:
            continue
        t = float(np.angle(z)) / w
        if t < 0.0:
            t += T
        # Newton polish on the real series.
        for _ in range(40):
            f = sum(ak * math.sin(w * kk * t) + bk * math.cos(w * kk * t)
                    for kk, ak, bk in zip(k, a, b))
            df = sum(w * kk * (ak * math.cos(w * kk * t) - bk * math.sin(w * kk * t))
                     for kk, ak, bk in zip(k, a, b))
            if df == 0.0:
                break
            step = f / df
            t -= step
            if abs(step) < 1e-15 * T:
                break
        if -1e-12 <= t <= T + 1e-12:
            out.append(min(max(t, 0.0), T))
    return out


@dataclass(frozen=True)
class PeriodicForcing:
    """Immutable T-periodic forcing with cached exact primitives.

    Use the constructors :meth:`zero`, :meth:`piecewise`, :meth:`trig`,
    :meth:`table` or :func:`load_forcing` rather than ``__init__``.
    """

    name: str
    period: float
    kind: str  # "piecewise" | "trig"
    # piecewise backend
    breaks: tuple = ()
    seg_p: tuple = ()      # ascending coefs in tau = t - break
    seg_P1: tuple = ()
    seg_P2: tuple = ()
    # trig backend
    harmonics: tuple = ()  # (k, sin coef, cos coef)
    # derived constants
    P1_T: float = 0.0
    P2_T: float = 0.0
    M: float = 0.0         # sup |P1| on [0, T]
    sup_p: float = 0.0     # sup |p|  on [0, T]
    pbar: float = 0.0
    zero_average: bool = True

    # ---------------------------------------------------------------- constructors

    @classmethod
    def zero(cls, T: float = 1.0, name: str = "zero") -> "PeriodicForcing":
        return cls.piecewise(name, T, [(0.0, [0.0])])

    @classmethod
    def piecewise(cls, name: str, T: float, pieces) -> "PeriodicForcing":
        """Piecewise polynomial from [(breakpoint, ascending coefs), ...].

        Breakpoints must start at 0, increase strictly and stay below T;
        each coefficient list is in the local variable t - breakpoint.
        """
        if T <= 0:
            raise ValueError("period must be positive")
        breaks = [float(b) for b, _ in pieces]
        if not breaks or breaks[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])) or breaks[-1] >= T:
            raise ValueError("breakpoints must increase strictly and stay below the period")
        seg_p = [np.asarray(c, dtype=float) for _, c in pieces]

        seg_P1, seg_P2 = [], []
        c1 = c2 = 0.0
        edges = breaks + [T]
        for i, cp in enumerate(seg_p):
            width = edges[i + 1] - edges[i]
            q1 = _poly_antiderivative(cp, c1)
            q2 = _poly_antiderivative(q1, c2)
            seg_P1.append(q1)
            seg_P2.append(q2)
            c1 = float(np.polynomial.polynomial.polyval(width, q1))
            c2 = float(np.polynomial.polynomial.polyval(width, q2))
        P1_T, P2_T = c1, c2

        # sup|P1| at roots of p (= P1') and the segment edges; sup|p| likewise.
        m_cand, p_cand = [], []
        for i, cp in enumerate(seg_p):
            width = edges[i + 1] - edges[i]
            for r in _real_roots_in(cp, 0.0, width):
                m_cand.append(abs(float(np.polynomial.polynomial.polyval(r, seg_P1[i]))))
            dp = cp[1:] * np.arange(1, len(cp))
            for r in _real_roots_in(dp, 0.0, width) + [0.0, width]:
                p_cand.append(abs(float(np.polynomial.polynomial.polyval(r, cp))))
            m_cand.append(abs(float(np.polynomial.polynomial.polyval(0.0, seg_P1[i]))))
        m_cand.append(abs(P1_T))
        M = max(m_cand)
        sup_p = max(p_cand)

        pbar = P1_T / T
        return cls(
            name=name, period=T, kind="piecewise",
            breaks=tuple(breaks),
            seg_p=tuple(tuple(c) for c in seg_p),
            seg_P1=tuple(tuple(c) for c in seg_P1),
            seg_P2=tuple(tuple(c) for c in seg_P2),
            P1_T=P1_T, P2_T=P2_T, M=M, sup_p=sup_p, pbar=pbar,
            zero_average=abs(pbar) <= AVG_TOL * max(1.0, sup_p),
        )

    @classmethod
    def trig(cls, name: str, T: float, harmonics) -> "PeriodicForcing":
        """Finite sin/cos series from [(k, sin coef, cos coef), ...] (k >= 0)."""
        if T <= 0:
            raise ValueError("period must be positive")
        harm = [(int(k), float(a), float(b)) for k, a, b in harmonics]
        if any(k < 0 for k, _, _ in harm):
            raise ValueError("harmonic index must be nonnegative")
        k = np.array([h[0] for h in harm], dtype=int)
        a = np.array([h[1] for h in harm])
        b = np.array([h[2] for h in harm])
        c0 = float(b[k == 0].sum())
        w = 2.0 * math.pi / T

        P1_T = c0 * T
        pos = k > 0
        kp, ap, bp = k[pos], a[pos], b[pos]
        wk = w * kp
        # P2(T): c0*T^2/2 + sum a_k*(T - sin(wk T)/wk)/wk, cos terms vanish at T
        P2_T = c0 * T * T / 2.0 + float(np.sum(ap * T / wk))

        # sup|P1| at roots of p; sup|p| at roots of p'.
        cand_m = _trig_roots(T, k, a, b) + [0.0, T]
        cand_p = _trig_roots(T, kp, -bp * wk, ap * wk) + [0.0, T] if pos.any() else [0.0, T]
        f = cls(
            name=name, period=T, kind="trig",
            harmonics=tuple(harm),
            P1_T=P1_T, P2_T=P2_T, pbar=c0,
            zero_average=False,  # fixed below
        )
        M = max(abs(f.P1(t)) for t in cand_m)
        sup_p = max(abs(f.p(t)) for t in cand_p)
        object.__setattr__(f, "M", float(M))
        object.__setattr__(f, "sup_p", float(sup_p))
        object.__setattr__(f, "zero_average", abs(c0) <= AVG_TOL * max(1.0, sup_p))
        return f

    @classmethod
    def table(cls, name: str, T: float, values, order: int = 0) -> "PeriodicForcing":
        """Uniform samples on [0, T) with step (order 0) or linear (order 1) interpolation."""
        vals = [float(v) for v in values]
        if not vals:
            raise ValueError("table needs at least one sample")
        if order not in (0, 1):
            raise ValueError("interpolation order must be 0 or 1")
        h = T / len(vals)
        pieces = []
        for i, v in enumerate(vals):
            if order == 0:
                pieces.append((i * h, [v]))
            else:
                nxt = vals[(i + 1) % len(vals)]  # wrap so p stays continuous and T-periodic
                pieces.append((i * h, [v, (nxt - v) / h]))
        f = cls.piecewise(name, T, pieces)
        object.__setattr__(f, "kind", "table")
        return f

    # ---------------------------------------------------------------- evaluators

    def _reduce(self, t):
        """Split t into (k, tau) with t = k*T + tau, tau in [0, T)."""
        T = self.period
        k = np.floor(np.asarray(t, dtype=float) / T)
        tau = np.asarray(t, dtype=float) - k * T
        # guard against tau == T from rounding
        hit = tau >= T
        tau = np.where(hit, 0.0, tau)
        k = np.where(hit, k + 1, k)
        return k, tau

    def _piecewise_eval(self, tau, table):
        tau = np.asarray(tau, dtype=float)
        out = np.empty_like(tau)
        idx = np.searchsorted(self.breaks, tau, side="right") - 1
        for i in range(len(self.breaks)):
            m = idx == i
            if np.any(m):
                out[m] = np.polynomial.polynomial.polyval(
                    tau[m] - self.breaks[i], np.asarray(table[i]))
        return out

    def p(self, t):
        """Forcing value p(t), t anywhere on R (vectorized)."""
        if self.kind == "trig":
            t = np.asarray(t, dtype=float)
            w = 2.0 * math.pi / self.period
            out = np.zeros_like(t)
            for k, a, b in self.harmonics:
                out = out + a * np.sin(w * k * t) + b * np.cos(w * k * t)
            return out if out.ndim else float(out)
        _, tau = self._reduce(t)
        out = self._piecewise_eval(tau, self.seg_p)
        return out if out.ndim else float(out)

    def P1(self, t):
        """First primitive P1(t) = int_0^t p, for any real t (vectorized)."""
        if self.kind == "trig":
            t = np.asarray(t, dtype=float)
            w = 2.0 * math.pi / self.period
            out = np.zeros_like(t)
            for k, a, b in self.harmonics:
                if k == 0:
                    out = out + b * t
                else:
                    wk = w * k
                    out = out + a * (1.0 - np.cos(wk * t)) / wk + b * np.sin(wk * t) / wk
            return out if out.ndim else float(out)
        k, tau = self._reduce(t)
        out = self._piecewise_eval(tau, self.seg_P1) + k * self.P1_T
        return out if out.ndim else float(out)

    def P2(self, t):
        """Second primitive P2(t) = int_0^t P1, for any real t (vectorized)."""
        if self.kind == "trig":
            t = np.asarray(t, dtype=float)
            w = 2.0 * math.pi / self.period
            out = np.zeros_like(t)
            for k, a, b in self.harmonics:
                if k == 0:
                    out = out + b * t * t / 2.0
                else:
                    wk = w * k
                    out = (out + a * (t - np.sin(wk * t) / wk) / wk
                           + b * (1.0 - np.cos(wk * t)) / (wk * wk))
            return out if out.ndim else float(out)
        k, tau = self._reduce(t)
        out = (self._piecewise_eval(tau, self.seg_P2)
               + k * self.P1_T * tau
               + 0.5 * (k * k - k) * self.period * self.P1_T
               + k * self.P2_T)
        return out if out.ndim else float(out)

    # Fast scalar paths for the event loop (pure Python, no array overhead).

    def p_scalar(self, t: float) -> float:
        if self.kind == "trig":
            w = 2.0 * math.pi / self.period
            return sum(a * math.sin(w * k * t) + b * math.cos(w * k * t)
                       for k, a, b in self.harmonics)
        tau = t - math.floor(t / self.period) * self.period
        if tau >= self.period:
            tau = 0.0
        i = bisect.bisect_right(self.breaks, tau) - 1
        return _horner(self.seg_p[i], tau - self.breaks[i])

    def P1_scalar(self, t: float) -> float:
        if self.kind == "trig":
            return float(self.P1(t))
        k = math.floor(t / self.period)
        tau = t - k * self.period
        if tau >= self.period:
            tau, k = 0.0, k + 1
        i = bisect.bisect_right(self.breaks, tau) - 1
        return _horner(self.seg_P1[i], tau - self.breaks[i]) + k * self.P1_T

    def P2_scalar(self, t: float) -> float:
        if self.kind == "trig":
            return float(self.P2(t))
        k = math.floor(t / self.period)
        tau = t - k * self.period
        if tau >= self.period:
            tau, k = 0.0, k + 1
        i = bisect.bisect_right(self.breaks, tau) - 1
        return (_horner(self.seg_P2[i], tau - self.breaks[i])
                + k * self.P1_T * tau
                + 0.5 * (k * k - k) * self.period * self.P1_T
                + k * self.P2_T)

    # ---------------------------------------------------------------- misc

    def stats(self) -> tuple[float, float, float]:
        """(average, P2(T), sup|P1|)."""
        return self.pbar, self.P2_T, self.M

    @property
    def discontinuities(self) -> tuple:
        """Breakpoints in [0, T) where p may jump (empty for trig forcings)."""
        if self.kind == "trig":
            return ()
        return self.breaks


def _horner(coefs, x: float) -> float:
    acc = 0.0
    for c in reversed(coefs):
        acc = acc * x + c
    return acc


# -------------------------------------------------------------------- corpus helpers

def square_wave(T: float = 1.0, amplitude: float = 1.0, name: str = "square") -> PeriodicForcing:
    """p = +a on [0, T/2), -a on [T/2, T)."""
    return PeriodicForcing.piecewise(name, T, [(0.0, [amplitude]), (T / 2.0, [-amplitude])])


def sawtooth(T: float = 1.0, name: str = "sawtooth") -> PeriodicForcing:
    """Zero-average ramp p(t) = t - T/2 on [0, T)."""
    return PeriodicForcing.piecewise(name, T, [(0.0, [-T / 2.0, 1.0])])


def sinusoid(T: float = 1.0, amplitude: float = 1.0, name: str = "sine") -> PeriodicForcing:
    """p(t) = a sin(2 pi t / T)."""
    return PeriodicForcing.trig(name, T, [(1, amplitude, 0.0)])


# -------------------------------------------------------------------- config I/O

def forcing_from_config(cfg: dict) -> PeriodicForcing:
    """Build a forcing from {name, period, kind, payload}."""
    try:
        name = cfg.get("name", "forcing")
        T = float(cfg["period"])
        kind = cfg["kind"]
        payload = cfg["payload"]
    except KeyError as exc:
        raise ValueError(f"forcing config missing field {exc}") from exc
    if kind == "piecewise":
        return PeriodicForcing.piecewise(name, T, [(b, c) for b, c in payload])
    if kind == "trig":
        return PeriodicForcing.trig(name, T, [(k, a, b) for k, a, b in payload])
    if kind == "table":
        return PeriodicForcing.table(name, T, payload["values"], int(payload.get("order", 0)))
    raise ValueError(f"unknown forcing kind {kind!r}")


def load_forcing(path) -> PeriodicForcing:
    """Load a forcing config (JSON) from disk."""
    with open(path) as fh:
        return forcing_from_config(json.load(fh))
