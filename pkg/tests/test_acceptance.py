"""Acceptance gate: eight property-based criteria at fixed tolerances.

Each test prints one `[PASS]`/`[FAIL]` line (visible with `pytest -s` or in
captured output on failure) and asserts the criterion at its stated
tolerance and runtime budget.
"""

import sys
import time

import numpy as np
import pytest

from signosc.forcing import PeriodicForcing, square_wave, sinusoid
from signosc.flow import State, evolve
from signosc.torus import (
    TorusSpec, y_boundary, chart_height, closure_check, contains_many,
    nesting_check,
)
from signosc.certify import (
    certify_torus, linf_certificate, verify_invariance, InconclusiveError,
)
from signosc.oracle import rk_evolve, scan_conditions, OracleConfig

from conftest import corpus

SEED = 20240817


def report(num, ok, detail, elapsed, budget):
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] criterion {num}: {detail} ({elapsed:.2f}s / budget {budget:.0f}s)",
          file=sys.stderr)


def test_criterion_1_primitive_shift_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for f in corpus():
        T = f.period
        t = rng.uniform(-3 * T, 3 * T, 200)
        k = rng.integers(-5, 6, 200)
        r1 = f.P1(t) + k * f.P1_T
        r2 = (f.P2(t) + k * f.P1_T * t
              + (k * k - k) / 2.0 * T * f.P1_T + k * f.P2_T)
        d1 = np.max(np.abs(f.P1(t + k * T) - r1) / np.maximum(1.0, np.abs(r1)))
        d2 = np.max(np.abs(f.P2(t + k * T) - r2) / np.maximum(1.0, np.abs(r2)))
        worst = max(worst, float(d1), float(d2))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    report(1, ok, f"shift identity max relative defect {worst:.3e}", elapsed, 1)
    assert worst <= 1e-10
    assert elapsed < 1.0


def test_criterion_2_chart_closure():
    t0 = time.perf_counter()
    worst = 0.0
    for f in corpus():
        for n in range(1, 9):
            worst = max(worst, closure_check(TorusSpec(n, f), n_y=256))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 5.0
    report(2, ok, f"closure max defect {worst:.3e} over n=1..8", elapsed, 5)
    assert worst <= 1e-10
    assert elapsed < 5.0


def test_criterion_3_boundary_curve_relations():
    t0 = time.perf_counter()
    violations = 0
    worst = 0.0
    for f in corpus():
        for n in (1, 2, 3):
            assert certify_torus(f, n).certified
            rep = verify_invariance(f, n, n_phi=64)
            violations += rep.rel1_violations
            worst = max(worst, rep.rel2_max_defect, rep.return_max_defect)
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and worst <= 1e-8 and elapsed < 30.0
    report(3, ok,
           f"{violations} interior crossings, landing/return defect {worst:.3e}",
           elapsed, 30)
    assert violations == 0
    assert worst <= 1e-8
    assert elapsed < 30.0


def test_criterion_4_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for f in corpus():
        T = f.period
        cfg = OracleConfig(rk_step=T / 2000)
        for _ in range(20):
            s0 = State(float(rng.uniform(0, T)),
                       float(rng.uniform(0.05, 1.0)) * (1 if rng.random() < 0.5 else -1),
                       float(rng.uniform(-1.0, 1.0)))
            tr = evolve(f, s0, 10 * T)
            rows = rk_evolve(f, s0, 10 * T, cfg)
            for t, phi, x, y in rows[::23]:
                s = tr.eval(min(t, 10 * T))
                worst = max(worst, abs(s.x - x), abs(s.y - y))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 60.0
    report(4, ok, f"flow vs RK4 sup deviation {worst:.3e} over 100 orbits",
           elapsed, 60)
    assert worst <= 1e-6
    assert elapsed < 60.0


def test_criterion_5_certification_soundness():
    t0 = time.perf_counter()
    checked = 0
    for f in corpus():
        for n in range(1, 9):
            try:
                certified = certify_torus(f, n).certified
            except InconclusiveError:
                continue
            scan = scan_conditions(f, n, (2000, 2000))
            if certified:
                assert not scan["violation"], (f.name, n)
            if scan["violation"]:
                assert not certified, (f.name, n)
            checked += 1
    elapsed = time.perf_counter() - t0
    ok = elapsed < 300.0
    report(5, ok, f"{checked} (forcing, n) pairs scan-consistent", elapsed, 300)
    assert checked == 40
    assert elapsed < 300.0


def test_criterion_6_sup_norm_threshold():
    t0 = time.perf_counter()
    bad = []
    for f in (square_wave(), sinusoid()):
        assert linf_certificate(f, 1.01) == 2
        for n in range(2, 11):
            if not certify_torus(f, n).certified:
                bad.append((f.name, n))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60.0
    report(6, ok, f"all n in 2..10 certified for sup|p| = 1 forcings "
                  f"(failures: {bad})", elapsed, 60)
    assert not bad
    assert elapsed < 60.0


def test_criterion_7_nesting_and_coverage():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    uncovered = 0
    for f in corpus():
        for n in range(1, 8):
            assert nesting_check(TorusSpec(n, f), TorusSpec(n + 1, f)), (f.name, n)
        T = f.period
        phi = rng.uniform(0.0, T, 100)
        x = rng.uniform(-3.0, 3.0, 100)
        y = rng.uniform(-3.0, 3.0, 100)
        covered = np.zeros(100, dtype=bool)
        for n in range(1, 65):
            spec = TorusSpec(n, f)
            covered |= contains_many(spec, phi, x, y) >= 0
            if covered.all():
                break
        uncovered += int((~covered).sum())
    elapsed = time.perf_counter() - t0
    ok = uncovered == 0
    report(7, ok, f"tori nested for n=1..8; {uncovered}/500 states uncovered",
           elapsed, 300)
    assert uncovered == 0


def test_criterion_8_boundedness_experiment():
    t0 = time.perf_counter()
    f = square_wave()
    T = f.period
    periods = 10_000
    rng = np.random.default_rng(SEED)

    # part 1: random interior starts never exit the smallest enclosing
    # certified torus
    exits = 0
    interior_growth = 0.0
    for _ in range(10):
        s0 = State(float(rng.uniform(0, T)),
                   float(rng.uniform(0.1, 1.5)), float(rng.uniform(-1.5, 1.5)))
        n_enc = None
        for n in range(1, 65):
            if contains_many(TorusSpec(n, f), [s0.phi], [s0.x], [s0.y])[0] >= 0 \
                    and certify_torus(f, n).certified:
                n_enc = n
                break
        assert n_enc is not None
        tr = evolve(f, s0, periods * T)
        rows = tr.sample(T / 8.0)
        cls = contains_many(TorusSpec(n_enc, f), rows[:, 1], rows[:, 2], rows[:, 3])
        exits += int((cls < 0).sum())
        # informational: running-sup creep for starts that are not on a torus
        g = np.abs(rows[:, 2]) + np.abs(rows[:, 3])
        run = np.maximum.accumulate(g)
        first = np.searchsorted(rows[:, 0], 2.0 * n_enc * T)
        interior_growth = max(interior_growth, float(run[-1] - run[min(first, len(run) - 1)]))

    # part 2: the sup is non-increasing with run length for orbits on a
    # certified torus (they are exactly 2nT-periodic)
    surface_growth = 0.0
    for n, phi0, u in ((1, 0.0, 0.3), (2, 0.4, -0.25), (3, 0.7, 0.45)):
        spec = TorusSpec(n, f)
        # the y-band at phi0 is centered on the midpoint of the boundary
        # curves, not on 0
        mid = 0.5 * (y_boundary(spec, -1, phi0) + y_boundary(spec, +1, phi0))
        y0 = float(mid) + u * n * T  # inside the band (|u| < 1/2)
        s0 = State(phi0, float(chart_height(spec, +1, phi0, y0)), y0)
        tr = evolve(f, s0, periods * T)
        # a fixed global grid; segment-relative sampling would alias
        # against the orbit phase and fake a growth signal
        ts = np.arange(0.0, periods * T, T / 8.0)
        g = np.empty(len(ts))
        for i, t in enumerate(ts):
            s = tr.eval(float(t))
            g[i] = abs(s.x) + abs(s.y)
        run = np.maximum.accumulate(g)
        window = 2.0 * n * T
        checkpoints = np.arange(window, periods * T + window / 2.0, window)
        idx = np.clip(np.searchsorted(ts, checkpoints, side="right") - 1,
                      0, len(run) - 1)
        sups = run[idx]
        surface_growth = max(surface_growth, float(np.max(np.diff(sups), initial=0.0)))
    elapsed = time.perf_counter() - t0
    ok = exits == 0 and surface_growth <= 1e-9 and elapsed < 300.0
    report(8, ok,
           f"0 exits required (got {exits}); torus-orbit sup growth "
           f"{surface_growth:.2e}; interior-start creep {interior_growth:.2e} "
           f"(informational)", elapsed, 300)
    assert exits == 0
    assert surface_growth <= 1e-9
    assert elapsed < 300.0
