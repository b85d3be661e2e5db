import math

import numpy as np
import pytest

from signosc.forcing import PeriodicForcing, square_wave, sinusoid
from signosc.flow import State, evolve, DegenerateCrossing
from signosc.oracle import OracleConfig, rk_evolve, scan_conditions, quad_primitives


class TestConfig:
    def test_defaults(self):
        cfg = OracleConfig()
        assert cfg.rk_step == 1e-3
        assert cfg.quadrature_rule == "simpson"

    def test_validation(self):
        with pytest.raises(ValueError):
            OracleConfig(rk_step=0.0)
        with pytest.raises(ValueError):
            OracleConfig(quadrature_rule="gauss")


class TestRkEvolve:
    def test_free_crossing_and_final_state(self):
        z = PeriodicForcing.zero()
        rows = rk_evolve(z, State(0.0, 0.0, 1.0), 4.0, OracleConfig(rk_step=1e-3))
        # crossing near t = 2 with y = -1, closed orbit at t = 4
        ev = rows[np.argmin(np.abs(rows[:, 0] - 2.0))]
        assert ev[2] == pytest.approx(0.0, abs=1e-8)
        assert ev[3] == pytest.approx(-1.0, abs=1e-8)
        assert rows[-1][2] == pytest.approx(0.0, abs=1e-8)
        assert rows[-1][3] == pytest.approx(1.0, abs=1e-8)

    def test_step_halving_scales_like_h4(self):
        sn = sinusoid()
        s0 = State(0.0, 0.2, 0.1)
        ref = evolve(sn, s0, 3.0).final_state
        errs = []
        for h in (4e-3, 2e-3, 1e-3):
            rows = rk_evolve(sn, s0, 3.0, OracleConfig(rk_step=h))
            errs.append(abs(rows[-1][2] - ref.x) + abs(rows[-1][3] - ref.y))
        # event bisection limits the clean h^4 picture a little; demand
        # at least an 8x reduction per halving
        assert errs[0] / errs[1] > 8.0
        assert errs[1] / errs[2] > 8.0

    def test_matches_closed_form_across_corpus(self, corpus_forcings):
        for f in corpus_forcings:
            s0 = State(0.0, 0.3, -0.2)
            tr = evolve(f, s0, 10.0)
            rows = rk_evolve(f, s0, 10.0, OracleConfig(rk_step=1 / 2000))
            worst = 0.0
            for t, phi, x, y in rows[::17]:
                s = tr.eval(min(t, 10.0))
                worst = max(worst, abs(s.x - x), abs(s.y - y))
            assert worst < 1e-6, f.name

    def test_degenerate_start(self):
        with pytest.raises(DegenerateCrossing):
            rk_evolve(PeriodicForcing.zero(), State(0.0, 0.0, 0.0), 1.0)

    def test_rows_monotone_in_time(self):
        rows = rk_evolve(square_wave(), State(0.0, 0.4, 0.0), 5.0)
        assert np.all(np.diff(rows[:, 0]) >= 0.0)
        assert np.max(np.abs(rows[:, 1] - rows[:, 0])) < 1e-12  # phi0 = 0


class TestScanConditions:
    def test_zero_forcing_margins(self):
        sc = scan_conditions(PeriodicForcing.zero(), 1, (100, 100))
        assert sc["cond1_margin"] == pytest.approx(0.5, abs=1e-12)
        assert not sc["violation"]
        # h_n attains its interior-grid minimum next to the endpoints
        assert sc["cond2_margin"] > 0.0

    def test_matches_rigorous_margins_for_square(self):
        from signosc.certify import check_cond1
        sc = scan_conditions(square_wave(), 1, (2000, 2000))
        c1 = check_cond1(square_wave(), 1)
        # the scan reports a slightly larger margin: no inflation
        assert sc["cond1_margin"] >= c1.margin
        assert sc["cond1_margin"] == pytest.approx(0.25, abs=1e-6)

    def test_violation_with_witness(self):
        big = PeriodicForcing.trig("big", 1.0, [(1, 10.0, 0.0)])
        sc = scan_conditions(big, 1, (500, 500))
        assert sc["violation"]
        phi0, t = sc["cond2_witness_phi0"], sc["cond2_witness_t"]
        h = 0.5 * t * (1.0 - t)
        fval = t * big.P2_T + big.P2(phi0) - big.P2(t + phi0)
        assert abs(fval) - h == pytest.approx(-sc["cond2_margin"], abs=1e-12)


class TestQuadPrimitives:
    def test_square_wave_hand_values(self):
        p1, p2 = quad_primitives(square_wave(), 0.25)
        assert p1 == pytest.approx(0.25, abs=1e-10)
        assert p2 == pytest.approx(0.25 ** 2 / 2.0, abs=1e-10)
        p1, p2 = quad_primitives(square_wave(), 1.0)
        assert p1 == pytest.approx(0.0, abs=1e-10)
        assert p2 == pytest.approx(0.25, abs=1e-10)

    def test_matches_closed_form_across_corpus(self, corpus_forcings, rng):
        for f in corpus_forcings:
            for t in rng.uniform(-2.0, 3.0, 6):
                p1, p2 = quad_primitives(f, float(t), panels_per_piece=256)
                assert p1 == pytest.approx(float(f.P1(t)), abs=5e-8)
                assert p2 == pytest.approx(float(f.P2(t)), abs=5e-8)

    def test_midpoint_rule_agrees_more_coarsely(self):
        sn = sinusoid()
        cfg = OracleConfig(quadrature_rule="midpoint")
        p1, p2 = quad_primitives(sn, 0.8, cfg, panels_per_piece=512)
        assert p1 == pytest.approx(float(sn.P1(0.8)), abs=1e-6)
        assert p2 == pytest.approx(float(sn.P2(0.8)), abs=1e-6)

    def test_negative_argument_sign_convention(self):
        sq = square_wave()
        p1, p2 = quad_primitives(sq, -0.75)
        assert p1 == pytest.approx(float(sq.P1(-0.75)), abs=1e-10)
        assert p2 == pytest.approx(float(sq.P2(-0.75)), abs=1e-10)
