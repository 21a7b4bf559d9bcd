import math

import numpy as np
import pytest

from ibb3.core import OperatingPoint
from ibb3.modulation import (
    Scheme,
    TransitionKind,
    classify_transitions,
    profile_kpis,
    scheme_i_o,
    synthesize,
)


def triangle_rms_oracle(valley, peak, duty, n=1000):
    """Numeric rms of a two-slope triangle cycle."""
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    rise = t < duty
    x = np.where(rise, valley + (peak - valley) * t / duty,
                 peak - (peak - valley) * (t - duty) / (1.0 - duty))
    return math.sqrt(float(np.mean(x * x)))


class TestPerCycleRms:
    def test_closed_form_matches_reconstruction(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            v = rng.uniform(-20, 10)
            p = v + rng.uniform(0.1, 25)
            d = rng.uniform(0.05, 0.95)
            closed = math.sqrt((p * p + p * v + v * v) / 3.0)
            numeric = triangle_rms_oracle(v, p, d, n=1000)
            assert closed == pytest.approx(numeric, rel=1e-3)


class TestSynthesis:
    def test_dpwm_clamp_fraction(self, scheme_kpis, op_rect):
        prof, _ = scheme_kpis[Scheme.DPWM]
        frac = prof.clamp_mask.mean(axis=1)
        assert np.allclose(frac, 1.0 / 3.0, atol=op_rect.f_o / op_rect.f_s)

    def test_dpwm_phase_a_silent_one_third(self, scheme_kpis):
        prof, _ = scheme_kpis[Scheme.DPWM]
        zero_frac = np.mean(prof.f_s_inst[0] == 0.0)
        assert abs(zero_frac - 1.0 / 3.0) < 0.03

    def test_pwm_constant_frequency(self, scheme_kpis, op_rect):
        prof, k = scheme_kpis[Scheme.PWM]
        assert np.all(prof.f_s_inst == op_rect.f_s)
        assert k.f_sw_min == k.f_sw_max == pytest.approx(op_rect.f_s)

    def test_duty_range(self, scheme_kpis):
        for prof, _ in scheme_kpis.values():
            assert prof.duty.min() >= 0.0
            assert prof.duty.max() <= 1.0

    def test_bcm_respects_cap(self, scheme_kpis, op_rect):
        prof, k = scheme_kpis[Scheme.BCM]
        freqs = np.array([1.0 / c.period for c in prof.cycles])
        assert freqs.max() <= op_rect.f_s_max * (1 + 1e-12)
        assert k.f_sw_max == pytest.approx(op_rect.f_s_max)

    def test_bcm_valley_reversal(self, scheme_kpis):
        # every non-capped cycle reverses past the ZVS threshold on the
        # side opposing its average
        prof, _ = scheme_kpis[Scheme.BCM]
        io = prof.i_o
        for c in prof.cycles:
            if c.capped or c.clipped:
                continue
            if c.i_avg >= 0:
                assert c.i_avg - c.di_pkpk / 2 <= -io + 1e-9
            else:
                assert c.i_avg + c.di_pkpk / 2 >= io - 1e-9

    def test_pwm_needs_no_fsmax(self, op_rect, params_rect):
        prof = synthesize(Scheme.PWM, op_rect, params_rect)
        assert prof.events


class TestClassification:
    def test_dpwm_bcm_never_hard(self, scheme_kpis):
        for s in (Scheme.DPWM, Scheme.BCM):
            _, k = scheme_kpis[s]
            assert k.n_hard == 0
            assert k.v_hs_max is None and k.i_hs_avg is None

    def test_pwm_hard_exists(self, scheme_kpis):
        _, k = scheme_kpis[Scheme.PWM]
        assert k.n_hard > 0
        assert k.v_hs_avg == pytest.approx(299.1, rel=0.10)
        assert k.i_hs_max == pytest.approx(1.9, rel=0.25)

    def test_zero_threshold_no_partials(self, op_rect, params_rect):
        prof = synthesize(Scheme.DPWM, op_rect, params_rect)
        classify_transitions(prof, i_o=0.0)
        kinds = {e.kind for e in prof.events}
        assert TransitionKind.PARTIAL not in kinds


class TestKpis:
    def test_rms_values_and_ordering(self, scheme_kpis):
        pwm = scheme_kpis[Scheme.PWM][1]
        dpwm = scheme_kpis[Scheme.DPWM][1]
        bcm = scheme_kpis[Scheme.BCM][1]
        assert pwm.i_l_rms == pytest.approx(4.3, rel=0.15)
        assert dpwm.i_l_rms == pytest.approx(3.8, rel=0.15)
        assert bcm.i_l_rms == pytest.approx(3.5, rel=0.15)
        assert pwm.i_l_rms > dpwm.i_l_rms > bcm.i_l_rms

    def test_dpwm_frequency_stats(self, scheme_kpis):
        _, k = scheme_kpis[Scheme.DPWM]
        assert k.f_sw_min == 0.0
        assert k.f_sw_avg == pytest.approx(91e3, rel=0.10)

    def test_bcm_frequency_stats(self, scheme_kpis):
        _, k = scheme_kpis[Scheme.BCM]
        assert k.f_sw_max == pytest.approx(300e3, rel=1e-12)
        assert k.f_sw_min == pytest.approx(37e3, rel=0.20)

    def test_dpwm_blocking_voltage(self, scheme_kpis, op_rect):
        _, k = scheme_kpis[Scheme.DPWM]
        expected = op_rect.v_dc + math.sqrt(3.0) * op_rect.v_ac_hat
        assert k.v_ss_max == pytest.approx(551.6, rel=0.01)
        assert k.v_ss_max == pytest.approx(expected, rel=5e-3)

    def test_max_at_least_avg(self, scheme_kpis):
        for _, k in scheme_kpis.values():
            assert k.f_sw_max >= k.f_sw_avg >= k.f_sw_min
            assert k.v_ss_max >= k.v_ss_avg
            assert k.i_ss_max >= k.i_ss_avg
            if k.n_hard:
                assert k.v_hs_max >= k.v_hs_avg
                assert k.i_hs_max >= k.i_hs_avg

    def test_i_l_max_values(self, scheme_kpis):
        assert scheme_kpis[Scheme.PWM][1].i_l_max == pytest.approx(12.7, rel=0.05)
        assert scheme_kpis[Scheme.DPWM][1].i_l_max == pytest.approx(11.2, rel=0.05)
        assert scheme_kpis[Scheme.BCM][1].i_l_max == pytest.approx(11.3, rel=0.08)

    def test_smaller_inductance_raises_peak(self, op_rect, params_rect):
        from dataclasses import replace
        small = replace(params_rect, l_bb=40e-6)
        prof_small = synthesize(Scheme.DPWM, op_rect, small)
        classify_transitions(prof_small)
        prof_big = synthesize(Scheme.DPWM, op_rect, params_rect)
        classify_transitions(prof_big)
        assert profile_kpis(prof_small).i_l_max > profile_kpis(prof_big).i_l_max


class TestExports:
    def test_csv_round_trip(self, scheme_kpis, tmp_path):
        prof, _ = scheme_kpis[Scheme.DPWM]
        p1 = tmp_path / "series.csv"
        p2 = tmp_path / "events.csv"
        prof.export_series_csv(p1)
        prof.export_transitions_csv(p2)
        head = p1.read_text().splitlines()[0]
        assert head == "t_s,phase,duty,f_s,v_c,i_l_avg,i_l_ripple"
        head2 = p2.read_text().splitlines()[0]
        assert head2 == "t_s,phase,v_block_V,i_switched_A,kind"
        assert len(p2.read_text().splitlines()) == len(prof.events) + 1


class TestSchemeIo:
    def test_threshold_uses_worst_voltage(self, op_rect, params_rect):
        io_dpwm = scheme_i_o(Scheme.DPWM, op_rect, params_rect)
        io_pwm = scheme_i_o(Scheme.PWM, op_rect, params_rect)
        assert io_pwm > io_dpwm > 0
