import math

import numpy as np
import pytest

from ibb3.core import OperatingPoint, cm_offset_dpwm, dm_references, steady_duty
from ibb3 import control
from ibb3.control import (
    ControllerConfig,
    Pi,
    PiGains,
    Pll,
    RectifierController,
    cm_smoothing,
    inductor_current_reference,
)

TWO_PI_3 = 2.0 * math.pi / 3.0


def balanced(theta, amp, cm=0.0):
    return amp * np.cos(theta - np.array([0.0, TWO_PI_3, 2 * TWO_PI_3])) + cm


class TestPll:
    def run_pll(self, f_grid, periods=5, f_ctrl=140e3, f_nom=None, pll=None):
        pll = pll or Pll(f_nom or f_grid, bandwidth=80.0)
        dt = 1.0 / f_ctrl
        n = int(periods / f_grid * f_ctrl)
        theta = omega = 0.0
        for j in range(n):
            t = j * dt
            th_true = 2 * math.pi * f_grid * t
            v = balanced(th_true, 162.6, cm=-180.0)  # CM offset must not matter
            theta, omega = pll.step(v, dt)
        err = (theta - (2 * math.pi * f_grid * n * dt)) % (2 * math.pi)
        if err > math.pi:
            err -= 2 * math.pi
        return math.degrees(err), omega, pll

    @pytest.mark.parametrize("f", [360.0, 800.0])
    def test_locks_within_five_periods(self, f):
        err, omega, _ = self.run_pll(f)
        assert abs(err) < 0.1
        assert omega == pytest.approx(2 * math.pi * f, rel=1e-3)

    def test_frequency_step_relocks(self):
        _, _, pll = self.run_pll(360.0, periods=5)
        err, omega, _ = self.run_pll(800.0, periods=40, pll=pll)
        assert abs(err) < 1.0
        assert omega == pytest.approx(2 * math.pi * 800.0, rel=1e-2)

    def test_zero_input_freewheels(self):
        pll = Pll(360.0)
        dt = 1.0 / 140e3
        th1, om1 = pll.step(np.zeros(3), dt)
        th2, om2 = pll.step(np.zeros(3), dt)
        assert om1 == om2 == pytest.approx(2 * math.pi * 360.0)
        assert th2 == pytest.approx((th1 + om1 * dt) % (2 * math.pi))


class TestPiAntiWindup:
    def test_recovery_without_excess_overshoot(self):
        dt = 1e-4
        ref_step = 1.0

        def run(saturate_first):
            pi = Pi(PiGains(kp=1.0, ki=200.0, lo=-2.0, hi=2.0))
            out = []
            if saturate_first:
                for _ in range(1000):
                    pi.step(10.0, dt)   # hard saturation episode
            for j in range(400):
                out.append(pi.step(ref_step - (0 if j < 2 else out[-1] / 2), dt))
            return np.array(out)

        clean = run(False)
        recovered = run(True)
        assert recovered.max() <= 2.0 * max(clean.max(), 1e-9)

    def test_integrator_frozen_at_limit(self):
        pi = Pi(PiGains(kp=1.0, ki=100.0, lo=-1.0, hi=1.0))
        for _ in range(100):
            pi.step(10.0, 1e-3)
        assert pi.integ <= 1.0 + 1e-9


class TestCmSmoothing:
    def test_far_from_boundary_equals_plain(self):
        dm = np.array([100.0, -40.0, -60.0])
        sm = cm_smoothing(dm, v_var=10.0)
        plain = cm_offset_dpwm(dm)
        assert sm.cm == pytest.approx(plain.cm)
        assert np.allclose(sm.total, plain.total)
        assert not sm.window_active
        assert len(sm.active_set) == 2

    def test_boundary_window_active(self):
        dm = np.array([50.0, 48.0, -98.0])
        sm = cm_smoothing(dm, v_var=10.0)
        assert sm.window_active
        assert sm.active_set == (0, 1, 2)
        assert np.all(sm.total < 0.0)   # all three phases driven

    def test_continuity_and_c1(self):
        v_hat, v_var = 100.0, 10.0
        theta = np.linspace(0.4, 0.8, 20001)  # spans a sector boundary
        cm = np.array([cm_smoothing(dm_references(th, v_hat), v_var).cm
                       for th in theta])
        dcm = np.diff(cm)
        # bounded first difference (continuous) and bounded second
        # difference (once differentiable; the plain corner would jump)
        assert np.max(np.abs(dcm)) < 2.5 * v_hat * (theta[1] - theta[0])
        assert np.max(np.abs(np.diff(dcm))) < 60.0 * v_hat * (theta[1] - theta[0]) ** 2

    def test_never_rises_above_plain_max(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            dm = rng.uniform(-100, 100, 3)
            sm = cm_smoothing(dm, v_var=15.0)
            assert sm.cm <= -dm.max() + 1e-12
            assert np.all(sm.total <= 1e-12)


class TestInductorReference:
    def test_spot_value(self):
        # 1 A of switch-current demand doubled by the voltage ratio
        assert inductor_current_reference(1.0, 0.0, 270.0, 270.0) == \
            pytest.approx(2.0)

    def test_matches_duty_identity(self):
        # i_L (1 - d) = i_T with d from the measured point
        i_t = 1.7
        x, v_dc = 210.0, 270.0
        i_l = inductor_current_reference(i_t, 0.0, x, v_dc)
        d = steady_duty(v_dc, x)
        assert i_l * (1.0 - d) == pytest.approx(i_t, rel=1e-12)


class TestRectifierStep:
    def test_zero_error_gives_feedforward_duties(self, op_rect, params_rect):
        ctl = RectifierController(op_rect, params_rect)
        ctl.cfg.smoothing.enabled = False
        theta = 0.9  # inside a sector, away from boundaries
        dm = balanced(theta, op_rect.v_ac_hat)
        refs = cm_offset_dpwm(dm)
        i_ph = balanced(theta, op_rect.i_ac_hat)
        i_l = i_ph * (1.0 - refs.total / op_rect.v_dc)
        # ripple-valley sampling compensation expects the average minus
        # half the analytic ripple
        for k in range(3):
            x = -refs.total[k]
            i_l[k] -= 0.5 * op_rect.v_dc * x / (params_rect.l_bb * op_rect.f_s
                                                * (op_rect.v_dc + x))
        meas = {"v_dc": op_rect.v_dc, "v_c_abc": refs.total,
                "i_grid_abc": i_ph, "i_l_abc": i_l,
                "i_load_dc": op_rect.p_out / op_rect.v_dc}
        ctl.pll.state.theta = theta
        ctl.pll.state.seeded = True
        ctl._last_duty = np.ones(3)
        duties, info = ctl.step(meas, 1.0 / op_rect.f_s)
        expected = np.array([steady_duty(op_rect.v_dc, -refs.total[k])
                             for k in range(3)])
        expected[refs.clamped] = 0.0
        assert np.allclose(duties, expected, atol=0.02)
        assert duties[refs.clamped] == 0.0

    def test_clamped_duty_exactly_zero_outside_windows(self, op_rect, params_rect):
        ctl = RectifierController(op_rect, params_rect)
        theta = 0.2  # phase a firmly the maximum
        dm = balanced(theta, op_rect.v_ac_hat)
        refs = cm_offset_dpwm(dm)
        meas = {"v_dc": 270.0, "v_c_abc": refs.total,
                "i_grid_abc": balanced(theta, 2.46), "i_l_abc": np.zeros(3),
                "i_load_dc": 2.22}
        duties, info = ctl.step(meas, 1.0 / op_rect.f_s)
        assert info["clamped_phase"] == 0
        assert duties[0] == 0.0

    def test_bandwidth_ordering(self, op_rect, params_rect):
        cfg = ControllerConfig.from_plant(op_rect, params_rect)
        b = cfg.bandwidths()
        assert b[0] > b[1] > b[2] > b[3]
        for hi, lo in zip(b, b[1:]):
            assert hi / lo >= 4.0 - 1e-9

    def test_ratio_below_four_rejected(self, op_rect, params_rect):
        with pytest.raises(Exception):
            ControllerConfig.from_plant(op_rect, params_rect, ratio=2.0)

    def test_eq_identity_in_controller_outputs(self, op_rect, params_rect):
        ctl = RectifierController(op_rect, params_rect)
        theta = 0.9
        dm = balanced(theta, op_rect.v_ac_hat)
        refs = cm_offset_dpwm(dm)
        meas = {"v_dc": 270.0, "v_c_abc": refs.total,
                "i_grid_abc": balanced(theta, op_rect.i_ac_hat),
                "i_l_abc": np.zeros(3), "i_load_dc": 2.22}
        _, info = ctl.step(meas, 1.0 / op_rect.f_s)
        for k in range(3):
            if k == info["clamped_phase"]:
                continue
            d_exp = steady_duty(270.0, -refs.total[k])
            assert info["i_l_refs"][k] * (1.0 - d_exp) == pytest.approx(
                info["i_t_refs"][k], rel=1e-9, abs=1e-9)
