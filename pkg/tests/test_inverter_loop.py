import numpy as np
import pytest
from dataclasses import replace

from ibb3 import control
from ibb3.core import DomainError, OperatingPoint
from ibb3.modulation import Scheme, synthesize
from ibb3.simulate import Circuit, run, steady_seed, trace_kpis


@pytest.fixture(scope="module")
def nominal_trace(op_inv, params_inv):
    cir = Circuit(mode="inverter", op=op_inv, params=params_inv)
    ctl = control.InverterController(op_inv, params_inv)
    drv = control.InverterDriver(ctl, op_inv.f_s)
    return run(cir, drv, horizon=12.0 / op_inv.f_o,
               initial_state=steady_seed(cir)), cir


class TestInverterNominal:
    def test_sinusoidal_output(self, nominal_trace, op_inv):
        trace, _ = nominal_trace
        kpis = trace_kpis(trace, window=3)
        assert kpis.thd_i < 0.05          # DM voltage distortion

    def test_amplitude_tracked(self, nominal_trace, op_inv):
        trace, _ = nominal_trace
        sel = trace.t > trace.t[-1] - 2.0 / op_inv.f_o
        vs = [trace.col(c)[sel] for c in ("vC_a_V", "vC_b_V", "vC_c_V")]
        dm = vs[0] - (vs[0] + vs[1] + vs[2]) / 3.0
        amp = 0.5 * (dm.max() - dm.min())
        assert amp == pytest.approx(op_inv.v_ac_hat, rel=0.05)

    def test_power_delivered(self, nominal_trace, op_inv):
        trace, _ = nominal_trace
        kpis = trace_kpis(trace, window=3)
        assert kpis.p_out == pytest.approx(op_inv.p_out, rel=0.10)


class TestAmplitudeStep:
    def test_step_settles_within_ten_periods(self, op_inv, params_inv):
        op = replace(op_inv, v_dc=240.0)
        cir = Circuit(mode="inverter", op=op, params=params_inv)
        ctl = control.InverterController(op, params_inv, v_hat_ref=40.0)

        class StepDriver:
            def __init__(self):
                self.inner = control.InverterDriver(ctl, op.f_s)

            def step(self, t, meas):
                if t > 5.0 / op.f_o:
                    ctl.set_amplitude(80.0)
                return self.inner.step(t, meas)

        trace = run(cir, StepDriver(), horizon=16.0 / op.f_o,
                    initial_state=steady_seed(cir))
        assert np.all(np.isfinite(trace.data))
        sel = trace.t > trace.t[-1] - 1.0 / op.f_o
        vs = [trace.col(c)[sel] for c in ("vC_a_V", "vC_b_V", "vC_c_V")]
        dm = vs[0] - (vs[0] + vs[1] + vs[2]) / 3.0
        amp = 0.5 * (dm.max() - dm.min())
        assert amp == pytest.approx(80.0, rel=0.05)


class TestBcmClipFlag:
    def test_infeasible_period_clipped_and_flagged(self, op_rect, params_rect):
        # a huge inductance pushes the required frequency below 20 f_o
        slow = replace(params_rect, l_bb=3e-3)
        prof = synthesize(Scheme.BCM, op_rect, slow)
        assert prof.bcm_clipped
        clipped = [c for c in prof.cycles if c.clipped]
        assert clipped
        floor = 20.0 * op_rect.f_o
        for c in clipped:
            assert 1.0 / c.period == pytest.approx(floor, rel=1e-9)

    def test_bcm_without_cap_rejected(self, params_rect):
        op = OperatingPoint(v_dc=270.0, v_ac_hat=160.0, p_out=600.0,
                            f_o=360.0, f_s=140e3)
        with pytest.raises(DomainError):
            synthesize(Scheme.BCM, op, params_rect)


class TestTraceDeterminism:
    def test_byte_identical_runs(self, tmp_path, op_inv, params_inv):
        paths = []
        for name in ("a", "b"):
            cir = Circuit(mode="inverter", op=op_inv, params=params_inv)
            ctl = control.InverterController(op_inv, params_inv)
            drv = control.InverterDriver(ctl, op_inv.f_s)
            tr = run(cir, drv, horizon=3.0 / op_inv.f_o,
                     initial_state=steady_seed(cir))
            tr.meta.pop("final_state", None)
            p = tmp_path / f"{name}.csv"
            tr.to_csv(p)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()
