import math

import numpy as np
import pytest
from dataclasses import replace

from ibb3.core import ConverterParams, DomainError, OperatingPoint, steady_duty
from ibb3.simulate import (
    Circuit,
    ConstantDutyDriver,
    SimulationDiverged,
    energy_audit_closure,
    run,
    steady_seed,
    thd,
    trace_kpis,
)


def dcdc_circuit(v_dc=100.0, r_load=50.0, r_on=0.0, esr=0.01, c_ac=10e-6):
    op = OperatingPoint(v_dc=v_dc, v_ac_hat=v_dc, p_out=max(v_dc, 1.0),
                        f_o=1000.0, f_s=140e3)
    params = ConverterParams(l_bb=75e-6, c_ac=c_ac, c_dc=10e-6,
                             r_ds_on=r_on, n_par=1, dead_time=0.0)
    return Circuit(mode="dc-dc-phase", op=op, params=params,
                   r_ac_dcdc=r_load, esr_c_ac=esr, ac_diodes=False)


def settled_vc_ratio(circuit, duty, horizon=25e-3, dt=None):
    drv = ConstantDutyDriver(np.array([duty, 0.0, 0.0]))
    tr = run(circuit, drv, horizon=horizon, dt=dt)
    vc = tr.col("vC_a_V")
    sel = tr.t > tr.t[-1] - 5e-3
    return -float(np.mean(vc[sel])) / circuit.op.v_dc, tr


class TestDcDcFixedPoint:
    def test_half_duty_reaches_input_voltage(self):
        ratio, _ = settled_vc_ratio(dcdc_circuit(), 0.5)
        assert ratio == pytest.approx(1.0, rel=0.01)

    @pytest.mark.parametrize("duty", [0.25, 0.4, 0.5, 0.6, 0.7])
    def test_volt_second_relation(self, duty):
        ratio, _ = settled_vc_ratio(dcdc_circuit(), duty)
        assert ratio == pytest.approx(duty / (1.0 - duty), rel=0.01)

    def test_lossless_conservation(self):
        cir = dcdc_circuit(r_on=0.0, esr=0.0)
        drv = ConstantDutyDriver(np.array([0.5, 0.0, 0.0]))
        tr = run(cir, drv, horizon=30e-3, dt=1.0 / (2000.0 * cir.op.f_s))
        a = tr.audit
        j0 = int(0.5 * len(a))
        e_in = a[-1, 0] - a[j0, 0]
        e_out = a[-1, 1] - a[j0, 1]
        d_st = a[-1, 3] - a[j0, 3]
        assert abs(e_in - e_out - d_st) / e_in < 1e-3

    def test_dt_halving_drift(self):
        r1, _ = settled_vc_ratio(dcdc_circuit(), 0.5)
        r2, _ = settled_vc_ratio(dcdc_circuit(), 0.5, dt=1.0 / (1000.0 * 140e3))
        assert abs(r2 - r1) / r1 < 0.002

    def test_energy_audit_each_period(self):
        cir = dcdc_circuit(r_on=0.02)
        _, tr = settled_vc_ratio(cir, 0.5)
        assert energy_audit_closure(tr, cir, periods=3) < 0.005


class TestGuards:
    def test_divergence_aborts(self):
        cir = dcdc_circuit()
        cir.divergence_bound = 1.0
        with pytest.raises(SimulationDiverged):
            run(cir, ConstantDutyDriver(np.array([0.9, 0, 0])), horizon=5e-3)

    def test_dt_precondition(self):
        cir = dcdc_circuit()
        with pytest.raises(DomainError):
            run(cir, ConstantDutyDriver(np.zeros(3)), horizon=1e-3,
                dt=1.0 / (100.0 * cir.op.f_s))

    def test_kpi_window_guard(self):
        cir = dcdc_circuit()
        _, tr = settled_vc_ratio(cir, 0.5, horizon=2e-3)
        with pytest.raises(DomainError):
            trace_kpis(tr, window=99)

    def test_trace_uniform_and_finite(self):
        _, tr = settled_vc_ratio(dcdc_circuit(), 0.5, horizon=5e-3)
        dt = np.diff(tr.t)
        assert np.allclose(dt, dt[0], rtol=1e-9)
        assert np.all(np.isfinite(tr.data))


class TestThdHelper:
    def test_pure_sine_is_clean(self):
        t = np.linspace(0.0, 3e-3, 60001)
        x = 5.0 * np.cos(2 * math.pi * 1000.0 * t + 0.3)
        assert thd(t, x, 1000.0) < 1e-9

    def test_five_percent_fifth_harmonic(self):
        t = np.linspace(0.0, 3e-3, 120001)
        x = np.cos(2 * math.pi * 1000.0 * t) \
            + 0.05 * np.cos(2 * math.pi * 5000.0 * t - 1.0)
        assert thd(t, x, 1000.0) == pytest.approx(0.05, abs=1e-6)


class TestAcCapDiodes:
    def test_clamp_keeps_voltages_negative(self, op_rect, params_rect):
        cir = Circuit(mode="rectifier", op=op_rect, params=params_rect,
                      ac_diodes=True, ac_diode_drop=0.0)
        from ibb3 import control
        ctl = control.RectifierController(op_rect, params_rect)
        drv = control.RectifierDriver(ctl, op_rect.f_s)
        tr = run(cir, drv, horizon=4.0 / op_rect.f_o,
                 initial_state=steady_seed(cir))
        for c in ("vC_a_V", "vC_b_V", "vC_c_V"):
            v = tr.col(c)
            assert v.max() <= 1e-9
            assert v.min() >= -(op_rect.v_dc + 2.2 * op_rect.v_ac_hat + 50.0)


class TestOpenLoopInverter:
    def test_bounded_for_random_duty_triples(self, op_inv, params_inv):
        op = replace(op_inv, v_dc=240.0)
        cir = Circuit(mode="inverter", op=op, params=params_inv)
        rng = np.random.default_rng(11)
        for _ in range(4):
            d = rng.uniform(0.05, 0.7, 3)
            tr = run(cir, ConstantDutyDriver(d), horizon=6.0 / op.f_o)
            assert np.all(np.isfinite(tr.data))
            vc_pred = op.v_dc * d / (1.0 - d)
            assert np.abs(tr.data[:, 4:7]).max() <= 2.0 * (vc_pred.max() + op.v_dc)
            # settles: the last period is no wilder than the start transient
            n = len(tr.t) // 6
            assert np.abs(tr.data[-n:, 1:4]).max() <= \
                np.abs(tr.data[: 2 * n, 1:4]).max() + 1.0
