import math

import numpy as np
import pytest

from ibb3.core import ConverterParams, OperatingPoint
from ibb3.modulation import Scheme, classify_transitions, profile_kpis, synthesize

V_HAT_GRID = 115.0 * math.sqrt(2.0)


@pytest.fixture(scope="session")
def op_rect():
    """600 W aircraft-grid rectifier operating point."""
    return OperatingPoint(v_dc=270.0, v_ac_hat=V_HAT_GRID, p_out=600.0,
                          f_o=360.0, f_s=140e3, f_s_max=300e3)


@pytest.fixture(scope="session")
def params_rect():
    return ConverterParams(l_bb=75e-6, c_ac=1e-6, c_dc=10e-6, l_f=75e-6,
                           r_load_dc=121.5, c_oss=220e-12, r_ds_on=0.030,
                           n_par=1, dead_time=20e-9, min_on_time=400e-9)


@pytest.fixture(scope="session")
def op_inv():
    """1 kW fuel-cell drive inverter nominal point."""
    return OperatingPoint(v_dc=80.0, v_ac_hat=80.0, p_out=1000.0,
                          f_o=1000.0, f_s=300e3)


@pytest.fixture(scope="session")
def params_inv():
    return ConverterParams(l_bb=10e-6, c_ac=3e-6, c_dc=70e-6, c_oss=260e-12,
                           r_ds_on=0.075, n_par=2, dead_time=20e-9)


@pytest.fixture(scope="session")
def scheme_kpis(op_rect, params_rect):
    """Synthesized, classified and summarised profiles for all schemes."""
    out = {}
    for s in (Scheme.PWM, Scheme.DPWM, Scheme.BCM):
        prof = synthesize(s, op_rect, params_rect)
        classify_transitions(prof)
        out[s] = (prof, profile_kpis(prof))
    return out


@pytest.fixture(scope="session")
def rectifier_traces(op_rect, params_rect):
    """Closed-loop rectifier runs.

    "nominal": full build (CM smoothing + AC-cap diodes) for the KPI
    criteria.  The smoothing comparison pair runs without the backup
    diodes, which otherwise pin the clamped-phase voltage and hide the
    ringing the smoothing is there to remove.
    """
    from ibb3 import control
    from ibb3.simulate import Circuit, run, steady_seed

    traces = {}
    for name, smooth, diodes in (("nominal", True, True),
                                 ("smooth_nodiode", True, False),
                                 ("plain_nodiode", False, False)):
        cir = Circuit(mode="rectifier", op=op_rect, params=params_rect,
                      ac_diodes=diodes)
        cfg = control.ControllerConfig.from_plant(op_rect, params_rect)
        cfg.smoothing.enabled = smooth
        ctl = control.RectifierController(op_rect, params_rect, cfg)
        drv = control.RectifierDriver(ctl, op_rect.f_s)
        traces[name] = run(cir, drv, horizon=12.0 / op_rect.f_o,
                           initial_state=steady_seed(cir)), cir
    return traces
