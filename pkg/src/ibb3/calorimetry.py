"""Sizing calculators for a calorimetric switching-loss measurement setup.

Derives the switching-frequency ceilings for soft and hard switching
runs from the thermal budget of the devices under test, and sizes the
brass measurement block from the required heating-time constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import DomainError
from .thermal import ViaStackParams


@dataclass(frozen=True)
class CalorimetricSpec:
    """Electrical, thermal and layout data of the measurement setup."""

    # electrical
    v_dc_max: float          # V
    i_ss_hat: float          # A, max soft-switched inductor current (half-bridge)
    i_hs_hat: float          # A, max hard-switched inductor current (DC)
    e_ss_per_device: float   # J, peak soft energy per device per transition
    e_hs_per_device: float   # J, peak hard energy per device per transition
    r_ds_on: float           # ohm per device at operating temperature
    c_dc: float              # F
    duty: float
    dead_time: float         # s
    n_par: int
    n_hb: int
    # thermal
    r_jc_pd: float           # K/W
    r_chs_pd: float          # K/W
    t_amb: float             # degC
    t_j_max: float           # degC
    t_br_min: float          # degC, transient measurement window low edge
    t_br_max: float          # degC, transient measurement window high edge
    t_br_rise: float         # K, temperature rise to be measured
    t_min: float             # s, minimum heating time
    s_rho: float             # J/(K m^3), volumetric heat capacity of brass
    # layout
    vias: ViaStackParams = None

    def __post_init__(self):
        if not (self.t_amb < self.t_br_min < self.t_br_max < self.t_j_max):
            raise DomainError("need t_amb < t_br range < t_j_max")
        if self.t_min <= 0:
            raise DomainError("t_min must be > 0")


def table_a1_spec() -> CalorimetricSpec:
    """Shipped default spec for the 600 V GaN setup (two parallel devices).

    The junction-to-brass chain resistance is 6.0 K/W: measured
    case-to-heatsink 4.8 K/W plus 1.2 K/W junction-to-case at the
    elevated die temperature of the test.
    """
    vias = ViaStackParams(l_via=1.7e-3, k_cu=385.0, k_s=60.0,
                          r_out=0.15e-3, r_in=0.10e-3,
                          d_pad=0.3e-3, lambda_pad=17.0, a_pad=13.6e-6,
                          n_vias=36)
    return CalorimetricSpec(
        v_dc_max=400.0, i_ss_hat=40.0, i_hs_hat=10.0,
        e_ss_per_device=3.2e-6, e_hs_per_device=40e-6,
        r_ds_on=0.100, c_dc=30e-6, duty=0.5, dead_time=20e-9,
        n_par=2, n_hb=4,
        r_jc_pd=1.2, r_chs_pd=4.8, t_amb=25.0, t_j_max=120.0,
        t_br_min=30.0, t_br_max=40.0, t_br_rise=10.0, t_min=120.0,
        s_rho=3205e3, vias=vias)


@dataclass
class FrequencyLimit:
    f_max: float
    p_max_pd: float
    p_cond: float
    p_cond_pd: float
    p_sw_pd: float
    feasible: bool


@dataclass
class CalorimetricLimits:
    soft: FrequencyLimit
    hard: FrequencyLimit


def _limit(spec: CalorimetricSpec, i_rms_hb: float, e_per_device: float) -> FrequencyLimit:
    p_max_pd = (spec.t_j_max - spec.t_br_max) / (spec.r_jc_pd + spec.r_chs_pd)
    p_cond = i_rms_hb ** 2 * spec.r_ds_on / spec.n_par
    p_cond_pd = p_cond / spec.n_hb
    p_sw_pd = p_max_pd - p_cond_pd
    feasible = p_sw_pd > 0.0
    f_max = p_sw_pd / e_per_device if feasible else 0.0
    return FrequencyLimit(f_max, p_max_pd, p_cond, p_cond_pd, p_sw_pd, feasible)


def calorimetric_limits(spec: CalorimetricSpec) -> CalorimetricLimits:
    """Maximum switching frequencies that keep the DUT junctions cool.

    Soft runs inject a triangular current (rms = peak/sqrt(3)); hard
    runs a DC current.  The per-device switching budget is what remains
    of (T_j,max - T_br,max)/(R_jc + R_chs) after conduction.
    """
    soft = _limit(spec, spec.i_ss_hat / math.sqrt(3.0), spec.e_ss_per_device)
    hard = _limit(spec, spec.i_hs_hat, spec.e_hs_per_device)
    return CalorimetricLimits(soft=soft, hard=hard)


@dataclass
class BrassBlock:
    c_th: float    # J/K
    v_br: float    # m^3
    h_br: float    # m


def brass_block(spec: CalorimetricSpec, l_br: float, w_br: float) -> BrassBlock:
    """Size the brass block so a full-power transient takes t_min.

    C_th = N_HB P_max,pd t_min / (T_br,max - T_br,min);
    V = C_th / (S rho); h = V / (l w).
    """
    if l_br <= 0 or w_br <= 0:
        raise DomainError("footprint must be positive")
    p_max_pd = (spec.t_j_max - spec.t_br_max) / (spec.r_jc_pd + spec.r_chs_pd)
    c_th = spec.n_hb * p_max_pd * spec.t_min / (spec.t_br_max - spec.t_br_min)
    v_br = c_th / spec.s_rho
    return BrassBlock(c_th=c_th, v_br=v_br, h_br=v_br / (l_br * w_br))
