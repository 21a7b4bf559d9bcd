"""Semiconductor loss evaluation and the steady-state thermal chain.

Covers per-half-bridge conduction plus switching losses from a loss
map, the worst-case per-device split, the via-stack case-to-heatsink
resistance, the heatsink budget, junction temperature and CSPI-based
cooling-volume scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConverterParams, DomainError
from .lossmap import LossMap
from .modulation import ModulationProfile, TransitionKind


@dataclass(frozen=True)
class ThermalStack:
    """Junction-to-ambient resistance chain, steady state.

    r_jc, r_chs_pd, r_hsa_pd in K/W (per device); temperatures in degC.
    Heatsink capacitance is irrelevant in steady state and not modeled.
    """

    r_jc: float
    r_chs_pd: float
    r_hsa_pd: float
    t_amb: float
    t_j_max: float

    def __post_init__(self):
        if min(self.r_jc, self.r_chs_pd, self.r_hsa_pd) < 0:
            raise DomainError("thermal resistances must be >= 0")
        if self.t_j_max <= self.t_amb:
            raise DomainError("t_j_max must exceed t_amb")

    @property
    def r_total(self) -> float:
        return self.r_jc + self.r_chs_pd + self.r_hsa_pd


@dataclass(frozen=True)
class ViaStackParams:
    """Per-device case-to-heatsink stack: thermal pad + filled vias.

    l_via: via length (PCB thickness) [m]; k_cu, k_s: copper / solder
    conductivities [W/(K m)]; r_out, r_in: via radii [m]; d_pad,
    lambda_pad, a_pad: pad thickness, conductivity, area; n_vias: vias
    per device.
    """

    l_via: float
    k_cu: float
    k_s: float
    r_out: float
    r_in: float
    d_pad: float
    lambda_pad: float
    a_pad: float
    n_vias: int

    def __post_init__(self):
        if not (self.r_out > self.r_in > 0):
            raise DomainError("need r_out > r_in > 0")
        if self.n_vias < 1:
            raise DomainError("n_vias must be >= 1")


@dataclass(frozen=True)
class CoolingSpec:
    """Fan-heatsink pair characterised by its CSPI.

    cspi in 1/(K/W * liter); section_volume in liters; n_fans fan
    segments sharing the load.
    """

    cspi: float
    section_volume: float
    n_fans: int

    def __post_init__(self):
        if self.cspi <= 0 or self.section_volume <= 0 or self.n_fans < 1:
            raise DomainError("cooling spec values must be positive")


@dataclass
class SemiconductorLosses:
    p_cond: float
    p_sw: float

    @property
    def p_tot(self) -> float:
        return self.p_cond + self.p_sw


def loss_energy(lmap: LossMap, v: float, i: float, kind: str) -> float:
    """Switching energy per half-bridge per transition at (v, i)."""
    if lmap is None:
        raise DomainError("no loss map")
    if kind not in ("soft", "hard"):
        raise DomainError("kind must be soft or hard")
    return lmap.energy(v, i, kind)


def evaluate_semiconductor_losses(transitions, profile: ModulationProfile,
                                  lmap: LossMap, params: ConverterParams,
                                  phase: int = 0) -> SemiconductorLosses:
    """Per-half-bridge losses of one phase over one fundamental period.

    p_sw = f_o * sum of map energies at (v_block, |i|/n_par); partial
    transitions use the hard table (it converges to the stored-charge
    energy at zero current, which is what an incomplete commutation
    dissipates).  p_cond = I_rms^2 * r_ds_on / n_par.
    """
    f_o = profile.op.f_o
    e_sum = 0.0
    for ev in transitions:
        if ev.phase != phase:
            continue
        if ev.kind is None:
            raise DomainError("transitions must be classified")
        kind = "soft" if ev.kind is TransitionKind.SOFT else "hard"
        e_sum += lmap.energy(ev.v_block, abs(ev.i_switched) / params.n_par, kind)
    p_sw = f_o * e_sum

    cyc = profile.phase_cycles(phase)
    w = np.array([c.period for c in cyc])
    rms2 = float(np.average([c.rms_sq for c in cyc], weights=w))
    p_cond = rms2 * params.r_on_effective
    return SemiconductorLosses(p_cond=p_cond, p_sw=p_sw)


def per_device_worst(p_tot_hb: float, split: float, n_par: int) -> float:
    """Worst-case per-device dissipation, P = P_hb * split / n_par."""
    if not 0.0 < split < 1.0:
        raise DomainError("split must be in (0, 1)")
    if n_par < 1:
        raise DomainError("n_par must be >= 1")
    return p_tot_hb * split / n_par


def via_stack_rth(p: ViaStackParams, n_parallel: Optional[int] = None) -> float:
    """Case-to-heatsink resistance of the pad + via stack.

    R = d_pad/(lambda_pad A_pad) + l_via / (n (K_s pi r_in^2 +
    K_cu pi (r_out^2 - r_in^2))), n parallel vias (default n_vias).
    """
    n = p.n_vias if n_parallel is None else n_parallel
    if n < 1:
        raise DomainError("parallel count must be >= 1")
    pad = p.d_pad / (p.lambda_pad * p.a_pad)
    per_via_conductance = (p.k_s * math.pi * p.r_in ** 2
                           + p.k_cu * math.pi * (p.r_out ** 2 - p.r_in ** 2))
    return pad + p.l_via / (n * per_via_conductance)


def junction_temperature(p_pd: float, stack: ThermalStack) -> float:
    """T_j = T_amb + P_pd * (R_jc + R_chs + R_hsa); linear in power."""
    if p_pd < 0:
        raise DomainError("p_pd must be >= 0")
    return stack.t_amb + p_pd * stack.r_total


@dataclass
class HeatsinkBudget:
    r_hsa_pd_max: float
    r_hsa_max: float
    feasible: bool


def heatsink_budget(t_j_max: float, t_amb: float, p_max_pd: float,
                    r_jc: float, r_chs_pd: float, n_hb: int) -> HeatsinkBudget:
    """Upper heatsink resistance limits from the junction budget.

    r_hsa_pd_max = (T_j,max - T_amb)/P_max,pd - R_jc - R_chs,pd;
    one common heatsink for all three phases: r_hsa_max = pd / (3 n_hb).
    A negative budget is reported as infeasible, never clamped.
    """
    if t_j_max <= t_amb:
        raise DomainError("t_j_max must exceed t_amb")
    if p_max_pd < 0:
        raise DomainError("p_max_pd must be >= 0")
    if p_max_pd == 0.0:
        return HeatsinkBudget(math.inf, math.inf, True)
    r_pd = (t_j_max - t_amb) / p_max_pd - r_jc - r_chs_pd
    return HeatsinkBudget(r_pd, r_pd / (3 * n_hb), feasible=r_pd > 0.0)


def cspi_scale(cspi: float, v2_liters: float, n_fans: int):
    """Scale a characterised fan-heatsink section to a new volume.

    r_th2 = 1/(CSPI * V2); with n identical fan segments in parallel
    r_hsa = r_th2 / n.  Returns (r_th2, r_hsa).
    """
    if cspi <= 0 or v2_liters <= 0 or n_fans < 1:
        raise DomainError("cspi, v2 and n_fans must be positive")
    r_th2 = 1.0 / (cspi * v2_liters)
    return r_th2, r_th2 / n_fans
