"""Buck-boost inductor evaluation: copper, core loss and feasibility.

A candidate is a core (area product data plus Steinmetz constants) with
a winding (turns, strands).  Evaluation takes the modulation-profile
current decomposition (low-frequency local average plus per-cycle
triangular ripple) and returns losses and feasibility flags.

Core loss uses an improved-generalized-Steinmetz-style piecewise
evaluation over the two linear segments of every switching cycle, with
plain Steinmetz available as a fallback.  Copper loss separates the
low-frequency rms from the ripple rms and applies a documented
layer/strand proximity factor to the ripple part:

    F_ac(f) = 1 + k_prox * (d_strand / delta(f))^4,  capped at f_cap

with delta the skin depth in copper.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .core import DomainError
from .modulation import ModulationProfile

RHO_CU = 1.72e-8      # ohm m at 20 C
MU0 = 4e-7 * math.pi


class Infeasibility(str, Enum):
    SATURATION = "saturation"
    THERMAL = "thermal"
    WINDOW = "window"


@dataclass(frozen=True)
class CoreRecord:
    """One catalog core: geometry plus material constants."""

    name: str
    a_c: float       # m^2 core cross section
    a_w: float       # m^2 winding window
    volume_l: float  # liters, boxed volume incl. winding allowance
    b_sat: float     # T
    k: float         # Steinmetz k (SI: W/m^3 with f in Hz, B in T)
    alpha: float
    beta: float
    v_e: float = 0.0     # m^3 effective core volume (0 -> from volume_l)
    mlt: float = 0.0     # m mean length of turn (0 -> estimate)

    def effective_volume(self) -> float:
        return self.v_e if self.v_e > 0 else 0.45 * self.volume_l * 1e-3

    def mean_turn_length(self) -> float:
        # fallback: square-ish turn around the center leg
        return self.mlt if self.mlt > 0 else 4.4 * math.sqrt(self.a_c)


@dataclass(frozen=True)
class InductorDesign:
    core: CoreRecord
    l_nominal: float       # H
    n_turns: int
    strands: int
    d_strand: float        # m single strand diameter
    fill_factor: float = 0.30
    j_max: float = 12e6    # A/m^2
    p_loss_max: float = 8.0  # W
    k_prox: float = 1.0
    temp_factor: float = 1.25   # copper resistivity factor at temperature

    def __post_init__(self):
        if self.core.alpha <= 1.0 or self.core.beta <= 2.0:
            raise DomainError("Steinmetz exponents must satisfy alpha > 1, beta > 2")
        if self.n_turns < 1 or self.strands < 1:
            raise DomainError("turns and strands must be >= 1")

    @property
    def gap(self) -> float:
        """Air gap for the nominal inductance, L = mu0 N^2 A_c / g."""
        return MU0 * self.n_turns ** 2 * self.core.a_c / self.l_nominal

    @property
    def copper_area(self) -> float:
        return self.strands * math.pi * (self.d_strand / 2.0) ** 2

    @property
    def r_dc(self) -> float:
        return (RHO_CU * self.temp_factor * self.core.mean_turn_length()
                * self.n_turns / self.copper_area)

    def b_of_current(self, i: float) -> float:
        return self.l_nominal * i / (self.n_turns * self.core.a_c)

    def f_ac(self, f: float) -> float:
        """Proximity resistance factor for the ripple-frequency current."""
        if f <= 0:
            return 1.0
        delta = math.sqrt(RHO_CU / (math.pi * MU0 * f))
        return 1.0 + min(self.k_prox * (self.d_strand / delta) ** 4, 60.0)


@dataclass
class DesignPoint:
    volume: float                 # liters
    p_loss: float                 # W
    feasible: bool
    infeasibility_reason: Optional[Infeasibility] = None
    p_copper: float = 0.0
    p_core: float = 0.0
    b_pk: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not self.feasible and self.infeasibility_reason is None:
            raise DomainError("infeasible points must carry a reason")


def _igse_ki(k: float, alpha: float, beta: float) -> float:
    """iGSE constant: k_i = k / ((2 pi)^(a-1) 2^(b-a) Int |cos|^a)."""
    integral = 2.0 * math.sqrt(math.pi) * math.gamma(alpha / 2.0 + 0.5) \
        / math.gamma(alpha / 2.0 + 1.0)
    return k / ((2.0 * math.pi) ** (alpha - 1.0) * 2.0 ** (beta - alpha) * integral)


def evaluate_inductor(design: InductorDesign, profile: ModulationProfile,
                      phase: int = 0, method: str = "igse") -> DesignPoint:
    """Losses and feasibility of one inductor on one current waveform.

    Copper: (lf_rms^2 + ripple_rms^2 * F_ac(f_cycle)) * R_dc.
    Core (igse): per cycle, both linear segments,
        e = k_i |dB/dt|^alpha dB^(beta-alpha) dt_segment * V_e,
    summed over the fundamental; (steinmetz): k f^alpha (dB/2)^beta V_e
    time-averaged.  Saturation checks peak flux against b_sat, thermal
    checks total loss against p_loss_max, window checks the copper fit.
    """
    core = design.core
    cyc = profile.phase_cycles(phase)
    w = np.array([c.period for c in cyc])
    t_total = float(w.sum())

    if design.n_turns * design.copper_area > core.a_w * design.fill_factor:
        return DesignPoint(core.volume_l, math.inf, False, Infeasibility.WINDOW,
                           name=core.name)

    lf2 = float(np.average([c.i_avg ** 2 for c in cyc], weights=w))
    rip2 = float(np.average([(c.di_pkpk ** 2) / 12.0 for c in cyc], weights=w))
    i_pk = max(c.i_abs_max for c in cyc)

    p_cu = 0.0
    p_core = 0.0
    ki = _igse_ki(core.k, core.alpha, core.beta)
    v_e = core.effective_volume()
    for c in cyc:
        frac = c.period / t_total
        p_cu += c.i_avg ** 2 * design.r_dc * frac
        if not c.switched or c.di_pkpk <= 0.0:
            continue
        f_cyc = 1.0 / c.period
        p_cu += (c.di_pkpk ** 2 / 12.0) * design.r_dc * design.f_ac(f_cyc) * frac
        db = design.b_of_current(c.di_pkpk)
        if method == "igse":
            # two-slope triangle: rise d*T, fall (1-d)*T
            d = min(max(c.duty, 1e-9), 1.0 - 1e-9)
            t_rise = d * c.period
            t_fall = c.period - t_rise
            e = ki * db ** (core.beta - core.alpha) * (
                (db / t_rise) ** core.alpha * t_rise
                + (db / t_fall) ** core.alpha * t_fall) * v_e
            p_core += e * frac / c.period
        else:
            p_core += core.k * f_cyc ** core.alpha * (db / 2.0) ** core.beta * v_e * frac

    b_pk = design.b_of_current(i_pk)
    j = math.sqrt(lf2 + rip2) / design.copper_area / design.strands * design.strands
    p_loss = p_cu + p_core

    if b_pk > core.b_sat:
        return DesignPoint(core.volume_l, p_loss, False, Infeasibility.SATURATION,
                           p_cu, p_core, b_pk, core.name)
    if p_loss > design.p_loss_max or j > design.j_max:
        return DesignPoint(core.volume_l, p_loss, False, Infeasibility.THERMAL,
                           p_cu, p_core, b_pk, core.name)
    return DesignPoint(core.volume_l, p_loss, True, None, p_cu, p_core, b_pk,
                       core.name)


# ---------------------------------------------------------------------------
# Core catalog

BUILTIN_CORES = [
    # ELP 32/6/20 planar set with plate, N87-class material
    CoreRecord("ELP_32_6_20", a_c=130e-6, a_w=42e-6, volume_l=0.0125,
               b_sat=0.39, k=0.0315, alpha=1.8, beta=2.5,
               v_e=5.38e-6, mlt=0.067),
    CoreRecord("ELP_22_6_16", a_c=78.5e-6, a_w=30e-6, volume_l=0.0078,
               b_sat=0.39, k=0.0315, alpha=1.8, beta=2.5,
               v_e=2.54e-6, mlt=0.052),
    CoreRecord("ELP_38_8_25", a_c=194e-6, a_w=58e-6, volume_l=0.0205,
               b_sat=0.39, k=0.0315, alpha=1.8, beta=2.5,
               v_e=10.2e-6, mlt=0.081),
    CoreRecord("E_25_13_7", a_c=52.5e-6, a_w=56e-6, volume_l=0.0102,
               b_sat=0.39, k=0.031, alpha=1.75, beta=2.6,
               v_e=2.99e-6, mlt=0.058),
]


def builtin_design_10uh() -> InductorDesign:
    """The selected 10 uH design on the ELP 32/6/20 core."""
    return InductorDesign(core=BUILTIN_CORES[0], l_nominal=10e-6,
                          n_turns=6, strands=180, d_strand=0.1e-3,
                          fill_factor=0.30, j_max=12e6, p_loss_max=8.0,
                          k_prox=0.35)


CORE_CSV_HEADER = ["name", "a_c_m2", "a_w_m2", "volume_l", "b_sat_T",
                   "k", "alpha", "beta"]


def load_core_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != CORE_CSV_HEADER:
        raise DomainError("expected header " + ", ".join(CORE_CSV_HEADER))
    out = []
    for r in rows[1:]:
        if not r or not r[0]:
            continue
        out.append(CoreRecord(r[0], float(r[1]), float(r[2]), float(r[3]),
                              float(r[4]), float(r[5]), float(r[6]),
                              float(r[7])))
    return out
