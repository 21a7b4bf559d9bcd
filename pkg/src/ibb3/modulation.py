"""Modulation synthesis for one fundamental period: PWM, DPWM, BCM.

The synthesizer marches switching cycles phase by phase over one
fundamental period using the ideal quasi-steady waveforms (inductive
voltage drops and AC-capacitor reactive currents neglected), emits one
commutation event per half-bridge edge, classifies every event
soft/partial/hard against the ZVS current threshold and aggregates the
scheme KPI set.

Scheme specifics:
  PWM   constant common-mode offset -(1 + margin) * Vhat, fixed f_s.
  DPWM  common-mode offset -max(DM), one phase clamped at all times,
        fixed f_s in the active sectors.
  BCM   same constant offset as PWM; the switching period of every
        cycle is solved so the inductor current reverses to -i_o,
        capped at f_s_max.

Carrier-based schemes suppress switching for cycles whose DC-side
on-time is shorter than the modulator minimum pulse command
(params.min_on_time): the pulse is never issued and the phase stays on
its AC switch for that cycle.  This matters only in the narrow bands
next to the DPWM clamp sectors, where it lowers the average switching
frequency a few percent below 2/3 of the carrier rate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .core import (
    ConverterParams,
    DomainError,
    OperatingPoint,
    dm_references,
    zvs_current_threshold,
)


class Scheme(str, Enum):
    PWM = "pwm"
    DPWM = "dpwm"
    BCM = "bcm"


class TransitionKind(str, Enum):
    SOFT = "soft"
    HARD = "hard"
    PARTIAL = "partial"


@dataclass
class SwitchingTransition:
    """One half-bridge commutation.

    edge "rise" is the switched node going low to high (DC-side device
    turning on, needs current flowing into the node, i.e. negative);
    edge "fall" is the opposite.  v_block = V_dc + |V_C| at the instant.
    """

    t: float
    phase: int
    v_block: float
    i_switched: float
    edge: str
    kind: Optional[TransitionKind] = None


@dataclass
class Cycle:
    """One switching cycle of one phase (bookkeeping for KPIs)."""

    t0: float
    period: float
    phase: int
    v_c_abs: float
    duty: float
    i_avg: float
    di_pkpk: float
    clamped: bool
    suppressed: bool
    capped: bool = False
    clipped: bool = False

    @property
    def switched(self) -> bool:
        return not (self.clamped or self.suppressed)

    @property
    def rms_sq(self) -> float:
        # triangle spanning [valley, peak]: rms^2 = (p^2 + p*v + v^2)/3
        if not self.switched:
            return self.i_avg * self.i_avg
        v = self.i_avg - 0.5 * self.di_pkpk
        p = self.i_avg + 0.5 * self.di_pkpk
        return (p * p + p * v + v * v) / 3.0

    @property
    def i_abs_max(self) -> float:
        if not self.switched:
            return abs(self.i_avg)
        return max(abs(self.i_avg - 0.5 * self.di_pkpk),
                   abs(self.i_avg + 0.5 * self.di_pkpk))


@dataclass
class ModulationProfile:
    scheme: Scheme
    op: OperatingPoint
    params: ConverterParams
    cm_margin: float
    i_o: float
    cycles: list  # list[Cycle], all phases interleaved by t0
    events: list  # list[SwitchingTransition]
    t: np.ndarray = field(default=None)
    duty: np.ndarray = field(default=None)        # (3, N)
    f_s_inst: np.ndarray = field(default=None)    # (3, N)
    v_c_total: np.ndarray = field(default=None)   # (3, N)
    i_l_avg: np.ndarray = field(default=None)     # (3, N)
    i_l_ripple: np.ndarray = field(default=None)  # (3, N) peak-to-peak
    clamp_mask: np.ndarray = field(default=None)  # (3, N) bool
    bcm_clipped: bool = False

    def phase_cycles(self, phase: int):
        return [c for c in self.cycles if c.phase == phase]

    def export_series_csv(self, path):
        cols = ["t_s", "phase", "duty", "f_s", "v_c", "i_l_avg", "i_l_ripple"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for k in range(3):
                for j in range(len(self.t)):
                    w.writerow([f"{self.t[j]:.9g}", k,
                                f"{self.duty[k, j]:.9g}",
                                f"{self.f_s_inst[k, j]:.9g}",
                                f"{self.v_c_total[k, j]:.9g}",
                                f"{self.i_l_avg[k, j]:.9g}",
                                f"{self.i_l_ripple[k, j]:.9g}"])

    def export_transitions_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "phase", "v_block_V", "i_switched_A", "kind"])
            for ev in self.events:
                w.writerow([f"{ev.t:.9g}", ev.phase, f"{ev.v_block:.9g}",
                            f"{ev.i_switched:.9g}",
                            ev.kind.value if ev.kind else ""])


@dataclass
class ModulationKpis:
    scheme: Scheme
    i_l_rms: float
    i_l_max: float
    f_sw_avg: float
    f_sw_max: float
    f_sw_min: float
    v_ss_max: Optional[float]
    v_ss_avg: Optional[float]
    i_ss_max: Optional[float]
    i_ss_avg: Optional[float]
    v_hs_max: Optional[float]
    v_hs_avg: Optional[float]
    i_hs_max: Optional[float]
    i_hs_avg: Optional[float]
    n_soft: int = 0
    n_partial: int = 0
    n_hard: int = 0

    COLUMNS = ["scheme", "i_l_rms_A", "i_l_max_A",
               "f_sw_avg_Hz", "f_sw_max_Hz", "f_sw_min_Hz",
               "v_ss_max_V", "v_ss_avg_V", "i_ss_max_A", "i_ss_avg_A",
               "v_hs_max_V", "v_hs_avg_V", "i_hs_max_A", "i_hs_avg_A",
               "n_soft", "n_partial", "n_hard"]

    def to_row(self):
        def fmt(x):
            return "" if x is None else f"{x:.9g}"
        return [self.scheme.value, fmt(self.i_l_rms), fmt(self.i_l_max),
                fmt(self.f_sw_avg), fmt(self.f_sw_max), fmt(self.f_sw_min),
                fmt(self.v_ss_max), fmt(self.v_ss_avg), fmt(self.i_ss_max),
                fmt(self.i_ss_avg), fmt(self.v_hs_max), fmt(self.v_hs_avg),
                fmt(self.i_hs_max), fmt(self.i_hs_avg),
                str(self.n_soft), str(self.n_partial), str(self.n_hard)]


DEFAULT_CM_MARGIN = 0.11
SERIES_SAMPLES = 20000


def scheme_i_o(scheme: Scheme, op: OperatingPoint, params: ConverterParams,
               cm_margin: float = DEFAULT_CM_MARGIN) -> float:
    """ZVS threshold for a scheme: max(V_dc, max|V_C|) * sqrt(C_oss/L)."""
    if scheme is Scheme.DPWM:
        v_an_max = math.sqrt(3.0) * op.v_ac_hat
    else:
        v_an_max = (2.0 + cm_margin) * op.v_ac_hat
    return zvs_current_threshold(max(op.v_dc, v_an_max), params.c_oss, params.l_bb)


def _cm_value(scheme: Scheme, dm: np.ndarray, v_hat: float, margin: float) -> float:
    if scheme is Scheme.DPWM:
        return -float(dm.max())
    return -(1.0 + margin) * v_hat


def synthesize(scheme, op: OperatingPoint, params: ConverterParams,
               cm_margin: float = DEFAULT_CM_MARGIN,
               include_cap_current: bool = False,
               n_samples: int = SERIES_SAMPLES) -> ModulationProfile:
    """Synthesize one fundamental period of switching activity.

    Ideal waveforms: phase current I_a = Ihat cos(theta), inductor local
    average (I_a + optional C dV/dt) * (1 + |V_C|/V_dc), triangular
    ripple from the volt-second balance.  Events are stored at their
    exact commutation instants.
    """
    scheme = Scheme(scheme)
    if scheme is Scheme.BCM and not op.f_s_max:
        raise DomainError("BCM requires f_s_max in the operating point")

    t_o = 1.0 / op.f_o
    i_hat = op.i_ac_hat
    i_o = scheme_i_o(scheme, op, params, cm_margin)
    min_on = params.min_on_time

    cycles: list[Cycle] = []
    events: list[SwitchingTransition] = []
    bcm_clipped = False
    f_floor = 20.0 * op.f_o

    for phase in range(3):
        shift = 2.0 * math.pi * phase / 3.0
        t = 0.0
        while t < t_o - 1e-15:
            theta = op.omega * t + 1e-12  # nudge off exact sector corners
            dm = dm_references(theta, op.v_ac_hat)
            cm = _cm_value(scheme, dm, op.v_ac_hat, cm_margin)
            v_tot = dm[phase] + cm
            x = max(0.0, -v_tot)
            clamped = scheme is Scheme.DPWM and phase == int(np.argmax(dm))
            i_a = i_hat * math.cos(theta - shift)
            if include_cap_current:
                i_a += params.c_ac * _ref_slope(scheme, theta, phase, op, cm_margin)
            m = i_a * (1.0 + x / op.v_dc)

            if clamped:
                # AC switch on for the whole cycle, inductor = phase current
                period = 1.0 / op.f_s
                cycles.append(Cycle(t, period, phase, 0.0, 0.0,
                                    i_hat * math.cos(theta - shift), 0.0,
                                    clamped=True, suppressed=False))
                t += period
                continue

            if scheme is Scheme.BCM:
                di_req = 2.0 * (abs(m) + i_o)
                if di_req <= 0.0 or x <= 0.0:
                    f_cyc = op.f_s_max
                    capped = True
                    clipped = False
                else:
                    f_req = op.v_dc * x / (params.l_bb * di_req * (op.v_dc + x))
                    capped = f_req > op.f_s_max
                    clipped = f_req < f_floor
                    f_cyc = min(max(f_req, f_floor), op.f_s_max)
                    bcm_clipped = bcm_clipped or clipped
                period = 1.0 / f_cyc
                di = op.v_dc * x / (params.l_bb * f_cyc * (op.v_dc + x)) if x > 0 else 0.0
                d = x / (op.v_dc + x)
                cyc = Cycle(t, period, phase, x, d, m, di,
                            clamped=False, suppressed=False,
                            capped=capped, clipped=clipped)
                cycles.append(cyc)
                _emit_events(events, cyc, op)
                t += period
                continue

            # carrier-based schemes (PWM and active DPWM sectors)
            period = 1.0 / op.f_s
            d = x / (op.v_dc + x)
            suppressed = d * period < min_on
            di = 0.0 if suppressed else op.v_dc * x / (params.l_bb * op.f_s * (op.v_dc + x))
            i_cycle = i_hat * math.cos(theta - shift) if suppressed else m
            cyc = Cycle(t, period, phase, x, d, i_cycle, di,
                        clamped=False, suppressed=suppressed)
            cycles.append(cyc)
            if not suppressed:
                _emit_events(events, cyc, op)
            t += period

    cycles.sort(key=lambda c: (c.t0, c.phase))
    events.sort(key=lambda e: (e.t, e.phase))

    profile = ModulationProfile(scheme=scheme, op=op, params=params,
                                cm_margin=cm_margin, i_o=i_o,
                                cycles=cycles, events=events,
                                bcm_clipped=bcm_clipped)
    _fill_series(profile, n_samples, include_cap_current)
    return profile


def _ref_slope(scheme: Scheme, theta: float, phase: int, op: OperatingPoint,
               margin: float) -> float:
    """dV_C/dt of the total reference for one phase (analytic, piecewise)."""
    shift = 2.0 * math.pi * phase / 3.0
    ddm = -op.v_ac_hat * op.omega * math.sin(theta - shift)
    if scheme is not Scheme.DPWM:
        return ddm
    dm = dm_references(theta, op.v_ac_hat)
    kmax = int(np.argmax(dm))
    ddm_max = -op.v_ac_hat * op.omega * math.sin(theta - 2.0 * math.pi * kmax / 3.0)
    return ddm - ddm_max


def _emit_events(events: list, cyc: Cycle, op: OperatingPoint):
    """Two commutations per switched cycle.

    Cycle layout: DC-side device on during [t0, t0 + d*T) (inductor
    magnetizing, current rising), AC-side device for the rest.  The
    valley therefore sits at the cycle start (rise edge of the node)
    and the peak at t0 + d*T (fall edge).
    """
    v_block = op.v_dc + cyc.v_c_abs
    valley = cyc.i_avg - 0.5 * cyc.di_pkpk
    peak = cyc.i_avg + 0.5 * cyc.di_pkpk
    events.append(SwitchingTransition(cyc.t0, cyc.phase, v_block, valley, "rise"))
    events.append(SwitchingTransition(cyc.t0 + cyc.duty * cyc.period,
                                      cyc.phase, v_block, peak, "fall"))


def _fill_series(profile: ModulationProfile, n: int, include_cap_current: bool):
    op, params, scheme = profile.op, profile.params, profile.scheme
    t_o = 1.0 / op.f_o
    t = np.linspace(0.0, t_o, n, endpoint=False)
    theta = op.omega * t
    dm = dm_references(theta, op.v_ac_hat)
    if scheme is Scheme.DPWM:
        cm = -dm.max(axis=0)
    else:
        cm = np.full_like(t, -(1.0 + profile.cm_margin) * op.v_ac_hat)
    v_tot = dm + cm
    x = np.maximum(0.0, -v_tot)
    duty = x / (op.v_dc + x)
    clamp = np.zeros((3, n), dtype=bool)
    if scheme is Scheme.DPWM:
        kmax = dm.argmax(axis=0)
        for k in range(3):
            clamp[k] = kmax == k
        duty[clamp] = 0.0

    i_a = np.stack([op.i_ac_hat * np.cos(theta - 2.0 * math.pi * k / 3.0)
                    for k in range(3)])
    i_avg = i_a * (1.0 + x / op.v_dc)
    i_avg[clamp] = i_a[clamp]
    ripple = op.v_dc * x / (params.l_bb * op.f_s * (op.v_dc + x))
    ripple[clamp] = 0.0

    f_inst = np.full((3, n), op.f_s)
    f_inst[clamp] = 0.0
    if scheme is Scheme.BCM:
        for k in range(3):
            cyc_k = profile.phase_cycles(k)
            starts = np.array([c.t0 for c in cyc_k])
            fvals = np.array([1.0 / c.period for c in cyc_k])
            rip = np.array([c.di_pkpk for c in cyc_k])
            idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(cyc_k) - 1)
            f_inst[k] = fvals[idx]
            ripple[k] = rip[idx]
    else:
        # cycles suppressed by the minimum-pulse rule do not switch
        for k in range(3):
            for c in profile.phase_cycles(k):
                if c.suppressed:
                    lo = np.searchsorted(t, c.t0, side="left")
                    hi = np.searchsorted(t, c.t0 + c.period, side="left")
                    f_inst[k, lo:hi] = 0.0
                    ripple[k, lo:hi] = 0.0
                    i_avg[k, lo:hi] = i_a[k, lo:hi]

    profile.t = t
    profile.duty = duty
    profile.f_s_inst = f_inst
    profile.v_c_total = v_tot
    profile.i_l_avg = i_avg
    profile.i_l_ripple = ripple
    profile.clamp_mask = clamp


def classify_transitions(profile: ModulationProfile,
                         i_o: Optional[float] = None) -> list:
    """Label every commutation soft / partial / hard.

    A rise edge (node low to high) needs current into the node, i.e.
    i <= -i_o for fully soft; a fall edge needs i >= +i_o.  Transitions
    with the right polarity but |i| < i_o are partial, as are
    low-current transitions of the wrong polarity (they are partially
    hard, continuous with zero-current switching).  Hard is reserved
    for wrong-polarity commutation at |i| >= i_o.
    """
    if i_o is None:
        i_o = profile.i_o
    for ev in profile.events:
        i = ev.i_switched if ev.edge == "fall" else -ev.i_switched
        # now i >= i_o means fully soft for either edge
        if i >= i_o:
            ev.kind = TransitionKind.SOFT
        elif i <= -i_o:
            ev.kind = TransitionKind.HARD
        else:
            ev.kind = TransitionKind.PARTIAL
    return profile.events


def profile_kpis(profile: ModulationProfile, transitions=None) -> ModulationKpis:
    """Table-style KPI set of a classified profile."""
    if transitions is None:
        transitions = profile.events
    if transitions and transitions[0].kind is None:
        raise DomainError("classify transitions before computing KPIs")

    w = np.array([c.period for c in profile.cycles])
    rms2 = np.array([c.rms_sq for c in profile.cycles])
    imax = max(c.i_abs_max for c in profile.cycles)
    i_l_rms = math.sqrt(float(np.average(rms2, weights=w)))

    # per-phase switching rate statistics over the fundamental
    f_avg = sum(1.0 for c in profile.cycles if c.switched) / float(w.sum())
    f_vals = []
    for c in profile.cycles:
        f_vals.append(1.0 / c.period if c.switched else 0.0)
    f_max = max(f_vals)
    f_min = min(f_vals)

    soft = [e for e in transitions if e.kind is TransitionKind.SOFT]
    hard = [e for e in transitions if e.kind is TransitionKind.HARD]
    part = [e for e in transitions if e.kind is TransitionKind.PARTIAL]

    def stats(evs):
        if not evs:
            return None, None, None, None
        v = np.array([e.v_block for e in evs])
        i = np.abs(np.array([e.i_switched for e in evs]))
        return float(v.max()), float(v.mean()), float(i.max()), float(i.mean())

    v_ss_max, v_ss_avg, i_ss_max, i_ss_avg = stats(soft)
    v_hs_max, v_hs_avg, i_hs_max, i_hs_avg = stats(hard)

    return ModulationKpis(scheme=profile.scheme, i_l_rms=i_l_rms, i_l_max=imax,
                          f_sw_avg=f_avg, f_sw_max=f_max, f_sw_min=f_min,
                          v_ss_max=v_ss_max, v_ss_avg=v_ss_avg,
                          i_ss_max=i_ss_max, i_ss_avg=i_ss_avg,
                          v_hs_max=v_hs_max, v_hs_avg=v_hs_avg,
                          i_hs_max=i_hs_max, i_hs_avg=i_hs_avg,
                          n_soft=len(soft), n_partial=len(part), n_hard=len(hard))


def compare_schemes(op: OperatingPoint, params: ConverterParams,
                    schemes=(Scheme.PWM, Scheme.DPWM, Scheme.BCM),
                    cm_margin: float = DEFAULT_CM_MARGIN):
    """Synthesize, classify and summarize several schemes at one point."""
    out = []
    for s in schemes:
        prof = synthesize(s, op, params, cm_margin=cm_margin)
        classify_transitions(prof)
        out.append((prof, profile_kpis(prof)))
    return out
