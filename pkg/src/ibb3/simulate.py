"""Fixed-step switched time-domain simulation of the three-phase circuit.

Topologies: rectifier (grid EMF behind L_f feeding the converter, DC
load resistor on C_dc), inverter (stiff DC source, series R-L load with
optional sinusoidal back-EMF) and a single-phase DC-DC cell with a
resistive load on the AC capacitor.

Integration is forward Euler with exact sub-stepping at every gate
event: boundary times are known from the modulator, so each Euler step
ends exactly on the next boundary or record instant.  Switches are
R_ds,on / open, body diodes ideal with a configurable drop, dead time
enforced between complementary gates with diode freewheeling, and
optional anti-parallel diodes across the AC capacitors keep the node
voltages from going positive.  A commanded DC-side pulse shorter than
the dead time cannot commutate the node and is suppressed (the phase
stays on its AC switch for that cycle).

A single run is strictly sequential and bit-reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ConverterParams, DomainError, OperatingPoint

try:
    from numba import njit
except Exception:  # pragma: no cover - numba is a declared dependency
    def njit(**kwargs):
        def deco(fn):
            return fn
        return deco

RECTIFIER, INVERTER, DCDC = 0, 1, 2
_MODES = {"rectifier": RECTIFIER, "inverter": INVERTER, "dc-dc-phase": DCDC}

_TWO_PI_3 = 2.0943951023931953


class SimulationDiverged(RuntimeError):
    def __init__(self, t):
        super().__init__(f"simulation state diverged at t = {t:.6e} s")
        self.t = t


@dataclass
class Circuit:
    """Topology mode plus element values for one run.

    esr_c_ac and r_grid are small series resistances that exist in any
    hardware build; they also damp the otherwise loss-free L-C loops
    which forward Euler would slowly amplify.
    """

    mode: str
    op: OperatingPoint
    params: ConverterParams
    diode_drop: float = 0.0
    esr_c_ac: float = 0.03
    r_grid: float = 0.05
    ac_diodes: bool = True
    ac_diode_drop: float = 0.0
    l_load: float = 250e-6
    r_load_ac: float = 0.0      # inverter series load R, 0 -> fit to power
    emf_hat: float = 0.0
    r_ac_dcdc: float = 0.0      # dc-dc phase load resistor
    divergence_bound: float = 1e4

    def __post_init__(self):
        if self.mode not in _MODES:
            raise DomainError(f"unknown topology mode: {self.mode}")
        if self.mode == "rectifier":
            if self.params.l_f <= 0:
                raise DomainError("rectifier needs l_f > 0")
            if self.params.r_load_dc <= 0:
                raise DomainError("rectifier needs r_load_dc > 0")
        if self.mode == "inverter" and self.r_load_ac == 0.0:
            self.r_load_ac = (self.op.v_ac_hat - self.emf_hat) / self.op.i_ac_hat
        if self.mode == "dc-dc-phase" and self.r_ac_dcdc <= 0:
            raise DomainError("dc-dc phase needs r_ac_dcdc > 0")

    def cfg_array(self) -> np.ndarray:
        p, op = self.params, self.op
        return np.array([
            float(_MODES[self.mode]), p.l_bb, p.c_ac, p.c_dc, p.l_f,
            p.r_load_dc, p.r_on_effective, self.diode_drop, self.esr_c_ac,
            self.r_grid, op.v_dc, self.l_load, self.r_load_ac, self.emf_hat,
            op.v_ac_hat, op.omega, 1.0 if self.ac_diodes else 0.0,
            self.ac_diode_drop, self.r_ac_dcdc if self.r_ac_dcdc > 0 else 1.0,
            self.divergence_bound,
        ])

    def stored_energy(self, state: np.ndarray) -> float:
        p = self.params
        e = 0.5 * p.l_bb * float(np.sum(state[0:3] ** 2))
        e += 0.5 * p.c_ac * float(np.sum(state[3:6] ** 2))
        if self.mode == "rectifier":
            e += 0.5 * p.l_f * float(np.sum(state[6:9] ** 2))
            e += 0.5 * p.c_dc * state[9] ** 2
        elif self.mode == "inverter":
            e += 0.5 * self.l_load * float(np.sum(state[6:9] ** 2))
        return e


TRACE_COLUMNS = ["t_s",
                 "iL_a_A", "iL_b_A", "iL_c_A",
                 "vC_a_V", "vC_b_V", "vC_c_V",
                 "iAC_a_A", "iAC_b_A", "iAC_c_A",
                 "vdc_V",
                 "duty_a", "duty_b", "duty_c", "clamped_phase"]


@dataclass
class Trace:
    """Uniform-step record of states, duties and controller designators."""

    dt: float
    columns: list
    data: np.ndarray
    f_o: float
    meta: dict = field(default_factory=dict)
    audit_t: np.ndarray = None     # control-period time stamps
    audit: np.ndarray = None       # columns: e_in, e_out, e_loss, e_stored

    @property
    def t(self):
        return self.data[:, 0]

    def col(self, name):
        return self.data[:, self.columns.index(name)]

    def to_csv(self, path):
        """Write the trace; run settings are echoed as comment lines."""
        with open(path, "w", newline="") as fh:
            for key in sorted(self.meta):
                val = self.meta[key]
                if isinstance(val, (str, int, float, bool)):
                    fh.write(f"# {key} = {val}\n")
                elif isinstance(val, dict):
                    for k2 in sorted(val):
                        fh.write(f"# {key}.{k2} = {val[k2]}\n")
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.data:
                w.writerow([f"{x:.9g}" for x in row])


@njit(cache=True)
def _run_period(state, cfg, duties, t_period, dead_time, dt,
                rec, rec_idx, dt_rec, audit):
    """One switching period of forward Euler with exact event stops.

    state: [iL a..c, vC a..c, iAC a..c, vdc, t]
    audit: [e_in, e_out, e_loss, acdiode_hits]
    Returns (status, rec_idx); status 1 flags divergence.
    """
    mode = int(cfg[0])
    l_bb = cfg[1]; c_ac = cfg[2]; c_dc = cfg[3]; l_f = cfg[4]
    r_dc = cfg[5]; r_on = cfg[6]; v_f = cfg[7]; esr = cfg[8]
    r_g = cfg[9]; v_dc_src = cfg[10]; l_ld = cfg[11]; r_ld = cfg[12]
    emf_hat = cfg[13]; e_hat = cfg[14]; omega = cfg[15]
    acd_on = cfg[16] > 0.5; acd_vf = cfg[17]; r_ac = cfg[18]; bound = cfg[19]

    nph = 1 if mode == 2 else 3
    n_rec_total = rec.shape[0]

    b_on = np.empty(3)
    b_off = np.empty(3)
    gate_mode = np.zeros(3, dtype=np.int64)   # 0 normal, 1 always-AC, 2 always-DC
    for k in range(3):
        t_on = duties[k] * t_period
        if t_on < dead_time:
            gate_mode[k] = 1
            b_on[k] = 2.0 * t_period
            b_off[k] = 2.0 * t_period
        elif t_period - t_on < dead_time:
            gate_mode[k] = 2
            b_on[k] = 0.0
            b_off[k] = 2.0 * t_period
        else:
            b_on[k] = dead_time
            b_off[k] = t_on

    t0_abs = state[10]
    t_local = 0.0
    gates = np.zeros(3, dtype=np.int64)
    dil = np.zeros(3)
    dvc = np.zeros(3)
    diac = np.zeros(3)
    v_term = np.zeros(3)
    icap = np.zeros(3)

    while t_local < t_period - 1e-15:
        t_next = t_local + dt
        for k in range(nph):
            if gate_mode[k] == 0:
                if t_local < b_on[k] and b_on[k] < t_next:
                    t_next = b_on[k]
                if t_local < b_off[k] and b_off[k] < t_next:
                    t_next = b_off[k]
                tb = b_off[k] + dead_time
                if t_local < tb and tb < t_next:
                    t_next = tb
        if rec_idx < n_rec_total:
            tr = (rec_idx + 1) * dt_rec - t0_abs
            if t_local < tr and tr < t_next:
                t_next = tr
        if t_next > t_period:
            t_next = t_period
        h = t_next - t_local
        if h <= 0.0:
            t_local = t_next
            continue
        t_abs = t0_abs + t_local
        e_loss = 0.0

        # gate states for this sub-interval
        i_dc_out = 0.0
        for k in range(nph):
            if gate_mode[k] == 2:
                gates[k] = 1
            elif gate_mode[k] == 1:
                gates[k] = 2
            elif t_local < b_on[k]:
                gates[k] = 0
            elif t_local < b_off[k]:
                gates[k] = 1
            elif t_local < b_off[k] + dead_time:
                gates[k] = 0
            else:
                gates[k] = 2

        # provisional cap KCL and terminal voltages (pre-step currents)
        for k in range(nph):
            i_l = state[k]
            i_t2 = 0.0
            if gates[k] == 2 or (gates[k] == 0 and i_l > 0.0):
                i_t2 = i_l
            if mode == 0:
                i_in = state[6 + k]
            elif mode == 1:
                i_in = -state[6 + k]
            else:
                i_in = 0.0
            if mode == 2:
                ic = (-state[3 + k] / r_ac - i_t2) / (1.0 + esr / r_ac)
            else:
                ic = i_in - i_t2
            icap[k] = ic
            v_term[k] = state[3 + k] + esr * ic

        # inductor slopes from the provisional terminal voltages, then the
        # switch-node coupling currents at the step midpoint: booking the
        # cap and DC-link charge at i + di/2 keeps the discrete energy
        # transfer consistent with the inductors' stored-energy identity
        for k in range(nph):
            i_l = state[k]
            vdc_now = state[9] if mode == 0 else v_dc_src
            if gates[k] == 1:
                va = vdc_now - i_l * r_on
            elif gates[k] == 2:
                va = v_term[k] - i_l * r_on
            else:
                if i_l > 0.0:
                    va = v_term[k] - v_f
                elif i_l < 0.0:
                    va = vdc_now + v_f
                else:
                    va = 0.0
            dil[k] = va / l_bb
            i_mid = i_l + 0.5 * dil[k] * h
            i_t2_mid = 0.0
            if gates[k] == 2 or (gates[k] == 0 and i_l > 0.0):
                i_t2_mid = i_mid
                e_loss += i_mid * i_mid * r_on * h if gates[k] == 2 \
                    else i_mid * v_f * h
            elif gates[k] == 1:
                i_dc_out += i_mid
                e_loss += i_mid * i_mid * r_on * h
            elif i_l < 0.0:
                i_dc_out += i_mid
                e_loss += -i_mid * v_f * h
            if mode == 0:
                i_in = state[6 + k]
            elif mode == 1:
                i_in = -state[6 + k]
            else:
                i_in = 0.0
            if mode == 2:
                ic = (-state[3 + k] / r_ac - i_t2_mid) / (1.0 + esr / r_ac)
            else:
                ic = i_in - i_t2_mid
            icap[k] = ic
            dvc[k] = ic / c_ac
            e_loss += ic * ic * esr * h

        # source / load side
        if mode == 0:
            vm = (v_term[0] + v_term[1] + v_term[2]) / 3.0
            p_in = 0.0
            for k in range(3):
                e_k = e_hat * math.cos(omega * (t_abs + 0.5 * h) - _TWO_PI_3 * k)
                i_g = state[6 + k]
                diac[k] = (e_k + vm - v_term[k] - r_g * i_g) / l_f
                i_g_mid = i_g + 0.5 * diac[k] * h
                p_in += e_k * i_g_mid
                e_loss += i_g_mid * i_g_mid * r_g * h
            audit[0] += p_in * h
            dv_dc = (-i_dc_out - state[9] / r_dc) / c_dc
            v_dc_mid = state[9] + 0.5 * dv_dc * h
            audit[1] += v_dc_mid * v_dc_mid / r_dc * h
        elif mode == 1:
            s = 0.0
            for k in range(3):
                e_k = emf_hat * math.cos(omega * t_abs - _TWO_PI_3 * k)
                s += v_term[k] - e_k - r_ld * state[6 + k]
            vm = s / 3.0
            p_out = 0.0
            for k in range(3):
                e_k = emf_hat * math.cos(omega * t_abs - _TWO_PI_3 * k)
                i_o = state[6 + k]
                diac[k] = (v_term[k] - vm - e_k - r_ld * i_o) / l_ld
                i_o_mid = i_o + 0.5 * diac[k] * h
                p_out += (v_term[k] - vm) * i_o_mid
            audit[1] += p_out * h
            audit[0] += v_dc_src * i_dc_out * h
        else:
            v_t_mid = state[3] + 0.5 * dvc[0] * h + esr * icap[0]
            audit[1] += v_t_mid * v_t_mid / r_ac * h
            audit[0] += v_dc_src * i_dc_out * h

        # cap ESR at midpoint current is already second order; keep the
        # algebraic value (error is far below the audit tolerance)
        audit[2] += e_loss

        # integrate states
        for k in range(nph):
            prev = state[k]
            state[k] += dil[k] * h
            if gates[k] == 0 and prev != 0.0 and (prev > 0.0) != (state[k] > 0.0):
                # ideal diodes block the reversal; residual magnetic energy
                # is dumped (counted as loss)
                audit[2] += 0.5 * l_bb * state[k] * state[k]
                state[k] = 0.0
            state[3 + k] += dvc[k] * h
            if acd_on and state[3 + k] > acd_vf:
                audit[2] += 0.5 * c_ac * (state[3 + k] ** 2 - acd_vf ** 2)
                state[3 + k] = acd_vf
                audit[3] += 1.0
            state[6 + k] += diac[k] * h
        if mode == 0:
            state[9] += (-i_dc_out - state[9] / r_dc) / c_dc * h
        else:
            state[9] = v_dc_src

        t_local = t_next
        state[10] = t0_abs + t_local

        for k in range(nph):
            if (abs(state[k]) > bound or abs(state[3 + k]) > bound
                    or abs(state[6 + k]) > bound):
                return 1, rec_idx
        if abs(state[9]) > bound:
            return 1, rec_idx

        while rec_idx < n_rec_total and (rec_idx + 1) * dt_rec <= state[10] + 1e-16:
            rec[rec_idx, 0] = (rec_idx + 1) * dt_rec
            for k in range(3):
                rec[rec_idx, 1 + k] = state[k]
                rec[rec_idx, 4 + k] = state[3 + k]
                rec[rec_idx, 7 + k] = state[6 + k]
            rec[rec_idx, 10] = state[9]
            rec_idx += 1

    return 0, rec_idx


class ConstantDutyDriver:
    """Open-loop driver: fixed duty triple (or callable of time)."""

    def __init__(self, duties):
        self._duties = duties

    def step(self, t, meas):
        if callable(self._duties):
            d = np.asarray(self._duties(t), dtype=float)
        else:
            d = np.asarray(self._duties, dtype=float)
        return np.clip(d, 0.0, 1.0), {"clamped_phase": -1}


def steady_seed(circuit: Circuit) -> np.ndarray:
    """Warm-start state near the quasi-steady DPWM operating point.

    Steady-state KPI studies start here instead of walking through the
    precharge/soft-start sequence a hardware build would use.
    """
    op = circuit.op
    state = np.zeros(11)
    state[9] = op.v_dc
    dm = op.v_ac_hat * np.cos(-np.array([0.0, _TWO_PI_3, 2 * _TWO_PI_3]))
    v_c = dm - dm.max()
    state[3:6] = v_c
    i_ph = op.i_ac_hat * np.cos(-np.array([0.0, _TWO_PI_3, 2 * _TWO_PI_3]))
    if circuit.mode == "rectifier":
        state[6:9] = i_ph
        state[0:3] = i_ph * (1.0 - v_c / op.v_dc)
    elif circuit.mode == "inverter":
        state[6:9] = i_ph * 0.0
        state[0:3] = -i_ph * (1.0 - v_c / op.v_dc)
    else:
        state[3:6] = 0.0
    return state


def measurements(circuit: Circuit, state: np.ndarray) -> dict:
    """Regular-sampled controller measurement set."""
    meas = {
        "v_dc": float(state[9]),
        "v_c_abc": state[3:6].copy(),
        "i_l_abc": state[0:3].copy(),
    }
    if circuit.mode == "rectifier":
        meas["i_grid_abc"] = state[6:9].copy()
        meas["i_load_dc"] = float(state[9] / circuit.params.r_load_dc)
    elif circuit.mode == "inverter":
        meas["i_load_abc"] = state[6:9].copy()
    return meas


def run(circuit: Circuit, driver, horizon: float, dt: Optional[float] = None,
        dt_rec: Optional[float] = None, initial_state: Optional[np.ndarray] = None,
        f_ctrl: Optional[float] = None) -> Trace:
    """Simulate `horizon` seconds; control/gate updates once per period.

    dt defaults to 1/(500 f_s); the trace is recorded on a uniform
    dt_rec grid (default T_s/20).  Raises SimulationDiverged when any
    state leaves the divergence bound.
    """
    op = circuit.op
    f_s = f_ctrl if f_ctrl else op.f_s
    t_period = 1.0 / f_s
    if dt is None:
        dt = 1.0 / (500.0 * f_s)
    if dt > 1.0 / (200.0 * f_s):
        raise DomainError("dt must be <= 1/(200 f_s)")
    if dt_rec is None:
        dt_rec = t_period / 20.0

    cfg = circuit.cfg_array()
    state = np.zeros(11)
    if initial_state is not None:
        state[: len(initial_state)] = initial_state
    n_rec = int(math.floor(horizon / dt_rec))
    rec = np.zeros((n_rec, 11))
    audit = np.zeros(4)

    n_periods = int(math.ceil(horizon / t_period))
    duty_log = np.zeros((n_periods, 4))
    audit_log = np.zeros((n_periods, 5))
    rec_idx = 0
    dead = circuit.params.dead_time

    for j in range(n_periods):
        duties, info = driver.step(state[10], measurements(circuit, state))
        duty_log[j, 0:3] = duties
        duty_log[j, 3] = info.get("clamped_phase", -1)
        status, rec_idx = _run_period(state, cfg, np.asarray(duties, dtype=float),
                                      t_period, dead, dt, rec, rec_idx, dt_rec,
                                      audit)
        if status != 0:
            raise SimulationDiverged(state[10])
        audit_log[j, 0] = state[10]
        audit_log[j, 1:4] = audit[0:3]
        audit_log[j, 4] = circuit.stored_energy(state)

    # attach per-record duty columns (piecewise constant per period)
    rec = rec[:rec_idx]
    data = np.zeros((rec_idx, len(TRACE_COLUMNS)))
    data[:, 0:11] = rec
    per_idx = np.clip((rec[:, 0] // t_period).astype(int), 0, n_periods - 1)
    data[:, 11:14] = duty_log[per_idx, 0:3]
    data[:, 14] = duty_log[per_idx, 3]

    trace = Trace(dt=dt_rec, columns=list(TRACE_COLUMNS), data=data, f_o=op.f_o,
                  meta={"dt_euler": dt, "f_s": f_s, "mode": circuit.mode,
                        "e_hat": op.v_ac_hat, "ac_diode_hits": audit[3]},
                  audit_t=audit_log[:, 0], audit=audit_log[:, 1:])
    trace.meta["final_state"] = state.copy()
    return trace


# ---------------------------------------------------------------------------
# KPIs

def fourier_component(t, x, f, k: int):
    """Trapezoid projection of x(t) on the k-th harmonic of f (peak value)."""
    w = 2.0 * math.pi * f * k
    c = np.trapezoid(x * np.cos(w * t), t)
    s = np.trapezoid(x * np.sin(w * t), t)
    span = t[-1] - t[0]
    return 2.0 / span * complex(c, -s)


def thd(t, x, f_o, n_harm: int = 50) -> float:
    """THD of x against its fundamental f_o, harmonics 2..n_harm."""
    fund = abs(fourier_component(t, x, f_o, 1))
    if fund == 0.0:
        return math.inf
    s = 0.0
    for k in range(2, n_harm + 1):
        s += abs(fourier_component(t, x, f_o, k)) ** 2
    return math.sqrt(s) / fund


def trace_kpis(trace: Trace, window: int = 3) -> SimKpis:
    """Steady-state KPIs over the last `window` fundamental periods."""
    t_o = 1.0 / trace.f_o
    t = trace.t
    span = window * t_o
    if t[-1] - t[0] < span - 1e-12:
        raise DomainError("trace shorter than the KPI window")
    sel = t >= t[-1] - span
    tt = t[sel]

    mode = trace.meta.get("mode", "rectifier")
    if mode == "rectifier":
        # grid voltages are the ideal EMFs of the run
        op_ehat = trace.meta.get("e_hat")
        thd_vals = []
        p = 0.0
        s = 0.0
        for k, col in enumerate(["iAC_a_A", "iAC_b_A", "iAC_c_A"]):
            i = trace.col(col)[sel]
            e = op_ehat * np.cos(2 * math.pi * trace.f_o * tt - _TWO_PI_3 * k)
            thd_vals.append(thd(tt, i, trace.f_o))
            p += float(np.trapezoid(e * i, tt)) / (tt[-1] - tt[0])
            s += math.sqrt(float(np.trapezoid(e * e, tt)) / (tt[-1] - tt[0])) \
                * math.sqrt(float(np.trapezoid(i * i, tt)) / (tt[-1] - tt[0]))
        thd_i = max(thd_vals)
        pf = abs(p) / s if s > 0 else 0.0
    else:
        # distortion of the differential-mode output voltages
        vs = [trace.col(c)[sel] for c in ("vC_a_V", "vC_b_V", "vC_c_V")]
        cm = (vs[0] + vs[1] + vs[2]) / 3.0
        thd_i = max(thd(tt, v - cm, trace.f_o) for v in vs)
        pf = 1.0

    vdc = trace.col("vdc_V")[sel]
    v_mean = float(np.mean(vdc))
    ripple = 0.5 * (float(np.max(vdc)) - float(np.min(vdc))) / v_mean if v_mean else 0.0

    # powers from the audit accumulators over the window
    at = trace.audit_t
    a0 = np.searchsorted(at, t[-1] - span)
    a0 = min(a0, len(at) - 2)
    dt_a = at[-1] - at[a0]
    e = trace.audit
    p_in = (e[-1, 0] - e[a0, 0]) / dt_a
    p_out = (e[-1, 1] - e[a0, 1]) / dt_a
    p_loss = (e[-1, 2] - e[a0, 2]) / dt_a
    return SimKpis(thd_i=thd_i, pf=pf, v_dc_ripple=ripple,
                   p_in=p_in, p_out=p_out, p_loss=p_loss)


@dataclass
class SimKpis:
    thd_i: float
    pf: float
    v_dc_ripple: float
    p_in: float
    p_out: float
    p_loss: float

    def rows(self):
        return [("thd_i_frac", self.thd_i), ("pf_frac", self.pf),
                ("v_dc_ripple_frac", self.v_dc_ripple),
                ("p_in_W", self.p_in), ("p_out_W", self.p_out),
                ("p_loss_W", self.p_loss)]


def energy_audit_closure(trace: Trace, circuit: Circuit, periods: int = 1):
    """Relative energy-balance error over the trailing fundamental periods.

    |e_in - e_out - e_loss - delta_stored| / e_in for each of the last
    `periods` fundamentals; returns the worst.
    """
    t_o = 1.0 / trace.f_o
    at, a = trace.audit_t, trace.audit
    worst = 0.0
    for n in range(periods):
        t1 = at[-1] - n * t_o
        t0 = t1 - t_o
        j0 = int(np.searchsorted(at, t0))
        j1 = int(np.searchsorted(at, t1)) - 1
        j0 = max(0, min(j0, len(at) - 2))
        j1 = max(j0 + 1, min(j1, len(at) - 1))
        e_in = a[j1, 0] - a[j0, 0]
        e_out = a[j1, 1] - a[j0, 1]
        e_loss = a[j1, 2] - a[j0, 2]
        d_store = a[j1, 3] - a[j0, 3]
        ref = max(abs(e_in), abs(e_out), 1e-12)
        worst = max(worst, abs(e_in - e_out - e_loss - d_store) / ref)
    return worst
