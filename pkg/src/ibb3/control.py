"""Cascaded control for the three-phase inverting buck-boost converter.

Rectifier cascade (outer to inner): DC-voltage PI -> dq grid-current
PIs -> abc capacitor-voltage PIs -> buck-boost inductor-current PIs ->
per-phase modulator.  The common-mode reference follows the DPWM rule
with an optional smoothing window around clamp handover, where the CM
corner is replaced by a C1 half-cosine blend and all three phases run.

The inverter reuses the two inner loops with externally supplied
capacitor-voltage DM references.

Loop bandwidths are derived from the plant constants with a fixed
ratio (default 4) between adjacent loops; every gain can be overridden.
All integrators use conditional anti-windup (no integration while the
modulator pushes further into saturation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    ConverterParams,
    DomainError,
    OperatingPoint,
    abc_dq,
    cm_offset_dpwm,
    dq_abc,
    modulator_duty,
)

_SHIFT = np.array([0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0])


@dataclass
class PiGains:
    kp: float
    ki: float
    lo: float = -math.inf
    hi: float = math.inf


class Pi:
    """PI with conditional anti-windup and output limits."""

    def __init__(self, gains: PiGains):
        self.g = gains
        self.integ = 0.0

    def step(self, err: float, dt: float) -> float:
        raw = self.g.kp * err + self.integ
        saturated_hi = raw > self.g.hi
        saturated_lo = raw < self.g.lo
        if not ((saturated_hi and err > 0.0) or (saturated_lo and err < 0.0)):
            self.integ += self.g.ki * err * dt
            raw = self.g.kp * err + self.integ
        return min(max(raw, self.g.lo), self.g.hi)


@dataclass
class SmoothingConfig:
    enabled: bool = True
    v_var: float = 0.0    # volts; 0 -> 12 % of the DM amplitude estimate


@dataclass
class ControllerConfig:
    """Bandwidths in Hz per loop; gains from magnitude-optimum-style
    rules on the plant constants unless overridden."""

    f_ctrl: float
    bw_i_l: float
    bw_v_c: float
    bw_i_grid: float
    bw_v_dc: float
    bw_pll: float = 80.0
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    gains_override: dict = field(default_factory=dict)

    @classmethod
    def from_plant(cls, op: OperatingPoint, params: ConverterParams,
                   ratio: float = 4.0, bw_inner: Optional[float] = None,
                   **kw) -> "ControllerConfig":
        if ratio < 4.0:
            raise DomainError("cascade bandwidth ratio must be >= 4")
        f_ctrl = op.f_s
        bw1 = bw_inner if bw_inner else f_ctrl / 14.0
        return cls(f_ctrl=f_ctrl, bw_i_l=bw1, bw_v_c=bw1 / ratio,
                   bw_i_grid=bw1 / ratio ** 2, bw_v_dc=bw1 / ratio ** 3, **kw)

    def bandwidths(self):
        return (self.bw_i_l, self.bw_v_c, self.bw_i_grid, self.bw_v_dc)


@dataclass
class PllState:
    theta: float = 0.0
    omega: float = 0.0
    integ: float = 0.0
    seeded: bool = False


class Pll:
    """Synchronous-reference-frame PLL on the DM part of a 3-phase set."""

    def __init__(self, f_nominal: float, bandwidth: float = 80.0):
        w0 = 2.0 * math.pi * f_nominal
        # the integrator holds the tracked frequency
        self.state = PllState(omega=w0, integ=w0)
        wn = 2.0 * math.pi * bandwidth
        self.kp = 2.0 * 1.0 * wn          # zeta = 1
        self.ki = wn * wn

    def step(self, v_abc, dt: float):
        st = self.state
        v = np.asarray(v_abc, dtype=float)
        v = v - v.mean()                   # discard CM
        amp = math.sqrt(2.0 / 3.0 * float(np.dot(v, v)))
        if amp < 1e-9:
            st.theta = (st.theta + st.omega * dt) % (2.0 * math.pi)
            return st.theta, st.omega      # free-wheel on dead input
        if not st.seeded:
            st.theta = math.atan2(-float(np.dot(v, np.sin(_SHIFT))),
                                  float(np.dot(v, np.cos(_SHIFT))))
            st.seeded = True
        _, q, _ = abc_dq(v, st.theta)
        err = q / amp
        st.integ += self.ki * err * dt
        st.omega = st.integ + self.kp * err
        omega_inst = st.omega
        st.theta = (st.theta + omega_inst * dt) % (2.0 * math.pi)
        return st.theta, omega_inst


def pll_step(v_grid_abc, pll: Pll, dt: float):
    """Functional wrapper matching the operation signature."""
    return pll.step(v_grid_abc, dt)


# ---------------------------------------------------------------------------
# CM smoothing

def _smooth_max(dm: np.ndarray, v_var: float):
    """C1 smoothed maximum of the two largest DM references.

    Within |p - q| < v_var the corner of max(p, q) is replaced by the
    half-cosine blend (p+q)/2 + (v_var/2) psi(u), psi(u) =
    1 - (2/pi) cos(pi u / 2), which matches value and slope at the
    window edges and never drops below the true maximum.
    Returns (smoothed_max, window_active).
    """
    order = np.argsort(dm)[::-1]
    p, q = dm[order[0]], dm[order[1]]
    if v_var <= 0.0 or (p - q) >= v_var:
        return p, False
    u = (p - q) / v_var
    psi = 1.0 - (2.0 / math.pi) * math.cos(0.5 * math.pi * u)
    return 0.5 * (p + q) + 0.5 * v_var * psi, True


@dataclass
class SmoothedRefs:
    dm: np.ndarray
    cm: float
    total: np.ndarray
    clamped: int           # designator x (argmax of dm)
    window_active: bool
    active_set: tuple      # phases driven by the modulator
    d_total: np.ndarray = None   # analytic d/dt of total, when ddm given


def cm_smoothing(dm_refs, v_var: float, state=None, ddm_refs=None) -> SmoothedRefs:
    """DPWM common-mode reference with smooth clamp handover.

    Outside the window this equals the plain DPWM offset (one phase
    clamped).  Inside, the CM follows the blended corner, all totals
    stay strictly negative and all three phases are driven.  When the
    DM reference slopes are supplied, the analytic d/dt of the totals
    comes back too (for capacitor-current feedforward).
    """
    if v_var <= 0.0:
        raise DomainError("v_var must be > 0")
    dm = np.asarray(dm_refs, dtype=float)
    order = np.argsort(dm)[::-1]
    p, q = dm[order[0]], dm[order[1]]
    active = (p - q) < v_var
    if active:
        u = (p - q) / v_var
        psi = 1.0 - (2.0 / math.pi) * math.cos(0.5 * math.pi * u)
        m = 0.5 * (p + q) + 0.5 * v_var * psi
    else:
        m = p
    cm = -m
    total = dm + cm
    clamped = int(order[0])
    d_total = None
    if ddm_refs is not None:
        ddm = np.asarray(ddm_refs, dtype=float)
        dp, dq_ = ddm[order[0]], ddm[order[1]]
        if active:
            dpsi = math.sin(0.5 * math.pi * u)      # psi'(u)
            dm_dt = 0.5 * (dp + dq_) + 0.5 * dpsi * (dp - dq_)
        else:
            dm_dt = dp
        d_total = ddm - dm_dt
    if active:
        return SmoothedRefs(dm, cm, total, clamped, True, (0, 1, 2), d_total)
    total[clamped] = 0.0
    if d_total is not None:
        d_total[clamped] = 0.0
    others = tuple(k for k in range(3) if k != clamped)
    return SmoothedRefs(dm, cm, total, clamped, False, others, d_total)


# ---------------------------------------------------------------------------
# Rectifier controller

class RectifierController:
    """Four-loop DPWM rectifier control; one update per switching period."""

    def __init__(self, op: OperatingPoint, params: ConverterParams,
                 cfg: Optional[ControllerConfig] = None,
                 v_dc_ref: Optional[float] = None):
        self.op = op
        self.params = params
        self.cfg = cfg if cfg else ControllerConfig.from_plant(op, params)
        self.v_dc_ref = v_dc_ref if v_dc_ref else op.v_dc
        c = self.cfg

        def w(hz):
            return 2.0 * math.pi * hz

        ov = c.gains_override
        i_max = 6.0 * op.i_ac_hat
        # second-order design on the C_dc plant, zeta = 1
        wn = w(c.bw_v_dc)
        self.pi_vdc = Pi(PiGains(
            kp=ov.get("kp_vdc", 2.0 * params.c_dc * wn),
            ki=ov.get("ki_vdc", params.c_dc * wn * wn),
            lo=-i_max, hi=i_max))
        self.pi_id = Pi(PiGains(
            kp=ov.get("kp_ig", params.l_f * w(c.bw_i_grid)),
            ki=ov.get("ki_ig", params.l_f * w(c.bw_i_grid) ** 2 / 4.0),
            lo=-0.5 * op.v_ac_hat, hi=0.5 * op.v_ac_hat))
        self.pi_iq = Pi(PiGains(
            kp=ov.get("kp_ig", params.l_f * w(c.bw_i_grid)),
            ki=ov.get("ki_ig", params.l_f * w(c.bw_i_grid) ** 2 / 4.0),
            lo=-0.5 * op.v_ac_hat, hi=0.5 * op.v_ac_hat))
        self.pi_vc = [Pi(PiGains(
            kp=ov.get("kp_vc", params.c_ac * w(c.bw_v_c)),
            ki=ov.get("ki_vc", params.c_ac * w(c.bw_v_c) ** 2 / 4.0),
            lo=-3.0 * op.i_ac_hat, hi=3.0 * op.i_ac_hat)) for _ in range(3)]
        v_l_max = 0.8 * op.v_dc
        self.pi_il = [Pi(PiGains(
            kp=ov.get("kp_il", params.l_bb * w(c.bw_i_l)),
            ki=ov.get("ki_il", params.l_bb * w(c.bw_i_l) ** 2 / 4.0),
            lo=-v_l_max, hi=v_l_max)) for _ in range(3)]
        self.pll = Pll(op.f_o, c.bw_pll)
        self._v_hat_est = op.v_ac_hat
        self._prev_total = None
        self._last_duty = np.zeros(3)
        self._was_ff = np.zeros(3, dtype=bool)
        # DC-link measurement filter: keeps the switching/handover ripple
        # of the small C_dc out of the power reference (it would come back
        # as low-order grid-current harmonics)
        self._v_dc_f = None
        self._a_vdc = min(1.0, 2.0 * math.pi * 300.0 / c.f_ctrl)
        # dq-frame measurement filters: the fundamental maps to DC, so
        # filtering costs no steady-state phase; it keeps the L_f-C
        # resonance out of the reference chain
        self._vdq = np.array([op.v_ac_hat, 0.0])
        self._idq = np.array([op.i_ac_hat, 0.0])
        self._a_v = min(1.0, 2.0 * math.pi * 120.0 / c.f_ctrl)
        self._a_i = min(1.0, 2.0 * math.pi * 1000.0 / c.f_ctrl)
        self.saturation_flags = np.zeros(3, dtype=bool)
        self.last = {}

    # -- helpers -----------------------------------------------------------
    N_WINDOW_PERIODS = 8.0

    def _v_var(self) -> float:
        """Smoothing threshold; the default sizes the handover window to
        span a fixed number of control periods: the top-two DM refs
        diverge at sqrt(3) V_hat omega, so v_var = n T_ctrl sqrt(3)
        V_hat omega / 2."""
        sm = self.cfg.smoothing
        if not sm.enabled:
            return -1.0
        if sm.v_var > 0:
            return sm.v_var
        w = 2.0 * math.pi * self.op.f_o
        return 0.5 * self.N_WINDOW_PERIODS * math.sqrt(3.0) \
            * self._v_hat_est * w / self.cfg.f_ctrl

    def step(self, meas: dict, dt: float) -> tuple:
        """One control update; returns (duties[3], info)."""
        v_dc = max(meas["v_dc"], 1.0)   # sensor floor; modulator needs > 0
        v_c = np.asarray(meas["v_c_abc"], dtype=float)
        i_g = np.asarray(meas["i_grid_abc"], dtype=float)
        i_l = np.asarray(meas["i_l_abc"], dtype=float)
        i_load = meas.get("i_load_dc", 0.0)

        # grid synchronisation from the DM part of the cap voltages
        theta, omega = self.pll.step(v_c, dt)
        v_dm = v_c - v_c.mean()
        v_dq_raw = abc_dq(v_dm, theta)
        self._vdq += self._a_v * (np.array(v_dq_raw[:2]) - self._vdq)
        v_d, v_q = self._vdq
        self._v_hat_est = math.hypot(v_d, v_q)

        # outer DC-voltage loop -> active-power current reference; the
        # load-current feedforward gets the same measurement filter so
        # DC-link ripple does not feed the power reference
        if self._v_dc_f is None:
            self._v_dc_f = v_dc
            self._i_load_f = i_load
        self._v_dc_f += self._a_vdc * (v_dc - self._v_dc_f)
        self._i_load_f += self._a_vdc * (i_load - self._i_load_f)
        i_corr = self.pi_vdc.step(self.v_dc_ref - self._v_dc_f, dt)
        i_tdc_ref = i_corr + self._i_load_f
        p_ref = self.v_dc_ref * i_tdc_ref
        i_d_ref = 2.0 * p_ref / (3.0 * max(self._v_hat_est, 1.0))
        i_q_ref = 0.0

        # dq grid-current loops with decoupling
        i_dq_raw = abc_dq(i_g, theta)
        self._idq += self._a_i * (np.array(i_dq_raw[:2]) - self._idq)
        i_d, i_q = self._idq
        v_ld = self.pi_id.step(i_d_ref - i_d, dt) - omega * self.params.l_f * i_q
        v_lq = self.pi_iq.step(i_q_ref - i_q, dt) + omega * self.params.l_f * i_d

        # capacitor-voltage DM references: grid estimate minus the
        # commanded filter-inductor drop.  Clamp/window decisions and the
        # PI errors track the present angle; the feedforward terms are
        # evaluated half a control period ahead, the middle of the
        # interval the computed duties act over.
        vd_ref, vq_ref = v_d - v_ld, v_q - v_lq
        dm_ref = dq_abc(vd_ref, vq_ref, theta)
        ddm_ref = omega * dq_abc(-vq_ref, vd_ref, theta)
        th_mid = theta + 0.5 * omega * dt
        dm_mid = dq_abc(vd_ref, vq_ref, th_mid)
        ddm_mid = omega * dq_abc(-vq_ref, vd_ref, th_mid)
        # AC-node current feedforward for the inner cascade comes from the
        # current references, not the raw measurement: the measured grid
        # current with one-period delay forms a positive-feedback path
        # around the undamped L_f-C resonance
        i_ff = dq_abc(i_d_ref, i_q_ref, th_mid)
        return self._inner(dm_ref, v_c, i_ff, i_l, v_dc, dt,
                           ddm_ref=ddm_ref, dm_mid=dm_mid, ddm_mid=ddm_mid,
                           extra={"theta": theta, "omega": omega,
                                  "i_d_ref": i_d_ref, "i_d": i_d, "i_q": i_q})

    def _inner(self, dm_ref, v_c, i_ac, i_l, v_dc, dt, ddm_ref=None,
               dm_mid=None, ddm_mid=None, extra=None):
        """Shared capacitor-voltage + inductor-current cascade.

        i_ac is the AC-node input current feedforward (grid current for
        the rectifier, minus load current for the inverter); dm_mid and
        ddm_mid are the reference values and slopes at the middle of the
        acting interval, used for the feedforward path only.
        """
        v_var = self._v_var()
        if v_var > 0:
            refs = cm_smoothing(dm_ref, v_var, ddm_refs=ddm_ref)
            refs_mid = refs if dm_mid is None else \
                cm_smoothing(dm_mid, v_var, ddm_refs=ddm_mid)
        else:
            r = cm_offset_dpwm(dm_ref)
            refs = SmoothedRefs(r.dm, r.cm, r.total, r.clamped, False,
                                tuple(k for k in range(3) if k != r.clamped))
            refs_mid = refs

        # feed-forward capacitor current from the reference trajectory:
        # analytic slope when provided, discrete difference otherwise
        if refs_mid.d_total is not None:
            dref = refs_mid.d_total
        elif self._prev_total is None:
            dref = np.zeros(3)
        else:
            dref = (refs.total - self._prev_total) / dt
        self._prev_total = refs.total.copy()
        total_mid = refs_mid.total if dm_mid is not None else refs.total

        # the clamp-handover pair runs on pure feedforward inside the
        # smoothing window: their capacitor is barely controllable there
        # and the measured voltage is commutation garbage, so the voltage
        # PI is frozen and the modulator linearises around the reference
        handover = set()
        if refs.window_active:
            order = np.argsort(refs.dm)[::-1]
            handover = {int(order[0]), int(order[1])}

        duties = np.zeros(3)
        self.saturation_flags[:] = False
        i_l_refs = np.zeros(3)
        i_t_refs = np.zeros(3)
        for k in range(3):
            if k not in refs.active_set:
                duties[k] = 0.0
                self.pi_vc[k].integ = 0.0
                self._was_ff[k] = False
                continue
            feedforward = k in handover
            if feedforward:
                dref_k = refs.d_total[k] if refs.d_total is not None else dref[k]
                i_c_ref = self.params.c_ac * dref_k
                v_mod = refs.total[k]
            else:
                if self._was_ff[k]:
                    # bumpless hand-back from window feedforward: start the
                    # voltage PI where its output continues the FF value
                    self.pi_vc[k].integ = \
                        -self.pi_vc[k].g.kp * (refs.total[k] - v_c[k])
                i_c_ref = self.params.c_ac * dref[k] \
                    + self.pi_vc[k].step(refs.total[k] - v_c[k], dt)
                v_mod = min(v_c[k], 0.0)
            self._was_ff[k] = feedforward
            # average AC-switch current demand and Eq-scaling to the inductor
            i_t_ref = i_ac[k] - i_c_ref
            x = abs(v_mod)
            i_l_ref = i_t_ref * (1.0 + x / max(v_dc, 1.0))
            i_t_refs[k] = i_t_ref
            i_l_refs[k] = i_l_ref
            # regular sampling at the cycle start reads the ripple valley;
            # shift to the local average with the analytic half ripple
            i_l_meas = i_l[k]
            if self._last_duty[k] > 0.0:
                i_l_meas += 0.5 * v_dc * x / (self.params.l_bb
                                              * self.cfg.f_ctrl * (v_dc + x))
            v_l_ref = -self.pi_il[k].step(i_l_ref - i_l_meas, dt)
            duties[k], sat = modulator_duty(v_l_ref, v_mod, v_dc)
            self.saturation_flags[k] = sat
        self._last_duty = duties.copy()

        info = {"clamped_phase": refs.clamped,
                "window_active": refs.window_active,
                "cm": refs.cm,
                "i_l_refs": i_l_refs, "i_t_refs": i_t_refs,
                "saturated": self.saturation_flags.copy()}
        if extra:
            info.update(extra)
        self.last = info
        return duties, info


def inductor_current_reference(i_c_ref: float, i_ac: float, v_c_abs: float,
                               v_dc: float) -> float:
    """Average-inductor-current reference from the AC-switch demand.

    i_L* = (i_C* - i) (1 + |V_C| / V_dc): the AC-switch average must
    cover the capacitor-current demand net of the AC-node current, and
    the average inductor current exceeds it by 1/(1 - d).
    """
    if v_dc <= 0:
        raise DomainError("v_dc must be > 0")
    return (i_c_ref - i_ac) * (1.0 + v_c_abs / v_dc)


class InverterController:
    """Inner cascade only: track externally supplied DM voltage refs."""

    def __init__(self, op: OperatingPoint, params: ConverterParams,
                 cfg: Optional[ControllerConfig] = None,
                 v_hat_ref: Optional[float] = None):
        self._rect = RectifierController(op, params, cfg)
        self.op = op
        self.v_hat_ref = v_hat_ref if v_hat_ref else op.v_ac_hat

    def set_amplitude(self, v_hat: float):
        self.v_hat_ref = v_hat

    def step(self, meas: dict, dt: float) -> tuple:
        t = meas.get("t", 0.0)
        theta = self.op.omega * t
        th_mid = self.op.omega * (t + 0.5 * dt)
        dm_ref = self.v_hat_ref * np.cos(theta - _SHIFT)
        ddm_ref = -self.v_hat_ref * self.op.omega * np.sin(theta - _SHIFT)
        dm_mid = self.v_hat_ref * np.cos(th_mid - _SHIFT)
        ddm_mid = -self.v_hat_ref * self.op.omega * np.sin(th_mid - _SHIFT)
        i_load = np.asarray(meas["i_load_abc"], dtype=float)
        self._rect._v_hat_est = self.v_hat_ref
        return self._rect._inner(dm_ref, np.asarray(meas["v_c_abc"], float),
                                 -i_load, np.asarray(meas["i_l_abc"], float),
                                 meas["v_dc"], dt, ddm_ref=ddm_ref,
                                 dm_mid=dm_mid, ddm_mid=ddm_mid)


class RectifierDriver:
    """Adapter binding a RectifierController to the simulator run loop."""

    def __init__(self, controller: RectifierController, f_ctrl: float):
        self.ctl = controller
        self.dt = 1.0 / f_ctrl

    def step(self, t, meas):
        duties, info = self.ctl.step(meas, self.dt)
        return duties, info


class InverterDriver:
    def __init__(self, controller: InverterController, f_ctrl: float):
        self.ctl = controller
        self.dt = 1.0 / f_ctrl

    def step(self, t, meas):
        meas = dict(meas)
        meas["t"] = t
        duties, info = self.ctl.step(meas, self.dt)
        return duties, info
