"""Closed-form per-phase equations of the inverting buck-boost cell.

Everything here is quasi-steady-state algebra of a single phase module
(half-bridge + buck-boost inductor + AC-side capacitor) plus the
three-phase common-mode bookkeeping.  All other modules check their
numerics against these functions.

Sign convention: AC-side capacitor voltages are the physical node
voltages referenced to the negative DC rail and are therefore <= 0.
Per-phase magnitudes (|V_C|) are passed around as non-negative numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

class DomainError(ValueError):
    """Raised when an operating quantity is outside its physical domain."""


@dataclass(frozen=True)
class OperatingPoint:
    """Electrical point every calculation is evaluated at.

    v_dc       DC input voltage [V]
    v_ac_hat   AC phase voltage amplitude, referenced to star point [V]
    p_out      transferred power [W]
    f_o        fundamental frequency [Hz]
    f_s        nominal switching frequency [Hz]
    f_s_max    maximum switching frequency (variable-frequency cap) [Hz]
    """

    v_dc: float
    v_ac_hat: float
    p_out: float
    f_o: float
    f_s: float
    f_s_max: float = 0.0

    def __post_init__(self):
        for name in ("v_dc", "v_ac_hat", "p_out", "f_o", "f_s"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"OperatingPoint.{name} must be > 0")
        if self.f_s < 20.0 * self.f_o:
            raise DomainError("switching frequency must be >= 20x fundamental")
        if self.f_s_max and self.f_s_max < self.f_s:
            raise DomainError("f_s_max must be >= f_s")

    @property
    def i_ac_hat(self) -> float:
        """Phase current amplitude for the rated power, 2P/(3*Vhat)."""
        return 2.0 * self.p_out / (3.0 * self.v_ac_hat)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f_o


@dataclass(frozen=True)
class ConverterParams:
    """Passive / semiconductor parameters of one three-phase build.

    l_bb       buck-boost inductance per phase [H]
    c_ac       AC-side capacitance per phase [F]
    c_dc       DC-link capacitance [F]
    l_f        grid-side filter inductance (rectifier only) [H]
    r_load_dc  DC load resistance (rectifier only) [ohm]
    c_oss      effective half-bridge commutation capacitance [F]
    r_ds_on    on resistance per device at operating temperature [ohm]
    n_par      parallel devices per switch position
    dead_time  gate dead time; also the minimum realizable pulse [s]
    """

    l_bb: float
    c_ac: float
    c_dc: float
    l_f: float = 0.0
    r_load_dc: float = 0.0
    c_oss: float = 0.0
    r_ds_on: float = 0.0
    n_par: int = 1
    dead_time: float = 0.0
    min_on_time: float = 0.0   # modulator minimum pulse command; 0 = none

    def __post_init__(self):
        if self.l_bb <= 0 or self.c_ac <= 0 or self.c_dc <= 0:
            raise DomainError("l_bb, c_ac and c_dc must be > 0")
        if self.dead_time < 0 or self.min_on_time < 0:
            raise DomainError("dead_time and min_on_time must be >= 0")
        if self.n_par < 1:
            raise DomainError("n_par must be >= 1")

    @property
    def n_hb(self) -> int:
        """Devices per half-bridge (two switch positions in parallel)."""
        return 2 * self.n_par

    @property
    def r_on_effective(self) -> float:
        """Conduction-path resistance with parallel-device division."""
        return self.r_ds_on / self.n_par


@dataclass
class PhaseRefs:
    """Differential-mode / common-mode split of the AC capacitor references.

    total[i] = dm[i] + cm, all totals <= 0 under DPWM and exactly one
    total is zero when the maximum DM reference is unique.
    """

    dm: np.ndarray
    cm: float
    total: np.ndarray = field(init=False)
    clamped: int = field(init=False)
    boundary: bool = False

    def __post_init__(self):
        self.dm = np.asarray(self.dm, dtype=float)
        self.total = self.dm + self.cm
        self.clamped = int(np.argmax(self.dm))


def steady_duty(v_dc: float, v_an_abs: float) -> float:
    """Steady-state duty of the inverting buck-boost cell.

    d = |V_an| / (V_dc + |V_an|), from inductor volt-second balance.
    """
    if v_dc <= 0.0:
        raise DomainError("v_dc must be > 0")
    if v_an_abs < 0.0:
        raise DomainError("v_an_abs must be >= 0")
    return v_an_abs / (v_dc + v_an_abs)


def ripple_pkpk(v_dc: float, v_an_abs: float, l: float, f_s: float) -> float:
    """Peak-to-peak inductor current ripple at fixed switching frequency.

    I_pkpk = |V_an| V_dc / (L f_s (|V_an| + V_dc)); symmetric in the two
    voltages (parallel form).
    """
    if l <= 0.0 or f_s <= 0.0:
        raise DomainError("l and f_s must be > 0")
    if v_dc <= 0.0:
        raise DomainError("v_dc must be > 0")
    if v_an_abs < 0.0:
        raise DomainError("v_an_abs must be >= 0")
    return v_an_abs * v_dc / (l * f_s * (v_an_abs + v_dc))


def zvs_current_threshold(v_max: float, c_oss: float, l: float) -> float:
    """Minimum commutation current for a complete soft transition.

    i_o = V_max * sqrt(C_oss / L).  A commutation is fully soft only when
    the inductor current has the node-discharging polarity and magnitude
    of at least i_o.
    """
    if l <= 0.0:
        raise DomainError("l must be > 0")
    if v_max < 0.0 or c_oss < 0.0:
        raise DomainError("v_max and c_oss must be >= 0")
    return v_max * math.sqrt(c_oss / l)


def cm_offset_dpwm(dm_refs) -> PhaseRefs:
    """DPWM common-mode offset, V_CM = -max(DM refs).

    The phase holding the maximum DM reference ends up with zero total
    voltage (clamped).  Ties (sector boundary) clamp the lower phase
    index and set the boundary flag.
    """
    dm = np.asarray(dm_refs, dtype=float)
    if dm.shape != (3,) or not np.all(np.isfinite(dm)):
        raise DomainError("dm_refs must be three finite values")
    cm = -float(np.max(dm))
    refs = PhaseRefs(dm=dm, cm=cm)
    ties = np.isclose(dm, dm.max(), rtol=0.0, atol=1e-12)
    if ties.sum() > 1:
        refs.boundary = True
        refs.clamped = int(np.argmax(ties))
    return refs


def modulator_duty(v_l_ref: float, v_c_meas: float, v_dc: float):
    """Modulator equation, d = (|V_C| - V_L) / (|V_C| + V_dc).

    v_c_meas is the (non-positive) AC capacitor voltage.  The result is
    clamped to [0, 1]; saturation is reported as a flag, never an error,
    because controllers saturate transiently.
    Returns (duty, saturated).
    """
    if v_dc <= 0.0:
        raise DomainError("v_dc must be > 0")
    if v_c_meas > 0.0:
        raise DomainError("v_c_meas must be <= 0")
    raw = (abs(v_c_meas) - v_l_ref) / (abs(v_c_meas) + v_dc)
    sat = raw < 0.0 or raw > 1.0
    return min(max(raw, 0.0), 1.0), sat


# ---------------------------------------------------------------------------
# Three-phase reference construction


def dm_references(theta, v_hat: float) -> np.ndarray:
    """Balanced differential-mode references, phase a at cos(theta).

    Returns shape (3,) for scalar theta, (3, N) for arrays.
    """
    theta = np.asarray(theta, dtype=float)
    return np.stack([v_hat * np.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)])


def dpwm_phase_voltage(theta, v_hat: float) -> np.ndarray:
    """Total phase-a capacitor voltage under DPWM (<= 0), vectorised."""
    theta = np.asarray(theta, dtype=float)
    dm = np.stack([v_hat * np.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)])
    return dm[0] - dm.max(axis=0)


def dpwm_phase_voltage_slope(theta, v_hat: float, omega: float) -> np.ndarray:
    """Analytic d/dt of the DPWM phase-a voltage (piecewise per sector)."""
    theta = np.asarray(theta, dtype=float)
    dm_dot = np.stack(
        [-v_hat * omega * np.sin(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    )
    dm = np.stack([v_hat * np.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)])
    kmax = dm.argmax(axis=0)
    take = np.take_along_axis(dm_dot, kmax[None, ...], axis=0)[0]
    return dm_dot[0] - take


def inductor_envelope(t, op: OperatingPoint, params: ConverterParams,
                      include_cap_current: bool = True):
    """Inductor current envelope of phase a under DPWM references.

    i_ripple(t) = V_dc |V_Ca| / (2 f_s L (V_dc + |V_Ca|))
    i_avg(t)    = (I_a + C dV_Ca/dt) (1 + |V_Ca| / V_dc)
    i_pk(t)     = i_ripple + i_avg

    The capacitive term is the analytic capacitor current of the
    sinusoidal output, C dV_DM/dt.  The common-mode corner of the DPWM
    reference also drives a brief capacitor current at clamp handover,
    but that is a commutation-interval effect (removed by CM smoothing)
    and is not part of the fundamental-frequency envelope.
    Returns (i_avg, i_ripple, i_pk) with the shape of t.  i_avg is
    signed; i_pk is the envelope magnitude i_ripple + |i_avg| (the sum
    form holds directly wherever the average is positive).
    """
    t = np.asarray(t, dtype=float)
    theta = op.omega * t
    v_ca = dpwm_phase_voltage(theta, op.v_ac_hat)
    x = -v_ca
    i_a = op.i_ac_hat * np.cos(theta)
    if include_cap_current:
        i_a = i_a - params.c_ac * op.v_ac_hat * op.omega * np.sin(theta)
    i_avg = i_a * (1.0 + x / op.v_dc)
    i_ripple = 0.5 * op.v_dc * x / (params.l_bb * op.f_s * (op.v_dc + x))
    return i_avg, i_ripple, i_ripple + np.abs(i_avg)


def envelope_peak(op: OperatingPoint, params: ConverterParams,
                  n: int = 20001, include_cap_current: bool = True) -> float:
    """Maximum of the envelope magnitude over one fundamental period."""
    t = np.linspace(0.0, 1.0 / op.f_o, n, endpoint=False)
    _, _, i_pk = inductor_envelope(t, op, params, include_cap_current)
    return float(np.max(i_pk))


# ---------------------------------------------------------------------------
# Amplitude-invariant Park transform (zero sequence reported separately)

_K = 2.0 / 3.0
_SHIFT = np.array([0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0])


def abc_dq(abc, theta: float):
    """abc -> (d, q, zero).  Amplitude-invariant: a balanced cos set of
    amplitude A aligned with theta maps to d = A."""
    abc = np.asarray(abc, dtype=float)
    c = np.cos(theta - _SHIFT)
    s = np.sin(theta - _SHIFT)
    d = _K * float(np.dot(abc, c))
    q = -_K * float(np.dot(abc, s))
    zero = float(np.mean(abc))
    return d, q, zero


def dq_abc(d: float, q: float, theta: float) -> np.ndarray:
    """(d, q) -> abc, inverse of abc_dq with zero sequence discarded."""
    c = np.cos(theta - _SHIFT)
    s = np.sin(theta - _SHIFT)
    return d * c - q * s
