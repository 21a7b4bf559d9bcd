"""Component sizing and design-space exploration helpers.

AC capacitor ceiling, area-product magnetics estimate, the inductor
dimensioning sweep over DC voltage, and Pareto selection over
(volume, loss) design clouds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ConverterParams, DomainError, OperatingPoint, inductor_envelope
from .magnetics import DesignPoint


def ac_cap_limit(i_o_hat: float, omega_o: float, v_o_hat: float,
                 fraction: float = 0.2) -> float:
    """Maximum AC-side capacitance bounding the reactive current.

    C_max = fraction * Ihat / (omega Vhat); fraction defaults to 20 %
    of the load current amplitude.
    """
    if i_o_hat < 0 or fraction < 0:
        raise DomainError("current and fraction must be >= 0")
    if omega_o <= 0 or v_o_hat <= 0:
        raise DomainError("omega_o and v_o_hat must be > 0")
    return fraction * i_o_hat / (omega_o * v_o_hat)


def area_product(l: float, i_pk: float, i_rms: float, k_factor: float) -> float:
    """Core-window area product estimate, A_c A_w = L I_pk I_rms / k.

    k_factor is the composite fill * J_max * B_max (units 1/(m^4) per
    H A^2 scale); only ratios between candidates are meaningful unless
    k_factor is carefully chosen.
    """
    if min(l, i_pk, i_rms) < 0 or k_factor <= 0:
        raise DomainError("inputs must be >= 0 and k_factor > 0")
    return l * i_pk * i_rms / k_factor


@dataclass
class SweepCurve:
    l: float
    v_dc: np.ndarray
    i_pk: np.ndarray
    i_rms: np.ndarray

    @property
    def argmax_i_pk(self) -> float:
        return float(self.v_dc[int(np.argmax(self.i_pk))])

    @property
    def argmax_i_rms(self) -> float:
        return float(self.v_dc[int(np.argmax(self.i_rms))])

    @property
    def argmax_product(self) -> float:
        return float(self.v_dc[int(np.argmax(self.i_pk * self.i_rms))])


def dimensioning_sweep(op_template: OperatingPoint, params: ConverterParams,
                       l_set, v_dc_range, n_theta: int = 4001,
                       include_cap_current: bool = True) -> list:
    """I_pk and I_rms envelope curves versus DC voltage per inductance.

    The AC point (amplitude, power, switching frequency) is held at the
    template values; only v_dc and l_bb vary.  I_pk is the maximum of
    the analytic envelope, I_rms the rms of local average plus
    triangular ripple.
    """
    v_dc_range = np.asarray(v_dc_range, dtype=float)
    t = np.linspace(0.0, 1.0 / op_template.f_o, n_theta, endpoint=False)
    curves = []
    for l in l_set:
        p = replace(params, l_bb=float(l))
        i_pk = np.empty_like(v_dc_range)
        i_rms = np.empty_like(v_dc_range)
        for j, v in enumerate(v_dc_range):
            op = replace(op_template, v_dc=float(v))
            avg, rip, pk = inductor_envelope(t, op, p, include_cap_current)
            i_pk[j] = np.max(np.abs(pk))
            i_rms[j] = math.sqrt(float(np.mean(avg ** 2 + (2.0 * rip) ** 2 / 12.0)))
        curves.append(SweepCurve(float(l), v_dc_range.copy(), i_pk, i_rms))
    return curves


def pareto_front(points) -> list:
    """Non-dominated subset in (volume, p_loss), infeasible excluded.

    A point is dominated when another feasible point is <= in both
    coordinates and strictly < in at least one.
    """
    feas = [p for p in points if p.feasible]
    out = []
    for p in feas:
        dominated = False
        for q in feas:
            if q is p:
                continue
            if (q.volume <= p.volume and q.p_loss <= p.p_loss
                    and (q.volume < p.volume or q.p_loss < p.p_loss)):
                dominated = True
                break
        if not dominated:
            out.append(p)
    return out


def select_min_product(points):
    """argmin volume*loss over feasible points; smaller volume breaks ties."""
    feas = [p for p in points if p.feasible]
    if not feas:
        return None
    return min(feas, key=lambda p: (p.volume * p.p_loss, p.volume))


def pareto_and_select(points, rule: str = "pareto"):
    """Either the Pareto subset or the minimum volume-loss product design.

    Returns a list for rule="pareto", a single DesignPoint (or None when
    nothing is feasible) for rule="min-volume-loss-product".
    """
    if rule == "pareto":
        return pareto_front(points)
    if rule == "min-volume-loss-product":
        return select_min_product(points)
    raise DomainError(f"unknown selection rule: {rule}")
