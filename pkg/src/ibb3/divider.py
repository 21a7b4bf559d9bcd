"""Differential-amplifier voltage measurement scaling.

V_out = V+ * (R_n1 + R_f) / R_n1 - V_n * R_f / R_n1 with the
non-inverting node divided as V+ = (V_p R_p2 + phi R_p1)/(R_p1 + R_p2).
With symmetric ratios R_p2/R_p1 = R_f/R_n1 = r this collapses to
V_out = r (V_p - V_n) + phi.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DomainError


@dataclass(frozen=True)
class DividerSpec:
    r_p1: float
    r_p2: float
    r_n1: float
    r_f: float
    phi: float = 0.0
    v_in_range: tuple = (0.0, 0.0)
    v_out_range: tuple = (0.0, 3.0)

    def __post_init__(self):
        if min(self.r_p1, self.r_p2, self.r_n1, self.r_f) <= 0:
            raise DomainError("resistances must be > 0")


def opv_output(v_p: float, v_n: float, spec: DividerSpec) -> float:
    """Amplifier output for the two input node voltages."""
    v_plus = (v_p * spec.r_p2 + spec.phi * spec.r_p1) / (spec.r_p1 + spec.r_p2)
    return v_plus * (spec.r_n1 + spec.r_f) / spec.r_n1 - v_n * spec.r_f / spec.r_n1


def design_divider(in_range, out_range, phi: float = None,
                   r_base: float = 500e3) -> DividerSpec:
    """Solve symmetric resistor ratios mapping in_range onto out_range.

    The differential input (V_p - V_n) spans in_range; the output must
    span out_range inside the [0, 3] V rails.  With symmetric ratios the
    map is V_out = r dV + phi, so r = span_out/span_in and phi is the
    output at dV = 0.  phi can be forced (e.g. 1.2 V for AC sensing); a
    mismatch with the requested ranges is an error.
    """
    in_lo, in_hi = map(float, in_range)
    out_lo, out_hi = map(float, out_range)
    if in_hi == in_lo:
        raise DomainError("degenerate input range")
    r = (out_hi - out_lo) / (in_hi - in_lo)
    if r <= 0:
        raise DomainError("output range must move with the input range")
    phi_needed = out_lo - r * in_lo
    if phi is None:
        phi = phi_needed
    elif abs(phi - phi_needed) > 1e-9 * max(1.0, abs(phi_needed)):
        raise DomainError(
            f"requested phi {phi} cannot reach the output range "
            f"(needs {phi_needed:.6g})")
    lo = r * in_lo + phi
    hi = r * in_hi + phi
    if min(lo, hi) < -1e-9 or max(lo, hi) > 3.0 + 1e-9:
        raise DomainError("mapped output leaves the [0, 3] V rails")
    spec = DividerSpec(r_p1=r_base, r_p2=r * r_base, r_n1=r_base,
                       r_f=r * r_base, phi=phi,
                       v_in_range=(in_lo, in_hi), v_out_range=(out_lo, out_hi))
    return spec
