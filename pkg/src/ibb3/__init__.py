"""Three-phase inverting buck-boost AC/DC converter toolkit.

Modulation synthesis and comparison, switched time-domain simulation
with cascaded DPWM control, semiconductor loss and thermal chains, and
magnetics / cooling / measurement sizing calculators.
"""

from .core import (
    ConverterParams,
    DomainError,
    OperatingPoint,
    PhaseRefs,
    abc_dq,
    cm_offset_dpwm,
    dq_abc,
    inductor_envelope,
    modulator_duty,
    ripple_pkpk,
    steady_duty,
    zvs_current_threshold,
)
from .modulation import (
    ModulationKpis,
    ModulationProfile,
    Scheme,
    SwitchingTransition,
    TransitionKind,
    classify_transitions,
    profile_kpis,
    synthesize,
)

__all__ = [
    "ConverterParams", "DomainError", "OperatingPoint", "PhaseRefs",
    "abc_dq", "cm_offset_dpwm", "dq_abc", "inductor_envelope",
    "modulator_duty", "ripple_pkpk", "steady_duty", "zvs_current_threshold",
    "ModulationKpis", "ModulationProfile", "Scheme", "SwitchingTransition",
    "TransitionKind", "classify_transitions", "profile_kpis", "synthesize",
]

__version__ = "0.1.0"
