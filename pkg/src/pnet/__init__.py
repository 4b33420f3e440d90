"""Optimal linear-function estimation with photonic sensor networks.

Bounds, protocol synthesis and simulation for estimating ``q = alpha . theta``
from phase- or displacement-coupled sensing modes.
"""
from .bounds import (
    bound_report,
    entangled_displacement_bound,
    entangled_phase_bound,
    min_entanglement,
    separable_displacement_bound,
    separable_phase_bound,
    separable_photon_allocation,
    solve_beta_star_phase,
)
from .coremath import CoefficientVector, QfiMatrix, partition_signs, restricted_one_norm, schatten_p
from .design import (
    OmegaSet,
    ProtocolSchedule,
    build_omega_set,
    check_saturation_phase,
    check_saturation_quad,
    design_schedule,
    entanglement_per_pass,
    feasibility_precheck,
    schedule_qfi_analytic,
    solve_schedule,
)
from .errors import InconclusiveError, InfeasibleError, PnetError, ValidationError, VerificationError
from .fock import FockState, make_probe, qfi_numeric_schedule, qfi_numeric_static

__version__ = "0.1.0"

__all__ = [
    "CoefficientVector",
    "FockState",
    "InconclusiveError",
    "InfeasibleError",
    "OmegaSet",
    "PnetError",
    "ProtocolSchedule",
    "QfiMatrix",
    "ValidationError",
    "VerificationError",
    "bound_report",
    "build_omega_set",
    "check_saturation_phase",
    "check_saturation_quad",
    "design_schedule",
    "entangled_displacement_bound",
    "entangled_phase_bound",
    "entanglement_per_pass",
    "feasibility_precheck",
    "make_probe",
    "min_entanglement",
    "partition_signs",
    "qfi_numeric_schedule",
    "qfi_numeric_static",
    "restricted_one_norm",
    "schatten_p",
    "schedule_qfi_analytic",
    "separable_displacement_bound",
    "separable_phase_bound",
    "separable_photon_allocation",
    "solve_beta_star_phase",
    "solve_schedule",
]
