"""Fock-space simulation of photon-number/polarization qutrit entanglement swapping."""

from .analysis import (
    SweepRecord,
    analytic_ps_pattern,
    analytic_ps_total,
    crossover_p,
    loss_audit,
    optimal_p,
    rate_qutrit,
    rate_type1,
    rate_type2,
    sweep,
)
from .fock import (
    Ensemble,
    JointBasisState,
    MemoryDensity,
    PureState,
    apply_annihilation,
    apply_creation,
    apply_mode_unitary,
    entanglement_entropy,
    inner_product,
    partial_trace_to_memory,
)
from .optics import (
    LossChannel,
    ModeUnitary,
    apply_loss,
    beamsplitter,
    bell_interferometer_blockform,
    bell_interferometer_circuit,
    bell_interferometer_polarization,
    hwp,
    pbs,
)
from .protocol import (
    DetectionPattern,
    Detector,
    HeraldedOutcome,
    MeasurementOperator,
    ProtocolParams,
    alpha_balanced,
    enumerate_patterns,
    expected_heralded_state,
    herald,
    herald_all,
    measurement_operator,
    prepare_aux,
    prepare_initial,
    prepare_initial_lossy,
    prepare_source,
    total_success,
)

__version__ = "0.1.0"

__all__ = [
    "alpha_balanced",
    "analytic_ps_pattern",
    "analytic_ps_total",
    "apply_annihilation",
    "apply_creation",
    "apply_loss",
    "apply_mode_unitary",
    "beamsplitter",
    "bell_interferometer_blockform",
    "bell_interferometer_circuit",
    "bell_interferometer_polarization",
    "crossover_p",
    "DetectionPattern",
    "Detector",
    "Ensemble",
    "entanglement_entropy",
    "enumerate_patterns",
    "expected_heralded_state",
    "herald",
    "herald_all",
    "HeraldedOutcome",
    "hwp",
    "inner_product",
    "JointBasisState",
    "loss_audit",
    "LossChannel",
    "measurement_operator",
    "MeasurementOperator",
    "MemoryDensity",
    "ModeUnitary",
    "optimal_p",
    "partial_trace_to_memory",
    "pbs",
    "prepare_aux",
    "prepare_initial",
    "prepare_initial_lossy",
    "prepare_source",
    "ProtocolParams",
    "PureState",
    "rate_qutrit",
    "rate_type1",
    "rate_type2",
    "sweep",
    "SweepRecord",
    "total_success",
]
