"""Reversible computers embedded as quantum systems.

Submodules:

* :mod:`~qcuniverse.revmachine` - bit strings, reversible gates, programs.
* :mod:`~qcuniverse.qstate` - state vectors and step unitaries.
* :mod:`~qcuniverse.histories` - decoherence functionals over history grains.
* :mod:`~qcuniverse.hamiltonian` - dense U, H = U + U^+, fractional roots.
* :mod:`~qcuniverse.algoprob` - a prefix-free toy machine and its random-program measure.
"""
from .algoprob import (
    advantage_ratio,
    decode_and_run,
    enumerate_programs,
    khat,
    sample_programs,
)
from .hamiltonian import (
    build_h,
    evolve,
    fractional_root,
    materialize_unitary,
    operator_support,
)
from .histories import (
    Grain,
    build_D,
    evaluate_D,
    footprint_grain,
    history_probabilities,
    refinement_consistency,
    weak_decoherence_report,
)
from .qstate import StateVector, apply_step_unitary, fidelity, make_state
from .revmachine import (
    BitString,
    QuantumGate,
    ReversibleGate,
    ReversibleProgram,
    TimeStep,
    apply_step,
    check_reversible,
    parse_circuit,
    run_trajectory,
)

__version__ = "0.1.0"
