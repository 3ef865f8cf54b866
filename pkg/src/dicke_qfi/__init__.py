"""Numerical laboratory for the finite-N Dicke superradiant transition.

Ground states come from an extended-coherent-state diagonalization that stays
accurate through and beyond the critical coupling, quantum Fisher information
is evaluated for both the reduced two-atom state and the full atomic ensemble,
and closed-form thermodynamic-limit results back the finite-size scaling fits.
"""

from .ground import (
    AtomicDensityMatrix,
    ConvergenceError,
    GramPositivityError,
    GroundState,
    SolverError,
    SolverOptions,
    SpinMoments,
    boson_gram,
    solve_ground,
    solve_ground_fock_oracle,
    spin_moments,
    spin_moments_from_state,
)
from .model import (
    MAX_OVERLAP_INDEX,
    ModelParams,
    OperatorMatrix,
    SpinMatrices,
    TruncationSpec,
    assemble_hamiltonian_coherent,
    assemble_hamiltonian_fock,
    critical_coupling,
    displaced_fock_overlap,
    displacement_overlap_matrix,
    displacement_overlap_stack,
    displacement_sequence,
    rotation_y_matrix,
    spin_ladder_matrices,
)
from .qfi import (
    DEFAULT_GENERATOR_AXIS,
    GENERATOR_AXES,
    QfiValue,
    TwoAtomXState,
    XStateInvariantError,
    XStateSpectrum,
    atomic_generator_matrix,
    build_two_atom_state,
    qfi_atomic,
    qfi_closed_form,
    qfi_spectral_general,
    qfi_spin_form,
    qfi_via_sld,
    two_atom_generator,
    x_state_spectrum,
)
from .scaling import (
    CollapsePoint,
    CollapseResult,
    MomentExponents,
    ScalingFit,
    SweepRecord,
    collapse_transform,
    compute_sweep_record,
    fit_power_law,
    moment_exponent_suite,
    scan_sizes_at_critical,
    sweep_lambda,
)
from .thermo import (
    ExcitationEnergies,
    MeanFieldSolution,
    critical_expansion_amplitude,
    energy_density,
    excitation_energies,
    mean_field_solution,
    minimize_energy_numeric,
    qfi_atomic_critical_expansion,
    qfi_atomic_limit,
    qfi_two_atom_limit,
    stationarity_residuals,
    two_atom_limit_state,
)

__version__ = "0.1.0"

__all__ = [
    "MAX_OVERLAP_INDEX",
    "AtomicDensityMatrix",
    "CollapsePoint",
    "CollapseResult",
    "ConvergenceError",
    "DEFAULT_GENERATOR_AXIS",
    "ExcitationEnergies",
    "GENERATOR_AXES",
    "GramPositivityError",
    "GroundState",
    "MeanFieldSolution",
    "ModelParams",
    "MomentExponents",
    "OperatorMatrix",
    "QfiValue",
    "ScalingFit",
    "SolverError",
    "SolverOptions",
    "SpinMatrices",
    "SpinMoments",
    "SweepRecord",
    "TruncationSpec",
    "TwoAtomXState",
    "XStateInvariantError",
    "XStateSpectrum",
    "assemble_hamiltonian_coherent",
    "assemble_hamiltonian_fock",
    "atomic_generator_matrix",
    "boson_gram",
    "build_two_atom_state",
    "collapse_transform",
    "compute_sweep_record",
    "critical_coupling",
    "critical_expansion_amplitude",
    "displaced_fock_overlap",
    "displacement_overlap_matrix",
    "displacement_overlap_stack",
    "displacement_sequence",
    "energy_density",
    "excitation_energies",
    "fit_power_law",
    "mean_field_solution",
    "minimize_energy_numeric",
    "moment_exponent_suite",
    "qfi_atomic",
    "qfi_atomic_critical_expansion",
    "qfi_atomic_limit",
    "qfi_closed_form",
    "qfi_spectral_general",
    "qfi_spin_form",
    "qfi_two_atom_limit",
    "qfi_via_sld",
    "rotation_y_matrix",
    "scan_sizes_at_critical",
    "solve_ground",
    "solve_ground_fock_oracle",
    "spin_ladder_matrices",
    "spin_moments",
    "spin_moments_from_state",
    "sweep_lambda",
    "two_atom_generator",
    "two_atom_limit_state",
    "x_state_spectrum",
    "__version__",
]
