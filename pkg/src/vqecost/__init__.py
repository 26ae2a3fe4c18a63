"""Measurement-cost estimation for variational energy estimation on qubits.

Pauli algebra, fermion-to-qubit encoding, measurement grouping, the
shot-count constant K, an exact statevector oracle, constraint-based
variance reduction and runtime extrapolation.
"""

__version__ = "0.1.0"

from .encode import (
    MolecularIntegrals,
    QubitHamiltonian,
    active_space_restriction,
    jordan_wigner,
    load_fcidump,
)
from .errors import (
    AllocationError,
    DimensionError,
    InputError,
    NumericalConsistencyError,
    ParseError,
    PreconditionError,
    UnsupportedPlanError,
    VqeCostError,
)
from .estimator import (
    CovarianceModel,
    KEstimate,
    VarianceModel,
    allocate_shots,
    compute_k,
    measurement_count,
)
from .grouping import GroupingPlan, factorize_basis_rotation, make_plan
from .oracle import SamplingReport, Statevector, expectation, ground_state, sample_plan
from .pauli import PauliString, PauliTerm, pauli_from_text, pauli_product
from .rdmc import ConstraintSet, ShiftedHamiltonian, optimize_shift, standard_constraints
from .scaling import (
    RuntimeEstimate,
    ScalingFit,
    extrapolate_k,
    fit_power_law,
    qubit_count,
    runtime_seconds,
    table2_pipeline,
)

__all__ = [
    "__version__",
    "active_space_restriction",
    "allocate_shots",
    "AllocationError",
    "compute_k",
    "ConstraintSet",
    "CovarianceModel",
    "DimensionError",
    "expectation",
    "extrapolate_k",
    "factorize_basis_rotation",
    "fit_power_law",
    "ground_state",
    "GroupingPlan",
    "InputError",
    "jordan_wigner",
    "KEstimate",
    "load_fcidump",
    "make_plan",
    "measurement_count",
    "MolecularIntegrals",
    "NumericalConsistencyError",
    "optimize_shift",
    "ParseError",
    "pauli_from_text",
    "pauli_product",
    "PauliString",
    "PauliTerm",
    "PreconditionError",
    "qubit_count",
    "QubitHamiltonian",
    "runtime_seconds",
    "RuntimeEstimate",
    "sample_plan",
    "SamplingReport",
    "ScalingFit",
    "ShiftedHamiltonian",
    "standard_constraints",
    "Statevector",
    "table2_pipeline",
    "UnsupportedPlanError",
    "VarianceModel",
    "VqeCostError",
]
