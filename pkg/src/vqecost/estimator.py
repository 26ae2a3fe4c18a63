"""The measurement constant K under optimal shot allocation.

For a plan with groups ``C`` the estimator variance after ``M`` optimally
allocated shots is ``K / M`` with

    K = ( sum_C sqrt(g_C) )**2,   g_C = sum_{a,b in C} h_a h_b Covar(P_a, P_b)

and group ``C`` receives a fraction ``sqrt(g_C) / sum_D sqrt(g_D)`` of the
shots.  Covariances between groups never enter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .encode import QubitHamiltonian
from .errors import AllocationError, DimensionError, InputError, NumericalConsistencyError
from .grouping import GroupingPlan
from .oracle import PauliExpectations, Statevector, rotate_orbitals
from .pauli import PHASES, PauliString, product_masks

DEFAULT_EPSILON = 5e-4  # Hartree
MASS_GUARD = 1e-10


@dataclass(frozen=True)
class VarianceModel:
    """``upper_bound``: Var(P) = 1.  ``from_state``: Var(P) = 1 - <P>**2."""

    kind: str = "upper_bound"
    state: Statevector | None = None

    def __post_init__(self):
        if self.kind not in ("upper_bound", "from_state"):
            raise InputError(f"unknown variance model {self.kind!r}")
        if self.kind == "from_state" and self.state is None:
            raise InputError("from_state variances need a state")


@dataclass(frozen=True)
class CovarianceModel:
    """``zero``: no covariance between distinct terms.

    ``from_state``: the symmetrised covariance
    ``Re<P_a P_b> - <P_a><P_b>``.  Uses ``state`` if given, otherwise the
    variance model's state.
    """

    kind: str = "zero"
    state: Statevector | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "from_state"):
            raise InputError(f"unknown covariance model {self.kind!r}")


@dataclass
class KEstimate:
    k: float
    group_masses: list[float]
    shot_fractions: list[float]
    method: str = ""
    variance_model: str = ""
    covariance_model: str = ""
    raw_masses: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "variance_model": self.variance_model,
            "covariance_model": self.covariance_model,
            "K": self.k,
            "groups": [
                {"mass": m, "fraction": f}
                for m, f in zip(self.group_masses, self.shot_fractions)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def group_operators(h: QubitHamiltonian, plan: GroupingPlan):
    """Yield ``(coefficients, paulis, rotation)`` per group.

    For term-partition plans the members are Hamiltonian terms; for
    basis-rotation plans they are the rotated-frame Z strings.
    """
    for group in plan.groups:
        if group.members is not None:
            yield (
                np.array([t.coefficient for t in group.members]),
                [t.pauli for t in group.members],
                group.rotation,
            )
        else:
            yield (
                np.array([h.terms[i].coefficient for i in group.term_indices]),
                [h.terms[i].pauli for i in group.term_indices],
                None,
            )


def covariance_matrix(
    paulis: list[PauliString],
    vm: VarianceModel,
    cm: CovarianceModel,
    expect: PauliExpectations | None,
) -> np.ndarray:
    """Model covariance matrix of the given Pauli strings (identity excluded)."""
    m = len(paulis)
    if vm.kind == "from_state":
        mean = np.array([expect(p) for p in paulis])
        cov = np.diag(1.0 - mean**2)
    else:
        cov = np.eye(m)
    if cm.kind == "from_state" and m > 1:
        mean = np.array([expect(p) for p in paulis])
        for a in range(m):
            pa = paulis[a]
            for b in range(a + 1, m):
                pb = paulis[b]
                k, x, z = product_masks(pa.x, pa.z, pb.x, pb.z)
                val = (PHASES[k] * expect.raw(x, z)).real - mean[a] * mean[b]
                cov[a, b] = cov[b, a] = val
    return cov


def _expectations(vm, cm, n_qubits):
    state = None
    if vm.kind == "from_state":
        state = vm.state
    if cm.kind == "from_state":
        state = cm.state if cm.state is not None else state
        if state is None:
            raise InputError("from_state covariances need a state")
    if state is not None and state.n_qubits != n_qubits:
        raise DimensionError(
            f"state has {state.n_qubits} qubits, Hamiltonian {n_qubits}"
        )
    return state


def group_covariances(
    h: QubitHamiltonian, plan: GroupingPlan, vm: VarianceModel, cm: CovarianceModel
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-group ``(coefficients, covariance matrix)`` under the models."""
    state = _expectations(vm, cm, h.n_qubits)
    base = PauliExpectations(state) if state is not None else None
    frames: dict[int, PauliExpectations] = {}
    out = []
    for coeffs, paulis, rotation in group_operators(h, plan):
        expect = base
        if rotation is not None and state is not None:
            key = id(rotation)
            if key not in frames:
                frames[key] = PauliExpectations(rotate_orbitals(state, rotation))
            expect = frames[key]
        out.append((coeffs, covariance_matrix(paulis, vm, cm, expect)))
    return out


def masses_to_estimate(raw: list[float], **labels) -> KEstimate:
    masses = []
    for g, m in enumerate(raw):
        if m < -MASS_GUARD:
            raise NumericalConsistencyError(f"group {g} has negative variance mass {m:.3e}")
        masses.append(max(m, 0.0))
    roots = np.sqrt(masses)
    total = float(roots.sum())
    fractions = (roots / total).tolist() if total > 0 else [0.0] * len(masses)
    return KEstimate(total**2, masses, fractions, raw_masses=list(raw), **labels)


def compute_k(
    h: QubitHamiltonian,
    plan: GroupingPlan,
    vm: VarianceModel | None = None,
    cm: CovarianceModel | None = None,
) -> KEstimate:
    vm = vm or VarianceModel()
    cm = cm or CovarianceModel()
    if plan.n_qubits != h.n_qubits:
        raise DimensionError("plan and Hamiltonian qubit counts differ")
    raw = [float(c @ cov @ c) for c, cov in group_covariances(h, plan, vm, cm)]
    return masses_to_estimate(
        raw, method=plan.method, variance_model=vm.kind, covariance_model=cm.kind
    )


def measurement_count(k: float, epsilon: float = DEFAULT_EPSILON, rdmc_factor: float = 1.0) -> float:
    """Shots ``M = K / (rdmc_factor * epsilon**2)`` for target precision ``epsilon``."""
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    if rdmc_factor <= 0:
        raise InputError("rdmc_factor must be positive")
    return k / (rdmc_factor * epsilon**2)


def allocate_shots(ke, total_shots: int) -> list[int]:
    """Integer shots per group proportional to ``sqrt(mass)``.

    Rounds by largest remainder (ties to the lower group index).  Every
    group with positive mass gets at least one shot, taken from the
    currently largest allocation if rounding left it empty.
    """
    masses = ke.group_masses if isinstance(ke, KEstimate) else list(ke)
    roots = np.sqrt(np.maximum(np.asarray(masses, dtype=float), 0.0))
    positive = roots > 0
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise AllocationError("no group carries variance; nothing to allocate")
    if total_shots < n_pos:
        raise AllocationError(
            f"{total_shots} shots cannot cover {n_pos} groups with nonzero variance"
        )
    ideal = total_shots * roots / roots.sum()
    counts = np.floor(ideal).astype(int)
    left = total_shots - int(counts.sum())
    remainders = ideal - counts
    order = sorted(range(len(masses)), key=lambda g: (-remainders[g], g))
    for g in order[:left]:
        counts[g] += 1
    for g in np.nonzero(positive & (counts == 0))[0]:
        donor = int(np.argmax(counts))
        counts[donor] -= 1
        counts[g] += 1
    return counts.tolist()
