"""Exact small-system reference: statevectors, ground states, sampling.

Basis index ``b`` encodes qubit ``q`` in bit ``q`` (little-endian), matching
the Pauli mask layout, so a Pauli string acts on basis states as

    P(x, z) |b> = i**popcount(x & z) * (-1)**popcount(b & z) |b ^ x>

Dense matrices are only built on request and are guarded to
``MAX_QUBITS``; Hamiltonians are otherwise handled as sparse matrices.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, expm_multiply

from .encode import QubitHamiltonian, one_body_sum
from .errors import (
    AllocationError,
    DimensionError,
    InputError,
    NumericalConsistencyError,
    PreconditionError,
    UnsupportedPlanError,
)
from .pauli import PHASES, PauliString, PauliSum, PauliTerm

MAX_QUBITS = 14
_DENSE_EIGH_LIMIT = 4096


def _guard(n_qubits: int):
    if n_qubits > MAX_QUBITS:
        raise PreconditionError(
            f"{n_qubits} qubits exceeds the exact-simulation limit of {MAX_QUBITS}"
        )


@dataclass(frozen=True, eq=False)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise DimensionError(
                f"{amps.shape[0]} amplitudes for {self.n_qubits} qubits"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise InputError(f"statevector norm {norm} != 1")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> Statevector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_unnormalized(cls, n_qubits: int, amps) -> Statevector:
        amps = np.asarray(amps, dtype=complex)
        return cls(n_qubits, amps / np.linalg.norm(amps))

    def save(self, path):
        np.save(path, self.amplitudes)

    @classmethod
    def load(cls, path) -> Statevector:
        try:
            amps = np.load(path)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read state file {path}: {exc}") from None
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise DimensionError(f"state file {path} does not hold 2**n amplitudes")
        n = amps.size.bit_length() - 1
        return cls.from_unnormalized(n, amps)


def _indices(n_qubits: int) -> np.ndarray:
    return np.arange(1 << n_qubits, dtype=np.int64)


def _parity(values: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(values) & 1).astype(np.int64)


def _pauli_phases(x: int, z: int, n_qubits: int) -> np.ndarray:
    """Matrix elements ``<b ^ x| P |b>`` for every basis index ``b``."""
    signs = 1 - 2 * _parity(_indices(n_qubits) & z).astype(np.int8)
    return PHASES[(x & z).bit_count() % 4] * signs


def apply_pauli(p: PauliString, amplitudes: np.ndarray) -> np.ndarray:
    n = p.n_qubits
    if amplitudes.shape[0] != 1 << n:
        raise DimensionError("Pauli and state dimensions differ")
    out = np.empty_like(amplitudes, dtype=complex)
    out[_indices(n) ^ p.x] = _pauli_phases(p.x, p.z, n) * amplitudes
    return out


def sum_sparse(acc: PauliSum, n_qubits: int) -> sp.csr_matrix:
    """Sparse matrix of a mask-keyed Pauli sum (coefficients may be complex)."""
    _guard(n_qubits)
    dim = 1 << n_qubits
    idx = _indices(n_qubits)
    by_x: dict[int, np.ndarray] = {}
    for (x, z), c in acc.items():
        diag = c * _pauli_phases(x, z, n_qubits)
        if x in by_x:
            by_x[x] = by_x[x] + diag
        else:
            by_x[x] = diag
    if not by_x:
        return sp.csr_matrix((dim, dim), dtype=complex)
    rows = np.concatenate([idx ^ x for x in by_x])
    cols = np.tile(idx, len(by_x))
    data = np.concatenate(list(by_x.values()))
    return sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))


def _as_sum(op, n_qubits=None) -> tuple[PauliSum, int]:
    if isinstance(op, QubitHamiltonian):
        return op.to_sum(), op.n_qubits
    if isinstance(op, PauliString):
        return {(op.x, op.z): 1.0}, op.n_qubits
    if isinstance(op, PauliTerm):
        return {(op.pauli.x, op.pauli.z): op.coefficient}, op.pauli.n_qubits
    if isinstance(op, dict):
        if n_qubits is None:
            raise InputError("a raw Pauli sum needs n_qubits")
        return op, n_qubits
    raise TypeError(f"cannot realise {type(op).__name__} as a matrix")


def sparse_matrix(op, n_qubits: int | None = None) -> sp.csr_matrix:
    acc, n = _as_sum(op, n_qubits)
    return sum_sparse(acc, n)


def dense_matrix(op, n_qubits: int | None = None) -> np.ndarray:
    """Exact ``2**n x 2**n`` matrix of a Pauli string, term, Hamiltonian or sum."""
    return sparse_matrix(op, n_qubits).toarray()


def sector_indices(n_qubits: int, n_electrons=None, two_m_s=None) -> np.ndarray:
    """Basis indices with the given particle number and ``2*S_z``."""
    idx = _indices(n_qubits)
    keep = np.ones(idx.shape, dtype=bool)
    if n_electrons is not None:
        keep &= np.bitwise_count(idx) == n_electrons
    if two_m_s is not None:
        alpha = sum(1 << q for q in range(0, n_qubits, 2))
        beta = sum(1 << q for q in range(1, n_qubits, 2))
        diff = np.bitwise_count(idx & alpha).astype(int) - np.bitwise_count(idx & beta)
        keep &= diff == two_m_s
    return idx[keep]


def ground_state(
    h: QubitHamiltonian, n_electrons: int | None = None, two_m_s: int | None = None
) -> tuple[float, Statevector]:
    """Lowest eigenpair, optionally restricted to a particle-number/S_z sector.

    A degenerate ground space is resolved deterministically: the returned
    state is the normalised projection of the lowest-index basis state that
    overlaps the ground space, with that amplitude made real and positive.
    """
    n = h.n_qubits
    _guard(n)
    matrix = sparse_matrix(h)
    block = sector_indices(n, n_electrons, two_m_s)
    if block.size == 0:
        raise PreconditionError("requested sector is empty")
    sub = matrix[block][:, block]
    if block.size <= _DENSE_EIGH_LIMIT:
        vals, vecs = np.linalg.eigh(sub.toarray())
    else:
        k = min(8, block.size - 2)
        vals, vecs = eigsh(sub, k=k, which="SA", tol=1e-12)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    e0 = float(vals[0])
    space = vecs[:, np.abs(vals - e0) < 1e-8]
    # projector onto the ground space applied to unit vectors e_b
    overlaps = np.linalg.norm(space, axis=1)
    pick = int(np.argmax(overlaps > 1e-6))
    v = space @ space[pick].conj()
    v /= np.linalg.norm(v)
    v *= abs(v[pick]) / v[pick]
    amps = np.zeros(1 << n, dtype=complex)
    amps[block] = v
    return e0, Statevector(n, amps)


def expectation(op, state: Statevector) -> float:
    """Exact ``<state|op|state>`` for a Pauli string, term, sum or Hamiltonian."""
    acc, n = _as_sum(op, state.n_qubits)
    if n != state.n_qubits:
        raise DimensionError(f"operator on {n} qubits, state on {state.n_qubits}")
    psi = state.amplitudes
    idx = _indices(n)
    total = 0.0 + 0.0j
    for (x, z), c in acc.items():
        if x == 0 and z == 0:
            total += c
            continue
        total += c * np.vdot(psi[idx ^ x], _pauli_phases(x, z, n) * psi)
    if abs(total.imag) > 1e-10 * max(1.0, abs(total.real)):
        raise NumericalConsistencyError(f"non-real expectation value {total}")
    return float(total.real)


class PauliExpectations:
    """Memoised Pauli expectation values on one fixed state."""

    def __init__(self, state: Statevector):
        self.state = state
        self._n = state.n_qubits
        self._idx = _indices(self._n)
        self._cache: dict[tuple[int, int], complex] = {}

    def raw(self, x: int, z: int) -> complex:
        key = (x, z)
        if key not in self._cache:
            if x == 0 and z == 0:
                val = 1.0 + 0j
            else:
                psi = self.state.amplitudes
                val = np.vdot(psi[self._idx ^ x], _pauli_phases(x, z, self._n) * psi)
            self._cache[key] = complex(val)
        return self._cache[key]

    def __call__(self, p: PauliString) -> float:
        return self.raw(p.x, p.z).real


def rotation_generator(u: np.ndarray) -> np.ndarray:
    """Real antisymmetric ``kappa`` with ``expm(kappa) == u`` for ``u`` in SO(n).

    Built from the real Schur form, which for an orthogonal matrix is block
    diagonal with 2x2 rotations and +-1 entries; eigenvalues -1 come in
    pairs and are combined into rotations by pi.
    """
    t, q = scipy.linalg.schur(u, output="real")
    n = u.shape[0]
    log_t = np.zeros((n, n))
    minus_one = []
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > 1e-12:
            theta = np.arctan2(t[i + 1, i], t[i, i])
            log_t[i, i + 1] = -theta
            log_t[i + 1, i] = theta
            i += 2
            continue
        if t[i, i] < 0:
            minus_one.append(i)
        i += 1
    for a, b in zip(minus_one[::2], minus_one[1::2]):
        log_t[a, b] = -np.pi
        log_t[b, a] = np.pi
    kappa = q @ log_t @ q.T
    kappa = 0.5 * (kappa - kappa.T)
    if np.max(np.abs(scipy.linalg.expm(kappa) - u), initial=0.0) > 1e-8:
        raise NumericalConsistencyError("could not find a real generator for the rotation")
    return kappa


def rotate_orbitals(state: Statevector, rotation: np.ndarray) -> Statevector:
    """Change ``state`` into the frame of rotated spatial orbitals.

    With rotated orbitals ``phi'_k = sum_i U_ik phi_i`` applied to both spins,
    the returned state ``psi'`` satisfies ``<psi|n'_k|psi> = <psi'|n_k|psi'>``,
    so rotated-frame number operators become plain Z-basis observables.
    """
    u = np.asarray(rotation, dtype=float)
    n_orb = u.shape[0]
    if state.n_qubits != 2 * n_orb:
        raise DimensionError(f"{n_orb}-orbital rotation on {state.n_qubits} qubits")
    if np.max(np.abs(u.T @ u - np.eye(n_orb))) > 1e-10:
        raise NumericalConsistencyError("orbital rotation is not orthogonal")
    if np.linalg.det(u) < 0:
        # column signs leave every n'_k unchanged
        u = u.copy()
        u[:, -1] *= -1
    kappa = rotation_generator(u)
    generator = sum_sparse(one_body_sum(kappa), state.n_qubits)
    # U(kappa) = exp(K) maps a+_k to sum_i u_ik a+_i; we need U(kappa)^dagger psi
    amps = expm_multiply(-generator, state.amplitudes)
    return Statevector.from_unnormalized(state.n_qubits, amps)


# -- shot sampling -----------------------------------------------------------

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S_DAG = np.diag([1, -1j])
_BASIS_CHANGE = {"X": _HADAMARD, "Y": _HADAMARD @ _S_DAG}


def apply_single_qubit(amplitudes: np.ndarray, n_qubits: int, qubit: int, gate):
    psi = amplitudes.reshape((2,) * n_qubits)
    axis = n_qubits - 1 - qubit
    psi = np.moveaxis(np.tensordot(gate, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)


def measurement_rotation(state: Statevector, basis: PauliString) -> np.ndarray:
    """Amplitudes after rotating each qubit so ``basis`` becomes Z-type."""
    amps = np.array(state.amplitudes)
    for q in range(state.n_qubits):
        gate = _BASIS_CHANGE.get(basis.letter(q))
        if gate is not None:
            amps = apply_single_qubit(amps, state.n_qubits, q, gate)
    return amps


@dataclass
class SamplingReport:
    total_shots: int
    per_group_shots: list[int]
    energy_estimate: float
    empirical_variance: float
    seed: int
    group_means: list[float]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def group_rng(seed: int, group_index: int) -> np.random.Generator:
    """PCG64 stream for one group, derived from the master seed."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(group_index,)))
    )


def sample_plan(
    h: QubitHamiltonian,
    plan,
    state: Statevector,
    allocation,
    seed: int,
) -> SamplingReport:
    """Simulate measuring every group of a single-qubit-basis plan.

    Each group's shots are drawn from the rotated state's Born distribution;
    every member Pauli is scored as the parity of the outcome bits on its
    support.  ``empirical_variance`` is the estimator variance
    ``sum_C s_C**2 / m_C`` with ``s_C**2`` the sample variance of the group's
    per-shot energy contribution.
    """
    if plan.method == "basis_rotation":
        raise UnsupportedPlanError("basis-rotation plans cannot be sampled")
    if state.n_qubits != h.n_qubits:
        raise DimensionError("state and Hamiltonian qubit counts differ")
    allocation = [int(a) for a in allocation]
    if len(allocation) != len(plan.groups):
        raise AllocationError(
            f"{len(allocation)} shot counts for {len(plan.groups)} groups"
        )
    n = h.n_qubits
    idx = _indices(n)
    estimate = h.identity_offset
    variance = 0.0
    means = []
    for g, (group, shots) in enumerate(zip(plan.groups, allocation)):
        if group.measurement_basis is None:
            raise UnsupportedPlanError("group has no single-qubit measurement basis")
        if shots < 1:
            raise AllocationError(f"group {g} received no shots")
        amps = measurement_rotation(state, group.measurement_basis)
        probs = np.abs(amps) ** 2
        probs /= probs.sum()
        counts = group_rng(seed, g).multinomial(shots, probs)
        hit = np.nonzero(counts)[0]
        weights = counts[hit].astype(float)
        values = np.zeros(hit.size)
        for t in group.term_indices:
            term = h.terms[t]
            values += term.coefficient * (1 - 2 * _parity(idx[hit] & term.pauli.support))
        mean = float(weights @ values / shots)
        if shots > 1:
            s2 = float(weights @ (values - mean) ** 2 / (shots - 1))
        else:
            s2 = 0.0
        means.append(mean)
        estimate += mean
        variance += s2 / shots
    return SamplingReport(
        total_shots=int(sum(allocation)),
        per_group_shots=allocation,
        energy_estimate=float(estimate),
        empirical_variance=float(variance),
        seed=int(seed),
        group_means=means,
    )
