import json

import numpy as np
import pytest
import scipy.linalg
from scipy.stats import ortho_group

from conftest import hamiltonian, random_hamiltonian
from vqecost.encode import QubitHamiltonian, jordan_wigner, ladder_sum, random_integrals
from vqecost.errors import (
    AllocationError,
    DimensionError,
    InputError,
    NumericalConsistencyError,
    PreconditionError,
    UnsupportedPlanError,
)
from vqecost.estimator import CovarianceModel, VarianceModel, allocate_shots, compute_k
from vqecost.grouping import group_none, group_qwc, make_plan
from vqecost.oracle import (
    MAX_QUBITS,
    PauliExpectations,
    Statevector,
    apply_pauli,
    dense_matrix,
    expectation,
    ground_state,
    rotate_orbitals,
    rotation_generator,
    sample_plan,
    sum_sparse,
)
from vqecost.pauli import PauliString, pauli_from_text, sum_add, sum_multiply


def random_state(rng, n):
    return Statevector.from_unnormalized(n, rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n))


class TestStatevector:
    def test_norm_enforced(self):
        with pytest.raises(InputError):
            Statevector(1, np.array([1.0, 1.0]))

    def test_length_enforced(self):
        with pytest.raises(DimensionError):
            Statevector(2, np.array([1.0, 0.0]))

    def test_read_only(self):
        s = Statevector.basis(2, 1)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1.0

    def test_save_load(self, tmp_path):
        s = random_state(np.random.default_rng(0), 3)
        s.save(tmp_path / "psi.npy")
        back = Statevector.load(tmp_path / "psi.npy")
        assert back.n_qubits == 3
        np.testing.assert_allclose(back.amplitudes, s.amplitudes)

    def test_load_errors(self, tmp_path):
        with pytest.raises(InputError):
            Statevector.load(tmp_path / "missing.npy")
        np.save(tmp_path / "odd.npy", np.ones(3))
        with pytest.raises(DimensionError):
            Statevector.load(tmp_path / "odd.npy")


class TestDense:
    def test_z(self):
        np.testing.assert_array_equal(dense_matrix(pauli_from_text("Z")), np.diag([1, -1]))

    def test_identity_offset(self):
        h = QubitHamiltonian(2, (), 0.5)
        np.testing.assert_array_equal(dense_matrix(h), 0.5 * np.eye(4))

    def test_matches_apply_pauli(self):
        rng = np.random.default_rng(1)
        h = random_hamiltonian(rng, 4, 25)
        psi = random_state(rng, 4).amplitudes
        via_terms = h.identity_offset * psi + sum(
            t.coefficient * apply_pauli(t.pauli, psi) for t in h.terms
        )
        assert np.abs(dense_matrix(h) @ psi - via_terms).max() < 1e-12

    def test_kronecker_convention(self):
        rng = np.random.default_rng(2)
        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
                "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
        for _ in range(20):
            text = "".join(rng.choice(list("IXYZ"), size=3))
            # qubit 0 is the rightmost Kronecker factor
            kron = np.kron(np.kron(mats[text[2]], mats[text[1]]), mats[text[0]])
            np.testing.assert_array_equal(dense_matrix(pauli_from_text(text)), kron)

    def test_size_guard(self):
        with pytest.raises(PreconditionError):
            dense_matrix(PauliString.identity(MAX_QUBITS + 1))


class TestGroundState:
    def test_minus_z(self):
        # Z|0> = |0>, so -Z is lowest on |0>
        e, psi = ground_state(hamiltonian([("Z", -1.0)]))
        assert e == pytest.approx(-1.0)
        assert abs(psi.amplitudes[0]) == pytest.approx(1.0)
        e, psi = ground_state(hamiltonian([("Z", 1.0)]))
        assert e == pytest.approx(-1.0)
        assert abs(psi.amplitudes[1]) == pytest.approx(1.0)

    def test_constant(self):
        e, psi = ground_state(QubitHamiltonian(2, (), 2.0))
        assert e == 2.0
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0)

    def test_degenerate_convention(self):
        # ground space spanned by |01> and |10>: the lowest-index basis state is projected
        h = hamiltonian([("ZZ", 1.0)])
        e, psi = ground_state(h)
        assert e == pytest.approx(-1.0)
        np.testing.assert_allclose(psi.amplitudes, [0, 1, 0, 0], atol=1e-12)
        _, again = ground_state(h)
        np.testing.assert_array_equal(psi.amplitudes, again.amplitudes)

    def test_energy_is_expectation(self, h2_hamiltonian, h2_ground):
        e, psi = h2_ground
        assert expectation(h2_hamiltonian, psi) == pytest.approx(e, abs=1e-10)

    def test_sector_restriction(self, h3_hamiltonian):
        e_full, _ = ground_state(h3_hamiltonian)
        e_sector, psi = ground_state(h3_hamiltonian, 2, 0)
        assert e_full <= e_sector
        occupied = np.nonzero(np.abs(psi.amplitudes) > 1e-12)[0]
        assert all(bin(int(b)).count("1") == 2 for b in occupied)

    def test_sparse_path(self):
        mi = random_integrals(4, 4, np.random.default_rng(5))
        h = jordan_wigner(mi)
        e, psi = ground_state(h, 4, 0)
        dense_e = np.linalg.eigvalsh(dense_matrix(h))
        assert e >= dense_e[0] - 1e-10
        assert expectation(h, psi) == pytest.approx(e, abs=1e-9)


class TestExpectation:
    def test_examples(self):
        zero = Statevector.basis(1, 0)
        assert expectation(pauli_from_text("Z"), zero) == 1.0
        assert expectation(pauli_from_text("X"), zero) == 0.0

    def test_matches_dense(self):
        rng = np.random.default_rng(3)
        h = random_hamiltonian(rng, 4, 20)
        psi = random_state(rng, 4)
        v = psi.amplitudes
        assert expectation(h, psi) == pytest.approx(np.vdot(v, dense_matrix(h) @ v).real, abs=1e-12)

    def test_memoised_values(self):
        rng = np.random.default_rng(4)
        psi = random_state(rng, 3)
        ex = PauliExpectations(psi)
        for text in ("XYZ", "ZZI", "IYX"):
            p = pauli_from_text(text)
            assert ex(p) == pytest.approx(expectation(p, psi), abs=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            expectation(pauli_from_text("ZZ"), Statevector.basis(1, 0))

    def test_non_hermitian_operator(self):
        with pytest.raises(NumericalConsistencyError):
            expectation({(1, 1): 1j}, Statevector.from_unnormalized(1, [1.0, 1j]))


class TestOrbitalRotation:
    def number_matrix(self, u, k, spin, n_qubits):
        """``n'_k`` for rotated orbital ``k`` built from the excitation algebra."""
        n_orb = u.shape[0]
        acc = {}
        for i in range(n_orb):
            for j in range(n_orb):
                op = sum_multiply(ladder_sum(2 * i + spin, True), ladder_sum(2 * j + spin, False))
                sum_add(acc, op, u[i, k] * u[j, k])
        return sum_sparse(acc, n_qubits)

    @pytest.mark.parametrize("seed", range(4))
    def test_rotated_occupations(self, seed):
        rng = np.random.default_rng(seed)
        n_orb = 3
        u = ortho_group.rvs(n_orb, random_state=seed)
        psi = random_state(rng, 2 * n_orb)
        rotated = rotate_orbitals(psi, u)
        for k in range(n_orb):
            for spin in (0, 1):
                q = 2 * k + spin
                direct = expectation(PauliString.single(6, q, "Z"), rotated)
                nk = self.number_matrix(u, k, spin, 6)
                via = 1 - 2 * np.vdot(psi.amplitudes, nk @ psi.amplitudes).real
                assert direct == pytest.approx(via, abs=1e-10)

    def test_identity_rotation(self):
        psi = random_state(np.random.default_rng(1), 4)
        np.testing.assert_allclose(rotate_orbitals(psi, np.eye(2)).amplitudes, psi.amplitudes, atol=1e-14)

    def test_generator_handles_reflections_pairs(self):
        # two eigenvalues at -1 need a pi rotation in the real logarithm
        u = np.diag([-1.0, -1.0, 1.0])
        kappa = rotation_generator(u)
        assert np.abs(kappa + kappa.T).max() < 1e-12
        np.testing.assert_allclose(scipy.linalg.expm(kappa), u, atol=1e-10)
        for seed in range(10):
            v = ortho_group.rvs(4, random_state=seed)
            if np.linalg.det(v) < 0:
                v[:, -1] *= -1
            np.testing.assert_allclose(scipy.linalg.expm(rotation_generator(v)), v, atol=1e-10)

    def test_not_orthogonal(self):
        with pytest.raises(NumericalConsistencyError):
            rotate_orbitals(Statevector.basis(2, 0), np.array([[2.0]]))

    def test_particle_number_preserved(self):
        u = ortho_group.rvs(3, random_state=3)
        out = rotate_orbitals(Statevector.basis(6, 0b000011), u)
        occupied = np.nonzero(np.abs(out.amplitudes) > 1e-10)[0]
        assert all(bin(int(b)).count("1") == 2 for b in occupied)
        # one alpha and one beta electron stay on their spin sublattices
        alpha = int("010101", 2)
        assert all(bin(int(b) & alpha).count("1") == 1 for b in occupied)


class TestSampling:
    def test_z_on_zero(self):
        h = hamiltonian([("Z", 1.0)])
        rep = sample_plan(h, group_none(h), Statevector.basis(1, 0), [17], seed=3)
        assert rep.energy_estimate == 1.0
        assert rep.empirical_variance == 0.0

    def test_x_on_plus(self):
        h = hamiltonian([("X", 1.0)])
        plus = Statevector.from_unnormalized(1, [1.0, 1.0])
        rep = sample_plan(h, group_none(h), plus, [5], seed=0)
        assert rep.energy_estimate == pytest.approx(1.0, abs=1e-15)

    def test_y_eigenstate(self):
        h = hamiltonian([("Y", 2.0)], offset=0.5)
        plus_i = Statevector.from_unnormalized(1, [1.0, 1j])
        rep = sample_plan(h, group_none(h), plus_i, [9], seed=0)
        assert rep.energy_estimate == pytest.approx(2.5, abs=1e-15)

    def test_deterministic(self, h2_hamiltonian, h2_ground):
        _, psi = h2_ground
        plan = group_qwc(h2_hamiltonian)
        shots = [1000] * len(plan)
        a = sample_plan(h2_hamiltonian, plan, psi, shots, seed=7)
        b = sample_plan(h2_hamiltonian, plan, psi, shots, seed=7)
        assert a.to_json() == b.to_json()
        c = sample_plan(h2_hamiltonian, plan, psi, shots, seed=8)
        assert c.energy_estimate != a.energy_estimate
        assert sum(a.per_group_shots) == a.total_shots
        assert json.loads(a.to_json())["seed"] == 7

    def test_unbiased(self):
        rng = np.random.default_rng(21)
        h = random_hamiltonian(rng, 3, 10)
        psi = random_state(rng, 3)
        plan = group_qwc(h)
        ke = compute_k(h, plan, VarianceModel("from_state", psi), CovarianceModel("from_state"))
        shots = allocate_shots(ke, 2000)
        estimates = [sample_plan(h, plan, psi, shots, seed=s).energy_estimate for s in range(100)]
        sigma = np.sqrt(sum(m / c for m, c in zip(ke.group_masses, shots) if c))
        assert abs(np.mean(estimates) - expectation(h, psi)) < 3 * sigma / np.sqrt(100)

    def test_variance_law(self, h2_hamiltonian, h2_ground):
        _, psi = h2_ground
        plan = group_qwc(h2_hamiltonian)
        ke = compute_k(h2_hamiltonian, plan, VarianceModel("from_state", psi), CovarianceModel("from_state"))
        for m, tol in ((10**4, 0.5), (10**5, 0.3), (10**6, 0.15)):
            rep = sample_plan(h2_hamiltonian, plan, psi, allocate_shots(ke, m), seed=m)
            assert abs(rep.empirical_variance * m / ke.k - 1) < tol

    def test_basis_rotation_unsupported(self, h2_integrals, h2_hamiltonian, h2_ground):
        plan = make_plan(h2_hamiltonian, "basis_rotation", integrals=h2_integrals)
        with pytest.raises(UnsupportedPlanError):
            sample_plan(h2_hamiltonian, plan, h2_ground[1], [10] * len(plan), seed=0)

    def test_anticommuting_plan_has_no_basis(self, h2_hamiltonian, h2_ground):
        plan = make_plan(h2_hamiltonian, "anticommuting")
        with pytest.raises(UnsupportedPlanError):
            sample_plan(h2_hamiltonian, plan, h2_ground[1], [10] * len(plan), seed=0)

    def test_bad_allocation(self, h2_hamiltonian, h2_ground):
        plan = group_qwc(h2_hamiltonian)
        with pytest.raises(AllocationError):
            sample_plan(h2_hamiltonian, plan, h2_ground[1], [10], seed=0)
        with pytest.raises(AllocationError):
            sample_plan(h2_hamiltonian, plan, h2_ground[1], [0] + [10] * (len(plan) - 1), seed=0)
