import csv
import json
from pathlib import Path

import numpy as np
import pytest

from vqecost.encode import QubitHamiltonian, jordan_wigner, load_fcidump
from vqecost.oracle import ground_state
from vqecost.grouping import rotated_pauli_sum
from vqecost.pauli import PauliString, PauliTerm, sum_add

DATA = Path(__file__).parent / "data"
REFERENCE = json.loads((DATA / "reference.json").read_text())


def fixture_path(name: str) -> Path:
    return DATA / f"{name}.fcidump"


def published_runtimes() -> dict:
    """Published runtime table keyed by molecule (K in 1e3, M in 1e9, t in days)."""
    with open(DATA / "table2.csv", newline="") as fh:
        return {
            r["molecule"]: {
                "n_el": int(r["n_el"]),
                "n_qubits": int(r["n_qubits"]),
                "k": float(r["k_thousands"]) * 1e3,
                "m": float(r["m_billions"]) * 1e9,
                "t_days": float(r["t_days"]),
            }
            for r in csv.DictReader(fh)
        }


@pytest.fixture(scope="session")
def h2_integrals():
    return load_fcidump(fixture_path("h2_sto3g"))


@pytest.fixture(scope="session")
def h2_hamiltonian(h2_integrals):
    return jordan_wigner(h2_integrals)


@pytest.fixture(scope="session")
def h2_ground(h2_hamiltonian):
    return ground_state(h2_hamiltonian, 2, 0)


@pytest.fixture(scope="session")
def h3_integrals():
    return load_fcidump(fixture_path("h3plus_sto3g"))


@pytest.fixture(scope="session")
def h3_hamiltonian(h3_integrals):
    return jordan_wigner(h3_integrals)


@pytest.fixture(scope="session")
def h3_ground(h3_hamiltonian):
    return ground_state(h3_hamiltonian, 2, 0)


def hamiltonian(pairs, offset=0.0) -> QubitHamiltonian:
    """Build a Hamiltonian from ``[(text, coeff), ...]``."""
    terms = tuple(PauliTerm(PauliString.from_text(s), c) for s, c in pairs)
    return QubitHamiltonian(terms[0].pauli.n_qubits, terms, offset)


def random_hamiltonian(rng, n_qubits, n_terms) -> QubitHamiltonian:
    letters = np.array(list("IXYZ"))
    seen = {}
    while len(seen) < n_terms:
        text = "".join(rng.choice(letters, size=n_qubits))
        if set(text) == {"I"} or text in seen:
            continue
        seen[text] = float(rng.normal())
    return hamiltonian(sorted(seen.items()))


def fock_matrix(mi) -> np.ndarray:
    """Second-quantised Hamiltonian on occupation-number bitstrings.

    Built directly from the ladder-operator algebra on determinants (bit p
    set means spin-orbital p occupied; alpha on even, beta on odd), so it
    shares no code with the Pauli route.
    """
    n_orb = mi.n_spatial_orbitals
    n = 2 * n_orb
    dim = 1 << n

    def annihilate(state, p):
        if not state >> p & 1:
            return None, 0
        sign = -1 if bin(state & ((1 << p) - 1)).count("1") % 2 else 1
        return state ^ (1 << p), sign

    def create(state, p):
        if state >> p & 1:
            return None, 0
        sign = -1 if bin(state & ((1 << p) - 1)).count("1") % 2 else 1
        return state | (1 << p), sign

    def apply(ops, state):
        sign = 1
        for p, dagger in reversed(ops):
            state, s = (create if dagger else annihilate)(state, p)
            if state is None:
                return None, 0
            sign *= s
        return state, sign

    h, g = mi.one_body, mi.two_body
    mat = np.zeros((dim, dim))
    spin = lambda so: so % 2
    orb = lambda so: so // 2
    for det in range(dim):
        mat[det, det] += mi.nuclear_repulsion
        for p in range(n):
            for q in range(n):
                if spin(p) != spin(q):
                    continue
                out, s = apply([(p, True), (q, False)], det)
                if out is not None:
                    mat[out, det] += h[orb(p), orb(q)] * s
        # 1/2 sum (pq|rs) a+_p a+_r a_s a_q with spin(p)=spin(q), spin(r)=spin(s)
        for p in range(n):
            for q in range(n):
                if spin(p) != spin(q):
                    continue
                for r in range(n):
                    for s_ in range(n):
                        if spin(r) != spin(s_):
                            continue
                        v = g[orb(p), orb(q), orb(r), orb(s_)]
                        if v == 0.0:
                            continue
                        out, s = apply([(p, True), (r, True), (s_, False), (q, False)], det)
                        if out is not None:
                            mat[out, det] += 0.5 * v * s
    return mat


def expand_members(plan, n_qubits):
    """Original-frame Pauli sum of a basis-rotation plan, via each member string."""
    total = {}
    for g in plan.groups:
        for t in g.members:
            if g.rotation is None:
                sum_add(total, {(t.pauli.x, t.pauli.z): t.coefficient})
            else:
                sum_add(total, rotated_pauli_sum(t.pauli, g.rotation), t.coefficient)
    return total


def coefficient_gap(total, h):
    gap = dict(total)
    gap.pop((0, 0), None)
    for t in h.terms:
        key = (t.pauli.x, t.pauli.z)
        gap[key] = gap.get(key, 0.0) - t.coefficient
    return max((abs(c) for c in gap.values()), default=0.0)


# acceptance summary lines, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
