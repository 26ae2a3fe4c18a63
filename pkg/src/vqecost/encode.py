"""Molecular integrals and their Jordan-Wigner qubit Hamiltonian.

Spin-orbital layout is interleaved: spatial orbital ``i`` with spin alpha
lives on qubit ``2*i`` and with spin beta on qubit ``2*i + 1``.  Spatial
orbitals keep the order of the integral file.

Two-electron integrals are held in chemist notation ``(pq|rs)`` throughout.
The electronic Hamiltonian is

    H = E_nuc + sum_pq h_pq E_pq + 1/2 sum_pqrs (pq|rs) (E_pq E_rs - delta_qr E_ps)

with ``E_pq = sum_sigma a+_{p sigma} a_{q sigma}``, which is the usual
``1/2 sum (pr|qs) a+_p a+_q a_s a_r`` reordered into excitation operators.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, NumericalConsistencyError, ParseError
from .pauli import (
    PauliString,
    PauliSum,
    PauliTerm,
    pauli_from_text,
    sum_add,
    sum_multiply,
)

COMBINE_THRESHOLD = 1e-12
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MolecularIntegrals:
    n_spatial_orbitals: int
    nuclear_repulsion: float
    one_body: np.ndarray
    two_body: np.ndarray
    n_electrons: int
    two_m_s: int = 0

    def __post_init__(self):
        n = self.n_spatial_orbitals
        h = np.asarray(self.one_body, dtype=float)
        g = np.asarray(self.two_body, dtype=float)
        if h.shape != (n, n) or g.shape != (n, n, n, n):
            raise InputError(
                f"integral shapes {h.shape}, {g.shape} do not match {n} orbitals"
            )
        if n and np.max(np.abs(h - h.T)) > SYMMETRY_TOL:
            raise InputError("one-body integrals are not symmetric")
        if n:
            for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
                if np.max(np.abs(g - g.transpose(perm))) > SYMMETRY_TOL:
                    raise InputError("two-body integrals lack 8-fold symmetry")
        if not 0 <= self.n_electrons <= 2 * n:
            raise InputError(
                f"{self.n_electrons} electrons do not fit in {n} spatial orbitals"
            )
        object.__setattr__(self, "one_body", h)
        object.__setattr__(self, "two_body", g)

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_spatial_orbitals


@dataclass(frozen=True)
class QubitHamiltonian:
    """Real-coefficient Pauli sum with the identity part split off.

    ``n_electrons`` and ``two_m_s`` are optional sector labels carried along
    so that downstream state preparation and constraints know the target
    sector.
    """

    n_qubits: int
    terms: tuple[PauliTerm, ...]
    identity_offset: float = 0.0
    n_electrons: int | None = None
    two_m_s: int | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        index = {}
        for i, t in enumerate(terms):
            if t.pauli.n_qubits != self.n_qubits:
                raise InputError("term qubit count differs from the Hamiltonian")
            if t.pauli.is_identity():
                raise InputError("identity belongs in identity_offset, not terms")
            if t.pauli in index:
                raise InputError(f"duplicate Pauli string {t.pauli}")
            index[t.pauli] = i
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.terms)

    @property
    def paulis(self) -> list[PauliString]:
        return [t.pauli for t in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=float)

    def index_of(self, pauli: PauliString) -> int | None:
        return self._index.get(pauli)

    def coefficient(self, pauli: PauliString) -> float:
        if pauli.is_identity():
            return self.identity_offset
        i = self._index.get(pauli)
        return 0.0 if i is None else self.terms[i].coefficient

    def scaled(self, factor: float) -> QubitHamiltonian:
        return QubitHamiltonian(
            self.n_qubits,
            tuple(PauliTerm(t.pauli, factor * t.coefficient) for t in self.terms),
            factor * self.identity_offset,
            self.n_electrons,
            self.two_m_s,
        )

    def to_sum(self) -> PauliSum:
        out: PauliSum = {(t.pauli.x, t.pauli.z): t.coefficient for t in self.terms}
        if self.identity_offset:
            out[(0, 0)] = self.identity_offset
        return out

    @classmethod
    def from_sum(
        cls,
        n_qubits: int,
        acc: PauliSum,
        *,
        threshold: float = COMBINE_THRESHOLD,
        n_electrons=None,
        two_m_s=None,
    ) -> QubitHamiltonian:
        """Build from a mask-keyed accumulator, dropping tiny terms.

        Raises NumericalConsistencyError if any coefficient has an imaginary
        part above 1e-10; the operator would not be Hermitian.
        """
        offset = 0.0
        terms = []
        for (x, z), c in acc.items():
            c = complex(c)
            if abs(c.imag) > 1e-10:
                raise NumericalConsistencyError(
                    f"imaginary coefficient {c} on a Hermitian operator"
                )
            if x == 0 and z == 0:
                offset += c.real
            elif abs(c.real) >= threshold:
                terms.append(PauliTerm(PauliString(n_qubits, x, z), c.real))
        terms.sort(key=lambda t: t.pauli.sort_key())
        return cls(n_qubits, tuple(terms), offset, n_electrons, two_m_s)

    def to_dict(self) -> dict:
        out = {
            "n_qubits": self.n_qubits,
            "identity_offset": self.identity_offset,
            "terms": [
                {"pauli": t.pauli.to_text(), "coeff": t.coefficient} for t in self.terms
            ],
        }
        if self.n_electrons is not None:
            out["n_electrons"] = self.n_electrons
        if self.two_m_s is not None:
            out["two_m_s"] = self.two_m_s
        return out

    @classmethod
    def from_dict(cls, data: dict) -> QubitHamiltonian:
        try:
            n = int(data["n_qubits"])
            terms = tuple(
                PauliTerm(pauli_from_text(t["pauli"]), float(t["coeff"]))
                for t in data["terms"]
            )
            offset = float(data.get("identity_offset", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed Hamiltonian JSON: {exc}") from exc
        return cls(n, terms, offset, data.get("n_electrons"), data.get("two_m_s"))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> QubitHamiltonian:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno)
        return cls.from_dict(data)


# -- FCIDUMP -----------------------------------------------------------------

def _parse_header(text: str, first_line: int) -> dict:
    body = re.sub(r"&FCI|&END|/", " ", text, flags=re.IGNORECASE)
    parts = re.split(r"([A-Za-z_]\w*)\s*=", body)
    fields = {
        key.upper(): value.strip().strip(",").strip()
        for key, value in zip(parts[1::2], parts[2::2])
    }
    for key in ("NORB", "NELEC"):
        if key not in fields:
            raise ParseError(f"FCIDUMP header lacks {key}", line=first_line)
    try:
        norb = int(fields["NORB"])
        nelec = int(fields["NELEC"])
        ms2 = int(fields.get("MS2", "0") or 0)
    except ValueError:
        raise ParseError("non-integer NORB/NELEC/MS2 in header", line=first_line)
    return {"norb": norb, "nelec": nelec, "ms2": ms2}


def load_fcidump(path) -> MolecularIntegrals:
    """Read an FCIDUMP file (1-based indices, chemist notation).

    Only the unique integrals need to be present; the tensors are filled out
    by permutational symmetry.  Records with ``i > 0`` and ``j = k = l = 0``
    (orbital energies) are ignored.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc

    header_lines = []
    start = None
    for lineno, line in enumerate(lines, 1):
        header_lines.append(line)
        if re.search(r"&END|^\s*/\s*$", line, flags=re.IGNORECASE):
            start = lineno
            break
    if start is None or not re.search(r"&FCI", header_lines[0], re.IGNORECASE):
        raise ParseError("missing &FCI ... &END header", line=1)
    hdr = _parse_header(" ".join(header_lines), 1)
    n = hdr["norb"]

    h = np.zeros((n, n))
    g = np.zeros((n, n, n, n))
    e_nuc = 0.0
    for lineno, line in enumerate(lines[start:], start + 1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 5:
            raise ParseError(f"expected 'value i j k l', got {line.strip()!r}", line=lineno)
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise ParseError(f"non-numeric record {line.strip()!r}", line=lineno) from None
        if not all(0 <= idx <= n for idx in (i, j, k, l)):
            raise ParseError(
                f"orbital index out of range 1..{n} in {line.strip()!r}", line=lineno
            )
        if i == j == k == l == 0:
            e_nuc = value
        elif k == 0 and l == 0:
            if j == 0:
                continue
            h[i - 1, j - 1] = h[j - 1, i - 1] = value
        elif i and j and k and l:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in (
                (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
            ):
                g[a, b, c, d] = value
        else:
            raise ParseError(f"unrecognised index pattern in {line.strip()!r}", line=lineno)

    return MolecularIntegrals(n, e_nuc, h, g, hdr["nelec"], hdr["ms2"])


def write_fcidump(mi: MolecularIntegrals, path, tol: float = 1e-15):
    n = mi.n_spatial_orbitals
    out = [
        f" &FCI NORB={n:4d},NELEC={mi.n_electrons:3d},MS2={mi.two_m_s},",
        "  ORBSYM=" + "1," * n,
        "  ISYM=1,",
        " &END",
    ]
    fmt = "{: .16e} {:4d} {:4d} {:4d} {:4d}"
    for p in range(n):
        for q in range(p + 1):
            pq = p * (p + 1) // 2 + q
            for r in range(n):
                for s in range(r + 1):
                    if r * (r + 1) // 2 + s > pq:
                        continue
                    v = mi.two_body[p, q, r, s]
                    if abs(v) > tol:
                        out.append(fmt.format(v, p + 1, q + 1, r + 1, s + 1))
    for p in range(n):
        for q in range(p + 1):
            if abs(mi.one_body[p, q]) > tol:
                out.append(fmt.format(mi.one_body[p, q], p + 1, q + 1, 0, 0))
    out.append(fmt.format(mi.nuclear_repulsion, 0, 0, 0, 0))
    Path(path).write_text("\n".join(out) + "\n")


def random_integrals(
    n_spatial: int, n_electrons: int, rng: np.random.Generator, two_m_s: int = 0
) -> MolecularIntegrals:
    """Random integrals with the right permutation symmetry (for testing).

    The two-body tensor is a Gram-like sum so the pair matrix is positive
    semidefinite, as it is for physical repulsion integrals.
    """
    n = n_spatial
    a = rng.normal(size=(n, n))
    h = (a + a.T) / 2
    npair = n * n
    chol = []
    for _ in range(npair):
        m = rng.normal(size=(n, n)) * 0.3
        chol.append((m + m.T) / 2)
    g = sum(np.einsum("pq,rs->pqrs", m, m) for m in chol)
    return MolecularIntegrals(n, float(rng.normal()), h, g, n_electrons, two_m_s)


# -- Jordan-Wigner -----------------------------------------------------------


def spin_orbital_qubit(spatial: int, spin: int) -> int:
    """Interleaved layout: alpha (spin 0) on even qubits, beta on odd."""
    return 2 * spatial + spin


def ladder_sum(p: int, dagger: bool) -> PauliSum:
    chain = (1 << p) - 1
    sign = -0.5j if dagger else 0.5j
    return {(1 << p, chain): 0.5, (1 << p, chain | (1 << p)): sign}


def jw_ladder(p: int, dagger: bool, n_qubits: int) -> list[tuple[complex, PauliString]]:
    """Jordan-Wigner image of a single ladder operator.

    ``a_p = Z_0 ... Z_{p-1} (X_p + i Y_p) / 2`` and
    ``a+_p = Z_0 ... Z_{p-1} (X_p - i Y_p) / 2``; occupied is ``|1>``.
    """
    if not 0 <= p < n_qubits:
        raise InputError(f"spin-orbital {p} outside 0..{n_qubits - 1}")
    return [
        (c, PauliString(n_qubits, x, z)) for (x, z), c in ladder_sum(p, dagger).items()
    ]


def excitation_sum(i: int, j: int, n_qubits: int | None = None) -> PauliSum:
    """Spin-summed ``E_ij = sum_sigma a+_{i sigma} a_{j sigma}`` as a Pauli sum."""
    out: PauliSum = {}
    for spin in (0, 1):
        p = spin_orbital_qubit(i, spin)
        q = spin_orbital_qubit(j, spin)
        sum_add(out, sum_multiply(ladder_sum(p, True), ladder_sum(q, False)))
    return out


def effective_one_body(mi: MolecularIntegrals) -> np.ndarray:
    """One-body matrix after normal-ordering the two-body part into E_pq E_rs form."""
    return mi.one_body - 0.5 * np.einsum("prrq->pq", mi.two_body)


def one_body_sum(matrix: np.ndarray, tol: float = 0.0) -> PauliSum:
    n = matrix.shape[0]
    out: PauliSum = {}
    for i in range(n):
        for j in range(n):
            if abs(matrix[i, j]) > tol:
                sum_add(out, excitation_sum(i, j), matrix[i, j])
    return out


def jordan_wigner(mi: MolecularIntegrals) -> QubitHamiltonian:
    """Qubit Hamiltonian of the integrals under the interleaved JW map."""
    n = mi.n_spatial_orbitals
    nq = 2 * n
    acc: PauliSum = {(0, 0): mi.nuclear_repulsion}
    if n == 0:
        return QubitHamiltonian.from_sum(
            0, acc, n_electrons=mi.n_electrons, two_m_s=mi.two_m_s
        )

    exc = {(i, j): excitation_sum(i, j) for i in range(n) for j in range(n)}
    h_eff = effective_one_body(mi)
    for (i, j), e in exc.items():
        if h_eff[i, j] != 0.0:
            sum_add(acc, e, h_eff[i, j])

    g = mi.two_body
    for (i, j), e_ij in exc.items():
        for (k, l), e_kl in exc.items():
            v = g[i, j, k, l]
            if v != 0.0:
                sum_add(acc, sum_multiply(e_ij, e_kl), 0.5 * v)

    return QubitHamiltonian.from_sum(
        nq, acc, n_electrons=mi.n_electrons, two_m_s=mi.two_m_s
    )


def active_space_restriction(
    mi: MolecularIntegrals, n_frozen_core: int, n_active_spatial: int
) -> MolecularIntegrals:
    """Freeze the lowest ``n_frozen_core`` orbitals (doubly occupied) and keep
    the next ``n_active_spatial``; higher orbitals are discarded."""
    n = mi.n_spatial_orbitals
    if n_frozen_core < 0 or n_active_spatial < 0 or n_frozen_core + n_active_spatial > n:
        raise InputError(
            f"window of {n_frozen_core} core + {n_active_spatial} active orbitals "
            f"exceeds {n} orbitals"
        )
    n_el = mi.n_electrons - 2 * n_frozen_core
    if n_el < 0:
        raise InputError(f"cannot freeze {n_frozen_core} core orbitals with {mi.n_electrons} electrons")
    core = slice(0, n_frozen_core)
    act = slice(n_frozen_core, n_frozen_core + n_active_spatial)
    h, g = mi.one_body, mi.two_body

    coulomb = np.einsum("pqcc->pq", g[:, :, core, core])
    exchange = np.einsum("pccq->pq", g[:, core, core, :])
    dressed = h + 2.0 * coulomb - exchange
    e_core = (
        mi.nuclear_repulsion
        + np.trace(h[core, core])
        + np.trace(dressed[core, core])
    )
    return MolecularIntegrals(
        n_active_spatial,
        float(e_core),
        dressed[act, act].copy(),
        g[act, act, act, act].copy(),
        n_el,
        mi.two_m_s,
    )
