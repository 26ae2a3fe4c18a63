"""Partitioning Hamiltonian terms into simultaneously measurable groups.

Three strategies are provided:

* ``qwc`` and ``anticommuting``: greedy first-fit over the terms, visited in
  order of decreasing ``|coefficient|`` (ties broken by canonical text order);
  each term joins the first existing group it is compatible with, else
  starts a new group.
* ``basis_rotation``: a low-rank factorisation of the two-electron tensor.
  Each factor becomes a group of number-operator products that is diagonal
  after an orbital rotation; the diagonal Coulomb part and the diagonal of
  the one-body matrix are measured directly in the computational basis.

``none`` puts every term in its own group.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .encode import (
    MolecularIntegrals,
    QubitHamiltonian,
    effective_one_body,
    ladder_sum,
    one_body_sum,
)
from .errors import InputError, NumericalConsistencyError
from .pauli import (
    PauliString,
    PauliSum,
    PauliTerm,
    anticommutes,
    number_operator_sum,
    sum_add,
    sum_multiply,
)

METHODS = ("none", "qwc", "anticommuting", "basis_rotation")
DEFAULT_TRUNCATION = 1e-8


@dataclass(frozen=True, eq=False)
class Group:
    """One set of jointly measured terms.

    For ``basis_rotation`` groups, ``members`` holds the group operator as
    Z-type Pauli terms in the rotated frame and ``rotation`` the orbital
    rotation ``U`` (columns are rotated orbitals); ``term_indices`` then lists
    the Hamiltonian terms the group's operator touches in the original frame.
    """

    term_indices: tuple[int, ...]
    measurement_basis: PauliString | None = None
    rotation: np.ndarray | None = None
    members: tuple[PauliTerm, ...] | None = None
    label: str = ""

    def to_dict(self) -> dict:
        return {
            "terms": list(self.term_indices),
            "basis": None if self.measurement_basis is None else self.measurement_basis.to_text(),
            "rotation": None if self.rotation is None else self.rotation.tolist(),
        }


@dataclass(frozen=True, eq=False)
class GroupingPlan:
    method: str
    groups: tuple[Group, ...]
    n_qubits: int

    def __len__(self):
        return len(self.groups)

    def to_dict(self) -> dict:
        return {"method": self.method, "groups": [g.to_dict() for g in self.groups]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _visit_order(h: QubitHamiltonian, sort_by_coefficient: bool) -> list[int]:
    order = list(range(len(h.terms)))
    if sort_by_coefficient:
        order.sort(key=lambda i: (-abs(h.terms[i].coefficient), h.terms[i].pauli.sort_key()))
    return order


def group_none(h: QubitHamiltonian) -> GroupingPlan:
    groups = tuple(Group((i,), t.pauli) for i, t in enumerate(h.terms))
    return GroupingPlan("none", groups, h.n_qubits)


def group_qwc(h: QubitHamiltonian, sort_by_coefficient: bool = True) -> GroupingPlan:
    # A term QWC-commutes with every member iff it agrees with the union of
    # member letters on their common support, so one mask pair per group
    # is enough.
    bases: list[list[int]] = []
    members: list[list[int]] = []
    for i in _visit_order(h, sort_by_coefficient):
        p = h.terms[i].pauli
        for g, (bx, bz) in enumerate(bases):
            overlap = (bx | bz) & p.support
            if ((bx ^ p.x) | (bz ^ p.z)) & overlap == 0:
                bases[g] = [bx | p.x, bz | p.z]
                members[g].append(i)
                break
        else:
            bases.append([p.x, p.z])
            members.append([i])
    groups = tuple(
        Group(tuple(m), PauliString(h.n_qubits, bx, bz))
        for m, (bx, bz) in zip(members, bases)
    )
    return GroupingPlan("qwc", groups, h.n_qubits)


def group_anticommuting(h: QubitHamiltonian, sort_by_coefficient: bool = True) -> GroupingPlan:
    members: list[list[int]] = []
    for i in _visit_order(h, sort_by_coefficient):
        p = h.terms[i].pauli
        for m in members:
            if all(anticommutes(p, h.terms[j].pauli) for j in m):
                m.append(i)
                break
        else:
            members.append([i])
    groups = tuple(Group(tuple(m)) for m in members)
    return GroupingPlan("anticommuting", groups, h.n_qubits)


# -- basis-rotation grouping ------------------------------------------------


@dataclass(frozen=True, eq=False)
class TwoBodyFactor:
    """``(1/2) eigenvalue * (sum_k weights_k n'_k)**2`` in the frame of ``rotation``."""

    eigenvalue: float
    rotation: np.ndarray
    weights: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        u = self.rotation
        return u @ np.diag(self.weights) @ u.T


@dataclass(frozen=True, eq=False)
class FactorizedPlan:
    n_spatial_orbitals: int
    nuclear_repulsion: float
    z_only_group: Group
    z_only_operator: PauliSum
    one_body_rotation: np.ndarray
    one_body_weights: np.ndarray
    two_body_factors: tuple[TwoBodyFactor, ...]
    truncation_threshold: float
    reconstruction_error: float
    native_z: bool = True
    diagonal_one_body: np.ndarray = field(default=None)
    coulomb: np.ndarray = field(default=None)

    @property
    def rank(self) -> int:
        return len(self.two_body_factors)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    return vec if vec[k] >= 0 else -vec


def symmetric_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with each eigenvector's largest component positive."""
    try:
        vals, vecs = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalConsistencyError(
            f"eigensolver failed on a {matrix.shape[0]}x{matrix.shape[0]} matrix: {exc}"
        ) from exc
    vecs = np.column_stack([_fix_sign(vecs[:, k]) for k in range(vecs.shape[1])]) if vecs.size else vecs
    return vals, vecs


def _number_sum(weights: np.ndarray) -> PauliSum:
    """``sum_k w_k (n_{k alpha} + n_{k beta})`` on the interleaved layout."""
    out: PauliSum = {}
    for k, w in enumerate(weights):
        if w != 0.0:
            sum_add(out, number_operator_sum(2 * k), w)
            sum_add(out, number_operator_sum(2 * k + 1), w)
    return out


def _diag_terms(acc: PauliSum, n_qubits: int, tol: float = 1e-14) -> tuple[PauliTerm, ...]:
    terms = []
    for (x, z), c in acc.items():
        if x or z:
            if abs(np.imag(c)) > 1e-10:
                raise NumericalConsistencyError("complex coefficient in a diagonal operator")
            if abs(c) > tol:
                terms.append(PauliTerm(PauliString(n_qubits, x, z), float(np.real(c))))
    terms.sort(key=lambda t: t.pauli.sort_key())
    return tuple(terms)


def _coulomb_operator(d: np.ndarray, coulomb: np.ndarray) -> PauliSum:
    n = d.shape[0]
    acc = _number_sum(d)
    occ = [_number_sum(np.eye(n)[p]) for p in range(n)]
    for p in range(n):
        for q in range(n):
            if coulomb[p, q] != 0.0:
                sum_add(acc, sum_multiply(occ[p], occ[q]), 0.5 * coulomb[p, q])
    return acc


def factorize_basis_rotation(
    mi: MolecularIntegrals,
    threshold: float = DEFAULT_TRUNCATION,
    native_z: bool = True,
) -> FactorizedPlan:
    """Low-rank eigen-factorisation of the two-electron part of ``mi``.

    With ``native_z`` the Coulomb elements ``(pp|qq)`` and the diagonal of
    the effective one-body matrix are kept as a computational-basis group
    and only the remainder is factorised.
    """
    if threshold < 0:
        raise InputError("truncation threshold must be non-negative")
    n = mi.n_spatial_orbitals
    h_eff = effective_one_body(mi)
    v = mi.two_body.copy()
    d = np.zeros(n)
    coulomb = np.zeros((n, n))
    if native_z:
        d = np.diag(h_eff).copy()
        h_eff = h_eff - np.diag(d)
        coulomb = np.einsum("ppqq->pq", v).copy()
        for p in range(n):
            for q in range(n):
                v[p, p, q, q] = 0.0

    pair = v.reshape(n * n, n * n)
    pair = 0.5 * (pair + pair.T)
    vals, vecs = symmetric_eigh(pair)
    order = np.argsort(-np.abs(vals), kind="stable")
    factors = []
    rebuilt = np.zeros((n, n, n, n))
    for k in order:
        lam = float(vals[k])
        if abs(lam) < threshold:
            continue
        g = vecs[:, k].reshape(n, n)
        g = 0.5 * (g + g.T)
        f, u = symmetric_eigh(g)
        factor = TwoBodyFactor(lam, u, f)
        factors.append(factor)
        gm = factor.matrix
        rebuilt += lam * np.einsum("pq,rs->pqrs", gm, gm)
    error = float(np.max(np.abs(rebuilt - v))) if n else 0.0

    f0, u0 = symmetric_eigh(h_eff)
    nq = 2 * n
    z_op = _coulomb_operator(d, coulomb) if native_z else {}
    z_group = Group((), None, None, _diag_terms(z_op, nq) if nq else (), "z_only")
    return FactorizedPlan(
        n_spatial_orbitals=n,
        nuclear_repulsion=mi.nuclear_repulsion,
        z_only_group=z_group,
        z_only_operator=z_op,
        one_body_rotation=u0,
        one_body_weights=f0,
        two_body_factors=tuple(factors),
        truncation_threshold=threshold,
        reconstruction_error=error,
        native_z=native_z,
        diagonal_one_body=d,
        coulomb=coulomb,
    )


def factor_frame_operator(factor: TwoBodyFactor) -> PauliSum:
    """A two-body factor as a Z-type Pauli sum in its own rotated frame."""
    nsum = _number_sum(factor.weights)
    return {k: 0.5 * factor.eigenvalue * c for k, c in sum_multiply(nsum, nsum).items()}


def factor_original_operator(factor: TwoBodyFactor) -> PauliSum:
    g = one_body_sum(factor.matrix)
    return {k: 0.5 * factor.eigenvalue * c for k, c in sum_multiply(g, g).items()}


def rotated_pauli_sum(pauli: PauliString, rotation: np.ndarray) -> PauliSum:
    """Original-frame expansion of a rotated-frame Z string.

    Uses ``Z'_{k sigma} = 1 - 2 n'_{k sigma}`` with
    ``n'_{k sigma} = sum_ij U_ik U_jk a+_{i sigma} a_{j sigma}``.
    """
    if not pauli.is_diagonal():
        raise InputError("only Z-type strings have a rotated-frame expansion")
    u = rotation
    n = u.shape[0]
    out: PauliSum = {(0, 0): 1.0}
    for q in range(pauli.n_qubits):
        if not (pauli.z >> q) & 1:
            continue
        k, spin = divmod(q, 2)
        factor: PauliSum = {(0, 0): 1.0}
        for i in range(n):
            for j in range(n):
                c = u[i, k] * u[j, k]
                if c != 0.0:
                    op = sum_multiply(ladder_sum(2 * i + spin, True), ladder_sum(2 * j + spin, False))
                    sum_add(factor, op, -2.0 * c)
        out = sum_multiply(out, factor)
    return out


def _touched(h: QubitHamiltonian, acc: PauliSum, tol: float = 1e-12) -> tuple[int, ...]:
    hits = []
    for (x, z), c in acc.items():
        if (x or z) and abs(c) > tol:
            i = h.index_of(PauliString(h.n_qubits, x, z))
            if i is not None:
                hits.append(i)
    return tuple(sorted(hits))


def factorized_operators(fp: FactorizedPlan) -> list[tuple[str, PauliSum]]:
    """Original-frame operator of every basis-rotation group, in plan order."""
    ops = [("one_body", one_body_sum(fp.one_body_rotation @ np.diag(fp.one_body_weights) @ fp.one_body_rotation.T))]
    ops += [(f"factor_{k}", factor_original_operator(f)) for k, f in enumerate(fp.two_body_factors)]
    if fp.native_z:
        ops.append(("z_only", fp.z_only_operator))
    return ops


def factorized_to_groups(
    fp: FactorizedPlan, h: QubitHamiltonian, tol: float | None = None
) -> GroupingPlan:
    """Turn a factorisation into a measurement plan over ``h``.

    The original-frame operators of all groups must add up to ``h``; the
    default per-coefficient tolerance is 1e-8 plus a truncation allowance.
    """
    n = fp.n_spatial_orbitals
    nq = 2 * n
    if nq != h.n_qubits:
        raise NumericalConsistencyError(
            f"factorisation of {n} orbitals does not match a {h.n_qubits}-qubit Hamiltonian"
        )
    if tol is None:
        tol = 1e-8 + max(1, n) ** 2 * fp.reconstruction_error

    ops = factorized_operators(fp)
    total: PauliSum = {}
    for _, op in ops:
        sum_add(total, op)
    for t in h.terms:
        key = (t.pauli.x, t.pauli.z)
        total[key] = total.get(key, 0.0) - t.coefficient
    total.pop((0, 0), None)
    residual = max((abs(c) for c in total.values()), default=0.0)
    if residual > tol:
        raise NumericalConsistencyError(
            f"basis-rotation groups miss the Hamiltonian by {residual:.3e} (tol {tol:.1e})"
        )

    groups = []
    one_body_frame = _number_sum(fp.one_body_weights)
    groups.append(
        Group(_touched(h, ops[0][1]), None, fp.one_body_rotation, _diag_terms(one_body_frame, nq), "one_body")
    )
    for k, factor in enumerate(fp.two_body_factors):
        groups.append(
            Group(
                _touched(h, ops[k + 1][1]),
                None,
                factor.rotation,
                _diag_terms(factor_frame_operator(factor), nq),
                f"factor_{k}",
            )
        )
    if fp.native_z:
        z = fp.z_only_group
        groups.append(Group(_touched(h, fp.z_only_operator), None, None, z.members, "z_only"))
    groups = [g for g in groups if g.members]
    return GroupingPlan("basis_rotation", tuple(groups), h.n_qubits)


def make_plan(
    h: QubitHamiltonian,
    method: str,
    *,
    integrals: MolecularIntegrals | None = None,
    sort_by_coefficient: bool = True,
    threshold: float = DEFAULT_TRUNCATION,
) -> GroupingPlan:
    if method == "none":
        return group_none(h)
    if method == "qwc":
        return group_qwc(h, sort_by_coefficient)
    if method == "anticommuting":
        return group_anticommuting(h, sort_by_coefficient)
    if method == "basis_rotation":
        if integrals is None:
            raise InputError("basis-rotation grouping needs the molecular integrals")
        return factorized_to_groups(factorize_basis_rotation(integrals, threshold), h)
    raise InputError(f"unknown grouping method {method!r}; choose from {METHODS}")
