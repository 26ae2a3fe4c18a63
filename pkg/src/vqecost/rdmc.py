"""Variance reduction by adding operators that vanish on the target sector.

The Hamiltonian is shifted as ``H' = H - sum_i alpha_i (C_i - c_i)`` where
each ``C_i`` has eigenvalue ``c_i`` on every state with the chosen electron
number and ``2*S_z``.  Expectation values on that sector are unchanged, but
the Pauli coefficients, and therefore K, move with ``alpha``.

The constraint family is symmetry-derived: ``N - n``, ``S_z - m_s``,
``(N - n)**2`` and ``n_p (N - n)`` for every spin-orbital ``p``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .encode import QubitHamiltonian
from .errors import InputError, NumericalConsistencyError, UnsupportedPlanError
from .estimator import (
    CovarianceModel,
    VarianceModel,
    compute_k,
    group_covariances,
)
from .grouping import make_plan
from .pauli import PauliString, PauliSum, PauliTerm, number_operator_sum, sum_add, sum_multiply

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    n_qubits: int
    operators: tuple[PauliSum, ...]
    target_values: tuple[float, ...]
    labels: tuple[str, ...] = ()

    def __len__(self):
        return len(self.operators)

    def zero_operator(self, i: int) -> PauliSum:
        """``C_i - c_i`` as a Pauli sum."""
        op = dict(self.operators[i])
        op[(0, 0)] = op.get((0, 0), 0.0) - self.target_values[i]
        return op

    def as_hamiltonian(self, i: int) -> QubitHamiltonian:
        return QubitHamiltonian.from_sum(self.n_qubits, self.operators[i])


def standard_constraints(n_qubits: int, n_electrons: int, two_m_s: int = 0) -> ConstraintSet:
    if n_qubits % 2:
        raise InputError("interleaved spin layout needs an even qubit count")
    if not 0 <= n_electrons <= n_qubits:
        raise InputError(f"{n_electrons} electrons in {n_qubits} spin-orbitals")
    number: PauliSum = {}
    spin_z: PauliSum = {}
    for p in range(n_qubits):
        sum_add(number, number_operator_sum(p))
        sum_add(spin_z, number_operator_sum(p), 0.5 if p % 2 == 0 else -0.5)
    shifted_n = dict(number)
    shifted_n[(0, 0)] = shifted_n.get((0, 0), 0.0) - n_electrons

    ops = [number, spin_z, sum_multiply(shifted_n, shifted_n)]
    targets = [float(n_electrons), two_m_s / 2.0, 0.0]
    labels = ["N", "Sz", "(N-n)^2"]
    for p in range(n_qubits):
        ops.append(sum_multiply(number_operator_sum(p), shifted_n))
        targets.append(0.0)
        labels.append(f"n_{p}(N-n)")
    ops = [{k: c.real if isinstance(c, complex) else c for k, c in op.items()} for op in ops]
    return ConstraintSet(n_qubits, tuple(ops), tuple(targets), tuple(labels))


def shift_hamiltonian(
    h: QubitHamiltonian, cs: ConstraintSet, alphas
) -> QubitHamiltonian:
    acc = h.to_sum()
    for i, a in enumerate(alphas):
        if a != 0.0:
            sum_add(acc, cs.zero_operator(i), -a)
    return QubitHamiltonian.from_sum(
        h.n_qubits, acc, n_electrons=h.n_electrons, two_m_s=h.two_m_s
    )


@dataclass
class ShiftedHamiltonian:
    base: QubitHamiltonian
    alphas: list[float]
    shifted: QubitHamiltonian
    k_before: float
    k_after: float
    status: str = "converged"
    n_evaluations: int = 0
    sweeps: int = 0
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def reduction_factor(self) -> float:
        return self.k_before / self.k_after if self.k_after > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "k_before": self.k_before,
            "k_after": self.k_after,
            "reduction_factor": self.reduction_factor,
            "status": self.status,
            "evaluations": self.n_evaluations,
            "sweeps": self.sweeps,
        }


class _BudgetExhausted(Exception):
    pass


class _Objective:
    """K as a function of alpha for one fixed grouping of the union term set."""

    def __init__(self, h, cs, alphas, method, vm, cm, counter):
        self.counter = counter
        union: dict[tuple[int, int], int] = {}
        for t in h.terms:
            union.setdefault((t.pauli.x, t.pauli.z), len(union))
        for i in range(len(cs)):
            for key, c in cs.zero_operator(i).items():
                if key != (0, 0) and abs(c) > 1e-14:
                    union.setdefault(key, len(union))
        keys = list(union)
        self.base = np.array([h.coefficient(PauliString(h.n_qubits, *k)) for k in keys])
        self.shift = np.zeros((len(keys), len(cs)))
        for i in range(len(cs)):
            for key, c in cs.zero_operator(i).items():
                if key in union:
                    self.shift[union[key], i] = np.real(c)
        coeffs = self.coefficients(alphas)
        # stable term order so zero coefficients do not reshuffle the plan
        terms = sorted(
            (PauliTerm(PauliString(h.n_qubits, *k), float(c)) for k, c in zip(keys, coeffs)),
            key=lambda t: t.pauli.sort_key(),
        )
        self.position = [union[(t.pauli.x, t.pauli.z)] for t in terms]
        work = QubitHamiltonian(h.n_qubits, tuple(terms), 0.0)
        plan = make_plan(work, method)
        covs = group_covariances(work, plan, vm, cm)
        self.blocks = []
        for group, (_, cov) in zip(plan.groups, covs):
            rows = [self.position[t] for t in group.term_indices]
            self.blocks.append((np.array(rows, dtype=int), cov))

    def coefficients(self, alphas) -> np.ndarray:
        return self.base - self.shift @ np.asarray(alphas, dtype=float)

    def __call__(self, alphas) -> float:
        if self.counter["left"] <= 0:
            raise _BudgetExhausted
        self.counter["left"] -= 1
        self.counter["used"] += 1
        c = self.coefficients(alphas)
        total = 0.0
        for rows, cov in self.blocks:
            v = c[rows]
            total += math.sqrt(max(float(v @ cov @ v), 0.0))
        return total * total


def _line_search(f, x0: float, f0: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section minimisation of a convex 1-D function around ``x0``."""
    step = max(1e-3, 0.1 * abs(x0))
    fa, fb = f(x0 - step), f(x0 + step)
    if f0 <= fa and f0 <= fb:
        lo, hi = x0 - step, x0 + step
    else:
        direction = 1.0 if fb < fa else -1.0
        prev, cur, f_cur = x0, x0 + direction * step, min(fa, fb)
        while True:
            step *= 2.0
            nxt = cur + direction * step
            f_nxt = f(nxt)
            if f_nxt >= f_cur:
                break
            prev, cur, f_cur = cur, nxt, f_nxt
        lo, hi = sorted((prev, nxt))
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * (1.0 + abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    best = min((fx, x), (f0, x0), (fc, c), (fd, d))
    return best[1], best[0]


def _k_of(h, method, vm, cm) -> float:
    return compute_k(h, make_plan(h, method), vm, cm).k


def _lp_shift(h: QubitHamiltonian, cs: ConstraintSet) -> np.ndarray:
    """Minimise ``sum_a |h'_a|`` over alpha as a linear program (epigraph form)."""
    keys: dict[tuple[int, int], int] = {}
    for t in h.terms:
        keys.setdefault((t.pauli.x, t.pauli.z), len(keys))
    for i in range(len(cs)):
        for key in cs.zero_operator(i):
            if key != (0, 0):
                keys.setdefault(key, len(keys))
    m, k = len(keys), len(cs)
    hvec = np.zeros(m)
    for t in h.terms:
        hvec[keys[(t.pauli.x, t.pauli.z)]] = t.coefficient
    zmat = np.zeros((m, k))
    for i in range(k):
        for key, c in cs.zero_operator(i).items():
            if key != (0, 0):
                zmat[keys[key], i] = np.real(c)
    # variables: [alpha (k, free), t (m, >= 0)]
    cost = np.concatenate([np.zeros(k), np.ones(m)])
    eye = np.eye(m)
    a_ub = np.block([[-zmat, -eye], [zmat, -eye]])
    b_ub = np.concatenate([-hvec, hvec])
    bounds = [(None, None)] * k + [(0, None)] * m
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise NumericalConsistencyError(f"linear program failed: {res.message}")
    return res.x[:k]


def optimize_shift(
    h: QubitHamiltonian,
    cs: ConstraintSet,
    plan_method: str = "qwc",
    vm: VarianceModel | None = None,
    cm: CovarianceModel | None = None,
    optimizer_budget: int = 20000,
    max_sweeps: int = 50,
    rel_tol: float = 1e-6,
) -> ShiftedHamiltonian:
    """Choose constraint coefficients that minimise K of the shifted Hamiltonian.

    Singleton plans with unit variances and zero covariances reduce to an L1
    problem solved exactly by linear programming.  Everything else uses
    coordinate descent over alpha in index order with a golden-section line
    search, regrouping the terms after every sweep.  ``optimizer_budget``
    caps the number of K evaluations; the best shift seen is returned, and
    never one with larger K than the unshifted Hamiltonian.
    """
    vm = vm or VarianceModel()
    cm = cm or CovarianceModel()
    if plan_method == "basis_rotation":
        raise UnsupportedPlanError(
            "constraint shifts are applied in the qubit picture; basis-rotation "
            "plans need spin-free integrals"
        )
    if cs.n_qubits != h.n_qubits:
        raise InputError("constraints and Hamiltonian act on different qubit counts")
    k_before = _k_of(h, plan_method, vm, cm)
    zeros = [0.0] * len(cs)
    if optimizer_budget <= 0 or len(cs) == 0:
        return ShiftedHamiltonian(h, zeros, h, k_before, k_before, "no_budget", 0, 0)

    if plan_method == "none" and vm.kind == "upper_bound" and cm.kind == "zero":
        alphas = _lp_shift(h, cs).tolist()
        shifted = shift_hamiltonian(h, cs, alphas)
        k_after = _k_of(shifted, plan_method, vm, cm)
        if k_after > k_before:
            return ShiftedHamiltonian(h, zeros, h, k_before, k_before, "converged", 1, 0)
        return ShiftedHamiltonian(h, alphas, shifted, k_before, k_after, "converged", 1, 0)

    counter = {"left": optimizer_budget, "used": 0}
    alphas = list(zeros)
    best_alphas, best_k = list(zeros), k_before
    history = [k_before]
    status = "budget_exhausted"
    sweeps = 0
    try:
        for sweeps in range(1, max_sweeps + 1):
            objective = _Objective(h, cs, alphas, plan_method, vm, cm, counter)
            k_start = objective(alphas)
            k_cur = k_start
            for i in range(len(cs)):
                if not np.any(objective.shift[:, i]):
                    continue

                def along(a, i=i):
                    trial = list(alphas)
                    trial[i] = a
                    return objective(trial)

                alphas[i], k_cur = _line_search(along, alphas[i], k_cur)
            k_final = _k_of(shift_hamiltonian(h, cs, alphas), plan_method, vm, cm)
            history.append(k_final)
            if k_final < best_k:
                best_alphas, best_k = list(alphas), k_final
            if k_start - k_cur <= rel_tol * max(k_start, 1e-300):
                status = "converged"
                break
        else:
            status = "max_sweeps"
    except _BudgetExhausted:
        if sweeps <= 1:
            status = "partial"
            warnings.warn(
                "optimizer budget ran out before the first sweep finished; "
                "returning the best shift found so far",
                RuntimeWarning,
                stacklevel=2,
            )
    shifted = shift_hamiltonian(h, cs, best_alphas) if best_k < k_before else h
    if best_k >= k_before:
        best_alphas = list(zeros)
        best_k = k_before
    return ShiftedHamiltonian(
        h, best_alphas, shifted, k_before, best_k, status, counter["used"], sweeps, history
    )
