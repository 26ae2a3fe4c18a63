"""Multi-qubit Pauli operators in the symplectic (bit-mask) representation.

Qubit ``q`` corresponds to bit ``q`` of the ``x`` and ``z`` masks and to
character ``q`` of the text form, so ``"XIZ"`` is X on qubit 0 and Z on
qubit 2.  A single-qubit factor is decoded from its mask bits as::

    (x, z) = (0, 0) -> I,  (1, 0) -> X,  (1, 1) -> Y,  (0, 1) -> Z

which means the operator equals ``i**popcount(x & z) * X**x Z**z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DimensionError, ParseError

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}

# i**k for k mod 4
PHASES = (1, 1j, -1, -1j)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Pauli operators (no coefficient)."""

    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("a PauliString needs at least one qubit")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("mask has bits beyond n_qubits")

    @classmethod
    def from_text(cls, text: str) -> PauliString:
        return pauli_from_text(text)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits, 0, 0)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> PauliString:
        xb, zb = _LETTER_BITS[letter]
        return cls(n_qubits, xb << qubit, zb << qubit)

    def letter(self, qubit: int) -> str:
        return _BITS_LETTER[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    def to_text(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    def __str__(self) -> str:
        return self.to_text()

    @property
    def support(self) -> int:
        """Bit mask of qubits carrying a non-identity factor."""
        return self.x | self.z

    @property
    def weight(self) -> int:
        return self.support.bit_count()

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def is_diagonal(self) -> bool:
        """True for strings made of I and Z only."""
        return self.x == 0

    def sort_key(self) -> str:
        # lexicographic order over the text form is the canonical order
        return self.to_text()

    def __lt__(self, other: PauliString) -> bool:
        return self.sort_key() < other.sort_key()


@dataclass(frozen=True)
class PauliTerm:
    """A PauliString with a real coefficient."""

    pauli: PauliString
    coefficient: float

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise ValueError(f"non-finite coefficient {self.coefficient!r}")


def pauli_from_text(text: str) -> PauliString:
    """Parse a string over ``{I, X, Y, Z}`` into a PauliString."""
    if not text:
        raise ParseError("empty Pauli string")
    x = z = 0
    for q, ch in enumerate(text):
        try:
            xb, zb = _LETTER_BITS[ch]
        except KeyError:
            raise ParseError(f"invalid Pauli letter {ch!r}", position=q) from None
        x |= xb << q
        z |= zb << q
    return PauliString(len(text), x, z)


def _check_dims(p: PauliString, q: PauliString):
    if p.n_qubits != q.n_qubits:
        raise DimensionError(
            f"Pauli strings act on {p.n_qubits} and {q.n_qubits} qubits"
        )


def product_masks(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, int]:
    """Multiply two Pauli masks.

    Returns ``(k, x, z)`` such that ``P1 P2 = i**k P(x, z)``.
    """
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    k = (
        (x1 & z1).bit_count()
        + (x2 & z2).bit_count()
        + 2 * (z1 & x2).bit_count()
        - (x3 & z3).bit_count()
    )
    return k % 4, x3, z3


def pauli_product(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Exact product ``p * q`` as ``(phase, PauliString)`` with phase in {±1, ±i}."""
    _check_dims(p, q)
    k, x, z = product_masks(p.x, p.z, q.x, q.z)
    return PHASES[k], PauliString(p.n_qubits, x, z)


def qubit_wise_commutes(p: PauliString, q: PauliString) -> bool:
    """True iff the factors on every qubit are equal or one is the identity."""
    _check_dims(p, q)
    overlap = p.support & q.support
    return ((p.x ^ q.x) | (p.z ^ q.z)) & overlap == 0


def fully_commutes(p: PauliString, q: PauliString) -> bool:
    """True iff ``p`` and ``q`` commute as operators (symplectic product is even)."""
    _check_dims(p, q)
    return ((p.x & q.z) ^ (p.z & q.x)).bit_count() % 2 == 0


def anticommutes(p: PauliString, q: PauliString) -> bool:
    return not fully_commutes(p, q)


# -- Pauli sums -------------------------------------------------------------
#
# Accumulators used while building operators are plain dicts mapping
# ``(x, z)`` mask tuples to complex coefficients.  They are cheap to hash
# and merge, which matters in the Jordan-Wigner inner loops.

PauliSum = dict


def sum_add(acc: PauliSum, other: PauliSum, scale: complex = 1.0) -> PauliSum:
    """In-place ``acc += scale * other``; returns ``acc``."""
    for key, c in other.items():
        acc[key] = acc.get(key, 0.0) + scale * c
    return acc


def sum_multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    out: PauliSum = {}
    for (x1, z1), c1 in a.items():
        for (x2, z2), c2 in b.items():
            k, x, z = product_masks(x1, z1, x2, z2)
            key = (x, z)
            out[key] = out.get(key, 0.0) + PHASES[k] * c1 * c2
    return out


def sum_prune(acc: PauliSum, tol: float = 1e-12) -> PauliSum:
    return {k: c for k, c in acc.items() if abs(c) >= tol}


def number_operator_sum(qubit: int) -> PauliSum:
    """JW image of the occupation number on ``qubit``: (I - Z_q) / 2."""
    return {(0, 0): 0.5, (0, 1 << qubit): -0.5}
