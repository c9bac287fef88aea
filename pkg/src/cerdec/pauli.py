"""Symplectic (phase-free) n-qubit Pauli algebra.

A Pauli error class is stored as two bitmasks ``x`` and ``z`` over qubits
(bit ``q`` set means an X / Z factor on qubit ``q``).  The canonical integer
index interleaves two bits per qubit, ``code(q) = x_q + 2 * z_q``, with
qubit 0 in the least-significant position:

    code 0 = I, 1 = X, 2 = Z, 3 = Y

This makes the eigenvalue/error-rate conversion a plain radix-4 butterfly
and gives a total, stable ordering used for deterministic tie-breaking.

Global phases are never tracked: products are XORs of bitmasks.  The only
place a phase appears is :func:`to_matrix`, which inserts the ``i`` per
``Y = iXZ`` factor so the dense operator is Hermitian.

Text form: strings over ``IXYZ`` with the leftmost character acting on
qubit 0 (so ``"XIY"`` is X on qubit 0, Y on qubit 2).

Dense 2^n x 2^n matrices use the convention that qubit 0 is the most
significant bit of the computational-basis index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import CapacityError, DimensionError, ValidationError

_CHARS = "IXZY"  # position = 2-bit code x + 2z
_MATRIX_QUBIT_CAP = 10

_FACTORS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _parity(v: int) -> int:
    return bin(v).count("1") & 1


@dataclass(frozen=True)
class PauliOp:
    """An n-qubit Pauli error class in symplectic form.

    Ordering compares ``(n, index)``, so sorting follows the canonical
    index order used for tie-breaking everywhere downstream.
    """

    n: int
    x: int
    z: int

    def __lt__(self, other: "PauliOp") -> bool:
        return (self.n, self.index) < (other.n, other.index)

    def __le__(self, other: "PauliOp") -> bool:
        return (self.n, self.index) <= (other.n, other.index)

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"need at least one qubit, got n={self.n}")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValidationError("bitmask exceeds qubit count")

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliOp":
        return cls(n, 0, 0)

    @classmethod
    def from_index(cls, index: int, n: int) -> "PauliOp":
        if not 0 <= index < 4**n:
            raise ValidationError(f"index {index} out of range for n={n}")
        x = z = 0
        for q in range(n):
            code = (index >> (2 * q)) & 3
            x |= (code & 1) << q
            z |= (code >> 1) << q
        return cls(n, x, z)

    @classmethod
    def from_string(cls, text: str) -> "PauliOp":
        x = z = 0
        for q, ch in enumerate(text.upper()):
            if ch not in _CHARS:
                raise ValidationError(f"invalid Pauli character {ch!r}")
            code = _CHARS.index(ch)
            x |= (code & 1) << q
            z |= (code >> 1) << q
        return cls(len(text), x, z)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PauliOp":
        """One nontrivial factor ``kind`` in {X, Y, Z} on ``qubit``."""
        code = _CHARS.index(kind.upper())
        return cls(n, (code & 1) << qubit, (code >> 1) << qubit)

    # -- views -------------------------------------------------------------

    @property
    def index(self) -> int:
        idx = 0
        for q in range(self.n):
            code = ((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)
            idx |= code << (2 * q)
        return idx

    def code(self, qubit: int) -> int:
        return ((self.x >> qubit) & 1) | (((self.z >> qubit) & 1) << 1)

    def __str__(self) -> str:
        return "".join(_CHARS[self.code(q)] for q in range(self.n))

    def support(self) -> frozenset:
        return frozenset(q for q in range(self.n) if self.code(q))

    def weight(self) -> int:
        return bin(self.x | self.z).count("1")

    def restrict(self, qubits) -> "PauliOp":
        """Keep factors on ``qubits``, identity elsewhere (same n)."""
        mask = 0
        for q in qubits:
            mask |= 1 << q
        return PauliOp(self.n, self.x & mask, self.z & mask)

    # -- algebra -----------------------------------------------------------

    def multiply(self, other: "PauliOp") -> "PauliOp":
        if self.n != other.n:
            raise DimensionError(f"qubit count mismatch: {self.n} != {other.n}")
        return PauliOp(self.n, self.x ^ other.x, self.z ^ other.z)

    def __mul__(self, other: "PauliOp") -> "PauliOp":
        return self.multiply(other)

    def commutes(self, other: "PauliOp") -> bool:
        if self.n != other.n:
            raise DimensionError(f"qubit count mismatch: {self.n} != {other.n}")
        return (_parity(self.x & other.z) ^ _parity(self.z & other.x)) == 0

    def symplectic_product(self, other: "PauliOp") -> int:
        """0 if the operators commute, 1 if they anticommute."""
        if self.n != other.n:
            raise DimensionError(f"qubit count mismatch: {self.n} != {other.n}")
        return _parity(self.x & other.z) ^ _parity(self.z & other.x)

    # -- dense form ---------------------------------------------------------

    def to_matrix(self) -> np.ndarray:
        """Hermitian unitary 2^n x 2^n matrix (qubit 0 = most significant bit)."""
        if self.n > _MATRIX_QUBIT_CAP:
            raise CapacityError(
                f"dense operator for n={self.n} exceeds the n<={_MATRIX_QUBIT_CAP} guard"
            )
        out = np.ones((1, 1), dtype=complex)
        for q in range(self.n):
            out = np.kron(out, _FACTORS[_CHARS[self.code(q)]])
        return out


def multiply(p: PauliOp, q: PauliOp) -> PauliOp:
    return p.multiply(q)


def commutes(p: PauliOp, q: PauliOp) -> bool:
    return p.commutes(q)


def to_matrix(p: PauliOp) -> np.ndarray:
    return p.to_matrix()


def support(p: PauliOp) -> frozenset:
    return p.support()


def weight(p: PauliOp) -> int:
    return p.weight()


def all_paulis(n: int):
    """Iterate the 4^n Pauli classes in canonical index order."""
    for idx in range(4**n):
        yield PauliOp.from_index(idx, n)


# ---------------------------------------------------------------------------
# Vectorized index-space tables.  Everything downstream (coset enumeration,
# transforms, selections) works on dense length-4^n arrays indexed by the
# canonical Pauli index; these cached tables provide the per-index masks.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def index_tables(n: int):
    """Per-index lookup arrays for all 4^n Paulis.

    Returns a dict with:
      digits  (4^n, n) uint8   per-qubit 2-bit codes
      xmask   (4^n,)   int64   X bitmask over qubits
      zmask   (4^n,)   int64   Z bitmask over qubits
      weight  (4^n,)   int64   Hamming weight of the support
    """
    size = 4**n
    idx = np.arange(size, dtype=np.int64)
    digits = np.empty((size, n), dtype=np.uint8)
    xmask = np.zeros(size, dtype=np.int64)
    zmask = np.zeros(size, dtype=np.int64)
    for q in range(n):
        code = (idx >> (2 * q)) & 3
        digits[:, q] = code
        xmask |= (code & 1) << q
        zmask |= (code >> 1) << q
    wt = (digits != 0).sum(axis=1).astype(np.int64)
    return {"digits": digits, "xmask": xmask, "zmask": zmask, "weight": wt}


@lru_cache(maxsize=None)
def _popcount16():
    v = np.arange(1 << 16, dtype=np.uint16)
    t = np.zeros(1 << 16, dtype=np.uint8)
    for b in range(16):
        t += ((v >> b) & 1).astype(np.uint8)
    return t


def parity_of(values: np.ndarray) -> np.ndarray:
    """Bit-parity of each entry; entries must fit in 16 bits (n <= 16)."""
    return (_popcount16()[values.astype(np.uint16)] & 1).astype(np.int64)


def index_from_masks(x: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    """Canonical indices for arrays of qubit-space (x, z) bitmasks."""
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    idx = np.zeros_like(x)
    for q in range(n):
        code = ((x >> q) & 1) | (((z >> q) & 1) << 1)
        idx |= code << (2 * q)
    return idx


def symplectic_bits(n: int, ref: PauliOp) -> np.ndarray:
    """For every index: 1 if that Pauli anticommutes with ``ref`` else 0."""
    t = index_tables(n)
    return parity_of(t["xmask"] & ref.z) ^ parity_of(t["zmask"] & ref.x)
