"""Stabilizer-code machinery for [[n,1,d]] codes.

A code is defined by its n-1 commuting generators plus one logical X/Z
pair.  Pure errors (one per generator, anticommuting with exactly that
generator and commuting with everything else including the logicals) are
solved once over GF(2) at construction, yielding the canonical three-way
factorization E = T * L * S used throughout decoding.

Logical classes are encoded as 2-bit codes matching the one-qubit Pauli
index: 0 = I, 1 = X, 2 = Z, 3 = Y, so class composition is XOR.  Class
tie-breaking ranks classes I < X < Y < Z.

Syndromes are bit vectors (bit i = 1 iff the error anticommutes with
generator i) with a little-endian integer form for indexing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .exceptions import CapacityError, DimensionError, SchemaError, ValidationError
from .ioutil import load_json
from .pauli import PauliOp, index_from_masks, symplectic_bits

CODE_SCHEMA = "cerdec-code-1"
CLASS_LABELS = "IXZY"           # label of class code c
CLASS_DISPLAY_RANK = (0, 1, 3, 2)  # rank in the order I < X < Y < Z
_DENSE_QUBIT_CAP = 7


def class_label(c: int) -> str:
    return CLASS_LABELS[c]


def tie_break_class(values: np.ndarray) -> int:
    """Index of the maximal entry; ties resolved in the order I < X < Y < Z."""
    values = np.asarray(values, dtype=float)
    best = values.max()
    cands = [c for c in range(4) if values[c] == best]
    return min(cands, key=lambda c: CLASS_DISPLAY_RANK[c])


@dataclass(frozen=True)
class Syndrome:
    """Measurement outcome bits, one per stabilizer generator."""

    bits: tuple
    code: "StabilizerCode" = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) & 1 for b in self.bits))

    @classmethod
    def from_int(cls, value: int, code: "StabilizerCode") -> "Syndrome":
        m = code.n - 1
        return cls(tuple((value >> i) & 1 for i in range(m)), code)

    @property
    def value(self) -> int:
        return sum(b << i for i, b in enumerate(self.bits))

    def __int__(self) -> int:
        return self.value


class TLS(NamedTuple):
    t: PauliOp
    logical: str
    s: PauliOp


def _gf2_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b over GF(2); free variables fixed to 0 (canonical)."""
    a = (a.copy() % 2).astype(np.uint8)
    b = (b.copy() % 2).astype(np.uint8)
    m, k = a.shape
    pivots = []
    r = 0
    for c in range(k):
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        pr = r + hits[0]
        a[[r, pr]] = a[[pr, r]]
        b[[r, pr]] = b[[pr, r]]
        mask = a[:, c].astype(bool)
        mask[r] = False
        a[mask] ^= a[r]
        b[mask] ^= b[r]
        pivots.append((r, c))
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if b[i] and not a[i].any():
            raise ValidationError("inconsistent GF(2) system")
    x = np.zeros(k, dtype=np.uint8)
    for row, col in pivots:
        x[col] = b[row]
    return x


def _gf2_rank(a: np.ndarray) -> int:
    a = (a.copy() % 2).astype(np.uint8)
    m, k = a.shape
    r = 0
    for c in range(k):
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        pr = r + hits[0]
        a[[r, pr]] = a[[pr, r]]
        mask = a[:, c].astype(bool)
        mask[r] = False
        a[mask] ^= a[r]
        r += 1
        if r == m:
            break
    return r


def _symplectic_row(p: PauliOp, n: int) -> np.ndarray:
    """Coefficients of v -> <v, p> over unknowns (x bits | z bits)."""
    row = np.zeros(2 * n, dtype=np.uint8)
    for q in range(n):
        row[q] = (p.z >> q) & 1
        row[n + q] = (p.x >> q) & 1
    return row


class StabilizerCode:
    """An [[n,1,d]] stabilizer code with precomputed decoding tables."""

    def __init__(self, generators, logical_x: PauliOp, logical_z: PauliOp,
                 name: str = ""):
        generators = list(generators)
        if not generators:
            raise ValidationError("need at least one generator")
        n = generators[0].n
        if len(generators) != n - 1:
            raise ValidationError(
                f"[[n,1]] code needs n-1 generators, got {len(generators)} for n={n}"
            )
        for p in generators + [logical_x, logical_z]:
            if p.n != n:
                raise DimensionError("all operators must act on the same qubits")
        for i, g in enumerate(generators):
            for h in generators[i + 1:]:
                if not g.commutes(h):
                    raise ValidationError("generators must commute pairwise")
            if not logical_x.commutes(g) or not logical_z.commutes(g):
                raise ValidationError("logicals must commute with every generator")
        if logical_x.commutes(logical_z):
            raise ValidationError("logical X and Z must anticommute")
        sym = np.stack([_symplectic_row(g, n) for g in generators])
        if _gf2_rank(sym) != n - 1:
            raise ValidationError("generators are not independent")

        self.n = n
        self.name = name or f"[[{n},1]]"
        self.generators = tuple(generators)
        self.logical_x = logical_x
        self.logical_z = logical_z
        self.pure_errors = tuple(self._solve_pure_errors())

    # -- construction helpers ------------------------------------------------

    def _solve_pure_errors(self):
        n = self.n
        rows = [_symplectic_row(g, n) for g in self.generators]
        rows.append(_symplectic_row(self.logical_x, n))
        rows.append(_symplectic_row(self.logical_z, n))
        a = np.stack(rows)
        out = []
        for i in range(n - 1):
            b = np.zeros(n + 1, dtype=np.uint8)
            b[i] = 1
            sol = _gf2_solve(a, b)
            x = int(sum(int(sol[q]) << q for q in range(n)))
            z = int(sum(int(sol[n + q]) << q for q in range(n)))
            out.append(PauliOp(n, x, z))
        return out

    # -- index-space tables ----------------------------------------------------

    @cached_property
    def syndrome_of(self) -> np.ndarray:
        """(4^n,) little-endian syndrome integer of every Pauli index."""
        out = np.zeros(4**self.n, dtype=np.int64)
        for i, g in enumerate(self.generators):
            out |= symplectic_bits(self.n, g) << i
        return out

    @cached_property
    def class_of(self) -> np.ndarray:
        """(4^n,) logical class code of every Pauli index."""
        xc = symplectic_bits(self.n, self.logical_z)
        zc = symplectic_bits(self.n, self.logical_x)
        return xc + 2 * zc

    @cached_property
    def _stabilizer_masks(self):
        m = self.n - 1
        count = 1 << m
        sel = np.arange(count, dtype=np.int64)
        sx = np.zeros(count, dtype=np.int64)
        sz = np.zeros(count, dtype=np.int64)
        for j, g in enumerate(self.generators):
            on = ((sel >> j) & 1).astype(bool)
            sx[on] ^= g.x
            sz[on] ^= g.z
        return sx, sz

    @cached_property
    def stabilizer_indices(self) -> np.ndarray:
        sx, sz = self._stabilizer_masks
        return index_from_masks(sx, sz, self.n)

    @cached_property
    def _pure_masks(self):
        m = self.n - 1
        count = 1 << m
        sel = np.arange(count, dtype=np.int64)
        tx = np.zeros(count, dtype=np.int64)
        tz = np.zeros(count, dtype=np.int64)
        for j, t in enumerate(self.pure_errors):
            on = ((sel >> j) & 1).astype(bool)
            tx[on] ^= t.x
            tz[on] ^= t.z
        return tx, tz

    @cached_property
    def pure_error_indices(self) -> np.ndarray:
        tx, tz = self._pure_masks
        return index_from_masks(tx, tz, self.n)

    @cached_property
    def class_rep_masks(self):
        lx, lz = self.logical_x, self.logical_z
        reps = [(0, 0), (lx.x, lx.z), (lz.x, lz.z), (lx.x ^ lz.x, lx.z ^ lz.z)]
        rx = np.array([r[0] for r in reps], dtype=np.int64)
        rz = np.array([r[1] for r in reps], dtype=np.int64)
        return rx, rz

    @cached_property
    def coset_table(self) -> np.ndarray:
        """(2^{n-1}, 4, 2^{n-1}) Pauli indices of T_s * L_c * S_j.

        Tiles the whole Pauli group: each index appears exactly once.
        """
        tx, tz = self._pure_masks
        rx, rz = self.class_rep_masks
        sx, sz = self._stabilizer_masks
        x = tx[:, None, None] ^ rx[None, :, None] ^ sx[None, None, :]
        z = tz[:, None, None] ^ rz[None, :, None] ^ sz[None, None, :]
        return index_from_masks(x, z, self.n).astype(np.int64)

    @cached_property
    def coset_permutation(self) -> np.ndarray:
        """Argsort grouping Pauli indices by (syndrome, class) cells.

        ``probs[perm].reshape(2^{n-1}, 4, 2^{n-1}).sum(-1)`` produces all
        coset sums in one pass.
        """
        cells = self.syndrome_of * 4 + self.class_of
        return np.argsort(cells, kind="stable")

    @cached_property
    def grouped_digits(self) -> np.ndarray:
        """(4^n, n) per-qubit codes in coset-grouped order.

        Row k is the digit vector of the k-th Pauli of the flattened
        (syndrome, class) cell layout; lets product distributions be
        accumulated directly in grouped order.
        """
        from .pauli import index_tables

        return index_tables(self.n)["digits"][self.coset_permutation]

    @cached_property
    def grouped_digit_triples(self) -> list:
        """Qubits bundled in threes: [(qubits, combined local index array)].

        Cuts the number of full-length passes when accumulating product
        distributions: one gather per bundle instead of one per qubit.
        """
        dg = self.grouped_digits
        out = []
        for start in range(0, self.n, 3):
            qs = tuple(range(start, min(start + 3, self.n)))
            local = np.zeros(len(dg), dtype=np.int64)
            for j, q in enumerate(qs):
                # first qubit of the bundle occupies the most significant
                # digit, matching repeated-outer-product flattening
                local += dg[:, q].astype(np.int64) << (2 * (len(qs) - 1 - j))
            out.append((qs, local))
        return out

    # -- stabilizer-formalism operations ---------------------------------------

    def syndrome(self, error: PauliOp) -> Syndrome:
        if error.n != self.n:
            raise DimensionError(f"error acts on {error.n} qubits, code has {self.n}")
        bits = tuple(g.symplectic_product(error) for g in self.generators)
        return Syndrome(bits, self)

    def pure_error(self, syndrome: Syndrome) -> PauliOp:
        """T_s: the canonical product of pure-error generators for s."""
        idx = int(self.pure_error_indices[int(syndrome)])
        return PauliOp.from_index(idx, self.n)

    def tls_decompose(self, error: PauliOp) -> TLS:
        if error.n != self.n:
            raise DimensionError(f"error acts on {error.n} qubits, code has {self.n}")
        s = self.syndrome(error)
        t = self.pure_error(s)
        c = int(self.class_of[error.index])
        rx, rz = self.class_rep_masks
        rep = PauliOp(self.n, int(rx[c]), int(rz[c]))
        stab = error.multiply(t).multiply(rep)
        return TLS(t, CLASS_LABELS[c], stab)

    def coset(self, syndrome: Syndrome, logical: str):
        """Iterate the 2^{n-1} errors with this syndrome and logical class."""
        c = CLASS_LABELS.index(logical.upper())
        for idx in self.coset_table[int(syndrome), c]:
            yield PauliOp.from_index(int(idx), self.n)

    def projector(self, syndrome: Syndrome) -> np.ndarray:
        """Dense projector onto the syndrome subspace."""
        if self.n > _DENSE_QUBIT_CAP:
            raise CapacityError(f"dense projector limited to n<={_DENSE_QUBIT_CAP}")
        dim = 2**self.n
        out = np.eye(dim, dtype=complex)
        for bit, g in zip(syndrome.bits, self.generators):
            sign = -1.0 if bit else 1.0
            out = out @ (np.eye(dim) + sign * g.to_matrix()) / 2
        return out

    # -- dense encoded-state machinery ------------------------------------------

    @cached_property
    def encoding_isometry(self) -> np.ndarray:
        """2^n x 2 isometry; columns are the logical |0> and |1> states."""
        if self.n > _DENSE_QUBIT_CAP:
            raise CapacityError(f"dense isometry limited to n<={_DENSE_QUBIT_CAP}")
        dim = 2**self.n
        proj = np.eye(dim, dtype=complex)
        for g in self.generators:
            proj = proj @ (np.eye(dim) + g.to_matrix()) / 2
        proj = proj @ (np.eye(dim) + self.logical_z.to_matrix()) / 2
        norms = np.linalg.norm(proj, axis=0)
        col = int(np.argmax(norms))
        if norms[col] < 1e-9:
            raise ValidationError("failed to construct an encoded basis state")
        zero = proj[:, col] / norms[col]
        one = self.logical_x.to_matrix() @ zero
        v = np.stack([zero, one], axis=1)
        if np.abs(v.conj().T @ v - np.eye(2)).max() > 1e-12:
            raise ValidationError("encoding isometry failed orthonormality check")
        return v

    @cached_property
    def syndrome_basis(self) -> np.ndarray:
        """Unitary whose column 2 s + l is T_s applied to logical state l."""
        v = self.encoding_isometry
        dim = 2**self.n
        w = np.empty((dim, dim), dtype=complex)
        for s in range(1 << (self.n - 1)):
            t = PauliOp.from_index(int(self.pure_error_indices[s]), self.n)
            w[:, 2 * s : 2 * s + 2] = t.to_matrix() @ v
        return w


# ---------------------------------------------------------------------------
# Built-in code and persistence
# ---------------------------------------------------------------------------


def steane() -> StabilizerCode:
    """The [[7,1,3]] CSS code with weight-4 generators and weight-3 logicals."""
    supports = [(0, 1, 2, 3), (1, 2, 4, 5), (2, 3, 5, 6)]
    gens = []
    for kind in "XZ":
        for sup in supports:
            p = PauliOp.identity(7)
            for q in sup:
                p = p.multiply(PauliOp.single(7, q, kind))
            gens.append(p)
    lx = PauliOp.from_string("IIIIXXX")
    lz = PauliOp.from_string("IIIIZZZ")
    return StabilizerCode(gens, lx, lz, name="steane")


def code_from_dict(data: dict) -> StabilizerCode:
    if data.get("version") != CODE_SCHEMA:
        raise SchemaError(f"expected {CODE_SCHEMA}, got {data.get('version')!r}")
    gens = [PauliOp.from_string(s) for s in data["generators"]]
    return StabilizerCode(
        gens,
        PauliOp.from_string(data["logical_x"]),
        PauliOp.from_string(data["logical_z"]),
        name=data.get("name", ""),
    )


def code_to_dict(code: StabilizerCode) -> dict:
    return {
        "version": CODE_SCHEMA,
        "name": code.name,
        "n": code.n,
        "generators": [str(g) for g in code.generators],
        "logical_x": str(code.logical_x),
        "logical_z": str(code.logical_z),
    }


def load_code(path) -> StabilizerCode:
    return code_from_dict(load_json(path))


def get_code(name: str) -> StabilizerCode:
    if name == "steane":
        return steane()
    raise ValidationError(f"unknown built-in code {name!r}")
