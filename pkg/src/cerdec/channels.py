"""Interchangeable CPTP-map representations and channel metrics.

Five concrete representations share one interface: dense unitary, operator
sum (Kraus), Pauli mixture, tensor product of factors on disjoint supports,
and a real transfer matrix in the Hermitian-Pauli basis (used for one-qubit
logical channels).

Normalization conventions: transfer-matrix entries are
``Tr(ch(P) Q) / 2^n`` so the identity-identity entry is 1, and the diagonal
of the chi matrix is a probability vector over Pauli error classes.  The
basis ordering everywhere is the canonical Pauli index (I, X, Z, Y per
qubit, qubit 0 least significant).

Channels are immutable after construction; all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import dense
from .exceptions import CapacityError, DimensionError, SchemaError, ValidationError
from .ioutil import decode_complex_matrix, encode_complex_matrix

CHANNEL_SCHEMA = "cerdec-chan-1"
DEFAULT_KRAUS_CAP = 1024

NEG_CLAMP = 1e-12       # probabilities above -NEG_CLAMP are clamped to zero
SUM_TOL = 1e-9          # distributions must sum to 1 within this
CPTP_TOL = 1e-10        # Kraus completeness / unitarity of dense matrices


# ---------------------------------------------------------------------------
# Pauli error-rate vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PauliDist:
    """Probability vector over the 4^n Pauli error classes.

    Entries in [-1e-12, 0) are clamped to zero at construction; anything
    more negative, or a total off 1 by more than 1e-9, raises.
    """

    n: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (4**self.n,):
            raise DimensionError(
                f"distribution length {probs.shape} does not match n={self.n}"
            )
        low = probs.min()
        if low < -NEG_CLAMP:
            raise ValidationError(f"negative probability {low} below clamp tolerance")
        if low < 0:
            probs = np.where(probs < 0, 0.0, probs)
        total = probs.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"probabilities sum to {total}, expected 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point_mass(cls, n: int, index: int = 0) -> "PauliDist":
        probs = np.zeros(4**n)
        probs[index] = 1.0
        return cls(n, probs)

    @classmethod
    def from_single_qubit(cls, marginals: np.ndarray) -> "PauliDist":
        """Product distribution from an (n, 4) array of one-qubit rows."""
        marginals = np.asarray(marginals, dtype=float)
        n = marginals.shape[0]
        probs = np.ones(1)
        for q in range(n - 1, -1, -1):
            probs = np.multiply.outer(probs, marginals[q]).reshape(-1)
        # outer loops put qubit 0 in the fastest-varying position
        return cls(n, probs)

    def __getitem__(self, index: int) -> float:
        return float(self.probs[index])


# ---------------------------------------------------------------------------
# Walsh-Hadamard conversion between error rates and transfer eigenvalues
# ---------------------------------------------------------------------------

# Symplectic character kernel over one qubit, basis order I, X, Z, Y:
# K[a, b] = (-1)^{<a, b>} with <a, b> the symplectic form.
_K4 = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)


def _character_transform(vec: np.ndarray) -> np.ndarray:
    """Apply the +-1 character kernel along every base-4 digit (radix-4 FFT)."""
    vec = np.asarray(vec, dtype=float)
    size = vec.shape[0]
    n = 0
    while 4**n < size:
        n += 1
    if 4**n != size:
        raise DimensionError(f"length {size} is not a power of 4")
    t = vec.reshape((4,) * n)
    for ax in range(n):
        t = np.moveaxis(np.tensordot(_K4, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


def wht_chi_to_ptm(chi) -> np.ndarray:
    """Error rates -> Pauli-basis eigenvalues, lambda_Q = sum_P chi_P (-1)^<P,Q>."""
    vec = chi.probs if isinstance(chi, PauliDist) else np.asarray(chi, dtype=float)
    return _character_transform(vec)


def wht_ptm_to_chi(eigenvalues: np.ndarray) -> PauliDist:
    """Eigenvalues -> error rates, chi_P = 4^-n sum_Q lambda_Q (-1)^<P,Q>."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    size = eigenvalues.shape[0]
    probs = _character_transform(eigenvalues) / size
    n = 0
    while 4**n < size:
        n += 1
    return PauliDist(n, probs)


# ---------------------------------------------------------------------------
# Channel representations
# ---------------------------------------------------------------------------


class Channel:
    """Base class; concrete subclasses are immutable after construction."""

    n: int

    def chi_diagonal(self) -> PauliDist:
        return chi_diagonal(self)

    def infidelity(self) -> float:
        return process_infidelity(self)


class UnitaryChannel(Channel):
    def __init__(self, u: np.ndarray):
        u = np.asarray(u, dtype=complex)
        dim = u.shape[0]
        n = int(round(np.log2(dim)))
        if u.shape != (dim, dim) or 2**n != dim:
            raise DimensionError(f"unitary shape {u.shape} is not 2^n x 2^n")
        if np.abs(u.conj().T @ u - np.eye(dim)).max() > CPTP_TOL:
            raise ValidationError("matrix is not unitary within tolerance")
        self.n = n
        self.u = u


class KrausChannel(Channel):
    def __init__(self, kraus, validate: bool = True):
        ops = np.asarray(kraus, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionError("Kraus operators must be a stack of square matrices")
        dim = ops.shape[1]
        n = int(round(np.log2(dim)))
        if 2**n != dim:
            raise DimensionError(f"Kraus dimension {dim} is not a power of 2")
        if validate:
            comp = np.einsum("kij,kil->jl", ops.conj(), ops)
            if np.abs(comp - np.eye(dim)).max() > CPTP_TOL:
                raise ValidationError("Kraus completeness relation violated")
        self.n = n
        self.kraus = ops


class PauliChannel(Channel):
    def __init__(self, dist: PauliDist):
        if not isinstance(dist, PauliDist):
            dist = PauliDist(int(round(np.log(len(dist)) / np.log(4))), dist)
        self.n = dist.n
        self.dist = dist


class ProductChannel(Channel):
    """Factors on pairwise-disjoint supports, embedded into n qubits."""

    def __init__(self, n: int, factors):
        seen = set()
        factors = tuple((tuple(sup), ch) for sup, ch in factors)
        for sup, ch in factors:
            if ch.n != len(sup):
                raise DimensionError(
                    f"factor on {len(sup)} qubits given support {sup}"
                )
            if any(not 0 <= q < n for q in sup) or seen & set(sup):
                raise DimensionError(f"supports must be disjoint subsets of 0..{n-1}")
            seen |= set(sup)
        self.n = n
        self.factors = factors


class TransferChannel(Channel):
    """Real transfer matrix tm[out, in] in the normalized Pauli basis."""

    def __init__(self, tm: np.ndarray):
        tm = np.asarray(tm, dtype=float)
        size = tm.shape[0]
        n = 0
        while 4**n < size:
            n += 1
        if tm.shape != (size, size) or 4**n != size:
            raise DimensionError(f"transfer matrix shape {tm.shape} is not 4^k x 4^k")
        expect = np.zeros(size)
        expect[0] = 1.0
        if np.abs(tm[0] - expect).max() > 1e-9:
            raise ValidationError("transfer matrix first row must be (1, 0, ..., 0)")
        self.n = n
        self.tm = tm


def identity_channel(n: int) -> PauliChannel:
    return PauliChannel(PauliDist.point_mass(n))


# ---------------------------------------------------------------------------
# chi / transfer diagonals
# ---------------------------------------------------------------------------


def chi_diagonal(ch: Channel) -> PauliDist:
    """Pauli error rates of the channel (= error rates of its Pauli twirl)."""
    if isinstance(ch, PauliChannel):
        return ch.dist
    if isinstance(ch, UnitaryChannel):
        probs = dense.pauli_overlaps_squared(ch.u, ch.n) / 4**ch.n
        return PauliDist(ch.n, probs)
    if isinstance(ch, KrausChannel):
        probs = np.zeros(4**ch.n)
        for k in ch.kraus:
            probs += dense.pauli_overlaps_squared(k, ch.n)
        return PauliDist(ch.n, probs / 4**ch.n)
    if isinstance(ch, ProductChannel):
        idx = np.zeros(1, dtype=np.int64)
        pr = np.ones(1)
        for support, sub in ch.factors:
            from .pauli import index_tables

            local = chi_diagonal(sub).probs
            digits = index_tables(sub.n)["digits"]
            shift = np.zeros(4**sub.n, dtype=np.int64)
            for j, q in enumerate(support):
                shift += digits[:, j].astype(np.int64) << (2 * q)
            idx = (idx[:, None] + shift[None, :]).reshape(-1)
            pr = (pr[:, None] * local[None, :]).reshape(-1)
        probs = np.zeros(4**ch.n)
        probs[idx] = pr
        return PauliDist(ch.n, probs)
    if isinstance(ch, TransferChannel):
        return wht_ptm_to_chi(np.diag(ch.tm))
    raise ValidationError(f"unknown channel type {type(ch).__name__}")


def ptm_diagonal(ch: Channel) -> np.ndarray:
    """Pauli-basis eigenvalues of the twirled channel."""
    if isinstance(ch, TransferChannel):
        return np.diag(ch.tm).copy()
    return wht_chi_to_ptm(chi_diagonal(ch))


def process_infidelity(ch: Channel) -> float:
    """1 - chi_II: the identity-defect of the error-rate vector."""
    return float(1.0 - chi_diagonal(ch).probs[0])


def average_fidelity(ch: Channel) -> float:
    """Average gate fidelity of a one-qubit channel, F = 1 - (2/3) epsilon."""
    if ch.n != 1:
        raise DimensionError("average-fidelity conversion implemented for n=1 only")
    return 1.0 - 2.0 * process_infidelity(ch) / 3.0


# ---------------------------------------------------------------------------
# Unitarity
# ---------------------------------------------------------------------------


def _transfer_frobenius_sq(ch: Channel) -> float:
    """Squared Frobenius norm of the full (untwirled) transfer matrix."""
    if isinstance(ch, UnitaryChannel):
        return float(4**ch.n)
    if isinstance(ch, KrausChannel):
        flat = ch.kraus.reshape(ch.kraus.shape[0], -1)
        gram = flat.conj() @ flat.T
        return float((gram.real**2 + gram.imag**2).sum())
    if isinstance(ch, PauliChannel):
        lam = wht_chi_to_ptm(ch.dist)
        return float((lam**2).sum())
    if isinstance(ch, TransferChannel):
        return float((ch.tm**2).sum())
    if isinstance(ch, ProductChannel):
        covered = sum(len(sup) for sup, _ in ch.factors)
        out = 4.0 ** (ch.n - covered)
        for _, sub in ch.factors:
            out *= _transfer_frobenius_sq(sub)
        return out
    raise ValidationError(f"unknown channel type {type(ch).__name__}")


def _nonunital_norm_sq(ch: Channel) -> float:
    """||ch(I)||_F^2 / 2^n: squared norm of the transfer matrix's input-I column."""
    if isinstance(ch, (UnitaryChannel, PauliChannel)):
        return 1.0
    if isinstance(ch, KrausChannel):
        out = np.einsum("kij,klj->il", ch.kraus, ch.kraus.conj())
        return float((out.real**2 + out.imag**2).sum() / 2**ch.n)
    if isinstance(ch, TransferChannel):
        return float((ch.tm[:, 0] ** 2).sum())
    if isinstance(ch, ProductChannel):
        out = 1.0
        for _, sub in ch.factors:
            out *= _nonunital_norm_sq(sub)
        return out
    raise ValidationError(f"unknown channel type {type(ch).__name__}")


def unitarity(ch: Channel) -> float:
    """Mean-squared length of the unital transfer block.

    u = sum over nonidentity rows and columns of the squared transfer-matrix
    entries, divided by 4^n - 1.  Computed from norm identities rather than
    by materializing the 4^n x 4^n matrix; equals 1 exactly for unitary
    channels.
    """
    return float(
        (_transfer_frobenius_sq(ch) - _nonunital_norm_sq(ch)) / (4**ch.n - 1)
    )


# ---------------------------------------------------------------------------
# Composition and state action
# ---------------------------------------------------------------------------


def to_kraus(ch: Channel, cap: int = DEFAULT_KRAUS_CAP) -> np.ndarray:
    """Dense Kraus stack for any representation; guarded by ``cap``."""
    if isinstance(ch, UnitaryChannel):
        return ch.u[None, :, :]
    if isinstance(ch, KrausChannel):
        return ch.kraus
    if isinstance(ch, PauliChannel):
        from .pauli import PauliOp

        nz = np.flatnonzero(ch.dist.probs > 0)
        if len(nz) > cap:
            raise CapacityError(
                f"Pauli channel needs {len(nz)} Kraus operators, cap is {cap}"
            )
        ops = [
            np.sqrt(ch.dist.probs[i]) * PauliOp.from_index(int(i), ch.n).to_matrix()
            for i in nz
        ]
        return np.stack(ops)
    if isinstance(ch, ProductChannel):
        ops = np.eye(2**ch.n, dtype=complex)[None, :, :]
        for support, sub in ch.factors:
            local = to_kraus(sub, cap)
            if len(local) * len(ops) > cap:
                raise CapacityError(
                    f"product channel exceeds Kraus cap {cap}"
                )
            emb = np.stack([dense.embed_operator(k, support, ch.n) for k in local])
            ops = np.einsum("aij,bjk->abik", emb, ops).reshape(
                -1, 2**ch.n, 2**ch.n
            )
        return ops
    if isinstance(ch, TransferChannel):
        if ch.n != 1:
            raise CapacityError("transfer-to-Kraus conversion implemented for n=1")
        # Choi matrix in the column-stacking convention, then eigen-split
        choi = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                e = np.zeros((2, 2), dtype=complex)
                e[i, j] = 1.0
                out = apply(ch, e, validate=False)
                choi += np.kron(out, e)
        w, v = np.linalg.eigh((choi + choi.conj().T) / 2)
        ops = []
        for val, vec in zip(w, v.T):
            if val < -1e-9:
                raise ValidationError("transfer matrix is not completely positive")
            if val > 1e-12:
                ops.append(np.sqrt(val) * vec.reshape(2, 2))
        return np.stack(ops)
    raise ValidationError(f"unknown channel type {type(ch).__name__}")


def compose(after: Channel, before: Channel, cap: int = DEFAULT_KRAUS_CAP) -> KrausChannel:
    """Channel applying ``before`` first, then ``after``; operator-sum form.

    Numerically-zero Kraus products are pruned; exceeding ``cap`` operators
    raises :class:`CapacityError`.
    """
    if after.n != before.n:
        raise DimensionError(f"qubit count mismatch: {after.n} != {before.n}")
    ka = to_kraus(after, cap)
    kb = to_kraus(before, cap)
    if len(ka) * len(kb) > cap:
        raise CapacityError(
            f"composition needs {len(ka) * len(kb)} Kraus operators, cap is {cap}"
        )
    prod = np.einsum("aij,bjk->abik", ka, kb).reshape(-1, 2**after.n, 2**after.n)
    norms = np.einsum("kij,kij->k", prod, prod.conj()).real
    keep = prod[norms > 1e-24]
    return KrausChannel(keep, validate=False)


def _check_state(rho: np.ndarray) -> None:
    if np.abs(rho - rho.conj().T).max() > 1e-9:
        raise ValidationError("state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise ValidationError("state trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise ValidationError("state is not positive semidefinite")


def apply(ch: Channel, rho: np.ndarray, validate: bool = True) -> np.ndarray:
    """Act on a density operator (or any matrix when ``validate`` is off)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2**ch.n, 2**ch.n):
        raise DimensionError(f"state shape {rho.shape} does not match n={ch.n}")
    if validate:
        _check_state(rho)
    if isinstance(ch, UnitaryChannel):
        return ch.u @ rho @ ch.u.conj().T
    if isinstance(ch, KrausChannel):
        return np.einsum("kij,jl,kml->im", ch.kraus, rho, ch.kraus.conj())
    if isinstance(ch, PauliChannel):
        coeffs = dense.pauli_coefficients(rho, ch.n)
        coeffs *= wht_chi_to_ptm(ch.dist)
        return dense.matrix_from_pauli_coefficients(coeffs, ch.n)
    if isinstance(ch, TransferChannel):
        coeffs = dense.pauli_coefficients(rho, ch.n)
        return dense.matrix_from_pauli_coefficients(ch.tm @ coeffs, ch.n)
    if isinstance(ch, ProductChannel):
        out = rho
        for support, sub in ch.factors:
            out = _apply_embedded(sub, out, support, ch.n)
        return out
    raise ValidationError(f"unknown channel type {type(ch).__name__}")


def _apply_embedded(sub: Channel, rho: np.ndarray, support, n: int) -> np.ndarray:
    """Apply a factor channel on ``support`` within an n-qubit state."""
    if isinstance(sub, PauliChannel):
        # Pauli factors act diagonally on Pauli coefficients; embed the
        # eigenvalue vector instead of materializing 4^m Kraus terms.
        from .pauli import index_tables

        lam_local = wht_chi_to_ptm(sub.dist)
        digits = index_tables(n)["digits"]
        local_index = np.zeros(4**n, dtype=np.int64)
        for j, q in enumerate(support):
            local_index += digits[:, q].astype(np.int64) << (2 * j)
        coeffs = dense.pauli_coefficients(rho, n)
        return dense.matrix_from_pauli_coefficients(coeffs * lam_local[local_index], n)
    ops = to_kraus(sub)
    emb = np.stack([dense.embed_operator(k, support, n) for k in ops])
    return np.einsum("kij,jl,kml->im", emb, rho, emb.conj())


# ---------------------------------------------------------------------------
# Serialization ("cerdec-chan-1")
# ---------------------------------------------------------------------------


def channel_to_dict(ch: Channel) -> dict:
    if isinstance(ch, UnitaryChannel):
        payload = {"kind": "unitary", "matrix": encode_complex_matrix(ch.u)}
    elif isinstance(ch, KrausChannel):
        payload = {
            "kind": "kraus",
            "kraus": [encode_complex_matrix(k) for k in ch.kraus],
        }
    elif isinstance(ch, PauliChannel):
        payload = {"kind": "pauli", "probs": [float(p) for p in ch.dist.probs]}
    elif isinstance(ch, ProductChannel):
        payload = {
            "kind": "product",
            "factors": [
                {"support": list(sup), "channel": channel_to_dict(sub)}
                for sup, sub in ch.factors
            ],
        }
    elif isinstance(ch, TransferChannel):
        payload = {"kind": "transfer", "matrix": [[float(v) for v in row] for row in ch.tm]}
    else:
        raise ValidationError(f"unknown channel type {type(ch).__name__}")
    payload["version"] = CHANNEL_SCHEMA
    payload["n"] = ch.n
    return payload


def channel_from_dict(data: dict) -> Channel:
    if data.get("version") != CHANNEL_SCHEMA:
        raise SchemaError(f"expected {CHANNEL_SCHEMA}, got {data.get('version')!r}")
    kind = data.get("kind")
    n = int(data["n"])
    if kind == "unitary":
        return UnitaryChannel(decode_complex_matrix(data["matrix"]))
    if kind == "kraus":
        return KrausChannel(np.stack([decode_complex_matrix(k) for k in data["kraus"]]))
    if kind == "pauli":
        return PauliChannel(PauliDist(n, np.asarray(data["probs"], dtype=float)))
    if kind == "product":
        return ProductChannel(
            n,
            [
                (tuple(f["support"]), channel_from_dict(f["channel"]))
                for f in data["factors"]
            ],
        )
    if kind == "transfer":
        return TransferChannel(np.asarray(data["matrix"], dtype=float))
    raise SchemaError(f"unknown channel kind {kind!r}")
