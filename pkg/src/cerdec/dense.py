"""Dense-operator kernels shared by channels, codes and noise generators.

Hilbert-space convention: qubit 0 is the most significant bit of the
computational-basis index (matching :meth:`PauliOp.to_matrix`).  Pauli-index
convention: qubit 0 is the least significant base-4 digit.  The helpers in
this module do the bookkeeping between the two once, so the rest of the
package never touches raw bit order.
"""

from __future__ import annotations

import string
from functools import lru_cache

import numpy as np

from .exceptions import DimensionError


def embed_operator(op: np.ndarray, support, n: int) -> np.ndarray:
    """Embed ``op`` acting on ``support`` (tuple of qubits) into n qubits.

    Tensor factors off the support are identities.  ``support`` need not be
    contiguous or sorted; its order gives the tensor-factor order of ``op``.
    """
    support = tuple(support)
    m = len(support)
    if op.shape != (2**m, 2**m):
        raise DimensionError(f"operator shape {op.shape} does not match support {support}")
    if len(set(support)) != m or any(not 0 <= q < n for q in support):
        raise DimensionError(f"bad support {support} for n={n}")
    if m == n and support == tuple(range(n)):
        return np.asarray(op, dtype=complex)
    rest = [q for q in range(n) if q not in support]
    full = np.kron(np.asarray(op, dtype=complex), np.eye(2 ** (n - m), dtype=complex))
    # row/col axes currently ordered [support..., rest...]
    order = list(support) + rest
    perm = [order.index(q) for q in range(n)]
    t = full.reshape((2,) * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    return np.ascontiguousarray(t.reshape(2**n, 2**n))


@lru_cache(maxsize=None)
def _hilbert_mask_table(n: int) -> np.ndarray:
    """Qubit-space bitmask -> Hilbert-space bitmask (bit reversal)."""
    size = 1 << n
    v = np.arange(size, dtype=np.int64)
    out = np.zeros(size, dtype=np.int64)
    for q in range(n):
        out |= ((v >> q) & 1) << (n - 1 - q)
    return out


def hilbert_masks(x: int, z: int, n: int) -> tuple[int, int]:
    t = _hilbert_mask_table(n)
    return int(t[x]), int(t[z])


@lru_cache(maxsize=None)
def _hilbert_to_index_map(n: int) -> np.ndarray:
    """Flat position ``xh * 2^n + zh`` (Hilbert masks) -> canonical index."""
    from .pauli import index_tables

    t = index_tables(n)
    rev = _hilbert_mask_table(n)
    xh = rev[t["xmask"]]
    zh = rev[t["zmask"]]
    out = np.empty(4**n, dtype=np.int64)
    out[xh * (1 << n) + zh] = np.arange(4**n, dtype=np.int64)
    return out


def _fht_last_axis(mat: np.ndarray) -> np.ndarray:
    """Fast (unnormalized) Hadamard transform along the last axis."""
    m = mat.shape[-1]
    h = 1
    while h < m:
        a = mat.reshape(mat.shape[:-1] + (m // (2 * h), 2, h))
        top = a[..., 0, :] + a[..., 1, :]
        bot = a[..., 0, :] - a[..., 1, :]
        a[..., 0, :] = top
        a[..., 1, :] = bot
        h *= 2
    return mat


def pauli_overlaps_squared(op: np.ndarray, n: int) -> np.ndarray:
    """``|Tr(P @ op)|^2`` for every Pauli class P, length-4^n vector.

    The i*XZ phases of Hermitian Paulis drop out of the absolute square, so
    the traces reduce to Hadamard transforms of the generalized diagonals
    ``op[k ^ x, k]`` over the Z mask.  Cost O(4^n + n 4^n).
    """
    dim = 1 << n
    k = np.arange(dim)
    xs = np.arange(dim)
    diags = op[(k[None, :] ^ xs[:, None]), k[None, :]].astype(complex)
    tr = _fht_last_axis(diags)  # tr[xh, zh] = sum_k (-1)^{z.k} op[k^x, k]
    flat = (tr.real**2 + tr.imag**2).reshape(-1)
    out = np.empty(4**n)
    out[_hilbert_to_index_map(n)] = flat
    return out


@lru_cache(maxsize=None)
def _coeff_kernel() -> np.ndarray:
    """kernel[p] = sigma_p for p in canonical order I, X, Z, Y."""
    from .pauli import _FACTORS

    return np.stack([_FACTORS[c] for c in "IXZY"]).astype(complex)


def _einsum_letters(n: int):
    letters = string.ascii_letters
    if 3 * n > len(letters):
        raise DimensionError(f"n={n} too large for dense Pauli transforms")
    return letters[:n], letters[n : 2 * n], letters[2 * n : 3 * n]


def pauli_coefficients(op: np.ndarray, n: int) -> np.ndarray:
    """Expansion coefficients a_P = Tr(P @ op) / 2^n over Hermitian Paulis."""
    kern = _coeff_kernel()
    rows, cols, ps = _einsum_letters(n)
    t = np.asarray(op, dtype=complex).reshape((2,) * (2 * n))
    # Tr(P op) = sum_{j,k} P[j, k] op[k, j]; op rows carry k, columns j
    operands = [t]
    subs = [rows + cols]
    for q in range(n):
        operands.append(kern)
        subs.append(ps[q] + cols[q] + rows[q])  # sigma_p[j_q, k_q]
    out_sub = "".join(ps[q] for q in reversed(range(n)))
    res = np.einsum(",".join(subs) + "->" + out_sub, *operands, optimize=True)
    return res.reshape(-1) / (2**n)


def matrix_from_pauli_coefficients(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pauli_coefficients`: sum_P a_P P as a dense matrix."""
    kern = _coeff_kernel()
    rows, cols, ps = _einsum_letters(n)
    t = np.asarray(coeffs).reshape((4,) * n)  # axes: digit of qubit n-1 .. 0
    operands = [t]
    subs = ["".join(ps[q] for q in reversed(range(n)))]
    for q in range(n):
        operands.append(kern)
        subs.append(ps[q] + rows[q] + cols[q])  # sigma_p[k_q, j_q]
    res = np.einsum(",".join(subs) + "->" + rows + cols, *operands, optimize=True)
    return res.reshape(2**n, 2**n)


def random_density_matrix(n: int, rng) -> np.ndarray:
    """Full-rank random mixed state, for tests and validation sweeps."""
    dim = 2**n
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
