"""Completion of a partial Pauli error distribution by split products.

Errors missing from the dataset are assigned bottom-up by weight: single
qubit errors get a depolarizing-consistent ansatz derived from the known
identity rate, and a higher-weight error gets the sum, over all
bipartitions of its support, of the products of the two restricted factors'
(already completed) probabilities.  Factor probabilities are full-n-qubit
error probabilities throughout, and every Pauli is evaluated exactly once.

Completed mass outside the dataset is rescaled by a common factor so the
result is a proper distribution; dataset rates are never touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cer import CerDataset
from .channels import PauliDist
from .exceptions import SchemaError, ValidationError
from .pauli import PauliOp, index_tables

USS_SCHEMA = "cerdec-uss-1"

TAG_CER = 0
TAG_ANSATZ = 1
TAG_HEURISTIC = 2
_TAG_CHARS = "CAH"


@dataclass(frozen=True, eq=False)
class CompletedDist:
    """A full distribution plus the provenance of every entry."""

    dist: PauliDist
    provenance: np.ndarray = field(repr=False)
    normalization_factor: float
    visit_count: int

    def tag_of(self, index: int) -> str:
        return _TAG_CHARS[int(self.provenance[index])]


def bipartitions(p: PauliOp):
    """Unordered splits of the support into two nonempty disjoint parts.

    Returns (p1, p2) pairs with p1 carrying the lowest-index support qubit;
    the list is ordered by ascending bitmask of p1's part.  A weight-w input
    yields 2^{w-1} - 1 splits.
    """
    qubits = sorted(p.support())
    if len(qubits) < 2:
        raise ValidationError("bipartitions need weight >= 2")
    anchor, rest = qubits[0], qubits[1:]
    out = []
    for mask in range(2 ** len(rest) - 1):
        part = [anchor] + [q for j, q in enumerate(rest) if (mask >> j) & 1]
        other = [q for j, q in enumerate(rest) if not (mask >> j) & 1]
        out.append((p.restrict(part), p.restrict(other)))
    return out


def single_qubit_ansatz(chi_ii: float, n: int) -> float:
    """Weight-1 rate for an i.i.d. depolarizing channel of identity rate chi_ii.

    The per-qubit infidelity is eps0 = 1 - chi_ii^{1/n}; each of the 3n
    single-qubit errors then has rate (eps0 / 3) (1 - eps0)^{n-1}.
    """
    if not 0 <= chi_ii <= 1:
        raise ValidationError(f"identity rate {chi_ii} outside [0, 1]")
    eps0 = 1.0 - chi_ii ** (1.0 / n)
    return (eps0 / 3.0) * (1.0 - eps0) ** (n - 1)


@lru_cache(maxsize=None)
def _split_table(n: int):
    """Per-weight flat arrays (targets, factor1, factor2) over all splits."""
    tables = index_tables(n)
    digits = tables["digits"]
    wt = tables["weight"]
    by_weight = {}
    for w in range(2, n + 1):
        targets, lefts, rights = [], [], []
        for idx in np.flatnonzero(wt == w):
            qubits = np.flatnonzero(digits[idx]).tolist()
            anchor, rest = qubits[0], qubits[1:]
            idx = int(idx)
            anchor_part = int(digits[idx][anchor]) << (2 * anchor)
            rest_parts = [int(digits[idx][q]) << (2 * q) for q in rest]
            for mask in range(2 ** len(rest) - 1):
                left = anchor_part
                right = 0
                for j, part in enumerate(rest_parts):
                    if (mask >> j) & 1:
                        left += part
                    else:
                        right += part
                targets.append(idx)
                lefts.append(left)
                rights.append(right)
        by_weight[w] = (
            np.asarray(targets, dtype=np.int64),
            np.asarray(lefts, dtype=np.int64),
            np.asarray(rights, dtype=np.int64),
        )
    return by_weight


def uss_complete(dataset: CerDataset) -> CompletedDist:
    """Fill in every missing rate, then renormalize the assigned mass."""
    n = dataset.n
    size = 4**n
    wt = index_tables(n)["weight"]
    probs = np.zeros(size)
    tags = np.zeros(size, dtype=np.uint8)
    known = np.zeros(size, dtype=bool)
    idx = dataset.indices()
    probs[idx] = dataset.rates()
    tags[idx] = TAG_CER
    known[idx] = True
    visits = len(idx)

    fill1 = (wt == 1) & ~known
    probs[fill1] = single_qubit_ansatz(dataset.identity_rate, n)
    tags[fill1] = TAG_ANSATZ
    visits += int(fill1.sum())

    splits = _split_table(n)
    for w in range(2, n + 1):
        targets, lefts, rights = splits[w]
        fill = (wt == w) & ~known
        if not fill.any():
            continue
        acc = np.bincount(targets, weights=probs[lefts] * probs[rights],
                          minlength=size)
        probs[fill] = acc[fill]
        tags[fill] = TAG_HEURISTIC
        visits += int(fill.sum())

    residual = max(1.0 - probs[known].sum(), 0.0)
    free_mass = probs[~known].sum()
    if free_mass > 0:
        factor = residual / free_mass
        probs[~known] *= factor
    else:
        factor = 1.0
        probs[0] += residual
    return CompletedDist(PauliDist(n, probs), tags, float(factor), visits)


def tvd(a, b) -> float:
    """Total variation distance (half the L1 distance) between rate vectors."""
    va = a.probs if isinstance(a, PauliDist) else np.asarray(a, dtype=float)
    vb = b.probs if isinstance(b, PauliDist) else np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise ValidationError(f"size mismatch: {va.shape} vs {vb.shape}")
    return float(0.5 * np.abs(va - vb).sum())


# ---------------------------------------------------------------------------
# Serialization ("cerdec-uss-1")
# ---------------------------------------------------------------------------


def completed_to_dict(cd: CompletedDist, source_hash: str = "") -> dict:
    return {
        "version": USS_SCHEMA,
        "n": cd.dist.n,
        "probs": [float(p) for p in cd.dist.probs],
        "provenance": "".join(_TAG_CHARS[t] for t in cd.provenance),
        "normalization_factor": cd.normalization_factor,
        "source_dataset": source_hash,
    }


def completed_from_dict(data: dict) -> CompletedDist:
    if data.get("version") != USS_SCHEMA:
        raise SchemaError(f"expected {USS_SCHEMA}, got {data.get('version')!r}")
    n = int(data["n"])
    probs = np.asarray(data["probs"], dtype=float)
    prov = np.array([_TAG_CHARS.index(c) for c in data["provenance"]], dtype=np.uint8)
    return CompletedDist(
        PauliDist(n, probs), prov, float(data["normalization_factor"]),
        visit_count=len(probs),
    )
