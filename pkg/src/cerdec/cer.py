"""Partial Pauli-error-rate datasets: the decoder's calibration knowledge.

The simulation stands in for a cycle-error-reconstruction experiment with
an exact oracle (the channel's chi diagonal) plus two selection policies:
the K largest rates, or all rates up to a Hamming weight.  A shot-noise
decay-fit emulation of the eigenvalue-estimation experiment is included for
validating that the oracle values are experimentally reachable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channels import Channel, PauliDist, chi_diagonal, ptm_diagonal
from .exceptions import FitError, SchemaError, ValidationError
from .ioutil import load_json
from .pauli import PauliOp, index_tables

CER_SCHEMA = "cerdec-cer-1"


@dataclass(frozen=True)
class TopK:
    k: int


@dataclass(frozen=True)
class WeightAtMost:
    w: int


@dataclass(frozen=True)
class Explicit:
    pass


@dataclass(frozen=True, eq=False)
class CerDataset:
    """Rates for a subset of Pauli errors, identity always included.

    ``entries`` maps Pauli index -> rate.  The identity entry doubles as the
    known process fidelity (identity_rate = 1 - physical error rate).
    """

    n: int
    entries: dict
    policy: object = Explicit()

    def __post_init__(self):
        entries = {int(k): float(v) for k, v in self.entries.items()}
        if 0 not in entries:
            raise ValidationError("dataset must include the identity rate")
        size = 4**self.n
        for idx, rate in entries.items():
            if not 0 <= idx < size:
                raise ValidationError(f"Pauli index {idx} out of range")
            if not -1e-12 <= rate <= 1 + 1e-12:
                raise ValidationError(f"rate {rate} outside [0, 1]")
        total = sum(entries.values())
        if total > 1 + 1e-9:
            raise ValidationError(f"rates sum to {total} > 1")
        object.__setattr__(self, "entries", entries)

    @property
    def identity_rate(self) -> float:
        return self.entries[0]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, index: int) -> bool:
        return int(index) in self.entries

    def indices(self) -> np.ndarray:
        return np.fromiter(sorted(self.entries), dtype=np.int64)

    def rates(self) -> np.ndarray:
        return np.array([self.entries[i] for i in sorted(self.entries)])

    def padded_vector(self) -> np.ndarray:
        """Length-4^n vector with zeros outside the dataset (unnormalized)."""
        out = np.zeros(4**self.n)
        idx = self.indices()
        out[idx] = self.rates()
        return out

    def paulis(self):
        for idx in sorted(self.entries):
            yield PauliOp.from_index(idx, self.n), self.entries[idx]


def exact_rates(ch: Channel) -> PauliDist:
    """Ground-truth Pauli error rates of the simulated channel."""
    return chi_diagonal(ch)


def select_top_k(dist: PauliDist, k: int) -> CerDataset:
    """Identity plus the k-1 largest non-identity rates.

    Ties break toward the smaller Pauli index, so datasets grow
    monotonically with k.
    """
    size = 4**dist.n
    if not 1 <= k <= size:
        raise ValidationError(f"k={k} outside [1, {size}]")
    probs = dist.probs
    order = np.lexsort((np.arange(1, size), -probs[1:])) + 1
    chosen = order[: k - 1]
    entries = {0: float(probs[0])}
    for idx in chosen:
        entries[int(idx)] = float(probs[idx])
    return CerDataset(dist.n, entries, TopK(k))


def knr_size(n: int, w: int) -> int:
    """Number of Paulis of weight at most w on n qubits."""
    from math import comb

    return sum(comb(n, j) * 3**j for j in range(w + 1))


def select_knr(dist: PauliDist, w: int) -> CerDataset:
    """All rates for errors of weight at most w."""
    if not 0 <= w <= dist.n:
        raise ValidationError(f"weight bound {w} outside [0, {dist.n}]")
    wt = index_tables(dist.n)["weight"]
    idx = np.flatnonzero(wt <= w)
    entries = {int(i): float(dist.probs[i]) for i in idx}
    return CerDataset(dist.n, entries, WeightAtMost(w))


class DecayFit(NamedTuple):
    eigenvalue: float
    stderr: float
    intercept: float
    points_used: int


def emulate_cer_decay(ch: Channel, pauli: PauliOp, depths, shots: int, rng,
                      spam: float = 1.0) -> DecayFit:
    """Shot-noise emulation of the eigenvalue decay experiment.

    Survival probability after m repetitions is ``spam * lambda_P^m``;
    binomial counts at each depth feed a variance-weighted log-linear fit.
    The state-preparation/measurement constant lands in the intercept and
    leaves the fitted eigenvalue unbiased.
    """
    depths = [int(m) for m in depths]
    if len(depths) < 2:
        raise FitError("need at least two depths")
    if shots < 100:
        raise ValidationError("need at least 100 shots per depth")
    lam = float(ptm_diagonal(ch)[pauli.index])
    xs, ys, ws = [], [], []
    for m in depths:
        p = float(np.clip(spam * lam**m, 0.0, 1.0))
        count = rng.binomial(shots, p)
        phat = count / shots
        if phat <= 0:
            continue  # decayed below the noise floor at this depth
        pc = min(max(phat, 0.5 / shots), 1 - 0.5 / shots)
        var_log = (1 - pc) / (shots * pc)
        xs.append(m)
        ys.append(np.log(phat))
        ws.append(1.0 / var_log)
    if len(xs) < 2:
        raise FitError("fewer than two usable depths after dropping empty counts")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    w = np.asarray(ws, dtype=float)
    wx = (w * x).sum() / w.sum()
    sxx = (w * (x - wx) ** 2).sum()
    slope = (w * (x - wx) * y).sum() / sxx
    intercept = (w * y).sum() / w.sum() - slope * wx
    slope_se = np.sqrt(1.0 / sxx)
    lam_hat = float(np.exp(slope))
    return DecayFit(lam_hat, float(lam_hat * slope_se), float(np.exp(intercept)), len(xs))


# ---------------------------------------------------------------------------
# Serialization ("cerdec-cer-1")
# ---------------------------------------------------------------------------


def _policy_to_dict(policy) -> dict:
    if isinstance(policy, TopK):
        return {"kind": "top_k", "k": policy.k}
    if isinstance(policy, WeightAtMost):
        return {"kind": "weight_at_most", "w": policy.w}
    return {"kind": "explicit"}


def _policy_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "top_k":
        return TopK(int(data["k"]))
    if kind == "weight_at_most":
        return WeightAtMost(int(data["w"]))
    if kind == "explicit":
        return Explicit()
    raise SchemaError(f"unknown policy kind {kind!r}")


def dataset_to_dict(ds: CerDataset, source_hash: str = "") -> dict:
    return {
        "version": CER_SCHEMA,
        "n": ds.n,
        "policy": _policy_to_dict(ds.policy),
        "entries": [[str(p), rate] for p, rate in ds.paulis()],
        "source_channel": source_hash,
    }


def dataset_from_dict(data: dict) -> CerDataset:
    if data.get("version") != CER_SCHEMA:
        raise SchemaError(f"expected {CER_SCHEMA}, got {data.get('version')!r}")
    n = int(data["n"])
    entries = {}
    for text, rate in data["entries"]:
        idx = PauliOp.from_string(text).index
        if idx in entries:
            raise ValidationError(f"duplicate dataset entry {text}")
        entries[idx] = float(rate)
    return CerDataset(n, entries, _policy_from_dict(data["policy"]))


def load_dataset(path) -> CerDataset:
    return dataset_from_dict(load_json(path))
