"""Effective logical channels and logical-error-rate estimation.

A block's conditional effective channel is the one-qubit map obtained by
encoding, applying the noise, projecting onto a syndrome outcome, applying
the recovery (pure error times the decoder's logical correction) and
unencoding.  Two routes compute it: a dense coherent route for physical
channels (the projection happens before any twirl, so coherences matter)
and a cheap coset-sum route for Pauli distributions.  Conditional channels
above the physical level are always handled in twirled (Pauli) form.

Conditional probabilities under coherent noise are normalized against the
maximally mixed encoded reference state, which makes the per-syndrome maps
linear and their probability-weighted sum equal to the exact average
channel.  The transfer matrices are projected onto trace preservation
(first row forced to (1,0,0,0)); infidelities are unaffected.

The Monte Carlo estimator draws block syndromes either directly from the
true syndrome distribution or from the flattened proposal
``Q(s) = Prob(s)^alpha``, correcting each sample by ``Prob(s)/Q(s)``.  At
two levels the proposal applies per block (weights multiply) and the top
syndrome is drawn exactly from its conditional distribution.  The decoder
conditions on its own believed distribution throughout, while all sampling
and scoring uses the true channel; with a fixed seed, runs that differ only
in the believed distribution consume identical random draws.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cer import exact_rates
from .channels import (
    Channel,
    PauliChannel,
    PauliDist,
    TransferChannel,
    _K4,
    apply,
)
from .codes import CLASS_DISPLAY_RANK, StabilizerCode, Syndrome
from .decoders import DecoderSpec, SoftDecision, build_decoder_input, mw_decode
from .exceptions import (
    DegenerateSyndromeError,
    DimensionError,
    ValidationError,
)
from .noise import rng_stream
from .pauli import PauliOp, index_tables

_ZERO_MASS = 1e-14
_CHUNK = 12  # keeps the per-chunk joint arrays L2-resident

_SIGMA2 = None  # canonical-order one-qubit Paulis, built lazily


def _sigmas() -> np.ndarray:
    global _SIGMA2
    if _SIGMA2 is None:
        _SIGMA2 = np.stack(
            [PauliOp.from_index(c, 1).to_matrix() for c in range(4)]
        )
    return _SIGMA2


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """One-qubit transfer matrix conditioned on a syndrome path."""

    transfer: np.ndarray = field(repr=False)
    syndrome: Optional[Syndrome]
    infidelity: float


@dataclass(frozen=True)
class SamplerConfig:
    """How to estimate the average logical error rate."""

    mode: str = "importance"        # "direct" or "importance"
    alpha: Optional[float] = None   # None: auto-tune from the true rates
    samples: int = 1000
    seed: int = 0
    outlier_threshold: float = 0.3

    def __post_init__(self):
        if self.mode not in ("direct", "importance"):
            raise ValidationError(f"unknown sampler mode {self.mode!r}")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise ValidationError("alpha must lie in (0, 1]")
        if self.samples < 1:
            raise ValidationError("need at least one sample")


@dataclass(frozen=True, eq=False)
class SimResult:
    r_hat: float
    stderr: float
    n_samples: int
    alpha: float
    skipped_fraction: float
    mean_weight: float
    values: np.ndarray = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# Per-block truth tables
# ---------------------------------------------------------------------------


class BlockModel:
    """Syndrome distribution and conditional data of the true channel.

    soft_base[s] is the conditional logical-class distribution before any
    correction (recovery = pure error only); transfer_base[s] the matching
    one-qubit transfer matrix.  Applying a class correction c re-centers
    classes by XOR and composes the transfer with the c conjugation.
    """

    def __init__(self, code: StabilizerCode, prob_s: np.ndarray,
                 soft_base: np.ndarray, transfer_base: np.ndarray):
        self.code = code
        self.prob_s = prob_s
        self.soft_base = soft_base
        self.transfer_base = transfer_base

    @classmethod
    def from_pauli(cls, dist: PauliDist, code: StabilizerCode) -> "BlockModel":
        if dist.n != code.n:
            raise DimensionError(f"distribution n={dist.n}, code n={code.n}")
        mass = dist.probs[code.coset_table].sum(axis=-1)  # (S, 4)
        prob_s = mass.sum(axis=1)
        soft = np.zeros_like(mass)
        pos = prob_s > 0
        soft[pos] = mass[pos] / prob_s[pos, None]
        lam = soft @ _K4.T  # per-syndrome transfer eigenvalues
        transfer = np.zeros((mass.shape[0], 4, 4))
        idx = np.arange(4)
        transfer[:, idx, idx] = lam
        return cls(code, prob_s, soft, transfer)

    @classmethod
    def from_coherent(cls, ch: Channel, code: StabilizerCode) -> "BlockModel":
        if ch.n != code.n:
            raise DimensionError(f"channel n={ch.n}, code n={code.n}")
        v = code.encoding_isometry
        w = code.syndrome_basis
        sig = _sigmas()
        cmats = []
        for p in range(4):
            m = apply(ch, v @ sig[p] @ v.conj().T, validate=False)
            cmats.append(w.conj().T @ m @ w)
        cmats = np.stack(cmats)  # (4, dim, dim)
        s_count = 1 << (code.n - 1)
        blocks = np.empty((s_count, 4, 2, 2), dtype=complex)
        for s in range(s_count):
            blocks[s] = cmats[:, 2 * s : 2 * s + 2, 2 * s : 2 * s + 2]
        prob_s = np.einsum("sll->s", blocks[:, 0]).real / 2
        raw = np.einsum("qab,spba->sqp", sig, blocks).real  # Tr(sigma_q B_p)
        transfer = np.zeros((s_count, 4, 4))
        soft = np.zeros((s_count, 4))
        pos = prob_s > _ZERO_MASS
        transfer[pos] = raw[pos] / (2 * prob_s[pos, None, None])
        transfer[:, 0, :] = 0.0
        transfer[:, 0, 0] = 1.0
        lam = np.einsum("sqq->sq", transfer)
        soft_all = lam @ _K4.T / 4
        soft[pos] = np.clip(soft_all[pos], 0.0, None)
        soft[pos] /= soft[pos].sum(axis=1, keepdims=True)
        return cls(code, prob_s, soft, transfer)

    def infidelity_after(self, syndrome: int, correction_class: int) -> float:
        return float(1.0 - self.soft_base[syndrome, correction_class])

    def transfer_after(self, syndrome: int, correction_class: int) -> np.ndarray:
        tm = np.diag(_K4[correction_class]) @ self.transfer_base[syndrome]
        tm[0, :] = 0.0
        tm[0, 0] = 1.0
        return tm


_MODEL_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def block_model(source, code: StabilizerCode) -> BlockModel:
    """Cached truth tables for a channel or distribution on one block."""
    per_code = _MODEL_CACHE.setdefault(source, {})
    key = id(code)
    if key not in per_code:
        if isinstance(source, PauliDist):
            per_code[key] = BlockModel.from_pauli(source, code)
        elif isinstance(source, PauliChannel):
            per_code[key] = BlockModel.from_pauli(source.dist, code)
        elif isinstance(source, TransferChannel):
            raise ValidationError("a transfer channel is not a block channel")
        elif isinstance(source, Channel):
            per_code[key] = BlockModel.from_coherent(source, code)
        else:
            raise ValidationError(f"cannot model {type(source).__name__}")
    return per_code[key]


def _truth_dist(source) -> PauliDist:
    if isinstance(source, PauliDist):
        return source
    return exact_rates(source)


# ---------------------------------------------------------------------------
# Decoder tables
# ---------------------------------------------------------------------------


def _tie_break_rows(values: np.ndarray) -> np.ndarray:
    """Vectorized argmax with the I < X < Y < Z tie order, one row at a time."""
    best = values.max(axis=1, keepdims=True)
    rank = np.asarray(CLASS_DISPLAY_RANK)
    score = np.where(values == best, rank[None, :], 99)
    return score.argmin(axis=1)


class DecoderTables:
    """Per-syndrome corrections and believed conditionals of one decoder."""

    def __init__(self, corrections: np.ndarray, believed_resid: np.ndarray):
        self.corrections = corrections      # (S,), -1 where undecodable
        self.believed_resid = believed_resid  # (S, 4)

    @classmethod
    def from_spec(cls, spec: DecoderSpec, code: StabilizerCode,
                  oracle: Optional[PauliDist], infidelity: float) -> "DecoderTables":
        s_count = 1 << (code.n - 1)
        if spec.kind == "mw":
            corrections = np.array(
                [mw_decode(Syndrome.from_int(s, code), code).chosen
                 for s in range(s_count)],
                dtype=np.int64,
            )
            resid = np.zeros((s_count, 4))
            resid[:, 0] = 1.0
            return cls(corrections, resid)
        believed = build_decoder_input(spec, oracle, infidelity)
        return cls.from_dist(believed, code)

    @classmethod
    def from_dist(cls, believed: PauliDist, code: StabilizerCode) -> "DecoderTables":
        mass = believed.probs[code.coset_table].sum(axis=-1)
        tot = mass.sum(axis=1)
        ok = tot > 0
        soft = np.zeros_like(mass)
        soft[ok] = mass[ok] / tot[ok, None]
        corrections = np.where(ok, _tie_break_rows(soft), -1)
        resid = np.zeros_like(soft)
        cls_idx = np.arange(4)
        safe = np.where(corrections < 0, 0, corrections)
        resid[np.arange(len(soft))[:, None], cls_idx[None, :]] = soft[
            np.arange(len(soft))[:, None], cls_idx[None, :] ^ safe[:, None]
        ]
        return cls(corrections, resid)


# ---------------------------------------------------------------------------
# Public effective-channel operations
# ---------------------------------------------------------------------------


def syndrome_distribution(dist: PauliDist, code: StabilizerCode) -> np.ndarray:
    """Prob(s) for every syndrome under a Pauli error distribution."""
    return block_model(dist, code).prob_s.copy()


def effective_channel_pauli(dist: PauliDist, code: StabilizerCode,
                            syndrome: Syndrome,
                            decision: SoftDecision) -> EffectiveChannel:
    """Conditional one-qubit Pauli channel after the decision's correction."""
    model = block_model(dist, code)
    s = int(syndrome)
    if model.prob_s[s] <= 0:
        raise DegenerateSyndromeError(f"syndrome {s} has zero probability")
    c = decision.chosen
    return EffectiveChannel(
        model.transfer_after(s, c), syndrome, model.infidelity_after(s, c)
    )


def effective_channel_coherent(ch: Channel, code: StabilizerCode,
                               syndrome: Syndrome,
                               correction: PauliOp) -> EffectiveChannel:
    """Conditional one-qubit channel via dense encoded-state arithmetic.

    ``correction`` must be a syndrome-0 operator (a logical representative,
    possibly times a stabilizer); the recovery applied is correction * T_s.
    """
    model = block_model(ch, code)
    s = int(syndrome)
    if model.prob_s[s] <= _ZERO_MASS:
        raise DegenerateSyndromeError(f"syndrome {s} is unreachable")
    if correction.n != code.n:
        raise DimensionError("correction acts on the wrong number of qubits")
    if code.syndrome_of[correction.index] != 0:
        raise ValidationError("correction must commute with every generator")
    c = int(code.class_of[correction.index])
    return EffectiveChannel(
        model.transfer_after(s, c), syndrome, model.infidelity_after(s, c)
    )


def tune_alpha(dist: PauliDist, code: StabilizerCode, threshold: float) -> float:
    """Largest grid alpha whose proposal gives the uncorrectable syndromes
    at least ``threshold`` total mass; 1.0 when unattainable.

    Uncorrectable means the ML decision on ``dist`` itself carries
    conditional probability below one half.  The grid runs 1.0, 0.9, ...,
    0.1 and stops at the first qualifying value, so heavier flattening is
    only adopted when needed.
    """
    if not 0 < threshold < 1:
        raise ValidationError("threshold must lie in (0, 1)")
    model = block_model(dist, code)
    pos = model.prob_s > 0
    uncorrectable = pos & (model.soft_base.max(axis=1) < 0.5)
    if not uncorrectable.any():
        return 1.0
    for alpha in [round(0.1 * k, 1) for k in range(10, 0, -1)]:
        q = np.zeros_like(model.prob_s)
        q[pos] = model.prob_s[pos] ** alpha
        q /= q.sum()
        if q[uncorrectable].sum() >= threshold:
            return alpha
    return 1.0


# ---------------------------------------------------------------------------
# Exact level-1 reference
# ---------------------------------------------------------------------------


def level1_exact(source, code: StabilizerCode,
                 spec: DecoderSpec) -> tuple[float, EffectiveChannel]:
    """Enumerate all syndromes: the exact average logical error rate.

    Returns (average infidelity, average effective channel).  Syndromes the
    decoder cannot decode (zero believed mass) are skipped like unsampled
    draws; their true mass never exceeds rounding noise for the
    distributions produced by the completion pipeline.
    """
    model = block_model(source, code)
    oracle = _truth_dist(source)
    eps = float(1.0 - oracle.probs[0])
    dec = DecoderTables.from_spec(spec, code, oracle, eps)
    r_total = 0.0
    avg_tm = np.zeros((4, 4))
    for s in np.flatnonzero(model.prob_s > _ZERO_MASS):
        c = int(dec.corrections[s])
        if c < 0:
            continue
        p = float(model.prob_s[s])
        r_total += p * model.infidelity_after(s, c)
        avg_tm += p * model.transfer_after(s, c)
    avg_tm[0, :] = 0.0
    avg_tm[0, 0] = 1.0
    return r_total, EffectiveChannel(avg_tm, None, r_total)


# ---------------------------------------------------------------------------
# Monte Carlo estimation
# ---------------------------------------------------------------------------


def _proposal(model: BlockModel, sampler: SamplerConfig,
              oracle: PauliDist, code: StabilizerCode):
    """(Q, weight-ratio, alpha): the block-syndrome sampling distribution."""
    prob = model.prob_s
    pos = prob > 0
    if sampler.mode == "direct":
        alpha = 1.0
    else:
        alpha = sampler.alpha if sampler.alpha is not None else tune_alpha(
            oracle, code, sampler.outlier_threshold
        )
    q = np.zeros_like(prob)
    q[pos] = prob[pos] ** alpha
    q /= q.sum()
    ratio = np.zeros_like(prob)
    ratio[pos] = prob[pos] / q[pos]
    return q, ratio, alpha


def simulate_concatenated(source, code: StabilizerCode, levels: int,
                          spec: DecoderSpec, sampler: SamplerConfig) -> SimResult:
    """Estimate the average logical error rate at one or two levels.

    Per sample: draw every level-1 block syndrome from the proposal, decode
    each block with the believed distribution, build the true conditional
    residual channels, and (at two levels) draw the top syndrome from the
    exactly induced distribution before scoring the top decision against
    the true conditional class probabilities.
    """
    if levels not in (1, 2):
        raise ValidationError("only one or two concatenation levels supported")
    model = block_model(source, code)
    oracle = _truth_dist(source)
    eps = float(1.0 - oracle.probs[0])
    dec = DecoderTables.from_spec(spec, code, oracle, eps)
    q, ratio, alpha = _proposal(model, sampler, oracle, code)
    rng = rng_stream(sampler.seed)
    n = sampler.samples

    if levels == 1:
        s1 = rng.choice(len(q), size=n, p=q)
        corr = dec.corrections[s1]
        valid = corr >= 0
        r = np.zeros(n)
        r[valid] = 1.0 - model.soft_base[s1[valid], corr[valid]]
        w = np.where(valid, ratio[s1], 0.0)
        values = w * r
        skipped = float((~valid).mean())
    else:
        values, w, skipped = _simulate_level2(model, dec, q, ratio, rng, n, code)

    r_hat = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return SimResult(r_hat, stderr, n, alpha, skipped, float(w.mean()), values)


def _cell_sums(marginals: np.ndarray, code: StabilizerCode) -> np.ndarray:
    """(C, S, 4) coset masses of the product distributions ``marginals``.

    ``marginals`` has shape (C, blocks, 4): one product distribution per
    row, one 4-vector per code qubit.  The joint is accumulated with
    samples on the fastest axis and Paulis pre-grouped by coset cell, so
    every gather is a contiguous row copy.
    """
    s_count = 1 << (code.n - 1)
    csize = marginals.shape[0]
    joint = None
    for qs, local in code.grouped_digit_triples:
        bundle = marginals[:, qs[0], :]
        for q in qs[1:]:
            bundle = np.einsum("ca,cb->cab", bundle.reshape(csize, -1),
                               marginals[:, q, :]).reshape(csize, -1)
        gathered = np.ascontiguousarray(bundle.T)[local]      # (4^n, C)
        joint = gathered if joint is None else joint * gathered
    cells = joint.reshape(s_count * 4, s_count, csize).sum(axis=1)
    return np.ascontiguousarray(cells.T).reshape(csize, s_count, 4)


def _simulate_level2(model: BlockModel, dec: DecoderTables, q, ratio, rng,
                     n: int, code: StabilizerCode):
    blocks = code.n
    s_count = len(q)

    # true conditional residual channel of a block, given the decoder's
    # correction at that syndrome (classes re-centered by XOR)
    s_idx = np.arange(s_count)
    safe = np.where(dec.corrections < 0, 0, dec.corrections)
    true_resid = model.soft_base[
        s_idx[:, None], np.arange(4)[None, :] ^ safe[:, None]
    ]

    s1 = rng.choice(s_count, size=(n, blocks), p=q)
    w = ratio[s1].prod(axis=1)
    invalid = (dec.corrections[s1] < 0).any(axis=1)

    values = np.zeros(n)
    skipped = invalid.copy()
    for start in range(0, n, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n))
        rows = s1[sl]
        csize = rows.shape[0]
        # induced top-level coset masses: true for scoring, believed for the
        # decoder's choices; the top syndrome is integrated out exactly
        cells = _cell_sums(true_resid[rows], code)
        bel_cells = _cell_sums(dec.believed_resid[rows], code)
        chosen = _tie_break_rows(bel_cells.reshape(-1, 4)).reshape(csize, s_count)
        bel_tot = bel_cells.sum(axis=-1)
        p2 = cells.sum(axis=-1)
        undecodable = ((bel_tot <= 0) & (p2 > 0)).any(axis=-1)

        # conditional failure summed over top syndromes, accumulated from
        # the non-chosen masses directly to avoid cancellation at tiny rates
        miss = cells.copy()
        np.put_along_axis(miss, chosen[:, :, None], 0.0, axis=-1)
        r = miss.sum(axis=(1, 2))

        bad = undecodable | invalid[sl]
        values[sl] = np.where(bad, 0.0, w[sl] * r)
        skipped[sl] |= bad

    w = np.where(skipped, 0.0, w)
    return values, w, float(skipped.mean())
