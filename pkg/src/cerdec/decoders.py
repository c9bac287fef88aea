"""Syndrome-to-logical-class inference.

Block maximum-likelihood decoding sums the error distribution over the four
cosets sharing the observed syndrome; the product-form variant does the
same for a distribution given as independent one-qubit marginals, without
materializing the joint.  Minimum-weight decoding picks the class of the
lightest consistent error.  Multi-level decoding runs a bottom-up message
pass: each block's soft output, re-centered on its own correction, becomes
a one-qubit marginal for the block one level up.

All soft outputs are probability 4-vectors over logical classes in the
canonical order (I, X, Z, Y); ties choose the earliest class in the order
I < X < Y < Z.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cer import CerDataset
from .channels import PauliDist
from .codes import CLASS_LABELS, StabilizerCode, Syndrome, tie_break_class
from .exceptions import (
    DegenerateSyndromeError,
    DimensionError,
    ValidationError,
)
from .pauli import index_tables
from .uss import single_qubit_ansatz, uss_complete

DECODER_KINDS = ("ml_full", "ml_uss", "mw", "d1")


@dataclass(frozen=True, eq=False)
class SoftDecision:
    """Conditional class probabilities and the argmax choice."""

    probs: np.ndarray = field(repr=False)
    chosen: int
    syndrome: Optional[Syndrome] = None

    @property
    def chosen_label(self) -> str:
        return CLASS_LABELS[self.chosen]

    def display_probs(self) -> tuple:
        """(p_I, p_X, p_Y, p_Z) in conventional reporting order."""
        p = self.probs
        return (float(p[0]), float(p[1]), float(p[3]), float(p[2]))

    def residual_marginal(self) -> np.ndarray:
        """Class distribution relative to the applied correction."""
        c = self.chosen
        return self.probs[np.arange(4) ^ c]


@dataclass(frozen=True, eq=False)
class DecoderSpec:
    """Which distribution the decoder believes in.

    ml_full: the exact error rates of the channel.
    ml_uss:  the completion of the attached partial dataset.
    d1:      the completion of an identity-only dataset (fidelity only).
    mw:      no distribution; lightest consistent error wins.
    """

    kind: str
    dataset: Optional[CerDataset] = None
    notes: str = ""

    def __post_init__(self):
        if self.kind not in DECODER_KINDS:
            raise ValidationError(f"unknown decoder kind {self.kind!r}")
        if self.kind == "ml_uss" and self.dataset is None:
            raise ValidationError("ml_uss requires a dataset")


def _probs_of(dist) -> np.ndarray:
    return dist.probs if isinstance(dist, PauliDist) else np.asarray(dist, dtype=float)


def coset_mass(dist, syndrome: Syndrome, code: StabilizerCode) -> np.ndarray:
    """Unnormalized coset sums: mass[c] = sum of dist over T_s L_c S."""
    probs = _probs_of(dist)
    if probs.shape != (4**code.n,):
        raise DimensionError(
            f"distribution length {probs.shape} does not match code n={code.n}"
        )
    return probs[code.coset_table[int(syndrome)]].sum(axis=1)


def ml_decode_block(dist, syndrome: Syndrome, code: StabilizerCode) -> SoftDecision:
    """Maximum-likelihood soft decision from a full block distribution."""
    mass = coset_mass(dist, syndrome, code)
    total = mass.sum()
    if total <= 0:
        raise DegenerateSyndromeError(
            f"no probability mass for syndrome {int(syndrome)}"
        )
    probs = mass / total
    return SoftDecision(probs, tie_break_class(probs), syndrome)


def ml_decode_product(marginals, syndrome: Syndrome, code: StabilizerCode) -> SoftDecision:
    """ML decision for a product distribution given one-qubit marginals.

    ``marginals`` is an (n, 4) array of per-qubit class distributions in
    canonical order.  Coset sums are accumulated term by term (4 * 2^{n-1}
    products of n factors) without building the 4^n joint.
    """
    marginals = np.asarray(marginals, dtype=float)
    if marginals.shape != (code.n, 4):
        raise DimensionError(f"expected ({code.n}, 4) marginals, got {marginals.shape}")
    digits = index_tables(code.n)["digits"]
    members = code.coset_table[int(syndrome)]           # (4, 2^{n-1})
    codes = digits[members]                              # (4, 2^{n-1}, n)
    factors = marginals[np.arange(code.n)[None, None, :], codes]
    mass = factors.prod(axis=2).sum(axis=1)
    total = mass.sum()
    if total <= 0:
        raise DegenerateSyndromeError(
            f"no probability mass for syndrome {int(syndrome)}"
        )
    probs = mass / total
    return SoftDecision(probs, tie_break_class(probs), syndrome)


def mw_decode(syndrome: Syndrome, code: StabilizerCode) -> SoftDecision:
    """Class of the lightest error consistent with the syndrome.

    Returns a degenerate (indicator) soft decision; class ties resolve in
    the order I < X < Y < Z, element ties by Pauli index (implicit in the
    table ordering).
    """
    wt = index_tables(code.n)["weight"]
    per_class = wt[code.coset_table[int(syndrome)]].min(axis=1)
    chosen = tie_break_class(-per_class.astype(float))
    probs = np.zeros(4)
    probs[chosen] = 1.0
    return SoftDecision(probs, chosen, syndrome)


def build_decoder_input(spec: DecoderSpec, oracle: Optional[PauliDist],
                        infidelity: float) -> Optional[PauliDist]:
    """The distribution a decoder conditions on, or None for minimum-weight."""
    if spec.kind == "mw":
        return None
    if spec.kind == "ml_full":
        if oracle is None:
            raise ValidationError("ml_full requires the oracle distribution")
        return oracle
    if spec.kind == "ml_uss":
        return uss_complete(spec.dataset).dist
    # identity-only dataset: everything follows from the known fidelity
    n = oracle.n if oracle is not None else (spec.dataset.n if spec.dataset else None)
    if n is None:
        raise ValidationError("d1 requires an oracle or dataset to fix n")
    ds = CerDataset(n, {0: 1.0 - infidelity})
    return uss_complete(ds).dist


def message_passing_decode(code: StabilizerCode, leaf_inputs,
                           syndromes_per_level) -> list:
    """Bottom-up decoding of a level-L concatenated code.

    ``leaf_inputs``: one entry per level-1 block (count n^{L-1}), each a
    PauliDist over the block or an (n, 4) marginal array.
    ``syndromes_per_level``: level 1 first; level j holds n^{L-j} syndromes.
    Upper-level syndromes are in the frame where each block's correction
    has already been applied.

    Returns the per-level lists of SoftDecisions; the final correction is
    the single decision of the last level.
    """
    levels = len(syndromes_per_level)
    if levels < 1:
        raise ValidationError("need at least one level")
    prev = None
    decisions = []
    for lev, syns in enumerate(syndromes_per_level):
        expected = code.n ** (levels - 1 - lev)
        if len(syns) != expected:
            raise ValidationError(
                f"level {lev + 1} expects {expected} syndromes, got {len(syns)}"
            )
        here = []
        if lev == 0:
            if len(leaf_inputs) != expected:
                raise ValidationError(
                    f"expected {expected} leaf inputs, got {len(leaf_inputs)}"
                )
            for inp, s in zip(leaf_inputs, syns):
                if isinstance(inp, PauliDist) or (
                    np.asarray(inp).shape == (4**code.n,)
                ):
                    here.append(ml_decode_block(inp, s, code))
                else:
                    here.append(ml_decode_product(inp, s, code))
        else:
            for b, s in enumerate(syns):
                group = prev[b * code.n : (b + 1) * code.n]
                marg = np.stack([d.residual_marginal() for d in group])
                here.append(ml_decode_product(marg, s, code))
        decisions.append(here)
        prev = here
    return decisions
