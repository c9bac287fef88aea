"""Seeded generators for random physical-noise ensembles on one code block.

Three families:

* locally-interacting Hamiltonian noise: a sum of random local Hermitian
  terms on Poisson-sized supports, exponentiated once (``exp(-i H t)``);
* random circuits: a product of such exponentials, one per layer;
* random CPTP maps: compositions of (local random unitary, local random
  Pauli channel) factor pairs, filtered to the non-catastrophic regime
  (infidelity at most 1/2 and unitarity at least 1/2).

Every sampler takes an explicit ``numpy.random.Generator``; given the same
configuration and stream, outputs are reproduced bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import (
    Channel,
    KrausChannel,
    PauliChannel,
    PauliDist,
    ProductChannel,
    UnitaryChannel,
    compose,
    process_infidelity,
    unitarity,
)
from .dense import embed_operator
from .exceptions import CapacityError, SamplingError, ValidationError

KINDS = ("cg1d", "random_circuit", "random_cptp")


@dataclass(frozen=True)
class NoiseModelConfig:
    kind: str
    n: int = 7
    num_terms: int = 4
    mean_support: float = 2.0
    time: float = 0.05
    pauli_infidelity: float = 0.01
    seed: int = 0
    kraus_cap: int = 1024

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown noise kind {self.kind!r}")
        if self.num_terms < 1:
            raise ValidationError("num_terms must be >= 1")
        if self.mean_support <= 0:
            raise ValidationError("mean_support must be positive")
        if self.time < 0:
            raise ValidationError("time must be nonnegative")
        if not 0 <= self.pauli_infidelity < 1:
            raise ValidationError("pauli_infidelity must be in [0, 1)")


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Substream fully determined by (seed, key); independent across keys."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def sample_support(mean: float, n: int, rng) -> tuple:
    """Poisson-sized uniform subset; size redrawn until within [1, n]."""
    if mean <= 0:
        raise ValidationError("mean support size must be positive")
    while True:
        size = int(rng.poisson(mean))
        if 1 <= size <= n:
            break
    return tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))


def random_local_hermitian(m: int, rng) -> np.ndarray:
    """Gaussian-unitary-ensemble Hermitian on m qubits, Frobenius norm 1."""
    dim = 2**m
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    return h / np.linalg.norm(h)


def _expm_hermitian(h: np.ndarray, scale: float) -> np.ndarray:
    """exp(1j * scale * h) via eigendecomposition (exactly unitary)."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * scale * w)) @ v.conj().T


def sample_cg1d(cfg: NoiseModelConfig, rng) -> UnitaryChannel:
    """Exponential of a sum of random local interactions."""
    if cfg.kind != "cg1d":
        raise ValidationError(f"config kind is {cfg.kind!r}")
    n = cfg.n
    h = np.zeros((2**n, 2**n), dtype=complex)
    for _ in range(cfg.num_terms):
        sup = sample_support(cfg.mean_support, n, rng)
        h += embed_operator(random_local_hermitian(len(sup), rng), sup, n)
    return UnitaryChannel(_expm_hermitian(h, -cfg.time))


def sample_random_circuit(cfg: NoiseModelConfig, rng) -> UnitaryChannel:
    """Depth-d circuit of local exponentials; layer 1 acts first."""
    if cfg.kind != "random_circuit":
        raise ValidationError(f"config kind is {cfg.kind!r}")
    n = cfg.n
    u = np.eye(2**n, dtype=complex)
    for _ in range(cfg.num_terms):
        sup = sample_support(cfg.mean_support, n, rng)
        gate = _expm_hermitian(random_local_hermitian(len(sup), rng), cfg.time)
        u = embed_operator(gate, sup, n) @ u
    return UnitaryChannel(u)


def _random_local_pauli(m: int, infidelity: float, rng) -> PauliChannel:
    """Identity rate 1 - infidelity, remainder uniform on the simplex."""
    probs = np.zeros(4**m)
    probs[0] = 1.0 - infidelity
    if infidelity > 0 and m >= 1:
        probs[1:] = rng.dirichlet(np.ones(4**m - 1)) * infidelity
    return PauliChannel(PauliDist(m, probs))


def sample_random_cptp(cfg: NoiseModelConfig, rng) -> KrausChannel:
    """Composition of local (unitary, Pauli) factor pairs.

    Resamples (up to 100 attempts) until the composite is non-catastrophic:
    infidelity <= 1/2 and unitarity >= 1/2.  Draws whose operator-sum form
    would exceed the Kraus cap are rejected the same way.
    """
    if cfg.kind != "random_cptp":
        raise ValidationError(f"config kind is {cfg.kind!r}")
    n = cfg.n
    last_diag = ""
    for _ in range(100):
        try:
            acc: Channel = None
            for _ in range(cfg.num_terms):
                sup = sample_support(cfg.mean_support, n, rng)
                m = len(sup)
                uni = UnitaryChannel(
                    _expm_hermitian(random_local_hermitian(m, rng), cfg.time)
                )
                pau = _random_local_pauli(m, cfg.pauli_infidelity, rng)
                local = compose(pau, uni, cfg.kraus_cap)
                factor = ProductChannel(n, [(sup, local)])
                acc = factor if acc is None else compose(factor, acc, cfg.kraus_cap)
            if isinstance(acc, ProductChannel):
                acc = compose(acc, PauliChannel(PauliDist.point_mass(n)), cfg.kraus_cap)
        except CapacityError as exc:
            last_diag = str(exc)
            continue
        eps = process_infidelity(acc)
        u = unitarity(acc)
        if eps <= 0.5 and u >= 0.5:
            return acc
        last_diag = f"infidelity={eps:.4f} unitarity={u:.4f}"
    raise SamplingError(
        f"no non-catastrophic draw in 100 attempts (last: {last_diag})"
    )


def sample_channel(cfg: NoiseModelConfig, rng) -> Channel:
    if cfg.kind == "cg1d":
        return sample_cg1d(cfg, rng)
    if cfg.kind == "random_circuit":
        return sample_random_circuit(cfg, rng)
    return sample_random_cptp(cfg, rng)
