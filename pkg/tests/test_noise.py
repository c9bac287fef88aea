import numpy as np
import pytest

from cerdec.channels import (
    KrausChannel,
    UnitaryChannel,
    apply,
    chi_diagonal,
    process_infidelity,
    unitarity,
)
from cerdec.dense import random_density_matrix
from cerdec.exceptions import ValidationError
from cerdec.noise import (
    NoiseModelConfig,
    rng_stream,
    sample_cg1d,
    sample_random_circuit,
    sample_random_cptp,
    sample_support,
)


class TestSupportSampling:
    def test_sizes_match_truncated_poisson(self):
        rng = np.random.default_rng(0)
        lam, n, draws = 2.0, 7, 10**5
        sizes = np.array([len(sample_support(lam, n, rng)) for _ in range(draws)])
        assert sizes.min() >= 1 and sizes.max() <= n
        # chi-squared against the [1, n]-truncated Poisson pmf
        from math import exp, factorial

        pmf = np.array([lam**k * exp(-lam) / factorial(k) for k in range(1, n + 1)])
        pmf /= pmf.sum()
        observed = np.bincount(sizes, minlength=n + 1)[1:]
        expected = pmf * draws
        stat = ((observed - expected) ** 2 / expected).sum()
        # 99.9% critical value for 6 degrees of freedom
        assert stat < 22.46, stat

    def test_single_qubit(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            assert sample_support(2.0, 1, rng) == (0,)

    def test_deterministic_given_stream(self):
        a = [sample_support(2.0, 7, rng_stream(9, 0)) for _ in range(1)]
        b = [sample_support(2.0, 7, rng_stream(9, 0)) for _ in range(1)]
        assert a == b

    def test_subsets_are_valid(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            sup = sample_support(2.0, 7, rng)
            assert len(set(sup)) == len(sup)
            assert all(0 <= q < 7 for q in sup)
            assert sup == tuple(sorted(sup))


class TestCg1d:
    def test_time_zero_is_identity(self):
        cfg = NoiseModelConfig("cg1d", n=3, num_terms=3, time=0.0, seed=1)
        ch = sample_cg1d(cfg, rng_stream(1, 0))
        assert np.abs(ch.u - np.eye(8)).max() < 1e-12

    def test_unitary_and_quadratic_onset(self):
        eps = []
        for t in (0.02, 0.04):
            cfg = NoiseModelConfig("cg1d", n=4, num_terms=4, time=t, seed=3)
            ch = sample_cg1d(cfg, rng_stream(3, 0))
            assert np.abs(ch.u.conj().T @ ch.u - np.eye(16)).max() < 1e-10
            assert unitarity(ch) == pytest.approx(1.0, abs=1e-9)
            eps.append(process_infidelity(ch))
        # same Hamiltonian draw, doubled time: infidelity scales ~4x
        assert eps[1] / eps[0] == pytest.approx(4.0, rel=0.05)

    def test_determinism(self):
        cfg = NoiseModelConfig("cg1d", n=4, num_terms=4, time=0.05, seed=3)
        a = sample_cg1d(cfg, rng_stream(3, 5))
        b = sample_cg1d(cfg, rng_stream(3, 5))
        assert np.array_equal(a.u, b.u)

    def test_ensemble_infidelity_spread(self):
        # time grid over [0.001, 0.1] produces at least two decades of spread
        values = []
        for i, t in enumerate(np.logspace(-3, -1, 6)):
            cfg = NoiseModelConfig("cg1d", n=7, num_terms=4, time=float(t), seed=11)
            values.append(process_infidelity(sample_cg1d(cfg, rng_stream(11, i))))
        assert max(values) / min(values) > 100


class TestRandomCircuit:
    def test_depth_one_matches_direct_exponential(self):
        cfg = NoiseModelConfig("random_circuit", n=2, num_terms=1,
                               mean_support=1.0, time=0.3, seed=4)
        ch = sample_random_circuit(cfg, rng_stream(4, 0))
        assert np.abs(ch.u.conj().T @ ch.u - np.eye(4)).max() < 1e-10

    def test_layers_compose_as_matrix_product(self):
        # sampling twice with the same stream but depths 1 and 2: the second
        # result equals (second layer) @ (first layer)
        cfg1 = NoiseModelConfig("random_circuit", n=3, num_terms=1, time=0.2, seed=6)
        cfg2 = NoiseModelConfig("random_circuit", n=3, num_terms=2, time=0.2, seed=6)
        u1 = sample_random_circuit(cfg1, rng_stream(6, 0)).u
        u2 = sample_random_circuit(cfg2, rng_stream(6, 0)).u
        # replay the stream to regenerate the second layer alone
        stream = rng_stream(6, 0)
        sample_random_circuit(cfg1, stream)
        layer2 = sample_random_circuit(
            NoiseModelConfig("random_circuit", n=3, num_terms=1, time=0.2, seed=6),
            stream,
        ).u
        assert np.abs(u2 - layer2 @ u1).max() < 1e-12

    def test_channel_compose_equivalence(self):
        from cerdec.channels import compose

        cfg = NoiseModelConfig("random_circuit", n=2, num_terms=3, time=0.3, seed=7)
        full = sample_random_circuit(cfg, rng_stream(7, 0))
        stream = rng_stream(7, 0)
        one = NoiseModelConfig("random_circuit", n=2, num_terms=1, time=0.3, seed=7)
        layers = [sample_random_circuit(one, stream) for _ in range(3)]
        acc = layers[0]
        for layer in layers[1:]:
            acc = compose(layer, acc)
        rho = random_density_matrix(2, np.random.default_rng(0))
        assert np.abs(apply(acc, rho) - apply(full, rho)).max() < 1e-12


class TestRandomCptp:
    def test_trivial_parameters_give_identity(self):
        cfg = NoiseModelConfig("random_cptp", n=2, num_terms=2, time=0.0,
                               pauli_infidelity=0.0, seed=8)
        ch = sample_random_cptp(cfg, rng_stream(8, 0))
        rho = random_density_matrix(2, np.random.default_rng(1))
        assert np.abs(apply(ch, rho) - rho).max() < 1e-10

    def test_kraus_completeness(self):
        cfg = NoiseModelConfig("random_cptp", n=3, num_terms=2, time=0.1,
                               pauli_infidelity=0.02, seed=9)
        ch = sample_random_cptp(cfg, rng_stream(9, 0))
        assert isinstance(ch, KrausChannel)
        comp = np.einsum("kij,kil->jl", ch.kraus.conj(), ch.kraus)
        assert np.abs(comp - np.eye(8)).max() < 1e-10

    def test_single_unit_factor_rates(self):
        cfg = NoiseModelConfig("random_cptp", n=1, num_terms=1, time=0.0,
                               pauli_infidelity=0.03, seed=10)
        ch = sample_random_cptp(cfg, rng_stream(10, 0))
        assert chi_diagonal(ch)[0] == pytest.approx(0.97, abs=1e-10)

    def test_non_catastrophic_filter(self):
        cfg = NoiseModelConfig("random_cptp", n=2, num_terms=2, time=0.2,
                               pauli_infidelity=0.05, seed=11)
        ch = sample_random_cptp(cfg, rng_stream(11, 0))
        assert process_infidelity(ch) <= 0.5
        assert unitarity(ch) >= 0.5


class TestConfigValidation:
    def test_bad_values(self):
        with pytest.raises(ValidationError):
            NoiseModelConfig("bogus")
        with pytest.raises(ValidationError):
            NoiseModelConfig("cg1d", num_terms=0)
        with pytest.raises(ValidationError):
            NoiseModelConfig("cg1d", mean_support=0.0)
        with pytest.raises(ValidationError):
            NoiseModelConfig("cg1d", pauli_infidelity=1.0)
