import itertools

import numpy as np
import pytest

from cerdec.cer import exact_rates, select_top_k
from cerdec.channels import (
    KrausChannel,
    PauliChannel,
    PauliDist,
    UnitaryChannel,
    process_infidelity,
    to_kraus,
)
from cerdec.codes import Syndrome
from cerdec.decoders import DecoderSpec, ml_decode_block, ml_decode_product
from cerdec.exceptions import DegenerateSyndromeError, ValidationError
from cerdec.logical import (
    DecoderTables,
    SamplerConfig,
    block_model,
    effective_channel_coherent,
    effective_channel_pauli,
    level1_exact,
    simulate_concatenated,
    syndrome_distribution,
    tune_alpha,
)
from cerdec.noise import NoiseModelConfig, rng_stream, sample_cg1d
from cerdec.pauli import PauliOp


def iid_depolarizing(p, n=7):
    row = np.array([1 - p, p / 3, p / 3, p / 3])
    return PauliDist.from_single_qubit(np.tile(row, (n, 1)))


def cg1d_channel(t, seed, index=0):
    cfg = NoiseModelConfig("cg1d", n=7, num_terms=4, mean_support=2.0,
                           time=t, seed=seed)
    return sample_cg1d(cfg, rng_stream(seed, index))


def sparse_pauli_dist(rng, mass=0.05, terms=20):
    probs = np.zeros(4**7)
    probs[0] = 1 - mass
    idx = rng.choice(np.arange(1, 4**7), size=terms, replace=False)
    weights = rng.random(terms)
    probs[idx] = weights / weights.sum() * mass
    return PauliDist(7, probs)


class TestSyndromeDistribution:
    def test_point_mass(self, code):
        sd = syndrome_distribution(PauliDist.point_mass(7), code)
        assert sd[0] == 1 and sd.sum() == 1

    def test_sums_to_one(self, code, rng):
        v = rng.random(4**7)
        d = PauliDist(7, v / v.sum())
        assert abs(syndrome_distribution(d, code).sum() - 1) < 1e-12

    def test_x_noise_supported_on_x_detecting_syndromes(self, code):
        row = np.array([0.9, 0.1, 0.0, 0.0])  # I/X only
        d = PauliDist.from_single_qubit(np.tile(row, (7, 1)))
        sd = syndrome_distribution(d, code)
        # X errors commute with the X-type generators (bits 0..2)
        supported = np.flatnonzero(sd > 1e-15)
        assert all(s & 0b000111 == 0 for s in supported)


class TestEffectiveChannels:
    def test_noiseless_identity(self, code):
        ch = UnitaryChannel(np.eye(128))
        eff = effective_channel_coherent(
            ch, code, Syndrome.from_int(0, code), PauliOp.identity(7)
        )
        assert np.allclose(eff.transfer, np.eye(4))
        assert eff.infidelity < 1e-12

    def test_encoded_logical_x_gives_x_transfer(self, code):
        ch = UnitaryChannel(code.logical_x.to_matrix())
        eff = effective_channel_coherent(
            ch, code, Syndrome.from_int(0, code), PauliOp.identity(7)
        )
        assert np.allclose(eff.transfer, np.diag([1, 1, -1, -1]))
        assert eff.infidelity == pytest.approx(1.0)

    def test_coherent_equals_pauli_on_pauli_inputs(self, code, rng):
        d = sparse_pauli_dist(rng)
        dense = KrausChannel(to_kraus(PauliChannel(d)))
        m_p = block_model(d, code)
        m_c = block_model(dense, code)
        pos = m_p.prob_s > 1e-13
        assert np.abs(m_c.prob_s - m_p.prob_s).max() < 1e-10
        assert np.abs(m_c.soft_base[pos] - m_p.soft_base[pos]).max() < 1e-10
        assert np.abs(m_c.transfer_base[pos] - m_p.transfer_base[pos]).max() < 1e-10

    def test_pauli_conditional_values(self, code, rng):
        d = sparse_pauli_dist(rng)
        s = Syndrome.from_int(0, code)
        dec = ml_decode_block(d, s, code)
        eff = effective_channel_pauli(d, code, s, dec)
        assert eff.infidelity == pytest.approx(1 - dec.probs[dec.chosen], abs=1e-12)
        assert eff.transfer[0, 0] == 1.0 and np.abs(eff.transfer[0, 1:]).max() == 0

    def test_uniform_decision_gives_three_quarters(self, code):
        d = PauliDist(7, np.full(4**7, 1 / 4**7))
        s = Syndrome.from_int(3, code)
        dec = ml_decode_block(d, s, code)
        eff = effective_channel_pauli(d, code, s, dec)
        assert eff.infidelity == pytest.approx(0.75)

    def test_unreachable_syndrome_raises(self, code):
        with pytest.raises(DegenerateSyndromeError):
            effective_channel_pauli(
                PauliDist.point_mass(7), code, Syndrome.from_int(5, code),
                ml_decode_block(
                    PauliDist(7, np.full(4**7, 1 / 4**7)),
                    Syndrome.from_int(5, code), code,
                ),
            )

    def test_correction_must_preserve_codespace(self, code):
        ch = UnitaryChannel(np.eye(128))
        with pytest.raises(ValidationError):
            effective_channel_coherent(
                ch, code, Syndrome.from_int(0, code), PauliOp.single(7, 0, "X")
            )


class TestLevel1Exact:
    def test_noiseless(self, code):
        r, avg = level1_exact(PauliDist.point_mass(7), code, DecoderSpec("ml_full"))
        assert r == 0
        assert np.allclose(avg.transfer, np.eye(4))

    def test_distance_three_scaling(self, code):
        ratios = []
        for p in (1e-3, 5e-4):
            r, _ = level1_exact(iid_depolarizing(p), code, DecoderSpec("ml_full"))
            ratios.append(r / p**2)
        assert abs(ratios[0] / ratios[1] - 1) < 0.10

    def test_ml_equals_mw_for_iid_depolarizing(self, code):
        d = iid_depolarizing(1e-3)
        r_ml, _ = level1_exact(d, code, DecoderSpec("ml_full"))
        r_mw, _ = level1_exact(d, code, DecoderSpec("mw"))
        assert abs(r_ml - r_mw) < 1e-9

    def test_average_channel_infidelity_consistent(self, code, rng):
        d = sparse_pauli_dist(rng)
        r, avg = level1_exact(d, code, DecoderSpec("ml_full"))
        # infidelity is linear in the channel: 1 - mean of transfer diagonal
        from cerdec.channels import TransferChannel, process_infidelity as pi

        assert pi(TransferChannel(avg.transfer)) == pytest.approx(r, abs=1e-10)


class TestMonteCarlo:
    def test_direct_and_importance_match_exact(self, code):
        ch = cg1d_channel(0.05, seed=5)
        r_exact, _ = level1_exact(ch, code, DecoderSpec("ml_full"))
        spec = DecoderSpec("ml_full")
        res_d = simulate_concatenated(
            ch, code, 1, spec, SamplerConfig("direct", samples=100000, seed=1)
        )
        res_i = simulate_concatenated(
            ch, code, 1, spec, SamplerConfig("importance", alpha=0.5,
                                             samples=10000, seed=2)
        )
        assert abs(res_d.r_hat - r_exact) < 3 * res_d.stderr
        assert abs(res_i.r_hat - r_exact) < 3 * res_i.stderr
        assert res_i.stderr < res_d.stderr

    def test_alpha_one_equals_direct(self, code):
        ch = cg1d_channel(0.05, seed=5)
        spec = DecoderSpec("ml_full")
        a = simulate_concatenated(
            ch, code, 1, spec, SamplerConfig("importance", alpha=1.0,
                                             samples=500, seed=3)
        )
        b = simulate_concatenated(
            ch, code, 1, spec, SamplerConfig("direct", samples=500, seed=3)
        )
        assert a.r_hat == b.r_hat

    def test_noiseless_any_level(self, code):
        for levels in (1, 2):
            res = simulate_concatenated(
                PauliDist.point_mass(7), code, levels, DecoderSpec("ml_full"),
                SamplerConfig("direct", samples=100, seed=4),
            )
            assert res.r_hat == 0 and res.stderr == 0

    def test_direct_weights_are_unit(self, code):
        ch = cg1d_channel(0.05, seed=5)
        res = simulate_concatenated(
            ch, code, 1, DecoderSpec("ml_full"),
            SamplerConfig("direct", samples=1000, seed=5),
        )
        assert res.mean_weight == pytest.approx(1.0)

    def test_level_cap(self, code):
        with pytest.raises(ValidationError):
            simulate_concatenated(
                PauliDist.point_mass(7), code, 3, DecoderSpec("ml_full"),
                SamplerConfig("direct", samples=10, seed=0),
            )

    def test_level2_matches_exact_enumeration_on_toy(self, toy_code):
        inner = toy_code
        row = np.array([0.88, 0.05, 0.04, 0.03])
        truth = PauliDist.from_single_qubit(np.tile(row, (3, 1)))

        def exact_level2(spec):
            model = block_model(truth, inner)
            dec = DecoderTables.from_spec(spec, inner, truth, 1 - truth.probs[0])
            s_count = len(model.prob_s)
            safe = np.where(dec.corrections < 0, 0, dec.corrections)
            resid = model.soft_base[
                np.arange(s_count)[:, None], np.arange(4)[None, :] ^ safe[:, None]
            ]
            total = 0.0
            for svec in itertools.product(range(s_count), repeat=3):
                p_blocks = np.prod([model.prob_s[s] for s in svec])
                if p_blocks == 0:
                    continue
                joint = PauliDist.from_single_qubit(
                    np.stack([resid[s] for s in svec])
                )
                marg_bel = np.stack([dec.believed_resid[s] for s in svec])
                top = block_model(joint, inner)
                for s2 in range(s_count):
                    if top.prob_s[s2] <= 0:
                        continue
                    d = ml_decode_product(
                        marg_bel, Syndrome.from_int(s2, inner), inner
                    )
                    total += p_blocks * top.prob_s[s2] * (
                        1 - top.soft_base[s2, d.chosen]
                    )
            return total

        for spec in (DecoderSpec("ml_full"), DecoderSpec("d1")):
            expect = exact_level2(spec)
            sim = simulate_concatenated(
                truth, inner, 2, spec,
                SamplerConfig("direct", samples=60000, seed=12),
            )
            assert abs(sim.r_hat - expect) < 3.5 * sim.stderr
            sim_i = simulate_concatenated(
                truth, inner, 2, spec,
                SamplerConfig("importance", alpha=0.5, samples=20000, seed=13),
            )
            assert abs(sim_i.r_hat - expect) < 3.5 * sim_i.stderr

    def test_common_random_numbers_make_k1_gain_exact(self, code):
        ch = cg1d_channel(0.05, seed=5)
        chi = exact_rates(ch)
        samp = SamplerConfig("importance", alpha=0.4, samples=400, seed=77)
        ref = simulate_concatenated(ch, code, 2, DecoderSpec("d1"), samp)
        k1 = simulate_concatenated(
            ch, code, 2, DecoderSpec("ml_uss", select_top_k(chi, 1)), samp
        )
        assert ref.r_hat == k1.r_hat
        assert np.array_equal(ref.values, k1.values)


class TestTuneAlpha:
    def test_noiseless_returns_one(self, code):
        assert tune_alpha(PauliDist.point_mass(7), code, 0.3) == 1.0

    def test_output_in_grid(self, code, rng):
        d = sparse_pauli_dist(rng, mass=0.4)
        a = tune_alpha(d, code, 0.3)
        assert a in [round(0.1 * k, 1) for k in range(1, 11)]

    def test_matches_definition_and_monotone(self, code, rng):
        d = sparse_pauli_dist(rng, mass=0.4, terms=200)
        model = block_model(d, code)
        pos = model.prob_s > 0
        bad = pos & (model.soft_base.max(axis=1) < 0.5)
        assert bad.any()

        def mass_at(alpha):
            q = np.where(pos, model.prob_s**alpha, 0.0)
            return (q / q.sum())[bad].sum()

        grid = [round(0.1 * k, 1) for k in range(10, 0, -1)]
        masses = {a: mass_at(a) for a in grid}
        ceiling = max(masses.values())
        for th in (ceiling * 0.3, ceiling * 0.7, ceiling * 0.95):
            got = tune_alpha(d, code, th)
            qualifying = [a for a in grid if masses[a] >= th]
            assert got == (max(qualifying) if qualifying else 1.0)
        # heavier (attainable) targets never get a larger alpha
        ths = [ceiling * f for f in (0.2, 0.5, 0.9)]
        alphas = [tune_alpha(d, code, th) for th in ths]
        assert all(a >= b for a, b in zip(alphas, alphas[1:])), alphas
        # unattainable targets fall back to no flattening
        assert tune_alpha(d, code, min(ceiling * 1.5, 0.999)) == 1.0

    def test_threshold_validation(self, code):
        with pytest.raises(ValidationError):
            tune_alpha(PauliDist.point_mass(7), code, 1.5)
