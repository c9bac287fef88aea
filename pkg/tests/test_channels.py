import numpy as np
import pytest

from cerdec.channels import (
    KrausChannel,
    PauliChannel,
    PauliDist,
    ProductChannel,
    TransferChannel,
    UnitaryChannel,
    apply,
    average_fidelity,
    channel_from_dict,
    channel_to_dict,
    chi_diagonal,
    compose,
    identity_channel,
    process_infidelity,
    ptm_diagonal,
    to_kraus,
    unitarity,
    wht_chi_to_ptm,
    wht_ptm_to_chi,
)
from cerdec.dense import random_density_matrix
from cerdec.exceptions import CapacityError, DimensionError, ValidationError
from cerdec.pauli import all_paulis

from conftest import random_kraus_channel


def z_rotation(theta):
    return UnitaryChannel(np.diag([np.exp(-1j * theta), np.exp(1j * theta)]))


def brute_force_twirl_rates(ch, n):
    """Average P ch(P rho P) P over all Paulis, read off the rate vector."""
    paulis = [p.to_matrix() for p in all_paulis(n)]

    def twirled(rho):
        out = np.zeros_like(rho)
        for pm in paulis:
            out += pm @ apply(ch, pm @ rho @ pm, validate=False) @ pm
        return out / len(paulis)

    lam = np.array([np.trace(pm @ twirled(pm)).real / 2**n for pm in paulis])
    return wht_ptm_to_chi(lam).probs


class TestPauliDist:
    def test_validation(self):
        with pytest.raises(ValidationError):
            PauliDist(1, np.array([0.5, 0.5, 0.1, 0.0]))
        with pytest.raises(ValidationError):
            PauliDist(1, np.array([1.1, -0.1, 0.0, 0.0]))
        d = PauliDist(1, np.array([1.0, -1e-13, 1e-13, 0.0]))
        assert d.probs.min() == 0.0

    def test_product_constructor_digit_order(self):
        rng = np.random.default_rng(0)
        marg = rng.random((3, 4))
        marg /= marg.sum(axis=1, keepdims=True)
        d = PauliDist.from_single_qubit(marg)
        from cerdec.pauli import index_tables

        dig = index_tables(3)["digits"]
        for i in (0, 5, 21, 63):
            expect = np.prod([marg[q, dig[i, q]] for q in range(3)])
            assert abs(d.probs[i] - expect) < 1e-15


class TestChiDiagonal:
    def test_z_rotation(self):
        theta = 0.3
        chi = chi_diagonal(z_rotation(theta))
        assert abs(chi[0] - np.cos(theta) ** 2) < 1e-12
        assert abs(chi[2] - np.sin(theta) ** 2) < 1e-12  # Z sits at index 2
        assert chi[1] < 1e-12 and chi[3] < 1e-12

    def test_identity_point_mass(self):
        chi = chi_diagonal(identity_channel(3))
        assert chi[0] == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_force_twirl(self, rng):
        ch = random_kraus_channel(2, 3, rng)
        expect = brute_force_twirl_rates(ch, 2)
        assert np.abs(chi_diagonal(ch).probs - expect).max() < 1e-12

    def test_sums_to_one(self, rng):
        for m in (1, 2, 4):
            ch = random_kraus_channel(2, m, rng)
            assert abs(chi_diagonal(ch).probs.sum() - 1) < 1e-9

    def test_product_matches_dense_tensor(self, rng):
        f1 = random_kraus_channel(1, 2, rng)
        f2 = random_kraus_channel(2, 2, rng)
        prod = ProductChannel(3, [((2,), f1), ((0, 1), f2)])
        dense = KrausChannel(to_kraus(prod))
        assert np.abs(chi_diagonal(prod).probs - chi_diagonal(dense).probs).max() < 1e-12

    def test_non_cptp_rejected(self):
        with pytest.raises(ValidationError):
            KrausChannel([np.eye(2) * 0.9])


class TestPtmDiagonal:
    def test_identity_all_ones(self):
        assert np.allclose(ptm_diagonal(identity_channel(3)), np.ones(64))

    def test_depolarizing_eigenvalues(self):
        lam = wht_chi_to_ptm(np.array([0.97, 0.01, 0.01, 0.01]))
        assert np.allclose(lam, [1, 0.96, 0.96, 0.96])

    def test_consistency_with_chi(self, rng):
        ch = random_kraus_channel(2, 3, rng)
        assert np.abs(
            ptm_diagonal(ch) - wht_chi_to_ptm(chi_diagonal(ch))
        ).max() < 1e-12

    def test_dense_oracle(self, rng):
        # independent route: lambda_P = Tr(P ch(P)) / 2^n
        ch = random_kraus_channel(2, 3, rng)
        lam = ptm_diagonal(ch)
        for i, p in enumerate(all_paulis(2)):
            pm = p.to_matrix()
            direct = np.trace(pm @ apply(ch, pm, validate=False)).real / 4
            assert abs(lam[i] - direct) < 1e-12


class TestWalshHadamard:
    def test_all_ones_gives_point_mass(self):
        chi = wht_ptm_to_chi(np.ones(16))
        assert chi[0] == pytest.approx(1.0, abs=1e-14)
        assert chi.probs[1:].max() < 1e-14

    def test_round_trip(self, rng):
        for n in (1, 3, 7):
            v = rng.random(4**n)
            v /= v.sum()
            back = wht_ptm_to_chi(wht_chi_to_ptm(v)).probs
            assert np.abs(back - v).max() < 1e-12

    def test_depolarizing_inverse(self):
        chi = wht_ptm_to_chi(np.array([1, 0.96, 0.96, 0.96]))
        assert np.allclose(chi.probs, [0.97, 0.01, 0.01, 0.01])

    def test_bad_length(self):
        with pytest.raises(DimensionError):
            wht_chi_to_ptm(np.ones(8))


class TestInfidelityAndUnitarity:
    def test_identity(self):
        assert process_infidelity(identity_channel(2)) == 0
        assert unitarity(identity_channel(2)) == pytest.approx(1.0)

    def test_depolarizing(self):
        dep = PauliChannel(PauliDist(1, np.array([0.97, 0.01, 0.01, 0.01])))
        assert process_infidelity(dep) == pytest.approx(0.03)
        assert unitarity(dep) == pytest.approx((1 - 4 * 0.03 / 3) ** 2, abs=1e-12)
        assert average_fidelity(dep) == pytest.approx(1 - 2 * 0.03 / 3)

    def test_z_rotation(self):
        theta = 0.2
        assert process_infidelity(z_rotation(theta)) == pytest.approx(
            np.sin(theta) ** 2, abs=1e-12
        )
        assert unitarity(z_rotation(theta)) == pytest.approx(1.0, abs=1e-12)

    def test_unitary_channels_have_unit_unitarity(self, rng):
        from cerdec.noise import random_local_hermitian

        h = random_local_hermitian(2, rng)
        w, v = np.linalg.eigh(h)
        ch = UnitaryChannel((v * np.exp(1j * w)) @ v.conj().T)
        assert unitarity(ch) == pytest.approx(1.0, abs=1e-10)

    def test_twirl_preserves_infidelity(self, rng):
        ch = random_kraus_channel(2, 3, rng)
        twirled = PauliChannel(chi_diagonal(ch))
        assert process_infidelity(ch) == pytest.approx(
            process_infidelity(twirled), abs=1e-12
        )

    def test_product_unitarity_matches_dense(self, rng):
        f1 = random_kraus_channel(1, 2, rng)
        f2 = random_kraus_channel(2, 3, rng)
        prod = ProductChannel(4, [((1,), f1), ((0, 3), f2)])
        dense = KrausChannel(to_kraus(prod))
        assert unitarity(prod) == pytest.approx(unitarity(dense), abs=1e-10)


class TestComposeApply:
    def test_compose_identity(self, rng):
        ch = random_kraus_channel(1, 2, rng)
        comp = compose(identity_channel(1), ch)
        rho = random_density_matrix(1, rng)
        assert np.abs(apply(comp, rho) - apply(ch, rho)).max() < 1e-12

    def test_compose_rotations_add(self):
        comp = compose(z_rotation(0.2), z_rotation(0.4))
        target = z_rotation(0.6)
        rho = np.array([[0.5, 0.25 + 0.1j], [0.25 - 0.1j, 0.5]])
        assert np.abs(apply(comp, rho) - apply(target, rho)).max() < 1e-12

    def test_apply_preserves_trace(self, rng):
        ch = random_kraus_channel(2, 3, rng)
        for _ in range(50):
            rho = random_density_matrix(2, rng)
            assert abs(np.trace(apply(ch, rho)).real - 1) < 1e-10

    def test_apply_validates_states(self, rng):
        ch = identity_channel(1)
        with pytest.raises(ValidationError):
            apply(ch, np.array([[1.0, 0.0], [0.0, 1.0]]))  # trace 2

    def test_pauli_apply_matches_kraus(self, rng):
        probs = np.zeros(16)
        probs[0] = 0.9
        probs[1:5] = 0.025
        pch = PauliChannel(PauliDist(2, probs))
        dense = KrausChannel(to_kraus(pch))
        rho = random_density_matrix(2, rng)
        assert np.abs(apply(pch, rho) - apply(dense, rho)).max() < 1e-12

    def test_kraus_cap(self, rng):
        probs = np.full(4**7, 1 / 4**7)
        pch = PauliChannel(PauliDist(7, probs))
        with pytest.raises(CapacityError):
            to_kraus(pch)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionError):
            compose(identity_channel(1), identity_channel(2))


class TestTransferChannel:
    def test_validation(self):
        with pytest.raises(ValidationError):
            TransferChannel(np.diag([0.9, 1, 1, 1]))

    def test_chi_and_kraus(self):
        tc = TransferChannel(np.diag([1.0, 0.96, 0.96, 0.96]))
        assert np.allclose(chi_diagonal(tc).probs, [0.97, 0.01, 0.01, 0.01])
        ks = to_kraus(tc)
        comp = np.einsum("kij,kil->jl", ks.conj(), ks)
        assert np.abs(comp - np.eye(2)).max() < 1e-9


class TestSerialization:
    def test_round_trip_all_kinds(self, rng):
        dep = PauliChannel(PauliDist(1, np.array([0.97, 0.01, 0.01, 0.01])))
        kinds = [
            z_rotation(0.3),
            random_kraus_channel(2, 2, rng),
            dep,
            ProductChannel(3, [((1,), dep), ((0, 2), random_kraus_channel(2, 2, rng))]),
            TransferChannel(np.diag([1.0, 0.9, 0.9, 0.9])),
        ]
        for ch in kinds:
            back = channel_from_dict(channel_to_dict(ch))
            assert type(back) is type(ch)
            assert np.abs(
                chi_diagonal(back).probs - chi_diagonal(ch).probs
            ).max() < 1e-12

    def test_version_check(self):
        payload = channel_to_dict(identity_channel(1))
        payload["version"] = "bogus"
        from cerdec.exceptions import SchemaError

        with pytest.raises(SchemaError):
            channel_from_dict(payload)
