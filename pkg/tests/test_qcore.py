"""Density-matrix engine: states, channels, observables, sampling."""

import math

import numpy as np
import pytest

from memlink.qcore import (ATOL_ACCUM, PAULI, DensityMatrix, KrausChannel,
                           Observable, QuantumStateError, apply_channel,
                           dephasing_channel_qubit, eigenprojectors,
                           expectation, loss_channel_qubit, partial_trace,
                           post_select, pure_state, sample_measurement,
                           tensor)

QUBIT = ("0", "1")


def plus_state():
    return pure_state([1.0, 1.0], QUBIT)


def bell_phi_plus():
    labels = ("0,0", "0,1", "1,0", "1,1")
    return pure_state([1.0, 0.0, 0.0, 1.0], labels)


class TestDensityMatrix:
    def test_validate_accepts_physical_state(self):
        rho = pure_state([1.0, 1.0j], QUBIT)
        rho.validate()
        np.testing.assert_allclose(rho.mat.trace(), 1.0, atol=1e-12)

    def test_purity_of_pure_and_mixed(self):
        assert plus_state().purity() == pytest.approx(1.0, abs=1e-12)
        mixed = DensityMatrix(np.eye(2) / 2.0, QUBIT)
        assert mixed.purity() == pytest.approx(0.5, abs=1e-12)

    def test_validate_rejects_non_hermitian(self):
        bad = DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]), QUBIT)
        with pytest.raises(QuantumStateError):
            bad.validate()

    def test_validate_rejects_wrong_trace(self):
        bad = DensityMatrix(np.eye(2), QUBIT)
        with pytest.raises(QuantumStateError):
            bad.validate()

    def test_validate_rejects_negative_eigenvalue(self):
        mat = np.array([[1.2, 0.0], [0.0, -0.2]])
        with pytest.raises(QuantumStateError):
            DensityMatrix(mat, QUBIT).validate()

    def test_label_count_must_match_dimension(self):
        with pytest.raises(QuantumStateError):
            DensityMatrix(np.eye(2) / 2.0, ("only",))

    def test_weight_bounds(self):
        with pytest.raises(QuantumStateError):
            DensityMatrix(np.eye(2) / 2.0, QUBIT, weight=1.5)

    def test_zero_ket_rejected(self):
        with pytest.raises(QuantumStateError):
            pure_state([0.0, 0.0], QUBIT)

    def test_probabilities_are_diagonal(self):
        rho = pure_state([1.0, 1.0j], QUBIT)
        np.testing.assert_allclose(rho.probabilities(), [0.5, 0.5],
                                   atol=1e-12)


class TestObservable:
    def test_pauli_set_is_dichotomic(self):
        for name in ("X", "Y", "Z"):
            obs = Observable(PAULI[name], QUBIT, name=name)
            assert obs.is_dichotomic()

    def test_non_hermitian_rejected(self):
        with pytest.raises(QuantumStateError):
            Observable(np.array([[0, 1], [0, 0]]), QUBIT)

    def test_tensor_of_observables(self):
        zz = tensor(Observable(PAULI["Z"], QUBIT, name="Z"),
                    Observable(PAULI["Z"], QUBIT, name="Z"))
        np.testing.assert_allclose(zz.mat, np.diag([1, -1, -1, 1]),
                                   atol=1e-15)
        assert zz.labels == ("0,0", "0,1", "1,0", "1,1")

    def test_tensor_rejects_mixed_kinds(self):
        with pytest.raises(TypeError):
            tensor(plus_state(), Observable(PAULI["Z"], QUBIT))


class TestChannels:
    def test_identity_channel_leaves_state(self):
        rho = plus_state()
        ident = KrausChannel([np.eye(2, dtype=complex)])
        out = apply_channel(rho, ident)
        np.testing.assert_allclose(out.mat, rho.mat, atol=1e-15)
        assert out.weight == pytest.approx(1.0)

    def test_full_dephasing_kills_coherence(self):
        out = apply_channel(plus_state(), dephasing_channel_qubit(0.0))
        np.testing.assert_allclose(out.mat, np.diag([0.5, 0.5]), atol=1e-12)

    def test_amplitude_damping_hand_value(self):
        # excited state through survival 0.7: population drops to 0.7
        rho = pure_state([0.0, 1.0], QUBIT)
        out = apply_channel(rho, loss_channel_qubit(0.7))
        np.testing.assert_allclose(out.probabilities(), [0.3, 0.7],
                                   atol=1e-12)
        assert out.weight == pytest.approx(1.0, abs=1e-12)

    def test_partial_dephasing_scales_off_diagonals(self):
        out = apply_channel(plus_state(), dephasing_channel_qubit(0.25))
        np.testing.assert_allclose(out.mat[0, 1], 0.25 * 0.5, atol=1e-12)

    def test_over_complete_channel_rejected(self):
        ops = [np.eye(2, dtype=complex), 0.5 * np.eye(2, dtype=complex)]
        with pytest.raises(QuantumStateError):
            KrausChannel(ops)

    def test_trace_preserving_flag(self):
        assert loss_channel_qubit(0.3).is_trace_preserving()
        half = KrausChannel([np.sqrt(0.5) * np.eye(2, dtype=complex)])
        assert not half.is_trace_preserving()

    def test_subunital_channel_shrinks_weight(self):
        half = KrausChannel([np.sqrt(0.5) * np.eye(2, dtype=complex)])
        out = apply_channel(plus_state(), half)
        assert out.weight == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(out.mat.trace(), 1.0, atol=1e-12)

    def test_channel_composition_matches_composed_kraus(self):
        """Applying two channels in sequence equals the composed map."""
        a = loss_channel_qubit(0.8)
        b = dephasing_channel_qubit(0.6)
        rho = pure_state([0.6, 0.8j], QUBIT)
        seq = apply_channel(apply_channel(rho, a), b)
        composed = KrausChannel(
            [kb @ ka for kb in b.operators for ka in a.operators])
        direct = apply_channel(rho, composed)
        np.testing.assert_allclose(seq.mat, direct.mat, atol=1e-9)
        np.testing.assert_allclose(seq.weight, direct.weight, atol=1e-12)


class TestExpectation:
    def test_z_on_ground_state(self):
        rho = pure_state([1.0, 0.0], QUBIT)
        assert expectation(rho, Observable(PAULI["Z"], QUBIT)) == \
            pytest.approx(1.0, abs=1e-12)

    def test_bell_state_identities(self):
        rho = bell_phi_plus()
        labels = rho.labels
        for name, value in (("X", 1.0), ("Y", -1.0), ("Z", 1.0)):
            obs = Observable(np.kron(PAULI[name], PAULI[name]), labels)
            assert expectation(rho, obs) == pytest.approx(value, abs=1e-10)

    def test_tilted_basis_trace_oracle(self):
        # <Z (x) (-Z+X)/sqrt(2)> on the maximally correlated pair
        rho = bell_phi_plus()
        tilted = (-PAULI["Z"] + PAULI["X"]) / math.sqrt(2.0)
        obs = Observable(np.kron(PAULI["Z"], tilted), rho.labels)
        assert expectation(rho, obs) == pytest.approx(-1.0 / math.sqrt(2.0),
                                                      abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(QuantumStateError):
            expectation(bell_phi_plus(), Observable(PAULI["Z"], QUBIT))


class TestEigenprojectors:
    def test_projectors_resolve_identity(self):
        groups = eigenprojectors(Observable(PAULI["X"], QUBIT))
        total = sum(p for _, p in groups)
        np.testing.assert_allclose(total, np.eye(2), atol=1e-10)
        assert sorted(v for v, _ in groups) == pytest.approx([-1.0, 1.0])

    def test_degenerate_eigenvalues_are_grouped(self):
        obs = Observable(np.eye(2, dtype=complex), QUBIT)
        groups = eigenprojectors(obs)
        assert len(groups) == 1


class TestSampling:
    def test_definite_outcome_is_deterministic(self):
        rng = np.random.default_rng(7)
        rho = pure_state([1.0, 0.0], QUBIT)
        obs = Observable(PAULI["Z"], QUBIT)
        outcomes = [sample_measurement(rho, obs, rng) for _ in range(200)]
        assert set(outcomes) == {1.0}

    def test_maximally_mixed_is_balanced(self):
        rng = np.random.default_rng(11)
        rho = DensityMatrix(np.eye(2) / 2.0, QUBIT)
        obs = Observable(PAULI["Z"], QUBIT)
        n = 100_000
        hits = sum(sample_measurement(rho, obs, rng) > 0 for _ in range(n))
        sigma = math.sqrt(0.25 / n)
        assert abs(hits / n - 0.5) < 3.0 * sigma

    def test_transverse_basis_mean_near_zero(self):
        rng = np.random.default_rng(13)
        rho = pure_state([1.0, 0.0], QUBIT)
        obs = Observable(PAULI["X"], QUBIT)
        n = 100_000
        mean = np.mean([sample_measurement(rho, obs, rng)
                        for _ in range(n)])
        assert abs(mean) < 3.0 / math.sqrt(n)

    def test_reproducible_given_stream_state(self):
        rho = DensityMatrix(np.eye(2) / 2.0, QUBIT)
        obs = Observable(PAULI["Z"], QUBIT)
        runs = []
        for _ in range(2):
            rng = np.random.default_rng(123)
            runs.append([sample_measurement(rho, obs, rng)
                         for _ in range(50)])
        assert runs[0] == runs[1]


class TestReshaping:
    def test_partial_trace_of_product(self):
        a = pure_state([1.0, 0.0], QUBIT)
        b = plus_state()
        joint = tensor(a, b)
        kept = partial_trace(joint, (2, 2), keep=1, labels=QUBIT)
        np.testing.assert_allclose(kept.mat, b.mat, atol=1e-12)

    def test_partial_trace_of_entangled_pair_is_mixed(self):
        red = partial_trace(bell_phi_plus(), (2, 2), keep=0, labels=QUBIT)
        np.testing.assert_allclose(red.mat, np.eye(2) / 2.0, atol=1e-12)

    def test_post_select_tracks_probability(self):
        rho = pure_state([1.0, 0.0, 0.0, 1.0],
                         ("0,0", "0,1", "1,0", "1,1"))
        sub = post_select(rho, [0, 3])
        assert sub.weight == pytest.approx(1.0, abs=1e-12)
        sub2 = post_select(rho, [0, 1])
        assert sub2.weight == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(sub2.mat, np.diag([1.0, 0.0]), atol=1e-12)

    def test_post_select_on_dead_branch(self):
        rho = pure_state([1.0, 0.0], QUBIT)
        dead = post_select(rho, [1])
        assert dead.weight == 0.0
        dead.validate()

    def test_every_engine_output_stays_physical(self):
        """Invariant sweep: states coming out of the toolbox validate."""
        rng = np.random.default_rng(3)
        rho = pure_state(rng.normal(size=4) + 1j * rng.normal(size=4),
                         ("a", "b", "c", "d"))
        rho.validate()
        ch = KrausChannel([np.kron(k, np.eye(2))
                           for k in loss_channel_qubit(0.4).operators])
        out = apply_channel(rho, ch)
        out.validate()
        partial_trace(out, (2, 2), 0, QUBIT).validate()
        post_select(out, [0, 1]).validate()
