import itertools

import numpy as np
import pytest

from nucleport.bell import (
    BellOutcome,
    TRIPLET_OUTCOMES,
    DiscriminationResult,
    bell_ket,
    bell_projector,
    collective_operator,
    correlation_probability,
    discriminate_bell,
    rotation_permutation,
    sample_sum_zero,
    triplet_basis,
    triplet_relations,
)
from nucleport.spin import (
    SpinState,
    X_AXIS,
    Y_AXIS,
    Z_AXIS,
    apply,
    expectation,
    measure_projection,
    spin_component,
)

from helpers import BELL_VECS, random_unit_vector, rodrigues


class TestBellKets:
    def test_documented_amplitudes(self):
        assert np.allclose(bell_ket(BellOutcome.PSI_MINUS).amplitudes,
                           [0, 1 / np.sqrt(2), -1 / np.sqrt(2), 0], atol=1e-15)
        assert np.allclose(bell_ket(BellOutcome.PHI_PLUS).amplitudes,
                           [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)], atol=1e-15)

    def test_gram_matrix_is_identity(self):
        kets = [bell_ket(out).amplitudes for out in BellOutcome]
        gram = np.array([[np.vdot(u, v) for v in kets] for u in kets])
        assert np.abs(gram - np.eye(4)).max() < 1e-12

    def test_classical_codes(self):
        assert [out.code for out in BellOutcome] == ["00", "01", "10", "11"]
        assert BellOutcome.PHI_MINUS.label == "phi_minus"


class TestBellProjectors:
    def test_sum_to_unity(self):
        total = np.zeros((4, 4), dtype=complex)
        for out in BellOutcome:
            total += bell_projector(out).matrix
        assert np.abs(total - np.eye(4)).max() < 1e-12

    def test_idempotent_hermitian_rank_one(self):
        for out in BellOutcome:
            p = bell_projector(out)
            assert p.is_hermitian()
            assert np.abs((p @ p).matrix - p.matrix).max() < 1e-12
            assert np.linalg.matrix_rank(p.matrix) == 1

    def test_annihilates_orthogonal_states(self):
        p = bell_projector(BellOutcome.PSI_MINUS)
        _, norm = apply(p, bell_ket(BellOutcome.PSI_PLUS))
        assert norm < 1e-12


class TestCollectiveOperators:
    @pytest.mark.parametrize("which", ["Sx", "Sy", "Sz"])
    def test_total_spin_components_match_direct_sum(self, which):
        axis = {"Sx": X_AXIS, "Sy": Y_AXIS, "Sz": Z_AXIS}[which]
        direct = spin_component(axis, 0, 2) + spin_component(axis, 1, 2)
        assert np.abs(collective_operator(which).matrix - direct.matrix).max() < 1e-12

    def test_spin_difference_matches_direct_difference(self):
        direct = spin_component(Z_AXIS, 0, 2) - spin_component(Z_AXIS, 1, 2)
        assert np.abs(collective_operator("sz").matrix - direct.matrix).max() < 1e-12

    def test_transition_actions(self):
        sx = collective_operator("Sx")
        vec, norm = apply(sx, bell_ket(BellOutcome.PHI_PLUS))
        assert norm == pytest.approx(1.0, abs=1e-12)
        assert abs(np.vdot(bell_ket(BellOutcome.PSI_PLUS).amplitudes, vec)) == pytest.approx(1.0, abs=1e-12)

        sz_diff = collective_operator("sz")
        vec, norm = apply(sz_diff, bell_ket(BellOutcome.PSI_PLUS))
        assert norm == pytest.approx(1.0, abs=1e-12)
        assert abs(np.vdot(bell_ket(BellOutcome.PSI_MINUS).amplitudes, vec)) == pytest.approx(1.0, abs=1e-12)

        _, norm = apply(collective_operator("Sz"), bell_ket(BellOutcome.PSI_MINUS))
        assert norm < 1e-12

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            collective_operator("Sq")

    def test_casimir_on_triplet_and_singlet(self):
        s_sq = np.zeros((4, 4), dtype=complex)
        for which in ("Sx", "Sy", "Sz"):
            m = collective_operator(which).matrix
            s_sq += m @ m
        for out in TRIPLET_OUTCOMES:
            ket = bell_ket(out).amplitudes
            assert np.abs(s_sq @ ket - 2.0 * ket).max() < 1e-12
        singlet = bell_ket(BellOutcome.PSI_MINUS).amplitudes
        assert np.abs(s_sq @ singlet).max() < 1e-12


class TestTripletRelations:
    def test_identities_hold(self):
        report = triplet_relations()
        assert report.ok
        assert max(report.residuals.values()) < 1e-12

    def test_basis_eigenstructure(self):
        basis = triplet_basis()
        total_sz = spin_component(Z_AXIS, 0, 2) + spin_component(Z_AXIS, 1, 2)
        for state, m in ((basis.e1, 0.0), (basis.e2, 1.0), (basis.e3, -1.0)):
            assert expectation(state, total_sz) == pytest.approx(m, abs=1e-12)
            vec, _ = apply(total_sz, state)
            assert np.abs(vec - m * state.amplitudes).max() < 1e-12
        assert abs(basis.e2.overlap(basis.e3)) < 1e-12
        assert abs(basis.e1.overlap(basis.e2)) < 1e-12

    def test_e1_equals_psi_plus(self):
        basis = triplet_basis()
        assert basis.e1.overlap_modulus(bell_ket(BellOutcome.PSI_PLUS)) == pytest.approx(1.0, abs=1e-12)


class TestRotationPermutation:
    # triplet Bell states carry the Cartesian labels Phi- ~ x, Phi+ ~ y, Psi+ ~ z
    CARTESIAN = {BellOutcome.PHI_MINUS: 0, BellOutcome.PHI_PLUS: 1, BellOutcome.PSI_PLUS: 2}

    @pytest.mark.parametrize("axis_name,axis", [("x", X_AXIS), ("y", Y_AXIS), ("z", Z_AXIS)])
    def test_matches_three_vector_rotation(self, axis_name, axis):
        report = rotation_permutation(axis)
        rot3 = rodrigues(axis, np.pi / 2)
        label_of = {v: k for k, v in self.CARTESIAN.items()}
        for src in TRIPLET_OUTCOMES:
            e_src = np.zeros(3)
            e_src[self.CARTESIAN[src]] = 1.0
            image = rot3 @ e_src
            expected = label_of[int(np.argmax(np.abs(image)))]
            assert report.mapping[src] == expected
            assert report.overlaps[src] == pytest.approx(1.0, abs=1e-9)
        assert report.singlet_overlap == pytest.approx(1.0, abs=1e-12)

    def test_z_axis_examples(self):
        report = rotation_permutation("z")
        assert report.mapping[BellOutcome.PHI_PLUS] == BellOutcome.PHI_MINUS
        assert report.mapping[BellOutcome.PSI_PLUS] == BellOutcome.PSI_PLUS

    def test_rejects_other_angles_and_axes(self):
        with pytest.raises(ValueError):
            rotation_permutation("z", angle=np.pi / 3)
        with pytest.raises(ValueError):
            rotation_permutation(np.array([1.0, 1.0, 0.0]) / np.sqrt(2))


class TestCorrelationProbability:
    def test_singlet_anticorrelated_for_any_axis(self):
        rng = np.random.default_rng(21)
        singlet = SpinState(BELL_VECS["psi_minus"])
        for _ in range(100):
            axis = random_unit_vector(rng)
            assert correlation_probability(singlet, axis, axis) == pytest.approx(1.0, abs=1e-12)

    def test_psi_plus_tilt_follows_cosine_square(self):
        psi_plus = SpinState(BELL_VECS["psi_plus"])
        for theta in np.linspace(0.0, np.pi, 19):
            axis = np.array([np.sin(theta), 0.0, np.cos(theta)])
            assert correlation_probability(psi_plus, axis, axis) == pytest.approx(
                np.cos(theta) ** 2, abs=1e-12)

    def test_phi_plus_correlated_along_z(self):
        phi_plus = SpinState(BELL_VECS["phi_plus"])
        assert correlation_probability(phi_plus, Z_AXIS, Z_AXIS) == pytest.approx(0.0, abs=1e-12)

    def test_monte_carlo_consistency_with_measure_projection(self):
        # empirical frequency from sequential projective measurements
        rng = np.random.default_rng(22)
        state = SpinState(BELL_VECS["psi_plus"])
        theta = 0.9
        axis = np.array([np.sin(theta), 0.0, np.cos(theta)])
        n = 100_000
        hits = 0
        for _ in range(n):
            first = measure_projection(state, 0, axis, rng)
            second = measure_projection(first.collapsed, 1, axis, rng)
            hits += first.value + second.value == 0.0
        p = correlation_probability(state, axis, axis)
        assert abs(hits / n - p) <= 4.0 * np.sqrt(p * (1 - p) / n)

    def test_vectorized_sampler_agrees_with_sequential_law(self):
        rng = np.random.default_rng(23)
        state = SpinState(np.array([0.5, 0.5j, -0.5, 0.5]))
        axis1 = random_unit_vector(rng)
        axis2 = random_unit_vector(rng)
        n = 50_000
        hits = sample_sum_zero(state, axis1, axis2, n, rng)
        p = correlation_probability(state, axis1, axis2)
        assert abs(hits / n - p) <= 4.0 * np.sqrt(p * (1 - p) / n)


class TestDiscrimination:
    def source(self, outcome, copies):
        return itertools.repeat(bell_ket(outcome), copies)

    def test_many_copies_identify_every_state(self):
        rng = np.random.default_rng(24)
        for out in BellOutcome:
            result = discriminate_bell(self.source(out, 1000), 1000, rng)
            assert result.estimate == out
            assert result.confidence == pytest.approx(1.0 - 2.0 ** -500)

    def test_single_copy_narrows_to_pair(self):
        rng = np.random.default_rng(25)
        result = discriminate_bell(self.source(BellOutcome.PSI_MINUS, 1), 1, rng)
        assert result.estimate in (BellOutcome.PSI_MINUS, BellOutcome.PSI_PLUS)
        assert result.confidence == pytest.approx(0.5)

    def test_sixty_four_copy_sweep_has_no_errors(self):
        rng = np.random.default_rng(26)
        for out in BellOutcome:
            for _ in range(100):
                result = discriminate_bell(self.source(out, 64), 64, rng)
                assert result.estimate == out
                assert result.confidence == pytest.approx(1.0 - 2.0 ** -32)

    def test_empty_source_rejected(self):
        rng = np.random.default_rng(27)
        with pytest.raises(ValueError):
            discriminate_bell(iter(()), 5, rng)
        with pytest.raises(ValueError):
            discriminate_bell(self.source(BellOutcome.PSI_PLUS, 4), 0, rng)

    def test_result_type(self):
        rng = np.random.default_rng(28)
        result = discriminate_bell(self.source(BellOutcome.PHI_MINUS, 8), 8, rng)
        assert isinstance(result, DiscriminationResult)
