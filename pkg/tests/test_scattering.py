import numpy as np
import pytest

from nucleport.bell import BellOutcome, bell_ket, collective_operator
from nucleport.scattering import (
    AmplitudeTable,
    BellCoefficients,
    InvariantAmplitudes,
    ScatterFrame,
    bell_coefficients,
    bell_form,
    load_amplitude_table,
    ninety_degree_operator,
    registration_condition,
    scatter_filter,
    scattering_operator,
)
from nucleport.spin import SpinState, rotation

from helpers import (
    BELL_VECS,
    random_state_vector,
    random_unit_vector,
    rodrigues,
    symmetric_amplitude_rows,
)


def random_amplitudes(rng) -> InvariantAmplitudes:
    vals = rng.normal(size=6) + 1j * rng.normal(size=6)
    return InvariantAmplitudes(*vals)


class TestFrames:
    def test_canonical_frame(self):
        frame = ScatterFrame.canonical()
        assert np.allclose(np.cross(frame.lam, frame.mu), frame.nu, atol=1e-15)

    def test_rejects_non_orthogonal(self):
        with pytest.raises(ValueError):
            ScatterFrame(lam=np.array([1.0, 0, 0]),
                         mu=np.array([1.0, 0, 0]),
                         nu=np.array([0.0, 0, 1.0]))

    def test_rejects_left_handed(self):
        with pytest.raises(ValueError):
            ScatterFrame(lam=np.array([1.0, 0, 0]),
                         mu=np.array([0.0, 1.0, 0]),
                         nu=np.array([0.0, 0, -1.0]))


class TestInvariantForm:
    def test_scalar_term_only_gives_identity(self):
        op = scattering_operator(InvariantAmplitudes(1, 0, 0, 0, 0, 0), ScatterFrame.canonical())
        assert np.abs(op.matrix - np.eye(4)).max() < 1e-12

    def test_equal_pair_couplings_give_singlet_triplet_split(self):
        # B = C = D = 2 doubles S1.S2: eigenvalue -3/2 on the singlet, +1/2 on the triplet
        op = scattering_operator(InvariantAmplitudes(0, 2, 2, 2, 0, 0), ScatterFrame.canonical())
        singlet = BELL_VECS["psi_minus"]
        assert np.abs(op.matrix @ singlet - (-1.5) * singlet).max() < 1e-12
        for name in ("psi_plus", "phi_minus", "phi_plus"):
            ket = BELL_VECS[name]
            assert np.abs(op.matrix @ ket - 0.5 * ket).max() < 1e-12

    def test_e_term_is_total_sz(self):
        op = scattering_operator(InvariantAmplitudes(0, 0, 0, 0, 1, 0), ScatterFrame.canonical())
        assert np.abs(op.matrix - collective_operator("Sz").matrix).max() < 1e-12


class TestBellCoefficients:
    def test_scalar_only(self):
        c = bell_coefficients(InvariantAmplitudes(1, 0, 0, 0, 0, 0))
        assert (c.a, c.b, c.c, c.d) == (1, 1, 1, 1)

    def test_equal_pair_couplings(self):
        c = bell_coefficients(InvariantAmplitudes(0, 2, 2, 2, 0, 0))
        assert (c.a, c.b, c.c, c.d) == (-1.5, 0.5, 0.5, 0.5)

    def test_single_b_coupling(self):
        c = bell_coefficients(InvariantAmplitudes(0, 2, 0, 0, 0, 0))
        assert (c.a, c.b, c.c, c.d) == (-0.5, 0.5, -0.5, 0.5)


class TestFormEquivalence:
    def test_thousand_random_amplitude_sets(self):
        rng = np.random.default_rng(31)
        frame = ScatterFrame.canonical()
        worst = 0.0
        for _ in range(1000):
            amps = random_amplitudes(rng)
            diff = scattering_operator(amps, frame).matrix - bell_form(bell_coefficients(amps)).matrix
            worst = max(worst, float(np.abs(diff).max()))
        assert worst < 1e-12

    def test_unit_coefficients_give_identity(self):
        op = bell_form(BellCoefficients(1, 1, 1, 1, 0, 0))
        assert np.abs(op.matrix - np.eye(4)).max() < 1e-12

    def test_single_projector(self):
        op = bell_form(BellCoefficients(1, 0, 0, 0, 0, 0))
        singlet = BELL_VECS["psi_minus"]
        assert np.abs(op.matrix - np.outer(singlet, singlet.conj())).max() < 1e-12

    def test_spectral_property_without_transition_terms(self):
        rng = np.random.default_rng(32)
        for _ in range(50):
            vals = rng.normal(size=4) + 1j * rng.normal(size=4)
            coeffs = BellCoefficients(*vals, E=0.0, F=0.0)
            mat = bell_form(coeffs).matrix
            for out, eig in zip(BellOutcome, vals):
                ket = bell_ket(out).amplitudes
                assert np.abs(mat @ ket - eig * ket).max() < 1e-12

    def test_frame_covariance(self):
        # rotating the frame equals conjugating by the two-particle rotation
        rng = np.random.default_rng(33)
        canonical = ScatterFrame.canonical()
        for _ in range(20):
            axis = random_unit_vector(rng)
            angle = rng.uniform(-np.pi, np.pi)
            rot3 = rodrigues(axis, angle)
            rotated = ScatterFrame(lam=rot3 @ canonical.lam,
                                   mu=rot3 @ canonical.mu,
                                   nu=rot3 @ canonical.nu)
            amps = random_amplitudes(rng)
            u = rotation(axis, angle).matrix
            u2 = np.kron(u, u)
            lhs = u2.conj().T @ scattering_operator(amps, rotated).matrix @ u2
            rhs = scattering_operator(amps, canonical).matrix
            assert np.abs(lhs - rhs).max() < 1e-9


class TestRegistrationCondition:
    def test_pure_singlet_coefficient(self):
        coeffs = BellCoefficients(0.8, 0, 0, 0, 0, 0)
        assert registration_condition(coeffs, BellOutcome.PSI_MINUS, 1e-6)

    def test_identity_coefficients_fail(self):
        coeffs = BellCoefficients(1, 1, 1, 1, 0, 0)
        for out in BellOutcome:
            assert not registration_condition(coeffs, out, 1e-6)

    def test_nonzero_transition_term_fails(self):
        coeffs = BellCoefficients(1, 0, 0, 0, 0.1, 0)
        assert not registration_condition(coeffs, BellOutcome.PSI_MINUS, 1e-6)

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            registration_condition(BellCoefficients(1, 0, 0, 0, 0, 0), BellOutcome.PSI_MINUS, 0.0)


class TestNinetyDegreeOperator:
    def test_e_zero_is_scaled_singlet_projector(self):
        op = ninety_degree_operator(0.7, 0.0)
        singlet = BELL_VECS["psi_minus"]
        assert np.abs(op.matrix - 0.7 * np.outer(singlet, singlet.conj())).max() < 1e-14

    def test_transition_term_swaps_phi_states(self):
        op = ninety_degree_operator(0.0, 1.0)
        out = op.matrix @ BELL_VECS["phi_plus"]
        assert np.abs(out - BELL_VECS["phi_minus"]).max() < 1e-14

    def test_matches_bell_form_with_bcd_zero(self):
        coeffs = BellCoefficients(0.3 + 0.2j, 0, 0, 0, E=0.1 - 0.4j, F=0)
        assert np.abs(ninety_degree_operator(coeffs.a, coeffs.E).matrix
                      - bell_form(coeffs).matrix).max() < 1e-14


class TestAmplitudeTables:
    def make_table(self, **kwargs):
        theta, rows = symmetric_amplitude_rows()
        return AmplitudeTable(theta=theta, values=rows, **kwargs)

    def test_roundtrip_of_bell_side_construction(self):
        table = self.make_table()
        derived = table.bell_coefficient_rows()
        # knot 0 was built from a, b, c, d directly; re-derive and compare
        th = table.theta[0]
        assert abs(derived[0, 0] - (1.0 + 0.5 * np.cos(2 * th) + 0.15j * np.cos(4 * th))) < 1e-12
        assert abs(derived[0, 1] - (0.3 * np.cos(th) + 0.05j * np.cos(3 * th))) < 1e-12

    def test_symmetry_report_passes_for_symmetric_table(self):
        table = self.make_table(identical_nucleons=True)
        report = table.symmetry_report()
        assert all(check.passed for check in report)
        assert {check.name for check in report} == {
            "F_zero", "a_symmetric", "b_antisymmetric", "c_antisymmetric",
            "d_antisymmetric", "E_symmetric"}

    def test_nonzero_f_rejected_when_flagged(self):
        theta, rows = symmetric_amplitude_rows()
        rows = rows.copy()
        rows[:, 5] = 0.01
        with pytest.raises(ValueError, match="F_zero"):
            AmplitudeTable(theta=theta, values=rows, identical_nucleons=True)

    def test_broken_antisymmetry_rejected_when_flagged(self):
        theta, rows = symmetric_amplitude_rows()
        rows = rows.copy()
        # shift only the derived b at knot 0: delta_b = dB/2 + dC/2 + da, with
        # da = dA - (dB+dC+dD)/4 kept zero and dc = dd = 0
        rows[0, 0] += 0.0125
        rows[0, 1] += 0.05
        rows[0, 2] += 0.05
        rows[0, 3] -= 0.05
        with pytest.raises(ValueError, match="b_antisymmetric"):
            AmplitudeTable(theta=theta, values=rows, identical_nucleons=True)

    def test_unflagged_table_accepts_asymmetry(self):
        theta, rows = symmetric_amplitude_rows()
        rows = rows.copy()
        rows[0, 5] = 0.3
        AmplitudeTable(theta=theta, values=rows)   # no error

    def test_midangle_coefficients_vanish(self):
        table = self.make_table(identical_nucleons=True)
        coeffs = bell_coefficients(table.at(np.pi / 2))
        assert max(abs(coeffs.b), abs(coeffs.c), abs(coeffs.d)) < 1e-9

    def test_midangle_operator_form(self):
        table = self.make_table(identical_nucleons=True)
        coeffs = bell_coefficients(table.at(np.pi / 2))
        full = bell_form(coeffs).matrix
        reduced = ninety_degree_operator(coeffs.a, coeffs.E).matrix
        assert np.abs(full - reduced).max() < 1e-9

    def test_interpolation_between_knots(self):
        table = self.make_table()
        th = 0.5 * (table.theta[2] + table.theta[3])
        mid = table.at(th)
        expected = 0.5 * (table.values[2, 0] + table.values[3, 0])
        assert abs(mid.A - expected) < 1e-12

    def test_out_of_range_rejected(self):
        table = self.make_table()
        with pytest.raises(ValueError):
            table.at(0.05)


class TestTableLoading:
    HEADER = ("theta_rad A_re A_im B_re B_im C_re C_im "
              "D_re D_im E_re E_im F_re F_im")

    def write(self, tmp_path, text):
        path = tmp_path / "amps.txt"
        path.write_text(text, encoding="utf-8")
        return path

    def test_roundtrip(self, tmp_path):
        theta, rows = symmetric_amplitude_rows()
        lines = [self.HEADER]
        for th, row in zip(theta, rows):
            fields = [f"{th:.17g}"]
            for z in row:
                fields.extend((f"{z.real:.17g}", f"{z.imag:.17g}"))
            lines.append(" ".join(fields))
        path = self.write(tmp_path, "\n".join(lines) + "\n")
        table = load_amplitude_table(path, identical_nucleons=True)
        assert np.abs(table.values - rows).max() < 1e-15

    def test_malformed_row_reports_line_number(self, tmp_path):
        path = self.write(tmp_path, self.HEADER + "\n0.5 1 0 0 0 0 0 0 0 0 0 0 0\n0.7 oops\n")
        with pytest.raises(ValueError, match=":3:"):
            load_amplitude_table(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = self.write(tmp_path, "theta a b\n0.5 1 0\n")
        with pytest.raises(ValueError, match="header"):
            load_amplitude_table(path)


class TestScatterFilter:
    def test_pure_projector_filter(self):
        rng = np.random.default_rng(34)
        state = SpinState(random_state_vector(rng, 2))
        from nucleport.bell import bell_projector

        result = scatter_filter(state, bell_projector(BellOutcome.PSI_MINUS), rng)
        assert result is not None
        assert result.outcome == BellOutcome.PSI_MINUS
        assert result.probability == pytest.approx(1.0, abs=1e-12)
        assert result.post_state.overlap_modulus(bell_ket(BellOutcome.PSI_MINUS)) == pytest.approx(1.0, abs=1e-12)

    def test_identity_filter_keeps_bell_state(self):
        rng = np.random.default_rng(35)
        from nucleport.spin import identity

        result = scatter_filter(bell_ket(BellOutcome.PHI_PLUS), identity(2), rng)
        assert result.outcome == BellOutcome.PHI_PLUS
        assert result.probability == pytest.approx(1.0, abs=1e-12)

    def test_transition_filter_maps_phi_plus_to_phi_minus(self):
        rng = np.random.default_rng(36)
        op = ninety_degree_operator(1.0, 1.0)
        result = scatter_filter(bell_ket(BellOutcome.PHI_PLUS), op, rng)
        assert result.outcome == BellOutcome.PHI_MINUS
        assert result.probability == pytest.approx(1.0, abs=1e-12)

    def test_annihilated_input_reports_no_event(self):
        rng = np.random.default_rng(37)
        from nucleport.bell import bell_projector

        result = scatter_filter(bell_ket(BellOutcome.PHI_PLUS),
                                bell_projector(BellOutcome.PSI_MINUS), rng)
        assert result is None

    def test_outcome_frequencies_match_filtered_weights(self):
        # one million samples against |P_beta f psi|^2 / |f psi|^2, four sigma
        rng = np.random.default_rng(38)
        state = SpinState(random_state_vector(rng, 2))
        amps = random_amplitudes(rng)
        op = scattering_operator(amps, ScatterFrame.canonical())
        scattered = op.matrix @ state.amplitudes
        total = float(np.vdot(scattered, scattered).real)
        expected = np.array([abs(np.vdot(BELL_VECS[out.label], scattered)) ** 2
                             for out in BellOutcome]) / total
        n = 1_000_000
        counts = np.zeros(4, dtype=int)
        for _ in range(n):
            counts[scatter_filter(state, op, rng).outcome.value] += 1
        for k in range(4):
            sigma = np.sqrt(expected[k] * (1 - expected[k]) / n)
            assert abs(counts[k] / n - expected[k]) <= 4.0 * sigma


class TestInvariantAmplitudeValidation:
    def test_identical_nucleons_force_f_zero(self):
        with pytest.raises(ValueError):
            InvariantAmplitudes(1, 0, 0, 0, 0, 0.5, identical_nucleons=True)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            InvariantAmplitudes(np.nan, 0, 0, 0, 0, 0)
