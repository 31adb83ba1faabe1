import numpy as np
import pytest

from speceig.errors import InvalidModelError, OracleCapacityError
from speceig.pauli import (
    KitaevParams,
    PauliHamiltonian,
    PauliString,
    chi_element,
    commutator_norm,
    embed,
    exact_spectrum,
    kitaev_chain,
    landau_zener,
    parity_diagonal,
    sector_ground_energies,
    to_dense,
    transition_energies,
    x_in_eigenbasis,
)

# closed-form values evaluated at 30 digits with mpmath
LZ_LEVEL = 1.0816653826391968
LZ_GAP = 2.1633307652783936
KITAEV_B_MINUS = -2.0825424421026655
KITAEV_B_PLUS = 2.4825424421026655
KITAEV_01 = 0.017457557897334608

FIG3A = dict(L=2, x=1.5, y=0.4, z=0.2, m=1.0)


def fig3a_chain():
    return kitaev_chain(KitaevParams.from_couplings(**FIG3A))


class TestPauliString:
    def test_identity_is_representable(self):
        ps = PauliString.identity(3)
        assert ps.ops == "III" and ps.n == 3 and ps.support == ()
        np.testing.assert_array_equal(to_dense(PauliHamiltonian(3, ((1.0, ps),))), np.eye(8))

    def test_rejects_bad_letters(self):
        with pytest.raises(InvalidModelError):
            PauliString("XQ")
        with pytest.raises(InvalidModelError):
            PauliString("")

    def test_lowercase_is_normalized(self):
        assert PauliString("xyz").ops == "XYZ"

    def test_sparse_construction(self):
        assert PauliString.from_sparse(4, {1: "X", 3: "Z"}).ops == "XIZI"
        with pytest.raises(InvalidModelError):
            PauliString.from_sparse(2, {3: "X"})

    def test_masks(self):
        # character k sits on bit k + offset
        assert PauliString("XYZ").masks(offset=0) == (0b011, 0b110, 1)
        assert PauliString("XYZ").masks(offset=1) == (0b0110, 0b1100, 1)


class TestHamiltonian:
    def test_duplicate_strings_merge(self):
        h = PauliHamiltonian.from_terms(2, [(1.0, "XX"), (0.5, "XX"), (2.0, "ZI")])
        assert len(h) == 2
        assert h.coefficient("XX") == 1.5

    def test_cancelling_terms_vanish(self):
        h = PauliHamiltonian.from_terms(1, [(1.0, "Z"), (-1.0, "Z")])
        assert len(h) == 0

    def test_complex_coefficient_rejected(self):
        with pytest.raises(InvalidModelError):
            PauliHamiltonian.from_terms(1, [(1j, "Z")])

    def test_width_mismatch_rejected(self):
        with pytest.raises(InvalidModelError):
            PauliHamiltonian.from_terms(2, [(1.0, "Z")])


class TestLandauZener:
    def test_zero(self):
        h = landau_zener(0, 0)
        assert len(h) == 0
        np.testing.assert_array_equal(exact_spectrum(h).energies, [0.0, 0.0])

    def test_levels(self):
        np.testing.assert_allclose(exact_spectrum(landau_zener(0.6, 0.9)).energies, [-LZ_LEVEL, LZ_LEVEL], atol=1e-12)

    def test_pure_z(self):
        np.testing.assert_allclose(exact_spectrum(landau_zener(1, 0)).energies, [-1, 1])

    def test_dense_form(self):
        expected = np.array([[0.6, -0.9j], [0.9j, -0.6]])
        np.testing.assert_allclose(to_dense(landau_zener(0.6, 0.9)), expected, atol=1e-15)


class TestKitaev:
    def test_two_site_terms(self):
        h = fig3a_chain()
        got = {p.ops: c for c, p in h.terms}
        assert got == pytest.approx({"XX": 1.5, "YY": 0.4, "ZZ": 0.2, "ZI": -1.0, "IZ": -1.0})

    def test_three_site_mbar_on_middle_only(self):
        h = kitaev_chain(KitaevParams.from_couplings(3, 1.0, 0.5, 0.3, 0.7))
        assert h.coefficient("IZI") == pytest.approx(-0.7 - 0.3)
        assert h.coefficient("ZII") == pytest.approx(-0.7)
        assert h.coefficient("IIZ") == pytest.approx(-0.7)

    def test_zero_couplings(self):
        assert len(kitaev_chain(KitaevParams.from_couplings(2, 0, 0, 0, 0))) == 0

    def test_short_chain_rejected(self):
        with pytest.raises(InvalidModelError):
            KitaevParams(1, 0, 0, 0, 0)

    def test_parameter_map(self):
        p = KitaevParams(4, mu=0.3, g=1.1, delta=-0.2, V=0.8)
        assert 2 * p.x == pytest.approx(p.g + p.delta, abs=1e-15)
        assert 2 * p.y == pytest.approx(p.g - p.delta, abs=1e-15)
        assert 4 * p.z == pytest.approx(p.V, abs=1e-15)
        assert 4 * p.m == pytest.approx(2 * p.mu + p.V, abs=1e-15)
        assert 4 * p.mbar == pytest.approx(p.V, abs=1e-15)

    def test_mbar_override(self):
        p = KitaevParams.from_couplings(3, 1.0, 0.5, 0.3, 0.7, mbar=0.0)
        assert p.mbar == 0.0 and p.z == pytest.approx(0.3)

    def test_two_site_spectrum(self):
        s = exact_spectrum(fig3a_chain())
        np.testing.assert_allclose(s.energies, [-2.1, KITAEV_B_MINUS, 1.7, KITAEV_B_PLUS], atol=1e-12)
        np.testing.assert_array_equal(s.parities, [-1, 1, -1, 1])

    def test_chi_diagonal_vanishes(self):
        s = exact_spectrum(fig3a_chain())
        chi = x_in_eigenbasis(s, 1)
        np.testing.assert_allclose(np.diag(chi), 0, atol=1e-10)


class TestDense:
    def test_identity_scaled(self):
        h = PauliHamiltonian.from_terms(1, [(2.0, "I")])
        np.testing.assert_array_equal(to_dense(h), 2 * np.eye(2))

    def test_z(self):
        np.testing.assert_array_equal(to_dense(PauliHamiltonian.from_terms(1, [(1.0, "Z")])), np.diag([1, -1]))

    def test_capacity(self):
        with pytest.raises(OracleCapacityError):
            to_dense(PauliHamiltonian.from_terms(15, [(1.0, "Z" * 15)]))

    def test_qubit_one_is_lowest_bit(self):
        m = to_dense(PauliHamiltonian.from_terms(2, [(1.0, "ZI")]))
        np.testing.assert_array_equal(np.diag(m).real, [1, -1, 1, -1])

    def test_embed(self):
        h = embed(landau_zener(0.6, 0.9), 3, offset=1)
        assert h.coefficient("IZI") == 0.6 and h.coefficient("IYI") == 0.9

    def test_parity_diagonal(self):
        np.testing.assert_array_equal(parity_diagonal(2), [1, -1, -1, 1])


class TestSpectrum:
    def test_zero_hamiltonian(self):
        s = exact_spectrum(PauliHamiltonian.from_terms(2, []))
        np.testing.assert_array_equal(s.energies, np.zeros(4))

    def test_degenerate_tie_break_is_deterministic(self):
        # all four levels degenerate: parity +1 first, then by basis index
        s = exact_spectrum(PauliHamiltonian.from_terms(2, []))
        np.testing.assert_array_equal(s.parities, [1, 1, -1, -1])
        np.testing.assert_array_equal(np.argmax(np.abs(s.states), axis=0), [0, 3, 1, 2])

    def test_accepts_matrix(self):
        s = exact_spectrum(to_dense(landau_zener(0.6, 0.9)))
        assert s.n == 1 and s.parities is None

    def test_transitions(self):
        tr = {t.label: t.energy for t in transition_energies(exact_spectrum(landau_zener(0.6, 0.9)))}
        assert tr["[0,1]"] == pytest.approx(LZ_GAP, abs=1e-12)
        assert tr["[1,0]"] == pytest.approx(-LZ_GAP, abs=1e-12)
        assert tr["[0,0]"] == 0.0 and tr["[1,1]"] == 0.0

    def test_kitaev_01_transition(self):
        tr = {t.label: t.energy for t in transition_energies(exact_spectrum(fig3a_chain()))}
        assert tr["[0,1]"] == pytest.approx(KITAEV_01, abs=1e-12)


class TestChi:
    def test_pure_z(self):
        s = exact_spectrum(PauliHamiltonian.from_terms(1, [(1.0, "Z")]))
        assert abs(chi_element(s, 0, 1, 1)) == pytest.approx(1.0)
        assert chi_element(s, 0, 0, 1) == 0

    def test_matches_matrix(self):
        s = exact_spectrum(fig3a_chain())
        chi = x_in_eigenbasis(s, 2)
        for m in range(4):
            for n in range(4):
                assert chi_element(s, m, n, 2) == pytest.approx(chi[m, n], abs=1e-14)

    def test_landau_zener_x_diagonal(self):
        # eigenvectors of aZ + bY lie in the Y-Z plane, so <X> vanishes on them
        s = exact_spectrum(landau_zener(0.6, 0.9))
        np.testing.assert_allclose(np.diag(x_in_eigenbasis(s, 1)), 0, atol=1e-12)

    def test_x_field_has_diagonal(self):
        s = exact_spectrum(PauliHamiltonian.from_terms(1, [(0.6, "Z"), (0.9, "X")]))
        assert np.max(np.abs(np.diag(x_in_eigenbasis(s, 1)))) > 0.1

    def test_bad_qubit(self):
        with pytest.raises(InvalidModelError):
            x_in_eigenbasis(exact_spectrum(landau_zener(1, 0)), 2)


def test_parity_sector_ground_energies():
    even, odd = sector_ground_energies(fig3a_chain())
    assert even == pytest.approx(KITAEV_B_MINUS, abs=1e-12)
    assert odd == pytest.approx(-2.1, abs=1e-12)


def test_kitaev_commutes_with_parity():
    h = to_dense(kitaev_chain(KitaevParams.from_couplings(4, 1.5, 0.7, 0.4, 0.3)))
    assert commutator_norm(h, np.diag(parity_diagonal(4))) < 1e-12
