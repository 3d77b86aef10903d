"""Codebooks, quantization, and surface coefficient matrices."""

import numpy as np
import pytest

from iosim import (
    DualPolIosState,
    PowerDomainIosState,
    codebook,
    coefficient_matrix,
    power_domain_matrices,
    quantize_phase,
)


class TestCodebook:
    def test_one_bit(self):
        np.testing.assert_allclose(codebook(1).values, [0.0, np.pi])

    def test_two_bits(self):
        np.testing.assert_allclose(codebook(2).values,
                                   [0, np.pi / 2, np.pi, 3 * np.pi / 2])

    def test_three_bits_spacing(self):
        cb = codebook(3)
        assert cb.size == 8
        np.testing.assert_allclose(np.diff(cb.values), np.pi / 4)
        assert np.all(cb.values >= 0) and np.all(cb.values < 2 * np.pi)

    def test_rejects_nonpositive_bits(self):
        with pytest.raises(ValueError):
            codebook(0)


class TestQuantizePhase:
    def test_nearest_of_two(self):
        assert quantize_phase(0.1, codebook(1)) == 0.0
        assert quantize_phase(np.pi / 4, codebook(1)) == 0.0

    def test_midpoint_tie_takes_lower_index(self):
        assert quantize_phase(np.pi / 2, codebook(1)) == 0.0
        assert quantize_phase(np.pi / 4, codebook(2)) == 0.0

    def test_circular_wrap(self):
        assert quantize_phase(2 * np.pi - 0.01, codebook(2)) == 0.0
        assert quantize_phase(-0.01, codebook(2)) == 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            quantize_phase(np.inf, codebook(2))


class TestCoefficientMatrix:
    def test_identity_state(self):
        state = DualPolIosState(psi_vv=np.zeros(3), psi_hh=np.zeros(3),
                                amp_vv=np.ones(3), amp_hh=np.ones(3))
        np.testing.assert_array_equal(coefficient_matrix(state), np.eye(6))

    def test_opposite_half_signs(self):
        state = DualPolIosState(psi_vv=np.full(2, np.pi), psi_hh=np.zeros(2),
                                amp_vv=np.ones(2), amp_hh=np.ones(2))
        diag = np.diagonal(coefficient_matrix(state))
        np.testing.assert_allclose(diag[:2], -1.0, atol=1e-15)
        np.testing.assert_allclose(diag[2:], 1.0)

    def test_mixed_state_matches_entrywise(self):
        rng = np.random.default_rng(4)
        psi_vv, psi_hh = rng.uniform(0, 2 * np.pi, (2, 5))
        amp_vv, amp_hh = rng.uniform(0, 1, (2, 5))
        state = DualPolIosState(psi_vv, psi_hh, amp_vv, amp_hh)
        g = coefficient_matrix(state)
        expected = np.concatenate([amp_vv * np.exp(1j * psi_vv),
                                   amp_hh * np.exp(1j * psi_hh)])
        np.testing.assert_allclose(np.diagonal(g), expected, atol=1e-15)
        assert np.count_nonzero(g - np.diag(np.diagonal(g))) == 0

    def test_blocks_independent(self):
        rng = np.random.default_rng(7)
        amp = rng.uniform(0.2, 1.0, 4)
        a = DualPolIosState(np.zeros(4), rng.uniform(0, 2 * np.pi, 4),
                            amp, amp)
        b = DualPolIosState(np.full(4, np.pi / 2), a.psi_hh, amp, amp)
        ga, gb = coefficient_matrix(a), coefficient_matrix(b)
        assert np.array_equal(np.diagonal(ga)[4:], np.diagonal(gb)[4:])
        assert not np.array_equal(np.diagonal(ga)[:4], np.diagonal(gb)[:4])

    def test_pure_function_of_state(self):
        state = DualPolIosState(np.ones(3), np.ones(3), np.full(3, 0.5),
                                np.full(3, 0.5))
        assert np.array_equal(coefficient_matrix(state),
                              coefficient_matrix(state))


class TestPowerDomain:
    def test_equal_split(self):
        state = PowerDomainIosState(epsilon=1.0, psi_r=np.zeros(3),
                                    psi_t=np.zeros(3), amp=np.ones(3))
        r, t = power_domain_matrices(state)
        np.testing.assert_allclose(np.abs(np.diagonal(r)), 1 / np.sqrt(2))
        np.testing.assert_allclose(np.abs(np.diagonal(t)), 1 / np.sqrt(2))

    def test_three_to_one_split(self):
        state = PowerDomainIosState(epsilon=3.0, psi_r=np.zeros(2),
                                    psi_t=np.zeros(2), amp=np.ones(2))
        r, t = power_domain_matrices(state)
        np.testing.assert_allclose(np.abs(np.diagonal(r)),
                                   0.8660254037844386, rtol=1e-12)
        np.testing.assert_allclose(np.abs(np.diagonal(t)), 0.5, rtol=1e-12)

    def test_large_epsilon_limit(self):
        state = PowerDomainIosState(epsilon=1e9, psi_r=np.zeros(2),
                                    psi_t=np.zeros(2), amp=np.ones(2))
        assert np.all(np.abs(state.reflect_amplitude - 1.0) < 1e-9)
        assert np.all(state.refract_amplitude < 1e-4)

    @pytest.mark.parametrize("epsilon", [0.01, 0.5, 1.0, 3.0, 42.0, 1e6])
    def test_energy_conservation(self, epsilon):
        rng = np.random.default_rng(2)
        amp = rng.uniform(0.1, 1.0, 6)
        state = PowerDomainIosState(epsilon=epsilon,
                                    psi_r=rng.uniform(0, 2 * np.pi, 6),
                                    psi_t=rng.uniform(0, 2 * np.pi, 6),
                                    amp=amp)
        r, t = power_domain_matrices(state)
        total = np.abs(np.diagonal(r)) ** 2 + np.abs(np.diagonal(t)) ** 2
        np.testing.assert_allclose(total, amp ** 2, rtol=0, atol=1e-15)

    def test_rejects_nonpositive_epsilon(self):
        with pytest.raises(ValueError):
            PowerDomainIosState(epsilon=0.0, psi_r=np.zeros(1),
                                psi_t=np.zeros(1), amp=np.ones(1))
