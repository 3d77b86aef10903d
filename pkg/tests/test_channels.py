"""Geometry, element amplitudes, and channel synthesis statistics."""

import numpy as np
import pytest

from iosim import (
    ChannelSet,
    ConfigError,
    ElementGainModel,
    GeometryLayout,
    ScenarioConfig,
    build_geometry,
    element_amplitude,
    empirical_xpd,
    synthesize_channels,
)


def make_config(**over):
    base = dict(n_t=4, m_elems=4, k_r=2, k_t=2, seed=3)
    base.update(over)
    return ScenarioConfig(**base)


class TestBuildGeometry:
    def test_symmetric_split_two_per_side(self):
        geom = build_geometry(make_config(k_r=2, k_t=2,
                                          layout=GeometryLayout(symmetric=True)))
        offsets = [geom.signed_offset(p) for p in geom.user_positions]
        assert sum(o > 0 for o in offsets) == 2
        assert sum(o < 0 for o in offsets) == 2
        # mirror positions: same (x, |y|, z) sets on both sides
        pos = geom.user_positions
        mirrored = pos[2:].copy()
        mirrored[:, 1] *= -1
        np.testing.assert_allclose(np.sort(pos[:2], axis=0),
                                   np.sort(mirrored, axis=0), atol=1e-12)

    def test_all_users_on_reflect_side(self):
        geom = build_geometry(make_config(k_r=4, k_t=0))
        assert all(s == "reflect" for s in geom.side_label)
        assert all(geom.signed_offset(p) > 0 for p in geom.user_positions)

    def test_default_config_passes_invariants(self):
        geom = build_geometry(make_config())
        geom.validate()
        assert geom.n_elements == 4
        assert geom.n_users == 4

    def test_rejects_odd_user_total(self):
        with pytest.raises(ConfigError):
            build_geometry(make_config(k_r=2, k_t=1))


class TestElementAmplitude:
    def setup_method(self):
        self.geom = build_geometry(make_config())

    def test_isotropic_unit_gain_is_one(self):
        gain = ElementGainModel(power_gain=1.0, area=1.0, pattern_exponent=0.0)
        for rx in ([10.0, 7.0, 2.0], [40.0, -3.0, 1.0]):
            amp = element_amplitude(self.geom, gain, 0, [0, 6, 5], rx)
            assert amp == pytest.approx(1.0)

    def test_boresight_gives_sqrt_gs(self):
        gain = ElementGainModel(power_gain=0.5, area=0.9, pattern_exponent=3.0)
        pos = self.geom.element_positions[1]
        tx = pos + np.array([0.0, 10.0, 0.0])
        rx = pos + np.array([0.0, 4.0, 0.0])
        amp = element_amplitude(self.geom, gain, 1, tx, rx)
        assert amp == pytest.approx(np.sqrt(0.5 * 0.9), rel=1e-12)

    def test_oblique_incidence_cos_cubed(self):
        # 60 degrees off the normal in, boresight out: sqrt(cos^3(60 deg))
        gain = ElementGainModel(power_gain=1.0, area=1.0, pattern_exponent=3.0)
        pos = self.geom.element_positions[0]
        tx = pos + np.array([np.sin(np.pi / 3), np.cos(np.pi / 3), 0.0]) * 7.0
        rx = pos + np.array([0.0, 5.0, 0.0])
        amp = element_amplitude(self.geom, gain, 0, tx, rx)
        assert amp == pytest.approx(0.35355339059327373, abs=1e-9)

    def test_zero_behind_half_space_with_directional_pattern(self):
        gain = ElementGainModel(pattern_exponent=3.0)
        pos = self.geom.element_positions[0]
        tx = pos + np.array([0.0, 10.0, 0.0])
        behind = pos + np.array([0.0, -4.0, 0.0])
        assert element_amplitude(self.geom, gain, 0, tx, behind,
                                 mode="reflect") == 0.0

    def test_amplitudes_bounded(self):
        rng = np.random.default_rng(0)
        gain = ElementGainModel(power_gain=3.0, area=2.0, pattern_exponent=2.0)
        for _ in range(200):
            rx = rng.uniform(-50, 50, size=3)
            amp = element_amplitude(self.geom, gain, 0, [0, 6, 5], rx)
            assert 0.0 <= amp <= 1.0


class TestSynthesizeChannels:
    def test_zero_leakage_zeroes_cross_blocks(self):
        cfg = make_config(beta_bi=0.0)
        geom = build_geometry(cfg)
        ch = synthesize_channels(cfg, geom, np.random.default_rng(0))
        m, n_t = cfg.m_elems, cfg.n_t
        assert np.all(ch.h_bi[:m, n_t:] == 0)
        assert np.all(ch.h_bi[m:, :n_t] == 0)

    def test_same_seed_bit_identical(self):
        cfg = make_config(seed=11)
        geom = build_geometry(cfg)
        a = synthesize_channels(cfg, geom, np.random.default_rng(11))
        b = synthesize_channels(cfg, geom, np.random.default_rng(11))
        assert np.array_equal(a.h_bi, b.h_bi)
        assert np.array_equal(a.h_iu, b.h_iu)
        assert np.array_equal(a.h_bu, b.h_bu)

    def test_beta_only_rescales_shared_draws(self):
        geom = build_geometry(make_config())
        a = synthesize_channels(make_config(beta_bi=0.1), geom,
                                np.random.default_rng(5))
        b = synthesize_channels(make_config(beta_bi=0.4), geom,
                                np.random.default_rng(5))
        m, n_t = 4, 4
        ratio = np.sqrt(0.9 / 0.6)
        np.testing.assert_allclose(a.h_bi[:m, :n_t], b.h_bi[:m, :n_t] * ratio)

    @pytest.mark.parametrize("beta", [0.1, 0.3, 0.5, 0.9])
    @pytest.mark.parametrize("link", ["bi", "iu", "bu"])
    def test_xpd_statistic_all_links(self, beta, link):
        cfg = make_config(beta_bi=beta, beta_iu=beta, beta_bu=beta, n_t=2,
                          m_elems=2)
        geom = build_geometry(cfg)
        rng = np.random.default_rng(42)
        samples = [synthesize_channels(cfg, geom, rng) for _ in range(10_000)]
        est = empirical_xpd(samples, link=link)
        assert est == pytest.approx((1 - beta) / beta, rel=0.05)


class TestEmpiricalXpd:
    def _samples(self, beta, n=50):
        cfg = make_config(beta_bi=beta)
        geom = build_geometry(cfg)
        rng = np.random.default_rng(1)
        return [synthesize_channels(cfg, geom, rng) for _ in range(n)]

    def test_low_leakage_near_nine(self):
        assert empirical_xpd(self._samples(0.1, 400)) == pytest.approx(9.0,
                                                                       rel=0.2)

    def test_full_leakage_near_zero(self):
        assert empirical_xpd(self._samples(1.0)) == pytest.approx(0.0,
                                                                  abs=1e-12)

    def test_zero_beta_returns_infinity(self):
        assert empirical_xpd(self._samples(0.0)) == float("inf")

    def test_inconsistent_zero_cross_energy_raises(self):
        samples = self._samples(0.0)
        with pytest.raises(ValueError):
            empirical_xpd(samples, link="bi", beta=0.2)

    def test_moderate_beta_matches_ratio(self):
        cfg = make_config(beta_bi=0.3, n_t=2, m_elems=2)
        geom = build_geometry(cfg)
        rng = np.random.default_rng(9)
        samples = [synthesize_channels(cfg, geom, rng) for _ in range(10_000)]
        assert empirical_xpd(samples) == pytest.approx(7.0 / 3.0, rel=0.05)

    def test_empty_sample_list_rejected(self):
        with pytest.raises(ValueError):
            empirical_xpd([])
