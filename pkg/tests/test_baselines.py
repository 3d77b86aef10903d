"""Power-split analysis and comparator schemes on shared channel draws."""

import numpy as np
import pytest

from iosim import (
    ElementGainModel,
    GeometryLayout,
    PathLossModel,
    PowerSplitModel,
    ScenarioConfig,
    build_geometry,
    optimal_epsilon,
    optimize_cellular,
    optimize_dualpol_ris,
    optimize_power_domain,
    optimize_scheme,
    power_domain_rate,
    power_split_derivative,
    synthesize_channels,
)

LOG2_1P5 = 0.5849625007211562


def surface_heavy_config(**over):
    """Scenario where the surface path carries most of the link budget."""
    base = dict(
        n_t=2, m_elems=4, k_r=2, k_t=2,
        beta_bi=0.1, beta_iu=0.1, beta_bu=0.1,
        p_bs=1.0, sigma2=1e-12, n_bits=2, seed=0,
        gain_model=ElementGainModel(1.0, 1.0, 0.0),
        path_loss=PathLossModel(-30.0, 2.2, 2.8, 4.5),
        layout=GeometryLayout(
            bs_position=(0.0, 0.0, 5.0), ios_center=(30.0, 0.0, 2.0),
            element_spacing=0.1, user_offset=(0.0, 2.0, -0.5),
            user_radius=1.2, symmetric=True),
    )
    base.update(over)
    return ScenarioConfig(**base)


def random_model(rng, sides=("reflect", "reflect", "refract", "refract")):
    return PowerSplitModel(
        tau=rng.uniform(0, 5, len(sides)),
        chi=rng.uniform(0.1, 20, len(sides)),
        side_label=list(sides),
        epsilon=float(rng.uniform(0.1, 10)),
    )


class TestPowerDomainRate:
    def test_no_surface_path_is_flat_in_epsilon(self):
        model = PowerSplitModel(tau=[1.0, 2.0], chi=[0.0, 0.0],
                                side_label=["reflect", "refract"])
        vals = [power_domain_rate(model, epsilon=e)
                for e in (0.01, 1.0, 100.0)]
        assert vals[0] == vals[1] == vals[2]

    def test_single_reflect_user_closed_form(self):
        model = PowerSplitModel(tau=[0.0], chi=[1.0],
                                side_label=["reflect"], epsilon=1.0)
        assert power_domain_rate(model) == pytest.approx(LOG2_1P5, rel=1e-12)

    def test_matches_term_by_term(self):
        model = PowerSplitModel(tau=[0.5, 0.5], chi=[3.0, 3.0],
                                side_label=["reflect", "refract"],
                                epsilon=2.0)
        share = 2.0 / 3.0
        expected = np.log2(1 + 0.5 + share * 3.0) \
            + np.log2(1 + 0.5 + (1 - share) * 3.0)
        assert power_domain_rate(model) == pytest.approx(expected, rel=1e-12)

    def test_side_swap_inverts_epsilon(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            model = random_model(rng)
            swapped = PowerSplitModel(
                tau=model.tau, chi=model.chi,
                side_label=["refract" if s == "reflect" else "reflect"
                            for s in model.side_label],
                epsilon=model.epsilon)
            assert power_domain_rate(model, epsilon=2.5) == pytest.approx(
                power_domain_rate(swapped, epsilon=1 / 2.5), rel=1e-12)

    def test_rejects_bad_epsilon(self):
        model = PowerSplitModel(tau=[1.0], chi=[1.0],
                                side_label=["reflect"])
        with pytest.raises(ValueError):
            power_domain_rate(model, epsilon=0.0)


class TestPowerSplitDerivative:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            model = random_model(rng)
            eps = model.epsilon
            h = 1e-5 * eps
            fd = (power_domain_rate(model, epsilon=eps + h)
                  - power_domain_rate(model, epsilon=eps - h)) / (2 * h)
            analytic = power_split_derivative(model)
            assert analytic == pytest.approx(fd, rel=1e-6, abs=1e-12)

    def test_symmetric_model_stationary_at_one(self):
        model = PowerSplitModel(tau=[2.0, 2.0], chi=[5.0, 5.0],
                                side_label=["reflect", "refract"],
                                epsilon=1.0)
        assert power_split_derivative(model) == pytest.approx(0.0, abs=1e-15)

    def test_all_reflect_sign_consistent_with_fd(self):
        rng = np.random.default_rng(2)
        model = PowerSplitModel(tau=rng.uniform(0, 2, 3),
                                chi=rng.uniform(1, 5, 3),
                                side_label=["reflect"] * 3, epsilon=2.0)
        h = 1e-6
        fd = (power_domain_rate(model, epsilon=2.0 + h)
              - power_domain_rate(model, epsilon=2.0 - h)) / (2 * h)
        analytic = power_split_derivative(model)
        assert np.sign(analytic) == np.sign(fd)
        assert analytic == pytest.approx(fd, rel=1e-6)

    def test_zero_chi_zero_derivative(self):
        model = PowerSplitModel(tau=[1.0, 1.0], chi=[0.0, 0.0],
                                side_label=["reflect", "refract"])
        assert power_split_derivative(model) == 0.0


class TestOptimalEpsilon:
    def test_symmetric_optimum_is_one(self):
        model = PowerSplitModel(tau=[1.5, 1.5], chi=[4.0, 4.0],
                                side_label=["reflect", "refract"])
        assert optimal_epsilon(model) == pytest.approx(1.0, abs=1e-3)

    def test_asymmetric_direct_links_move_the_optimum(self):
        model = PowerSplitModel(tau=[50.0, 0.0], chi=[5.0, 5.0],
                                side_label=["reflect", "refract"])
        star = optimal_epsilon(model)
        assert abs(star - 1.0) > 1e-2
        # grid scan confirmation
        grid = np.logspace(-3, 3, 4001)
        rates = [power_domain_rate(model, epsilon=e) for e in grid]
        grid_star = grid[int(np.argmax(rates))]
        assert power_domain_rate(model, epsilon=star) >= \
            max(rates) - 1e-6
        assert np.log10(star) == pytest.approx(np.log10(grid_star),
                                               abs=2e-3)

    def test_flat_objective_returns_one_by_convention(self):
        model = PowerSplitModel(tau=[1.0, 2.0], chi=[0.0, 0.0],
                                side_label=["reflect", "refract"])
        assert optimal_epsilon(model) == 1.0


class TestSchemeRunners:
    def paired(self, cfg, schemes, trials, seed0=50, epsilon=None):
        rates = {s: [] for s in schemes}
        for t in range(trials):
            geom = build_geometry(cfg)
            ch = synthesize_channels(cfg, geom,
                                     np.random.default_rng(seed0 + t))
            for s in schemes:
                res = optimize_scheme(s, cfg, ch, epsilon=epsilon)
                rates[s].append(res.sum_rate)
        return {s: np.array(v) for s, v in rates.items()}

    def test_ris_equals_ios_without_refract_users(self):
        cfg = surface_heavy_config(k_r=4, k_t=0)
        geom = build_geometry(cfg)
        ch = synthesize_channels(cfg, geom, np.random.default_rng(3))
        _, _, rate_ris = optimize_dualpol_ris(cfg, ch)
        rate_ios = optimize_scheme("dualpol_ios", cfg, ch).sum_rate
        assert rate_ris == pytest.approx(rate_ios, rel=1e-6)

    def test_ris_zero_rate_without_reflect_users_or_direct(self):
        cfg = surface_heavy_config(k_r=0, k_t=4)
        geom = build_geometry(cfg)
        ch = synthesize_channels(cfg, geom, np.random.default_rng(4))
        ch.h_bu[:] = 0.0
        _, _, rate = optimize_dualpol_ris(cfg, ch)
        assert rate == pytest.approx(0.0, abs=1e-9)

    def test_cellular_zero_without_direct_links(self):
        cfg = surface_heavy_config()
        geom = build_geometry(cfg)
        ch = synthesize_channels(cfg, geom, np.random.default_rng(5))
        ch.h_bu[:] = 0.0
        _, rate = optimize_cellular(cfg, ch)
        assert rate == pytest.approx(0.0, abs=1e-9)

    def test_mean_scheme_ordering_on_paired_draws(self):
        cfg = surface_heavy_config(epsilon=1.0)
        rates = self.paired(cfg, ("dualpol_ios", "power_domain_ios",
                                  "dualpol_ris", "cellular"), trials=30)
        means = {s: v.mean() for s, v in rates.items()}
        assert means["dualpol_ios"] >= means["power_domain_ios"]
        assert means["power_domain_ios"] >= means["cellular"]
        assert means["dualpol_ios"] >= means["dualpol_ris"]
        assert means["dualpol_ris"] >= means["cellular"]

    def test_skewed_split_wastes_power_on_empty_side(self):
        cfg = surface_heavy_config(k_r=0, k_t=4)
        diffs = []
        for t in range(100):
            geom = build_geometry(cfg)
            ch = synthesize_channels(cfg, geom, np.random.default_rng(t))
            _, _, pd = optimize_power_domain(cfg, ch, epsilon=10.0)
            ios = optimize_scheme("dualpol_ios", cfg, ch).sum_rate
            diffs.append(ios - pd)
        assert np.mean(diffs) > 0.0

    def test_reflect_heavy_limit_approaches_ris(self):
        # at epsilon -> inf all element power reflects; without leakage the
        # tied per-element phases cost nothing against the free-phase RIS
        cfg = surface_heavy_config(k_r=4, k_t=0, beta_bi=0.0, beta_iu=0.0,
                                   beta_bu=0.0, sigma2=1e-10)
        gaps = []
        for t in range(20):
            geom = build_geometry(cfg)
            ch = synthesize_channels(cfg, geom, np.random.default_rng(t))
            _, _, pd = optimize_power_domain(cfg, ch, epsilon=1e6)
            _, _, ris = optimize_dualpol_ris(cfg, ch)
            gaps.append(abs(pd - ris) / ris)
        assert np.mean(gaps) <= 0.05

    def test_coupled_phase_flag_loses_on_average(self):
        cfg = surface_heavy_config()
        geom = build_geometry(cfg)
        diffs = []
        for t in range(12):
            ch = synthesize_channels(cfg, geom, np.random.default_rng(60 + t))
            _, _, indep = optimize_power_domain(cfg, ch, epsilon=1.0)
            cfg_c = cfg.replace(power_domain_coupled_phases=True)
            _, _, coupled = optimize_power_domain(cfg_c, ch, epsilon=1.0)
            diffs.append(indep - coupled)
        assert np.mean(diffs) > 0.0
