"""Tests for closed-form AoI analysis."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from leoage.lib import analysis
from leoage.lib.models import NetworkConfig, UnstableNetworkError, UnsupportedConfigError
from leoage.lib.network import derived_rates, dumbbell_scenario, line_scenario, stability_check
from leoage.lib.phasetype import matrix_cdf


def mm1(lam=0.5, mu=1.0, eps=0.0) -> NetworkConfig:
    return NetworkConfig(k_links=1, lam=lam, theta=[0.0], psi=[0.0], mu=[mu], eps=[eps])


@st.composite
def stable_configs(draw, max_links=3):
    """Small error-free paths with rates <= 1 and well-separated response rates."""
    k = draw(st.integers(min_value=1, max_value=max_links))
    mu = draw(st.lists(st.sampled_from([0.5, 0.6, 0.8, 1.0]), min_size=k, max_size=k))
    theta = draw(st.lists(st.sampled_from([0.0, 0.05, 0.1]), min_size=k, max_size=k))
    lam = draw(st.sampled_from([0.05, 0.1, 0.2]))
    config = NetworkConfig(k_links=k, lam=lam, theta=theta, psi=[0.0] * k, mu=mu, eps=[0.0] * k)
    assume(not stability_check(derived_rates(config)))
    return config


class TestMeanNetworkTime:
    """Tests for mean_network_time function."""

    def test_mm1(self):
        assert analysis.mean_network_time(derived_rates(mm1())) == pytest.approx(2.0)

    def test_two_link_line(self):
        derived = derived_rates(line_scenario(2, 0.4, eps=0.0))
        assert analysis.mean_network_time(derived) == pytest.approx(3.2738, abs=1e-4)

    def test_unstable(self):
        with pytest.raises(UnstableNetworkError) as exc_info:
            analysis.mean_network_time(derived_rates(mm1(lam=1.0)))
        assert exc_info.value.nodes == [1]


class TestApproximation:
    """Tests for aoi_approx function."""

    def test_error_free_mm1(self):
        assert analysis.aoi_approx(mm1()) == pytest.approx(4.0)

    def test_erasure_mm1(self):
        """With eps=0.1 the queue still sees the full source rate (alpha=0.5)."""
        assert analysis.aoi_approx(mm1(eps=0.1)) == pytest.approx(4.4691, abs=1e-4)

    def test_overestimates_mm1(self):
        assert analysis.aoi_approx(mm1()) > analysis.mm1_aoi_exact(0.5, 1.0)

    def test_error_free_reduction(self):
        config = line_scenario(6, 0.6, eps=0.0)
        derived = derived_rates(config)
        expected = sum(1 / a for a in derived.alpha) + 1 / config.lam
        assert analysis.aoi_approx(config) == pytest.approx(expected)


class TestEwyBounds:
    """Tests for the E[W Y] lower and upper bounds."""

    def test_upper_mm1(self):
        assert analysis.ewy_upper(derived_rates(mm1())) == pytest.approx(4.0)

    def test_upper_two_link_line(self):
        derived = derived_rates(line_scenario(2, 0.4, eps=0.0))
        assert analysis.ewy_upper(derived) == pytest.approx(20.461, abs=1e-3)

    def test_fcfs_lower_mm1(self):
        """E[Y (T - Y)^+] = lambda / (alpha (alpha + lambda)^2) for exponential T and Y."""
        config = mm1()
        assert analysis.ewy_lower_fcfs(config, derived_rates(config)) == pytest.approx(1.0)

    def test_fcfs_lower_mm1_quadrature(self):
        config = mm1()
        derived = derived_rates(config)
        assert analysis.ewy_lower_fcfs_quadrature(config, derived) == pytest.approx(1.0, abs=1e-6)

    def test_fcfs_lower_two_link_quadrature(self):
        config = line_scenario(2, 0.4, eps=0.0)
        derived = derived_rates(config)
        closed = analysis.ewy_lower_fcfs(config, derived)
        assert closed == pytest.approx(
            analysis.ewy_lower_fcfs_quadrature(config, derived), abs=1e-6
        )

    def test_fcfs_lower_repeated_service_rates(self):
        """Repeated ISL rates exercise the multiplicity terms of the prefix."""
        config = line_scenario(3, 0.5, eps=0.01)
        derived = derived_rates(config)
        closed = analysis.ewy_lower_fcfs(config, derived)
        assert closed == pytest.approx(
            analysis.ewy_lower_fcfs_quadrature(config, derived), abs=1e-6
        )

    def test_fcfs_lower_light_traffic(self):
        """The lambda * E[W Y] term vanishes as the source rate goes to zero."""
        config = mm1(lam=1e-3)
        assert 1e-3 * analysis.ewy_lower_fcfs(config, derived_rates(config)) < 1e-5

    def test_fcfs_ill_conditioned_falls_back(self):
        config = NetworkConfig(
            k_links=2, lam=0.1, theta=[0.0, 0.0], psi=[0.0, 0.0], mu=[1.0, 1.0 + 1e-8], eps=[0.0, 0.0]
        )
        derived = derived_rates(config)
        value = analysis.ewy_lower_fcfs(config, derived)
        assert value == analysis.ewy_lower_fcfs_matrix(config, derived)
        assert value == pytest.approx(analysis.ewy_lower_fcfs_quadrature(config, derived), abs=1e-6)

    def test_fcfs_lower_mm1_matrix(self):
        config = mm1()
        assert analysis.ewy_lower_fcfs_matrix(config, derived_rates(config)) == pytest.approx(1.0)

    @pytest.mark.parametrize("rho", [0.05, 0.5, 0.95])
    def test_fcfs_lower_ten_links(self, rho):
        """Light load makes the response rates nearly coincide; the matrix form takes over."""
        config = line_scenario(10, rho)
        derived = derived_rates(config)
        value = analysis.ewy_lower_fcfs(config, derived)
        assert 0.0 <= value <= analysis.ewy_upper(derived)
        assert value == pytest.approx(analysis.ewy_lower_fcfs_matrix(config, derived), rel=1e-6)

    def test_opf_lower_mm1(self):
        config = mm1()
        assert analysis.ewy_lower_opf(config, derived_rates(config)) == pytest.approx(1.0)

    def test_opf_lower_two_link_line(self):
        config = line_scenario(2, 0.4, eps=0.0)
        assert analysis.ewy_lower_opf(config, derived_rates(config)) == pytest.approx(
            0.6973, abs=1e-4
        )

    @settings(max_examples=50, deadline=None)
    @given(config=stable_configs())
    def test_closed_form_matches_matrix_form(self, config):
        derived = derived_rates(config)
        assert analysis.ewy_lower_fcfs(config, derived) == pytest.approx(
            analysis.ewy_lower_fcfs_matrix(config, derived), rel=1e-8, abs=1e-12
        )

    @settings(max_examples=10, deadline=None)
    @given(config=stable_configs(max_links=2))
    def test_short_paths_match_quadrature(self, config):
        derived = derived_rates(config)
        assert analysis.ewy_lower_fcfs(config, derived) == pytest.approx(
            analysis.ewy_lower_fcfs_quadrature(config, derived), rel=1e-6, abs=1e-6
        )

    @pytest.mark.slow
    @settings(max_examples=20, deadline=None)
    @given(config=stable_configs(max_links=4))
    def test_closed_form_matches_quadrature(self, config):
        derived = derived_rates(config)
        assert analysis.ewy_lower_fcfs(config, derived) == pytest.approx(
            analysis.ewy_lower_fcfs_quadrature(config, derived), rel=1e-6, abs=1e-6
        )

    @settings(max_examples=30, deadline=None)
    @given(config=stable_configs())
    def test_bound_ordering(self, config):
        derived = derived_rates(config)
        upper = analysis.ewy_upper(derived)
        assert analysis.ewy_lower_fcfs(config, derived) <= upper
        assert analysis.ewy_lower_opf(config, derived) <= upper


class TestAoIBounds:
    """Tests for aoi_bounds and aoi_bounds_all functions."""

    def test_mm1_fcfs(self):
        bounds = analysis.aoi_bounds(mm1(), "FCFS")
        assert bounds.upper == pytest.approx(5.0)
        assert bounds.lower <= 3.5 + 1e-9 <= bounds.upper + 1e-9
        assert bounds.approx == pytest.approx(4.0)
        assert bounds.policy == "FCFS"

    def test_all_policies(self):
        bounds = analysis.aoi_bounds_all(line_scenario(2, 0.4))
        assert set(bounds) == {"FCFS", "OPF", "HAF"}
        assert bounds["OPF"].lower == bounds["HAF"].lower
        assert bounds["FCFS"].upper == bounds["OPF"].upper

    @pytest.mark.parametrize("rho", [0.05, 0.3, 0.5, 0.7, 0.95])
    @pytest.mark.parametrize("policy", ["FCFS", "OPF", "HAF"])
    def test_lower_below_upper_on_line(self, rho, policy):
        bounds = analysis.aoi_bounds(line_scenario(10, rho), policy)
        assert bounds.lower <= bounds.upper

    def test_dumbbell(self):
        bounds = analysis.aoi_bounds(dumbbell_scenario(6, 0.7), "HAF")
        assert 0 < bounds.lower <= bounds.upper

    def test_unknown_policy(self):
        with pytest.raises(ValueError, match="Unknown policy"):
            analysis.aoi_bounds(mm1(), "LCFS")

    def test_unstable(self):
        with pytest.raises(UnstableNetworkError):
            analysis.aoi_bounds(line_scenario(2, 1.1), "FCFS")


class TestNetworkAoIBounds:
    """Tests for network_aoi_bounds function."""

    @pytest.mark.parametrize("policy", ["FCFS", "OPF", "HAF"])
    def test_source_average(self, policy):
        configs = {1: line_scenario(2, 0.4), 2: line_scenario(3, 0.5), 3: mm1()}
        per_source = [analysis.aoi_bounds(configs[s], policy) for s in (1, 2, 3)]
        bounds = analysis.network_aoi_bounds(configs, policy)

        assert bounds.lower == pytest.approx(np.mean([b.lower for b in per_source]))
        assert bounds.upper == pytest.approx(np.mean([b.upper for b in per_source]))
        assert bounds.approx == pytest.approx(np.mean([b.approx for b in per_source]))
        assert bounds.lower <= bounds.upper
        assert bounds.policy == policy

    def test_single_source(self):
        bounds = analysis.network_aoi_bounds({1: mm1()}, "FCFS")
        assert bounds == analysis.aoi_bounds(mm1(), "FCFS")

    def test_empty(self):
        with pytest.raises(ValueError, match="at least one source"):
            analysis.network_aoi_bounds({}, "HAF")

    def test_unstable_source(self):
        with pytest.raises(UnstableNetworkError):
            analysis.network_aoi_bounds({1: mm1(), 2: mm1(lam=1.0)}, "OPF")


class TestZeroSourceRate:
    """A silent tagged source has finite delay but unbounded age."""

    def test_mean_network_time_defined(self):
        assert analysis.mean_network_time(derived_rates(mm1(lam=0.0))) == pytest.approx(1.0)

    def test_approximation(self):
        with pytest.raises(UnsupportedConfigError, match="source rate is zero"):
            analysis.aoi_approx(mm1(lam=0.0))

    def test_ewy_upper(self):
        with pytest.raises(UnsupportedConfigError, match="source rate is zero"):
            analysis.ewy_upper(derived_rates(mm1(lam=0.0)))

    @pytest.mark.parametrize("policy", ["FCFS", "OPF", "HAF"])
    def test_bounds(self, policy):
        with pytest.raises(UnsupportedConfigError, match="source rate is zero"):
            analysis.aoi_bounds(mm1(lam=0.0), policy)

    def test_paoi_tail_bound(self):
        with pytest.raises(UnsupportedConfigError, match="source rate is zero"):
            analysis.paoi_tail_bound(mm1(lam=0.0), 1.0)


class TestPaoiTailBound:
    """Tests for paoi_tail_bound function."""

    def test_at_zero(self):
        assert analysis.paoi_tail_bound(mm1(), 0.0) == pytest.approx(1.0)

    def test_stage_rates(self):
        assert analysis.paoi_rates(mm1()) == pytest.approx([0.5, 1.0, 0.5])

    def test_matches_matrix_oracle(self):
        value = analysis.paoi_tail_bound(mm1(), 10.0)
        assert value == pytest.approx(1.0 - matrix_cdf([0.5, 1.0, 0.5], 10.0), abs=1e-8)

    def test_monotone_and_vanishing(self):
        taus = np.linspace(0.0, 400.0, 200)
        values = analysis.paoi_tail_bound(line_scenario(6, 0.8, eps=0.0), taus)
        assert np.all(np.diff(values) <= 1e-12)
        assert values[-1] < 1e-6

    def test_erasures_unsupported(self):
        with pytest.raises(UnsupportedConfigError):
            analysis.paoi_tail_bound(mm1(eps=0.01), 1.0)


class TestMM1Exact:
    """Tests for mm1_aoi_exact function."""

    def test_half_load(self):
        assert analysis.mm1_aoi_exact(0.5, 1.0) == pytest.approx(3.5)

    def test_light_load(self):
        assert analysis.mm1_aoi_exact(0.1, 1.0) == pytest.approx(11.0111, abs=1e-4)

    def test_diverges_as_interarrival(self):
        assert analysis.mm1_aoi_exact(1e-4, 1.0) == pytest.approx(1e4, rel=1e-3)

    def test_unstable(self):
        with pytest.raises(UnstableNetworkError):
            analysis.mm1_aoi_exact(1.0, 1.0)
