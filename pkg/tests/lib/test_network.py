"""Tests for network configuration models and derived rates."""

import math

import pytest
from pydantic import ValidationError

from leoage.lib.models import (
    AlohaUplink,
    AoIBounds,
    IdealUplink,
    MprUplink,
    NetworkConfig,
    UnstableNetworkError,
)
from leoage.lib.network import (
    cross_traffic_load,
    derived_rates,
    dumbbell_scenario,
    line_scenario,
    stability_check,
    success_probabilities,
)


def make_config(**overrides) -> NetworkConfig:
    values = {
        "k_links": 2,
        "lam": 0.16,
        "theta": [0.0, 0.16],
        "psi": [0.0, 0.0],
        "mu": [1.0, 0.8],
        "eps": [0.0, 0.0],
    }
    values.update(overrides)
    return NetworkConfig(**values)


class TestNetworkConfig:
    """Tests for NetworkConfig validation."""

    def test_lambda_alias(self):
        """The source rate can be given as 'lambda'."""
        config = NetworkConfig.model_validate(
            {"k_links": 1, "lambda": 0.5, "theta": [0], "psi": [0], "mu": [1], "eps": [0]}
        )
        assert config.lam == 0.5

    def test_length_mismatch_rejected(self):
        """Per-link vectors must have k_links entries."""
        with pytest.raises(ValidationError, match="theta has length 1"):
            make_config(theta=[0.0])

    def test_eps_one_rejected(self):
        """A link that always erases is not a valid configuration."""
        with pytest.raises(ValidationError):
            make_config(eps=[0.0, 1.0])

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            make_config(mu_dl=0.8)

    def test_entry_rate_uplinks(self):
        """Entry rate is thinned by the uplink collision probability."""
        assert make_config().entry_rate == 0.16
        assert make_config(uplink=MprUplink(p_c=0.25)).entry_rate == pytest.approx(0.12)
        aloha = make_config(lam=0.1, uplink=AlohaUplink(packet_duration=1.0))
        assert aloha.entry_rate == pytest.approx(0.1 * math.exp(-0.2))

    def test_error_free(self):
        assert make_config().error_free is True
        assert make_config(eps=[0.01, 0.0]).error_free is False


class TestUplinks:
    """Tests for uplink access models."""

    def test_ideal(self):
        assert IdealUplink().collision_probability(10.0) == 0.0

    def test_mpr_constant(self):
        assert MprUplink(p_c=0.2).collision_probability(0.01) == 0.2

    def test_aloha_vulnerability_window(self):
        """Pure ALOHA loses a packet when any other start lies within two durations."""
        uplink = AlohaUplink(packet_duration=2.0)
        assert uplink.collision_probability(0.1) == pytest.approx(1.0 - math.exp(-0.4))

    def test_mpr_rejects_certain_loss(self):
        with pytest.raises(ValidationError):
            MprUplink(p_c=1.0)


class TestCrossTrafficLoad:
    """Tests for cross_traffic_load function."""

    def test_no_cross_traffic(self):
        config = make_config(theta=[0.0, 0.0], eps=[0.3, 0.0])
        assert cross_traffic_load(config, 2) == 0.0

    def test_single_term_through_erasure(self):
        config = make_config(theta=[0.2, 0.0], eps=[0.1, 0.0])
        assert cross_traffic_load(config, 2) == pytest.approx(0.18)

    def test_offload_and_new_cross_traffic(self):
        config = make_config(theta=[0.2, 0.1], psi=[0.5, 0.0], eps=[0.1, 0.0])
        assert cross_traffic_load(config, 2) == pytest.approx(0.19)

    def test_first_node_has_empty_product(self):
        config = make_config(theta=[0.2, 0.1], psi=[0.5, 0.0], eps=[0.1, 0.0])
        assert cross_traffic_load(config, 1) == pytest.approx(0.2)

    @pytest.mark.parametrize("k", [0, 3])
    def test_index_out_of_range(self, k):
        with pytest.raises(IndexError):
            cross_traffic_load(make_config(), k)

    def test_monotone_in_theta_psi_eps(self):
        """More cross traffic raises the load; more offload or erasures lowers it."""
        base = make_config(theta=[0.2, 0.1], psi=[0.3, 0.0], eps=[0.1, 0.0])
        load = cross_traffic_load(base, 2)
        assert cross_traffic_load(make_config(theta=[0.25, 0.1], psi=[0.3, 0.0], eps=[0.1, 0.0]), 2) >= load
        assert cross_traffic_load(make_config(theta=[0.2, 0.1], psi=[0.4, 0.0], eps=[0.1, 0.0]), 2) <= load
        assert cross_traffic_load(make_config(theta=[0.2, 0.1], psi=[0.3, 0.0], eps=[0.2, 0.0]), 2) <= load


class TestDerivedRates:
    """Tests for derived_rates and stability_check functions."""

    def test_two_link_line(self):
        derived = derived_rates(make_config())
        assert derived.arrival_rate == pytest.approx([0.16, 0.32])
        assert derived.rho == pytest.approx([0.16, 0.4])
        assert derived.alpha == pytest.approx([0.84, 0.48])

    def test_mm1(self):
        config = NetworkConfig(k_links=1, lam=0.5, theta=[0], psi=[0], mu=[1], eps=[0])
        derived = derived_rates(config)
        assert derived.alpha == pytest.approx([0.5])
        assert derived.rho == pytest.approx([0.5])

    def test_tagged_packets_thinned_by_upstream_erasures(self):
        """Node j sees the source rate times the survival of links 1..j-1."""
        config = make_config(lam=0.5, theta=[0.0, 0.0], eps=[0.5, 0.0], mu=[1.0, 1.0])
        derived = derived_rates(config)
        assert derived.arrival_rate == pytest.approx([0.5, 0.25])
        assert derived.alpha == pytest.approx([0.5, 0.75])

    def test_success_probabilities(self):
        config = make_config(eps=[0.1, 0.2])
        p_s = success_probabilities(config)
        assert p_s == pytest.approx([1.0, 0.9, 0.72])
        assert derived_rates(config).p_s == p_s

    def test_stability_check(self):
        assert stability_check(derived_rates(make_config())) == []

    def test_boundary_counts_as_unstable(self):
        config = make_config(lam=0.5, theta=[0.0, 0.5], mu=[1.0, 1.0])
        assert stability_check(derived_rates(config)) == [2]

    def test_first_node_unstable(self):
        config = make_config(lam=1.2, theta=[0.0, 0.0], mu=[1.0, 4.0])
        assert stability_check(derived_rates(config)) == [1]

    def test_unstable_error_carries_nodes(self):
        error = UnstableNetworkError([2, 3])
        assert error.nodes == [2, 3]
        assert "[2, 3]" in str(error)
        assert isinstance(error, ValueError)


class TestScenarioBuilders:
    """Tests for line_scenario and dumbbell_scenario functions."""

    def test_line_two_links(self):
        config = line_scenario(2, 0.4, eps=0.0)
        assert config.lam == pytest.approx(0.16)
        assert config.theta == pytest.approx([0.0, 0.16])
        assert config.mu == [1.0, 0.8]

    def test_line_light_load(self):
        config = line_scenario(10, 0.05)
        assert config.lam == pytest.approx(0.004)
        assert 1.0 / config.lam == pytest.approx(250.0)

    @pytest.mark.parametrize("k", [1, 2, 6, 10])
    def test_line_downlink_load_equals_rho(self, k):
        """Without errors the downlink carries exactly rho * mu_dl."""
        config = line_scenario(k, 0.7, eps=0.0)
        derived = derived_rates(config)
        assert derived.arrival_rate[-1] == pytest.approx(0.7 * 0.8)
        assert derived.rho[-1] == pytest.approx(0.7)

    def test_line_cross_sources_share_uplink(self):
        config = line_scenario(3, 0.6, uplink=MprUplink(p_c=0.5))
        assert config.theta[1] == pytest.approx(config.lam * 0.5)

    @pytest.mark.parametrize("k,rho", [(0, 0.5), (2, 0.0), (2, -1.0)])
    def test_line_invalid(self, k, rho):
        with pytest.raises(ValueError):
            line_scenario(k, rho)

    @pytest.mark.parametrize("n,expected", [(2, 0.28), (6, 0.0933)])
    def test_dumbbell_rate(self, n, expected):
        config = dumbbell_scenario(n, 0.7)
        assert config.lam == pytest.approx(expected, abs=5e-4)

    def test_dumbbell_cross_traffic_only_at_bottleneck(self):
        config = dumbbell_scenario(6, 0.7, eps=0.0)
        assert config.k_links == 4
        assert config.theta[1] == pytest.approx(5 * config.lam)
        assert config.theta[0] == config.theta[2] == config.theta[3] == 0.0
        assert config.psi[1] == 1.0

    def test_dumbbell_cross_traffic_survives_first_link(self):
        config = dumbbell_scenario(3, 0.5, eps=0.1)
        assert config.theta[1] == pytest.approx(2 * config.lam * 0.9)

    def test_dumbbell_single_source(self):
        config = dumbbell_scenario(1, 0.5)
        assert config.theta == [0.0, 0.0, 0.0, 0.0]

    def test_dumbbell_invalid(self):
        with pytest.raises(ValueError):
            dumbbell_scenario(0, 0.5)


class TestAoIBounds:
    """Tests for AoIBounds model."""

    def test_order_enforced(self):
        with pytest.raises(ValidationError, match="exceeds upper bound"):
            AoIBounds(lower=5.0, upper=4.0, approx=4.5, policy="FCFS")

    def test_approx_not_asserted(self):
        bounds = AoIBounds(lower=3.0, upper=4.0, approx=10.0, policy="OPF")
        assert bounds.approx == 10.0
